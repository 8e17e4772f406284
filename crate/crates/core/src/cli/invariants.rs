//! The `invariants` command: one-body and two-body invariant summaries.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::deformation::{deformation_invariants, green_family};
use crate::error::Result;
use crate::mutual::{affine_invariants, mutual_displacement, mutual_metric_invariants, mutual_tensors};
use crate::spaces::{LinMap, MetricTensor, Variance};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct InvariantSummary {
    pub K: Vec<f64>,
    pub M: Option<Vec<f64>>,
    pub Gamma: Option<Vec<Vec<f64>>>,
    pub Sigma_disp: Option<Vec<Vec<f64>>>,
    pub E_norm: f64,
}

/// What to summarize.
pub enum Subject {
    Single(DMatrix<f64>),
    Pair(DMatrix<f64>, DMatrix<f64>),
}

/// Parses a square matrix written as JSON rows, e.g. `[[1,0],[0,1]]`.
pub fn parse_matrix(text: &str) -> std::result::Result<DMatrix<f64>, String> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(text).map_err(|e| format!("cannot parse matrix `{text}`: {e}"))?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix `{text}` is not square"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(format!("matrix `{text}` has non-finite entries"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn mixed(m: &DMatrix<f64>) -> Result<LinMap> {
    LinMap::new(m.clone(), Variance::MIXED_VU)
}

/// For a single `phi`: deformation invariants and the Lagrange tensor norm.
/// For a pair `(psi, phi)`: mutual metric invariants, affine invariants,
/// both displacements and the norm of `(G[psi, phi] - eta) / 2`.
pub fn summarize(subject: &Subject, eta: &MetricTensor, g: &MetricTensor) -> Result<InvariantSummary> {
    match subject {
        Subject::Single(phi) => {
            let phi = mixed(phi)?;
            let n = phi.dim();
            let family = green_family(&phi, eta, g)?;
            Ok(InvariantSummary {
                K: deformation_invariants(&phi, eta, g, n)?,
                M: None,
                Gamma: None,
                Sigma_disp: None,
                E_norm: family.e.matrix().norm(),
            })
        }
        Subject::Pair(psi, phi) => {
            let (psi, phi) = (mixed(psi)?, mixed(phi)?);
            let n = psi.dim();
            let disp = mutual_displacement(&psi, &phi)?;
            let tensors = mutual_tensors(&psi, &phi, eta, g)?;
            let strain = (tensors.g_mut.matrix() - eta.components()) * 0.5;
            Ok(InvariantSummary {
                K: mutual_metric_invariants(&psi, &phi, eta, g, n)?,
                M: Some(affine_invariants(&psi, &phi, n)?),
                Gamma: Some(rows(disp.gamma.matrix())),
                Sigma_disp: Some(rows(disp.sigma_disp.matrix())),
                E_norm: strain.norm(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_examples() {
        let id = MetricTensor::identity(2);
        let i2 = DMatrix::identity(2, 2);
        let out = summarize(&Subject::Pair(i2.clone(), i2.clone()), &id, &id).unwrap();
        assert_eq!(out.M.unwrap(), vec![2.0, 2.0]);
        assert_eq!(out.K, vec![2.0, 2.0]);
        assert_eq!(out.E_norm, 0.0);
        let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let out = summarize(&Subject::Pair(i2, d), &id, &id).unwrap();
        assert_eq!(out.M.unwrap(), vec![5.0, 13.0]);
        assert_eq!(out.Gamma.unwrap(), vec![vec![2.0, 0.0], vec![0.0, 3.0]]);
    }

    #[test]
    fn single_body_summary() {
        let id = MetricTensor::identity(2);
        let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let out = summarize(&Subject::Single(d), &id, &id).unwrap();
        assert_eq!(out.K, vec![13.0, 97.0]);
        assert!((out.E_norm - (1.5f64.powi(2) + 16.0).sqrt()).abs() < 1e-15);
        assert!(out.M.is_none());
    }

    #[test]
    fn matrix_parsing() {
        assert_eq!(parse_matrix("[[1,2],[3,4]]").unwrap()[(1, 0)], 3.0);
        assert!(parse_matrix("[[1,2],[3]]").is_err());
        assert!(parse_matrix("[[1,2]").is_err());
    }
}
