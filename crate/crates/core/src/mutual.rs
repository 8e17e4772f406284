//! Two-body objects: mutual displacements, mutual Green/Cauchy tensors and
//! the affine (`M_a`) and metric (`K_a`) invariants of a pair.

use nalgebra::DMatrix;

use crate::deformation::{check_count, power_traces};
use crate::error::{Error, Result};
use crate::spaces::{checked_inverse, expect_variance, logm, LinMap, MetricTensor, Variance};

/// Tolerance for the agreement of the `Gamma` and `Sigma` traces, relative
/// to `(|psi^-1| |phi|)^a` in the Frobenius norm.
pub const TRACE_AGREEMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MutualDisplacement {
    /// `Gamma[psi, phi] = psi^-1 phi`.
    pub gamma: LinMap,
    /// `Sigma[psi, phi] = phi psi^-1`.
    pub sigma_disp: LinMap,
    /// `Gamma - Id`.
    pub gamma_small: LinMap,
    /// `Sigma - Id`.
    pub sigma_small: LinMap,
    /// Principal `log Gamma`, absent when it does not exist.
    pub alpha: Option<LinMap>,
    /// Principal `log Sigma`, absent when it does not exist.
    pub beta: Option<LinMap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutualCauchy {
    /// `C_ij = eta_AB phi^-1 A_i psi^-1 B_j`.
    pub c_mut: LinMap,
    /// `g^ik C_kj`.
    pub c_mut_hat: LinMap,
    /// `g^ik C_kl g^lj`.
    pub c_mut_tilde: LinMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutualTensors {
    /// `G_AB = g_ij psi^i_A phi^j_B`; not symmetric in general.
    pub g_mut: LinMap,
    /// `eta^AC G_CB`.
    pub g_mut_hat: LinMap,
    /// `eta^AC G_CD eta^DB`.
    pub g_mut_tilde: LinMap,
    /// `J^ij = psi^i_A phi^j_B eta^AB`.
    pub j_mut: LinMap,
    /// Cauchy-side tensors; absent when `psi` or `phi` is singular.
    pub cauchy: Option<MutualCauchy>,
}

fn check_pair(psi: &LinMap, phi: &LinMap) -> Result<()> {
    expect_variance(psi, Variance::MIXED_VU)?;
    expect_variance(phi, Variance::MIXED_VU)?;
    if psi.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: phi.dim(),
        });
    }
    Ok(())
}

fn check_metrics(n: usize, eta: &MetricTensor, g: &MetricTensor) -> Result<()> {
    eta.check_dim(n)?;
    g.check_dim(n)
}

pub(crate) fn mutual_green_hat_matrix(
    psi: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> DMatrix<f64> {
    eta.inverse() * psi.transpose() * g.components() * phi
}

pub fn mutual_displacement(psi: &LinMap, phi: &LinMap) -> Result<MutualDisplacement> {
    check_pair(psi, phi)?;
    let n = psi.dim();
    let psi_inv = checked_inverse(psi.matrix())?;
    checked_inverse(phi.matrix())?;
    let gamma = &psi_inv * phi.matrix();
    let sigma = phi.matrix() * &psi_inv;
    let id = DMatrix::<f64>::identity(n, n);
    let alpha = logm(&gamma).ok();
    let beta = logm(&sigma).ok();
    Ok(MutualDisplacement {
        gamma_small: LinMap::from_parts(&gamma - &id, Variance::ENDO_U),
        sigma_small: LinMap::from_parts(&sigma - &id, Variance::ENDO_V),
        gamma: LinMap::from_parts(gamma, Variance::ENDO_U),
        sigma_disp: LinMap::from_parts(sigma, Variance::ENDO_V),
        alpha: alpha.map(|m| LinMap::from_parts(m, Variance::ENDO_U)),
        beta: beta.map(|m| LinMap::from_parts(m, Variance::ENDO_V)),
    })
}

pub(crate) fn mutual_cauchy_matrix(
    psi: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    eta: &MetricTensor,
) -> Result<DMatrix<f64>> {
    let psi_inv = checked_inverse(psi)?;
    let phi_inv = checked_inverse(phi)?;
    Ok(phi_inv.transpose() * eta.components() * psi_inv)
}

pub fn mutual_tensors(
    psi: &LinMap,
    phi: &LinMap,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<MutualTensors> {
    check_pair(psi, phi)?;
    check_metrics(psi.dim(), eta, g)?;
    let (a, b) = (psi.matrix(), phi.matrix());
    let g_mut = a.transpose() * g.components() * b;
    let g_mut_hat = eta.inverse() * &g_mut;
    let g_mut_tilde = &g_mut_hat * eta.inverse();
    let j_mut = a * eta.inverse() * b.transpose();
    let cauchy = match mutual_cauchy_matrix(a, b, eta) {
        Ok(c) => {
            let c_hat = g.inverse() * &c;
            let c_tilde = &c_hat * g.inverse();
            Some(MutualCauchy {
                c_mut: LinMap::from_parts(c, Variance::COVARIANT_VV),
                c_mut_hat: LinMap::from_parts(c_hat, Variance::ENDO_V),
                c_mut_tilde: LinMap::from_parts(c_tilde, Variance::CONTRAVARIANT_VV),
            })
        }
        Err(Error::SingularMap) => None,
        Err(e) => return Err(e),
    };
    Ok(MutualTensors {
        g_mut: LinMap::from_parts(g_mut, Variance::COVARIANT_UU),
        g_mut_hat: LinMap::from_parts(g_mut_hat, Variance::ENDO_U),
        g_mut_tilde: LinMap::from_parts(g_mut_tilde, Variance::CONTRAVARIANT_UU),
        j_mut: LinMap::from_parts(j_mut, Variance::CONTRAVARIANT_VV),
        cauchy,
    })
}


pub(crate) fn affine_invariants_matrix(
    psi: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    count: usize,
) -> Result<Vec<f64>> {
    let psi_inv = checked_inverse(psi)?;
    checked_inverse(phi)?;
    let lu = psi.clone().full_piv_lu();
    let gamma = lu.solve(phi).ok_or(Error::SingularMap)?;
    let sigma = psi.transpose().full_piv_lu().solve(&phi.transpose()).ok_or(Error::SingularMap)?.transpose();
    let from_gamma = power_traces(&gamma, count);
    let from_sigma = power_traces(&sigma, count);
    let base = psi_inv.norm() * phi.norm();
    for (a, (x, y)) in from_gamma.iter().zip(&from_sigma).enumerate() {
        let scale = base.powi(a as i32 + 1).max(x.abs()).max(1.0);
        if (x - y).abs() / scale > TRACE_AGREEMENT_TOL {
            return Err(Error::TraceMismatch {
                what: "Gamma vs Sigma powers",
                left: *x,
                right: *y,
            });
        }
    }
    Ok(from_gamma)
}

/// `M_a = Tr(Gamma[psi, phi]^a)`, cross-checked against `Tr(Sigma[psi, phi]^a)`.
pub fn affine_invariants(psi: &LinMap, phi: &LinMap, count: usize) -> Result<Vec<f64>> {
    check_pair(psi, phi)?;
    check_count(count, psi.dim())?;
    affine_invariants_matrix(psi.matrix(), phi.matrix(), count)
}

/// `K_a = Tr(G_hat[psi, phi]^a)`; needs no inverses.
pub fn mutual_metric_invariants(
    psi: &LinMap,
    phi: &LinMap,
    eta: &MetricTensor,
    g: &MetricTensor,
    count: usize,
) -> Result<Vec<f64>> {
    check_pair(psi, phi)?;
    check_metrics(psi.dim(), eta, g)?;
    check_count(count, psi.dim())?;
    let g_hat = mutual_green_hat_matrix(psi.matrix(), phi.matrix(), eta, g);
    Ok(power_traces(&g_hat, count))
}

/// The same invariants read from the Cauchy side, `Tr(C_hat[psi, phi]^-a)`.
pub fn mutual_metric_invariants_via_cauchy(
    psi: &LinMap,
    phi: &LinMap,
    eta: &MetricTensor,
    g: &MetricTensor,
    count: usize,
) -> Result<Vec<f64>> {
    check_pair(psi, phi)?;
    check_metrics(psi.dim(), eta, g)?;
    check_count(count, psi.dim())?;
    let c_hat = g.inverse() * mutual_cauchy_matrix(psi.matrix(), phi.matrix(), eta)?;
    Ok(power_traces(&checked_inverse(&c_hat)?, count))
}
