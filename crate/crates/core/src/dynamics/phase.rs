//! Canonical phase-space points `(x, phi; p, P)` and the momentum maps built
//! from them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kinematics::Configuration;
use crate::spaces::{is_singular_matrix, LinMap, MetricTensor, Variance};

/// Phase-space point of one body. `big_p[(A, i)]` is `P^A_i`, the momentum
/// conjugate to `phi[(i, A)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub x: DVector<f64>,
    pub phi: DMatrix<f64>,
    pub p: DVector<f64>,
    pub big_p: DMatrix<f64>,
}

impl PhaseState {
    pub fn new(x: DVector<f64>, phi: DMatrix<f64>, p: DVector<f64>, big_p: DMatrix<f64>) -> Result<Self> {
        let n = x.len();
        for (r, c) in [phi.shape(), big_p.shape(), (p.len(), n)] {
            if r != n || c != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: if r != n { r } else { c },
                });
            }
        }
        if is_singular_matrix(&phi) {
            return Err(Error::SingularMap);
        }
        Ok(PhaseState { x, phi, p, big_p })
    }

    /// Body at rest at the given configuration.
    pub fn at_rest(config: &Configuration) -> Self {
        let n = config.dim();
        PhaseState {
            x: config.x.clone(),
            phi: config.phi.matrix().clone(),
            p: DVector::zeros(n),
            big_p: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn config(&self) -> Result<Configuration> {
        Configuration::new(self.x.clone(), self.phi_map())
    }

    pub fn phi_map(&self) -> LinMap {
        LinMap::from_parts(self.phi.clone(), Variance::MIXED_VU)
    }

    pub fn big_p_map(&self) -> LinMap {
        LinMap::from_parts(self.big_p.clone(), Variance::MIXED_UV)
    }

    /// Number of canonical coordinates `q` (half the phase-space dimension).
    pub fn coordinate_count(&self) -> usize {
        let n = self.dim();
        n + n * n
    }

    /// `[x, phi row-major, p, P^T row-major]`.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        let n = self.dim();
        out.extend(self.x.iter());
        for i in 0..n {
            for a in 0..n {
                out.push(self.phi[(i, a)]);
            }
        }
        out.extend(self.p.iter());
        for i in 0..n {
            for a in 0..n {
                out.push(self.big_p[(a, i)]);
            }
        }
    }

    /// Inverse of [`PhaseState::flatten_into`]; no invertibility check.
    pub fn from_flat(flat: &[f64], n: usize) -> Self {
        let m = n + n * n;
        PhaseState {
            x: DVector::from_column_slice(&flat[..n]),
            phi: DMatrix::from_fn(n, n, |i, a| flat[n + i * n + a]),
            p: DVector::from_column_slice(&flat[m..m + n]),
            big_p: DMatrix::from_fn(n, n, |a, i| flat[m + n + i * n + a]),
        }
    }
}

/// Partial derivatives of a scalar with respect to one body's canonical
/// coordinates, laid out like the coordinates themselves: `dphi[(i, A)]` is
/// the derivative by `phi^i_A`, `dbig_p[(A, i)]` by `P^A_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGradient {
    pub dx: DVector<f64>,
    pub dphi: DMatrix<f64>,
    pub dp: DVector<f64>,
    pub dbig_p: DMatrix<f64>,
}

impl PhaseGradient {
    pub fn zeros(n: usize) -> Self {
        PhaseGradient {
            dx: DVector::zeros(n),
            dphi: DMatrix::zeros(n, n),
            dp: DVector::zeros(n),
            dbig_p: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.dx.len()
    }

    /// Same layout as [`PhaseState::flatten_into`].
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        PhaseState {
            x: self.dx.clone(),
            phi: self.dphi.clone(),
            p: self.dp.clone(),
            big_p: self.dbig_p.clone(),
        }
        .flatten_into(out)
    }

    pub fn from_flat(flat: &[f64], n: usize) -> Self {
        let s = PhaseState::from_flat(flat, n);
        PhaseGradient {
            dx: s.x,
            dphi: s.phi,
            dp: s.p,
            dbig_p: s.big_p,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.dx
            .amax()
            .max(self.dphi.amax())
            .max(self.dp.amax())
            .max(self.dbig_p.amax())
    }
}

pub fn flatten_states(states: &[PhaseState]) -> DVector<f64> {
    let mut out = Vec::new();
    for s in states {
        s.flatten_into(&mut out);
    }
    DVector::from_vec(out)
}

pub fn unflatten_states(flat: &DVector<f64>, n: usize) -> Vec<PhaseState> {
    let stride = 2 * (n + n * n);
    flat.as_slice()
        .chunks(stride)
        .map(|c| PhaseState::from_flat(c, n))
        .collect()
}

/// Affine spin, its co-moving form and the related momentum maps of one body.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumMaps {
    /// `Sigma = phi P`.
    pub spin: LinMap,
    /// `Sigma_hat = P phi`.
    pub spin_hat: LinMap,
    /// `p_hat_A = p_i phi^i_A`.
    pub p_hat: DVector<f64>,
    /// `Lambda^i_j = (x - o)^i p_j`.
    pub lambda: LinMap,
    /// `Lambda + Sigma`.
    pub j_total: LinMap,
    /// `Sigma - g^-1 Sigma^T g`.
    pub s: LinMap,
    /// `Sigma_hat - eta^-1 Sigma_hat^T eta`.
    pub vorticity: LinMap,
}

pub(crate) fn metric_skew(x: &DMatrix<f64>, metric: &MetricTensor) -> DMatrix<f64> {
    x - metric.inverse() * x.transpose() * metric.components()
}

pub fn momentum_maps(
    state: &PhaseState,
    eta: &MetricTensor,
    g: &MetricTensor,
    origin: &DVector<f64>,
) -> Result<MomentumMaps> {
    let n = state.dim();
    eta.check_dim(n)?;
    g.check_dim(n)?;
    if origin.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: origin.len(),
        });
    }
    let spin = &state.phi * &state.big_p;
    let spin_hat = &state.big_p * &state.phi;
    let lambda = (&state.x - origin) * state.p.transpose();
    let j_total = &lambda + &spin;
    let s = metric_skew(&spin, g);
    let vorticity = metric_skew(&spin_hat, eta);
    let endo_v = |m| LinMap::from_parts(m, Variance::ENDO_V);
    Ok(MomentumMaps {
        p_hat: state.phi.transpose() * &state.p,
        spin_hat: LinMap::from_parts(spin_hat, Variance::ENDO_U),
        vorticity: LinMap::from_parts(vorticity, Variance::ENDO_U),
        spin: endo_v(spin),
        lambda: endo_v(lambda),
        j_total: endo_v(j_total),
        s: endo_v(s),
    })
}
