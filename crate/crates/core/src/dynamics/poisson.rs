//! Canonical Poisson bracket on one body's phase space and the basic
//! generator functions.

use nalgebra::DMatrix;

use crate::spaces::checked_inverse;

use super::hamiltonian::fd_step;
use super::phase::{PhaseGradient, PhaseState};

/// A scalar function on one body's phase space.
pub trait PhaseFunction {
    fn value(&self, state: &PhaseState) -> f64;

    /// Central differences over all `2(n + n^2)` coordinates unless overridden.
    fn gradient(&self, state: &PhaseState) -> PhaseGradient {
        let n = state.dim();
        let mut flat = Vec::new();
        state.flatten_into(&mut flat);
        let mut grad = vec![0.0; flat.len()];
        for mu in 0..flat.len() {
            let q = flat[mu];
            let h = fd_step(q);
            flat[mu] = q + h;
            let up = self.value(&PhaseState::from_flat(&flat, n));
            flat[mu] = q - h;
            let down = self.value(&PhaseState::from_flat(&flat, n));
            flat[mu] = q;
            grad[mu] = (up - down) / (2.0 * h);
        }
        PhaseGradient::from_flat(&grad, n)
    }
}

/// `{F, G} = dF/dq dG/dp - dF/dp dG/dq`, pairing `x^i` with `p_i` and
/// `phi^i_A` with `P^A_i`.
pub fn bracket_of_gradients(df: &PhaseGradient, dg: &PhaseGradient) -> f64 {
    let mut sum = df.dx.dot(&dg.dp) - df.dp.dot(&dg.dx);
    let n = df.dim();
    for i in 0..n {
        for a in 0..n {
            sum += df.dphi[(i, a)] * dg.dbig_p[(a, i)] - df.dbig_p[(a, i)] * dg.dphi[(i, a)];
        }
    }
    sum
}

pub fn poisson_bracket<F, G>(f: &F, g: &G, state: &PhaseState) -> f64
where
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    bracket_of_gradients(&f.gradient(state), &g.gradient(state))
}

/// Component functions with analytic gradients. Indices are zero-based;
/// `Lambda` and `JTotal` are taken about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    X(usize),
    Momentum(usize),
    Phi(usize, usize),
    /// `P^A_i` as `BigP(A, i)`.
    BigP(usize, usize),
    /// `Sigma^i_j`.
    Spin(usize, usize),
    /// `Sigma_hat^A_B`.
    SpinHat(usize, usize),
    /// `p_hat_A`.
    PHat(usize),
    /// `Lambda^i_j = x^i p_j`.
    Lambda(usize, usize),
    /// `Lambda^i_j + Sigma^i_j`.
    JTotal(usize, usize),
    DetPhi,
    /// `x^i phi^j_A`.
    XPhi { i: usize, j: usize, a: usize },
}

impl PhaseFunction for Generator {
    fn value(&self, s: &PhaseState) -> f64 {
        let n = s.dim();
        match *self {
            Generator::X(i) => s.x[i],
            Generator::Momentum(i) => s.p[i],
            Generator::Phi(i, a) => s.phi[(i, a)],
            Generator::BigP(a, i) => s.big_p[(a, i)],
            Generator::Spin(i, j) => (0..n).map(|a| s.phi[(i, a)] * s.big_p[(a, j)]).sum(),
            Generator::SpinHat(a, b) => (0..n).map(|i| s.big_p[(a, i)] * s.phi[(i, b)]).sum(),
            Generator::PHat(a) => (0..n).map(|i| s.p[i] * s.phi[(i, a)]).sum(),
            Generator::Lambda(i, j) => s.x[i] * s.p[j],
            Generator::JTotal(i, j) => Generator::Lambda(i, j).value(s) + Generator::Spin(i, j).value(s),
            Generator::DetPhi => s.phi.determinant(),
            Generator::XPhi { i, j, a } => s.x[i] * s.phi[(j, a)],
        }
    }

    fn gradient(&self, s: &PhaseState) -> PhaseGradient {
        let n = s.dim();
        let mut d = PhaseGradient::zeros(n);
        match *self {
            Generator::X(i) => d.dx[i] = 1.0,
            Generator::Momentum(i) => d.dp[i] = 1.0,
            Generator::Phi(i, a) => d.dphi[(i, a)] = 1.0,
            Generator::BigP(a, i) => d.dbig_p[(a, i)] = 1.0,
            Generator::Spin(i, j) => {
                for a in 0..n {
                    d.dphi[(i, a)] = s.big_p[(a, j)];
                    d.dbig_p[(a, j)] = s.phi[(i, a)];
                }
            }
            Generator::SpinHat(a, b) => {
                for i in 0..n {
                    d.dbig_p[(a, i)] = s.phi[(i, b)];
                    d.dphi[(i, b)] = s.big_p[(a, i)];
                }
            }
            Generator::PHat(a) => {
                for i in 0..n {
                    d.dp[i] = s.phi[(i, a)];
                    d.dphi[(i, a)] = s.p[i];
                }
            }
            Generator::Lambda(i, j) => {
                d.dx[i] = s.p[j];
                d.dp[j] = s.x[i];
            }
            Generator::JTotal(i, j) => {
                let l = Generator::Lambda(i, j).gradient(s);
                let m = Generator::Spin(i, j).gradient(s);
                d.dx = l.dx + m.dx;
                d.dp = l.dp + m.dp;
                d.dphi = l.dphi + m.dphi;
                d.dbig_p = l.dbig_p + m.dbig_p;
            }
            Generator::DetPhi => {
                let det = s.phi.determinant();
                let inv = checked_inverse(&s.phi).unwrap_or_else(|_| DMatrix::zeros(n, n));
                d.dphi = inv.transpose() * det;
            }
            Generator::XPhi { i, j, a } => {
                d.dx[i] = s.phi[(j, a)];
                d.dphi[(j, a)] = s.x[i];
            }
        }
        d
    }
}

/// `f(F)` for a smooth `f`; its gradient falls back to finite differences.
pub struct Composed<'a, F: ?Sized> {
    pub inner: &'a F,
    pub f: fn(f64) -> f64,
}

impl<F: PhaseFunction + ?Sized> PhaseFunction for Composed<'_, F> {
    fn value(&self, state: &PhaseState) -> f64 {
        (self.f)(self.inner.value(state))
    }
}
