//! Hamiltonians over the stacked canonical chart and Hamilton's equations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kinematics::Configuration;
use crate::spaces::{checked_inverse, LinMap, MetricTensor, Variance};

use super::model::{flatten_momentum, mass_matrix, solve_inertia, unflatten_velocity, KineticModel};
use super::phase::{flatten_states, unflatten_states, PhaseGradient, PhaseState};

/// Central-difference step for a coordinate of magnitude `q`.
pub fn fd_step(q: f64) -> f64 {
    f64::EPSILON.cbrt() * q.abs().max(1.0)
}

/// A scalar function of all bodies' phase-space points together with its
/// gradient.
pub trait Hamiltonian {
    fn energy(&self, states: &[PhaseState]) -> Result<f64>;
    fn gradient(&self, states: &[PhaseState]) -> Result<Vec<PhaseGradient>>;
}

/// Position-dependent potential energy of a system of bodies.
pub trait Potential {
    fn value(&self, configs: &[PhaseState]) -> Result<f64>;
    /// Per-body `(dV/dx, dV/dphi)`, with `dphi[(i, A)]` the derivative by `phi^i_A`.
    fn gradient(&self, configs: &[PhaseState]) -> Result<Vec<(DVector<f64>, DMatrix<f64>)>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoPotential;

impl Potential for NoPotential {
    fn value(&self, _: &[PhaseState]) -> Result<f64> {
        Ok(0.0)
    }

    fn gradient(&self, configs: &[PhaseState]) -> Result<Vec<(DVector<f64>, DMatrix<f64>)>> {
        Ok(configs
            .iter()
            .map(|s| (DVector::zeros(s.dim()), DMatrix::zeros(s.dim(), s.dim())))
            .collect())
    }
}

fn body_config(state: &PhaseState) -> Configuration {
    Configuration {
        x: state.x.clone(),
        phi: LinMap::from_parts(state.phi.clone(), Variance::MIXED_VU),
    }
}

/// Kinetic Hamiltonian `pi^T Gamma^-1 pi / 2` of one body and the generalized
/// velocity `Gamma^-1 pi`.
pub fn kinetic_hamiltonian(
    model: &KineticModel,
    state: &PhaseState,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<(f64, DVector<f64>)> {
    let gamma = mass_matrix(model, &body_config(state), eta, g)?;
    let pi = flatten_momentum(&state.p, &state.big_p);
    let q_dot = solve_inertia(gamma, &pi)?;
    Ok((0.5 * pi.dot(&q_dot), q_dot))
}

/// `dH_kin/dphi` at fixed momenta, given the velocity `q_dot = Gamma^-1 pi`.
fn kinetic_phi_gradient(
    model: &KineticModel,
    state: &PhaseState,
    q_dot: &DVector<f64>,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<DMatrix<f64>> {
    let n = state.dim();
    match model {
        KineticModel::DAlembert(_) => Ok(DMatrix::zeros(n, n)),
        KineticModel::LeftAffine { .. } => {
            let vel = unflatten_velocity(q_dot, n);
            let phi_inv = checked_inverse(&state.phi)?;
            let omega_hat = &phi_inv * &vel.big_v;
            let v_hat = &phi_inv * &vel.v;
            Ok((omega_hat * &state.big_p).transpose() + &state.p * v_hat.transpose())
        }
        KineticModel::RightAffine { .. } => {
            let vel = unflatten_velocity(q_dot, n);
            let omega = &vel.big_v * checked_inverse(&state.phi)?;
            Ok((&state.big_p * omega).transpose())
        }
        KineticModel::IsometricGeneral { .. } => {
            let mut out = DMatrix::zeros(n, n);
            let mut probe = state.clone();
            for i in 0..n {
                for a in 0..n {
                    let q = state.phi[(i, a)];
                    let h = fd_step(q);
                    probe.phi[(i, a)] = q + h;
                    let up = kinetic_hamiltonian(model, &probe, eta, g)?.0;
                    probe.phi[(i, a)] = q - h;
                    let down = kinetic_hamiltonian(model, &probe, eta, g)?.0;
                    probe.phi[(i, a)] = q;
                    out[(i, a)] = (up - down) / (2.0 * h);
                }
            }
            Ok(out)
        }
    }
}

/// `H = sum of per-body kinetic Hamiltonians + potential`.
#[derive(Debug, Clone)]
pub struct ModelHamiltonian<P> {
    pub models: Vec<KineticModel>,
    pub eta: MetricTensor,
    pub g: MetricTensor,
    pub potential: P,
}

impl<P: Potential> ModelHamiltonian<P> {
    pub fn new(models: Vec<KineticModel>, eta: MetricTensor, g: MetricTensor, potential: P) -> Result<Self> {
        let n = eta.dim();
        g.check_dim(n)?;
        for (k, m) in models.iter().enumerate() {
            m.validate(n).map_err(|e| e.in_body(k + 1))?;
        }
        Ok(ModelHamiltonian {
            models,
            eta,
            g,
            potential,
        })
    }

    fn check(&self, states: &[PhaseState]) -> Result<()> {
        if states.len() != self.models.len() {
            return Err(Error::DimensionMismatch {
                expected: self.models.len(),
                found: states.len(),
            });
        }
        for s in states {
            if s.dim() != self.eta.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.eta.dim(),
                    found: s.dim(),
                });
            }
        }
        Ok(())
    }

    /// Kinetic energy of each body.
    pub fn kinetic_energies(&self, states: &[PhaseState]) -> Result<Vec<f64>> {
        self.check(states)?;
        self.models
            .iter()
            .zip(states)
            .enumerate()
            .map(|(k, (m, s))| {
                kinetic_hamiltonian(m, s, &self.eta, &self.g)
                    .map(|(t, _)| t)
                    .map_err(|e| e.in_body(k + 1))
            })
            .collect()
    }
}

impl<P: Potential> Hamiltonian for ModelHamiltonian<P> {
    fn energy(&self, states: &[PhaseState]) -> Result<f64> {
        let kinetic: f64 = self.kinetic_energies(states)?.iter().sum();
        Ok(kinetic + self.potential.value(states)?)
    }

    fn gradient(&self, states: &[PhaseState]) -> Result<Vec<PhaseGradient>> {
        self.check(states)?;
        let forces = self.potential.gradient(states)?;
        let mut out = Vec::with_capacity(states.len());
        for (k, ((model, state), (fx, fphi))) in self.models.iter().zip(states).zip(forces).enumerate() {
            let n = state.dim();
            let body = |e: Error| e.in_body(k + 1);
            let (_, q_dot) = kinetic_hamiltonian(model, state, &self.eta, &self.g).map_err(body)?;
            let dphi = kinetic_phi_gradient(model, state, &q_dot, &self.eta, &self.g).map_err(body)?;
            let vel = unflatten_velocity(&q_dot, n);
            out.push(PhaseGradient {
                dx: fx,
                dphi: dphi + fphi,
                dp: vel.v,
                dbig_p: vel.big_v.transpose(),
            });
        }
        Ok(out)
    }
}

/// Gradient of `h.energy` by central differences over every canonical coordinate.
pub fn fd_gradient<H: Hamiltonian + ?Sized>(h: &H, states: &[PhaseState]) -> Result<Vec<PhaseGradient>> {
    let n = states.first().map_or(0, PhaseState::dim);
    let mut y = flatten_states(states);
    let mut grad = DVector::zeros(y.len());
    for mu in 0..y.len() {
        let q = y[mu];
        let step = fd_step(q);
        y[mu] = q + step;
        let up = h.energy(&unflatten_states(&y, n))?;
        y[mu] = q - step;
        let down = h.energy(&unflatten_states(&y, n))?;
        y[mu] = q;
        grad[mu] = (up - down) / (2.0 * step);
    }
    Ok(gradients_from_flat(&grad, n))
}

pub(crate) fn gradients_from_flat(flat: &DVector<f64>, n: usize) -> Vec<PhaseGradient> {
    let stride = 2 * (n + n * n);
    flat.as_slice()
        .chunks(stride)
        .map(|c| PhaseGradient::from_flat(c, n))
        .collect()
}

/// Time derivatives of every body: `q_dot = dH/dp`, `p_dot = -dH/dq`, with
/// `phi^i_A` paired to `P^A_i`. The result reuses the phase-state layout.
pub fn hamilton_rhs<H: Hamiltonian + ?Sized>(h: &H, states: &[PhaseState]) -> Result<Vec<PhaseState>> {
    Ok(h
        .gradient(states)?
        .into_iter()
        .map(|d| PhaseState {
            x: d.dp,
            phi: d.dbig_p.transpose(),
            p: -d.dx,
            big_p: -d.dphi.transpose(),
        })
        .collect())
}

pub(crate) fn flat_rhs<H: Hamiltonian + ?Sized>(h: &H, y: &DVector<f64>, n: usize) -> Result<DVector<f64>> {
    Ok(flatten_states(&hamilton_rhs(h, &unflatten_states(y, n))?))
}
