//! Time stepping of Hamilton's equations.

use nalgebra::DVector;

use crate::error::{Error, Result};

use super::hamiltonian::{flat_rhs, Hamiltonian};
use super::phase::{flatten_states, unflatten_states, PhaseState};

pub const MIDPOINT_TOL: f64 = 1e-12;
pub const MIDPOINT_MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Classical four-stage Runge–Kutta.
    #[default]
    Rk4,
    /// Implicit midpoint rule, solved by fixed-point iteration.
    ImplicitMidpoint,
}

fn state_dim(states: &[PhaseState]) -> usize {
    states.first().map_or(0, PhaseState::dim)
}

fn step_flat<H: Hamiltonian + ?Sized>(
    integrator: Integrator,
    h: &H,
    y: &DVector<f64>,
    dt: f64,
    n: usize,
) -> Result<DVector<f64>> {
    match integrator {
        Integrator::Rk4 => {
            let k1 = flat_rhs(h, y, n)?;
            let k2 = flat_rhs(h, &(y + &k1 * (0.5 * dt)), n)?;
            let k3 = flat_rhs(h, &(y + &k2 * (0.5 * dt)), n)?;
            let k4 = flat_rhs(h, &(y + &k3 * dt), n)?;
            Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
        }
        Integrator::ImplicitMidpoint => {
            let tol = MIDPOINT_TOL * y.amax().max(1.0);
            let mut next = y + flat_rhs(h, y, n)? * dt;
            let mut residual = f64::INFINITY;
            for _ in 0..MIDPOINT_MAX_ITERATIONS {
                let mid = (y + &next) * 0.5;
                let update = y + flat_rhs(h, &mid, n)? * dt;
                residual = (&update - &next).amax();
                next = update;
                if residual <= tol {
                    return Ok(next);
                }
            }
            Err(Error::NonConvergence {
                iterations: MIDPOINT_MAX_ITERATIONS,
                residual,
            })
        }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")))
    }
}

pub fn step<H: Hamiltonian + ?Sized>(
    integrator: Integrator,
    h: &H,
    states: &[PhaseState],
    dt: f64,
) -> Result<Vec<PhaseState>> {
    check_dt(dt)?;
    let n = state_dim(states);
    let y = step_flat(integrator, h, &flatten_states(states), dt, n)?;
    Ok(unflatten_states(&y, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub states: Vec<PhaseState>,
    pub energy: f64,
}

/// Integrates from `t = 0` to `t_end` in `round(t_end / dt)` steps, recording
/// the initial point, every `stride`-th step and the final step.
pub fn simulate<H: Hamiltonian + ?Sized>(
    h: &H,
    integrator: Integrator,
    state0: &[PhaseState],
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<Vec<Sample>> {
    check_dt(dt)?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidParameter(format!("end time must be non-negative, got {t_end}")));
    }
    if stride == 0 {
        return Err(Error::InvalidParameter("output stride must be at least 1".into()));
    }
    let n = state_dim(state0);
    let steps = (t_end / dt).round() as usize;
    let mut y = flatten_states(state0);
    let mut out = vec![Sample {
        t: 0.0,
        states: state0.to_vec(),
        energy: h.energy(state0)?,
    }];
    for k in 1..=steps {
        y = step_flat(integrator, h, &y, dt, n)?;
        if k % stride == 0 || k == steps {
            let states = unflatten_states(&y, n);
            out.push(Sample {
                t: k as f64 * dt,
                energy: h.energy(&states)?,
                states,
            });
        }
    }
    Ok(out)
}
