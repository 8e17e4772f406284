//! Kinetic-energy models, their configuration-space metrics and the Legendre
//! transform.
//!
//! Generalized coordinates are ordered `x^1..x^n` followed by `phi^i_A`
//! row-major, so `phi^i_A` sits at index `n + i n + A`. The momentum conjugate
//! to `phi^i_A` is `P^A_i`.

use nalgebra::{DMatrix, DVector};

use crate::deformation::{cauchy_matrix, green_matrix};
use crate::error::{Error, Result};
use crate::kinematics::{metric_adjoint, BodyInertia, Configuration, VelocityState};
use crate::spaces::{checked_inverse, MetricTensor};

/// Reciprocal condition number of `Gamma` at or below which the inertia is
/// treated as singular.
pub const INERTIA_SINGULARITY_TOL: f64 = 1e-12;

/// Internal inertia of a left-affine (spatially affine-invariant) body.
#[derive(Debug, Clone, PartialEq)]
pub enum LeftInternal {
    /// `L = I eta^BD eta_AC + A delta^B_C delta^D_A + B delta^B_A delta^D_C`.
    Isotropic { i: f64, a: f64, b: f64 },
    /// Constants `L[A,B,C,D]`, coefficient of `Omega_hat^A_B Omega_hat^C_D`,
    /// stored at `((A n + B) n + C) n + D`.
    General(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum KineticModel {
    /// Point-aggregate kinetic energy with constant co-moving inertia.
    DAlembert(BodyInertia),
    /// Invariant under the spatial affine group.
    LeftAffine { mass: f64, internal: LeftInternal },
    /// Invariant under the material affine group and spatial isometries.
    RightAffine { mass: f64, i: f64, a: f64, b: f64 },
    /// Most general form invariant under spatial and material isometries.
    IsometricGeneral {
        m1: f64,
        m2: f64,
        i1: f64,
        i2: f64,
        i3: f64,
        i4: f64,
        a: f64,
        b: f64,
    },
}

fn finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

/// Left-affine coefficients of the isotropic triple `(I, A, B)`.
pub fn isotropic_left_coefficients(eta: &MetricTensor, i: f64, a: f64, b: f64) -> Vec<f64> {
    let n = eta.dim();
    let (e, ei) = (eta.components(), eta.inverse());
    let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    let mut l = vec![0.0; n * n * n * n];
    for ca in 0..n {
        for cb in 0..n {
            for cc in 0..n {
                for cd in 0..n {
                    l[((ca * n + cb) * n + cc) * n + cd] = i * ei[(cb, cd)] * e[(ca, cc)]
                        + a * delta(cb, cc) * delta(cd, ca)
                        + b * delta(ca, cb) * delta(cc, cd);
                }
            }
        }
    }
    l
}

impl KineticModel {
    /// Parameter checks that do not depend on the configuration.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            KineticModel::DAlembert(inertia) => {
                if inertia.dim() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: inertia.dim(),
                    });
                }
            }
            KineticModel::LeftAffine { mass, internal } => {
                finite("mass", *mass)?;
                match internal {
                    LeftInternal::Isotropic { i, a, b } => {
                        finite("I", *i)?;
                        finite("A", *a)?;
                        finite("B", *b)?;
                    }
                    LeftInternal::General(l) => {
                        if l.len() != n * n * n * n {
                            return Err(Error::DimensionMismatch {
                                expected: n * n * n * n,
                                found: l.len(),
                            });
                        }
                        let scale = l.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                        for p in 0..n * n {
                            for q in 0..n * n {
                                let (x, y) = (l[p * n * n + q], l[q * n * n + p]);
                                finite("L", x)?;
                                if (x - y).abs() > 1e-12 * scale {
                                    return Err(Error::InvalidParameter(
                                        "left-affine coefficients are not symmetric in bi-indices"
                                            .into(),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            KineticModel::RightAffine { mass, i, a, b } => {
                for (name, v) in [("mass", mass), ("I", i), ("A", a), ("B", b)] {
                    finite(name, *v)?;
                }
            }
            KineticModel::IsometricGeneral {
                m1,
                m2,
                i1,
                i2,
                i3,
                i4,
                a,
                b,
            } => {
                for (name, v) in [
                    ("m1", m1),
                    ("m2", m2),
                    ("I1", i1),
                    ("I2", i2),
                    ("I3", i3),
                    ("I4", i4),
                    ("A", a),
                    ("B", b),
                ] {
                    finite(name, *v)?;
                }
            }
        }
        Ok(())
    }

    /// True when the Hamiltonian does not depend on `phi` through the kinetic term.
    pub fn is_flat(&self) -> bool {
        matches!(self, KineticModel::DAlembert(_))
    }
}

fn check_state(config: &Configuration, eta: &MetricTensor, g: &MetricTensor) -> Result<usize> {
    let n = config.dim();
    eta.check_dim(n)?;
    g.check_dim(n)?;
    Ok(n)
}

fn check_velocity(vel: &VelocityState, n: usize) -> Result<()> {
    if vel.v.len() != n || vel.big_v.nrows() != n || vel.big_v.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: vel.v.len(),
        });
    }
    Ok(())
}

/// `Tr(X^T P X Q)` for symmetric `P`, `Q`: the contraction `P_KL Q^MN X^K_M X^L_N`.
fn sandwich(x: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (x.transpose() * p * x * q).trace()
}

fn quad(v: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    v.dot(&(m * v))
}

fn left_general_energy(l: &[f64], omega_hat: &DMatrix<f64>) -> f64 {
    let n = omega_hat.nrows();
    let mut sum = 0.0;
    for p in 0..n * n {
        let (a, b) = (p / n, p % n);
        for q in 0..n * n {
            let (c, d) = (q / n, q % n);
            sum += l[p * n * n + q] * omega_hat[(a, b)] * omega_hat[(c, d)];
        }
    }
    0.5 * sum
}

/// Kinetic energy evaluated from the defining formula of each model.
pub fn kinetic_energy(
    model: &KineticModel,
    config: &Configuration,
    vel: &VelocityState,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<f64> {
    let n = check_state(config, eta, g)?;
    check_velocity(vel, n)?;
    model.validate(n)?;
    let (v, big_v) = (&vel.v, &vel.big_v);
    let t = match model {
        KineticModel::DAlembert(inertia) => {
            0.5 * inertia.mass * quad(v, g.components())
                + 0.5 * (big_v.transpose() * g.components() * big_v * inertia.j()).trace()
        }
        KineticModel::LeftAffine { mass, internal } => {
            let phi_inv = checked_inverse(config.phi.matrix())?;
            let v_hat = &phi_inv * v;
            let w = &phi_inv * big_v;
            let t_int = match internal {
                LeftInternal::Isotropic { i, a, b } => {
                    let w_t = metric_adjoint(&w, eta);
                    let tr = w.trace();
                    0.5 * i * (&w_t * &w).trace() + 0.5 * a * (&w * &w).trace() + 0.5 * b * tr * tr
                }
                LeftInternal::General(l) => left_general_energy(l, &w),
            };
            0.5 * mass * quad(&v_hat, eta.components()) + t_int
        }
        KineticModel::RightAffine { mass, i, a, b } => {
            let phi_inv = checked_inverse(config.phi.matrix())?;
            let w = big_v * &phi_inv;
            let w_t = metric_adjoint(&w, g);
            let tr = w.trace();
            0.5 * mass * quad(v, g.components())
                + 0.5 * i * (&w_t * &w).trace()
                + 0.5 * a * (&w * &w).trace()
                + 0.5 * b * tr * tr
        }
        KineticModel::IsometricGeneral {
            m1,
            m2,
            i1,
            i2,
            i3,
            i4,
            a,
            b,
        } => {
            let phi = config.phi.matrix();
            let phi_inv = checked_inverse(phi)?;
            let gm = green_matrix(phi, g);
            let gm_inv = checked_inverse(&gm)?;
            let (e, ei) = (eta.components(), eta.inverse());
            let v_hat = &phi_inv * v;
            let w = &phi_inv * big_v;
            let tr = w.trace();
            0.5 * quad(&v_hat, &(&gm * *m1 + e * *m2))
                + 0.5 * a * (&w * &w).trace()
                + 0.5 * b * tr * tr
                + 0.5
                    * (i1 * sandwich(&w, &gm, &gm_inv)
                        + i2 * sandwich(&w, e, ei)
                        + i3 * sandwich(&w, &gm, ei)
                        + i4 * sandwich(&w, e, &gm_inv))
        }
    };
    Ok(t)
}

/// The same kinetic energy through an equivalent rewriting: co-moving
/// `(G, Omega_hat)` form for d'Alembert, explicit four-index contraction for
/// the affine models, and the spatial `(g, C, Omega)` form for the isometric
/// family.
pub fn kinetic_energy_alternative(
    model: &KineticModel,
    config: &Configuration,
    vel: &VelocityState,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<f64> {
    let n = check_state(config, eta, g)?;
    check_velocity(vel, n)?;
    model.validate(n)?;
    let phi = config.phi.matrix();
    let phi_inv = checked_inverse(phi)?;
    let (v, big_v) = (&vel.v, &vel.big_v);
    let t = match model {
        KineticModel::DAlembert(inertia) => {
            let gm = green_matrix(phi, g);
            let v_hat = &phi_inv * v;
            let w = &phi_inv * big_v;
            0.5 * inertia.mass * quad(&v_hat, &gm) + 0.5 * (w.transpose() * &gm * &w * inertia.j()).trace()
        }
        KineticModel::LeftAffine { mass, internal } => {
            let l = match internal {
                LeftInternal::Isotropic { i, a, b } => isotropic_left_coefficients(eta, *i, *a, *b),
                LeftInternal::General(l) => l.clone(),
            };
            let c = cauchy_matrix(phi, eta)?;
            0.5 * mass * quad(v, &c) + left_general_energy(&l, &(&phi_inv * big_v))
        }
        KineticModel::RightAffine { mass, i, a, b } => {
            let w = big_v * &phi_inv;
            let (gc, gi) = (g.components(), g.inverse());
            let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
            let mut sum = 0.0;
            for ci in 0..n {
                for cj in 0..n {
                    for ck in 0..n {
                        for cl in 0..n {
                            let r = i * gi[(cj, cl)] * gc[(ci, ck)]
                                + a * delta(cj, ck) * delta(cl, ci)
                                + b * delta(cj, ci) * delta(cl, ck);
                            sum += r * w[(ci, cj)] * w[(ck, cl)];
                        }
                    }
                }
            }
            0.5 * mass * quad(v, gc) + 0.5 * sum
        }
        KineticModel::IsometricGeneral {
            m1,
            m2,
            i1,
            i2,
            i3,
            i4,
            a,
            b,
        } => {
            let c = cauchy_matrix(phi, eta)?;
            let c_inv = checked_inverse(&c)?;
            let (gc, gi) = (g.components(), g.inverse());
            let w = big_v * &phi_inv;
            let tr = w.trace();
            0.5 * quad(v, &(gc * *m1 + &c * *m2))
                + 0.5 * a * (&w * &w).trace()
                + 0.5 * b * tr * tr
                + 0.5
                    * (i1 * sandwich(&w, gc, gi)
                        + i2 * sandwich(&w, &c, &c_inv)
                        + i3 * sandwich(&w, gc, &c_inv)
                        + i4 * sandwich(&w, &c, gi))
        }
    };
    Ok(t)
}

/// `S[(iA),(jB)] = phi^-1 B_i phi^-1 A_j`, the metric of `Tr(Omega_hat^2)`.
fn swap_block(phi_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let n = phi_inv.nrows();
    DMatrix::from_fn(n * n, n * n, |r, c| {
        let (i, a) = (r / n, r % n);
        let (j, b) = (c / n, c % n);
        phi_inv[(b, i)] * phi_inv[(a, j)]
    })
}

/// `w w^T` with `w_(iA) = phi^-1 A_i`, the metric of `(Tr Omega_hat)^2`.
fn trace_block(phi_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let n = phi_inv.nrows();
    let w = DVector::from_fn(n * n, |r, _| phi_inv[(r % n, r / n)]);
    &w * w.transpose()
}

fn left_general_block(l: &[f64], phi_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let n = phi_inv.nrows();
    DMatrix::from_fn(n * n, n * n, |r, c| {
        let (i, b) = (r / n, r % n);
        let (j, d) = (c / n, c % n);
        let mut sum = 0.0;
        for a in 0..n {
            for cc in 0..n {
                sum += l[((a * n + b) * n + cc) * n + d] * phi_inv[(a, i)] * phi_inv[(cc, j)];
            }
        }
        sum
    })
}

/// Metric `Gamma` of the kinetic energy, `T = q_dot^T Gamma q_dot / 2`.
pub fn mass_matrix(
    model: &KineticModel,
    config: &Configuration,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<DMatrix<f64>> {
    let n = check_state(config, eta, g)?;
    model.validate(n)?;
    let phi = config.phi.matrix();
    let (translational, internal) = match model {
        KineticModel::DAlembert(inertia) => (
            g.components() * inertia.mass,
            g.components().kronecker(inertia.j()),
        ),
        KineticModel::LeftAffine { mass, internal } => {
            let phi_inv = checked_inverse(phi)?;
            let c = cauchy_matrix(phi, eta)?;
            let block = match internal {
                LeftInternal::Isotropic { i, a, b } => {
                    c.kronecker(eta.inverse()) * *i
                        + swap_block(&phi_inv) * *a
                        + trace_block(&phi_inv) * *b
                }
                LeftInternal::General(l) => left_general_block(l, &phi_inv),
            };
            (&c * *mass, block)
        }
        KineticModel::RightAffine { mass, i, a, b } => {
            let phi_inv = checked_inverse(phi)?;
            let gm_inv = checked_inverse(&green_matrix(phi, g))?;
            let block = g.components().kronecker(&gm_inv) * *i
                + swap_block(&phi_inv) * *a
                + trace_block(&phi_inv) * *b;
            (g.components() * *mass, block)
        }
        KineticModel::IsometricGeneral {
            m1,
            m2,
            i1,
            i2,
            i3,
            i4,
            a,
            b,
        } => {
            let phi_inv = checked_inverse(phi)?;
            let c = cauchy_matrix(phi, eta)?;
            let gm_inv = checked_inverse(&green_matrix(phi, g))?;
            let (gc, ei) = (g.components(), eta.inverse());
            let block = gc.kronecker(&gm_inv) * *i1
                + c.kronecker(ei) * *i2
                + gc.kronecker(ei) * *i3
                + c.kronecker(&gm_inv) * *i4
                + swap_block(&phi_inv) * *a
                + trace_block(&phi_inv) * *b;
            (gc * *m1 + &c * *m2, block)
        }
    };
    let dim = n + n * n;
    let mut out = DMatrix::zeros(dim, dim);
    out.view_mut((0, 0), (n, n)).copy_from(&translational);
    out.view_mut((n, n), (n * n, n * n)).copy_from(&internal);
    Ok((&out + out.transpose()) * 0.5)
}

/// Flattened generalized velocity `(v, V row-major)`.
pub fn flatten_velocity(vel: &VelocityState) -> DVector<f64> {
    let n = vel.v.len();
    DVector::from_fn(n + n * n, |r, _| {
        if r < n {
            vel.v[r]
        } else {
            let k = r - n;
            vel.big_v[(k / n, k % n)]
        }
    })
}

/// Flattened momentum `(p, P)` in the coordinate order: `P^A_i` at `n + i n + A`.
pub fn flatten_momentum(p: &DVector<f64>, big_p: &DMatrix<f64>) -> DVector<f64> {
    let n = p.len();
    DVector::from_fn(n + n * n, |r, _| {
        if r < n {
            p[r]
        } else {
            let k = r - n;
            big_p[(k % n, k / n)]
        }
    })
}

pub fn unflatten_momentum(flat: &DVector<f64>, n: usize) -> (DVector<f64>, DMatrix<f64>) {
    let p = DVector::from_fn(n, |r, _| flat[r]);
    let big_p = DMatrix::from_fn(n, n, |a, i| flat[n + i * n + a]);
    (p, big_p)
}

pub fn unflatten_velocity(flat: &DVector<f64>, n: usize) -> VelocityState {
    VelocityState {
        v: DVector::from_fn(n, |r, _| flat[r]),
        big_v: DMatrix::from_fn(n, n, |i, a| flat[n + i * n + a]),
    }
}

/// Canonical momenta `(p, P) = Gamma (v, V)`.
pub fn legendre(
    model: &KineticModel,
    config: &Configuration,
    vel: &VelocityState,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = config.dim();
    check_velocity(vel, n)?;
    let gamma = mass_matrix(model, config, eta, g)?;
    Ok(unflatten_momentum(&(gamma * flatten_velocity(vel)), n))
}

/// Reciprocal condition number in the 1-norm, `1 / (|m|_1 |m^-1|_1)`; zero
/// when the factorization breaks down.
fn reciprocal_condition(m: &DMatrix<f64>, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let one_norm = |a: &DMatrix<f64>| a.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
    match lu.try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => 1.0 / (one_norm(m) * one_norm(&inv)),
        _ => 0.0,
    }
}

/// Solves `Gamma q_dot = pi`; `SingularInertia` when the reciprocal
/// condition number of `Gamma` is at most `INERTIA_SINGULARITY_TOL`.
pub(crate) fn solve_inertia(gamma: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = gamma.clone().lu();
    let rcond = reciprocal_condition(&gamma, &lu);
    if rcond.is_nan() || rcond <= INERTIA_SINGULARITY_TOL {
        return Err(Error::SingularInertia);
    }
    lu.solve(rhs).ok_or(Error::SingularInertia)
}

/// Velocities from canonical momenta.
pub fn legendre_inverse(
    model: &KineticModel,
    config: &Configuration,
    p: &DVector<f64>,
    big_p: &DMatrix<f64>,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<VelocityState> {
    let n = config.dim();
    if p.len() != n || big_p.nrows() != n || big_p.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.len(),
        });
    }
    let gamma = mass_matrix(model, config, eta, g)?;
    let q_dot = solve_inertia(gamma, &flatten_momentum(p, big_p))?;
    Ok(unflatten_velocity(&q_dot, n))
}
