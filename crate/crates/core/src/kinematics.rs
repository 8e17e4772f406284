//! Configurations, velocities and affine velocities of a single body.

use nalgebra::{DMatrix, DVector};

use crate::deformation::green_matrix;
use crate::error::{Error, Result};
use crate::spaces::{checked_inverse, expect_variance, max_abs, LinMap, MetricTensor, Variance};

/// Default absolute tolerance of the constraint predicates.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Centre-of-mass position `x` and internal configuration `phi: U -> V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub x: DVector<f64>,
    pub phi: LinMap,
}

impl Configuration {
    pub fn new(x: DVector<f64>, phi: LinMap) -> Result<Self> {
        expect_variance(&phi, Variance::MIXED_VU)?;
        if x.len() != phi.dim() {
            return Err(Error::DimensionMismatch {
                expected: phi.dim(),
                found: x.len(),
            });
        }
        if phi.is_singular() {
            return Err(Error::SingularMap);
        }
        Ok(Configuration { x, phi })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Generalized velocities `v = dx/dt`, `V = dphi/dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityState {
    pub v: DVector<f64>,
    pub big_v: DMatrix<f64>,
}

/// Mass and co-moving quadrupole inertia `J^AB`.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyInertia {
    pub mass: f64,
    j: DMatrix<f64>,
}

impl BodyInertia {
    pub fn new(mass: f64, j: DMatrix<f64>) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if !j.is_square() {
            return Err(Error::DimensionMismatch {
                expected: j.nrows(),
                found: j.ncols(),
            });
        }
        if max_abs(&(&j - j.transpose())) > 1e-12 * max_abs(&j).max(1.0) {
            return Err(Error::InvalidParameter("inertia tensor is not symmetric".into()));
        }
        let j = (&j + j.transpose()) * 0.5;
        if j.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter(
                "inertia tensor is not positive definite".into(),
            ));
        }
        Ok(BodyInertia { mass, j })
    }

    /// Inertially isotropic body, `J = I eta^-1`.
    pub fn isotropic(mass: f64, moment: f64, eta: &MetricTensor) -> Result<Self> {
        BodyInertia::new(mass, eta.inverse() * moment)
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineVelocities {
    /// `Omega = V phi^-1`.
    pub omega_big: LinMap,
    /// `Omega_hat = phi^-1 V`.
    pub omega_hat: LinMap,
    /// `v_hat = phi^-1 v`.
    pub v_hat: DVector<f64>,
    /// g-skew part of `Omega`.
    pub omega: LinMap,
    /// g-symmetric part of `Omega`.
    pub d: LinMap,
    /// eta-skew part of `Omega_hat`.
    pub omega_tilde: LinMap,
    /// eta-symmetric part of `Omega_hat`.
    pub d_tilde: LinMap,
    /// `d` pulled back to the body, `phi* g d phi`; equals `dG/dt / 2`.
    pub d_hat: LinMap,
    /// `eta d_tilde`; agrees with `d_hat` when `G = eta`.
    pub d_tilde_lowered: LinMap,
}

/// Transpose of an endomorphism with respect to `metric`: `M^-1 X^T M`.
pub(crate) fn metric_adjoint(x: &DMatrix<f64>, metric: &MetricTensor) -> DMatrix<f64> {
    metric.inverse() * x.transpose() * metric.components()
}

pub fn affine_velocities(
    config: &Configuration,
    vel: &VelocityState,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<AffineVelocities> {
    let n = config.dim();
    eta.check_dim(n)?;
    g.check_dim(n)?;
    if vel.v.len() != n || vel.big_v.nrows() != n || vel.big_v.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: vel.v.len(),
        });
    }
    let phi = config.phi.matrix();
    let phi_inv = checked_inverse(phi)?;
    let omega_big = &vel.big_v * &phi_inv;
    let omega_hat = &phi_inv * &vel.big_v;
    let v_hat = &phi_inv * &vel.v;
    let omega_big_t = metric_adjoint(&omega_big, g);
    let omega = (&omega_big - &omega_big_t) * 0.5;
    let d = (&omega_big + &omega_big_t) * 0.5;
    let omega_hat_t = metric_adjoint(&omega_hat, eta);
    let omega_tilde = (&omega_hat - &omega_hat_t) * 0.5;
    let d_tilde = (&omega_hat + &omega_hat_t) * 0.5;
    let d_hat = phi.transpose() * g.components() * &d * phi;
    let d_tilde_lowered = eta.components() * &d_tilde;
    Ok(AffineVelocities {
        omega_big: LinMap::from_parts(omega_big, Variance::ENDO_V),
        omega_hat: LinMap::from_parts(omega_hat, Variance::ENDO_U),
        v_hat,
        omega: LinMap::from_parts(omega, Variance::ENDO_V),
        d: LinMap::from_parts(d, Variance::ENDO_V),
        omega_tilde: LinMap::from_parts(omega_tilde, Variance::ENDO_U),
        d_tilde: LinMap::from_parts(d_tilde, Variance::ENDO_U),
        d_hat: LinMap::from_parts(d_hat, Variance::COVARIANT_UU),
        d_tilde_lowered: LinMap::from_parts(d_tilde_lowered, Variance::COVARIANT_UU),
    })
}

/// `max |omega_tilde - phi^-1 omega phi|`: zero for isometric `phi`, generically
/// nonzero otherwise.
pub fn check_comoving_caveat(av: &AffineVelocities, config: &Configuration) -> Result<f64> {
    let phi = config.phi.matrix();
    let phi_inv = checked_inverse(phi)?;
    let comoving = phi_inv * av.omega.matrix() * phi;
    Ok(max_abs(&(av.omega_tilde.matrix() - comoving)))
}

/// Two-point estimate `(G(t + dt) - G(t)) / (2 dt)` of half the Green rate.
pub fn green_rate(
    phi_t: &LinMap,
    phi_t_dt: &LinMap,
    dt: f64,
    g: &MetricTensor,
) -> Result<LinMap> {
    expect_variance(phi_t, Variance::MIXED_VU)?;
    expect_variance(phi_t_dt, Variance::MIXED_VU)?;
    g.check_dim(phi_t.dim())?;
    g.check_dim(phi_t_dt.dim())?;
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be nonzero, got {dt}")));
    }
    let g0 = green_matrix(phi_t.matrix(), g);
    let g1 = green_matrix(phi_t_dt.matrix(), g);
    Ok(LinMap::from_parts((g1 - g0) * (0.5 / dt), Variance::COVARIANT_UU))
}

/// Eulerian velocity field `v(y) = v + Omega (y - x)`.
pub fn eulerian_velocity(
    config: &Configuration,
    av: &AffineVelocities,
    v: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = config.dim();
    if y.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    Ok(v + av.omega_big.matrix() * (y - &config.x))
}

/// Spatial inertia `J[phi]^kl = phi^k_A phi^l_B J^AB`.
pub fn spatial_inertia(phi: &LinMap, j: &LinMap) -> Result<LinMap> {
    expect_variance(phi, Variance::MIXED_VU)?;
    expect_variance(j, Variance::CONTRAVARIANT_UU)?;
    let out = phi.matrix() * j.matrix() * phi.matrix().transpose();
    Ok(LinMap::from_parts(
        (&out + out.transpose()) * 0.5,
        Variance::CONTRAVARIANT_VV,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintReport {
    pub rigid_spatial: bool,
    pub rigid_material: bool,
    pub incompressible: bool,
    pub rotation_free: bool,
}

pub fn constraint_predicates(
    av: &AffineVelocities,
    eta: &MetricTensor,
    g: &MetricTensor,
    tol: f64,
) -> Result<ConstraintReport> {
    let omega = av.omega_big.matrix();
    let omega_hat = av.omega_hat.matrix();
    let tr = omega.trace();
    let tr_hat = omega_hat.trace();
    if (tr - tr_hat).abs() > 1e-9 * tr.abs().max(1.0) {
        return Err(Error::TraceMismatch {
            what: "Omega vs Omega_hat",
            left: tr,
            right: tr_hat,
        });
    }
    let omega_t = metric_adjoint(omega, g);
    let omega_hat_t = metric_adjoint(omega_hat, eta);
    Ok(ConstraintReport {
        rigid_spatial: max_abs(&(omega + &omega_t)) <= tol,
        rigid_material: max_abs(&(omega_hat + &omega_hat_t)) <= tol,
        incompressible: tr.abs() <= tol,
        rotation_free: max_abs(&(omega - &omega_t)) <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampler;
    use approx::assert_relative_eq;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    fn config(x: DVector<f64>, phi: DMatrix<f64>) -> Configuration {
        Configuration::new(x, LinMap::new(phi, Variance::MIXED_VU).unwrap()).unwrap()
    }

    fn rotation(t: f64) -> DMatrix<f64> {
        let (s, c) = t.sin_cos();
        m2(c, -s, s, c)
    }

    fn rotation_rate(t: f64) -> DMatrix<f64> {
        let (s, c) = t.sin_cos();
        m2(-s, -c, c, -s)
    }

    #[test]
    fn identity_configuration_gives_raw_velocities() {
        let id = MetricTensor::identity(2);
        let cfg = config(DVector::zeros(2), DMatrix::identity(2, 2));
        let vel = VelocityState {
            v: DVector::from_vec(vec![1.0, -2.0]),
            big_v: m2(0.3, 1.0, -0.7, 2.0),
        };
        let av = affine_velocities(&cfg, &vel, &id, &id).unwrap();
        assert_eq!(av.omega_big.matrix(), &vel.big_v);
        assert_eq!(av.omega_hat.matrix(), &vel.big_v);
        assert_eq!(av.v_hat, vel.v);
    }

    #[test]
    fn diagonal_example() {
        let id = MetricTensor::identity(2);
        let cfg = config(DVector::zeros(2), m2(2.0, 0.0, 0.0, 1.0));
        let vel = VelocityState {
            v: DVector::zeros(2),
            big_v: m2(2.0, 0.0, 0.0, 0.0),
        };
        let av = affine_velocities(&cfg, &vel, &id, &id).unwrap();
        assert_eq!(av.omega_big.matrix(), &m2(1.0, 0.0, 0.0, 0.0));
        assert_eq!(av.omega_hat.matrix(), &m2(1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn rigid_motion_fixture() {
        let id = MetricTensor::identity(2);
        for &t in &[0.0, 0.4, 2.0] {
            let cfg = config(DVector::zeros(2), rotation(t));
            let vel = VelocityState {
                v: DVector::zeros(2),
                big_v: rotation_rate(t),
            };
            let av = affine_velocities(&cfg, &vel, &id, &id).unwrap();
            assert!(av.d.max_abs() < 1e-15);
            assert!(av.omega.max_abs_diff(&av.omega_big).unwrap() < 1e-15);
            assert!(check_comoving_caveat(&av, &cfg).unwrap() < 1e-15);
            let r = constraint_predicates(&av, &id, &id, CONSTRAINT_TOL).unwrap();
            assert!(r.rigid_spatial && r.rigid_material);
        }
    }

    #[test]
    fn comoving_caveat_is_visible_for_deformed_bodies() {
        let id = MetricTensor::identity(2);
        let cfg = config(DVector::zeros(2), m2(2.0, 0.0, 0.0, 1.0));
        let big_v = m2(0.0, -1.0, 1.0, 0.0) * cfg.phi.matrix();
        let vel = VelocityState {
            v: DVector::zeros(2),
            big_v,
        };
        let av = affine_velocities(&cfg, &vel, &id, &id).unwrap();
        let gap = check_comoving_caveat(&av, &cfg).unwrap();
        assert!(gap > 0.1, "{gap}");
        let direct = av.omega_tilde.matrix()
            - checked_inverse(cfg.phi.matrix()).unwrap() * av.omega.matrix() * cfg.phi.matrix();
        assert_relative_eq!(gap, max_abs(&direct));
    }

    #[test]
    fn exact_split_and_traces() {
        let mut s = Sampler::new(71);
        for _ in 0..50 {
            let eta = s.spd_metric(3);
            let g = s.spd_metric(3);
            let cfg = config(s.gaussian_vector(3), s.gl_matrix(3, 1e2));
            let vel = VelocityState {
                v: s.gaussian_vector(3),
                big_v: s.gaussian_matrix(3),
            };
            let av = affine_velocities(&cfg, &vel, &eta, &g).unwrap();
            let sum = av.omega.add(&av.d).unwrap();
            assert!(sum.max_abs_diff(&av.omega_big).unwrap() < 1e-12);
            let w = av.omega.matrix();
            assert!(max_abs(&(w + metric_adjoint(w, &g))) < 1e-12);
            let d = av.d.matrix();
            assert!(max_abs(&(d - metric_adjoint(d, &g))) < 1e-12);
            let (o, oh) = (av.omega_big.matrix(), av.omega_hat.matrix());
            assert_relative_eq!(o.trace(), oh.trace(), epsilon = 1e-10);
            assert_relative_eq!((o * o).trace(), (oh * oh).trace(), epsilon = 1e-9);
        }
    }

    #[test]
    fn transformation_rules() {
        let mut s = Sampler::new(73);
        let id = MetricTensor::identity(3);
        for _ in 0..50 {
            let phi = s.gl_matrix(3, 1e2);
            let big_v = s.gaussian_matrix(3);
            let v = s.gaussian_vector(3);
            let a = s.gl_matrix(3, 1e2);
            let b = s.gl_matrix(3, 1e2);
            let av0 = affine_velocities(
                &config(DVector::zeros(3), phi.clone()),
                &VelocityState { v: v.clone(), big_v: big_v.clone() },
                &id,
                &id,
            )
            .unwrap();
            let av1 = affine_velocities(
                &config(DVector::zeros(3), &a * &phi * &b),
                &VelocityState { v: &a * &v, big_v: &a * &big_v * &b },
                &id,
                &id,
            )
            .unwrap();
            let a_inv = a.clone().try_inverse().unwrap();
            let b_inv = b.clone().try_inverse().unwrap();
            let expect = &a * av0.omega_big.matrix() * &a_inv;
            assert!(max_abs(&(av1.omega_big.matrix() - &expect)) < 1e-9 * max_abs(&expect));
            let expect = &b_inv * av0.omega_hat.matrix() * &b;
            assert!(max_abs(&(av1.omega_hat.matrix() - &expect)) < 1e-9 * max_abs(&expect));
            let expect = &b_inv * &av0.v_hat;
            assert!((&av1.v_hat - &expect).amax() < 1e-9 * expect.amax());
        }
    }

    #[test]
    fn green_rate_examples() {
        let id = MetricTensor::identity(2);
        let phi = LinMap::new(m2(1.0, 0.5, 0.0, 2.0), Variance::MIXED_VU).unwrap();
        assert_eq!(green_rate(&phi, &phi, 1e-3, &id).unwrap().max_abs(), 0.0);

        let dt = 1e-4;
        let t = 0.5;
        let at = |t: f64| LinMap::new(m2(t.exp(), 0.0, 0.0, 1.0), Variance::MIXED_VU).unwrap();
        let rate = green_rate(&at(t), &at(t + dt), dt, &id).unwrap();
        let mid = t + 0.5 * dt;
        assert!((rate.matrix()[(0, 0)] - (2.0 * mid).exp()).abs() < 1e-6);

        let r0 = LinMap::new(rotation(0.3), Variance::MIXED_VU).unwrap();
        let r1 = LinMap::new(rotation(0.3 + dt), Variance::MIXED_VU).unwrap();
        assert!(green_rate(&r0, &r1, dt, &id).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn green_rate_matches_pulled_back_distortion() {
        let mut s = Sampler::new(79);
        let eta = s.spd_metric(2);
        let g = s.spd_metric(2);
        let phi0 = s.gl_matrix(2, 10.0);
        let gen = s.gaussian_matrix(2) * 0.3;
        let at = |t: f64| &phi0 * crate::spaces::expm(&(&gen * t));
        let (t, dt) = (0.7, 1e-4);
        let mid = t + 0.5 * dt;
        let cfg = config(DVector::zeros(2), at(mid));
        let vel = VelocityState {
            v: DVector::zeros(2),
            big_v: at(mid) * &gen,
        };
        let av = affine_velocities(&cfg, &vel, &eta, &g).unwrap();
        let p0 = LinMap::new(at(t), Variance::MIXED_VU).unwrap();
        let p1 = LinMap::new(at(t + dt), Variance::MIXED_VU).unwrap();
        let rate = green_rate(&p0, &p1, dt, &g).unwrap();
        assert!(rate.max_abs_diff(&av.d_hat).unwrap() < 1e-6);
    }

    #[test]
    fn eulerian_velocity_examples() {
        let id = MetricTensor::identity(2);
        let cfg = config(DVector::zeros(2), DMatrix::identity(2, 2));
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let vel = VelocityState {
            v: v.clone(),
            big_v: m2(0.0, -1.0, 1.0, 0.0),
        };
        let av = affine_velocities(&cfg, &vel, &id, &id).unwrap();
        let y = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(
            eulerian_velocity(&cfg, &av, &v, &y).unwrap(),
            DVector::from_vec(vec![1.0, 1.0])
        );
        assert_eq!(eulerian_velocity(&cfg, &av, &v, &cfg.x).unwrap(), v);

        let still = VelocityState {
            v: v.clone(),
            big_v: DMatrix::zeros(2, 2),
        };
        let av = affine_velocities(&cfg, &still, &id, &id).unwrap();
        let far = DVector::from_vec(vec![-3.0, 7.0]);
        assert_eq!(eulerian_velocity(&cfg, &av, &v, &far).unwrap(), v);
    }

    #[test]
    fn spatial_inertia_examples() {
        let j = LinMap::new(DMatrix::identity(2, 2), Variance::CONTRAVARIANT_UU).unwrap();
        let id = LinMap::new(DMatrix::identity(2, 2), Variance::MIXED_VU).unwrap();
        assert_eq!(spatial_inertia(&id, &j).unwrap().matrix(), j.matrix());
        let phi = LinMap::new(m2(2.0, 0.0, 0.0, 3.0), Variance::MIXED_VU).unwrap();
        assert_eq!(
            spatial_inertia(&phi, &j).unwrap().matrix(),
            &m2(4.0, 0.0, 0.0, 9.0)
        );
        let mut s = Sampler::new(83);
        let phi = LinMap::new(s.gaussian_matrix(3), Variance::MIXED_VU).unwrap();
        let j = LinMap::new(s.spd_matrix(3), Variance::CONTRAVARIANT_UU).unwrap();
        let out = spatial_inertia(&phi, &j).unwrap();
        assert_eq!(out.matrix(), &out.matrix().transpose());
    }

    #[test]
    fn constraint_examples() {
        let id = MetricTensor::identity(2);
        let cfg = config(DVector::zeros(2), DMatrix::identity(2, 2));
        let skew = VelocityState {
            v: DVector::zeros(2),
            big_v: m2(0.0, 1.0, -1.0, 0.0),
        };
        let av = affine_velocities(&cfg, &skew, &id, &id).unwrap();
        let r = constraint_predicates(&av, &id, &id, CONSTRAINT_TOL).unwrap();
        assert!(r.rigid_spatial && r.incompressible && !r.rotation_free);

        let dilation = VelocityState {
            v: DVector::zeros(2),
            big_v: DMatrix::identity(2, 2),
        };
        let av = affine_velocities(&cfg, &dilation, &id, &id).unwrap();
        let r = constraint_predicates(&av, &id, &id, CONSTRAINT_TOL).unwrap();
        assert!(!r.incompressible && r.rotation_free && !r.rigid_spatial);
    }

    #[test]
    fn inertia_validation() {
        assert!(BodyInertia::new(0.0, DMatrix::identity(2, 2)).is_err());
        assert!(BodyInertia::new(1.0, m2(1.0, 0.0, 0.0, -1.0)).is_err());
        let eta = MetricTensor::new(m2(2.0, 0.0, 0.0, 1.0)).unwrap();
        let b = BodyInertia::isotropic(1.0, 3.0, &eta).unwrap();
        assert_eq!(b.j(), &m2(1.5, 0.0, 0.0, 3.0));
    }
}
