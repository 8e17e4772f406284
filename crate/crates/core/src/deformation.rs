//! One-argument deformation tensors and deformation invariants.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spaces::{
    checked_inverse, expect_variance, logm, LinMap, MetricTensor, Variance,
};

/// Lagrange-side tensors of a configuration `phi: U -> V`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenFamily {
    /// `G_AB = g_ij phi^i_A phi^j_B`.
    pub g: LinMap,
    /// `G^A_B = eta^AC G_CB`.
    pub g_hat: LinMap,
    /// `G^AB = eta^AC G_CD eta^DB`.
    pub g_tilde: LinMap,
    /// Reciprocal of `G`, not to be confused with `g_tilde`.
    pub g_inv: LinMap,
    /// Lagrange tensor `E = (G - eta) / 2`.
    pub e: LinMap,
    pub e_hat: LinMap,
    pub e_tilde: LinMap,
    /// `log(G_hat) / 2`.
    pub log_strain: LinMap,
}

/// Euler-side tensors of a configuration `psi: U -> V`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyFamily {
    /// `C_ij = eta_AB psi^-1 A_i psi^-1 B_j`.
    pub c: LinMap,
    /// `C^i_j = g^ik C_kj`.
    pub c_hat: LinMap,
    pub c_tilde: LinMap,
    /// Push-forward of the reciprocal material metric, `psi eta^-1 psi*`.
    pub j_push: LinMap,
    /// Euler tensor `e = (g - C) / 2`.
    pub e: LinMap,
    /// `-log(C_hat) / 2`.
    pub log_strain: LinMap,
}

fn check_dims(psi: &LinMap, eta: &MetricTensor, g: &MetricTensor) -> Result<()> {
    expect_variance(psi, Variance::MIXED_VU)?;
    eta.check_dim(psi.dim())?;
    g.check_dim(psi.dim())
}

pub(crate) fn green_matrix(phi: &DMatrix<f64>, g: &MetricTensor) -> DMatrix<f64> {
    let gm = phi.transpose() * g.components() * phi;
    (&gm + gm.transpose()) * 0.5
}

/// Green deformation tensor, the pull-back of `g` by `phi`.
pub fn green(phi: &LinMap, g: &MetricTensor) -> Result<LinMap> {
    expect_variance(phi, Variance::MIXED_VU)?;
    g.check_dim(phi.dim())?;
    Ok(LinMap::from_parts(
        green_matrix(phi.matrix(), g),
        Variance::COVARIANT_UU,
    ))
}

/// Logarithm of an endomorphism that is self-adjoint with respect to `metric`.
///
/// For a definite metric `metric = L L^T` the map is similar to the symmetric
/// matrix `L^T X L^-T`, whose logarithm comes from a symmetric eigensolver.
pub(crate) fn self_adjoint_log(x: &DMatrix<f64>, metric: &MetricTensor) -> Result<DMatrix<f64>> {
    if metric.is_pseudo_euclidean() {
        return logm(x);
    }
    let chol = metric
        .components()
        .clone()
        .cholesky()
        .ok_or(Error::DegenerateMetric)?;
    let l = chol.l();
    let l_inv = checked_inverse(&l)?;
    let s = l.transpose() * x * l_inv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(Error::LogUndefined);
    }
    let logs = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::ln));
    let log_s = &eig.eigenvectors * logs * eig.eigenvectors.transpose();
    Ok(l_inv.transpose() * log_s * l.transpose())
}

pub fn green_family(phi: &LinMap, eta: &MetricTensor, g: &MetricTensor) -> Result<GreenFamily> {
    check_dims(phi, eta, g)?;
    let gm = green_matrix(phi.matrix(), g);
    let eta_inv = eta.inverse();
    let g_hat = eta_inv * &gm;
    let g_tilde = eta_inv * &gm * eta_inv;
    let g_inv = checked_inverse(&gm)?;
    let g_inv = (&g_inv + g_inv.transpose()) * 0.5;
    let e = (&gm - eta.components()) * 0.5;
    let e_hat = eta_inv * &e;
    let e_tilde = eta_inv * &e * eta_inv;
    let log_strain = self_adjoint_log(&g_hat, eta)? * 0.5;
    Ok(GreenFamily {
        g: LinMap::from_parts(gm, Variance::COVARIANT_UU),
        g_hat: LinMap::from_parts(g_hat, Variance::ENDO_U),
        g_tilde: LinMap::from_parts(g_tilde, Variance::CONTRAVARIANT_UU),
        g_inv: LinMap::from_parts(g_inv, Variance::CONTRAVARIANT_UU),
        e: LinMap::from_parts(e, Variance::COVARIANT_UU),
        e_hat: LinMap::from_parts(e_hat, Variance::ENDO_U),
        e_tilde: LinMap::from_parts(e_tilde, Variance::CONTRAVARIANT_UU),
        log_strain: LinMap::from_parts(log_strain, Variance::ENDO_U),
    })
}

pub(crate) fn push_inverse_metric_matrix(psi: &DMatrix<f64>, eta: &MetricTensor) -> DMatrix<f64> {
    let j = psi * eta.inverse() * psi.transpose();
    (&j + j.transpose()) * 0.5
}

/// `J[psi]^ij = psi^i_A psi^j_B eta^AB`; defined for singular `psi` too.
pub fn push_inverse_metric(psi: &LinMap, eta: &MetricTensor) -> Result<LinMap> {
    expect_variance(psi, Variance::MIXED_VU)?;
    eta.check_dim(psi.dim())?;
    Ok(LinMap::from_parts(
        push_inverse_metric_matrix(psi.matrix(), eta),
        Variance::CONTRAVARIANT_VV,
    ))
}

pub(crate) fn cauchy_matrix(psi: &DMatrix<f64>, eta: &MetricTensor) -> Result<DMatrix<f64>> {
    let inv = checked_inverse(psi)?;
    let c = inv.transpose() * eta.components() * inv;
    Ok((&c + c.transpose()) * 0.5)
}

pub fn cauchy_family(psi: &LinMap, eta: &MetricTensor, g: &MetricTensor) -> Result<CauchyFamily> {
    check_dims(psi, eta, g)?;
    let c = cauchy_matrix(psi.matrix(), eta)?;
    let g_inv = g.inverse();
    let c_hat = g_inv * &c;
    let c_tilde = g_inv * &c * g_inv;
    let j_push = push_inverse_metric_matrix(psi.matrix(), eta);
    let e = (g.components() - &c) * 0.5;
    let log_strain = self_adjoint_log(&c_hat, g)? * -0.5;
    Ok(CauchyFamily {
        c: LinMap::from_parts(c, Variance::COVARIANT_VV),
        c_hat: LinMap::from_parts(c_hat, Variance::ENDO_V),
        c_tilde: LinMap::from_parts(c_tilde, Variance::CONTRAVARIANT_VV),
        j_push: LinMap::from_parts(j_push, Variance::CONTRAVARIANT_VV),
        e: LinMap::from_parts(e, Variance::COVARIANT_VV),
        log_strain: LinMap::from_parts(log_strain, Variance::ENDO_V),
    })
}

/// Traces of the first `count` powers of `m`.
pub(crate) fn power_traces(m: &DMatrix<f64>, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut power = m.clone();
    for a in 0..count {
        if a > 0 {
            power = &power * m;
        }
        out.push(power.trace());
    }
    out
}

pub(crate) fn check_count(count: usize, n: usize) -> Result<()> {
    if count == 0 || count > n {
        return Err(Error::InvalidCount { count, n });
    }
    Ok(())
}

/// `K_a = Tr(G_hat[psi]^a)` for `a = 1..=count`.
pub fn deformation_invariants(
    psi: &LinMap,
    eta: &MetricTensor,
    g: &MetricTensor,
    count: usize,
) -> Result<Vec<f64>> {
    check_dims(psi, eta, g)?;
    check_count(count, psi.dim())?;
    let g_hat = eta.inverse() * green_matrix(psi.matrix(), g);
    Ok(power_traces(&g_hat, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampler;
    use crate::spaces::{expm, is_isometry, max_abs};
    use approx::assert_relative_eq;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    fn mixed(m: DMatrix<f64>) -> LinMap {
        LinMap::new(m, Variance::MIXED_VU).unwrap()
    }

    fn rotation(theta: f64) -> LinMap {
        let (s, c) = theta.sin_cos();
        mixed(m2(c, -s, s, c))
    }

    #[test]
    fn green_examples() {
        let id = MetricTensor::identity(2);
        let g = green(&rotation(0.7), &id).unwrap();
        assert!(max_abs(&(g.matrix() - DMatrix::identity(2, 2))) < 1e-15);
        assert_eq!(
            green(&mixed(m2(2.0, 0.0, 0.0, 3.0)), &id).unwrap().matrix(),
            &m2(4.0, 0.0, 0.0, 9.0)
        );
        let g2 = MetricTensor::new(m2(2.0, 0.0, 0.0, 1.0)).unwrap();
        let out = green(&mixed(m2(1.0, 1.0, 0.0, 1.0)), &g2).unwrap();
        assert_eq!(out.matrix(), &m2(2.0, 2.0, 2.0, 3.0));
        assert_eq!(out.variance(), Variance::COVARIANT_UU);
    }

    #[test]
    fn green_family_diagonal() {
        let id = MetricTensor::identity(2);
        let f = green_family(&mixed(m2(2.0, 0.0, 0.0, 3.0)), &id, &id).unwrap();
        assert_relative_eq!(f.g_hat.matrix(), &m2(4.0, 0.0, 0.0, 9.0));
        assert_relative_eq!(f.e.matrix(), &m2(1.5, 0.0, 0.0, 4.0));
        assert_relative_eq!(
            f.log_strain.matrix(),
            &m2(2f64.ln(), 0.0, 0.0, 3f64.ln()),
            epsilon = 1e-14
        );
    }

    #[test]
    fn green_family_isometry_is_undeformed() {
        let id = MetricTensor::identity(2);
        let f = green_family(&rotation(1.1), &id, &id).unwrap();
        assert!(f.e.max_abs() < 1e-15);
        assert!(f.e_hat.max_abs() < 1e-15);
        assert!(f.log_strain.max_abs() < 1e-14);
    }

    #[test]
    fn small_deformation_log_strain_matches_lagrange() {
        // log(I + 2E)/2 - E = -E^2 + O(E^3): the relative gap shrinks linearly
        let mut s = Sampler::new(11);
        let eta = MetricTensor::identity(3);
        let r = s.gaussian_matrix(3);
        let gap = |eps: f64| {
            let phi = mixed(DMatrix::identity(3, 3) + &r * eps);
            let f = green_family(&phi, &eta, &eta).unwrap();
            let e_norm = f.e_hat.matrix().norm();
            ((f.log_strain.matrix() - f.e_hat.matrix()).norm() / e_norm, e_norm)
        };
        let (rel, e_norm) = gap(1e-4);
        assert!(rel <= 2.0 * e_norm, "{rel} {e_norm}");
        let (rel_half, _) = gap(5e-5);
        let ratio = rel / rel_half;
        assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
        let (rel_tiny, _) = gap(1e-7);
        assert!(rel_tiny <= 1e-6, "{rel_tiny}");
    }

    #[test]
    fn log_strain_exponentiates_back() {
        let mut s = Sampler::new(3);
        for _ in 0..20 {
            let eta = s.spd_metric(3);
            let g = s.spd_metric(3);
            let phi = mixed(s.gl_matrix(3, 10.0));
            let f = green_family(&phi, &eta, &g).unwrap();
            let back = expm(&(f.log_strain.matrix() * 2.0));
            let rel = max_abs(&(back - f.g_hat.matrix())) / f.g_hat.max_abs();
            assert!(rel < 1e-10, "{rel}");
            let inv = f.g_inv.matrix() * f.g.matrix();
            assert!(max_abs(&(inv - DMatrix::identity(3, 3))) < 1e-9);
        }
    }

    #[test]
    fn g_tilde_equals_inverse_only_for_isometries() {
        let mut s = Sampler::new(5);
        let eta = s.spd_metric(2);
        let g = s.spd_metric(2);
        let phi = LinMap::from_parts(s.isometry(&eta, &g), Variance::MIXED_VU);
        assert!(is_isometry(&phi, &eta, &g, 1e-10));
        let f = green_family(&phi, &eta, &g).unwrap();
        assert!(f.g_tilde.max_abs_diff(&f.g_inv).unwrap() < 1e-9);

        let id = MetricTensor::identity(2);
        let f = green_family(&mixed(m2(2.0, 0.0, 0.0, 3.0)), &id, &id).unwrap();
        assert!(f.g_tilde.max_abs_diff(&f.g_inv).unwrap() > 1e-3);
    }

    #[test]
    fn cauchy_examples() {
        let id = MetricTensor::identity(2);
        let f = cauchy_family(&rotation(0.4), &id, &id).unwrap();
        assert!(max_abs(&(f.c.matrix() - DMatrix::identity(2, 2))) < 1e-15);
        assert!(f.e.max_abs() < 1e-15);
        assert!(f.log_strain.max_abs() < 1e-14);

        let f = cauchy_family(&mixed(m2(2.0, 0.0, 0.0, 3.0)), &id, &id).unwrap();
        assert_relative_eq!(f.c.matrix(), &m2(0.25, 0.0, 0.0, 1.0 / 9.0));
        assert_relative_eq!(f.j_push.matrix(), &m2(4.0, 0.0, 0.0, 9.0));
    }

    #[test]
    fn cauchy_and_push_are_reciprocal() {
        let mut s = Sampler::new(17);
        for _ in 0..100 {
            let eta = s.spd_metric(3);
            let g = s.spd_metric(3);
            let psi = mixed(s.gl_matrix(3, 1e3));
            let f = cauchy_family(&psi, &eta, &g).unwrap();
            let prod = f.c.matrix() * f.j_push.matrix();
            assert!(max_abs(&(prod - DMatrix::identity(3, 3))) <= 1e-9);
        }
        for _ in 0..100 {
            let eta = s.spd_metric(3);
            let g = s.spd_metric(3);
            let psi = mixed(s.gl_matrix(3, 1e2));
            let f = cauchy_family(&psi, &eta, &g).unwrap();
            // C_hat^-1 = psi psi^T with the (eta, g)-transpose
            let psi_t = crate::spaces::metric_transpose(&psi, &eta, &g).unwrap();
            let c_hat_inv = checked_inverse(f.c_hat.matrix()).unwrap();
            let rel = max_abs(&(c_hat_inv - psi.matrix() * psi_t.matrix()))
                / max_abs(&(psi.matrix() * psi_t.matrix()));
            assert!(rel < 1e-9, "{rel}");
            let back = expm(&(f.log_strain.matrix() * -2.0));
            let rel = max_abs(&(back - f.c_hat.matrix())) / f.c_hat.max_abs();
            assert!(rel < 1e-9, "{rel}");
        }
    }

    #[test]
    fn cauchy_needs_invertible_map() {
        let id = MetricTensor::identity(2);
        let singular = mixed(m2(1.0, 2.0, 2.0, 4.0));
        assert!(matches!(
            cauchy_family(&singular, &id, &id),
            Err(Error::SingularMap)
        ));
        assert!(push_inverse_metric(&singular, &id).is_ok());
    }

    #[test]
    fn deformation_invariant_examples() {
        let id = MetricTensor::identity(2);
        let k = deformation_invariants(&rotation(0.2), &id, &id, 2).unwrap();
        assert_relative_eq!(k[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(k[1], 2.0, epsilon = 1e-14);
        let k = deformation_invariants(&mixed(m2(2.0, 0.0, 0.0, 3.0)), &id, &id, 2).unwrap();
        assert_eq!(k, vec![13.0, 97.0]);
        assert!(matches!(
            deformation_invariants(&rotation(0.2), &id, &id, 3),
            Err(Error::InvalidCount { count: 3, n: 2 })
        ));
    }

    #[test]
    fn deformation_invariants_orthogonally_invariant() {
        let mut s = Sampler::new(23);
        for _ in 0..100 {
            let eta = s.spd_metric(3);
            let g = s.spd_metric(3);
            let psi = s.gl_matrix(3, 1e3);
            let a = s.orthogonal_for(&g);
            let b = s.orthogonal_for(&eta);
            let k0 = deformation_invariants(&mixed(psi.clone()), &eta, &g, 3).unwrap();
            let k1 = deformation_invariants(&mixed(&a * &psi * &b), &eta, &g, 3).unwrap();
            for (x, y) in k0.iter().zip(&k1) {
                assert!((x - y).abs() <= 1e-9 * x.abs(), "{x} {y}");
            }
        }
    }

    #[test]
    fn green_transformation_rules() {
        let mut s = Sampler::new(29);
        for _ in 0..50 {
            let eta = s.spd_metric(3);
            let g = s.spd_metric(3);
            let psi = s.gl_matrix(3, 1e2);
            let a = s.orthogonal_for(&g);
            let b = s.gl_matrix(3, 1e2);
            let big_a = s.gl_matrix(3, 1e2);
            let g0 = green_matrix(&psi, &g);
            let scale = max_abs(&g0);
            assert!(max_abs(&(green_matrix(&(&a * &psi), &g) - &g0)) <= 1e-9 * scale);
            let pulled = b.transpose() * &g0 * &b;
            let rel = max_abs(&(green_matrix(&(&psi * &b), &g) - &pulled)) / max_abs(&pulled);
            assert!(rel <= 1e-9);
            let j0 = push_inverse_metric_matrix(&psi, &eta);
            let pushed = &big_a * j0 * big_a.transpose();
            let j1 = push_inverse_metric_matrix(&(&big_a * &psi), &eta);
            assert!(max_abs(&(j1 - &pushed)) <= 1e-9 * max_abs(&pushed));
        }
    }

    #[test]
    fn green_hat_has_positive_spectrum() {
        let mut s = Sampler::new(31);
        for _ in 0..50 {
            let eta = s.spd_metric(3);
            let g = s.spd_metric(3);
            let phi = s.gl_matrix(3, 1e3);
            let g_hat = eta.inverse() * green_matrix(&phi, &g);
            for z in g_hat.complex_eigenvalues().iter() {
                assert!(z.re > 0.0 && z.im.abs() < 1e-8 * z.re.max(1.0));
            }
        }
    }
}
