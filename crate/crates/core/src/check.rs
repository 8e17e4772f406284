//! Randomized property suite: transposition algebra, transformation rules of
//! the mutual objects, invariance of `M_a` and `K_a`, Poisson structure
//! constants, Legendre round trips and gradient checks.
//!
//! Every property returns the largest error it observed. The report is a pure
//! function of the configuration.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{
    fd_gradient, legendre, legendre_inverse, poisson_bracket, Composed, Generator, Hamiltonian, KineticModel,
    LeftInternal, ModelHamiltonian, NoPotential, PhaseFunction, PhaseState,
};
use crate::error::{Error, Result};
use crate::kinematics::{BodyInertia, Configuration, VelocityState};
use crate::multibody::{fd_forces, forces, PotentialTerm};
use crate::mutual::{
    affine_invariants, mutual_displacement, mutual_metric_invariants, mutual_metric_invariants_via_cauchy,
    mutual_tensors,
};
use crate::sampling::Sampler;
use crate::spaces::{
    conjugate, contragredient, eta_transpose_of_inverse, g_transpose, metric_transpose, LinMap, MetricTensor, Space,
    Variance, MAX_DIM,
};

/// A `(psi, phi)` pair.
pub type MatrixPair = (DMatrix<f64>, DMatrix<f64>);

/// Largest condition number of the random group elements.
pub const MAX_CONDITION: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub dim: usize,
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    /// Negates one expected structure constant; the suite must then fail.
    pub sign_flip: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            dim: 3,
            seed: 7,
            trials: 20,
            tol: 1e-8,
            sign_flip: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
}

impl PropertyResult {
    pub fn pass(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub config: CheckConfig,
    pub results: Vec<PropertyResult>,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.results.iter().all(PropertyResult::pass)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(f, "check dim={} seed={} trials={} tol={:.1e}", c.dim, c.seed, c.trials, c.tol)?;
        for r in &self.results {
            writeln!(
                f,
                "{:<36} max_err={:.3e} tol={:.1e} {}",
                r.name,
                r.max_error,
                r.tolerance,
                if r.pass() { "ok" } else { "FAIL" }
            )?;
        }
        let passed = self.results.iter().filter(|r| r.pass()).count();
        write!(
            f,
            "result: {} ({}/{})",
            if self.pass() { "pass" } else { "fail" },
            passed,
            self.results.len()
        )
    }
}

/// `max |a - b| / max |b|`.
pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}

fn rel_scalar(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `sum |lambda_i|^a` over the eigenvalues of `m`: the size of the terms in
/// `Tr(m^a)`, and its scale when the terms cancel.
pub fn power_trace_scale(m: &DMatrix<f64>, a: usize) -> f64 {
    m.complex_eigenvalues().iter().map(|l| l.norm().powi(a as i32)).sum()
}

/// Errors of `Tr(m^a)`, `a = 1..`, relative to `power_trace_scale`.
fn power_trace_errors(got: &[f64], want: &[f64], m: &DMatrix<f64>) -> f64 {
    got.iter()
        .zip(want)
        .enumerate()
        .map(|(a, (x, y))| (x - y).abs() / power_trace_scale(m, a + 1).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn mutual_green_hat(psi: &DMatrix<f64>, phi: &DMatrix<f64>, eta: &MetricTensor, g: &MetricTensor) -> DMatrix<f64> {
    eta.inverse() * psi.transpose() * g.components() * phi
}

fn mixed(m: DMatrix<f64>) -> LinMap {
    LinMap::from_parts(m, Variance::MIXED_VU)
}

fn m(map: &LinMap) -> &DMatrix<f64> {
    map.matrix()
}

/// Involutions, (anti-)representation properties and the factorizations of
/// the metric transposes through lowering and raising.
pub fn transposition_algebra(s: &mut Sampler, n: usize, trials: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        let psi = mixed(s.gl_matrix(n, MAX_CONDITION));
        let phi = LinMap::from_parts(s.gl_matrix(n, MAX_CONDITION), Variance::ENDO_V);

        worst = worst.max(rel_err(m(&conjugate(&conjugate(&psi))), m(&psi)));
        let back = metric_transpose(&metric_transpose(&psi, &eta, &g)?, &eta, &g)?;
        worst = worst.max(rel_err(m(&back), m(&psi)));

        let composed = phi.compose(&psi)?;
        let anti = conjugate(&psi).compose(&conjugate(&phi))?;
        worst = worst.max(rel_err(m(&conjugate(&composed)), m(&anti)));
        let rep = contragredient(&phi)?.compose(&contragredient(&psi)?)?;
        worst = worst.max(rel_err(m(&contragredient(&composed)?), m(&rep)));

        let via_lowering = eta.raising(Space::U).compose(&g_transpose(&psi, &g)?)?;
        worst = worst.max(rel_err(m(&metric_transpose(&psi, &eta, &g)?), m(&via_lowering)));
        let inv_t = metric_transpose(&psi.inverse()?, &eta, &g)?;
        let via_lowering = g.raising(Space::V).compose(&eta_transpose_of_inverse(&psi, &eta)?)?;
        worst = worst.max(rel_err(m(&inv_t), m(&via_lowering)));
    }
    Ok(worst)
}

/// Behaviour of the mutual Green tensor, the mutual inverse metric, the
/// Cauchy tensor and the displacements under left and right actions.
pub fn transformation_rules(s: &mut Sampler, n: usize, trials: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        let psi = s.gl_matrix(n, MAX_CONDITION);
        let phi = s.gl_matrix(n, MAX_CONDITION);
        let a = s.gl_matrix(n, MAX_CONDITION);
        let b = s.gl_matrix(n, MAX_CONDITION);
        let a_iso = s.orthogonal_for(&g);
        let b_iso = s.orthogonal_for(&eta);
        let (a_inv, b_inv) = (a.clone().try_inverse().ok_or(Error::SingularMap)?, b.clone().try_inverse().ok_or(Error::SingularMap)?);

        let base = mutual_tensors(&mixed(psi.clone()), &mixed(phi.clone()), &eta, &g)?;
        let disp = mutual_displacement(&mixed(psi.clone()), &mixed(phi.clone()))?;
        let base_c = base.cauchy.as_ref().ok_or(Error::SingularMap)?;

        let moved = mutual_tensors(&mixed(&a_iso * &psi), &mixed(&a_iso * &phi), &eta, &g)?;
        worst = worst.max(rel_err(m(&moved.g_mut), m(&base.g_mut)));

        let moved = mutual_tensors(&mixed(&psi * &b), &mixed(&phi * &b), &eta, &g)?;
        worst = worst.max(rel_err(m(&moved.g_mut), &(b.transpose() * m(&base.g_mut) * &b)));

        let moved = mutual_tensors(&mixed(&psi * &b_iso), &mixed(&phi * &b_iso), &eta, &g)?;
        let moved_c = moved.cauchy.as_ref().ok_or(Error::SingularMap)?;
        worst = worst.max(rel_err(m(&moved_c.c_mut), m(&base_c.c_mut)));
        worst = worst.max(rel_err(m(&moved.j_mut), m(&base.j_mut)));

        let moved = mutual_tensors(&mixed(&a * &psi), &mixed(&a * &phi), &eta, &g)?;
        worst = worst.max(rel_err(m(&moved.j_mut), &(&a * m(&base.j_mut) * a.transpose())));

        let moved = mutual_displacement(&mixed(&a * &psi), &mixed(&a * &phi))?;
        worst = worst.max(rel_err(m(&moved.gamma), m(&disp.gamma)));
        worst = worst.max(rel_err(m(&moved.sigma_disp), &(&a * m(&disp.sigma_disp) * &a_inv)));

        let moved = mutual_displacement(&mixed(&psi * &b), &mixed(&phi * &b))?;
        worst = worst.max(rel_err(m(&moved.gamma), &(&b_inv * m(&disp.gamma) * &b)));
        worst = worst.max(rel_err(m(&moved.sigma_disp), m(&disp.sigma_disp)));
    }
    Ok(worst)
}

/// `M_a[A psi B, A phi B] = M_a[psi, phi]` for general `A`, `B`.
pub fn affine_invariance(s: &mut Sampler, n: usize, trials: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let psi = s.gl_matrix(n, MAX_CONDITION);
        let phi = s.gl_matrix(n, MAX_CONDITION);
        let a = s.gl_matrix(n, MAX_CONDITION);
        let b = s.gl_matrix(n, MAX_CONDITION);
        let base = affine_invariants(&mixed(psi.clone()), &mixed(phi.clone()), n)?;
        let moved = affine_invariants(&mixed(&a * &psi * &b), &mixed(&a * &phi * &b), n)?;
        let gamma = psi.clone().full_piv_lu().solve(&phi).ok_or(Error::SingularMap)?;
        worst = worst.max(power_trace_errors(&moved, &base, &gamma));
    }
    Ok(worst)
}

/// `K_a` unchanged under simultaneous isometries of both spaces.
pub fn orthogonal_invariance(s: &mut Sampler, n: usize, trials: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        let psi = s.gl_matrix(n, MAX_CONDITION);
        let phi = s.gl_matrix(n, MAX_CONDITION);
        let a = s.orthogonal_for(&g);
        let b = s.orthogonal_for(&eta);
        let base = mutual_metric_invariants(&mixed(psi.clone()), &mixed(phi.clone()), &eta, &g, n)?;
        let moved = mutual_metric_invariants(&mixed(&a * &psi * &b), &mixed(&a * &phi * &b), &eta, &g, n)?;
        worst = worst.max(power_trace_errors(&moved, &base, &mutual_green_hat(&psi, &phi, &eta, &g)));
    }
    Ok(worst)
}

/// `Tr(G_hat[psi, phi]^a)` against `Tr(C_hat[psi, phi]^-a)`.
pub fn cauchy_trace_consistency(s: &mut Sampler, n: usize, trials: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        let (psi, phi) = (s.gl_matrix(n, MAX_CONDITION), s.gl_matrix(n, MAX_CONDITION));
        let green = mutual_metric_invariants(&mixed(psi.clone()), &mixed(phi.clone()), &eta, &g, n)?;
        let cauchy = mutual_metric_invariants_via_cauchy(&mixed(psi.clone()), &mixed(phi.clone()), &eta, &g, n)?;
        worst = worst.max(power_trace_errors(&cauchy, &green, &mutual_green_hat(&psi, &phi, &eta, &g)));
    }
    Ok(worst)
}

/// Absolute errors `|G_hat - Gamma|` for isometric `psi` and `|C_hat - Sigma|`
/// for isometric `phi`.
pub fn isometry_specializations(s: &mut Sampler, n: usize, trials: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        let iso = mixed(s.isometry(&eta, &g));
        let other = mixed(s.gl_matrix(n, 100.0));
        let t = mutual_tensors(&iso, &other, &eta, &g)?;
        let d = mutual_displacement(&iso, &other)?;
        worst = worst.max((m(&t.g_mut_hat) - m(&d.gamma)).norm());
        let t = mutual_tensors(&other, &iso, &eta, &g)?;
        let d = mutual_displacement(&other, &iso)?;
        let c_hat = &t.cauchy.as_ref().ok_or(Error::SingularMap)?.c_mut_hat;
        worst = worst.max((m(c_hat) - m(&d.sigma_disp)).norm());
    }
    Ok(worst)
}

/// Two pairs with identical `K_1..K_n` but different `M_1` (identity metrics):
/// `(I, X)` and `(psi, psi^-T X)` share `G_hat = X` while `Gamma` differs.
pub fn m_not_function_of_k_fixture() -> [(DMatrix<f64>, DMatrix<f64>); 2] {
    let x = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
    let psi = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
    let psi_inv_t = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0]));
    [(DMatrix::identity(2, 2), x.clone()), (psi, psi_inv_t * x)]
}

/// Seeded search for a random pair sharing `K_a` with `(I, X)` but with a
/// different `M_1`; returns the two pairs and their `M_1` gap.
pub fn search_m_not_function_of_k(
    s: &mut Sampler,
    n: usize,
) -> Result<(MatrixPair, MatrixPair, f64)> {
    let id = MetricTensor::identity(n);
    for _ in 0..100 {
        let x = s.gl_matrix(n, 10.0);
        let psi = s.gl_matrix(n, 10.0);
        let psi_inv_t = psi.clone().try_inverse().ok_or(Error::SingularMap)?.transpose();
        let first = (DMatrix::identity(n, n), x.clone());
        let second = (psi, psi_inv_t * x);
        let k1 = mutual_metric_invariants(&mixed(first.0.clone()), &mixed(first.1.clone()), &id, &id, n)?;
        let k2 = mutual_metric_invariants(&mixed(second.0.clone()), &mixed(second.1.clone()), &id, &id, n)?;
        if k1.iter().zip(&k2).any(|(a, b)| rel_scalar(*b, *a) > 1e-10) {
            continue;
        }
        let m1 = affine_invariants(&mixed(first.0.clone()), &mixed(first.1.clone()), 1)?[0];
        let m2 = affine_invariants(&mixed(second.0.clone()), &mixed(second.1.clone()), 1)?[0];
        let gap = (m1 - m2).abs();
        if gap > 1e-3 * m1.abs().max(1.0) {
            return Ok((first, second, gap));
        }
    }
    Err(Error::InvalidParameter("no witness pair found".into()))
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

pub fn random_phase_state(s: &mut Sampler, n: usize) -> PhaseState {
    PhaseState {
        x: s.gaussian_vector(n),
        phi: s.gl_matrix(n, 10.0),
        p: s.gaussian_vector(n),
        big_p: s.gaussian_matrix(n),
    }
}

/// Absolute error of the brackets among `Sigma`, `Lambda`, `J`, `Sigma_hat`,
/// `p_hat` and `p` against their structure constants.
pub fn structure_constants(s: &mut Sampler, n: usize, points: usize, sign_flip: bool) -> f64 {
    let flip = if sign_flip { -1.0 } else { 1.0 };
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let st = random_phase_state(s, n);
        let v = |g: Generator| g.value(&st);
        let pb = |a: Generator, b: Generator| poisson_bracket(&a, &b, &st);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        for ctor in [Generator::Spin, Generator::Lambda, Generator::JTotal] {
                            let expect = flip * (delta(i, l) * v(ctor(k, j)) - delta(k, j) * v(ctor(i, l)));
                            worst = worst.max((pb(ctor(i, j), ctor(k, l)) - expect).abs());
                        }
                        let expect =
                            delta(k, j) * v(Generator::SpinHat(i, l)) - delta(i, l) * v(Generator::SpinHat(k, j));
                        worst = worst.max((pb(Generator::SpinHat(i, j), Generator::SpinHat(k, l)) - expect).abs());
                        worst = worst.max(pb(Generator::Spin(i, j), Generator::SpinHat(k, l)).abs());
                    }
                    let expect = -delta(i, k) * v(Generator::PHat(j));
                    worst = worst.max((pb(Generator::SpinHat(i, j), Generator::PHat(k)) - expect).abs());
                    let expect = delta(i, k) * v(Generator::Momentum(j));
                    worst = worst.max((pb(Generator::JTotal(i, j), Generator::Momentum(k)) - expect).abs());
                    worst = worst.max((pb(Generator::Lambda(i, j), Generator::Momentum(k)) - expect).abs());
                }
            }
        }
    }
    worst
}

/// Brackets of configuration functions with `Sigma`, `Lambda` and `Sigma_hat`,
/// checked for `det phi` and `x^1 phi^2_1`.
pub fn configuration_brackets(s: &mut Sampler, n: usize, points: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let fs = if n >= 2 {
        vec![Generator::DetPhi, Generator::XPhi { i: 0, j: 1, a: 0 }]
    } else {
        vec![Generator::DetPhi, Generator::XPhi { i: 0, j: 0, a: 0 }]
    };
    for _ in 0..points {
        let st = random_phase_state(s, n);
        for f in &fs {
            let df = f.gradient(&st);
            for i in 0..n {
                for j in 0..n {
                    let expect: f64 = (0..n).map(|a| st.phi[(i, a)] * df.dphi[(j, a)]).sum();
                    worst = worst.max((poisson_bracket(f, &Generator::Spin(i, j), &st) - expect).abs());
                    let expect = st.x[i] * df.dx[j];
                    worst = worst.max((poisson_bracket(f, &Generator::Lambda(i, j), &st) - expect).abs());
                    let expect: f64 = (0..n).map(|k| st.phi[(k, j)] * df.dphi[(k, i)]).sum();
                    worst = worst.max((poisson_bracket(f, &Generator::SpinHat(i, j), &st) - expect).abs());
                }
            }
        }
    }
    worst
}

/// `{F^2, G} = 2F {F, G}` with the left side differentiated numerically.
pub fn chain_rule(s: &mut Sampler, n: usize, points: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let st = PhaseState {
            x: s.gaussian_vector(n),
            phi: DMatrix::identity(n, n) + s.gaussian_matrix(n) * 0.3,
            p: s.gaussian_vector(n),
            big_p: s.gaussian_matrix(n),
        };
        let last = n - 1;
        let f = Generator::Spin(0, last);
        let sq = Composed {
            inner: &f,
            f: |v| v * v,
        };
        for g in [Generator::SpinHat(last, last), Generator::Phi(last, 0), Generator::PHat(0), Generator::X(0)] {
            let lhs = poisson_bracket(&sq, &g, &st);
            let rhs = 2.0 * f.value(&st) * poisson_bracket(&f, &g, &st);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// One representative of every kinetic model family with a regular inertia.
pub fn sample_models(s: &mut Sampler, eta: &MetricTensor) -> Result<Vec<KineticModel>> {
    let n = eta.dim();
    Ok(vec![
        KineticModel::DAlembert(BodyInertia::new(1.0 + s.uniform(0.0, 1.0), s.spd_matrix(n))?),
        KineticModel::LeftAffine {
            mass: 1.0 + s.uniform(0.0, 1.0),
            internal: LeftInternal::Isotropic {
                i: 1.5,
                a: s.uniform(-0.5, 0.5),
                b: s.uniform(0.0, 0.5),
            },
        },
        KineticModel::RightAffine {
            mass: 1.0 + s.uniform(0.0, 1.0),
            i: 1.5,
            a: s.uniform(-0.5, 0.5),
            b: s.uniform(0.0, 0.5),
        },
        KineticModel::IsometricGeneral {
            m1: 0.5 + s.uniform(0.0, 1.0),
            m2: 0.5 + s.uniform(0.0, 1.0),
            i1: 0.5,
            i2: 0.5,
            i3: s.uniform(0.0, 0.5),
            i4: s.uniform(0.0, 0.5),
            a: s.uniform(-0.2, 0.2),
            b: s.uniform(0.0, 0.2),
        },
    ])
}

fn random_config(s: &mut Sampler, n: usize, cond: f64) -> Result<Configuration> {
    Configuration::new(s.gaussian_vector(n), mixed(s.gl_matrix(n, cond)))
}

fn velocity_rel_err(a: &VelocityState, b: &VelocityState) -> f64 {
    let scale = b.v.amax().max(b.big_v.amax());
    (&a.v - &b.v).amax().max((&a.big_v - &b.big_v).amax()) / scale.max(f64::MIN_POSITIVE)
}

/// `legendre_inverse(legendre(v)) = v` for all model families.
pub fn legendre_round_trip(s: &mut Sampler, n: usize, trials: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        for model in sample_models(s, &eta)? {
            let cfg = random_config(s, n, 10.0)?;
            let vel = VelocityState {
                v: s.gaussian_vector(n),
                big_v: s.gaussian_matrix(n),
            };
            let (p, big_p) = legendre(&model, &cfg, &vel, &eta, &g)?;
            let back = legendre_inverse(&model, &cfg, &p, &big_p, &eta, &g)?;
            worst = worst.max(velocity_rel_err(&back, &vel));
        }
    }
    Ok(worst)
}

/// Analytic Hamiltonian gradient against central differences, relative to
/// the largest component.
pub fn hamiltonian_gradient(s: &mut Sampler, n: usize, trials: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        for model in sample_models(s, &eta)? {
            let h = ModelHamiltonian::new(vec![model], eta.clone(), g.clone(), NoPotential)?;
            let st = [PhaseState {
                phi: s.gl_matrix(n, 5.0),
                ..random_phase_state(s, n)
            }];
            let analytic = h.gradient(&st)?;
            let numeric = fd_gradient(&h, &st)?;
            let (mut fa, mut fb) = (Vec::new(), Vec::new());
            analytic[0].flatten_into(&mut fa);
            numeric[0].flatten_into(&mut fb);
            let (da, db) = (DVector::from_vec(fa), DVector::from_vec(fb));
            worst = worst.max((&da - &db).amax() / db.amax().max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// Analytic potential forces against central differences.
pub fn potential_gradient(s: &mut Sampler, n: usize, trials: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        let terms = vec![
            PotentialTerm::SpatialSpring {
                k: 1.0 + s.uniform(0.0, 1.0),
                rest_length: s.uniform(0.0, 1.0),
                pair: (0, 1),
            },
            PotentialTerm::mutual_affine(n, vec![0.3; n], (1, 0)),
            PotentialTerm::mutual_metric(n, vec![0.2; n], (0, 1)),
            PotentialTerm::DilatationStabilizer { k: 0.5, body: 1 },
        ];
        let states: Vec<PhaseState> = (0..2)
            .map(|_| PhaseState {
                phi: s.gl_matrix(n, 5.0),
                ..random_phase_state(s, n)
            })
            .collect();
        let a = forces(&states, &terms, &eta, &g)?;
        let f = fd_forces(&states, &terms, &eta, &g)?;
        let mut num: f64 = 0.0;
        let mut den: f64 = f64::MIN_POSITIVE;
        for ((ax, ap), (fx, fp)) in a.iter().zip(&f) {
            num = num.max((ax - fx).amax()).max((ap - fp).amax());
            den = den.max(fx.amax()).max(fp.amax());
        }
        worst = worst.max(num / den);
    }
    Ok(worst)
}

/// Runs the whole suite. Finite-difference based properties are held to
/// `100 * tol`.
pub fn run_checks(config: &CheckConfig) -> Result<CheckReport> {
    let n = config.dim;
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(config.tol.is_finite() && config.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", config.tol)));
    }
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let t = config.trials;
    let tol = config.tol;
    let mut index = 0u64;
    let mut sampler = || {
        index += 1;
        Sampler::new(config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index))
    };
    let mut results = Vec::new();
    let mut push = |name, max_error, tolerance| {
        results.push(PropertyResult {
            name,
            max_error,
            tolerance,
        })
    };
    push("transposition algebra", transposition_algebra(&mut sampler(), n, t)?, tol);
    push("mutual transformation rules", transformation_rules(&mut sampler(), n, t)?, tol);
    push("affine invariance of M_a", affine_invariance(&mut sampler(), n, t)?, tol);
    push("orthogonal invariance of K_a", orthogonal_invariance(&mut sampler(), n, t)?, tol);
    push("K_a via Cauchy tensor", cauchy_trace_consistency(&mut sampler(), n, t)?, tol);
    push("isometry specializations", isometry_specializations(&mut sampler(), n, t)?, tol);
    push(
        "bracket structure constants",
        structure_constants(&mut sampler(), n, t, config.sign_flip),
        tol,
    );
    push("configuration-function brackets", configuration_brackets(&mut sampler(), n, t), tol);
    push("bracket chain rule", chain_rule(&mut sampler(), n, t), 100.0 * tol);
    push("Legendre round trip", legendre_round_trip(&mut sampler(), n, t)?, tol);
    push("Hamiltonian gradient", hamiltonian_gradient(&mut sampler(), n, t)?, 100.0 * tol);
    push("potential gradient", potential_gradient(&mut sampler(), n, t)?, 100.0 * tol);
    Ok(CheckReport {
        config: config.clone(),
        results,
    })
}
