//! Systems of affine bodies: additive kinetic energy, binary potentials built
//! from mutual invariants, total momentum maps and conservation diagnostics.
//!
//! Body indices are zero-based here; errors report them one-based.

use nalgebra::{DMatrix, DVector};

use crate::deformation::{green_matrix, power_traces};
use crate::dynamics::{
    kinetic_energy, kinetic_hamiltonian, metric_skew, Integrator, KineticModel, ModelHamiltonian, MomentumMaps,
    PhaseState, Potential, Sample,
};
use crate::error::{Error, Result};
use crate::kinematics::{Configuration, VelocityState};
use crate::mutual::mutual_green_hat_matrix;
use crate::spaces::{checked_inverse, LinMap, MetricTensor, Variance};

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialTerm {
    /// `k (|x_K - x_L|_g - r0)^2 / 2`.
    SpatialSpring { k: f64, rest_length: f64, pair: (usize, usize) },
    /// `sum_a kappa_a (M_a[phi_K, phi_L] - M0_a)^2 / 2`.
    MutualAffine { kappa: Vec<f64>, reference: Vec<f64>, pair: (usize, usize) },
    /// `sum_a kappa_a (K_a[phi_K, phi_L] - K0_a)^2 / 2`.
    MutualMetric { kappa: Vec<f64>, reference: Vec<f64>, pair: (usize, usize) },
    /// `k (ln det G_hat[phi_K])^2 / 2`.
    DilatationStabilizer { k: f64, body: usize },
}

impl PotentialTerm {
    /// Mutual-affine term with the undeformed reference `M0_a = n`.
    pub fn mutual_affine(n: usize, kappa: Vec<f64>, pair: (usize, usize)) -> Self {
        PotentialTerm::MutualAffine {
            reference: vec![n as f64; kappa.len()],
            kappa,
            pair,
        }
    }

    /// Mutual-metric term with the undeformed reference `K0_a = n`.
    pub fn mutual_metric(n: usize, kappa: Vec<f64>, pair: (usize, usize)) -> Self {
        PotentialTerm::MutualMetric {
            reference: vec![n as f64; kappa.len()],
            kappa,
            pair,
        }
    }

    pub fn pair(&self) -> Option<(usize, usize)> {
        match self {
            PotentialTerm::SpatialSpring { pair, .. }
            | PotentialTerm::MutualAffine { pair, .. }
            | PotentialTerm::MutualMetric { pair, .. } => Some(*pair),
            PotentialTerm::DilatationStabilizer { .. } => None,
        }
    }

    fn bodies(&self) -> Vec<usize> {
        match self {
            PotentialTerm::DilatationStabilizer { body, .. } => vec![*body],
            _ => {
                let (k, l) = self.pair().unwrap_or_default();
                vec![k, l]
            }
        }
    }

    pub fn validate(&self, n: usize, bodies: usize) -> Result<()> {
        for index in self.bodies() {
            if index >= bodies {
                return Err(Error::BadPairIndex {
                    index: index + 1,
                    bodies,
                });
            }
        }
        if let Some((k, l)) = self.pair() {
            if k == l {
                return Err(Error::InvalidParameter(format!("pair couples body {} with itself", k + 1)));
            }
        }
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite")))
            }
        };
        match self {
            PotentialTerm::SpatialSpring { k, rest_length, .. } => {
                finite("k", *k)?;
                finite("rest_length", *rest_length)?;
                if *rest_length < 0.0 {
                    return Err(Error::InvalidParameter("rest_length must be non-negative".into()));
                }
            }
            PotentialTerm::MutualAffine { kappa, reference, .. }
            | PotentialTerm::MutualMetric { kappa, reference, .. } => {
                if kappa.is_empty() || kappa.len() > n {
                    return Err(Error::InvalidCount { count: kappa.len(), n });
                }
                if reference.len() != kappa.len() {
                    return Err(Error::DimensionMismatch {
                        expected: kappa.len(),
                        found: reference.len(),
                    });
                }
                for v in kappa.iter().chain(reference) {
                    finite("coefficient", *v)?;
                }
            }
            PotentialTerm::DilatationStabilizer { k, .. } => finite("k", *k)?,
        }
        Ok(())
    }
}

/// Invariants with their gradients by `psi` and by `phi`.
type TermGradients = (Vec<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>);

/// `M_a = Tr((psi^-1 phi)^a)` and their gradients by `psi` and `phi`.
fn affine_term(
    psi: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    count: usize,
) -> Result<TermGradients> {
    let psi_inv = checked_inverse(psi)?;
    checked_inverse(phi)?;
    let gamma = &psi_inv * phi;
    let n = psi.nrows();
    let (mut values, mut d_psi, mut d_phi) = (Vec::new(), Vec::new(), Vec::new());
    let mut prev = DMatrix::identity(n, n);
    for a in 1..=count {
        let cur = &prev * &gamma;
        values.push(cur.trace());
        let af = a as f64;
        d_phi.push((&prev * &psi_inv).transpose() * af);
        d_psi.push((&cur * &psi_inv).transpose() * -af);
        prev = cur;
    }
    Ok((values, d_psi, d_phi))
}

/// `K_a = Tr(G_hat[psi, phi]^a)` and their gradients.
fn metric_term(
    psi: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    count: usize,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> (Vec<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let g_hat = mutual_green_hat_matrix(psi, phi, eta, g);
    let n = psi.nrows();
    let left = eta.inverse() * psi.transpose() * g.components();
    let right = g.components() * phi;
    let (mut values, mut d_psi, mut d_phi) = (Vec::new(), Vec::new(), Vec::new());
    let mut prev = DMatrix::identity(n, n);
    for a in 1..=count {
        let af = a as f64;
        values.push((&prev * &g_hat).trace());
        d_phi.push((&prev * &left).transpose() * af);
        d_psi.push(&right * &prev * eta.inverse() * af);
        prev = &prev * &g_hat;
    }
    (values, d_psi, d_phi)
}

type BodyGradient = (DVector<f64>, DMatrix<f64>);

fn term_value_and_gradient(
    term: &PotentialTerm,
    states: &[PhaseState],
    eta: &MetricTensor,
    g: &MetricTensor,
    grads: Option<&mut [BodyGradient]>,
) -> Result<f64> {
    match term {
        PotentialTerm::SpatialSpring { k, rest_length, pair } => {
            let d = &states[pair.0].x - &states[pair.1].x;
            let gd = g.components() * &d;
            let r = d.dot(&gd).max(0.0).sqrt();
            let value = 0.5 * k * (r - rest_length).powi(2);
            if let Some(grads) = grads {
                let force = if *rest_length == 0.0 {
                    gd * *k
                } else if r == 0.0 {
                    DVector::zeros(d.len())
                } else {
                    gd * (k * (r - rest_length) / r)
                };
                grads[pair.0].0 += &force;
                grads[pair.1].0 -= &force;
            }
            Ok(value)
        }
        PotentialTerm::MutualAffine { kappa, reference, pair }
        | PotentialTerm::MutualMetric { kappa, reference, pair } => {
            let (psi, phi) = (&states[pair.0].phi, &states[pair.1].phi);
            let (values, d_psi, d_phi) = match term {
                PotentialTerm::MutualAffine { .. } => affine_term(psi, phi, kappa.len())?,
                _ => metric_term(psi, phi, kappa.len(), eta, g),
            };
            let mut total = 0.0;
            let mut grads = grads;
            for (a, ((v, v0), kap)) in values.iter().zip(reference).zip(kappa).enumerate() {
                let dev = v - v0;
                total += 0.5 * kap * dev * dev;
                if let Some(grads) = grads.as_deref_mut() {
                    grads[pair.0].1 += &d_psi[a] * (kap * dev);
                    grads[pair.1].1 += &d_phi[a] * (kap * dev);
                }
            }
            Ok(total)
        }
        PotentialTerm::DilatationStabilizer { k, body } => {
            let phi = &states[*body].phi;
            let det = phi.determinant();
            if det == 0.0 {
                return Err(Error::SingularMap);
            }
            let l = 2.0 * det.abs().ln() + log_det(g.components()) - log_det(eta.components());
            if let Some(grads) = grads {
                grads[*body].1 += checked_inverse(phi)?.transpose() * (2.0 * k * l);
            }
            Ok(0.5 * k * l * l)
        }
    }
}

fn log_det(m: &DMatrix<f64>) -> f64 {
    m.determinant().abs().ln()
}

fn check_states(states: &[PhaseState], n: usize) -> Result<()> {
    for (k, s) in states.iter().enumerate() {
        if s.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.dim(),
            }
            .in_body(k + 1));
        }
    }
    Ok(())
}

/// Sum of the term values in array order.
pub fn potential_energy(
    states: &[PhaseState],
    terms: &[PotentialTerm],
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<f64> {
    let n = eta.dim();
    g.check_dim(n)?;
    check_states(states, n)?;
    let mut total = 0.0;
    for (t, term) in terms.iter().enumerate() {
        let tag = |e: Error| e.in_term(t + 1);
        term.validate(n, states.len()).map_err(tag)?;
        total += term_value_and_gradient(term, states, eta, g, None).map_err(tag)?;
    }
    Ok(total)
}

/// Per-body gradient `(dV/dx, dV/dphi)` of the potential.
pub fn forces(
    states: &[PhaseState],
    terms: &[PotentialTerm],
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<Vec<BodyGradient>> {
    let n = eta.dim();
    g.check_dim(n)?;
    check_states(states, n)?;
    let mut grads: Vec<BodyGradient> = states
        .iter()
        .map(|_| (DVector::zeros(n), DMatrix::zeros(n, n)))
        .collect();
    for (t, term) in terms.iter().enumerate() {
        let tag = |e: Error| e.in_term(t + 1);
        term.validate(n, states.len()).map_err(tag)?;
        term_value_and_gradient(term, states, eta, g, Some(&mut grads)).map_err(tag)?;
    }
    Ok(grads)
}

/// The same gradient by central differences of [`potential_energy`].
pub fn fd_forces(
    states: &[PhaseState],
    terms: &[PotentialTerm],
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<Vec<BodyGradient>> {
    let n = eta.dim();
    let mut probe = states.to_vec();
    let mut out = Vec::with_capacity(states.len());
    for k in 0..states.len() {
        let mut dx = DVector::zeros(n);
        let mut dphi = DMatrix::zeros(n, n);
        for mu in 0..n + n * n {
            let read = |s: &PhaseState| if mu < n { s.x[mu] } else { s.phi[((mu - n) / n, (mu - n) % n)] };
            let write = |s: &mut PhaseState, v: f64| {
                if mu < n {
                    s.x[mu] = v
                } else {
                    s.phi[((mu - n) / n, (mu - n) % n)] = v
                }
            };
            let q = read(&states[k]);
            let h = crate::dynamics::fd_step(q);
            write(&mut probe[k], q + h);
            let up = potential_energy(&probe, terms, eta, g)?;
            write(&mut probe[k], q - h);
            let down = potential_energy(&probe, terms, eta, g)?;
            write(&mut probe[k], q);
            let d = (up - down) / (2.0 * h);
            if mu < n {
                dx[mu] = d;
            } else {
                dphi[((mu - n) / n, (mu - n) % n)] = d;
            }
        }
        out.push((dx, dphi));
    }
    Ok(out)
}

/// Potential part of a system Hamiltonian.
#[derive(Debug, Clone)]
pub struct SystemPotential {
    pub terms: Vec<PotentialTerm>,
    pub eta: MetricTensor,
    pub g: MetricTensor,
}

impl Potential for SystemPotential {
    fn value(&self, configs: &[PhaseState]) -> Result<f64> {
        potential_energy(configs, &self.terms, &self.eta, &self.g)
    }

    fn gradient(&self, configs: &[PhaseState]) -> Result<Vec<BodyGradient>> {
        forces(configs, &self.terms, &self.eta, &self.g)
    }
}

pub type SystemHamiltonian = ModelHamiltonian<SystemPotential>;

/// `H = sum_K T(K) + sum of potential terms`.
pub fn system_hamiltonian(
    models: Vec<KineticModel>,
    terms: Vec<PotentialTerm>,
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<SystemHamiltonian> {
    let n = eta.dim();
    for (t, term) in terms.iter().enumerate() {
        term.validate(n, models.len()).map_err(|e| e.in_term(t + 1))?;
    }
    let potential = SystemPotential {
        terms,
        eta: eta.clone(),
        g: g.clone(),
    };
    ModelHamiltonian::new(models, eta.clone(), g.clone(), potential)
}

/// Additive kinetic energy from generalized velocities.
pub fn total_kinetic_from_velocities(
    models: &[KineticModel],
    configs: &[Configuration],
    velocities: &[VelocityState],
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<f64> {
    if configs.len() != models.len() || velocities.len() != models.len() {
        return Err(Error::DimensionMismatch {
            expected: models.len(),
            found: configs.len().min(velocities.len()),
        });
    }
    let mut total = 0.0;
    for (k, ((m, c), v)) in models.iter().zip(configs).zip(velocities).enumerate() {
        total += kinetic_energy(m, c, v, eta, g).map_err(|e| e.in_body(k + 1))?;
    }
    Ok(total)
}

/// Additive kinetic energy from canonical momenta.
pub fn total_kinetic(
    models: &[KineticModel],
    states: &[PhaseState],
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<f64> {
    if states.len() != models.len() {
        return Err(Error::DimensionMismatch {
            expected: models.len(),
            found: states.len(),
        });
    }
    let mut total = 0.0;
    for (k, (m, s)) in models.iter().zip(states).enumerate() {
        total += kinetic_hamiltonian(m, s, eta, g).map_err(|e| e.in_body(k + 1))?.0;
    }
    Ok(total)
}

/// Componentwise sums of the per-body momentum maps, in body order.
pub fn total_momentum_maps(
    states: &[PhaseState],
    eta: &MetricTensor,
    g: &MetricTensor,
    origin: &DVector<f64>,
) -> Result<(DVector<f64>, MomentumMaps)> {
    let n = eta.dim();
    g.check_dim(n)?;
    check_states(states, n)?;
    let mut p = DVector::zeros(n);
    let mut maps = [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
    let mut p_hat = DVector::zeros(n);
    for (k, s) in states.iter().enumerate() {
        let m = crate::dynamics::momentum_maps(s, eta, g, origin).map_err(|e| e.in_body(k + 1))?;
        p += &s.p;
        p_hat += &m.p_hat;
        maps[0] += m.spin.matrix();
        maps[1] += m.spin_hat.matrix();
        maps[2] += m.lambda.matrix();
    }
    let [spin, spin_hat, lambda] = maps;
    let j_total = &lambda + &spin;
    let s = metric_skew(&spin, g);
    let vorticity = metric_skew(&spin_hat, eta);
    let endo_v = |m| LinMap::from_parts(m, Variance::ENDO_V);
    Ok((
        p,
        MomentumMaps {
            p_hat,
            spin_hat: LinMap::from_parts(spin_hat, Variance::ENDO_U),
            vorticity: LinMap::from_parts(vorticity, Variance::ENDO_U),
            spin: endo_v(spin),
            lambda: endo_v(lambda),
            j_total: endo_v(j_total),
            s: endo_v(s),
        },
    ))
}

/// Deformation invariants `K_a = Tr(G_hat[phi]^a)`, `a = 1..=n`.
pub fn body_invariants(phi: &DMatrix<f64>, eta: &MetricTensor, g: &MetricTensor) -> Vec<f64> {
    power_traces(&(eta.inverse() * green_matrix(phi, g)), phi.nrows())
}

/// A quantity whose conservation can be checked along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Energy,
    TotalMomentum,
    /// Total `Lambda + Sigma` about the origin.
    TotalAffineMomentum,
    /// g-skew part of the total affine momentum.
    TotalAngularMomentum,
    Spin(usize),
    SpinHat(usize),
    SpinAngular(usize),
    Vorticity(usize),
}

impl Quantity {
    pub fn name(&self) -> String {
        match self {
            Quantity::Energy => "energy".into(),
            Quantity::TotalMomentum => "total p".into(),
            Quantity::TotalAffineMomentum => "total J".into(),
            Quantity::TotalAngularMomentum => "total angular momentum".into(),
            Quantity::Spin(k) => format!("Sigma of body {}", k + 1),
            Quantity::SpinHat(k) => format!("Sigma_hat of body {}", k + 1),
            Quantity::SpinAngular(k) => format!("S of body {}", k + 1),
            Quantity::Vorticity(k) => format!("vorticity of body {}", k + 1),
        }
    }

    fn sample(&self, sample: &Sample, eta: &MetricTensor, g: &MetricTensor) -> Result<Vec<f64>> {
        let n = eta.dim();
        let zero = DVector::zeros(n);
        let one = |k: usize| crate::dynamics::momentum_maps(&sample.states[k], eta, g, &zero);
        let flat = |m: &LinMap| m.matrix().iter().copied().collect::<Vec<f64>>();
        Ok(match *self {
            Quantity::Energy => vec![sample.energy],
            Quantity::TotalMomentum => total_momentum_maps(&sample.states, eta, g, &zero)?.0.iter().copied().collect(),
            Quantity::TotalAffineMomentum => flat(&total_momentum_maps(&sample.states, eta, g, &zero)?.1.j_total),
            Quantity::TotalAngularMomentum => {
                let j = total_momentum_maps(&sample.states, eta, g, &zero)?.1.j_total;
                metric_skew(j.matrix(), g).iter().copied().collect()
            }
            Quantity::Spin(k) => flat(&one(k)?.spin),
            Quantity::SpinHat(k) => flat(&one(k)?.spin_hat),
            Quantity::SpinAngular(k) => flat(&one(k)?.s),
            Quantity::Vorticity(k) => flat(&one(k)?.vorticity),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftEntry {
    pub quantity: Quantity,
    pub drift: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub entries: Vec<DriftEntry>,
}

impl ConservationReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn drift(&self, quantity: Quantity) -> Option<f64> {
        self.entries.iter().find(|e| e.quantity == quantity).map(|e| e.drift)
    }
}

/// Maximum over the trajectory of `|Q(t) - Q(0)|_inf / max(|Q(0)|_inf, 1)`
/// for each requested quantity.
pub fn conservation_report(
    trajectory: &[Sample],
    expected: &[(Quantity, f64)],
    eta: &MetricTensor,
    g: &MetricTensor,
) -> Result<ConservationReport> {
    let first = trajectory
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
    let mut entries = Vec::with_capacity(expected.len());
    for &(quantity, tolerance) in expected {
        let q0 = quantity.sample(first, eta, g)?;
        let scale = q0.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mut drift: f64 = 0.0;
        for s in trajectory {
            let q = quantity.sample(s, eta, g)?;
            for (a, b) in q.iter().zip(&q0) {
                drift = drift.max((a - b).abs() / scale);
            }
        }
        entries.push(DriftEntry {
            quantity,
            drift,
            tolerance,
            pass: drift <= tolerance,
        });
    }
    Ok(ConservationReport { entries })
}

/// Runs `simulate` on a system Hamiltonian.
pub fn run(
    h: &SystemHamiltonian,
    integrator: Integrator,
    states: &[PhaseState],
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<Vec<Sample>> {
    crate::dynamics::simulate(h, integrator, states, dt, t_end, stride)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{legendre, Hamiltonian, LeftInternal};
    use crate::kinematics::BodyInertia;
    use crate::sampling::Sampler;

    fn body(x: DVector<f64>, phi: DMatrix<f64>) -> PhaseState {
        PhaseState::new(x, phi, DVector::zeros(2), DMatrix::zeros(2, 2)).unwrap()
    }

    fn random_state(s: &mut Sampler, n: usize) -> PhaseState {
        PhaseState::new(s.gaussian_vector(n), s.gl_matrix(n, 10.0), s.gaussian_vector(n), s.gaussian_matrix(n)).unwrap()
    }

    fn rel_forces(a: &[BodyGradient], b: &[BodyGradient]) -> f64 {
        let mut num: f64 = 0.0;
        let mut den: f64 = 1e-12;
        for ((ax, ap), (bx, bp)) in a.iter().zip(b) {
            num = num.max((ax - bx).amax()).max((ap - bp).amax());
            den = den.max(bx.amax()).max(bp.amax());
        }
        num / den
    }

    #[test]
    fn equal_bodies_have_zero_mutual_affine_energy() {
        let id = MetricTensor::identity(2);
        let phi = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.2, 2.0]);
        let states = [body(DVector::zeros(2), phi.clone()), body(DVector::zeros(2), phi)];
        let terms = [PotentialTerm::mutual_affine(2, vec![1.0, 2.0], (0, 1))];
        assert!(potential_energy(&states, &terms, &id, &id).unwrap().abs() < 1e-14);
        let f = forces(&states, &terms, &id, &id).unwrap();
        assert!(f.iter().all(|(x, p)| x.amax() == 0.0 && p.amax() < 1e-14));
    }

    #[test]
    fn spring_example() {
        let id = MetricTensor::identity(2);
        let states = [
            body(DVector::zeros(2), DMatrix::identity(2, 2)),
            body(DVector::from_vec(vec![1.0, 0.0]), DMatrix::identity(2, 2)),
        ];
        let terms = [PotentialTerm::SpatialSpring {
            k: 1.0,
            rest_length: 0.0,
            pair: (0, 1),
        }];
        assert_eq!(potential_energy(&states, &terms, &id, &id).unwrap(), 0.5);
        let terms = [PotentialTerm::SpatialSpring {
            k: 3.0,
            rest_length: 0.25,
            pair: (0, 1),
        }];
        let f = forces(&states, &terms, &id, &id).unwrap();
        assert!((f[0].0.norm() - 3.0 * 0.75).abs() < 1e-14);
        assert_eq!(&f[0].0 + &f[1].0, DVector::zeros(2));
    }

    #[test]
    fn bad_pair_index() {
        let id = MetricTensor::identity(2);
        let states = [body(DVector::zeros(2), DMatrix::identity(2, 2))];
        let terms = [PotentialTerm::mutual_metric(2, vec![1.0], (0, 3))];
        let err = potential_energy(&states, &terms, &id, &id).unwrap_err();
        assert!(matches!(err.root(), Error::BadPairIndex { index: 4, bodies: 1 }));
        assert!(matches!(err, Error::Term { term: 1, .. }));
    }

    #[test]
    fn analytic_forces_match_finite_differences() {
        let mut s = Sampler::new(503);
        for n in [2, 3] {
            let eta = s.spd_metric(n);
            let g = s.spd_metric(n);
            let terms = vec![
                PotentialTerm::SpatialSpring {
                    k: 1.5,
                    rest_length: 0.7,
                    pair: (0, 1),
                },
                PotentialTerm::mutual_affine(n, vec![0.3; n], (1, 2)),
                PotentialTerm::mutual_metric(n, vec![0.2; n], (2, 0)),
                PotentialTerm::DilatationStabilizer { k: 0.8, body: 1 },
            ];
            for _ in 0..10 {
                let states: Vec<_> = (0..3).map(|_| random_state(&mut s, n)).collect();
                let a = forces(&states, &terms, &eta, &g).unwrap();
                let f = fd_forces(&states, &terms, &eta, &g).unwrap();
                assert!(rel_forces(&a, &f) <= 1e-6, "{}", rel_forces(&a, &f));
            }
        }
    }

    #[test]
    fn mutual_affine_simultaneous_invariance() {
        let mut s = Sampler::new(509);
        for n in [2, 3] {
            let eta = s.spd_metric(n);
            let g = s.spd_metric(n);
            let terms = [PotentialTerm::mutual_affine(n, vec![1.0; n], (0, 1))];
            for _ in 0..20 {
                let states = vec![random_state(&mut s, n), random_state(&mut s, n)];
                let v = potential_energy(&states, &terms, &eta, &g).unwrap();
                let a = s.gl_matrix(n, 1e3);
                let b = s.gl_matrix(n, 1e3);
                let moved: Vec<_> = states
                    .iter()
                    .map(|st| PhaseState {
                        phi: &a * &st.phi * &b,
                        ..st.clone()
                    })
                    .collect();
                let w = potential_energy(&moved, &terms, &eta, &g).unwrap();
                assert!((v - w).abs() <= 1e-8 * v.abs().max(1.0), "{v} {w}");
            }
        }
    }

    #[test]
    fn mutual_metric_invariance_is_isometric_only() {
        let mut s = Sampler::new(521);
        let n = 3;
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        let terms = [PotentialTerm::mutual_metric(n, vec![1.0; n], (0, 1))];
        let states = vec![random_state(&mut s, n), random_state(&mut s, n)];
        let v = potential_energy(&states, &terms, &eta, &g).unwrap();
        let a = s.isometry(&g, &g);
        let b = s.isometry(&eta, &eta);
        let moved: Vec<_> = states
            .iter()
            .map(|st| PhaseState {
                phi: &a * &st.phi * &b,
                ..st.clone()
            })
            .collect();
        let w = potential_energy(&moved, &terms, &eta, &g).unwrap();
        assert!((v - w).abs() <= 1e-9 * v.abs().max(1.0));

        let stretch = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0]));
        let moved: Vec<_> = states
            .iter()
            .map(|st| PhaseState {
                phi: &stretch * &st.phi,
                ..st.clone()
            })
            .collect();
        let w = potential_energy(&moved, &terms, &eta, &g).unwrap();
        assert!((v - w).abs() > 1e-3 * v.abs());
    }

    #[test]
    fn swap_symmetry_of_metric_and_spring_terms() {
        let mut s = Sampler::new(523);
        let n = 3;
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        let states = vec![random_state(&mut s, n), random_state(&mut s, n)];
        for (x, y) in [
            (
                PotentialTerm::mutual_metric(n, vec![0.4, 0.2, 0.1], (0, 1)),
                PotentialTerm::mutual_metric(n, vec![0.4, 0.2, 0.1], (1, 0)),
            ),
            (
                PotentialTerm::SpatialSpring {
                    k: 2.0,
                    rest_length: 0.5,
                    pair: (0, 1),
                },
                PotentialTerm::SpatialSpring {
                    k: 2.0,
                    rest_length: 0.5,
                    pair: (1, 0),
                },
            ),
        ] {
            let a = potential_energy(&states, &[x], &eta, &g).unwrap();
            let b = potential_energy(&states, &[y], &eta, &g).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        // M_a[psi, phi] are traces of Gamma^a while the swapped pair gives Gamma^-a
        let id = MetricTensor::identity(2);
        let states = [
            body(DVector::zeros(2), DMatrix::identity(2, 2)),
            body(DVector::zeros(2), DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]))),
        ];
        let fwd = potential_energy(&states, &[PotentialTerm::mutual_affine(2, vec![1.0], (0, 1))], &id, &id).unwrap();
        let back = potential_energy(&states, &[PotentialTerm::mutual_affine(2, vec![1.0], (1, 0))], &id, &id).unwrap();
        assert!((fwd - 4.5).abs() < 1e-14);
        assert!((back - 0.5 * (5.0 / 6.0 - 2.0_f64).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn totals_and_permutations() {
        let mut s = Sampler::new(541);
        let n = 2;
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        let models = vec![
            KineticModel::DAlembert(BodyInertia::new(1.0, s.spd_matrix(n)).unwrap()),
            KineticModel::RightAffine { mass: 2.0, i: 1.0, a: 0.1, b: 0.2 },
        ];
        let states = vec![random_state(&mut s, n), random_state(&mut s, n)];
        let single = kinetic_hamiltonian(&models[0], &states[0], &eta, &g).unwrap().0;
        assert_eq!(total_kinetic(&models[..1], &states[..1], &eta, &g).unwrap(), single);
        let twice = total_kinetic(&[models[0].clone(), models[0].clone()], &[states[0].clone(), states[0].clone()], &eta, &g)
            .unwrap();
        assert_eq!(twice, 2.0 * single);

        let terms = vec![
            PotentialTerm::mutual_metric(n, vec![0.3, 0.1], (0, 1)),
            PotentialTerm::SpatialSpring {
                k: 1.0,
                rest_length: 0.3,
                pair: (0, 1),
            },
        ];
        let h = system_hamiltonian(models.clone(), terms.clone(), &eta, &g).unwrap();
        let swapped_terms: Vec<_> = terms
            .iter()
            .map(|t| match t.clone() {
                PotentialTerm::MutualMetric { kappa, reference, pair } => PotentialTerm::MutualMetric {
                    kappa,
                    reference,
                    pair: (pair.1, pair.0),
                },
                PotentialTerm::SpatialSpring { k, rest_length, pair } => PotentialTerm::SpatialSpring {
                    k,
                    rest_length,
                    pair: (pair.1, pair.0),
                },
                other => other,
            })
            .collect();
        let hs = system_hamiltonian(vec![models[1].clone(), models[0].clone()], swapped_terms, &eta, &g).unwrap();
        let perm = vec![states[1].clone(), states[0].clone()];
        let e1 = h.energy(&states).unwrap();
        let e2 = hs.energy(&perm).unwrap();
        assert!((e1 - e2).abs() <= 1e-13 * e1.abs());
        let g1 = h.gradient(&states).unwrap();
        let g2 = hs.gradient(&perm).unwrap();
        assert!((&g1[0].dphi - &g2[1].dphi).amax() <= 1e-12 * g1[0].dphi.amax());

        let zero = DVector::zeros(n);
        let (p1, m1) = total_momentum_maps(&states, &eta, &g, &zero).unwrap();
        let (p2, m2) = total_momentum_maps(&perm, &eta, &g, &zero).unwrap();
        assert!((p1 - p2).amax() < 1e-15);
        assert!(m1.j_total.max_abs_diff(&m2.j_total).unwrap() < 1e-14);

        let opposite = vec![
            states[0].clone(),
            PhaseState {
                p: -&states[0].p,
                ..states[1].clone()
            },
        ];
        assert_eq!(total_momentum_maps(&opposite, &eta, &g, &zero).unwrap().0, DVector::zeros(n));
    }

    #[test]
    fn two_body_spring_conserves_energy_and_momentum() {
        let id = MetricTensor::identity(2);
        let inertia = BodyInertia::new(1.0, DMatrix::identity(2, 2)).unwrap();
        let models = vec![KineticModel::DAlembert(inertia.clone()), KineticModel::DAlembert(inertia)];
        let terms = vec![PotentialTerm::SpatialSpring {
            k: 1.0,
            rest_length: 1.0,
            pair: (0, 1),
        }];
        let h = system_hamiltonian(models, terms, &id, &id).unwrap();
        let states = vec![
            PhaseState::new(
                DVector::from_vec(vec![0.0, 0.0]),
                DMatrix::identity(2, 2),
                DVector::from_vec(vec![0.1, 0.3]),
                DMatrix::zeros(2, 2),
            )
            .unwrap(),
            PhaseState::new(
                DVector::from_vec(vec![1.5, 0.2]),
                DMatrix::identity(2, 2),
                DVector::from_vec(vec![0.2, -0.4]),
                DMatrix::zeros(2, 2),
            )
            .unwrap(),
        ];
        let traj = run(&h, Integrator::Rk4, &states, 1e-3, 10.0, 100).unwrap();
        let report = conservation_report(
            &traj,
            &[(Quantity::Energy, 1e-8), (Quantity::TotalMomentum, 1e-7), (Quantity::TotalAngularMomentum, 1e-7)],
            &id,
            &id,
        )
        .unwrap();
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn anisotropic_coupling_breaks_single_body_spin() {
        // body 1 alone is not O(g)-symmetric once coupled to a deformed body 2
        let id = MetricTensor::identity(2);
        let inertia = BodyInertia::new(1.0, DMatrix::identity(2, 2)).unwrap();
        let models = vec![KineticModel::DAlembert(inertia.clone()), KineticModel::DAlembert(inertia)];
        let terms = vec![PotentialTerm::mutual_metric(2, vec![1.0, 1.0], (0, 1))];
        let h = system_hamiltonian(models, terms, &id, &id).unwrap();
        let states = vec![
            PhaseState::new(
                DVector::zeros(2),
                DMatrix::identity(2, 2),
                DVector::zeros(2),
                DMatrix::from_row_slice(2, 2, &[0.0, 0.3, -0.3, 0.0]),
            )
            .unwrap(),
            body(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.0, 0.7])),
        ];
        let traj = run(&h, Integrator::Rk4, &states, 1e-3, 5.0, 50).unwrap();
        let report = conservation_report(&traj, &[(Quantity::SpinAngular(0), 1e-7)], &id, &id).unwrap();
        assert!(report.entries[0].drift > 1e-3);
        assert!(!report.all_pass());
    }

    #[test]
    fn left_affine_pair_conserves_total_affine_momentum() {
        let mut s = Sampler::new(557);
        let n = 2;
        let eta = s.spd_metric(n);
        let g = s.spd_metric(n);
        let model = KineticModel::LeftAffine {
            mass: 1.0,
            internal: LeftInternal::Isotropic { i: 1.0, a: 0.2, b: 0.1 },
        };
        let terms = vec![PotentialTerm::mutual_affine(n, vec![0.5, 0.25], (0, 1))];
        let h = system_hamiltonian(vec![model.clone(), model.clone()], terms, &eta, &g).unwrap();
        let mut states = Vec::new();
        for _ in 0..2 {
            let phi = DMatrix::identity(n, n) + s.gaussian_matrix(n) * 0.2;
            let cfg = Configuration::new(s.gaussian_vector(n), LinMap::new(phi, Variance::MIXED_VU).unwrap()).unwrap();
            let vel = VelocityState {
                v: s.gaussian_vector(n) * 0.3,
                big_v: s.gaussian_matrix(n) * 0.3,
            };
            let (p, big_p) = legendre(&model, &cfg, &vel, &eta, &g).unwrap();
            states.push(PhaseState::new(cfg.x.clone(), cfg.phi.matrix().clone(), p, big_p).unwrap());
        }
        let traj = run(&h, Integrator::Rk4, &states, 1e-3, 5.0, 100).unwrap();
        let report = conservation_report(
            &traj,
            &[(Quantity::Energy, 1e-8), (Quantity::TotalAffineMomentum, 1e-7)],
            &eta,
            &g,
        )
        .unwrap();
        assert!(report.all_pass(), "{report:?}");
    }
}
