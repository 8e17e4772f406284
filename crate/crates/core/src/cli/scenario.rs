//! Scenario files: strict JSON schema and conversion into a system Hamiltonian
//! with its initial state.

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{Integrator, KineticModel, LeftInternal, PhaseState};
use crate::kinematics::BodyInertia;
use crate::multibody::{system_hamiltonian, PotentialTerm, SystemHamiltonian};
use crate::spaces::{is_singular_matrix, MetricTensor, MAX_DIM};

/// Rows of a square matrix.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub dimension: usize,
    pub space_metric: Rows,
    pub material_metric: Rows,
    /// Accept indefinite (but non-degenerate) metrics.
    #[serde(default)]
    pub pseudo_euclidean: bool,
    pub bodies: Vec<BodySpec>,
    #[serde(default)]
    pub potentials: Vec<PotentialSpec>,
    pub integrator: IntegratorSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub mass: f64,
    pub inertia: Rows,
    pub kinetic_model: ModelSpec,
    pub initial: InitialSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub params: Option<Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub x: Vec<f64>,
    pub phi: Rows,
    pub p: Vec<f64>,
    #[serde(rename = "P")]
    pub big_p: Rows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(rename = "type")]
    pub kind: String,
    pub params: Value,
    /// One-based body indices.
    #[serde(default)]
    pub pair: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub method: String,
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IsotropicParams {
    #[serde(rename = "I")]
    i: f64,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneralLeftParams {
    #[serde(rename = "L")]
    l: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IsometricParams {
    m2: f64,
    #[serde(rename = "I1")]
    i1: f64,
    #[serde(rename = "I2")]
    i2: f64,
    #[serde(rename = "I3")]
    i3: f64,
    #[serde(rename = "I4")]
    i4: f64,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpringParams {
    k: f64,
    rest_length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MutualParams {
    kappa: Vec<f64>,
    #[serde(default)]
    reference: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DilatationParams {
    k: f64,
    body: usize,
}

/// Everything `simulate` needs.
pub struct Prepared {
    pub hamiltonian: SystemHamiltonian,
    pub states: Vec<PhaseState>,
    pub integrator: Integrator,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    /// Distinct body pairs in declaration order, zero-based.
    pub pairs: Vec<(usize, usize)>,
}

/// Parses scenario text; errors carry the JSON path and position.
pub fn parse(text: &str) -> Result<Scenario, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        format!("{path}: {inner}")
    })
}

fn params<T: DeserializeOwned>(value: &Value, at: &str) -> Result<T, String> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            format!("{at}: {inner}")
        } else {
            format!("{at}.{path}: {inner}")
        }
    })
}

fn matrix(rows: &Rows, n: usize, at: &str) -> Result<DMatrix<f64>, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("{at}: expected a {n}x{n} matrix"));
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(format!("{at}: entries must be finite"));
    }
    Ok(m)
}

fn vector(values: &[f64], n: usize, at: &str) -> Result<DVector<f64>, String> {
    if values.len() != n {
        return Err(format!("{at}: expected {n} components, found {}", values.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(format!("{at}: entries must be finite"));
    }
    Ok(DVector::from_column_slice(values))
}

fn metric(rows: &Rows, n: usize, pseudo: bool, at: &str) -> Result<MetricTensor, String> {
    let m = matrix(rows, n, at)?;
    let built = if pseudo {
        MetricTensor::pseudo_euclidean(m)
    } else {
        MetricTensor::new(m)
    };
    built.map_err(|e| format!("{at}: {e}"))
}

fn body_index(one_based: usize, bodies: usize, at: &str) -> Result<usize, String> {
    if one_based == 0 || one_based > bodies {
        return Err(format!("{at}: body index {one_based} out of range 1..={bodies}"));
    }
    Ok(one_based - 1)
}

fn model(spec: &BodySpec, n: usize, eta: &MetricTensor, at: &str) -> Result<KineticModel, String> {
    let at_params = format!("{at}.kinetic_model.params");
    let need = |p: &Option<Value>| p.clone().ok_or_else(|| format!("{at_params}: missing"));
    let inertia = matrix(&spec.inertia, n, &format!("{at}.inertia"))?;
    let model = match spec.kinetic_model.kind.as_str() {
        "dalembert" => {
            if let Some(p) = &spec.kinetic_model.params {
                if !p.as_object().is_some_and(|o| o.is_empty()) {
                    return Err(format!("{at_params}: dalembert takes no parameters"));
                }
            }
            KineticModel::DAlembert(BodyInertia::new(spec.mass, inertia).map_err(|e| format!("{at}: {e}"))?)
        }
        "left_affine" => {
            let value = need(&spec.kinetic_model.params)?;
            let internal = if value.get("L").is_some() {
                let p: GeneralLeftParams = params(&value, &at_params)?;
                LeftInternal::General(p.l)
            } else {
                let p: IsotropicParams = params(&value, &at_params)?;
                LeftInternal::Isotropic { i: p.i, a: p.a, b: p.b }
            };
            KineticModel::LeftAffine {
                mass: spec.mass,
                internal,
            }
        }
        "right_affine" => {
            let p: IsotropicParams = params(&need(&spec.kinetic_model.params)?, &at_params)?;
            KineticModel::RightAffine {
                mass: spec.mass,
                i: p.i,
                a: p.a,
                b: p.b,
            }
        }
        "isometric_general" => {
            let p: IsometricParams = params(&need(&spec.kinetic_model.params)?, &at_params)?;
            KineticModel::IsometricGeneral {
                m1: spec.mass,
                m2: p.m2,
                i1: p.i1,
                i2: p.i2,
                i3: p.i3,
                i4: p.i4,
                a: p.a,
                b: p.b,
            }
        }
        other => {
            return Err(format!(
                "{at}.kinetic_model.type: unknown model `{other}` (expected dalembert, left_affine, right_affine or isometric_general)"
            ))
        }
    };
    if !(spec.mass.is_finite() && spec.mass > 0.0) {
        return Err(format!("{at}.mass: must be positive"));
    }
    model.validate(n).map_err(|e| format!("{at}.kinetic_model: {e}"))?;
    let _ = eta;
    Ok(model)
}

fn potential(spec: &PotentialSpec, n: usize, bodies: usize, at: &str) -> Result<PotentialTerm, String> {
    let at_params = format!("{at}.params");
    let pair = || -> Result<(usize, usize), String> {
        let [k, l] = spec.pair.ok_or_else(|| format!("{at}.pair: required for `{}`", spec.kind))?;
        let pair = (
            body_index(k, bodies, &format!("{at}.pair"))?,
            body_index(l, bodies, &format!("{at}.pair"))?,
        );
        if pair.0 == pair.1 {
            return Err(format!("{at}.pair: a body cannot be paired with itself"));
        }
        Ok(pair)
    };
    let term = match spec.kind.as_str() {
        "spatial_spring" => {
            let p: SpringParams = params(&spec.params, &at_params)?;
            PotentialTerm::SpatialSpring {
                k: p.k,
                rest_length: p.rest_length,
                pair: pair()?,
            }
        }
        "mutual_affine" | "mutual_metric" => {
            let p: MutualParams = params(&spec.params, &at_params)?;
            let reference = p.reference.unwrap_or_else(|| vec![n as f64; p.kappa.len()]);
            let pair = pair()?;
            if spec.kind == "mutual_affine" {
                PotentialTerm::MutualAffine {
                    kappa: p.kappa,
                    reference,
                    pair,
                }
            } else {
                PotentialTerm::MutualMetric {
                    kappa: p.kappa,
                    reference,
                    pair,
                }
            }
        }
        "dilatation_stabilizer" => {
            if spec.pair.is_some() {
                return Err(format!("{at}.pair: not used by dilatation_stabilizer (give params.body)"));
            }
            let p: DilatationParams = params(&spec.params, &at_params)?;
            PotentialTerm::DilatationStabilizer {
                k: p.k,
                body: body_index(p.body, bodies, &format!("{at_params}.body"))?,
            }
        }
        other => {
            return Err(format!(
                "{at}.type: unknown potential `{other}` (expected spatial_spring, mutual_affine, mutual_metric or dilatation_stabilizer)"
            ))
        }
    };
    term.validate(n, bodies).map_err(|e| format!("{at}: {e}"))?;
    Ok(term)
}

/// Validates a parsed scenario and builds the Hamiltonian and initial state.
pub fn prepare(s: &Scenario) -> Result<Prepared, String> {
    let n = s.dimension;
    if n == 0 || n > MAX_DIM {
        return Err(format!("dimension: must be in 1..={MAX_DIM}, got {n}"));
    }
    let g = metric(&s.space_metric, n, s.pseudo_euclidean, "space_metric")?;
    let eta = metric(&s.material_metric, n, s.pseudo_euclidean, "material_metric")?;
    if s.bodies.is_empty() {
        return Err("bodies: at least one body is required".into());
    }
    let mut models = Vec::new();
    let mut states = Vec::new();
    for (k, body) in s.bodies.iter().enumerate() {
        let at = format!("bodies[{k}]");
        models.push(model(body, n, &eta, &at)?);
        let init = &body.initial;
        let phi = matrix(&init.phi, n, &format!("{at}.initial.phi"))?;
        if is_singular_matrix(&phi) {
            return Err(format!("{at}.initial.phi: matrix is singular"));
        }
        states.push(PhaseState {
            x: vector(&init.x, n, &format!("{at}.initial.x"))?,
            phi,
            p: vector(&init.p, n, &format!("{at}.initial.p"))?,
            big_p: matrix(&init.big_p, n, &format!("{at}.initial.P"))?,
        });
    }
    let mut terms = Vec::new();
    let mut pairs = Vec::new();
    for (t, spec) in s.potentials.iter().enumerate() {
        let term = potential(spec, n, s.bodies.len(), &format!("potentials[{t}]"))?;
        if let Some(pair) = term.pair() {
            if !pairs.contains(&pair) {
                pairs.push(pair);
            }
        }
        terms.push(term);
    }
    let it = &s.integrator;
    let integrator = match it.method.as_str() {
        "rk4" => Integrator::Rk4,
        "implicit_midpoint" => Integrator::ImplicitMidpoint,
        other => {
            return Err(format!(
                "integrator.method: unknown method `{other}` (expected rk4 or implicit_midpoint)"
            ))
        }
    };
    if !(it.dt.is_finite() && it.dt > 0.0) {
        return Err(format!("integrator.dt: must be positive, got {}", it.dt));
    }
    if !(it.t_end.is_finite() && it.t_end >= 0.0) {
        return Err(format!("integrator.t_end: must be non-negative, got {}", it.t_end));
    }
    if it.output_stride == 0 {
        return Err("integrator.output_stride: must be at least 1".into());
    }
    let hamiltonian = system_hamiltonian(models, terms, &eta, &g).map_err(|e| e.to_string())?;
    Ok(Prepared {
        hamiltonian,
        states,
        integrator,
        dt: it.dt,
        t_end: it.t_end,
        stride: it.output_stride,
        pairs,
    })
}
