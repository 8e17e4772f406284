//! Metric linear algebra on the material space `U` and the physical space `V`.
//!
//! Every matrix is wrapped in a [`LinMap`] that records which spaces it maps
//! between. Rows index the codomain and columns the domain, so a map
//! `psi: U -> V` with components `psi^i_A` stores `psi^i_A` at `(i, A)`, and a
//! twice-covariant tensor `G_AB` is stored as the lowering map `U -> U*`.
//! Compositions and transpositions check these tags, so a Green tensor can
//! never be silently multiplied as if it were an endomorphism.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest supported dimension of `U` and `V`.
pub const MAX_DIM: usize = 8;

/// Relative threshold for `|det| <= tol * (max row norm)^n`.
pub const SINGULARITY_TOL: f64 = 1e-12;

const METRIC_SYMMETRY_TOL: f64 = 1e-12;
const METRIC_EIGEN_FLOOR: f64 = 1e-10;

/// Dimension shared by `U` and `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if (1..=MAX_DIM).contains(&n) {
            Ok(Dimension(n))
        } else {
            Err(Error::UnsupportedDimension(n))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    /// Material space.
    U,
    /// Physical space.
    V,
    UDual,
    VDual,
}

impl Space {
    pub fn dual(self) -> Space {
        match self {
            Space::U => Space::UDual,
            Space::V => Space::VDual,
            Space::UDual => Space::U,
            Space::VDual => Space::V,
        }
    }

    pub fn is_primal(self) -> bool {
        matches!(self, Space::U | Space::V)
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Space::U => "U",
            Space::V => "V",
            Space::UDual => "U*",
            Space::VDual => "V*",
        };
        f.write_str(s)
    }
}

/// Geometric role of a square matrix, read as a linear map `domain -> codomain`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variance {
    pub codomain: Space,
    pub domain: Space,
}

impl Variance {
    /// `U -> V`, components `psi^i_A`.
    pub const MIXED_VU: Variance = Variance::new(Space::V, Space::U);
    /// `V -> U`, components `P^A_i`.
    pub const MIXED_UV: Variance = Variance::new(Space::U, Space::V);
    pub const ENDO_V: Variance = Variance::new(Space::V, Space::V);
    pub const ENDO_U: Variance = Variance::new(Space::U, Space::U);
    /// `U* (x) U*`, e.g. `eta_AB`, `G_AB`.
    pub const COVARIANT_UU: Variance = Variance::new(Space::UDual, Space::U);
    /// `V* (x) V*`, e.g. `g_ij`, `C_ij`.
    pub const COVARIANT_VV: Variance = Variance::new(Space::VDual, Space::V);
    /// `U (x) U`, e.g. `eta^AB`, `J^AB`.
    pub const CONTRAVARIANT_UU: Variance = Variance::new(Space::U, Space::UDual);
    /// `V (x) V`, e.g. `g^ij`, the push-forward of `eta^-1`.
    pub const CONTRAVARIANT_VV: Variance = Variance::new(Space::V, Space::VDual);
    /// `U* (x) V*` read as `V -> U*`; components `(_T psi)_{Ai}`.
    pub const LOWERING_UV: Variance = Variance::new(Space::UDual, Space::V);
    /// `V* (x) U*` read as `U -> V*`; components `(_T psi^-1)_{iA}`.
    pub const LOWERING_VU: Variance = Variance::new(Space::VDual, Space::U);
    /// `V* -> U*`, the conjugate of a map `U -> V`.
    pub const DUAL_UV: Variance = Variance::new(Space::UDual, Space::VDual);
    /// `U* -> V*`, the contragredient of a map `U -> V`.
    pub const DUAL_VU: Variance = Variance::new(Space::VDual, Space::UDual);

    pub const fn new(codomain: Space, domain: Space) -> Self {
        Variance { codomain, domain }
    }

    pub fn is_endo(self) -> bool {
        self.codomain == self.domain
    }

    /// Variance of the inverse map.
    pub fn inverted(self) -> Variance {
        Variance::new(self.domain, self.codomain)
    }
}

impl fmt::Display for Variance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.domain, self.codomain)
    }
}

/// `|det m| <= SINGULARITY_TOL * (max row norm)^n`.
pub fn is_singular_matrix(m: &DMatrix<f64>) -> bool {
    let n = m.nrows() as i32;
    let max_row = m
        .row_iter()
        .map(|r| r.norm())
        .fold(0.0_f64, f64::max);
    if max_row == 0.0 {
        return true;
    }
    m.determinant().abs() <= SINGULARITY_TOL * max_row.powi(n)
}

pub(crate) fn checked_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if is_singular_matrix(m) {
        return Err(Error::SingularMap);
    }
    m.clone().try_inverse().ok_or(Error::SingularMap)
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// A square matrix tagged with the spaces it maps between.
#[derive(Debug, Clone, PartialEq)]
pub struct LinMap {
    matrix: DMatrix<f64>,
    variance: Variance,
}

impl LinMap {
    pub fn new(matrix: DMatrix<f64>, variance: Variance) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Dimension::new(matrix.nrows())?;
        Ok(LinMap { matrix, variance })
    }

    /// Construction for matrices whose shape is already known to be valid.
    pub(crate) fn from_parts(matrix: DMatrix<f64>, variance: Variance) -> Self {
        debug_assert!(matrix.is_square());
        LinMap { matrix, variance }
    }

    pub fn identity(n: usize, space: Space) -> Self {
        LinMap::from_parts(DMatrix::identity(n, n), Variance::new(space, space))
    }

    pub fn zeros(n: usize, variance: Variance) -> Self {
        LinMap::from_parts(DMatrix::zeros(n, n), variance)
    }

    pub fn from_row_slice(n: usize, data: &[f64], variance: Variance) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        LinMap::new(DMatrix::from_row_slice(n, n, data), variance)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn variance(&self) -> Variance {
        self.variance
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    #[cfg(test)]
    pub(crate) fn retagged(self, variance: Variance) -> LinMap {
        LinMap { variance, ..self }
    }

    fn same_dim(&self, other: &LinMap) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    fn same_variance(&self, other: &LinMap) -> Result<()> {
        self.same_dim(other)?;
        if self.variance != other.variance {
            return Err(Error::VarianceMismatch {
                left: self.variance,
                right: other.variance,
            });
        }
        Ok(())
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &LinMap) -> Result<LinMap> {
        self.same_dim(rhs)?;
        if self.variance.domain != rhs.variance.codomain {
            return Err(Error::VarianceMismatch {
                left: self.variance,
                right: rhs.variance,
            });
        }
        Ok(LinMap::from_parts(
            &self.matrix * &rhs.matrix,
            Variance::new(self.variance.codomain, rhs.variance.domain),
        ))
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(&self.matrix * v)
    }

    pub fn add(&self, rhs: &LinMap) -> Result<LinMap> {
        self.same_variance(rhs)?;
        Ok(LinMap::from_parts(&self.matrix + &rhs.matrix, self.variance))
    }

    pub fn sub(&self, rhs: &LinMap) -> Result<LinMap> {
        self.same_variance(rhs)?;
        Ok(LinMap::from_parts(&self.matrix - &rhs.matrix, self.variance))
    }

    pub fn scale(&self, factor: f64) -> LinMap {
        LinMap::from_parts(&self.matrix * factor, self.variance)
    }

    pub fn is_singular(&self) -> bool {
        is_singular_matrix(&self.matrix)
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn inverse(&self) -> Result<LinMap> {
        Ok(LinMap::from_parts(
            checked_inverse(&self.matrix)?,
            self.variance.inverted(),
        ))
    }

    /// Trace; only meaningful for endomorphisms.
    pub fn trace(&self) -> Result<f64> {
        if !self.variance.is_endo() {
            return Err(Error::VarianceMismatch {
                left: self.variance,
                right: self.variance,
            });
        }
        Ok(self.matrix.trace())
    }

    /// Algebraic power of an endomorphism, `a >= 0`.
    pub fn power(&self, a: u32) -> Result<LinMap> {
        if !self.variance.is_endo() {
            return Err(Error::VarianceMismatch {
                left: self.variance,
                right: self.variance,
            });
        }
        let mut out = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..a {
            out = &out * &self.matrix;
        }
        Ok(LinMap::from_parts(out, self.variance))
    }

    /// Metric-free transposition of a bilinear form (`X* (x) Y*` to `Y* (x) X*`)
    /// or of a bivector (`X (x) Y` to `Y (x) X`).
    pub fn tensor_transpose(&self) -> Result<LinMap> {
        let Variance { codomain, domain } = self.variance;
        if codomain.is_primal() == domain.is_primal() {
            return Err(Error::VarianceMismatch {
                left: self.variance,
                right: self.variance,
            });
        }
        Ok(LinMap::from_parts(
            self.matrix.transpose(),
            Variance::new(domain.dual(), codomain.dual()),
        ))
    }

    /// Largest absolute componentwise difference; variances must agree.
    pub fn max_abs_diff(&self, other: &LinMap) -> Result<f64> {
        self.same_variance(other)?;
        Ok(max_abs(&(&self.matrix - &other.matrix)))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }
}

/// Symmetric non-degenerate bilinear form together with its reciprocal.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    components: DMatrix<f64>,
    inverse: DMatrix<f64>,
    pseudo_euclidean: bool,
}

impl MetricTensor {
    /// Positive-definite metric.
    pub fn new(components: DMatrix<f64>) -> Result<Self> {
        Self::build(components, false)
    }

    /// Symmetric non-degenerate metric of any signature.
    pub fn pseudo_euclidean(components: DMatrix<f64>) -> Result<Self> {
        Self::build(components, true)
    }

    pub fn identity(n: usize) -> Self {
        MetricTensor {
            components: DMatrix::identity(n, n),
            inverse: DMatrix::identity(n, n),
            pseudo_euclidean: false,
        }
    }

    fn build(components: DMatrix<f64>, pseudo_euclidean: bool) -> Result<Self> {
        if !components.is_square() {
            return Err(Error::DimensionMismatch {
                expected: components.nrows(),
                found: components.ncols(),
            });
        }
        Dimension::new(components.nrows())?;
        let asym = max_abs(&(&components - components.transpose()));
        if asym > METRIC_SYMMETRY_TOL {
            return Err(Error::NonSymmetricMetric(asym));
        }
        let components = (&components + components.transpose()) * 0.5;
        let eigen = components.clone().symmetric_eigenvalues();
        let smallest = eigen.iter().copied().fold(f64::INFINITY, f64::min);
        let smallest_abs = eigen.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
        if smallest_abs <= METRIC_EIGEN_FLOOR {
            return Err(Error::DegenerateMetric);
        }
        if !pseudo_euclidean && smallest <= METRIC_EIGEN_FLOOR {
            return Err(Error::IndefiniteMetric(smallest));
        }
        let inverse = components
            .clone()
            .try_inverse()
            .ok_or(Error::DegenerateMetric)?;
        let inverse = (&inverse + inverse.transpose()) * 0.5;
        let n = components.nrows();
        if max_abs(&(&components * &inverse - DMatrix::identity(n, n))) > 1e-10 {
            return Err(Error::DegenerateMetric);
        }
        Ok(MetricTensor {
            components,
            inverse,
            pseudo_euclidean,
        })
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn is_pseudo_euclidean(&self) -> bool {
        self.pseudo_euclidean
    }

    /// The metric on `space` as the index-lowering map `space -> space*`.
    pub fn lowering(&self, space: Space) -> LinMap {
        LinMap::from_parts(self.components.clone(), Variance::new(space.dual(), space))
    }

    /// The reciprocal metric as the index-raising map `space* -> space`.
    pub fn raising(&self, space: Space) -> LinMap {
        LinMap::from_parts(self.inverse.clone(), Variance::new(space, space.dual()))
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

/// Index lowering `v^B -> eta_AB v^B`.
pub fn lower(metric: &MetricTensor, v: &DVector<f64>) -> Result<DVector<f64>> {
    metric.check_dim(v.len())?;
    Ok(metric.components() * v)
}

/// Index raising `f_B -> eta^AB f_B`.
pub fn raise(metric: &MetricTensor, f: &DVector<f64>) -> Result<DVector<f64>> {
    metric.check_dim(f.len())?;
    Ok(metric.inverse() * f)
}

/// Conjugate (dual) map `psi*: Y* -> X*` of `psi: X -> Y`. Needs no metric.
pub fn conjugate(psi: &LinMap) -> LinMap {
    let Variance { codomain, domain } = psi.variance();
    LinMap::from_parts(
        psi.matrix().transpose(),
        Variance::new(domain.dual(), codomain.dual()),
    )
}

/// Contragredient `psi_* = (psi*)^-1: X* -> Y*`.
pub fn contragredient(psi: &LinMap) -> Result<LinMap> {
    let inv = checked_inverse(psi.matrix())?;
    let Variance { codomain, domain } = psi.variance();
    Ok(LinMap::from_parts(
        inv.transpose(),
        Variance::new(codomain.dual(), domain.dual()),
    ))
}

fn metric_for<'a>(
    space: Space,
    eta: &'a MetricTensor,
    g: &'a MetricTensor,
) -> Option<&'a MetricTensor> {
    match space {
        Space::U => Some(eta),
        Space::V => Some(g),
        _ => None,
    }
}

/// `(eta, g)`-transpose `r_X psi* l_Y` of a map `psi: X -> Y` between primal
/// spaces. For `psi: U -> V` the components are `eta^AB g_ki psi^k_B`.
pub fn metric_transpose(psi: &LinMap, eta: &MetricTensor, g: &MetricTensor) -> Result<LinMap> {
    let n = psi.dim();
    eta.check_dim(n)?;
    g.check_dim(n)?;
    let Variance { codomain, domain } = psi.variance();
    let mismatch = || Error::VarianceMismatch {
        left: psi.variance(),
        right: psi.variance(),
    };
    let m_dom = metric_for(domain, eta, g).ok_or_else(mismatch)?;
    let m_cod = metric_for(codomain, eta, g).ok_or_else(mismatch)?;
    let matrix = m_dom.inverse() * psi.matrix().transpose() * m_cod.components();
    Ok(LinMap::from_parts(matrix, Variance::new(domain, codomain)))
}

/// `g`-transpose `_T psi = psi* l_g`, components `g_ij psi^j_A`.
pub fn g_transpose(psi: &LinMap, g: &MetricTensor) -> Result<LinMap> {
    expect_variance(psi, Variance::MIXED_VU)?;
    g.check_dim(psi.dim())?;
    Ok(LinMap::from_parts(
        psi.matrix().transpose() * g.components(),
        Variance::LOWERING_UV,
    ))
}

/// `eta`-transpose of the inverse, `_T psi^-1 = psi^-1* l_eta`, components
/// `eta_AB psi^-1 B_i`.
pub fn eta_transpose_of_inverse(psi: &LinMap, eta: &MetricTensor) -> Result<LinMap> {
    expect_variance(psi, Variance::MIXED_VU)?;
    eta.check_dim(psi.dim())?;
    let inv = checked_inverse(psi.matrix())?;
    Ok(LinMap::from_parts(
        inv.transpose() * eta.components(),
        Variance::LOWERING_VU,
    ))
}

/// `<phi, psi> = Tr(phi psi)` for mutually dual maps.
pub fn trace_pairing(phi: &LinMap, psi: &LinMap) -> Result<f64> {
    if phi.variance().domain != psi.variance().codomain
        || psi.variance().domain != phi.variance().codomain
    {
        return Err(Error::VarianceMismatch {
            left: phi.variance(),
            right: psi.variance(),
        });
    }
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            found: psi.dim(),
        });
    }
    Ok((phi.matrix() * psi.matrix()).trace())
}

/// `phi` pulls `g` back onto `eta`: `max |eta - phi* g phi| <= tol`.
pub fn is_isometry(phi: &LinMap, eta: &MetricTensor, g: &MetricTensor, tol: f64) -> bool {
    let n = phi.dim();
    if eta.dim() != n || g.dim() != n {
        return false;
    }
    let pulled = phi.matrix().transpose() * g.components() * phi.matrix();
    max_abs(&(eta.components() - pulled)) <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Preserving,
    Reversing,
}

pub fn orientation_class(phi: &LinMap) -> Result<Orientation> {
    if phi.is_singular() {
        return Err(Error::SingularMap);
    }
    Ok(if phi.determinant() > 0.0 {
        Orientation::Preserving
    } else {
        Orientation::Reversing
    })
}

pub(crate) fn expect_variance(map: &LinMap, expected: Variance) -> Result<()> {
    if map.variance() != expected {
        return Err(Error::VarianceMismatch {
            left: map.variance(),
            right: expected,
        });
    }
    Ok(())
}

fn expect_endo(map: &LinMap) -> Result<()> {
    if !map.variance().is_endo() {
        return Err(Error::VarianceMismatch {
            left: map.variance(),
            right: map.variance(),
        });
    }
    Ok(())
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of the Taylor series.
pub fn expm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let norm = one_norm(x);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = x / 2f64.powi(squarings);
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if one_norm(&term) <= f64::EPSILON * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn spectrum_meets_negative_axis(y: &DMatrix<f64>) -> bool {
    let eig = y.clone().complex_eigenvalues();
    let radius = eig.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if radius == 0.0 {
        return true;
    }
    let tol = 1e-12 * radius;
    eig.iter().any(|z| z.im.abs() <= tol && z.re <= tol)
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse().ok_or(Error::LogUndefined)?;
        let z_inv = z.clone().try_inverse().ok_or(Error::LogUndefined)?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let change = one_norm(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if change <= 1e-15 * one_norm(&y) {
            return Ok(y);
        }
    }
    Ok(y)
}

/// Principal matrix logarithm by inverse scaling and squaring.
pub fn logm(y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = y.nrows();
    if spectrum_meets_negative_axis(y) {
        return Err(Error::LogUndefined);
    }
    let id = DMatrix::<f64>::identity(n, n);
    let mut z = y.clone();
    let mut roots = 0;
    while one_norm(&(&z - &id)) > 0.25 {
        if roots >= 64 {
            return Err(Error::LogUndefined);
        }
        z = sqrtm(&z)?;
        roots += 1;
    }
    // log Z = 2 atanh(W), W = (Z - I)(Z + I)^-1
    let sum_inv = (&z + &id).try_inverse().ok_or(Error::LogUndefined)?;
    let w = (&z - &id) * sum_inv;
    let w2 = &w * &w;
    let mut power = w.clone();
    let mut log = w.clone();
    for k in 1..200 {
        power = &power * &w2;
        let term = &power / (2 * k + 1) as f64;
        log += &term;
        if one_norm(&term) <= f64::EPSILON * one_norm(&log).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(log * 2f64.powi(roots + 1))
}

pub fn mat_exp(x: &LinMap) -> Result<LinMap> {
    expect_endo(x)?;
    Ok(LinMap::from_parts(expm(x.matrix()), x.variance()))
}

pub fn mat_log(y: &LinMap) -> Result<LinMap> {
    expect_endo(y)?;
    Ok(LinMap::from_parts(logm(y.matrix())?, y.variance()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    fn mixed(m: DMatrix<f64>) -> LinMap {
        LinMap::new(m, Variance::MIXED_VU).unwrap()
    }

    #[test]
    fn lower_and_raise_examples() {
        let id = MetricTensor::identity(2);
        let v = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(lower(&id, &v).unwrap(), v);
        let eta = MetricTensor::new(m2(2.0, 0.0, 0.0, 1.0)).unwrap();
        let ones = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(lower(&eta, &ones).unwrap(), DVector::from_vec(vec![2.0, 1.0]));
        let f = DVector::from_vec(vec![2.0, 1.0]);
        assert_eq!(raise(&eta, &f).unwrap(), ones);
        assert_eq!(raise(&id, &DVector::from_vec(vec![3.0, 4.0])).unwrap()[1], 4.0);
    }

    #[test]
    fn lower_rejects_wrong_dimension() {
        let eta = MetricTensor::identity(3);
        let v = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(lower(&eta, &v), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn metric_validation() {
        assert!(matches!(
            MetricTensor::new(m2(1.0, 0.5, 0.0, 1.0)),
            Err(Error::NonSymmetricMetric(_))
        ));
        assert!(matches!(
            MetricTensor::new(m2(1.0, 0.0, 0.0, -1.0)),
            Err(Error::IndefiniteMetric(_))
        ));
        assert!(MetricTensor::pseudo_euclidean(m2(1.0, 0.0, 0.0, -1.0)).is_ok());
        assert!(matches!(
            MetricTensor::pseudo_euclidean(m2(1.0, 0.0, 0.0, 0.0)),
            Err(Error::DegenerateMetric)
        ));
    }

    #[test]
    fn conjugate_is_plain_transpose() {
        let psi = mixed(m2(1.0, 2.0, 3.0, 4.0));
        let c = conjugate(&psi);
        assert_eq!(c.matrix(), &m2(1.0, 3.0, 2.0, 4.0));
        assert_eq!(c.variance(), Variance::DUAL_UV);
        assert_eq!(conjugate(&c), psi);
    }

    #[test]
    fn contragredient_examples() {
        let psi = mixed(m2(2.0, 0.0, 0.0, 4.0));
        let c = contragredient(&psi).unwrap();
        assert_eq!(c.matrix(), &m2(0.5, 0.0, 0.0, 0.25));
        assert_eq!(c.variance(), Variance::DUAL_VU);
        let singular = mixed(m2(1.0, 2.0, 2.0, 4.0));
        assert!(matches!(contragredient(&singular), Err(Error::SingularMap)));
    }

    #[test]
    fn metric_transpose_examples() {
        let id = MetricTensor::identity(2);
        let psi = mixed(m2(1.0, 2.0, 3.0, 4.0));
        let t = metric_transpose(&psi, &id, &id).unwrap();
        assert_eq!(t.matrix(), &psi.matrix().transpose());
        assert_eq!(t.variance(), Variance::MIXED_UV);

        let eta = MetricTensor::new(m2(1.0, 0.0, 0.0, 4.0)).unwrap();
        let psi = mixed(m2(0.0, 1.0, 0.0, 0.0));
        let t = metric_transpose(&psi, &eta, &id).unwrap();
        assert_relative_eq!(t.matrix(), &m2(0.0, 0.0, 0.25, 0.0));
        let back = metric_transpose(&t, &eta, &id).unwrap();
        assert_eq!(back.variance(), Variance::MIXED_VU);
        assert!(back.max_abs_diff(&psi).unwrap() <= 1e-12);
    }

    #[test]
    fn metric_transpose_rejects_dual_spaces() {
        let id = MetricTensor::identity(2);
        let form = LinMap::identity(2, Space::U).retagged(Variance::COVARIANT_UU);
        assert!(metric_transpose(&form, &id, &id).is_err());
    }

    #[test]
    fn g_transpose_examples() {
        let g = MetricTensor::new(m2(2.0, 0.0, 0.0, 1.0)).unwrap();
        let psi = LinMap::identity(2, Space::U).retagged(Variance::MIXED_VU);
        let t = g_transpose(&psi, &g).unwrap();
        assert_eq!(t.matrix(), &m2(2.0, 0.0, 0.0, 1.0));
        assert_eq!(t.variance(), Variance::LOWERING_UV);
    }

    #[test]
    fn eta_transpose_of_inverse_examples() {
        let id = MetricTensor::identity(2);
        let psi = mixed(m2(2.0, 0.0, 0.0, 1.0));
        let t = eta_transpose_of_inverse(&psi, &id).unwrap();
        assert_eq!(t.matrix(), &m2(0.5, 0.0, 0.0, 1.0));
        assert_eq!(t.variance(), Variance::LOWERING_VU);
    }

    #[test]
    fn trace_pairing_examples() {
        let phi = LinMap::identity(2, Space::U).retagged(Variance::MIXED_UV);
        let psi = LinMap::identity(2, Space::U).retagged(Variance::MIXED_VU);
        assert_eq!(trace_pairing(&phi, &psi).unwrap(), 2.0);
        let phi = LinMap::new(m2(1.0, 0.0, 0.0, 0.0), Variance::MIXED_UV).unwrap();
        let psi = mixed(m2(0.0, 1.0, 1.0, 0.0));
        assert_eq!(trace_pairing(&phi, &psi).unwrap(), 0.0);
        assert!(trace_pairing(&psi, &psi).is_err());
    }

    #[test]
    fn isometry_and_orientation() {
        let id = MetricTensor::identity(2);
        let (s, c) = 0.3_f64.sin_cos();
        let rot = mixed(m2(c, -s, s, c));
        assert!(is_isometry(&rot, &id, &id, 1e-12));
        assert!(!is_isometry(&mixed(m2(2.0, 0.0, 0.0, 3.0)), &id, &id, 1e-12));
        assert_eq!(orientation_class(&rot).unwrap(), Orientation::Preserving);
        let flip = mixed(m2(-1.0, 0.0, 0.0, 1.0));
        assert_eq!(orientation_class(&flip).unwrap(), Orientation::Reversing);
        let singular = mixed(m2(1.0, 1.0, 1.0, 1.0));
        assert!(matches!(orientation_class(&singular), Err(Error::SingularMap)));
    }

    #[test]
    fn composition_checks_variance() {
        let a = mixed(m2(1.0, 0.0, 0.0, 1.0));
        assert!(matches!(a.compose(&a), Err(Error::VarianceMismatch { .. })));
        let b = LinMap::identity(2, Space::U).retagged(Variance::MIXED_UV);
        assert_eq!(a.compose(&b).unwrap().variance(), Variance::ENDO_V);
    }

    #[test]
    fn log_examples() {
        let id = LinMap::identity(2, Space::U);
        assert!(mat_log(&id).unwrap().max_abs() <= 1e-15);
        let d = LinMap::new(m2(2.0, 0.0, 0.0, 3.0), Variance::ENDO_U).unwrap();
        let l = mat_log(&d).unwrap();
        assert_relative_eq!(l.matrix()[(0, 0)], 2f64.ln(), epsilon = 1e-13);
        assert_relative_eq!(l.matrix()[(1, 1)], 3f64.ln(), epsilon = 1e-13);
        assert!(l.matrix()[(0, 1)].abs() < 1e-14);
        let neg = LinMap::new(m2(-1.0, 0.0, 0.0, -1.0), Variance::ENDO_U).unwrap();
        assert!(matches!(mat_log(&neg), Err(Error::LogUndefined)));
    }

    #[test]
    fn log_of_rotation_is_generator() {
        let theta = 2.5_f64;
        let (s, c) = theta.sin_cos();
        let l = logm(&m2(c, -s, s, c)).unwrap();
        assert_relative_eq!(l, m2(0.0, -theta, theta, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn exp_of_nilpotent_and_large_norm() {
        let e = expm(&m2(0.0, 1.0, 0.0, 0.0));
        assert_relative_eq!(e, m2(1.0, 1.0, 0.0, 1.0), epsilon = 1e-15);
        let e = expm(&m2(5.0, 0.0, 0.0, -3.0));
        assert_relative_eq!(e[(0, 0)], 5f64.exp(), max_relative = 1e-13);
        assert_relative_eq!(e[(1, 1)], (-3f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn singularity_threshold_is_scale_aware() {
        let tiny = DMatrix::identity(3, 3) * 1e-6;
        assert!(!is_singular_matrix(&tiny));
        assert!(is_singular_matrix(&m2(1.0, 2.0, 2.0, 4.0 + 1e-14)));
    }
}
