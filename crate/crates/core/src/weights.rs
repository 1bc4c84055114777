//! Generalized Jacobi weights with logarithmic factors.
//!
//! A weight is stored as a list of singular abscissae `-1 = t_0 < ... < t_{r+1} = 1`
//! with one exponent pair per point. The local factor at `t_i` is
//! `|t - t_i|^Gamma_i * log(e / |t - t_i|)^gamma_i`, and the whole density is the
//! product of the local factors times a bounded positive factor `h`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two exponents closer than this are treated as equal.
pub const EXPONENT_TOL: f64 = 1e-12;

/// Distinct singular points closer than this cannot be combined.
pub const COINCIDENCE_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("singular points must start at -1, end at 1 and increase strictly")]
    BadPoints,
    #[error("{points} points but {factors} exponent pairs")]
    LengthMismatch { points: usize, factors: usize },
    #[error("exponent at point {index} is not finite")]
    NonFiniteExponent { index: usize },
    #[error("bounded factor needs 0 < min <= max < inf, got [{min}, {max}]")]
    BadBounds { min: f64, max: f64 },
    #[error("weight is unbounded at singular point t = {t}")]
    SingularEvaluation { t: f64 },
    #[error("evaluation point {t} lies outside [-1, 1]")]
    OutOfDomain { t: f64 },
    #[error("singular points {a} and {b} nearly coincide")]
    IncompatiblePoints { a: f64, b: f64 },
    #[error("bounded factor has declared bounds but no evaluator")]
    Unevaluable,
    #[error("regularization index must be positive")]
    ZeroIndex,
}

/// Tri-state verdict for exponent inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Boundary,
}

impl Verdict {
    /// Conjunction: any failure fails, otherwise any boundary is a boundary.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fails, _) | (_, Fails) => Fails,
            (Boundary, _) | (_, Boundary) => Boundary,
            _ => Holds,
        }
    }

    pub fn all<I: IntoIterator<Item = Verdict>>(it: I) -> Verdict {
        it.into_iter().fold(Verdict::Holds, Verdict::and)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Compare exponents up to [`EXPONENT_TOL`].
pub fn cmp_exponent(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= EXPONENT_TOL {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// `Gamma > threshold` as a verdict, with equality reported as a boundary.
pub fn strictly_above(value: f64, threshold: f64) -> Verdict {
    match cmp_exponent(value, threshold) {
        Ordering::Greater => Verdict::Holds,
        Ordering::Equal => Verdict::Boundary,
        Ordering::Less => Verdict::Fails,
    }
}

/// Exponent pair `(Gamma, gamma)` of a local factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub power: f64,
    pub log_power: f64,
}

impl Factor {
    pub const ONE: Factor = Factor { power: 0.0, log_power: 0.0 };

    pub fn new(power: f64, log_power: f64) -> Self {
        Factor { power, log_power }
    }

    /// `s^Gamma * log(e/s)^gamma` for a distance `s > 0`.
    ///
    /// Distances above 2 do not occur on [-1, 1]; the log argument is capped there so the
    /// regularized weights stay defined for `n = 1`.
    pub fn local(&self, s: f64) -> f64 {
        let mut v = if self.power == 0.0 { 1.0 } else { s.powf(self.power) };
        if self.log_power != 0.0 {
            let l = 1.0 - s.min(2.0).ln();
            v *= l.powf(self.log_power);
        }
        v
    }

    /// Value of the factor at distance zero, `None` if unbounded.
    fn at_zero(&self) -> Option<f64> {
        match cmp_exponent(self.power, 0.0) {
            Ordering::Greater => Some(0.0),
            Ordering::Less => None,
            Ordering::Equal => match cmp_exponent(self.log_power, 0.0) {
                Ordering::Greater => None,
                Ordering::Less => Some(0.0),
                Ordering::Equal => Some(1.0),
            },
        }
    }

    pub fn scaled(&self, e: f64) -> Factor {
        Factor::new(self.power * e, self.log_power * e)
    }

    pub fn plus(&self, other: Factor) -> Factor {
        Factor::new(self.power + other.power, self.log_power + other.log_power)
    }

    /// Order by growth toward the singular point: a larger factor means larger values near it.
    ///
    /// `a.cmp_size(b) == Less` means `a <= c b` near the point.
    pub fn cmp_size(&self, other: &Factor) -> Ordering {
        match cmp_exponent(self.power, other.power) {
            Ordering::Equal => cmp_exponent(self.log_power, other.log_power),
            // larger power means smaller near zero
            o => o.reverse(),
        }
    }
}

pub type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The bounded smooth factor `h`.
#[derive(Clone)]
pub enum HFactor {
    One,
    Constant(f64),
    Bounded { f: Evaluator, min: f64, max: f64 },
    /// Bounds known (e.g. from a record) without an evaluator; usable only symbolically.
    Declared { min: f64, max: f64 },
}

impl fmt::Debug for HFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HFactor::One => write!(f, "One"),
            HFactor::Constant(c) => write!(f, "Constant({c})"),
            HFactor::Bounded { min, max, .. } => write!(f, "Bounded[{min}, {max}]"),
            HFactor::Declared { min, max } => write!(f, "Declared[{min}, {max}]"),
        }
    }
}

impl HFactor {
    pub fn bounded(f: impl Fn(f64) -> f64 + Send + Sync + 'static, min: f64, max: f64) -> Result<Self, WeightError> {
        check_bounds(min, max)?;
        Ok(HFactor::Bounded { f: Arc::new(f), min, max })
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            HFactor::One => (1.0, 1.0),
            HFactor::Constant(c) => (c, c),
            HFactor::Bounded { min, max, .. } | HFactor::Declared { min, max } => (min, max),
        }
    }

    pub fn is_evaluable(&self) -> bool {
        !matches!(self, HFactor::Declared { .. })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            HFactor::One => 1.0,
            HFactor::Constant(c) => *c,
            HFactor::Bounded { f, min, max } => f(t).clamp(*min, *max),
            HFactor::Declared { .. } => f64::NAN,
        }
    }

    fn powf(&self, e: f64) -> HFactor {
        if e == 0.0 {
            return HFactor::One;
        }
        let pow_bounds = |min: f64, max: f64| {
            let (a, b) = (min.powf(e), max.powf(e));
            (a.min(b), a.max(b))
        };
        match self {
            HFactor::One => HFactor::One,
            HFactor::Constant(c) => HFactor::Constant(c.powf(e)),
            HFactor::Bounded { f, min, max } => {
                let (lo, hi) = pow_bounds(*min, *max);
                let f = f.clone();
                let (min, max) = (*min, *max);
                HFactor::Bounded { f: Arc::new(move |t| f(t).clamp(min, max).powf(e)), min: lo, max: hi }
            }
            HFactor::Declared { min, max } => {
                let (lo, hi) = pow_bounds(*min, *max);
                HFactor::Declared { min: lo, max: hi }
            }
        }
    }

    fn times(&self, other: &HFactor) -> HFactor {
        use HFactor::*;
        match (self, other) {
            (One, h) | (h, One) => h.clone(),
            (Constant(a), Constant(b)) => Constant(a * b),
            (Declared { .. }, _) | (_, Declared { .. }) => {
                let (a0, a1) = self.bounds();
                let (b0, b1) = other.bounds();
                Declared { min: a0 * b0, max: a1 * b1 }
            }
            _ => {
                let (a0, a1) = self.bounds();
                let (b0, b1) = other.bounds();
                let (l, r) = (self.clone(), other.clone());
                Bounded { f: Arc::new(move |t| l.eval(t) * r.eval(t)), min: a0 * b0, max: a1 * b1 }
            }
        }
    }
}

fn check_bounds(min: f64, max: f64) -> Result<(), WeightError> {
    if min > 0.0 && max >= min && max.is_finite() {
        Ok(())
    } else {
        Err(WeightError::BadBounds { min, max })
    }
}

/// Caller-asserted regularity flags that cannot be decided from exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredFlags {
    pub gj1: bool,
    pub gj3: bool,
}

impl Default for DeclaredFlags {
    fn default() -> Self {
        DeclaredFlags { gj1: true, gj3: true }
    }
}

/// A GJ·log weight function on [-1, 1].
#[derive(Debug, Clone)]
pub struct WeightSpec {
    points: Vec<f64>,
    factors: Vec<Factor>,
    h: HFactor,
    flags: DeclaredFlags,
}

impl WeightSpec {
    pub fn new(points: Vec<f64>, factors: Vec<Factor>) -> Result<Self, WeightError> {
        if points.len() != factors.len() {
            return Err(WeightError::LengthMismatch { points: points.len(), factors: factors.len() });
        }
        if points.len() < 2
            || points[0] != -1.0
            || *points.last().unwrap() != 1.0
            || points.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(WeightError::BadPoints);
        }
        if let Some(index) = factors.iter().position(|f| !f.power.is_finite() || !f.log_power.is_finite()) {
            return Err(WeightError::NonFiniteExponent { index });
        }
        Ok(WeightSpec { points, factors, h: HFactor::One, flags: DeclaredFlags::default() })
    }

    /// Weight with singularities only at the endpoints: `(1+t)^{left} (1-t)^{right}` with log factors.
    pub fn endpoints(left: Factor, right: Factor) -> Self {
        WeightSpec::new(vec![-1.0, 1.0], vec![left, right]).expect("valid endpoints")
    }

    /// Classical Jacobi weight `(1-t)^a (1+t)^b`.
    pub fn jacobi(a: f64, b: f64) -> Self {
        Self::endpoints(Factor::new(b, 0.0), Factor::new(a, 0.0))
    }

    pub fn legendre() -> Self {
        Self::jacobi(0.0, 0.0)
    }

    pub fn chebyshev() -> Self {
        Self::jacobi(-0.5, -0.5)
    }

    /// `phi(t) = sqrt(1 - t^2)`.
    pub fn phi() -> Self {
        Self::jacobi(0.5, 0.5)
    }

    pub fn constant(c: f64) -> Result<Self, WeightError> {
        check_bounds(c, c)?;
        Ok(Self::legendre().with_h(HFactor::Constant(c)))
    }

    /// Insert an interior singular point.
    pub fn with_interior(mut self, t: f64, factor: Factor) -> Result<Self, WeightError> {
        if !(t > -1.0 && t < 1.0) {
            return Err(WeightError::BadPoints);
        }
        let idx = self.points.partition_point(|&p| p < t);
        if self.points[idx] == t {
            return Err(WeightError::BadPoints);
        }
        self.points.insert(idx, t);
        self.factors.insert(idx, factor);
        Ok(self)
    }

    pub fn with_h(mut self, h: HFactor) -> Self {
        self.h = h;
        self
    }

    pub fn with_flags(mut self, flags: DeclaredFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn h(&self) -> &HFactor {
        &self.h
    }

    pub fn flags(&self) -> DeclaredFlags {
        self.flags
    }

    /// Number of interior singular points `r`.
    pub fn interior_count(&self) -> usize {
        self.points.len() - 2
    }

    pub fn is_endpoint(&self, i: usize) -> bool {
        i == 0 || i + 1 == self.points.len()
    }

    /// Exponent pair at `t`, or the trivial pair when `t` is not a singular point.
    pub fn factor_at(&self, t: f64) -> Factor {
        self.points.iter().position(|&p| p == t).map(|i| self.factors[i]).unwrap_or(Factor::ONE)
    }

    /// True when the weight is symmetric under `t -> -t`.
    pub fn is_even(&self) -> bool {
        let n = self.points.len();
        let sym_h = matches!(self.h, HFactor::One | HFactor::Constant(_));
        sym_h
            && (0..n).all(|i| {
                let j = n - 1 - i;
                self.points[i] == -self.points[j]
                    && cmp_exponent(self.factors[i].power, self.factors[j].power) == Ordering::Equal
                    && cmp_exponent(self.factors[i].log_power, self.factors[j].log_power) == Ordering::Equal
            })
    }

    fn product_at(&self, base: f64, offset: f64) -> f64 {
        let mut v = self.h.eval(base + offset);
        for (p, f) in self.points.iter().zip(&self.factors) {
            let s = ((base - p) + offset).abs();
            v *= f.local(s);
        }
        v
    }

    /// `w(t)`.
    pub fn eval(&self, t: f64) -> Result<f64, WeightError> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(WeightError::OutOfDomain { t });
        }
        if !self.h.is_evaluable() {
            return Err(WeightError::Unevaluable);
        }
        if let Some(i) = self.points.iter().position(|&p| p == t) {
            let own = self.factors[i].at_zero().ok_or(WeightError::SingularEvaluation { t })?;
            if own == 0.0 {
                return Ok(0.0);
            }
            let mut v = self.h.eval(t);
            for (j, (p, f)) in self.points.iter().zip(&self.factors).enumerate() {
                if j != i {
                    v *= f.local((t - p).abs());
                }
            }
            return Ok(v);
        }
        Ok(self.product_at(t, 0.0))
    }

    /// The `n`-regularized weight `w(n, t)`.
    ///
    /// The endpoint factors use the pairing `w_0(sqrt(1-t) + 1/n)` and
    /// `w_{r+1}(sqrt(1+t) + 1/n)`, so the factor attached to `t_0 = -1` is evaluated at the
    /// distance-like quantity built from the opposite endpoint.
    pub fn eval_regularized(&self, n: usize, t: f64) -> Result<f64, WeightError> {
        if n == 0 {
            return Err(WeightError::ZeroIndex);
        }
        if !(-1.0..=1.0).contains(&t) {
            return Err(WeightError::OutOfDomain { t });
        }
        if !self.h.is_evaluable() {
            return Err(WeightError::Unevaluable);
        }
        let inv = 1.0 / n as f64;
        let last = self.points.len() - 1;
        let mut v = self.h.eval(t);
        v *= self.factors[0].local((1.0 - t).sqrt() + inv);
        v *= self.factors[last].local((1.0 + t).sqrt() + inv);
        v /= varphi(t, Some(n));
        for i in 1..last {
            v *= self.factors[i].local((t - self.points[i]).abs() + inv);
        }
        Ok(v)
    }

    /// The `n`-smoothed weight in the form under which the classical uniform bounds for `p_n`,
    /// `p_n'` at the zeros, and the Christoffel function hold: the factor at `-1` is evaluated at
    /// `(sqrt(1 + t) + 1/n)^2`, the one at `1` at `(sqrt(1 - t) + 1/n)^2`, interior factors at
    /// `|t - t_i| + 1/n`, with no division by `phi(n, t)`.
    pub fn eval_smoothed(&self, n: usize, t: f64) -> Result<f64, WeightError> {
        if n == 0 {
            return Err(WeightError::ZeroIndex);
        }
        if !(-1.0..=1.0).contains(&t) {
            return Err(WeightError::OutOfDomain { t });
        }
        if !self.h.is_evaluable() {
            return Err(WeightError::Unevaluable);
        }
        let inv = 1.0 / n as f64;
        let last = self.points.len() - 1;
        let mut v = self.h.eval(t);
        v *= self.factors[0].local(((1.0 + t).max(0.0).sqrt() + inv).powi(2));
        v *= self.factors[last].local(((1.0 - t).max(0.0).sqrt() + inv).powi(2));
        for i in 1..last {
            v *= self.factors[i].local((t - self.points[i]).abs() + inv);
        }
        Ok(v)
    }
}

/// `sqrt(1 - x^2)`, or `sqrt(1 - x^2) + 1/n` when `n` is given.
pub fn varphi(x: f64, n: Option<usize>) -> f64 {
    let base = (1.0 - x * x).max(0.0).sqrt();
    match n {
        Some(n) => base + 1.0 / n as f64,
        None => base,
    }
}

/// A density on [-1, 1] with known exponent behavior at its singular points.
///
/// `density_at(base, offset)` evaluates at `base + offset`, computing distances to singular
/// points as `(base - t_i) + offset` so that tiny offsets from a singular `base` keep full
/// relative precision.
pub trait Density: Send + Sync + fmt::Debug {
    fn density_at(&self, base: f64, offset: f64) -> f64;

    /// Exponent pairs at every singular point, as a spec with trivial `h`.
    fn exponents(&self) -> WeightSpec;

    /// Lower and upper bounds of the bounded factor.
    fn h_bounds(&self) -> (f64, f64);

    fn is_evaluable(&self) -> bool {
        true
    }

    fn label(&self) -> String;

    /// Points in (-1, 1) where the density is continuous but not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn density(&self, t: f64) -> f64 {
        self.density_at(t, 0.0)
    }
}

impl Density for WeightSpec {
    fn density_at(&self, base: f64, offset: f64) -> f64 {
        self.product_at(base, offset)
    }

    fn exponents(&self) -> WeightSpec {
        WeightSpec { points: self.points.clone(), factors: self.factors.clone(), h: HFactor::One, flags: self.flags }
    }

    fn h_bounds(&self) -> (f64, f64) {
        self.h.bounds()
    }

    fn is_evaluable(&self) -> bool {
        self.h.is_evaluable()
    }

    fn label(&self) -> String {
        serde_json::to_string(&WeightRecord::from(self)).unwrap_or_default()
    }
}

fn merge_points(lists: &[&[f64]]) -> Result<Vec<f64>, WeightError> {
    let mut all: Vec<f64> = lists.iter().flat_map(|l| l.iter().copied()).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup();
    for w in all.windows(2) {
        if w[1] - w[0] < COINCIDENCE_TOL {
            return Err(WeightError::IncompatiblePoints { a: w[0], b: w[1] });
        }
    }
    Ok(all)
}

/// `prod_j spec_j^{e_j} * phi^{phi_exponent}` as a single spec.
pub fn product(terms: &[(&WeightSpec, f64)], phi_exponent: f64) -> Result<WeightSpec, WeightError> {
    let lists: Vec<&[f64]> = terms.iter().map(|(s, _)| s.points()).collect();
    let points = merge_points(&lists)?;
    let last = points.len() - 1;
    let mut h = HFactor::One;
    let mut flags = DeclaredFlags::default();
    let factors = points
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut f = Factor::ONE;
            for (spec, e) in terms {
                f = f.plus(spec.factor_at(t).scaled(*e));
            }
            if i == 0 || i == last {
                f.power += phi_exponent / 2.0;
            }
            f
        })
        .collect();
    for (spec, e) in terms {
        h = h.times(&spec.h.powf(*e));
        flags.gj1 &= spec.flags.gj1;
        flags.gj3 &= spec.flags.gj3;
    }
    let h = match h {
        HFactor::Constant(1.0) => HFactor::One,
        other => other,
    };
    Ok(WeightSpec { points, factors, h, flags })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeMode {
    Min,
    Max,
}

/// Pointwise minimum or maximum of two densities.
#[derive(Debug, Clone)]
pub struct MinMaxWeight {
    pub left: Arc<dyn Density>,
    pub right: Arc<dyn Density>,
    pub mode: EnvelopeMode,
}

pub fn envelope(a: Arc<dyn Density>, b: Arc<dyn Density>, mode: EnvelopeMode) -> MinMaxWeight {
    MinMaxWeight { left: a, right: b, mode }
}

impl Density for MinMaxWeight {
    fn density_at(&self, base: f64, offset: f64) -> f64 {
        let a = self.left.density_at(base, offset);
        let b = self.right.density_at(base, offset);
        match self.mode {
            EnvelopeMode::Min => a.min(b),
            EnvelopeMode::Max => a.max(b),
        }
    }

    fn exponents(&self) -> WeightSpec {
        let (l, r) = (self.left.exponents(), self.right.exponents());
        // same validation as product; a coincidence error here is a construction bug upstream
        let points = merge_points(&[l.points(), r.points()]).expect("compatible envelope points");
        let factors = points
            .iter()
            .map(|&t| {
                let (a, b) = (l.factor_at(t), r.factor_at(t));
                let ord = a.cmp_size(&b);
                match (self.mode, ord) {
                    (EnvelopeMode::Min, Ordering::Greater) | (EnvelopeMode::Max, Ordering::Less) => b,
                    _ => a,
                }
            })
            .collect();
        let flags = DeclaredFlags { gj1: l.flags.gj1 && r.flags.gj1, gj3: l.flags.gj3 && r.flags.gj3 };
        WeightSpec { points, factors, h: HFactor::One, flags }
    }

    fn h_bounds(&self) -> (f64, f64) {
        let (a0, a1) = self.left.h_bounds();
        let (b0, b1) = self.right.h_bounds();
        match self.mode {
            EnvelopeMode::Min => (a0.min(b0), a1.min(b1)),
            EnvelopeMode::Max => (a0.max(b0), a1.max(b1)),
        }
    }

    fn is_evaluable(&self) -> bool {
        self.left.is_evaluable() && self.right.is_evaluable()
    }

    fn label(&self) -> String {
        let op = match self.mode {
            EnvelopeMode::Min => "min",
            EnvelopeMode::Max => "max",
        };
        format!("{op}({}, {})", self.left.label(), self.right.label())
    }

    /// Sign changes of `log left - log right` on a 4000-cell grid, refined by bisection, plus
    /// the breakpoints of both branches.
    fn breakpoints(&self) -> Vec<f64> {
        let diff = |t: f64| self.left.density(t).ln() - self.right.density(t).ln();
        let cells = 4000;
        let grid: Vec<f64> = (0..cells).map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / cells as f64).collect();
        let mut out = self.left.breakpoints();
        out.extend(self.right.breakpoints());
        for w in grid.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (mut fa, fb) = (diff(a), diff(b));
            if !(fa.is_finite() && fb.is_finite()) || fa == 0.0 || fa.signum() == fb.signum() {
                continue;
            }
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = diff(m);
                if fm.signum() == fa.signum() {
                    (a, fa) = (m, fm);
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
        out
    }
}

/// `prod_j d_j^{e_j}` over arbitrary densities.
#[derive(Debug, Clone)]
pub struct PowerProduct {
    pub terms: Vec<(Arc<dyn Density>, f64)>,
}

impl Density for PowerProduct {
    fn density_at(&self, base: f64, offset: f64) -> f64 {
        self.terms.iter().map(|(d, e)| d.density_at(base, offset).powf(*e)).product()
    }

    fn exponents(&self) -> WeightSpec {
        let specs: Vec<WeightSpec> = self.terms.iter().map(|(d, _)| d.exponents()).collect();
        let terms: Vec<(&WeightSpec, f64)> = specs.iter().zip(&self.terms).map(|(s, (_, e))| (s, *e)).collect();
        product(&terms, 0.0).expect("compatible product points").exponents()
    }

    fn h_bounds(&self) -> (f64, f64) {
        self.terms.iter().fold((1.0, 1.0), |(lo, hi), (d, e)| {
            let (a, b) = d.h_bounds();
            let (a, b) = (a.powf(*e), b.powf(*e));
            (lo * a.min(b), hi * a.max(b))
        })
    }

    fn is_evaluable(&self) -> bool {
        self.terms.iter().all(|(d, _)| d.is_evaluable())
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(d, e)| format!("({})^{e}", d.label())).collect();
        parts.join("*")
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.terms.iter().flat_map(|(d, _)| d.breakpoints()).collect();
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
        out
    }
}

/// Classification flags derived from exponents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub l1: Verdict,
    pub gj2: Verdict,
    pub gj4: Verdict,
    pub monotone_near_interior_nodes: Verdict,
    pub monotone_phi3_at_endpoints: Verdict,
    pub gj1: bool,
    pub gj3: bool,
}

/// L1 verdict of a single local factor.
pub fn local_integrability(f: Factor) -> Verdict {
    match cmp_exponent(f.power, -1.0) {
        Ordering::Greater => Verdict::Holds,
        Ordering::Less => Verdict::Fails,
        Ordering::Equal => match cmp_exponent(f.log_power, -1.0) {
            Ordering::Less => Verdict::Holds,
            Ordering::Equal => Verdict::Boundary,
            Ordering::Greater => Verdict::Fails,
        },
    }
}

pub fn classify(spec: &WeightSpec) -> ClassReport {
    let f = spec.factors();
    let last = f.len() - 1;
    let l1 = Verdict::all(f.iter().map(|&x| local_integrability(x)));
    let gj2 = Verdict::all(f.iter().map(|x| strictly_above(x.power, -1.0)));
    let monotone = Verdict::all(f[1..last].iter().map(|x| match cmp_exponent(x.power, 0.0) {
        Ordering::Greater => Verdict::Holds,
        Ordering::Less => Verdict::Fails,
        Ordering::Equal => {
            if cmp_exponent(x.log_power, 0.0) != Ordering::Greater {
                Verdict::Holds
            } else {
                Verdict::Fails
            }
        }
    }));
    let ends = strictly_above(f[0].power, -1.0).and(strictly_above(f[last].power, -1.0));
    ClassReport {
        l1,
        gj2,
        gj4: gj2,
        monotone_near_interior_nodes: monotone,
        monotone_phi3_at_endpoints: ends,
        gj1: spec.flags().gj1,
        gj3: spec.flags().gj3,
    }
}

/// Serialized form of a weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub points: Vec<f64>,
    #[serde(rename = "Gamma")]
    pub big_gamma: Vec<f64>,
    pub gamma: Vec<f64>,
    pub h: HRecord,
    #[serde(default)]
    pub flags: DeclaredFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HRecord {
    Named(String),
    Bounds { min: f64, max: f64 },
}

impl From<&WeightSpec> for WeightRecord {
    fn from(s: &WeightSpec) -> Self {
        let h = match s.h {
            HFactor::One => HRecord::Named("one".into()),
            _ => {
                let (min, max) = s.h.bounds();
                HRecord::Bounds { min, max }
            }
        };
        WeightRecord {
            points: s.points.clone(),
            big_gamma: s.factors.iter().map(|f| f.power).collect(),
            gamma: s.factors.iter().map(|f| f.log_power).collect(),
            h,
            flags: s.flags,
        }
    }
}

impl TryFrom<WeightRecord> for WeightSpec {
    type Error = WeightError;

    fn try_from(r: WeightRecord) -> Result<Self, WeightError> {
        if r.big_gamma.len() != r.points.len() || r.gamma.len() != r.points.len() {
            return Err(WeightError::LengthMismatch {
                points: r.points.len(),
                factors: r.big_gamma.len().min(r.gamma.len()),
            });
        }
        let factors = r.big_gamma.iter().zip(&r.gamma).map(|(&a, &b)| Factor::new(a, b)).collect();
        let h = match r.h {
            HRecord::Named(ref s) if s == "one" => HFactor::One,
            HRecord::Named(_) => return Err(WeightError::Unevaluable),
            HRecord::Bounds { min, max } => {
                check_bounds(min, max)?;
                if min == max {
                    HFactor::Constant(min)
                } else {
                    HFactor::Declared { min, max }
                }
            }
        };
        Ok(WeightSpec::new(r.points, factors)?.with_h(h).with_flags(r.flags))
    }
}

impl Serialize for WeightSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        WeightRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = WeightRecord::deserialize(d)?;
        WeightSpec::try_from(r).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn interior_log() -> WeightSpec {
        WeightSpec::legendre().with_interior(0.0, Factor::new(1.0, 1.0)).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(WeightSpec::chebyshev().eval(0.0).unwrap(), 1.0);
        assert_eq!(WeightSpec::legendre().eval(0.37).unwrap(), 1.0);
        let v = interior_log().eval(0.5).unwrap();
        assert!((v - 0.5 * (1.0 + 2f64.ln())).abs() < 1e-14);
        assert!((v - 0.84657).abs() < 1e-5);
    }

    #[test]
    fn singular_evaluation() {
        let c = WeightSpec::chebyshev();
        assert_eq!(c.eval(1.0), Err(WeightError::SingularEvaluation { t: 1.0 }));
        assert_eq!(interior_log().eval(0.0).unwrap(), 0.0);
        let log_only = WeightSpec::legendre().with_interior(0.2, Factor::new(0.0, 1.0)).unwrap();
        assert!(log_only.eval(0.2).is_err());
        let log_neg = WeightSpec::legendre().with_interior(0.2, Factor::new(0.0, -1.0)).unwrap();
        assert_eq!(log_neg.eval(0.2).unwrap(), 0.0);
    }

    #[test]
    fn regularized_examples() {
        let c = WeightSpec::chebyshev();
        let expect = 0.1f64.powf(-0.5) * (2f64.sqrt() + 0.1).powf(-0.5) / 0.1;
        assert!((c.eval_regularized(10, 1.0).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 25.697).abs() < 5e-3);
        let l = WeightSpec::legendre();
        assert!((l.eval_regularized(5, 0.0).unwrap() - 1.0 / 1.2).abs() < 1e-14);
        assert_eq!(c.eval_regularized(0, 0.0), Err(WeightError::ZeroIndex));
    }

    #[test]
    fn smoothed_weight_examples() {
        assert_eq!(WeightSpec::legendre().eval_smoothed(7, 0.4).unwrap(), 1.0);
        let c = WeightSpec::chebyshev();
        let expect = 1.0 / ((2f64.sqrt() + 0.1) * 0.1);
        assert!((c.eval_smoothed(10, 1.0).unwrap() - expect).abs() < 1e-12);
        // far from the singular points it tends to the weight itself
        let w = WeightSpec::jacobi(0.5, -0.3).with_interior(0.2, Factor::new(1.0, -1.0)).unwrap();
        let t = -0.55;
        assert!((w.eval_smoothed(1 << 30, t).unwrap() / w.eval(t).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(c.eval_smoothed(0, 0.0), Err(WeightError::ZeroIndex));
    }

    #[test]
    fn regularized_limit_uses_printed_pairing() {
        // w_0 is evaluated at sqrt(1-t): the limit is w_0(sqrt(1-t)) w_{r+1}(sqrt(1+t)) / phi(t)
        let w = WeightSpec::jacobi(0.3, -0.4).with_interior(0.25, Factor::new(0.5, 1.0)).unwrap();
        let t: f64 = 0.6;
        let f = w.factors();
        let limit = f[0].local((1.0 - t).sqrt()) * f[2].local((1.0 + t).sqrt()) * f[1].local(t - 0.25) / varphi(t, None);
        let far = w.eval_regularized(1 << 30, t).unwrap();
        assert!((far / limit - 1.0).abs() < 1e-6);
        // for Legendre the limit is exactly 1/phi
        let l = WeightSpec::legendre().eval_regularized(1 << 30, t).unwrap();
        assert!((l * varphi(t, None) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn varphi_examples() {
        assert!((varphi(0.6, None) - 0.8).abs() < 1e-15);
        assert_eq!(varphi(1.0, Some(4)), 0.25);
        assert_eq!(varphi(0.0, None), 1.0);
    }

    #[test]
    fn product_examples() {
        let c = WeightSpec::chebyshev();
        let inv = product(&[(&c, -1.0)], 0.0).unwrap();
        assert_eq!(inv.factors()[0].power, 0.5);
        assert_eq!(inv.factors()[1].power, 0.5);
        let l = WeightSpec::legendre();
        let p = product(&[(&l, 1.0)], -0.5).unwrap();
        assert_eq!(p.factors()[0].power, -0.25);
        assert_eq!(p.factors()[1].power, -0.25);
        // (alpha' phi)^{-1} alpha' with alpha' = 1
        let phi = WeightSpec::phi();
        let u2 = product(&[(&phi, -1.0), (&l, 1.0)], 0.0).unwrap();
        assert_eq!(u2.factors()[0].power, -0.5);
        // alpha' phi has exponent zero for Chebyshev
        let ap = product(&[(&c, 1.0)], 1.0).unwrap();
        assert_eq!(ap.factors()[0].power, 0.0);
    }

    #[test]
    fn product_rejects_near_coincident_points() {
        let a = WeightSpec::legendre().with_interior(0.3, Factor::new(1.0, 0.0)).unwrap();
        let b = WeightSpec::legendre().with_interior(0.3 + 5e-15, Factor::new(1.0, 0.0)).unwrap();
        assert!(matches!(product(&[(&a, 1.0), (&b, 1.0)], 0.0), Err(WeightError::IncompatiblePoints { .. })));
        let c = product(&[(&a, 1.0), (&a, 2.0)], 0.0).unwrap();
        assert_eq!(c.points().len(), 3);
        assert_eq!(c.factors()[1].power, 3.0);
    }

    #[test]
    fn envelope_examples() {
        let l: Arc<dyn Density> = Arc::new(WeightSpec::legendre());
        let c: Arc<dyn Density> = Arc::new(WeightSpec::chebyshev());
        let e = envelope(l.clone(), c.clone(), EnvelopeMode::Min);
        for i in 0..41 {
            let t = -0.99 + 0.0495 * i as f64;
            assert_eq!(e.density(t), 1.0);
        }
        // min{1, 1, phi^-1} = 1
        let phi_inv: Arc<dyn Density> = Arc::new(product(&[(&WeightSpec::phi(), -1.0)], 0.0).unwrap());
        let inner: Arc<dyn Density> = Arc::new(envelope(l.clone(), l.clone(), EnvelopeMode::Min));
        let sigma = envelope(inner, phi_inv, EnvelopeMode::Min);
        assert_eq!(sigma.density(0.7), 1.0);
        assert_eq!(sigma.exponents().factors()[0].power, 0.0);
        let idem = envelope(c.clone(), c.clone(), EnvelopeMode::Max);
        assert_eq!(idem.density(0.4), c.density(0.4));
    }

    #[test]
    fn envelope_exponent_rule() {
        let a: Arc<dyn Density> = Arc::new(WeightSpec::endpoints(Factor::new(0.5, 1.0), Factor::new(0.5, 1.0)));
        let b: Arc<dyn Density> = Arc::new(WeightSpec::endpoints(Factor::new(0.5, -1.0), Factor::new(-0.2, 0.0)));
        let mn = envelope(a.clone(), b.clone(), EnvelopeMode::Min).exponents();
        let mx = envelope(a, b, EnvelopeMode::Max).exponents();
        // equal Gamma: min picks smaller log power (smaller factor near the point)
        assert_eq!(mn.factors()[0], Factor::new(0.5, -1.0));
        assert_eq!(mx.factors()[0], Factor::new(0.5, 1.0));
        assert_eq!(mn.factors()[1], Factor::new(0.5, 1.0));
        assert_eq!(mx.factors()[1], Factor::new(-0.2, 0.0));
    }

    #[test]
    fn classify_examples() {
        let c = classify(&WeightSpec::chebyshev());
        assert_eq!(c.gj2, Verdict::Holds);
        assert_eq!(c.l1, Verdict::Holds);
        let bad = WeightSpec::legendre().with_interior(0.1, Factor::new(-1.0, 0.0)).unwrap();
        assert_eq!(classify(&bad).l1, Verdict::Fails);
        assert_eq!(classify(&bad).gj2, Verdict::Boundary);
        let ok = WeightSpec::legendre().with_interior(0.1, Factor::new(-1.0, -2.0)).unwrap();
        assert_eq!(classify(&ok).l1, Verdict::Holds);
        let crit = WeightSpec::legendre().with_interior(0.1, Factor::new(-1.0, -1.0)).unwrap();
        assert_eq!(classify(&crit).l1, Verdict::Boundary);
        let mono = WeightSpec::legendre().with_interior(0.1, Factor::new(0.0, 0.5)).unwrap();
        assert_eq!(classify(&mono).monotone_near_interior_nodes, Verdict::Fails);
    }

    #[test]
    fn record_round_trip() {
        let w = WeightSpec::jacobi(0.25, -0.5)
            .with_interior(0.3, Factor::new(1.0, -1.0))
            .unwrap()
            .with_h(HFactor::Constant(2.0));
        let s = serde_json::to_string(&w).unwrap();
        assert!(s.contains("\"Gamma\""));
        let back: WeightSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(WeightRecord::from(&back), WeightRecord::from(&w));
        let one: WeightSpec =
            serde_json::from_str(r#"{"points":[-1,1],"Gamma":[0,0],"gamma":[0,0],"h":"one"}"#).unwrap();
        assert_eq!(one.eval(0.1).unwrap(), 1.0);
        let declared: WeightSpec =
            serde_json::from_str(r#"{"points":[-1,1],"Gamma":[0,0],"gamma":[0,0],"h":{"min":1,"max":2}}"#).unwrap();
        assert_eq!(declared.eval(0.1), Err(WeightError::Unevaluable));
    }

    fn exponent_pair() -> impl Strategy<Value = Factor> {
        (-0.9f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Factor::new(a, b))
    }

    proptest! {
        #[test]
        fn product_is_pointwise_power_product(
            fa in proptest::collection::vec(exponent_pair(), 3),
            fb in proptest::collection::vec(exponent_pair(), 3),
            x in -2.0f64..2.0, y in -2.0f64..2.0, t in -0.999f64..0.999,
        ) {
            let a = WeightSpec::new(vec![-1.0, 0.2, 1.0], fa).unwrap().with_h(HFactor::Constant(1.5));
            let b = WeightSpec::new(vec![-1.0, 0.2, 1.0], fb).unwrap();
            prop_assume!((t - 0.2).abs() > 1e-6);
            let p = product(&[(&a, x), (&b, y)], 0.0).unwrap();
            let lhs = p.eval(t).unwrap();
            let rhs = a.eval(t).unwrap().powf(x) * b.eval(t).unwrap().powf(y);
            prop_assert!((lhs / rhs - 1.0).abs() < 1e-12);
        }

        #[test]
        fn envelope_is_exact_min_max(fa in proptest::collection::vec(exponent_pair(), 2), t in -0.999f64..0.999) {
            let a: Arc<dyn Density> = Arc::new(WeightSpec::new(vec![-1.0, 1.0], fa).unwrap());
            let b: Arc<dyn Density> = Arc::new(WeightSpec::chebyshev());
            let lo = envelope(a.clone(), b.clone(), EnvelopeMode::Min).density(t);
            let hi = envelope(a.clone(), b.clone(), EnvelopeMode::Max).density(t);
            prop_assert_eq!(lo, a.density(t).min(b.density(t)));
            prop_assert_eq!(hi, a.density(t).max(b.density(t)));
        }

        #[test]
        fn classify_ignores_constant_h_and_order(fs in proptest::collection::vec(exponent_pair(), 3), c in 0.1f64..10.0) {
            let a = WeightSpec::new(vec![-1.0, 0.0, 1.0], fs.clone()).unwrap();
            let b = a.clone().with_h(HFactor::Constant(c));
            prop_assert_eq!(classify(&a), classify(&b));
            // relabel: insert interior point last rather than via constructor
            let c2 = WeightSpec::new(vec![-1.0, 1.0], vec![fs[0], fs[2]]).unwrap().with_interior(0.0, fs[1]).unwrap();
            prop_assert_eq!(classify(&a), classify(&c2));
        }

        #[test]
        fn regularized_ratio_stable_under_doubling(fs in proptest::collection::vec(exponent_pair(), 3), t in -1.0f64..1.0) {
            let w = WeightSpec::new(vec![-1.0, 0.1, 1.0], fs).unwrap();
            for n in [16usize, 64, 256] {
                let r = w.eval_regularized(n, t).unwrap() / w.eval_regularized(2 * n, t).unwrap();
                prop_assert!(r > 1.0 / 16.0 && r < 16.0);
            }
        }
    }
}
