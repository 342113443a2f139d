//! Finite point measures on punctured subsets of the extended real line.
//!
//! The state space `E` is one of
//!
//! * `[-b,-a) ∪ (a,b]`, `(a,b]` or `[-b,-a)` with `0 <= a < b < ∞`, or
//! * the same shapes with `b = ∞`, in which case `±∞` belong to `E`.
//!
//! In both families `{y ∈ E : |y| > x}` is relatively compact for every
//! `x > 0`, which is what makes `x_μ = max |t_j|` finite for every nonzero
//! point measure and turns `M_x = {μ : x_μ > x}` into the basic event of the
//! cluster calculus.
//!
//! A [`PointMeasure`] stores its atoms in canonical form: strictly sorted
//! locations with positive integer multiplicities. Atoms at `±∞` are never
//! stored.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("Phi undefined on null measure")]
    NullMeasure,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("space mismatch: {0:?} vs {1:?}")]
    SpaceMismatch(Space, Space),
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
}

pub type Result<T> = std::result::Result<T, MeasureError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    TwoSided,
    Positive,
    Negative,
}

/// One of the admissible punctured spaces. `b = +∞` selects the unbounded
/// family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace")]
pub struct Space {
    pub kind: SpaceKind,
    pub a: f64,
    #[serde(with = "crate::extended")]
    pub b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    kind: SpaceKind,
    a: f64,
    #[serde(with = "crate::extended")]
    b: f64,
}

impl TryFrom<RawSpace> for Space {
    type Error = MeasureError;

    fn try_from(raw: RawSpace) -> Result<Self> {
        Space::new(raw.kind, raw.a, raw.b)
    }
}

impl Space {
    pub fn new(kind: SpaceKind, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(MeasureError::InvalidSpace(format!("inner radius a={a} must be finite and >= 0")));
        }
        if b.is_nan() || b == f64::NEG_INFINITY || b <= a {
            return Err(MeasureError::InvalidSpace(format!("outer radius b={b} must exceed a={a}")));
        }
        Ok(Space { kind, a, b })
    }

    /// `(0, 1]`, the time axis of exceedance processes.
    pub fn unit_interval() -> Self {
        Space { kind: SpaceKind::Positive, a: 0.0, b: 1.0 }
    }

    /// `[-∞, 0) ∪ (0, ∞]`, the home of regularly varying point processes.
    pub fn punctured_line() -> Self {
        Space { kind: SpaceKind::TwoSided, a: 0.0, b: f64::INFINITY }
    }

    pub fn is_bounded(&self) -> bool {
        self.b.is_finite()
    }

    fn sign_ok(&self, x: f64) -> bool {
        match self.kind {
            SpaceKind::TwoSided => true,
            SpaceKind::Positive => x > 0.0,
            SpaceKind::Negative => x < 0.0,
        }
    }

    /// Whether a finite location is an admissible atom position.
    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && self.sign_ok(x) && x.abs() > self.a && x.abs() <= self.b
    }

    /// Whether `x` (possibly `±∞`) lies in the closure of `E` in `[-∞, ∞]`.
    pub fn closure_contains(&self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        let sign_ok = match self.kind {
            SpaceKind::TwoSided => true,
            SpaceKind::Positive => x >= 0.0,
            SpaceKind::Negative => x <= 0.0,
        };
        if !sign_ok {
            return false;
        }
        if x.is_infinite() {
            return !self.is_bounded();
        }
        let m = x.abs();
        m <= self.b && (m >= self.a || x == 0.0 && self.a == 0.0)
    }
}

/// An interval of the extended line with explicit endpoint closure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "crate::extended")]
    pub lo: f64,
    #[serde(with = "crate::extended")]
    pub hi: f64,
    #[serde(default)]
    pub lo_closed: bool,
    #[serde(default = "default_true")]
    pub hi_closed: bool,
}

fn default_true() -> bool {
    true
}

impl Interval {
    /// The half-open interval `(lo, hi]`.
    pub fn left_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: true }
    }

    /// The half-open interval `[lo, hi)`.
    pub fn right_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: false }
    }

    pub fn contains(&self, y: f64) -> bool {
        let above = if self.lo_closed { y >= self.lo } else { y > self.lo };
        let below = if self.hi_closed { y <= self.hi } else { y < self.hi };
        above && below
    }

    pub fn is_well_formed(&self) -> bool {
        !self.lo.is_nan() && !self.hi.is_nan() && self.lo <= self.hi
    }
}

/// Finite union of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Region {
    pub intervals: Vec<Interval>,
}

impl Region {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Region { intervals }
    }

    pub fn single(interval: Interval) -> Self {
        Region { intervals: vec![interval] }
    }

    /// `[-x, x]^c = {y ∈ E : |y| > x}`.
    pub fn modulus_above(space: &Space, x: f64) -> Self {
        let b = space.b;
        let pos = Interval::left_open(x, b);
        let neg = Interval::right_open(-b, -x);
        match space.kind {
            SpaceKind::TwoSided => Region { intervals: vec![neg, pos] },
            SpaceKind::Positive => Region::single(pos),
            SpaceKind::Negative => Region::single(neg),
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(y))
    }

    /// All finite endpoints, used as breakpoints when integrating indicator
    /// functions of events along a ray.
    pub fn endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals.iter().flat_map(|i| [i.lo, i.hi]).filter(|e| e.is_finite())
    }

    pub fn validate_in(&self, space: &Space) -> Result<()> {
        for iv in &self.intervals {
            if !iv.is_well_formed() {
                return Err(MeasureError::Domain(format!("malformed interval {iv:?}")));
            }
            for e in [iv.lo, iv.hi] {
                if !space.closure_contains(e) {
                    return Err(MeasureError::Domain(format!("interval endpoint {e} outside the closure of {space:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Finite integer-valued point measure in canonical form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPointMeasure")]
pub struct PointMeasure {
    space: Space,
    atoms: Vec<(f64, u64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPointMeasure {
    space: Space,
    atoms: Vec<(f64, u64)>,
}

impl TryFrom<RawPointMeasure> for PointMeasure {
    type Error = MeasureError;

    fn try_from(raw: RawPointMeasure) -> Result<Self> {
        PointMeasure::new(raw.space, raw.atoms)
    }
}

impl PointMeasure {
    /// Builds a measure from an arbitrary atom list, sorting and merging
    /// equal locations.
    pub fn new(space: Space, mut atoms: Vec<(f64, u64)>) -> Result<Self> {
        for &(loc, mult) in &atoms {
            if loc.is_infinite() {
                return Err(MeasureError::Domain(format!("atom at {loc}: point processes carry no mass at ±∞")));
            }
            if !space.contains(loc) {
                return Err(MeasureError::Domain(format!("atom {loc} not in {space:?}")));
            }
            if mult == 0 {
                return Err(MeasureError::Domain(format!("atom {loc} has zero multiplicity")));
            }
        }
        atoms.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
        let mut merged: Vec<(f64, u64)> = Vec::with_capacity(atoms.len());
        for (loc, mult) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == loc => last.1 += mult,
                _ => merged.push((loc, mult)),
            }
        }
        Ok(PointMeasure { space, atoms: merged })
    }

    /// The null measure `o`.
    pub fn null(space: Space) -> Self {
        PointMeasure { space, atoms: Vec::new() }
    }

    /// Sum of unit masses at the given locations.
    pub fn from_points(space: Space, points: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(space, points.into_iter().map(|p| (p, 1)).collect())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn atoms(&self) -> &[(f64, u64)] {
        &self.atoms
    }

    pub fn is_null(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `μ(B)` for a finite union of intervals.
    pub fn count(&self, region: &Region) -> Result<u64> {
        region.validate_in(&self.space)?;
        Ok(self.count_unchecked(region))
    }

    pub(crate) fn count_unchecked(&self, region: &Region) -> u64 {
        self.atoms.iter().filter(|a| region.contains(a.0)).map(|a| a.1).sum()
    }

    /// `μ({|y| > x})`.
    pub fn count_modulus_above(&self, x: f64) -> u64 {
        self.atoms.iter().filter(|a| a.0.abs() > x).map(|a| a.1).sum()
    }

    /// `Φ(μ) = x_μ`, the largest atom modulus.
    pub fn sup_modulus(&self) -> Result<f64> {
        self.atoms
            .iter()
            .map(|a| a.0.abs())
            .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |c| c.max(m))))
            .ok_or(MeasureError::NullMeasure)
    }

    /// Membership in `M_x`, i.e. `x_μ > x`.
    pub fn in_mx(&self, x: f64) -> bool {
        self.sup_modulus().map(|m| m > x).unwrap_or(false)
    }

    /// `μ(f) = Σ multiplicity · f(location)`.
    pub fn pair(&self, f: &TestFunction) -> f64 {
        self.atoms.iter().map(|&(loc, mult)| mult as f64 * f.eval(loc)).sum()
    }

    /// `π_y(μ)`: every location multiplied by `y`.
    pub fn rescale(&self, y: f64) -> Result<Self> {
        if !(y.is_finite() && y > 0.0) {
            return Err(MeasureError::Domain(format!("rescale factor {y} must be finite and > 0")));
        }
        if self.is_null() {
            return Err(MeasureError::NullMeasure);
        }
        let atoms = self.atoms.iter().map(|&(loc, m)| (loc * y, m)).collect();
        Self::new(self.space, atoms)
    }

    /// Divides every location by `x_μ`, producing a member of `M̃`.
    pub fn normalize_by_max(&self) -> Result<Self> {
        let top = self.sup_modulus()?;
        let atoms = self.atoms.iter().map(|&(loc, m)| (loc / top, m)).collect();
        Self::new(self.space, atoms)
    }

    /// `μ([-1,1]^c) = 0` and `μ({-1,1}) > 0`.
    pub fn is_normalized_shape(&self) -> bool {
        !self.atoms.is_empty()
            && self.atoms.iter().all(|a| a.0.abs() <= 1.0)
            && self.atoms.iter().any(|a| a.0.abs() == 1.0)
    }

    pub fn superpose(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(MeasureError::SpaceMismatch(self.space, other.space));
        }
        let mut out = Vec::with_capacity(self.atoms.len() + other.atoms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            let next = match (self.atoms.get(i), other.atoms.get(j)) {
                (Some(&a), Some(&b)) if a.0 == b.0 => {
                    i += 1;
                    j += 1;
                    (a.0, a.1 + b.1)
                }
                (Some(&a), Some(&b)) if a.0 < b.0 => {
                    i += 1;
                    a
                }
                (_, Some(&b)) => {
                    j += 1;
                    b
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        Ok(PointMeasure { space: self.space, atoms: out })
    }

    /// Keeps only atoms with modulus strictly above `x`.
    pub fn restrict_modulus_above(&self, x: f64) -> Self {
        PointMeasure {
            space: self.space,
            atoms: self.atoms.iter().copied().filter(|a| a.0.abs() > x).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("point measures always serialize")
    }
}

/// Nonnegative continuous piecewise-linear function with an inner gap:
/// `f ≡ 0` on `(-s, s)` for a strictly positive `s`.
///
/// Between knots the function is linear; beyond the outermost knots the
/// boundary value is carried to `±∞`. An empty knot list is `f ≡ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTestFunction")]
pub struct TestFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    #[serde(skip_serializing)]
    inner_gap: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTestFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawTestFunction> for TestFunction {
    type Error = MeasureError;

    fn try_from(raw: RawTestFunction) -> Result<Self> {
        TestFunction::new(raw.knots, raw.values)
    }
}

/// Default height used by [`TestFunction::near_indicator`]; `e^{-50}` is
/// below double precision relative to one.
pub const NEAR_INDICATOR_HEIGHT: f64 = 50.0;

impl TestFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let bad = |m: String| Err(MeasureError::InvalidTestFunction(m));
        if knots.len() != values.len() {
            return bad(format!("{} knots but {} values", knots.len(), values.len()));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return bad("knots must be finite".into());
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return bad("knots must be strictly increasing".into());
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("values must be finite and nonnegative".into());
        }
        let inner_gap = inner_gap(&knots, &values)?;
        Ok(TestFunction { knots, values, inner_gap })
    }

    pub fn zero() -> Self {
        TestFunction { knots: Vec::new(), values: Vec::new(), inner_gap: f64::INFINITY }
    }

    /// Height `height` on `[lo, hi]` with linear ramps of width `ramp` on
    /// both sides. `hi = +∞` gives a one-sided ramp carried to infinity.
    pub fn trapezoid(lo: f64, hi: f64, height: f64, ramp: f64) -> Result<Self> {
        if !(ramp > 0.0) || !(lo < hi) {
            return Err(MeasureError::InvalidTestFunction(format!("bad trapezoid lo={lo} hi={hi} ramp={ramp}")));
        }
        if hi.is_infinite() {
            Self::new(vec![lo - ramp, lo], vec![0.0, height])
        } else {
            Self::new(vec![lo - ramp, lo, hi, hi + ramp], vec![0.0, height, height, 0.0])
        }
    }

    /// Continuous stand-in for `∞ · 1{|y| > x}` on `space`: zero up to `x`,
    /// ramping to `height` over `[x, x + ramp]`.
    pub fn near_indicator(space: &Space, x: f64, ramp: f64, height: f64) -> Result<Self> {
        if !(x > 0.0 && ramp > 0.0 && height > 0.0) {
            return Err(MeasureError::InvalidTestFunction(format!("bad near-indicator x={x} ramp={ramp}")));
        }
        let (h, r) = (height, ramp);
        match space.kind {
            SpaceKind::TwoSided => Self::new(vec![-x - r, -x, x, x + r], vec![h, 0.0, 0.0, h]),
            SpaceKind::Positive => Self::new(vec![x, x + r], vec![0.0, h]),
            SpaceKind::Negative => Self::new(vec![-x - r, -x], vec![h, 0.0]),
        }
    }

    /// Ramp width used for near-indicators on `space`: `1e-6` of its span.
    pub fn default_ramp(space: &Space) -> f64 {
        let span = if space.is_bounded() { space.b - space.a } else { 1.0 };
        1e-6 * span
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest `s` with `f ≡ 0` on `(-s, s)`; `+∞` for the zero function.
    pub fn inner_gap(&self) -> f64 {
        self.inner_gap
    }

    pub fn is_zero(&self) -> bool {
        self.inner_gap.is_infinite()
    }

    /// Largest value of `f`.
    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn eval(&self, y: f64) -> f64 {
        let k = &self.knots;
        let v = &self.values;
        match k.len() {
            0 => 0.0,
            _ if y <= k[0] => v[0],
            n if y >= k[n - 1] => v[n - 1],
            _ => {
                let i = k.partition_point(|&kk| kk <= y) - 1;
                let t = (y - k[i]) / (k[i + 1] - k[i]);
                v[i] + t * (v[i + 1] - v[i])
            }
        }
    }

    /// Pointwise `self <= other`, checked on the union of both knot sets and
    /// the outer rays (exact for piecewise-linear functions).
    pub fn dominated_by(&self, other: &Self) -> bool {
        let mut pts: Vec<f64> = self.knots.iter().chain(other.knots.iter()).copied().collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if let (Some(&lo), Some(&hi)) = (pts.first(), pts.last()) {
            pts.push(lo - 1.0);
            pts.push(hi + 1.0);
        }
        pts.iter().all(|&p| self.eval(p) <= other.eval(p))
    }
}

fn inner_gap(knots: &[f64], values: &[f64]) -> Result<f64> {
    if values.iter().all(|&v| v == 0.0) {
        return Ok(f64::INFINITY);
    }
    let touches = || Err(MeasureError::InvalidTestFunction("support reaches the origin".into()));
    let n = knots.len();
    let mut s = f64::INFINITY;
    if values[0] > 0.0 {
        if knots[0] >= 0.0 {
            return touches();
        }
        s = s.min(-knots[0]);
    }
    if values[n - 1] > 0.0 {
        if knots[n - 1] <= 0.0 {
            return touches();
        }
        s = s.min(knots[n - 1]);
    }
    for i in 0..n - 1 {
        let (k0, k1) = (knots[i], knots[i + 1]);
        if values[i] == 0.0 && values[i + 1] == 0.0 {
            continue;
        }
        if k0 >= 0.0 {
            s = s.min(k0);
        } else if k1 <= 0.0 {
            s = s.min(-k1);
        } else {
            return touches();
        }
    }
    if s > 0.0 {
        Ok(s)
    } else {
        touches()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Space {
        Space::punctured_line()
    }

    fn mu() -> PointMeasure {
        PointMeasure::from_points(line(), [0.5, -0.7]).unwrap()
    }

    #[test]
    fn count_examples() {
        let s = line();
        assert_eq!(mu().count(&Region::modulus_above(&s, 0.6)).unwrap(), 1);
        assert_eq!(mu().count(&Region::modulus_above(&s, 0.8)).unwrap(), 0);
        assert_eq!(PointMeasure::null(s).count(&Region::modulus_above(&s, 0.1)).unwrap(), 0);
    }

    #[test]
    fn count_rejects_endpoints_outside_closure() {
        let s = Space::unit_interval();
        let m = PointMeasure::from_points(s, [0.5]).unwrap();
        assert!(m.count(&Region::single(Interval::left_open(0.2, 2.0))).is_err());
        assert!(m.count(&Region::single(Interval::left_open(-0.5, 0.7))).is_err());
        assert_eq!(m.count(&Region::single(Interval::left_open(0.0, 1.0))).unwrap(), 1);
        let gapped = Space::new(SpaceKind::TwoSided, 0.1, 5.0).unwrap();
        let g = PointMeasure::from_points(gapped, [1.0]).unwrap();
        assert!(g.count(&Region::single(Interval::left_open(0.05, 2.0))).is_err());
    }

    #[test]
    fn sup_modulus_examples() {
        assert_eq!(mu().sup_modulus().unwrap(), 0.7);
        let double = PointMeasure::new(line(), vec![(0.3, 2)]).unwrap();
        assert_eq!(double.sup_modulus().unwrap(), 0.3);
        assert_eq!(PointMeasure::null(line()).sup_modulus(), Err(MeasureError::NullMeasure));
    }

    #[test]
    fn in_mx_is_strict() {
        assert!(mu().in_mx(0.5));
        assert!(!mu().in_mx(0.7));
        assert!(!PointMeasure::null(line()).in_mx(0.1));
    }

    #[test]
    fn pair_examples() {
        let m = PointMeasure::new(line(), vec![(0.5, 2)]).unwrap();
        assert_eq!(m.pair(&TestFunction::zero()), 0.0);
        let f = TestFunction::new(vec![0.25, 0.5, 0.75], vec![0.0, 3.0, 0.0]).unwrap();
        assert_eq!(m.pair(&f), 6.0);
    }

    #[test]
    fn rescale_examples() {
        let r = mu().rescale(2.0).unwrap();
        assert_eq!(r.atoms(), &[(-1.4, 1), (1.0, 1)]);
        assert_eq!(mu().rescale(1.0).unwrap(), mu());
        let bounded = PointMeasure::from_points(Space::unit_interval(), [0.75]).unwrap();
        assert!(matches!(bounded.rescale(2.0), Err(MeasureError::Domain(_))));
    }

    #[test]
    fn normalize_examples() {
        let m = PointMeasure::from_points(line(), [1.0, -2.0]).unwrap();
        assert_eq!(m.normalize_by_max().unwrap().atoms(), &[(-1.0, 1), (0.5, 1)]);
        let single = PointMeasure::from_points(line(), [0.3]).unwrap();
        assert_eq!(single.normalize_by_max().unwrap().atoms(), &[(1.0, 1)]);
        assert!(PointMeasure::null(line()).normalize_by_max().is_err());
    }

    #[test]
    fn superpose_merges_multiplicities() {
        let s = line();
        let a = PointMeasure::from_points(s, [0.5]).unwrap();
        assert_eq!(a.superpose(&a).unwrap().atoms(), &[(0.5, 2)]);
        assert_eq!(PointMeasure::null(s).superpose(&mu()).unwrap(), mu());
        let other = PointMeasure::null(Space::unit_interval());
        assert!(matches!(a.superpose(&other), Err(MeasureError::SpaceMismatch(..))));
    }

    #[test]
    fn rejects_atoms_outside_space() {
        assert!(PointMeasure::from_points(line(), [0.0]).is_err());
        assert!(PointMeasure::from_points(line(), [f64::INFINITY]).is_err());
        assert!(PointMeasure::from_points(Space::unit_interval(), [1.5]).is_err());
        assert!(PointMeasure::new(line(), vec![(1.0, 0)]).is_err());
    }

    #[test]
    fn json_is_canonical() {
        let m = PointMeasure::from_points(line(), [0.5, -0.7, 0.5]).unwrap();
        let json = m.to_json();
        assert_eq!(json, r#"{"space":{"kind":"two_sided","a":0.0,"b":"inf"},"atoms":[[-0.7,1],[0.5,2]]}"#);
        let back: PointMeasure = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_json(), json);
        let unsorted = r#"{"space":{"kind":"two_sided","a":0.0,"b":"inf"},"atoms":[[0.5,1],[-0.7,1],[0.5,1]]}"#;
        let parsed: PointMeasure = serde_json::from_str(unsorted).unwrap();
        assert_eq!(parsed.to_json(), json);
    }

    #[test]
    fn test_function_inner_gap() {
        let f = TestFunction::trapezoid(0.5, 1.0, 2.0, 0.1).unwrap();
        assert!((f.inner_gap() - 0.4).abs() < 1e-15);
        assert_eq!(f.eval(0.75), 2.0);
        assert!((f.eval(0.45) - 1.0).abs() < 1e-12);
        assert_eq!(f.eval(-3.0), 0.0);
        assert_eq!(f.eval(7.0), 0.0);
        let tail = TestFunction::trapezoid(1.0, f64::INFINITY, 1.0, 0.5).unwrap();
        assert_eq!(tail.eval(1e9), 1.0);
        assert_eq!(tail.inner_gap(), 0.5);
        assert!(TestFunction::new(vec![-1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(TestFunction::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(TestFunction::new(vec![1.0, 0.5], vec![0.0, 1.0]).is_err());
        let two = TestFunction::near_indicator(&line(), 1.0, 0.1, 5.0).unwrap();
        assert_eq!(two.inner_gap(), 1.0);
        assert_eq!(two.eval(-2.0), 5.0);
        assert_eq!(two.eval(0.0), 0.0);
    }

    #[test]
    fn pair_vanishes_inside_gap() {
        let f = TestFunction::trapezoid(0.5, 1.0, 1.0, 0.1).unwrap();
        let m = PointMeasure::from_points(line(), [0.2, -0.39, 0.4]).unwrap();
        assert!(m.sup_modulus().unwrap() <= f.inner_gap());
        assert_eq!(m.pair(&f), 0.0);
    }
}
