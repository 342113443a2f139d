//! Infinitely divisible limits given by a `(ν, K)` pair.
//!
//! `λ(M) = ∫ K(y, M) ν(dy)` where `ν` is the law of the cluster maximum
//! modulus and `K(y, ·)` the law of a cluster whose largest atom has
//! modulus `y`. Two families are built in:
//!
//! * compound Poisson on `(0,1]`: `ν = a·1_{(0,1]}dy`, `K(y,·) = Σ π_k δ_{kδ_y}`;
//! * regularly varying clusters on `[-∞,0) ∪ (0,∞]`: `ν = θαy^{-α-1}dy`,
//!   `K(y, ·)` the law of a `Q`-shape stretched by `y`.
//!
//! Cluster events are always evaluated on the part of a cluster with
//! modulus above the query level `x`; see [`ClusterEvent`].

use crate::mc::{stream_rng, McRng};
use crate::measure::{MeasureError, PointMeasure, Region, Space, TestFunction};
use crate::quad::{integrate_pieces, QuadError};
use crate::stats::{open01, poisson, Estimate};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("invalid canonical measure: {0}")]
    InvalidParameter(String),
    #[error("invalid cluster event: {0}")]
    Event(String),
    #[error("fixed atom at boundary: x={0} lies in D'")]
    FixedAtomBoundary(f64),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

pub type Result<T> = std::result::Result<T, LimitError>;

const QUAD_TOL: f64 = 1e-10;
const PI_SUM_TOL: f64 = 1e-9;
/// Geometric shape laws are enumerated until the remaining mass drops
/// below this bound.
const SHAPE_TRUNCATION: f64 = 1e-15;
const MAX_GEOMETRIC_SIZE: usize = 4096;

/// Predicate on point measures.
///
/// Counts refer to the measure as passed to [`ClusterEvent::decide`]. The
/// checks in this crate pass the part of a cluster with modulus above the
/// level `x` of the query, so `TotalCount { k: 2 }` at level `x` reads
/// "exactly two points above `x`".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClusterEvent {
    Always,
    TotalCount { k: u64 },
    CountAtLeast { region: Region, c: u64 },
    And { of: Vec<ClusterEvent> },
    Or { of: Vec<ClusterEvent> },
}

impl ClusterEvent {
    pub fn decide(&self, mu: &PointMeasure) -> bool {
        match self {
            ClusterEvent::Always => true,
            ClusterEvent::TotalCount { k } => mu.total_count() == *k,
            ClusterEvent::CountAtLeast { region, c } => mu.count_unchecked(region) >= *c,
            ClusterEvent::And { of } => of.iter().all(|e| e.decide(mu)),
            ClusterEvent::Or { of } => of.iter().any(|e| e.decide(mu)),
        }
    }

    /// Checks every region against `space` and keeps endpoints off the fixed
    /// atoms.
    pub fn validate(&self, space: &Space, fixed_atoms: &[f64]) -> Result<()> {
        match self {
            ClusterEvent::Always | ClusterEvent::TotalCount { .. } => Ok(()),
            ClusterEvent::CountAtLeast { region, .. } => {
                region.validate_in(space).map_err(|e| LimitError::Event(e.to_string()))?;
                if let Some(e) = region.endpoints().find(|e| fixed_atoms.contains(e)) {
                    return Err(LimitError::Event(format!("interval endpoint {e} is a fixed atom")));
                }
                Ok(())
            }
            ClusterEvent::And { of } | ClusterEvent::Or { of } => {
                if of.is_empty() {
                    return Err(LimitError::Event("empty conjunction or disjunction".into()));
                }
                of.iter().try_for_each(|e| e.validate(space, fixed_atoms))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ClusterEvent::Always => "always".into(),
            ClusterEvent::TotalCount { k } => format!("count={k}"),
            ClusterEvent::CountAtLeast { region, c } => {
                let parts: Vec<String> = region
                    .intervals
                    .iter()
                    .map(|i| {
                        format!(
                            "{}{},{}{}",
                            if i.lo_closed { '[' } else { '(' },
                            i.lo,
                            i.hi,
                            if i.hi_closed { ']' } else { ')' }
                        )
                    })
                    .collect();
                format!("count{}>={c}", parts.join("u"))
            }
            ClusterEvent::And { of } => format!("and({})", of.iter().map(|e| e.label()).collect::<Vec<_>>().join(";")),
            ClusterEvent::Or { of } => format!("or({})", of.iter().map(|e| e.label()).collect::<Vec<_>>().join(";")),
        }
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            ClusterEvent::CountAtLeast { region, .. } => out.extend(region.endpoints()),
            ClusterEvent::And { of } | ClusterEvent::Or { of } => of.iter().for_each(|e| e.breakpoints(out)),
            _ => {}
        }
    }
}

/// Law `Q` of normalized cluster shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeLaw {
    /// `δ_1`
    SinglePoint,
    /// `2δ_1`
    TwoPoint,
    /// `δ_1` with probability `p`, else `δ_{-1}`.
    Signed { p: f64 },
    /// `Σ_{i<K} δ_{ratio^i}` with `P(K = k) = (1-c) c^{k-1}`.
    Geometric { continue_prob: f64, ratio: f64 },
    /// Uniform over the listed shapes.
    Empirical { shapes: Vec<PointMeasure> },
}

impl ShapeLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LimitError::InvalidParameter(m));
        match self {
            ShapeLaw::SinglePoint | ShapeLaw::TwoPoint => Ok(()),
            ShapeLaw::Signed { p } => {
                if (0.0..=1.0).contains(p) {
                    Ok(())
                } else {
                    bad(format!("Q sign probability {p} outside [0,1]"))
                }
            }
            ShapeLaw::Geometric { continue_prob, ratio } => {
                if !(0.0..1.0).contains(continue_prob) {
                    return bad(format!("continue_prob {continue_prob} outside [0,1)"));
                }
                if !(*ratio > 0.0 && *ratio <= 1.0) {
                    return bad(format!("ratio {ratio} outside (0,1]"));
                }
                Ok(())
            }
            ShapeLaw::Empirical { shapes } => {
                if shapes.is_empty() {
                    return bad("empirical Q has no shapes".into());
                }
                if let Some(s) = shapes.iter().find(|s| !s.is_normalized_shape()) {
                    return bad(format!("empirical shape {} is not normalized", s.to_json()));
                }
                Ok(())
            }
        }
    }

    fn unit(loc: f64, mult: u64) -> Vec<(f64, u64)> {
        vec![(loc, mult)]
    }

    /// Weighted atom lists covering all of `Q` except a remainder of mass
    /// given by the second component.
    pub fn enumerate(&self) -> (Vec<(f64, Vec<(f64, u64)>)>, f64) {
        match self {
            ShapeLaw::SinglePoint => (vec![(1.0, Self::unit(1.0, 1))], 0.0),
            ShapeLaw::TwoPoint => (vec![(1.0, Self::unit(1.0, 2))], 0.0),
            ShapeLaw::Signed { p } => {
                let mut v = Vec::new();
                if *p > 0.0 {
                    v.push((*p, Self::unit(1.0, 1)));
                }
                if *p < 1.0 {
                    v.push((1.0 - p, Self::unit(-1.0, 1)));
                }
                (v, 0.0)
            }
            ShapeLaw::Geometric { continue_prob, ratio } => {
                let c = *continue_prob;
                let mut v = Vec::new();
                let mut w = 1.0 - c;
                let mut rest = 1.0;
                for k in 1..=MAX_GEOMETRIC_SIZE {
                    v.push((w, geometric_shape(k, *ratio)));
                    rest -= w;
                    w *= c;
                    if rest < SHAPE_TRUNCATION || w == 0.0 {
                        break;
                    }
                }
                (v, rest.max(0.0))
            }
            ShapeLaw::Empirical { shapes } => {
                let w = 1.0 / shapes.len() as f64;
                (shapes.iter().map(|s| (w, s.atoms().to_vec())).collect(), 0.0)
            }
        }
    }

    pub fn sample(&self, rng: &mut McRng) -> Vec<(f64, u64)> {
        match self {
            ShapeLaw::SinglePoint => Self::unit(1.0, 1),
            ShapeLaw::TwoPoint => Self::unit(1.0, 2),
            ShapeLaw::Signed { p } => Self::unit(if rng.random::<f64>() < *p { 1.0 } else { -1.0 }, 1),
            ShapeLaw::Geometric { continue_prob, ratio } => {
                let mut k = 1;
                while k < MAX_GEOMETRIC_SIZE && rng.random::<f64>() < *continue_prob {
                    k += 1;
                }
                geometric_shape(k, *ratio)
            }
            ShapeLaw::Empirical { shapes } => shapes[rng.random_range(0..shapes.len())].atoms().to_vec(),
        }
    }
}

fn geometric_shape(k: usize, ratio: f64) -> Vec<(f64, u64)> {
    if ratio == 1.0 {
        return vec![(1.0, k as u64)];
    }
    let mut atoms = Vec::with_capacity(k);
    let mut loc = 1.0;
    for _ in 0..k {
        atoms.push((loc, 1));
        loc *= ratio;
    }
    atoms
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum CanonicalMeasure {
    CompoundPoissonUniform {
        a: f64,
        /// `pi[k-1] = π_k`.
        pi: Vec<f64>,
        #[serde(default)]
        fixed_atoms: Vec<f64>,
    },
    RegVarCluster {
        theta: f64,
        alpha: f64,
        #[serde(rename = "Q")]
        q: ShapeLaw,
        #[serde(default)]
        fixed_atoms: Vec<f64>,
    },
}

impl CanonicalMeasure {
    pub fn compound_poisson(a: f64, pi: Vec<f64>) -> Result<Self> {
        let c = CanonicalMeasure::CompoundPoissonUniform { a, pi, fixed_atoms: Vec::new() };
        c.validate()?;
        Ok(c)
    }

    pub fn reg_var(theta: f64, alpha: f64, q: ShapeLaw) -> Result<Self> {
        let c = CanonicalMeasure::RegVarCluster { theta, alpha, q, fixed_atoms: Vec::new() };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LimitError::InvalidParameter(m));
        match self {
            CanonicalMeasure::CompoundPoissonUniform { a, pi, fixed_atoms } => {
                if !(a.is_finite() && *a > 0.0) {
                    return bad(format!("rate a={a} must be finite and > 0"));
                }
                if pi.is_empty() || pi.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return bad("pi must be a nonempty list of nonnegative reals".into());
                }
                let s: f64 = pi.iter().sum();
                if (s - 1.0).abs() > PI_SUM_TOL {
                    return bad(format!("pi sums to {s}, not 1"));
                }
                check_atoms(fixed_atoms, &Space::unit_interval())
            }
            CanonicalMeasure::RegVarCluster { theta, alpha, q, fixed_atoms } => {
                if !(*theta > 0.0 && *theta <= 1.0) {
                    return bad(format!("theta={theta} outside (0,1]"));
                }
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return bad(format!("alpha={alpha} must be finite and > 0"));
                }
                q.validate()?;
                check_atoms(fixed_atoms, &Space::punctured_line())
            }
        }
    }

    /// The state space clusters live on.
    pub fn space(&self) -> Space {
        match self {
            CanonicalMeasure::CompoundPoissonUniform { .. } => Space::unit_interval(),
            CanonicalMeasure::RegVarCluster { .. } => Space::punctured_line(),
        }
    }

    pub fn fixed_atoms(&self) -> &[f64] {
        match self {
            CanonicalMeasure::CompoundPoissonUniform { fixed_atoms, .. }
            | CanonicalMeasure::RegVarCluster { fixed_atoms, .. } => fixed_atoms,
        }
    }

    /// `D' = {x > 0 : x ∈ D or -x ∈ D}`, sorted.
    pub fn d_prime(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.fixed_atoms().iter().map(|x| x.abs()).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d.dedup();
        d
    }

    pub fn check_level(&self, x: f64) -> Result<()> {
        if !(x > 0.0) || x.is_nan() {
            return Err(LimitError::InvalidParameter(format!("level x={x} must be > 0")));
        }
        if self.d_prime().contains(&x) {
            return Err(LimitError::FixedAtomBoundary(x));
        }
        Ok(())
    }

    /// `λ(M_x) = ν(x, ∞)`.
    pub fn tail_mass(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(LimitError::InvalidParameter(format!("level x={x} must be > 0")));
        }
        Ok(match self {
            CanonicalMeasure::CompoundPoissonUniform { a, .. } => a * (1.0 - x).max(0.0),
            CanonicalMeasure::RegVarCluster { theta, alpha, .. } => theta * x.powf(-alpha),
        })
    }

    /// `ν(y1, y2)` for `0 < y1 <= y2 <= ∞`.
    fn nu_mass(&self, y1: f64, y2: f64) -> f64 {
        match self {
            CanonicalMeasure::CompoundPoissonUniform { a, .. } => a * (y2.min(1.0) - y1.min(1.0)).max(0.0),
            CanonicalMeasure::RegVarCluster { theta, alpha, .. } => {
                let upper = if y2.is_infinite() { 0.0 } else { y2.powf(-alpha) };
                theta * (y1.powf(-alpha) - upper)
            }
        }
    }

    /// `λ({μ ∈ M_x : μ restricted to {|y| > x} lies in M})`.
    ///
    /// Computed exactly: along each ray `y ↦ π_y(shape)` the event can only
    /// change where an atom crosses `x` or an interval endpoint, so `ν` is
    /// integrated piecewise. The half-width is the `ν`-mass of any
    /// truncated remainder of `Q`.
    pub fn cluster_mass(&self, x: f64, event: &ClusterEvent) -> Result<Estimate> {
        self.validate()?;
        self.check_level(x)?;
        event.validate(&self.space(), self.fixed_atoms())?;
        let mut ends = Vec::new();
        event.breakpoints(&mut ends);
        let space = self.space();
        match self {
            CanonicalMeasure::CompoundPoissonUniform { pi, .. } => {
                if x >= 1.0 {
                    return Ok(Estimate::exact(0.0));
                }
                let mut cuts: Vec<f64> = ends.into_iter().filter(|&e| e > x && e < 1.0).collect();
                cuts.push(x);
                cuts.push(1.0);
                sort_dedup(&mut cuts);
                let mut total = 0.0;
                for (k, &p) in pi.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    for w in cuts.windows(2) {
                        let mid = 0.5 * (w[0] + w[1]);
                        let mu = PointMeasure::new(space, vec![(mid, k as u64 + 1)])?;
                        if event.decide(&mu) {
                            total += p * self.nu_mass(w[0], w[1]);
                        }
                    }
                }
                Ok(Estimate::exact(total))
            }
            CanonicalMeasure::RegVarCluster { q, .. } => {
                let (shapes, remainder) = q.enumerate();
                let mut total = 0.0;
                for (w, atoms) in &shapes {
                    let mut cuts = vec![x];
                    for &(loc, _) in atoms {
                        let m = loc.abs();
                        cuts.push(x / m);
                        for &e in &ends {
                            let y = e / loc;
                            if y > 0.0 && y.is_finite() {
                                cuts.push(y);
                            }
                        }
                    }
                    cuts.retain(|&c| c >= x && c.is_finite());
                    sort_dedup(&mut cuts);
                    cuts.push(f64::INFINITY);
                    for win in cuts.windows(2) {
                        let probe = if win[1].is_infinite() { 2.0 * win[0] + 1.0 } else { 0.5 * (win[0] + win[1]) };
                        let visible: Vec<(f64, u64)> =
                            atoms.iter().map(|&(l, m)| (l * probe, m)).filter(|a| a.0.abs() > x).collect();
                        let mu = PointMeasure::new(space, visible)?;
                        if event.decide(&mu) {
                            total += w * self.nu_mass(win[0], win[1]);
                        }
                    }
                }
                Ok(Estimate { value: total, half_width: remainder * self.tail_mass(x)? })
            }
        }
    }

    /// `L_N(f) = exp{-∫(1 - e^{-μ(f)}) λ(dμ)}`.
    ///
    /// The half-width bounds the effect of truncating `Q`; quadrature error
    /// is held below `1e-10` in the exponent.
    pub fn laplace(&self, f: &TestFunction) -> Result<Estimate> {
        self.validate()?;
        if f.is_zero() {
            return Ok(Estimate::exact(1.0));
        }
        let s = f.inner_gap();
        match self {
            CanonicalMeasure::CompoundPoissonUniform { a, pi, .. } => {
                if s >= 1.0 {
                    return Ok(Estimate::exact(1.0));
                }
                let mut cuts: Vec<f64> = f.knots().iter().copied().filter(|&k| k > s && k < 1.0).collect();
                cuts.push(s);
                cuts.push(1.0);
                sort_dedup(&mut cuts);
                let g = |y: f64| {
                    let fy = f.eval(y);
                    let mut acc = 0.0;
                    let mut decay = 1.0;
                    let step = (-fy).exp();
                    for &p in pi {
                        decay *= step;
                        acc += p * decay;
                    }
                    1.0 - acc
                };
                let exponent = a * integrate_pieces(g, &cuts, QUAD_TOL / a.max(1.0))?;
                Ok(Estimate::exact((-exponent).exp()))
            }
            CanonicalMeasure::RegVarCluster { theta, alpha, q, .. } => {
                let (shapes, remainder) = q.enumerate();
                let t_max = s.powf(-alpha);
                let tol = QUAD_TOL / (shapes.len() as f64 * theta.max(1.0));
                let mut exponent = 0.0;
                for (w, atoms) in &shapes {
                    let mut cuts = vec![0.0, t_max];
                    for &(loc, _) in atoms {
                        for &k in f.knots() {
                            let y = k / loc;
                            if y > s && y.is_finite() {
                                cuts.push(y.powf(-alpha));
                            }
                        }
                    }
                    sort_dedup(&mut cuts);
                    let inv = -1.0 / alpha;
                    let h = |t: f64| {
                        if t <= 0.0 {
                            return 1.0 - (-atoms.iter().map(|&(l, m)| m as f64 * f.eval(l * f64::INFINITY)).sum::<f64>()).exp();
                        }
                        let y = t.powf(inv);
                        let pair: f64 = atoms.iter().map(|&(l, m)| m as f64 * f.eval(l * y)).sum();
                        1.0 - (-pair).exp()
                    };
                    exponent += w * theta * integrate_pieces(h, &cuts, tol)?;
                }
                let value = (-exponent).exp();
                let slack = remainder * theta * t_max;
                Ok(Estimate { value, half_width: value * (slack.exp() - 1.0) })
            }
        }
    }

    /// `P(N({|y| > x}) = 0) = exp(-λ(M_x))`.
    pub fn void_probability(&self, x: f64) -> Result<f64> {
        self.check_level(x)?;
        Ok((-self.tail_mass(x)?).exp())
    }

    /// One draw of `N` restricted to clusters with maximum modulus above
    /// `eps`, together with the number of clusters drawn.
    pub fn sample_clusters(&self, eps: f64, rng: &mut McRng) -> Result<(PointMeasure, u64)> {
        self.validate()?;
        if !(eps > 0.0) {
            return Err(LimitError::InvalidParameter(format!("restriction radius eps={eps} must be > 0")));
        }
        let mass = self.tail_mass(eps)?;
        if let CanonicalMeasure::CompoundPoissonUniform { .. } = self {
            if eps >= 1.0 {
                return Err(LimitError::InvalidParameter(format!("eps={eps} must be < 1 for the compound Poisson limit")));
            }
        }
        let clusters = poisson(rng, mass);
        let mut atoms = Vec::new();
        match self {
            CanonicalMeasure::CompoundPoissonUniform { pi, .. } => {
                for _ in 0..clusters {
                    let y = eps + (1.0 - eps) * open01(rng);
                    let k = draw_index(pi, rng) as u64 + 1;
                    atoms.push((y, k));
                }
            }
            CanonicalMeasure::RegVarCluster { alpha, q, .. } => {
                for _ in 0..clusters {
                    let y = eps * open01(rng).powf(-1.0 / alpha);
                    for (loc, m) in q.sample(rng) {
                        atoms.push((loc * y, m));
                    }
                }
            }
        }
        Ok((PointMeasure::new(self.space(), atoms)?, clusters))
    }

    pub fn sample(&self, eps: f64, rng: &mut McRng) -> Result<PointMeasure> {
        Ok(self.sample_clusters(eps, rng)?.0)
    }

    /// [`sample`](Self::sample) from stream 0 of `seed`.
    pub fn sample_seeded(&self, eps: f64, seed: u64) -> Result<PointMeasure> {
        self.sample(eps, &mut stream_rng(seed, 0))
    }
}

fn check_atoms(atoms: &[f64], space: &Space) -> Result<()> {
    match atoms.iter().find(|&&d| !space.contains(d)) {
        Some(d) => Err(LimitError::InvalidParameter(format!("fixed atom {d} outside {space:?}"))),
        None => Ok(()),
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
}

fn draw_index(weights: &[f64], rng: &mut McRng) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Interval;

    fn cp(a: f64, pi: Vec<f64>) -> CanonicalMeasure {
        CanonicalMeasure::compound_poisson(a, pi).unwrap()
    }

    #[test]
    fn tail_mass_examples() {
        assert_eq!(cp(1.0, vec![1.0]).tail_mass(0.5).unwrap(), 0.5);
        assert_eq!(cp(1.0, vec![1.0]).tail_mass(1.5).unwrap(), 0.0);
        let rv = CanonicalMeasure::reg_var(0.5, 1.0, ShapeLaw::SinglePoint).unwrap();
        assert_eq!(rv.tail_mass(2.0).unwrap(), 0.25);
    }

    #[test]
    fn cluster_mass_examples() {
        let c = cp(2.0, vec![0.3, 0.7]);
        let two = c.cluster_mass(0.5, &ClusterEvent::TotalCount { k: 2 }).unwrap();
        assert!((two.value - 0.7).abs() < 1e-15);
        let all = c.cluster_mass(0.5, &ClusterEvent::Always).unwrap();
        assert_eq!(all.value, c.tail_mass(0.5).unwrap());
        let late = ClusterEvent::CountAtLeast { region: Region::single(Interval::left_open(0.8, 1.0)), c: 1 };
        assert!((c.cluster_mass(0.5, &late).unwrap().value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn reg_var_cluster_mass_rays() {
        let rv = CanonicalMeasure::reg_var(1.0, 1.0, ShapeLaw::Geometric { continue_prob: 0.5, ratio: 0.5 }).unwrap();
        // two points above x=1: shape size >= 2 and y/2 > 1
        let m = rv.cluster_mass(1.0, &ClusterEvent::TotalCount { k: 2 }).unwrap();
        // size>=2 w.p. 1/2; y in (2,4) gives exactly two visible: ν(2,4) = 1/4; size exactly 2 with y>4: (1/4)(1/4)
        let oracle = 0.5 * 0.25 + 0.25 * 0.25;
        assert!((m.value - oracle).abs() < 1e-12, "{} vs {oracle}", m.value);
    }

    #[test]
    fn laplace_closed_form() {
        let c = cp(1.0, vec![0.0, 1.0]);
        let f = TestFunction::trapezoid(0.5, 1.0 + 1e-3, 2f64.ln(), 1e-7).unwrap();
        let l = c.laplace(&f).unwrap().value;
        assert!((l - (-0.375f64).exp()).abs() < 1e-6, "{l}");
        assert_eq!(c.laplace(&TestFunction::zero()).unwrap().value, 1.0);
    }

    #[test]
    fn void_probability_rules() {
        assert!((cp(1.0, vec![1.0]).void_probability(0.5).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        let rv = CanonicalMeasure::reg_var(1.0, 1.0, ShapeLaw::SinglePoint).unwrap();
        assert!((rv.void_probability(1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let with_atom = CanonicalMeasure::CompoundPoissonUniform { a: 1.0, pi: vec![1.0], fixed_atoms: vec![0.5] };
        assert_eq!(with_atom.void_probability(0.5), Err(LimitError::FixedAtomBoundary(0.5)));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CanonicalMeasure::compound_poisson(1.0, vec![0.5, 0.4]).is_err());
        assert!(CanonicalMeasure::compound_poisson(0.0, vec![1.0]).is_err());
        assert!(CanonicalMeasure::reg_var(1.5, 1.0, ShapeLaw::SinglePoint).is_err());
        let bad_shape = PointMeasure::from_points(Space::punctured_line(), [0.5]).unwrap();
        assert!(CanonicalMeasure::reg_var(1.0, 1.0, ShapeLaw::Empirical { shapes: vec![bad_shape] }).is_err());
        let c = cp(1.0, vec![1.0]);
        assert!(c.sample_seeded(0.0, 1).is_err());
        assert!(c.sample_seeded(1.0, 1).is_err());
    }

    #[test]
    fn json_shapes() {
        let c: CanonicalMeasure =
            serde_json::from_str(r#"{"variant":"compound_poisson_uniform","a":0.5,"pi":[0,1]}"#).unwrap();
        assert_eq!(c, cp(0.5, vec![0.0, 1.0]));
        let r: CanonicalMeasure =
            serde_json::from_str(r#"{"variant":"reg_var_cluster","theta":0.5,"alpha":1,"Q":{"kind":"two_point"}}"#).unwrap();
        assert_eq!(r, CanonicalMeasure::reg_var(0.5, 1.0, ShapeLaw::TwoPoint).unwrap());
        let e: ClusterEvent = serde_json::from_str(r#"{"type":"total_count","k":2}"#).unwrap();
        assert_eq!(e, ClusterEvent::TotalCount { k: 2 });
    }

    #[test]
    fn events_reject_fixed_atom_endpoints() {
        let c = CanonicalMeasure::CompoundPoissonUniform { a: 1.0, pi: vec![1.0], fixed_atoms: vec![0.8] };
        let e = ClusterEvent::CountAtLeast { region: Region::single(Interval::left_open(0.8, 1.0)), c: 1 };
        assert!(matches!(c.cluster_mass(0.5, &e), Err(LimitError::Event(_))));
        assert!(matches!(c.cluster_mass(0.5, &ClusterEvent::And { of: vec![] }), Err(LimitError::Event(_))));
    }
}
