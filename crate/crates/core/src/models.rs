//! Stationary sequences with known extremal behaviour.

use crate::mc::{stream_rng, McRng};
use crate::stats::{open01, wilson, z99, Estimate};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("path length must be at least 1")]
    EmptyPath,
    #[error("right tail vanishes: no level with n*P(xi > u) = 1")]
    ZeroTail,
    #[error("level 1/{n} not attainable: nearest achievable level {nearest} leaves residual {residual:e}")]
    LevelNotAttainable { n: usize, nearest: f64, residual: f64 },
    #[error("{0} replicates are too few for an interval estimate (need at least 100)")]
    TooFewReplicates(usize),
    #[error("tail oracle: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub const DEFAULT_AR1_BURN_IN: usize = 1000;
pub const DEFAULT_DEPTH: u32 = 60;
const MAX_DEPTH: u32 = 62;
const BISECTION_ITERS: usize = 200;
const LEVEL_RESIDUAL: f64 = 1e-9;

fn one() -> f64 {
    1.0
}

fn default_burn_in() -> usize {
    DEFAULT_AR1_BURN_IN
}

fn default_depth() -> u32 {
    DEFAULT_DEPTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceModel {
    /// `|ξ|` Pareto(α) on `[1, ∞)`, positive with probability `p`.
    IidPareto {
        alpha: f64,
        #[serde(default = "one")]
        p: f64,
    },
    /// `ξ_j = max(Z_j, …, Z_{j-m+1})` with `Z` i.i.d. Pareto(α).
    MovingMax { m: usize, alpha: f64 },
    /// `ξ_j = φ ξ_{j-1} + ε_j` with symmetric Pareto-modulus innovations.
    #[serde(rename = "ar1_reg_var")]
    Ar1RegVar {
        phi: f64,
        alpha: f64,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
    },
    /// `ξ_j = Σ_{i=0}^{D} 2^{-i} ε_{j-i}` with fair-coin `ε`.
    AssociatedLinear {
        #[serde(default = "default_depth")]
        depth: u32,
    },
}

/// Which tail an exceedance refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `ξ > t`
    Upper,
    /// `|ξ| > t`
    Modulus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailProbs {
    pub modulus: f64,
    pub upper: f64,
    pub lower: f64,
}

/// A path together with the innovations that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub values: Vec<f64>,
    /// IidPareto: empty. MovingMax: `Z_{2-m}, …, Z_n`. AR(1): `ε_1, …, ε_n`.
    /// AssociatedLinear: the bits `ε_{1-D}, …, ε_n` as 0.0/1.0.
    pub innovations: Vec<f64>,
    /// AR(1) state `ξ_0` after burn-in.
    pub initial: Option<f64>,
}

impl SequenceModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ModelError::InvalidParameter(m));
        let alpha_ok = |a: f64| a.is_finite() && a > 0.0;
        match *self {
            SequenceModel::IidPareto { alpha, p } => {
                if !alpha_ok(alpha) {
                    return bad(format!("alpha={alpha} must be finite and > 0"));
                }
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("p={p} must lie in [0,1]"));
                }
            }
            SequenceModel::MovingMax { m, alpha } => {
                if m == 0 {
                    return bad("window m must be at least 1".into());
                }
                if !alpha_ok(alpha) {
                    return bad(format!("alpha={alpha} must be finite and > 0"));
                }
            }
            SequenceModel::Ar1RegVar { phi, alpha, .. } => {
                if !(phi > 0.0 && phi < 1.0) {
                    return bad(format!("phi={phi} must lie in (0,1)"));
                }
                if !alpha_ok(alpha) {
                    return bad(format!("alpha={alpha} must be finite and > 0"));
                }
            }
            SequenceModel::AssociatedLinear { depth } => {
                if depth == 0 || depth > MAX_DEPTH {
                    return bad(format!("depth={depth} must lie in 1..={MAX_DEPTH}"));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match *self {
            SequenceModel::IidPareto { alpha, p } => format!("IidPareto(alpha={alpha}, p={p})"),
            SequenceModel::MovingMax { m, alpha } => format!("MovingMax(m={m}, alpha={alpha})"),
            SequenceModel::Ar1RegVar { phi, alpha, .. } => format!("AR1RegVar(phi={phi}, alpha={alpha})"),
            SequenceModel::AssociatedLinear { depth } => format!("AssociatedLinear(D={depth})"),
        }
    }

    /// Extremal index where it is known in closed form.
    pub fn known_theta(&self) -> Option<f64> {
        match *self {
            SequenceModel::IidPareto { .. } => Some(1.0),
            SequenceModel::MovingMax { m, .. } => Some(1.0 / m as f64),
            SequenceModel::Ar1RegVar { phi, alpha, .. } => Some(1.0 - phi.powf(alpha)),
            SequenceModel::AssociatedLinear { .. } => None,
        }
    }

    pub fn tail_index(&self) -> Option<f64> {
        match *self {
            SequenceModel::IidPareto { alpha, .. }
            | SequenceModel::MovingMax { alpha, .. }
            | SequenceModel::Ar1RegVar { alpha, .. } => Some(alpha),
            SequenceModel::AssociatedLinear { .. } => None,
        }
    }

    /// Steps discarded before the returned segment starts.
    pub fn burn_in(&self) -> usize {
        match *self {
            SequenceModel::Ar1RegVar { burn_in, .. } => burn_in,
            SequenceModel::AssociatedLinear { depth } => depth as usize,
            SequenceModel::MovingMax { m, .. } => m - 1,
            SequenceModel::IidPareto { .. } => 0,
        }
    }

    /// `(P(|ξ₁|>x), P(ξ₁>x), P(ξ₁<-x))`.
    pub fn tail(&self, x: f64) -> Result<TailProbs> {
        self.validate()?;
        if !(x > 0.0) {
            return Err(ModelError::InvalidParameter(format!("tail argument x={x} must be > 0")));
        }
        Ok(match *self {
            SequenceModel::IidPareto { alpha, p } => {
                let m = pareto_sf(alpha, x);
                TailProbs { modulus: m, upper: p * m, lower: (1.0 - p) * m }
            }
            SequenceModel::MovingMax { m, alpha } => {
                let t = max_sf(m, alpha, x);
                TailProbs { modulus: t, upper: t, lower: 0.0 }
            }
            SequenceModel::Ar1RegVar { phi, alpha, .. } => {
                let oracle = Ar1TailOracle::shared(phi, alpha)?;
                let m = oracle.tail(x);
                TailProbs { modulus: m, upper: 0.5 * m, lower: 0.5 * m }
            }
            SequenceModel::AssociatedLinear { depth } => {
                let t = linear_sf(depth, x);
                TailProbs { modulus: t, upper: t, lower: 0.0 }
            }
        })
    }

    fn side_tail(&self, side: Side, x: f64) -> Result<f64> {
        let t = self.tail(x)?;
        Ok(match side {
            Side::Upper => t.upper,
            Side::Modulus => t.modulus,
        })
    }

    fn bracket(&self) -> (f64, f64) {
        match self {
            SequenceModel::AssociatedLinear { .. } => (0.0, 2.0),
            _ => (1.0, 1e12),
        }
    }

    fn invert_level(&self, n: usize, side: Side) -> Result<f64> {
        self.validate()?;
        if n == 0 {
            return Err(ModelError::EmptyPath);
        }
        let (mut lo, mut hi) = self.bracket();
        let nf = n as f64;
        let g = |x: f64| -> Result<f64> {
            if x <= 0.0 {
                return Ok(nf - 1.0);
            }
            Ok(nf * self.side_tail(side, x)? - 1.0)
        };
        if g(lo)? < 0.0 {
            if self.side_tail(side, lo.max(f64::MIN_POSITIVE))? == 0.0 {
                return Err(ModelError::ZeroTail);
            }
            return Err(ModelError::LevelNotAttainable { n, nearest: lo, residual: g(lo)?.abs() });
        }
        if g(hi)? > 0.0 {
            return Err(ModelError::LevelNotAttainable { n, nearest: hi, residual: g(hi)? });
        }
        for _ in 0..BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (rl, rh) = (g(lo)?.abs(), g(hi)?.abs());
        let (best, residual) = if rl <= rh { (lo, rl) } else { (hi, rh) };
        if residual > LEVEL_RESIDUAL {
            return Err(ModelError::LevelNotAttainable { n, nearest: best, residual });
        }
        Ok(best)
    }

    /// `u_n` with `n·P(ξ₁ > u_n) = 1`.
    pub fn level_u(&self, n: usize) -> Result<f64> {
        self.invert_level(n, Side::Upper)
    }

    /// `a_n` with `n·P(|ξ₁| > a_n) = 1`.
    pub fn scale_a(&self, n: usize) -> Result<f64> {
        self.invert_level(n, Side::Modulus)
    }

    /// Path of length `n` from replicate stream 0 of `seed`.
    pub fn sample_path(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        Ok(self.simulate(n, &mut stream_rng(seed, 0))?.values)
    }

    /// Path of length `n` with its innovations retained.
    pub fn simulate(&self, n: usize, rng: &mut McRng) -> Result<SimulatedPath> {
        self.validate()?;
        if n == 0 {
            return Err(ModelError::EmptyPath);
        }
        let mut values = Vec::with_capacity(n);
        let mut innovations = Vec::new();
        let mut initial = None;
        match *self {
            SequenceModel::IidPareto { alpha, p } => {
                for _ in 0..n {
                    values.push(signed_pareto(rng, alpha, p));
                }
            }
            SequenceModel::MovingMax { m, alpha } => {
                innovations = (0..n + m - 1).map(|_| pareto(rng, alpha)).collect();
                values.extend(innovations.windows(m).map(|w| w.iter().copied().fold(f64::MIN, f64::max)));
            }
            SequenceModel::Ar1RegVar { phi, alpha, burn_in } => {
                let mut x = signed_pareto(rng, alpha, 0.5);
                for _ in 0..burn_in {
                    x = phi * x + signed_pareto(rng, alpha, 0.5);
                }
                initial = Some(x);
                innovations.reserve(n);
                for _ in 0..n {
                    let e = signed_pareto(rng, alpha, 0.5);
                    x = phi * x + e;
                    innovations.push(e);
                    values.push(x);
                }
            }
            SequenceModel::AssociatedLinear { depth } => {
                let mut bits = BitSource::default();
                let scale = (-(depth as f64)).exp2();
                let mut w = 0u64;
                for _ in 0..depth {
                    let b = bits.next(rng);
                    innovations.push(b as f64);
                    w = (w >> 1) | (b << depth);
                }
                for _ in 0..n {
                    let b = bits.next(rng);
                    innovations.push(b as f64);
                    w = (w >> 1) | (b << depth);
                    values.push(w as f64 * scale);
                }
            }
        }
        Ok(SimulatedPath { values, innovations, initial })
    }

    /// All `(j, ξ_j)` with `1 <= j <= n` and `ξ_j > level` (or `|ξ_j| > level`),
    /// in increasing `j`. Equal in law to filtering a full path; the i.i.d.
    /// and moving-maximum models jump between exceedances directly.
    pub fn sample_exceedances(&self, n: usize, level: f64, side: Side, rng: &mut McRng) -> Vec<(usize, f64)> {
        match *self {
            SequenceModel::IidPareto { alpha, p } => sparse_iid(n, alpha, p, level, side, rng),
            SequenceModel::MovingMax { m, alpha } => sparse_moving_max(n, m, alpha, level, side, rng),
            SequenceModel::Ar1RegVar { phi, alpha, burn_in } => {
                let mut out = Vec::new();
                let mut x = signed_pareto(rng, alpha, 0.5);
                for _ in 0..burn_in {
                    x = phi * x + signed_pareto(rng, alpha, 0.5);
                }
                for j in 1..=n {
                    x = phi * x + signed_pareto(rng, alpha, 0.5);
                    let hit = match side {
                        Side::Upper => x > level,
                        Side::Modulus => x.abs() > level,
                    };
                    if hit {
                        out.push((j, x));
                    }
                }
                out
            }
            SequenceModel::AssociatedLinear { depth } => {
                let scale = (-(depth as f64)).exp2();
                let threshold = first_word_above(level, depth);
                let mut bits = BitSource::default();
                let mut w = 0u64;
                for _ in 0..depth {
                    w = (w >> 1) | (bits.next(rng) << depth);
                }
                let mut out = Vec::new();
                for j in 1..=n {
                    w = (w >> 1) | (bits.next(rng) << depth);
                    if w >= threshold {
                        out.push((j, w as f64 * scale));
                    }
                }
                out
            }
        }
    }
}

/// Pareto(α) survival function on `[1, ∞)`.
fn pareto_sf(alpha: f64, x: f64) -> f64 {
    if x < 1.0 {
        1.0
    } else {
        x.powf(-alpha)
    }
}

/// `1 - (1 - x^{-α})^m` without cancellation.
fn max_sf(m: usize, alpha: f64, x: f64) -> f64 {
    if x < 1.0 {
        return 1.0;
    }
    -(m as f64 * (-x.powf(-alpha)).ln_1p()).exp_m1()
}

/// Right tail of the truncated binary expansion. Exact on its lattice for
/// small depth; the uniform `(2 - x)/2` once the lattice is finer than
/// double precision.
fn linear_sf(depth: u32, x: f64) -> f64 {
    if x >= 2.0 {
        return 0.0;
    }
    if depth > 50 {
        return ((2.0 - x) / 2.0).clamp(0.0, 1.0);
    }
    let cells = (1u64 << (depth + 1)) as f64;
    let scaled = x * (1u64 << depth) as f64;
    let below = (scaled.floor() + 1.0).clamp(0.0, cells);
    (cells - below) / cells
}

/// Smallest shift-register word whose value exceeds `level`.
fn first_word_above(level: f64, depth: u32) -> u64 {
    let scale = (-(depth as f64)).exp2();
    let (mut lo, mut hi) = (0u64, 1u64 << (depth + 1));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if mid as f64 * scale > level {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

#[derive(Default)]
struct BitSource {
    word: u64,
    left: u32,
}

impl BitSource {
    #[inline]
    fn next(&mut self, rng: &mut McRng) -> u64 {
        if self.left == 0 {
            self.word = rng.next_u64();
            self.left = 64;
        }
        let b = self.word & 1;
        self.word >>= 1;
        self.left -= 1;
        b
    }
}

#[inline]
fn pareto(rng: &mut McRng, alpha: f64) -> f64 {
    let u = open01(rng);
    if alpha == 1.0 {
        1.0 / u
    } else {
        u.powf(-1.0 / alpha)
    }
}

/// Pareto on `[base, ∞)`.
#[inline]
fn pareto_from(rng: &mut McRng, alpha: f64, base: f64) -> f64 {
    base * pareto(rng, alpha)
}

#[inline]
fn signed_pareto(rng: &mut McRng, alpha: f64, p: f64) -> f64 {
    let m = pareto(rng, alpha);
    if rng.random::<f64>() < p {
        m
    } else {
        -m
    }
}

/// Geometric skip to the next success of a Bernoulli(q) sequence (≥ 1).
#[inline]
fn geometric_gap(rng: &mut McRng, log_miss: f64) -> usize {
    if log_miss == f64::NEG_INFINITY {
        return 1;
    }
    let g = (open01(rng).ln() / log_miss).floor();
    if g >= usize::MAX as f64 / 2.0 {
        usize::MAX / 2
    } else {
        1 + g as usize
    }
}

fn sparse_iid(n: usize, alpha: f64, p: f64, level: f64, side: Side, rng: &mut McRng) -> Vec<(usize, f64)> {
    let base = level.max(1.0);
    let modulus_q = pareto_sf(alpha, base);
    let q = match side {
        Side::Upper => p * modulus_q,
        Side::Modulus => modulus_q,
    };
    let mut out = Vec::new();
    if q <= 0.0 {
        return out;
    }
    let log_miss = (-q).ln_1p();
    let mut j = 0usize;
    loop {
        j = j.saturating_add(geometric_gap(rng, log_miss));
        if j > n {
            return out;
        }
        let v = pareto_from(rng, alpha, base);
        let positive = side == Side::Upper || rng.random::<f64>() < p;
        out.push((j, if positive { v } else { -v }));
    }
}

fn sparse_moving_max(n: usize, m: usize, alpha: f64, level: f64, side: Side, rng: &mut McRng) -> Vec<(usize, f64)> {
    // ξ ≥ 1 > 0, so both sides coincide.
    let _ = side;
    let base = level.max(1.0);
    let q = pareto_sf(alpha, base);
    let mut maxima: BTreeMap<usize, f64> = BTreeMap::new();
    if q <= 0.0 {
        return Vec::new();
    }
    if level < 1.0 {
        // every ξ exceeds; no sparsity to exploit
        let zs: Vec<f64> = (0..n + m - 1).map(|_| pareto(rng, alpha)).collect();
        return zs
            .windows(m)
            .enumerate()
            .map(|(i, w)| (i + 1, w.iter().copied().fold(f64::MIN, f64::max)))
            .collect();
    }
    let log_miss = (-q).ln_1p();
    let total = n + m - 1;
    // Z index z = 1..=total corresponds to Z_{z-m+1}, which feeds ξ_j for
    // j in [z-m+1, z] ∩ [1, n].
    let mut z = 0usize;
    loop {
        z = z.saturating_add(geometric_gap(rng, log_miss));
        if z > total {
            break;
        }
        let v = pareto_from(rng, alpha, base);
        let first = z.saturating_sub(m - 1).max(1);
        let last = z.min(n);
        for j in first..=last {
            let e = maxima.entry(j).or_insert(v);
            if v > *e {
                *e = v;
            }
        }
    }
    maxima.into_iter().collect()
}

// ---------------------------------------------------------------------------
// AR(1) marginal tail oracle

pub const ORACLE_SEED: u64 = 0x5eed_0ac1e;
pub const ORACLE_DRAWS: usize = 10_000_000;
const ORACLE_BATCHES: usize = 100;
const ORACLE_DECADES: (i32, i32) = (-3, 8);
const ORACLE_PER_DECADE: usize = 20;
/// Beyond the last grid point with this many exceedances the tail is
/// extended by the exact power law.
const ANCHOR_MIN_COUNT: u64 = 10_000;

/// Persisted Monte Carlo estimate of `P(|ξ| > x)` for a stationary AR(1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ar1TailOracle {
    pub phi: f64,
    pub alpha: f64,
    pub oracle_seed: u64,
    pub draws: usize,
    pub burn_in: usize,
    pub x_grid: Vec<f64>,
    pub tail: Vec<f64>,
    pub ci_half_widths: Vec<f64>,
    /// `#{|ξ_j| > x_grid[i]}`; the tail values are recomputed from these on
    /// load so a cached oracle is bit-identical to a fresh one.
    pub counts: Vec<u64>,
    pub anchor: usize,
}

fn oracle_grid() -> Vec<f64> {
    let (lo, hi) = ORACLE_DECADES;
    let steps = (hi - lo) as usize * ORACLE_PER_DECADE;
    (0..=steps).map(|i| 10f64.powf(lo as f64 + i as f64 / ORACLE_PER_DECADE as f64)).collect()
}

static ORACLES: OnceLock<Mutex<HashMap<(u64, u64), Arc<Ar1TailOracle>>>> = OnceLock::new();

impl Ar1TailOracle {
    /// Simulates `draws` values of one long stationary path.
    pub fn build(phi: f64, alpha: f64, seed: u64, draws: usize) -> Self {
        let grid = oracle_grid();
        let mut rng = stream_rng(seed, 0);
        let per_batch = draws / ORACLE_BATCHES;
        let draws = per_batch * ORACLE_BATCHES;
        let mut batch_counts = vec![vec![0u64; grid.len()]; ORACLE_BATCHES];
        let mut x = signed_pareto(&mut rng, alpha, 0.5);
        for _ in 0..DEFAULT_AR1_BURN_IN {
            x = phi * x + signed_pareto(&mut rng, alpha, 0.5);
        }
        for hist in batch_counts.iter_mut() {
            for _ in 0..per_batch {
                x = phi * x + signed_pareto(&mut rng, alpha, 0.5);
                let above = grid.partition_point(|&g| g < x.abs());
                if above > 0 {
                    hist[above - 1] += 1;
                }
            }
        }
        // cumulative from the top: count of values strictly above grid[i]
        for hist in batch_counts.iter_mut() {
            for i in (0..grid.len() - 1).rev() {
                hist[i] += hist[i + 1];
            }
        }
        let counts: Vec<u64> = (0..grid.len()).map(|i| batch_counts.iter().map(|h| h[i]).sum()).collect();
        let z = z99();
        let ci_half_widths = (0..grid.len())
            .map(|i| {
                let props: Vec<f64> = batch_counts.iter().map(|h| h[i] as f64 / per_batch as f64).collect();
                let mean = props.iter().sum::<f64>() / props.len() as f64;
                let var = props.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (props.len() - 1) as f64;
                z * (var / props.len() as f64).sqrt()
            })
            .collect();
        Self::assemble(phi, alpha, seed, draws, grid, counts, ci_half_widths)
    }

    fn assemble(
        phi: f64,
        alpha: f64,
        seed: u64,
        draws: usize,
        x_grid: Vec<f64>,
        counts: Vec<u64>,
        ci_half_widths: Vec<f64>,
    ) -> Self {
        let tail = counts.iter().map(|&c| c as f64 / draws as f64).collect();
        let anchor = counts.iter().rposition(|&c| c >= ANCHOR_MIN_COUNT).unwrap_or(0);
        Ar1TailOracle {
            phi,
            alpha,
            oracle_seed: seed,
            draws,
            burn_in: DEFAULT_AR1_BURN_IN,
            x_grid,
            tail,
            ci_half_widths,
            counts,
            anchor,
        }
    }

    fn cache_path(phi: f64, alpha: f64) -> PathBuf {
        let dir = std::env::var_os("CLUSTER_LIMIT_CACHE_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("cluster-limit"));
        dir.join(format!(
            "ar1_tail_{:016x}_{:016x}_{:x}_{}.json",
            phi.to_bits(),
            alpha.to_bits(),
            ORACLE_SEED,
            ORACLE_DRAWS
        ))
    }

    fn load(path: &PathBuf, phi: f64, alpha: f64) -> Option<Self> {
        let text = std::fs::read_to_string(path).ok()?;
        let raw: Ar1TailOracle = serde_json::from_str(&text).ok()?;
        let grid = oracle_grid();
        let fits = raw.phi == phi
            && raw.alpha == alpha
            && raw.oracle_seed == ORACLE_SEED
            && raw.draws == ORACLE_DRAWS
            && raw.counts.len() == grid.len();
        if !fits {
            return None;
        }
        Some(Self::assemble(phi, alpha, ORACLE_SEED, raw.draws, grid, raw.counts, raw.ci_half_widths))
    }

    fn persist(&self, path: &PathBuf) {
        let Some(dir) = path.parent() else { return };
        if std::fs::create_dir_all(dir).is_err() {
            return;
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let Ok(text) = serde_json::to_string(self) else { return };
        if std::fs::write(&tmp, text).is_ok() && std::fs::rename(&tmp, path).is_err() {
            let _ = std::fs::remove_file(&tmp);
        }
    }

    /// Process-wide oracle for `(φ, α)`, loaded from the on-disk cache or
    /// built and persisted on first use.
    pub fn shared(phi: f64, alpha: f64) -> Result<Arc<Self>> {
        let table = ORACLES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = table.lock().map_err(|_| ModelError::Oracle("oracle table poisoned".into()))?;
        let key = (phi.to_bits(), alpha.to_bits());
        if let Some(o) = guard.get(&key) {
            return Ok(o.clone());
        }
        let path = Self::cache_path(phi, alpha);
        let oracle = match Self::load(&path, phi, alpha) {
            Some(o) => o,
            None => {
                log::info!("building AR(1) tail oracle for phi={phi} alpha={alpha}");
                let o = Self::build(phi, alpha, ORACLE_SEED, ORACLE_DRAWS);
                o.persist(&path);
                o
            }
        };
        let arc = Arc::new(oracle);
        guard.insert(key, arc.clone());
        Ok(arc)
    }

    /// Interpolated `P(|ξ| > x)`: log-log between grid points, power law
    /// past the anchor.
    pub fn tail(&self, x: f64) -> f64 {
        let g = &self.x_grid;
        let a = self.anchor;
        if x >= g[a] {
            return self.tail[a] * (g[a] / x).powf(self.alpha);
        }
        if x <= g[0] {
            return 1.0 - (1.0 - self.tail[0]) * x / g[0];
        }
        let i = g.partition_point(|&gg| gg <= x) - 1;
        let (x0, x1) = (g[i].ln(), g[i + 1].ln());
        let (y0, y1) = (self.tail[i].ln(), self.tail[i + 1].ln());
        let t = (x.ln() - x0) / (x1 - x0);
        (y0 + t * (y1 - y0)).exp()
    }

    /// Tail with its Monte Carlo half-width at the nearest grid point.
    pub fn tail_estimate(&self, x: f64) -> Estimate {
        let i = self.x_grid.partition_point(|&g| g < x).min(self.x_grid.len() - 1).min(self.anchor);
        let rel = if self.tail[i] > 0.0 { self.ci_half_widths[i] / self.tail[i] } else { 0.0 };
        let v = self.tail(x);
        Estimate { value: v, half_width: rel * v }
    }
}

// ---------------------------------------------------------------------------
// Association diagnostic

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCovariance {
    pub lag: usize,
    pub cov: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceBound {
    pub n: usize,
    pub m: usize,
    pub reps: usize,
    pub level: f64,
    /// `n Σ_{j=m+1}^{n} Cov(1{ξ₁>u_n}, 1{ξ_j>u_n})`.
    pub estimate: Estimate,
    /// `Cov(1{ξ₁>u_n}, 1{ξ_{1+h}>u_n})` for small lags `h`.
    pub per_lag: Vec<LagCovariance>,
}

const REPORTED_LAGS: usize = 64;

/// Monte Carlo estimate of the association partial sum at `(n, m)`.
///
/// Each replicate simulates `2n` values so that every pair `(t, t+h)` with
/// `t <= n` and `h < n` lies inside the path; stationarity makes all `n`
/// starting points usable.
pub fn assoc_covariance_bound(model: &SequenceModel, n: usize, m: usize, reps: usize, seed: u64) -> Result<CovarianceBound> {
    if reps < 100 {
        return Err(ModelError::TooFewReplicates(reps));
    }
    if n < 2 || m == 0 || m >= n {
        return Err(ModelError::InvalidParameter(format!("need 1 <= m < n, got m={m}, n={n}")));
    }
    let level = model.level_u(n)?;
    let lags = REPORTED_LAGS.min(n - 1);

    struct Acc {
        far_pairs: Vec<f64>,
        counts: Vec<f64>,
        lag_pairs: Vec<Vec<f64>>,
    }
    let acc = crate::mc::run_replicates(
        reps,
        seed,
        || Acc { far_pairs: Vec::new(), counts: Vec::new(), lag_pairs: Vec::new() },
        |acc, _, rng| {
            let pos: Vec<usize> = model.sample_exceedances(2 * n, level, Side::Upper, rng).into_iter().map(|e| e.0).collect();
            let mut far = 0u64;
            let mut near = vec![0u64; lags + 1];
            for (i, &t) in pos.iter().enumerate() {
                if t > n {
                    break;
                }
                let lo = pos.partition_point(|&s| s < t + m);
                let hi = pos.partition_point(|&s| s <= t + n - 1);
                far += (hi - lo) as u64;
                for &s in &pos[i + 1..] {
                    let h = s - t;
                    if h > lags {
                        break;
                    }
                    near[h] += 1;
                }
            }
            acc.far_pairs.push(far as f64);
            acc.counts.push(pos.len() as f64);
            acc.lag_pairs.push(near.iter().map(|&c| c as f64).collect());
        },
        |t, p| {
            t.far_pairs.extend(p.far_pairs);
            t.counts.extend(p.counts);
            t.lag_pairs.extend(p.lag_pairs);
        },
    );

    let r = reps as f64;
    let nf = n as f64;
    let p_hat = acc.counts.iter().sum::<f64>() / (r * 2.0 * nf);
    let z = z99();
    let mean_sd = |xs: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = xs.collect();
        let mean = v.iter().sum::<f64>() / r;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0);
        (mean, var.sqrt())
    };

    let width = (n - m) as f64;
    let (a_mean, _) = mean_sd(&mut acc.far_pairs.iter().copied());
    let value = a_mean - nf * width * p_hat * p_hat;
    let (_, psi_sd) = mean_sd(&mut acc.far_pairs.iter().zip(&acc.counts).map(|(a, k)| a - width * p_hat * k));
    let estimate = Estimate { value, half_width: z * psi_sd / r.sqrt() };

    let per_lag = (1..=lags)
        .map(|h| {
            let (pair_mean, _) = mean_sd(&mut acc.lag_pairs.iter().map(|l| l[h] / nf));
            let cov = pair_mean - p_hat * p_hat;
            let (_, sd) = mean_sd(&mut acc.lag_pairs.iter().zip(&acc.counts).map(|(l, k)| l[h] / nf - p_hat * k / nf));
            // at lags with next to no observed pairs the delta-method width
            // collapses to the p̂ term alone; the score interval of the
            // pooled pair rate keeps the interval honest there
            let pairs = acc.lag_pairs.iter().map(|l| l[h]).sum::<f64>() as u64;
            let (lo, hi) = wilson(pairs, (r * nf) as u64, z);
            let pp = p_hat * p_hat;
            let score = (hi - pp - cov).max(cov - (lo - pp));
            LagCovariance { lag: h, cov: Estimate { value: cov, half_width: (z * sd / r.sqrt()).max(score) } }
        })
        .collect();

    Ok(CovarianceBound { n, m, reps, level, estimate, per_lag })
}
