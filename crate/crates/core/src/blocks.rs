//! Blocks decomposition and the Monte Carlo estimators built on it.
//!
//! Indices `1..=n` are cut into `k = ⌊n/r⌋` blocks `((i-1)r, ir]`; indices
//! past `k·r` belong to no block. Full-path statistics (the whole `N_n`)
//! still see them.
//!
//! Two modes share one interface:
//!
//! * [`Mode::Exceedance`]: atoms at `j/n` for `ξ_j > u_n`, and the block
//!   "maximum" is the time of the block's last exceedance;
//! * [`Mode::Scaled`]: atoms at `ξ_j/a_n`, block maximum `max |ξ_j|/a_n`.
//!
//! Estimators of `Σ_i P(Y_i > x)`-type quantities average over all `k`
//! blocks of every replicate (blocks are identically distributed), with a
//! Wilson interval on the pooled proportion scaled by `k`.

use crate::limits::{ClusterEvent, LimitError};
use crate::mc::{run_replicates, McRng};
use crate::measure::{MeasureError, PointMeasure, Space, TestFunction};
use crate::models::{ModelError, SequenceModel, Side};
use crate::stats::{wilson, z99, Estimate, Moments};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockError {
    #[error("invalid block plan: {0}")]
    InvalidPlan(String),
    #[error("path entry {0} is exactly zero")]
    ZeroEntry(usize),
    #[error("path has length {got}, plan expects {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("{0} replicates are too few (need at least 100)")]
    TooFewReplicates(usize),
    #[error("no exceeding blocks")]
    NoExceedingBlocks,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, BlockError>;

pub const MIN_REPS: usize = 100;
/// Atoms below this fraction of the block maximum are dropped from
/// normalized cluster shapes.
pub const SHAPE_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRule {
    /// `r = ⌈√n⌉`
    #[default]
    Sqrt,
    /// `r = ⌈n^{2/3}⌉`
    TwoThirds,
    Fixed(usize),
}

impl BlockRule {
    pub fn block_length(&self, n: usize) -> usize {
        match *self {
            BlockRule::Sqrt => ceil_sqrt(n),
            BlockRule::TwoThirds => {
                let r = (n as f64).powf(2.0 / 3.0).ceil() as usize;
                // guard against pow rounding just above an exact cube square
                if r > 1 && ((r - 1) as f64).powi(3) >= (n as f64).powi(2) {
                    r - 1
                } else {
                    r
                }
            }
            BlockRule::Fixed(r) => r,
        }
    }
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt().ceil() as usize;
    while r > 1 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    while r * r < n {
        r += 1;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub n: usize,
    pub r: usize,
    pub k: usize,
}

impl BlockPlan {
    pub fn new(n: usize, r: usize) -> Result<Self> {
        if n == 0 || r == 0 {
            return Err(BlockError::InvalidPlan(format!("n={n} and r={r} must be positive")));
        }
        if r > n {
            return Err(BlockError::InvalidPlan(format!("block length r={r} exceeds n={n}")));
        }
        Ok(BlockPlan { n, r, k: n / r })
    }

    pub fn from_rule(n: usize, rule: BlockRule) -> Result<Self> {
        Self::new(n, rule.block_length(n))
    }

    /// Zero-based block of index `j` (one-based), if it lies in a block.
    pub fn block_of(&self, j: usize) -> Option<usize> {
        if j == 0 || j > self.k * self.r {
            None
        } else {
            Some((j - 1) / self.r)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exceedance,
    Scaled,
}

/// How a path becomes a point process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Exceedance { u: f64 },
    Scaled { a: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    /// One-based block index.
    pub index: usize,
    pub sub_process: PointMeasure,
    pub block_max: Option<f64>,
    pub exceedance_count: u64,
}

/// `Σ_j δ_{j/n} 1{ξ_j > u}` on `(0,1]`.
pub fn exceedance_process(path: &[f64], u: f64) -> Result<PointMeasure> {
    if path.is_empty() {
        return Err(BlockError::InvalidArgument("empty path".into()));
    }
    let n = path.len() as f64;
    let atoms = path.iter().enumerate().filter(|(_, &v)| v > u).map(|(j, _)| ((j + 1) as f64 / n, 1)).collect();
    Ok(PointMeasure::new(Space::unit_interval(), atoms)?)
}

/// `Σ_j δ_{ξ_j/a}` on the punctured line.
pub fn scaled_process(path: &[f64], a: f64) -> Result<PointMeasure> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(BlockError::InvalidArgument(format!("scaling a={a} must be finite and > 0")));
    }
    if let Some(j) = path.iter().position(|&v| v == 0.0) {
        return Err(BlockError::ZeroEntry(j + 1));
    }
    Ok(PointMeasure::new(Space::punctured_line(), path.iter().map(|&v| (v / a, 1)).collect())?)
}

/// Per-block sub-processes of a concrete path.
pub fn split_blocks(path: &[f64], source: Source, plan: &BlockPlan) -> Result<Vec<BlockSummary>> {
    if path.len() != plan.n {
        return Err(BlockError::LengthMismatch { got: path.len(), expected: plan.n });
    }
    if plan.r > plan.n {
        return Err(BlockError::InvalidPlan(format!("block length r={} exceeds n={}", plan.r, plan.n)));
    }
    let n = plan.n as f64;
    let mut out = Vec::with_capacity(plan.k);
    for i in 0..plan.k {
        let range = i * plan.r..(i + 1) * plan.r;
        let sub_process = match source {
            Source::Exceedance { u } => {
                let atoms = range.filter(|&j| path[j] > u).map(|j| ((j + 1) as f64 / n, 1)).collect();
                PointMeasure::new(Space::unit_interval(), atoms)?
            }
            Source::Scaled { a } => scaled_process(&path[range], a)?,
        };
        let block_max = sub_process.sup_modulus().ok();
        let exceedance_count = sub_process.total_count();
        out.push(BlockSummary { index: i + 1, sub_process, block_max, exceedance_count });
    }
    Ok(out)
}

/// CSV with columns `replicate,i,block_max,exceedance_count`; an empty
/// `block_max` cell marks a null block.
pub fn write_blocks_csv<W: std::io::Write>(out: W, rows: &[(usize, BlockSummary)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| BlockError::Csv(e.to_string());
    w.write_record(["replicate", "i", "block_max", "exceedance_count"]).map_err(err)?;
    for (rep, b) in rows {
        let max = b.block_max.map(|m| m.to_string()).unwrap_or_default();
        w.write_record([rep.to_string(), b.index.to_string(), max, b.exceedance_count.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| BlockError::Csv(e.to_string()))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Sparse replicate engine

/// Level, atom map and event threshold for one `(model, n, mode)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Setting {
    pub mode: Mode,
    pub plan: BlockPlan,
    /// `u_n` or `a_n`.
    pub level: f64,
    /// Events with `ξ > threshold` (or `|ξ| >` it) are simulated; nothing
    /// below it can influence the statistic at hand.
    pub threshold: f64,
}

impl Setting {
    /// `floor` is the smallest atom modulus the statistic can see, in the
    /// units of the point process (ignored in exceedance mode, where
    /// every exceedance of `u_n` is an atom).
    pub fn new(model: &SequenceModel, plan: BlockPlan, mode: Mode, floor: f64) -> Result<Self> {
        model.validate()?;
        Ok(match mode {
            Mode::Exceedance => {
                let u = model.level_u(plan.n)?;
                Setting { mode, plan, level: u, threshold: u }
            }
            Mode::Scaled => {
                if !(floor > 0.0) {
                    return Err(BlockError::InvalidArgument(format!("observation floor {floor} must be > 0")));
                }
                let a = model.scale_a(plan.n)?;
                Setting { mode, plan, level: a, threshold: a * floor }
            }
        })
    }

    fn side(&self) -> Side {
        match self.mode {
            Mode::Exceedance => Side::Upper,
            Mode::Scaled => Side::Modulus,
        }
    }

    pub fn space(&self) -> Space {
        match self.mode {
            Mode::Exceedance => Space::unit_interval(),
            Mode::Scaled => Space::punctured_line(),
        }
    }

    #[inline]
    pub fn atom(&self, j: usize, v: f64) -> f64 {
        match self.mode {
            Mode::Exceedance => j as f64 / self.plan.n as f64,
            Mode::Scaled => v / self.level,
        }
    }

    pub fn events(&self, model: &SequenceModel, rng: &mut McRng) -> Vec<(usize, f64)> {
        model.sample_exceedances(self.plan.n, self.threshold, self.side(), rng)
    }

    /// Calls `f(block, events)` for every block holding at least one event.
    pub fn for_each_block(&self, events: &[(usize, f64)], mut f: impl FnMut(usize, &[(usize, f64)])) {
        let mut start = 0;
        while start < events.len() {
            let Some(b) = self.plan.block_of(events[start].0) else { break };
            let mut end = start + 1;
            while end < events.len() && self.plan.block_of(events[end].0) == Some(b) {
                end += 1;
            }
            f(b, &events[start..end]);
            start = end;
        }
    }

    pub fn block_max(&self, evs: &[(usize, f64)]) -> f64 {
        evs.iter().map(|&(j, v)| self.atom(j, v).abs()).fold(0.0, f64::max)
    }

    pub fn measure(&self, evs: &[(usize, f64)], above: f64) -> Result<PointMeasure> {
        let atoms = evs.iter().map(|&(j, v)| (self.atom(j, v), 1)).filter(|a| a.0.abs() > above).collect();
        Ok(PointMeasure::new(self.space(), atoms)?)
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_REPS {
        Err(BlockError::TooFewReplicates(reps))
    } else {
        Ok(())
    }
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(BlockError::InvalidArgument(format!("level x={x} must be finite and > 0")))
    }
}

/// `k · (pooled block frequency)` with its Wilson interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFrequency {
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub x: f64,
    pub label: String,
    pub hits: u64,
    pub reps: usize,
    pub estimate: f64,
    pub ci: (f64, f64),
}

impl BlockFrequency {
    fn new(plan: &BlockPlan, x: f64, label: String, hits: u64, reps: usize) -> Self {
        let trials = plan.k as u64 * reps as u64;
        let (lo, hi) = wilson(hits, trials, z99());
        let k = plan.k as f64;
        BlockFrequency {
            n: plan.n,
            r: plan.r,
            k: plan.k,
            x,
            label,
            hits,
            reps,
            estimate: k * hits as f64 / trials as f64,
            ci: (k * lo, k * hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionAStat {
    pub rows: Vec<BlockFrequency>,
    /// Largest estimate across the schedule, per `x`.
    pub sup_over_schedule: Vec<(f64, f64)>,
}

/// `Σ_i P(Y_i > x)` for every plan and `x`.
pub fn condition_a_stat(
    model: &SequenceModel,
    plans: &[BlockPlan],
    mode: Mode,
    xs: &[f64],
    reps: usize,
    seed: u64,
) -> Result<ConditionAStat> {
    check_reps(reps)?;
    xs.iter().try_for_each(|&x| check_x(x))?;
    let floor = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rows = Vec::new();
    for plan in plans {
        let s = Setting::new(model, *plan, mode, floor)?;
        let hits = run_replicates(
            reps,
            seed,
            || vec![0u64; xs.len()],
            |acc, _, rng| {
                let evs = s.events(model, rng);
                s.for_each_block(&evs, |_, b| {
                    let y = s.block_max(b);
                    for (h, &x) in acc.iter_mut().zip(xs) {
                        if y > x {
                            *h += 1;
                        }
                    }
                });
            },
            |t, p| t.iter_mut().zip(p).for_each(|(a, b)| *a += b),
        );
        for (&x, &h) in xs.iter().zip(&hits) {
            rows.push(BlockFrequency::new(plan, x, format!("x={x}"), h, reps));
        }
    }
    let sup_over_schedule = xs
        .iter()
        .map(|&x| {
            let sup = rows.iter().filter(|r| r.x == x).map(|r| r.estimate).fold(0.0, f64::max);
            (x, sup)
        })
        .collect();
    Ok(ConditionAStat { rows, sup_over_schedule })
}

/// `Σ_i P(Y_i > x, N_i ∈ M)` per event, where `N_i` is seen above `x`.
pub fn condition_b_stat(
    model: &SequenceModel,
    plan: &BlockPlan,
    mode: Mode,
    x: f64,
    events: &[ClusterEvent],
    reps: usize,
    seed: u64,
) -> Result<Vec<BlockFrequency>> {
    check_reps(reps)?;
    check_x(x)?;
    let s = Setting::new(model, *plan, mode, x)?;
    for e in events {
        e.validate(&s.space(), &[])?;
    }
    let hits = run_replicates(
        reps,
        seed,
        || vec![0u64; events.len()],
        |acc, _, rng| {
            let evs = s.events(model, rng);
            s.for_each_block(&evs, |_, b| {
                if s.block_max(b) > x {
                    let mu = s.measure(b, x).expect("atoms lie in the space");
                    for (h, e) in acc.iter_mut().zip(events) {
                        if e.decide(&mu) {
                            *h += 1;
                        }
                    }
                }
            });
        },
        |t, p| t.iter_mut().zip(p).for_each(|(a, b)| *a += b),
    );
    Ok(events.iter().zip(hits).map(|(e, h)| BlockFrequency::new(plan, x, e.label(), h, reps)).collect())
}

/// Pooled within-block exceedance counts given at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSizes {
    pub n: usize,
    pub r: usize,
    /// `k ↦ number of blocks with exactly k exceedances`.
    pub counts: BTreeMap<u64, u64>,
    pub qualifying_blocks: u64,
}

impl ClusterSizes {
    /// `π̂(k)` for `k = 1..=max`, as `probs[k-1]`.
    pub fn probs(&self) -> Vec<f64> {
        let max = self.counts.keys().copied().max().unwrap_or(0) as usize;
        let mut p = vec![0.0; max];
        for (&k, &c) in &self.counts {
            p[k as usize - 1] = c as f64 / self.qualifying_blocks as f64;
        }
        p
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().map(|(&k, &c)| k as f64 * c as f64).sum::<f64>() / self.qualifying_blocks as f64
    }
}

pub fn cluster_sizes(model: &SequenceModel, plan: &BlockPlan, reps: usize, seed: u64) -> Result<ClusterSizes> {
    let s = Setting::new(model, *plan, Mode::Exceedance, 1.0)?;
    let counts = run_replicates(
        reps,
        seed,
        BTreeMap::<u64, u64>::new,
        |acc, _, rng| {
            let evs = s.events(model, rng);
            s.for_each_block(&evs, |_, b| *acc.entry(b.len() as u64).or_insert(0) += 1);
        },
        |t, p| p.into_iter().for_each(|(k, c)| *t.entry(k).or_insert(0) += c),
    );
    let qualifying_blocks = counts.values().sum();
    if qualifying_blocks == 0 {
        return Err(BlockError::NoExceedingBlocks);
    }
    Ok(ClusterSizes { n: plan.n, r: plan.r, counts, qualifying_blocks })
}

/// Normalized shapes of blocks whose maximum exceeds `x` (scaled mode).
/// Atoms below `floor` times the block maximum are dropped.
pub fn cluster_shapes_with_floor(
    model: &SequenceModel,
    plan: &BlockPlan,
    x: f64,
    floor: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<PointMeasure>> {
    check_x(x)?;
    if !(floor > 0.0 && floor <= 1.0) {
        return Err(BlockError::InvalidArgument(format!("shape floor {floor} must lie in (0,1]")));
    }
    let s = Setting::new(model, *plan, Mode::Scaled, x * floor)?;
    let shapes = run_replicates(
        reps,
        seed,
        Vec::new,
        |acc, _, rng| {
            let evs = s.events(model, rng);
            s.for_each_block(&evs, |_, b| {
                let top = s.block_max(b);
                if top > x {
                    let mu = s.measure(b, floor * top).expect("atoms lie in the space");
                    acc.push(mu.normalize_by_max().expect("block has an atom above x"));
                }
            });
        },
        |t, p| t.extend(p),
    );
    if shapes.is_empty() {
        return Err(BlockError::NoExceedingBlocks);
    }
    Ok(shapes)
}

pub fn cluster_shapes(model: &SequenceModel, plan: &BlockPlan, x: f64, reps: usize, seed: u64) -> Result<Vec<PointMeasure>> {
    cluster_shapes_with_floor(model, plan, x, SHAPE_FLOOR, reps, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub theta_hat: f64,
    pub ci: (f64, f64),
    pub known_theta: Option<f64>,
}

/// `θ̂ = k · P̂(max_{j≤r} |ξ_j| > a_n)`.
pub fn extremal_index(model: &SequenceModel, plans: &[BlockPlan], reps: usize, seed: u64) -> Result<Vec<ThetaEstimate>> {
    let stat = condition_a_stat(model, plans, Mode::Scaled, &[1.0], reps, seed)?;
    Ok(stat
        .rows
        .into_iter()
        .map(|r| ThetaEstimate {
            n: r.n,
            r: r.r,
            k: r.k,
            theta_hat: r.estimate,
            ci: r.ci,
            known_theta: model.known_theta(),
        })
        .collect())
}

/// Per-replicate counts `N_n({|y| > x})` of the full process.
pub fn modulus_counts(model: &SequenceModel, n: usize, mode: Mode, x: f64, reps: usize, seed: u64) -> Result<Vec<u64>> {
    check_x(x)?;
    let s = Setting::new(model, BlockPlan::new(n, 1)?, mode, x)?;
    Ok(crate::mc::map_replicates(reps, seed, |_, rng| {
        s.events(model, rng).iter().filter(|&&(j, v)| s.atom(j, v).abs() > x).count() as u64
    }))
}

/// Monte Carlo Laplace statistics of one `(plan, f)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceStat {
    /// `Ê e^{-N_n(f)}`
    pub full: Estimate,
    /// `Σ_i Ê(1 - e^{-N_i(f)})`
    pub block_sum: Estimate,
}

pub fn laplace_stat(
    model: &SequenceModel,
    plan: &BlockPlan,
    mode: Mode,
    f: &TestFunction,
    reps: usize,
    seed: u64,
) -> Result<LaplaceStat> {
    check_reps(reps)?;
    if f.is_zero() {
        return Ok(LaplaceStat { full: Estimate::exact(1.0), block_sum: Estimate::exact(0.0) });
    }
    let s = Setting::new(model, *plan, mode, f.inner_gap())?;
    let (full, blocks) = run_replicates(
        reps,
        seed,
        || (Moments::default(), Moments::default()),
        |acc, _, rng| {
            let evs = s.events(model, rng);
            let total: f64 = evs.iter().map(|&(j, v)| f.eval(s.atom(j, v))).sum();
            acc.0.push((-total).exp());
            let mut sum = 0.0;
            s.for_each_block(&evs, |_, b| {
                let si: f64 = b.iter().map(|&(j, v)| f.eval(s.atom(j, v))).sum();
                sum += -(-si).exp_m1();
            });
            acc.1.push(sum);
        },
        |t, p| {
            t.0.merge(&p.0);
            t.1.merge(&p.1);
        },
    );
    let z = z99();
    Ok(LaplaceStat { full: full.mean_estimate(z), block_sum: blocks.mean_estimate(z) })
}

/// Asymptotic-independence gap `|Ê e^{-N_n(f)} - Π_i Ê e^{-N_i(f)}|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub full: f64,
    pub product: f64,
    /// `full - product`
    pub signed: f64,
    pub signed_ci: (f64, f64),
    /// `|signed|`
    pub gap: f64,
    pub ci: (f64, f64),
}

/// The product runs over per-block averages, which for a stationary
/// sequence estimates `(E e^{-N_1(f)})^k`. The delta-method interval uses
/// the influence function `e - P Σ_i e_i / Ê_i`, evaluated in a second pass
/// over the same replicate streams.
pub fn ai_gap(
    model: &SequenceModel,
    plan: &BlockPlan,
    mode: Mode,
    f: &TestFunction,
    reps: usize,
    seed: u64,
) -> Result<GapEstimate> {
    let zero = GapEstimate {
        n: plan.n,
        r: plan.r,
        k: plan.k,
        full: 1.0,
        product: 1.0,
        signed: 0.0,
        signed_ci: (0.0, 0.0),
        gap: 0.0,
        ci: (0.0, 0.0),
    };
    if f.is_zero() {
        return Ok(zero);
    }
    check_reps(reps)?;
    let s = Setting::new(model, *plan, mode, f.inner_gap())?;
    let k = plan.k;
    let weigh = |evs: &[(usize, f64)]| -> f64 { evs.iter().map(|&(j, v)| f.eval(s.atom(j, v))).sum() };

    let (full, d_sums) = run_replicates(
        reps,
        seed,
        || (Moments::default(), vec![0.0f64; k]),
        |acc, _, rng| {
            let evs = s.events(model, rng);
            acc.0.push((-weigh(&evs)).exp());
            s.for_each_block(&evs, |b, blk| acc.1[b] += -(-weigh(blk)).exp_m1());
        },
        |t, p| {
            t.0.merge(&p.0);
            t.1.iter_mut().zip(p.1).for_each(|(a, b)| *a += b);
        },
    );
    let r = reps as f64;
    let e_blocks: Vec<f64> = d_sums.iter().map(|d| 1.0 - d / r).collect();
    let log_product: f64 = e_blocks.iter().map(|e| e.ln()).sum();
    let product = log_product.exp();
    let weights: Vec<f64> = e_blocks.iter().map(|e| 1.0 / e).collect();
    let weight_sum: f64 = weights.iter().sum();

    let influence = run_replicates(
        reps,
        seed,
        Moments::default,
        |acc, _, rng| {
            let evs = s.events(model, rng);
            let e_full = (-weigh(&evs)).exp();
            let mut wd = 0.0;
            s.for_each_block(&evs, |b, blk| wd += weights[b] * -(-weigh(blk)).exp_m1());
            acc.push(e_full + product * (wd - weight_sum));
        },
        |t, p| t.merge(&p),
    );
    let half = z99() * influence.std_error();
    let signed = full.mean() - product;
    let signed_ci = (signed - half, signed + half);
    let gap = signed.abs();
    let ci = if signed_ci.0 <= 0.0 && signed_ci.1 >= 0.0 {
        (0.0, signed_ci.0.abs().max(signed_ci.1.abs()))
    } else {
        let (a, b) = (signed_ci.0.abs(), signed_ci.1.abs());
        (a.min(b), a.max(b))
    };
    Ok(GapEstimate { full: full.mean(), product, signed, signed_ci, gap, ci, ..zero })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exceedance_process_examples() {
        let p = exceedance_process(&[0.0, 5.0, 0.0, 7.0], 1.0).unwrap();
        assert_eq!(p.atoms(), &[(0.5, 1), (1.0, 1)]);
        assert!(exceedance_process(&[0.0, 5.0], 10.0).unwrap().is_null());
        assert_eq!(exceedance_process(&[2.0, 3.0, 4.0], 0.0).unwrap().total_count(), 3);
    }

    #[test]
    fn scaled_process_examples() {
        let p = scaled_process(&[2.0, -4.0], 2.0).unwrap();
        assert_eq!(p.atoms(), &[(-2.0, 1), (1.0, 1)]);
        assert_eq!(scaled_process(&[3.0, -1.5], 1.0).unwrap().atoms(), &[(-1.5, 1), (3.0, 1)]);
        assert_eq!(scaled_process(&[1.0, 0.0], 1.0), Err(BlockError::ZeroEntry(2)));
    }

    #[test]
    fn split_examples() {
        let path = [5.0, 0.5, 7.0, 9.0, 8.0];
        let plan = BlockPlan::new(5, 2).unwrap();
        let b = split_blocks(&path, Source::Exceedance { u: 1.0 }, &plan).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].sub_process.atoms(), &[(0.2, 1)]);
        assert_eq!(b[1].exceedance_count, 2);
        assert_eq!(b[1].block_max, Some(0.8));
        let total: u64 = b.iter().map(|s| s.exceedance_count).sum();
        assert_eq!(total, 3);
        assert!(BlockPlan::new(4, 5).is_err());
    }

    #[test]
    fn block_rules() {
        assert_eq!(BlockRule::Sqrt.block_length(10_000), 100);
        assert_eq!(BlockRule::Sqrt.block_length(10_001), 101);
        assert_eq!(BlockRule::TwoThirds.block_length(1_000_000), 10_000);
        assert_eq!(BlockRule::Fixed(7).block_length(100), 7);
        let plan = BlockPlan::from_rule(10, BlockRule::Sqrt).unwrap();
        assert_eq!((plan.r, plan.k), (4, 2));
        assert_eq!(plan.block_of(9), None);
        assert_eq!(plan.block_of(5), Some(1));
    }

    #[test]
    fn too_few_replicates() {
        let m = SequenceModel::IidPareto { alpha: 1.0, p: 1.0 };
        let plan = BlockPlan::new(100, 10).unwrap();
        assert_eq!(
            condition_a_stat(&m, &[plan], Mode::Scaled, &[1.0], 50, 1).unwrap_err(),
            BlockError::TooFewReplicates(50)
        );
    }

    #[test]
    fn gap_of_zero_function_is_exactly_zero() {
        let m = SequenceModel::MovingMax { m: 2, alpha: 1.0 };
        let plan = BlockPlan::new(1000, 10).unwrap();
        let g = ai_gap(&m, &plan, Mode::Scaled, &TestFunction::zero(), 10, 1).unwrap();
        assert_eq!(g.gap, 0.0);
        assert_eq!(g.ci, (0.0, 0.0));
    }
}
