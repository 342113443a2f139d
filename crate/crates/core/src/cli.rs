//! Config-driven runs: `simulate`, `estimate`, `verify` and `limit`.

use crate::blocks::{self, BlockPlan, BlockRule, Mode, Source};
use crate::limits::{CanonicalMeasure, ClusterEvent};
use crate::mc::stream_rng;
use crate::measure::{Interval, PointMeasure, Region, TestFunction};
use crate::models::{self, SequenceModel};
use crate::verify::{self, ConvergenceReport, NamedFunction, Tolerances};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const DEFAULT_REPS: usize = 500;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("run failed: {0}")]
    Runtime(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            _ => EXIT_FAIL,
        }
    }

    fn config(key: &str, message: impl ToString) -> Self {
        CliError::Config { key: key.to_string(), message: message.to_string() }
    }

    fn runtime(e: impl ToString) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Estimate,
    Verify,
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    pub n: Vec<usize>,
    #[serde(default)]
    pub rule: BlockRule,
    /// Fixed block length; overrides `rule`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
}

impl PlanSpec {
    pub fn plans(&self) -> blocks::Result<Vec<BlockPlan>> {
        let rule = self.r.map(BlockRule::Fixed).unwrap_or(self.rule);
        self.n.iter().map(|&n| BlockPlan::from_rule(n, rule)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    #[serde(default = "one_path")]
    pub paths: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
}

fn one_path() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    ExtremalIndex,
    ClusterSizes,
    ClusterShapes,
    ConditionA,
    AiGap,
    AssocCovariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    pub estimators: Vec<Estimator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Levels for `condition_a`; the first one also serves `cluster_shapes`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<f64>,
    /// Test function for `ai_gap`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<TestFunction>,
    /// Separation lags for `assoc_covariance`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub m: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    ConditionA,
    ConditionB,
    Laplace,
    PoissonIid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub checks: Vec<Check>,
    /// `x` grid for `condition_a` and `poisson_iid`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<f64>,
    /// Level for `condition_b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Events for `condition_b`; defaults to [`default_events`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<ClusterEvent>>,
    /// Test functions for `laplace`; defaults to the fixed panel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel: Option<Vec<NamedFunction>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSpec {
    pub samples: usize,
    /// Atoms with modulus at most `eps` are not generated.
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    /// Worker threads; defaults to the available cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<SequenceModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical: Option<CanonicalMeasure>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitSpec>,
}

/// `{total count = k}` for `k = 1..5` and `{count on (x', sup] >= 1}`
/// with `x'` halfway between `x` and the top of the space.
pub fn default_events(canonical: &CanonicalMeasure, x: f64) -> Vec<ClusterEvent> {
    let mut events: Vec<ClusterEvent> = (1..=5).map(|k| ClusterEvent::TotalCount { k }).collect();
    let interior = match canonical {
        CanonicalMeasure::CompoundPoissonUniform { .. } => Interval::left_open(0.5 * (x + 1.0), 1.0),
        CanonicalMeasure::RegVarCluster { .. } => Interval::left_open(2.0 * x, f64::INFINITY),
    };
    events.push(ClusterEvent::CountAtLeast { region: Region::single(interior), c: 1 });
    events
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let key = e.span().map(|s| text[s].lines().next().unwrap_or("").trim().to_string()).unwrap_or_default();
            CliError::Config { key, message: e.message().to_string() }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| CliError::config("seed", "a seed is required (set it in the config or pass --seed)"))
    }

    pub fn reps(&self) -> usize {
        self.reps.unwrap_or(DEFAULT_REPS)
    }

    fn model(&self) -> Result<&SequenceModel> {
        let m = self.model.as_ref().ok_or_else(|| CliError::config("model", "missing"))?;
        m.validate().map_err(|e| CliError::config("model", e))?;
        Ok(m)
    }

    fn canonical(&self) -> Result<&CanonicalMeasure> {
        let c = self.canonical.as_ref().ok_or_else(|| CliError::config("canonical", "missing"))?;
        c.validate().map_err(|e| CliError::config("canonical", e))?;
        Ok(c)
    }

    fn plans(&self) -> Result<Vec<BlockPlan>> {
        let p = self.plan.as_ref().ok_or_else(|| CliError::config("plan", "missing"))?;
        if p.n.is_empty() {
            return Err(CliError::config("plan.n", "empty schedule"));
        }
        p.plans().map_err(|e| CliError::config("plan", e))
    }

    /// Checks everything the command needs before any computation.
    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        if self.threads == Some(0) {
            return Err(CliError::config("threads", "must be positive"));
        }
        let t = &self.tolerances;
        for (k, v) in [("probability", t.probability), ("mass_relative", t.mass_relative), ("mass_floor", t.mass_floor)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::config(&format!("tolerances.{k}"), "must be finite and >= 0"));
            }
        }
        match self.command {
            Command::Simulate => {
                self.model()?;
                self.plans()?;
                let s = self.simulate.as_ref().ok_or_else(|| CliError::config("simulate", "missing"))?;
                if s.paths == 0 {
                    return Err(CliError::config("simulate.paths", "must be positive"));
                }
            }
            Command::Estimate => {
                self.model()?;
                self.plans()?;
                let e = self.estimate.as_ref().ok_or_else(|| CliError::config("estimate", "missing"))?;
                if e.estimators.is_empty() {
                    return Err(CliError::config("estimate.estimators", "empty"));
                }
                for est in &e.estimators {
                    match est {
                        Estimator::ClusterShapes | Estimator::ConditionA if e.x.is_empty() => {
                            return Err(CliError::config("estimate.x", "required by the chosen estimators"));
                        }
                        Estimator::AiGap if e.f.is_none() => {
                            return Err(CliError::config("estimate.f", "required by ai_gap"));
                        }
                        Estimator::AssocCovariance if e.m.is_empty() => {
                            return Err(CliError::config("estimate.m", "required by assoc_covariance"));
                        }
                        _ => {}
                    }
                }
            }
            Command::Verify => {
                let v = self.verify.as_ref().ok_or_else(|| CliError::config("verify", "missing"))?;
                if v.checks.is_empty() {
                    return Err(CliError::config("verify.checks", "empty"));
                }
                self.model()?;
                self.plans()?;
                let needs_canonical = v.checks.iter().any(|c| *c != Check::PoissonIid);
                let canonical = if needs_canonical { Some(self.canonical()?) } else { None };
                if v.checks.iter().any(|c| matches!(c, Check::ConditionA | Check::PoissonIid)) && v.grid.is_empty() {
                    return Err(CliError::config("verify.grid", "required by condition_a and poisson_iid"));
                }
                if let Some(c) = canonical {
                    let d = c.d_prime();
                    if let Some(x) = v.grid.iter().find(|x| d.contains(x)) {
                        return Err(CliError::config("verify.grid", format!("x={x} lies in D' of the canonical measure")));
                    }
                    if v.checks.contains(&Check::ConditionB) {
                        let x = v.x.ok_or_else(|| CliError::config("verify.x", "required by condition_b"))?;
                        c.check_level(x).map_err(|e| CliError::config("verify.x", e))?;
                        for ev in v.events.iter().flatten() {
                            ev.validate(&c.space(), c.fixed_atoms()).map_err(|e| CliError::config("verify.events", e))?;
                        }
                    }
                }
                for nf in v.panel.iter().flatten() {
                    if !(nf.f.inner_gap() > 0.0) {
                        return Err(CliError::config("verify.panel", format!("{} has no inner gap", nf.name)));
                    }
                }
            }
            Command::Limit => {
                self.canonical()?;
                let l = self.limit.as_ref().ok_or_else(|| CliError::config("limit", "missing"))?;
                if !(l.eps > 0.0 && l.eps.is_finite()) {
                    return Err(CliError::config("limit.eps", "must be finite and > 0"));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of a run: files written and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(path, bytes).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(path.to_path_buf())
}

/// Runs a validated config with outputs under `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    config.validate()?;
    fs::create_dir_all(out).map_err(|e| CliError::Io { path: out.to_path_buf(), message: e.to_string() })?;
    let threads = config.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(CliError::runtime)?;
    pool.install(|| match config.command {
        Command::Simulate => run_simulate(config, out),
        Command::Estimate => run_estimate(config, out),
        Command::Verify => run_verify(config, out),
        Command::Limit => run_limit(config, out),
    })
}

fn source_for(model: &SequenceModel, n: usize, mode: Mode) -> Result<Source> {
    Ok(match mode {
        Mode::Exceedance => Source::Exceedance { u: model.level_u(n).map_err(CliError::runtime)? },
        Mode::Scaled => Source::Scaled { a: model.scale_a(n).map_err(CliError::runtime)? },
    })
}

fn run_simulate(config: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let model = config.model()?;
    let seed = config.seed()?;
    let spec = config.simulate.as_ref().expect("validated");
    let mode = spec.mode.unwrap_or(Mode::Scaled);
    let mut paths = csv::Writer::from_writer(Vec::new());
    paths.write_record(["path", "n", "j", "value"]).map_err(CliError::runtime)?;
    let mut block_rows = Vec::new();
    let mut summary = Vec::new();
    for plan in config.plans()? {
        let source = source_for(model, plan.n, mode)?;
        for p in 0..spec.paths {
            let mut rng = stream_rng(seed, p as u64);
            let path = model.simulate(plan.n, &mut rng).map_err(CliError::runtime)?.values;
            for (j, v) in path.iter().enumerate() {
                paths.write_record([p.to_string(), plan.n.to_string(), (j + 1).to_string(), v.to_string()]).map_err(CliError::runtime)?;
            }
            let bl = blocks::split_blocks(&path, source, &plan).map_err(CliError::runtime)?;
            let exceeding = bl.iter().filter(|b| b.exceedance_count > 0).count();
            summary.push(format!("simulate: n={} path={} blocks={} with_points={}", plan.n, p, bl.len(), exceeding));
            block_rows.extend(bl.into_iter().map(|b| (p, b)));
        }
    }
    let paths_bytes = paths.into_inner().map_err(CliError::runtime)?;
    let mut blocks_bytes = Vec::new();
    blocks::write_blocks_csv(&mut blocks_bytes, &block_rows).map_err(CliError::runtime)?;
    let files = vec![write(&out.join("paths.csv"), &paths_bytes)?, write(&out.join("blocks.csv"), &blocks_bytes)?];
    Ok(RunOutcome { exit_code: EXIT_PASS, files, summary })
}

fn run_estimate(config: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let model = config.model()?;
    let seed = config.seed()?;
    let reps = config.reps();
    let spec = config.estimate.as_ref().expect("validated");
    let mode = spec.mode.unwrap_or(Mode::Scaled);
    let plans = config.plans()?;
    let mut results = serde_json::Map::new();
    let mut summary = Vec::new();
    for est in &spec.estimators {
        let value: Value = match est {
            Estimator::ExtremalIndex => {
                let rows = blocks::extremal_index(model, &plans, reps, seed).map_err(CliError::runtime)?;
                for r in &rows {
                    summary.push(format!("extremal_index: n={} r={} theta={:.4} ci=[{:.4}, {:.4}]", r.n, r.r, r.theta_hat, r.ci.0, r.ci.1));
                }
                json!(rows)
            }
            Estimator::ClusterSizes => {
                let mut rows = Vec::new();
                for plan in &plans {
                    let s = blocks::cluster_sizes(model, plan, reps, seed).map_err(CliError::runtime)?;
                    summary.push(format!("cluster_sizes: n={} mean={:.4} blocks={}", s.n, s.mean(), s.qualifying_blocks));
                    rows.push(json!({"sizes": s, "probs": s.probs(), "mean": s.mean()}));
                }
                json!(rows)
            }
            Estimator::ClusterShapes => {
                let x = spec.x[0];
                let mut rows = Vec::new();
                for plan in &plans {
                    let shapes = blocks::cluster_shapes(model, plan, x, reps, seed).map_err(CliError::runtime)?;
                    summary.push(format!("cluster_shapes: n={} x={} shapes={}", plan.n, x, shapes.len()));
                    rows.push(json!({"n": plan.n, "x": x, "shapes": shapes}));
                }
                json!(rows)
            }
            Estimator::ConditionA => {
                let stat = blocks::condition_a_stat(model, &plans, mode, &spec.x, reps, seed).map_err(CliError::runtime)?;
                for r in &stat.rows {
                    summary.push(format!("condition_a: n={} x={} estimate={:.4}", r.n, r.x, r.estimate));
                }
                json!(stat)
            }
            Estimator::AiGap => {
                let f = spec.f.as_ref().expect("validated");
                let mut rows = Vec::new();
                for plan in &plans {
                    let g = blocks::ai_gap(model, plan, mode, f, reps, seed).map_err(CliError::runtime)?;
                    summary.push(format!("ai_gap: n={} gap={:.5} ci=[{:.5}, {:.5}]", g.n, g.gap, g.ci.0, g.ci.1));
                    rows.push(g);
                }
                json!(rows)
            }
            Estimator::AssocCovariance => {
                let mut rows = Vec::new();
                for plan in &plans {
                    for &m in &spec.m {
                        let b = models::assoc_covariance_bound(model, plan.n, m, reps, seed).map_err(CliError::runtime)?;
                        summary.push(format!("assoc_covariance: n={} m={} estimate={:.5}", b.n, b.m, b.estimate.value));
                        rows.push(b);
                    }
                }
                json!(rows)
            }
        };
        results.insert(serde_json::to_value(est).expect("unit variant").as_str().unwrap().to_string(), value);
    }
    let doc = json!({"model": model, "seed": seed, "reps": reps, "plans": plans, "estimates": results});
    let text = serde_json::to_string_pretty(&doc).expect("estimates serialize");
    let files = vec![write(&out.join("estimates.json"), text.as_bytes())?];
    Ok(RunOutcome { exit_code: EXIT_PASS, files, summary })
}

fn summarize(report: &ConvergenceReport) -> String {
    let passed = report.rows.iter().filter(|r| r.pass).count();
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    format!("{}: {} ({}/{} rows)", report.experiment, verdict, passed, report.rows.len())
}

/// One report per configured check, in config order.
pub fn verify_parts(config: &ExperimentConfig) -> Result<Vec<ConvergenceReport>> {
    config.validate()?;
    let model = config.model()?;
    let seed = config.seed()?;
    let reps = config.reps();
    let tol = &config.tolerances;
    let spec = config.verify.as_ref().ok_or_else(|| CliError::config("verify", "missing"))?;
    let plans = config.plans()?;
    let mut parts = Vec::new();
    for check in &spec.checks {
        let part = match check {
            Check::ConditionA => verify::check_condition_a(model, config.canonical()?, &plans, &spec.grid, reps, seed, tol),
            Check::ConditionB => {
                let canonical = config.canonical()?;
                let x = spec.x.expect("validated");
                let events = spec.events.clone().unwrap_or_else(|| default_events(canonical, x));
                let mut merged = ConvergenceReport::new("condition_b");
                for plan in &plans {
                    let r = verify::check_condition_b(model, canonical, plan, x, &events, reps, seed, tol)
                        .map_err(CliError::runtime)?;
                    merged.metadata.extend(r.metadata.clone());
                    r.rows.into_iter().for_each(|row| merged.push(row));
                }
                Ok(merged)
            }
            Check::Laplace => {
                let canonical = config.canonical()?;
                let panel = spec.panel.clone().unwrap_or_else(|| verify::panel_for(canonical));
                verify::check_laplace(model, canonical, &panel, &plans, reps, seed, tol)
            }
            Check::PoissonIid => {
                let ns: Vec<usize> = plans.iter().map(|p| p.n).collect();
                verify::check_poisson_iid(model, &ns, &spec.grid, reps, seed, tol)
            }
        }
        .map_err(CliError::runtime)?;
        log::info!("{}", summarize(&part));
        parts.push(part);
    }
    Ok(parts)
}

/// Runs the configured checks and merges them into one report.
pub fn verify_report(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    Ok(merge_parts(config, verify_parts(config)?))
}

fn merge_parts(config: &ExperimentConfig, parts: Vec<ConvergenceReport>) -> ConvergenceReport {
    let mut report = ConvergenceReport::new("verify");
    parts.into_iter().for_each(|p| report.absorb(p));
    report.meta("seed", json!(config.seed));
    report.meta("reps", json!(config.reps()));
    report.meta("tolerances", json!(config.tolerances));
    report.meta("config", json!(config));
    report
}

fn run_verify(config: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let parts = verify_parts(config)?;
    let mut summary: Vec<String> = parts.iter().map(summarize).collect();
    let report = merge_parts(config, parts);
    summary.push(summarize(&report));
    let mut csv_bytes = Vec::new();
    report.write_csv(&mut csv_bytes).map_err(CliError::runtime)?;
    let mut plot = Vec::new();
    verify::emit_plotdata(&report, &mut plot).map_err(CliError::runtime)?;
    let files = vec![
        write(&out.join("report.json"), report.to_json().as_bytes())?,
        write(&out.join("report.csv"), &csv_bytes)?,
        write(&out.join("plotdata.csv"), &plot)?,
    ];
    let exit_code = if report.pass { EXIT_PASS } else { EXIT_FAIL };
    Ok(RunOutcome { exit_code, files, summary })
}

fn run_limit(config: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let canonical = config.canonical()?;
    let seed = config.seed()?;
    let spec = config.limit.as_ref().expect("validated");
    let draws: Vec<(PointMeasure, u64)> = crate::mc::map_replicates(spec.samples, seed, |_, rng| {
        canonical.sample_clusters(spec.eps, rng)
    })
    .into_iter()
    .collect::<std::result::Result<_, _>>()
    .map_err(CliError::runtime)?;
    let voids = draws.iter().filter(|(m, _)| m.is_null()).count();
    let mean_clusters = draws.iter().map(|d| d.1 as f64).sum::<f64>() / draws.len().max(1) as f64;
    let samples: Vec<Value> = draws.iter().map(|(m, c)| json!({"clusters": c, "atoms": m.atoms()})).collect();
    let doc = json!({"canonical": canonical, "seed": seed, "eps": spec.eps, "samples": samples});
    let text = serde_json::to_string_pretty(&doc).expect("samples serialize");
    let files = vec![write(&out.join("samples.json"), text.as_bytes())?];
    let summary = vec![format!(
        "limit: samples={} mean_clusters={:.4} void_fraction={:.4}",
        spec.samples,
        mean_clusters,
        voids as f64 / spec.samples.max(1) as f64
    )];
    Ok(RunOutcome { exit_code: EXIT_PASS, files, summary })
}

#[derive(Debug, clap::Parser)]
#[command(name = "cluster-limit", about = "Cluster limits of extremal point processes")]
pub struct Args {
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses, validates and runs; prints the summary and returns the exit code.
pub fn main_with(args: Args) -> i32 {
    let outcome = (|| {
        let text = fs::read_to_string(&args.config)
            .map_err(|e| CliError::config("--config", format!("{}: {e}", args.config.display())))?;
        let mut config = ExperimentConfig::from_toml(&text)?;
        if config.command != args.command {
            return Err(CliError::config(
                "command",
                format!("config is for `{:?}` but `{:?}` was requested", config.command, args.command).to_lowercase(),
            ));
        }
        if args.seed.is_some() {
            config.seed = args.seed;
        }
        let out = args.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
        run(&config, &out)
    })();
    match outcome {
        Ok(o) => {
            o.summary.iter().for_each(|l| println!("{l}"));
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
