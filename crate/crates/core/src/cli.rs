//! Experiment runner: a JSON config names one experiment, the runner executes its `(p, n)`
//! cells in parallel and writes one CSV with a fixed column order.
//!
//! Every row has the columns of [`CSV_COLUMNS`]. `parameters` is a `;`-separated `key=value`
//! list, `theory_verdict` is the symbolic verdict of the hypotheses the row is evidence for,
//! and `witness` carries what is needed to replay or interpret the value. The file starts with a
//! `# gjlog <command> generated_at=<unix seconds>` line; everything after it is a deterministic
//! function of the config.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::{self, ConditionReport};
use crate::fourier::{self, Sampler};
use crate::hilbert;
use crate::interp;
use crate::mz::{self, MzParams, RatioKind};
use crate::orthopoly::{self, recurrence_table, RecurrenceTable, DEFAULT_N_MAX};
use crate::weights::{classify, Verdict, WeightSpec};

pub const CSV_COLUMNS: [&str; 7] = ["command", "parameters", "metric", "value", "theory_verdict", "seed", "witness"];

/// Metric name of the marker row written when a cell fails numerically.
pub const TRUNCATED: &str = "TRUNCATED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Ortho,
    Fourier,
    Mz,
    Interp,
    Hilbert,
    Check,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Ortho => "ortho",
            Command::Fourier => "fourier",
            Command::Mz => "mz",
            Command::Interp => "interp",
            Command::Hilbert => "hilbert",
            Command::Check => "check",
        }
    }
}

/// Interpolation targets with exact derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    Abs,
    AbsCubed,
    Cubic,
    Exp,
    Cos,
}

impl Target {
    /// `f(x), f'(x), ..., f^{(len-1)}(x)`; one-sided values at the kinks.
    pub fn jet(self, x: f64, len: usize) -> Vec<f64> {
        let s = if x < 0.0 { -1.0 } else { 1.0 };
        (0..len)
            .map(|k| match self {
                Target::Abs => [x.abs(), s].get(k).copied().unwrap_or(0.0),
                Target::AbsCubed => [x.abs().powi(3), 3.0 * x * x.abs(), 6.0 * x.abs(), 6.0 * s].get(k).copied().unwrap_or(0.0),
                Target::Cubic => [x.powi(3), 3.0 * x * x, 6.0 * x, 6.0].get(k).copied().unwrap_or(0.0),
                Target::Exp => x.exp(),
                Target::Cos => (x + k as f64 * std::f64::consts::FRAC_PI_2).cos(),
            })
            .collect()
    }
}

fn legendre() -> WeightSpec {
    WeightSpec::legendre()
}

fn default_m() -> usize {
    1
}

fn default_trials() -> usize {
    50
}

fn default_tol() -> f64 {
    1e-10
}

fn default_growth() -> f64 {
    1.1
}

fn default_stability() -> f64 {
    4.0
}

/// One experiment. Weights use the serialized [`WeightSpec`] form; absent `beta` means
/// `beta = alpha`, absent `u`, `w`, `v` mean the unit weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default = "legendre")]
    pub alpha: WeightSpec,
    #[serde(default)]
    pub beta: Option<WeightSpec>,
    #[serde(default)]
    pub u: Option<WeightSpec>,
    #[serde(default)]
    pub w: Option<WeightSpec>,
    #[serde(default)]
    pub v: Option<WeightSpec>,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub k: usize,
    /// Node-region width for `mz`; when set, a restricted-range ladder is added (`m = 1`).
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub power_steps: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub target: Target,
    /// `delta` grid for `hilbert`; defaults to `2^{-k}`, `k = 2..=24`.
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    /// Growth factor per doubling of `n` above which a ladder counts as growing.
    #[serde(default = "default_growth")]
    pub growth_threshold: f64,
    /// Largest max/min over a ladder that still counts as stable.
    #[serde(default = "default_stability")]
    pub stability_factor: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn beta(&self) -> WeightSpec {
        self.beta.clone().unwrap_or_else(|| self.alpha.clone())
    }

    fn unit_or(w: &Option<WeightSpec>) -> WeightSpec {
        w.clone().unwrap_or_else(WeightSpec::legendre)
    }

    pub fn command(&self) -> Result<Command, ConfigError> {
        self.command.ok_or_else(|| ConfigError::Invalid("no command given".into()))
    }

    pub fn validate(&self) -> Result<Command, ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let cmd = self.command()?;
        let needs_n = !matches!(cmd, Command::Hilbert | Command::Check);
        let needs_p = cmd != Command::Ortho;
        let samples = matches!(cmd, Command::Fourier | Command::Mz);
        if needs_n && self.n.is_empty() {
            return bad("n-ladder is empty".into());
        }
        if self.n.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n-ladder {:?} is not strictly increasing", self.n));
        }
        if self.n.first() == Some(&0) {
            return bad("n must be positive".into());
        }
        let n_cap = DEFAULT_N_MAX / self.m.max(1);
        if self.n.last().is_some_and(|&n| n > n_cap) {
            return bad(format!("n above {n_cap}"));
        }
        if needs_p && self.p.is_empty() {
            return bad("p-list is empty".into());
        }
        if let Some(p) = self.p.iter().find(|&&p| !(p > 1.0 && p.is_finite())) {
            return bad(format!("p = {p} must be a finite number above 1"));
        }
        if samples && self.seed.is_none() {
            return bad("a seed is required for sampled experiments".into());
        }
        if samples && self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if self.eps.is_some_and(|e| !(e > 0.0 && e.is_finite())) {
            return bad("eps must be positive".into());
        }
        if !(1e-14..1e-2).contains(&self.tol) {
            return bad(format!("tol = {} outside [1e-14, 1e-2)", self.tol));
        }
        if !(self.growth_threshold > 1.0) || !(self.stability_factor >= 1.0) {
            return bad("growth_threshold must exceed 1 and stability_factor must be at least 1".into());
        }
        for (name, w) in [("alpha", Some(&self.alpha)), ("beta", self.beta.as_ref())] {
            if w.is_some_and(|w| conditions::is_integrable(w) == Verdict::Fails) {
                return bad(format!("{name} is not integrable"));
            }
        }
        if let Some(d) = &self.deltas {
            if d.len() < 2 || d.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
                return bad("deltas need at least two values in (0, 1)".into());
            }
        }
        Ok(cmd)
    }
}

/// One output row; `value` is already formatted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub command: String,
    pub parameters: String,
    pub metric: String,
    pub value: String,
    pub theory_verdict: String,
    pub seed: String,
    pub witness: String,
}

/// Rows of all completed cells, and the error of the first failed cell if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: Command,
    pub rows: Vec<Row>,
    pub failure: Option<String>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failure.is_some() {
            EXIT_NUMERICAL
        } else {
            EXIT_OK
        }
    }

    /// CSV body without the timestamp line; a failure appends a [`TRUNCATED`] marker row.
    pub fn write_body<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        if let Some(e) = &self.failure {
            w.write_record([self.command.as_str(), "", TRUNCATED, "", "", "", e.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W, generated_at: u64) -> csv::Result<()> {
        writeln!(out, "# gjlog {} generated_at={generated_at}", self.command.as_str())?;
        self.write_body(out)
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    cmd: Command,
}

impl Ctx<'_> {
    fn row(&self, params: String, metric: &str, value: String, verdict: &str, witness: String) -> Row {
        Row {
            command: self.cmd.as_str().into(),
            parameters: params,
            metric: metric.into(),
            value,
            theory_verdict: verdict.into(),
            seed: self.cfg.seed.map(|s| s.to_string()).unwrap_or_default(),
            witness,
        }
    }
}

/// Shortest round-trip form; scientific notation outside `[1e-4, 1e6)`.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e6).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn sorted_ps(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut ps = cfg.p.clone();
    ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ps.dedup();
    ps
}

fn first_issue(r: &ConditionReport) -> String {
    r.clauses.iter().find(|c| c.verdict != Verdict::Holds).map(|c| c.label.clone()).unwrap_or_default()
}

type CellResult = Result<Vec<Row>, String>;

/// Runs the cells in parallel and keeps their order; rows stop at the first failed cell.
fn run_cells<T: Sync>(cells: &[T], f: impl Fn(&T) -> CellResult + Sync + Send) -> (Vec<Row>, Option<String>) {
    let results: Vec<CellResult> = cells.par_iter().map(f).collect();
    let mut rows = Vec::new();
    for r in results {
        match r {
            Ok(mut v) => rows.append(&mut v),
            Err(e) => return (rows, Some(e)),
        }
    }
    (rows, None)
}

/// Geometric-mean growth per doubling of `n` and max/min over a ladder.
fn ladder_trend(ns: &[usize], values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    let (first, last) = (values[0], values[values.len() - 1]);
    let doublings = (ns[ns.len() - 1] as f64 / ns[0] as f64).log2();
    let growth = if doublings > 0.0 { (last / first).powf(1.0 / doublings) } else { 1.0 };
    (growth, hi / lo)
}

fn trend_rows(ctx: &Ctx, p: f64, ns: &[usize], values: &[f64], verdict: &str) -> Vec<Row> {
    if ns.len() < 2 {
        return Vec::new();
    }
    let (growth, spread) = ladder_trend(ns, values);
    let class = if growth >= ctx.cfg.growth_threshold {
        "growing"
    } else if spread <= ctx.cfg.stability_factor {
        "stable"
    } else {
        "indeterminate"
    };
    let params = format!("p={p};n={}..{}", ns[0], ns[ns.len() - 1]);
    let thresholds = format!("growth_threshold={};stability_factor={}", ctx.cfg.growth_threshold, ctx.cfg.stability_factor);
    vec![
        ctx.row(params.clone(), "growth_per_doubling", num(growth), verdict, format!("{class};{thresholds}")),
        ctx.row(params, "max_over_min", num(spread), verdict, format!("{class};{thresholds}")),
    ]
}

fn table_for(spec: &WeightSpec, n: usize) -> Result<Arc<RecurrenceTable>, String> {
    recurrence_table(spec, n, orthopoly::DEFAULT_TOL).map(Arc::new).map_err(|e| e.to_string())
}

fn run_ortho(ctx: &Ctx) -> (Vec<Row>, Option<String>) {
    let cfg = ctx.cfg;
    let c = classify(&cfg.alpha);
    let verdict = c.gj2.and(if c.gj1 && c.gj3 { Verdict::Holds } else { Verdict::Fails });
    let max_n = *cfg.n.last().unwrap();
    let table = match table_for(&cfg.alpha, max_n + 1) {
        Ok(t) => t,
        Err(e) => return (Vec::new(), Some(e)),
    };
    run_cells(&cfg.n, |&n| {
        let rule = table.gauss_rule(n + 1).map_err(|e| e.to_string())?;
        let mut defect = 0.0f64;
        let mut vals = vec![0.0; n + 1];
        let mut gram = vec![0.0; (n + 1) * (n + 1)];
        for (&x, &lam) in rule.nodes.iter().zip(&rule.cotes) {
            table.eval_all(x, &mut vals).map_err(|e| e.to_string())?;
            for i in 0..=n {
                for j in 0..=n {
                    gram[i * (n + 1) + j] += lam * vals[i] * vals[j];
                }
            }
        }
        for i in 0..=n {
            for j in 0..=n {
                defect = defect.max((gram[i * (n + 1) + j] - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let probes = orthopoly::envelope_probes(&cfg.alpha, n, 200);
        let s = orthopoly::envelope_stats(&table, &cfg.alpha, n, &probes).map_err(|e| e.to_string())?;
        let v = verdict.as_str();
        let pr = format!("n={n}");
        Ok(vec![
            ctx.row(pr.clone(), "a_n", num(table.a(n)), v, String::new()),
            ctx.row(pr.clone(), "b_n", num(table.b(n)), v, String::new()),
            ctx.row(pr.clone(), "orthonormality_defect", num(defect), v, format!("degrees<={n}")),
            ctx.row(pr.clone(), "envelope_pn_sup", num(s.pn_sup), v, format!("probes={}", probes.len())),
            ctx.row(pr.clone(), "envelope_lambda_min", num(s.lambda_min), v, String::new()),
            ctx.row(pr.clone(), "envelope_lambda_max", num(s.lambda_max), v, String::new()),
            ctx.row(pr.clone(), "envelope_deriv_min", num(s.deriv_min), v, String::new()),
            ctx.row(pr, "envelope_deriv_max", num(s.deriv_max), v, String::new()),
        ])
    })
}

fn sampler(cfg: &ExperimentConfig) -> Sampler {
    let s = Sampler::new(cfg.seed.unwrap_or(0));
    match cfg.power_steps {
        Some(k) => s.with_power_steps(k),
        None => s,
    }
}

/// Cells `(p, n)` in sorted order, then one trend block per `p`.
fn run_ladder(
    ctx: &Ctx,
    metric: &str,
    verdict_for: impl Fn(f64) -> Result<Verdict, String> + Sync,
    cell: impl Fn(f64, usize) -> Result<(f64, String), String> + Sync,
) -> (Vec<Row>, Option<String>) {
    let ps = sorted_ps(ctx.cfg);
    let cells: Vec<(f64, usize)> = ps.iter().flat_map(|&p| ctx.cfg.n.iter().map(move |&n| (p, n))).collect();
    let verdicts: Result<Vec<Verdict>, String> = ps.iter().map(|&p| verdict_for(p)).collect();
    let verdicts = match verdicts {
        Ok(v) => v,
        Err(e) => return (Vec::new(), Some(e)),
    };
    let results: Vec<Result<(f64, String), String>> = cells.par_iter().map(|&(p, n)| cell(p, n)).collect();
    let mut rows = Vec::new();
    for (pi, &p) in ps.iter().enumerate() {
        let v = verdicts[pi].as_str();
        let mut values = Vec::new();
        for (ni, &n) in ctx.cfg.n.iter().enumerate() {
            match &results[pi * ctx.cfg.n.len() + ni] {
                Ok((value, witness)) => {
                    values.push(*value);
                    rows.push(ctx.row(format!("p={p};n={n};m={}", ctx.cfg.m), metric, num(*value), v, witness.clone()));
                }
                Err(e) => return (rows, Some(format!("p={p};n={n}: {e}"))),
            }
        }
        rows.extend(trend_rows(ctx, p, &ctx.cfg.n, &values, v));
    }
    (rows, None)
}

fn run_fourier(ctx: &Ctx) -> (Vec<Row>, Option<String>) {
    let cfg = ctx.cfg;
    let u = ExperimentConfig::unit_or(&cfg.u);
    let w = ExperimentConfig::unit_or(&cfg.w);
    let table = match table_for(&cfg.alpha, (4 * cfg.n.last().unwrap()).min(DEFAULT_N_MAX)) {
        Ok(t) => t,
        Err(e) => return (Vec::new(), Some(e)),
    };
    let s = sampler(cfg);
    run_ladder(
        ctx,
        "sn_norm_lower_bound",
        |p| conditions::fourier_check(&cfg.alpha, &w, &u, p).map(|r| r.overall()).map_err(|e| e.to_string()),
        |p, n| {
            let r = fourier::operator_norm_estimate(&table, n, p, &u, &w, &s, cfg.trials).map_err(|e| e.to_string())?;
            Ok((r.ratio, format!("trial={};digest={}", r.trial, r.digest_hex())))
        },
    )
}

fn run_mz(ctx: &Ctx) -> (Vec<Row>, Option<String>) {
    let cfg = ctx.cfg;
    let beta = cfg.beta();
    let u = ExperimentConfig::unit_or(&cfg.u);
    let max_n = *cfg.n.last().unwrap();
    let table = match table_for(&cfg.alpha, cfg.m * max_n + 1) {
        Ok(t) => t,
        Err(e) => return (Vec::new(), Some(e)),
    };
    let kind = if cfg.m == 1 {
        RatioKind::Mz { u: u.clone() }
    } else {
        match mz::sigma_table(&cfg.alpha, &beta, cfg.m, max_n + 1) {
            Ok(t) => RatioKind::MzHermite { m: cfg.m, sigma: Arc::new(t) },
            Err(e) => return (Vec::new(), Some(e.to_string())),
        }
    };
    let s = sampler(cfg);
    let ladder = |metric: &str, kind: &RatioKind| {
        run_ladder(
            ctx,
            metric,
            |p| conditions::mz_check(&cfg.alpha, &beta, &u, p, cfg.m).map(|r| r.overall()).map_err(|e| e.to_string()),
            |p, n| {
                let params = MzParams { alpha: table.clone(), beta: beta.clone(), p, n };
                let r = mz::adversarial_sup(kind, &params, &s, cfg.trials).map_err(|e| e.to_string())?;
                Ok((r.ratio, format!("trial={};digest={}", r.trial, r.digest_hex())))
            },
        )
    };
    let (mut rows, failure) = ladder("mz_ratio_sup", &kind);
    match cfg.eps {
        Some(eps) if failure.is_none() && cfg.m == 1 => {
            let (more, failure) = ladder("restricted_ratio_sup", &RatioKind::Restricted { u: u.clone(), eps });
            rows.extend(more);
            (rows, failure)
        }
        _ => (rows, failure),
    }
}

fn run_interp(ctx: &Ctx) -> (Vec<Row>, Option<String>) {
    let cfg = ctx.cfg;
    let beta = cfg.beta();
    let u = ExperimentConfig::unit_or(&cfg.u);
    let table = match table_for(&cfg.alpha, *cfg.n.last().unwrap() + 1) {
        Ok(t) => t,
        Err(e) => return (Vec::new(), Some(e)),
    };
    let len = cfg.m.max(cfg.k + 1);
    let target = cfg.target;
    let mut rows = Vec::new();
    for p in sorted_ps(cfg) {
        let report = match conditions::mz_check(&cfg.alpha, &beta, &u, p, cfg.m) {
            Ok(r) => r,
            Err(e) => return (rows, Some(e.to_string())),
        };
        let v = report.overall();
        let sweep = interp::converge_sweep(|x| target.jet(x, len), &table, &beta, p, cfg.m, cfg.k, &cfg.n, report, cfg.tol);
        let sweep = match sweep {
            Ok(s) => s,
            Err(e) => return (rows, Some(format!("p={p}: {e}"))),
        };
        for r in &sweep.rows {
            let params = format!("p={p};n={};m={};k={};target={}", r.n, cfg.m, cfg.k, target_name(target));
            rows.push(ctx.row(params, "weighted_error", num(r.error), v.as_str(), String::new()));
        }
        if cfg.n.len() >= 2 {
            let first = sweep.rows[0].error;
            let last = sweep.rows[sweep.rows.len() - 1].error;
            let params = format!("p={p};n={}..{};m={};k={}", cfg.n[0], cfg.n[cfg.n.len() - 1], cfg.m, cfg.k);
            rows.push(ctx.row(params, "error_reduction", num(first / last), v.as_str(), String::new()));
        }
    }
    (rows, None)
}

fn target_name(t: Target) -> &'static str {
    match t {
        Target::Abs => "abs",
        Target::AbsCubed => "abs_cubed",
        Target::Cubic => "cubic",
        Target::Exp => "exp",
        Target::Cos => "cos",
    }
}

fn run_hilbert(ctx: &Ctx) -> (Vec<Row>, Option<String>) {
    let cfg = ctx.cfg;
    let big_u = ExperimentConfig::unit_or(&cfg.u);
    let big_v = ExperimentConfig::unit_or(&cfg.v);
    let grid = cfg.deltas.clone().unwrap_or_else(hilbert::default_delta_grid);
    let ps = sorted_ps(cfg);
    run_cells(&ps, |&p| {
        let report = conditions::hilbert_check(&big_u, &big_v, p).map_err(|e| e.to_string())?;
        let v = report.overall().as_str();
        let s = hilbert::condition_sup(&big_u, &big_v, p, &grid, cfg.tol).map_err(|e| format!("p={p}: {e}"))?;
        let mut rows = Vec::new();
        for r in &s.rows {
            let params = format!("p={p};i={};delta={}", r.point, r.delta);
            rows.push(ctx.row(params.clone(), "product_u_kernel", num(r.product_u_kernel), v, String::new()));
            rows.push(ctx.row(params, "product_v_kernel", num(r.product_v_kernel), v, String::new()));
        }
        for pt in &s.points {
            let params = format!("p={p};i={};t={}", pt.point, pt.at);
            rows.push(ctx.row(params.clone(), "slope", num(pt.slope), v, pt.verdict.as_str().into()));
            rows.push(ctx.row(params, "sup", num(pt.sup_u_kernel.max(pt.sup_v_kernel)), v, pt.verdict.as_str().into()));
        }
        Ok(rows)
    })
}

fn check_reports(cfg: &ExperimentConfig, p: f64) -> Result<Vec<ConditionReport>, String> {
    let beta = cfg.beta();
    let e = |e: crate::weights::WeightError| e.to_string();
    let mut out = vec![conditions::nevai(&cfg.alpha, &beta, p).map_err(e)?];
    if cfg.u.is_some() || cfg.w.is_some() {
        let u = ExperimentConfig::unit_or(&cfg.u);
        let w = ExperimentConfig::unit_or(&cfg.w);
        out.push(conditions::fourier_check(&cfg.alpha, &w, &u, p).map_err(e)?);
    }
    if let Some(u) = &cfg.u {
        out.push(conditions::mz_check(&cfg.alpha, &beta, u, p, cfg.m).map_err(e)?);
    }
    if let Some(v) = &cfg.v {
        out.push(conditions::hilbert_check(&ExperimentConfig::unit_or(&cfg.u), v, p).map_err(e)?);
    }
    Ok(out)
}

fn run_check(ctx: &Ctx) -> (Vec<Row>, Option<String>) {
    let ps = sorted_ps(ctx.cfg);
    run_cells(&ps, |&p| {
        Ok(check_reports(ctx.cfg, p)?
            .iter()
            .map(|r| {
                let v = r.overall().as_str();
                ctx.row(format!("p={p}"), &r.theorem, v.to_string(), v, first_issue(r))
            })
            .collect())
    })
}

fn summarize(cmd: Command, cfg: &ExperimentConfig, rows: &[Row], failure: &Option<String>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "gjlog {}: {} rows", cmd.as_str(), rows.len());
    if cmd == Command::Check {
        for p in sorted_ps(cfg) {
            if let Ok(reports) = check_reports(cfg, p) {
                for r in reports {
                    s.push_str(&r.to_text());
                }
            }
        }
    } else {
        for r in rows.iter().filter(|r| matches!(r.metric.as_str(), "growth_per_doubling" | "slope" | "error_reduction")) {
            let _ = writeln!(s, "  {} {} = {} [{}] {}", r.parameters, r.metric, r.value, r.theory_verdict, r.witness);
        }
    }
    if let Some(e) = failure {
        let _ = writeln!(s, "numerical failure, output truncated: {e}");
    }
    s
}

/// Validates and executes `cfg`.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, ConfigError> {
    let cmd = cfg.validate()?;
    let ctx = Ctx { cfg, cmd };
    let (rows, failure) = match cmd {
        Command::Ortho => run_ortho(&ctx),
        Command::Fourier => run_fourier(&ctx),
        Command::Mz => run_mz(&ctx),
        Command::Interp => run_interp(&ctx),
        Command::Hilbert => run_hilbert(&ctx),
        Command::Check => run_check(&ctx),
    };
    let summary = summarize(cmd, cfg, &rows, &failure);
    Ok(Outcome { command: cmd, rows, failure, summary })
}

#[derive(Debug, Parser)]
#[command(name = "gjlog", version, about = "Run an orthogonal-polynomial experiment described by a JSON config and write CSV")]
pub struct Cli {
    /// Experiment to run; may instead be given as "command" in the config.
    #[arg(value_enum)]
    pub command: Option<Command>,
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV path; overrides "output" in the config. Standard output when neither is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "GJLOG_THREADS")]
    pub threads: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Cli {
    /// The config file with the command-line overrides applied.
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        match (self.command, cfg.command) {
            (Some(a), Some(b)) if a != b => {
                return Err(ConfigError::Invalid(format!("command {} conflicts with config command {}", a.as_str(), b.as_str())))
            }
            (Some(a), _) => cfg.command = Some(a),
            _ => {}
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
        Ok(cfg)
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Parses arguments, runs, writes the CSV and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let cfg = match cli.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_INVALID;
        }
    };
    let run = || execute(&cfg);
    let outcome = match cli.threads {
        Some(t) if t > 0 => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                eprintln!("cannot start {t} threads: {e}");
                return EXIT_INVALID;
            }
        },
        Some(_) => {
            eprintln!("--threads must be positive");
            return EXIT_INVALID;
        }
        None => run(),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_INVALID;
        }
    };
    let written = match &cfg.output {
        Some(path) => std::fs::File::create(path)
            .map_err(csv::Error::from)
            .and_then(|f| outcome.write_csv(std::io::BufWriter::new(f), now())),
        None => outcome.write_csv(std::io::stdout().lock(), now()),
    };
    eprint!("{}", outcome.summary);
    if let Err(e) = written {
        eprintln!("cannot write output: {e}");
        return EXIT_NUMERICAL;
    }
    outcome.exit_code()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn check_reproduces_legendre_threshold() {
        let o = execute(&cfg(r#"{"command": "check", "p": [6, 2, 4, 3.9]}"#)).unwrap();
        let got: Vec<(&str, &str)> = o.rows.iter().map(|r| (r.parameters.as_str(), r.theory_verdict.as_str())).collect();
        assert_eq!(got, [("p=2", "holds"), ("p=3.9", "holds"), ("p=4", "boundary"), ("p=6", "fails")]);
        assert!(o.rows.iter().all(|r| r.metric == "nevai"));
        assert_eq!(o.exit_code(), EXIT_OK);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        for text in [
            r#"{"command": "mz", "p": [2], "n": [8, 4], "seed": 1}"#,
            r#"{"command": "mz", "p": [2], "n": [4, 8]}"#,
            r#"{"command": "fourier", "p": [1.0], "n": [4], "seed": 1}"#,
            r#"{"command": "interp", "p": [2], "n": []}"#,
            r#"{"p": [2], "n": [4]}"#,
        ] {
            assert!(matches!(execute(&cfg(text)), Err(ConfigError::Invalid(_))), "{text}");
        }
        assert!(matches!(ExperimentConfig::from_json(r#"{"command": "mz", "bogus": 1}"#), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn chebyshev_p2_mz_rows_are_one() {
        let text = r#"{"command": "mz", "alpha": {"points": [-1, 1], "Gamma": [-0.5, -0.5], "gamma": [0, 0], "h": "one"},
                       "p": [2], "n": [4, 8, 16], "seed": 3, "trials": 8}"#;
        let o = execute(&cfg(text)).unwrap();
        let ratios: Vec<f64> = o.rows.iter().filter(|r| r.metric == "mz_ratio_sup").map(|r| r.value.parse().unwrap()).collect();
        assert_eq!(ratios.len(), 3);
        assert!(ratios.iter().all(|r| (r - 1.0).abs() < 1e-8), "{ratios:?}");
        assert!(o.rows.iter().all(|r| r.seed == "3"));
    }

    #[test]
    fn body_is_deterministic_and_marks_truncation() {
        let text = r#"{"command": "fourier", "p": [3], "n": [4, 8], "seed": 11, "trials": 6}"#;
        let body = |o: &Outcome| {
            let mut v = Vec::new();
            o.write_body(&mut v).unwrap();
            v
        };
        let a = execute(&cfg(text)).unwrap();
        let b = execute(&cfg(text)).unwrap();
        assert_eq!(body(&a), body(&b));
        let mut t = a.clone();
        t.failure = Some("boom".into());
        let text = String::from_utf8(body(&t)).unwrap();
        assert!(text.lines().last().unwrap().contains(TRUNCATED));
        assert_eq!(t.exit_code(), EXIT_NUMERICAL);
    }

    #[test]
    fn target_jets() {
        assert_eq!(Target::Abs.jet(-0.5, 3), vec![0.5, -1.0, 0.0]);
        assert_eq!(Target::Cubic.jet(2.0, 5), vec![8.0, 12.0, 12.0, 6.0, 0.0]);
        let c = Target::Cos.jet(0.3, 3);
        assert!((c[1] + 0.3f64.sin()).abs() < 1e-15 && (c[2] + 0.3f64.cos()).abs() < 1e-15);
    }
}
