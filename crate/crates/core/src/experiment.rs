//! Config-driven sweeps and their on-disk artifacts.
//!
//! A run writes `curve.csv` (one row per sweep point, byte-identical across
//! reruns of the same config), `summary.json` (fits, failures, timings) and
//! `provenance.json` (the full config, its hash, every derived seed and the
//! code version). Every run of sweep point `k` draws from
//! `rng::derive(seed, &[k, run])`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::analysis::{self, FitModel, FitResult};
use crate::continuous_opt::{benchmark_sweep, Algorithm, BhParams, DeParams, SweepSettings, Target};
use crate::encoding::{build_chain, ChainInstance, ChainParams, FieldMode, SpinConfig};
use crate::error::{invalid, Error, Result};
use crate::exact::{compute_n_enc, ground_state_dp};
use crate::mc::{sa_run, sqa_run, svmc_run, SaParams, SqaParams, SvmcParams};
use crate::observables::{self, Scorer};
use crate::potential::PotentialSpec;
use crate::rng;
use crate::tebd::{tebd_point, TebdParams};

/// Environment variable holding the worker-thread count for sweep points.
pub const WORKERS_ENV: &str = "DWOPT_WORKERS";

fn default_potential() -> PotentialSpec {
    PotentialSpec::washboard(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub encoding: ChainParams,
    pub protocol: ProtocolConfig,
    /// `t_MCS` for Monte Carlo, `t_a` for TEBD, `t_max` for classical optimizers.
    #[serde(default)]
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub runs: RunsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub fits: Vec<FitSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolConfig {
    Sa(SaParams),
    Sqa(SqaParams),
    Svmc(SvmcParams),
    Tebd(TebdParams),
    Classical(ClassicalConfig),
}

impl ProtocolConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolConfig::Sa(_) => "sa",
            ProtocolConfig::Sqa(_) => "sqa",
            ProtocolConfig::Svmc(_) => "svmc",
            ProtocolConfig::Tebd(_) => "tebd",
            ProtocolConfig::Classical(_) => "classical",
        }
    }

    fn default_named(name: &str) -> Option<Self> {
        Some(match name {
            "sa" => ProtocolConfig::Sa(SaParams::default()),
            "sqa" => ProtocolConfig::Sqa(SqaParams::default()),
            "svmc" => ProtocolConfig::Svmc(SvmcParams::default()),
            "tebd" => ProtocolConfig::Tebd(TebdParams::default()),
            "classical" => ProtocolConfig::Classical(ClassicalConfig::default()),
            _ => return None,
        })
    }

    /// The protocol parameters with the sweep variable set to `value`.
    fn at(&self, value: f64) -> Result<ProtocolConfig> {
        let steps = |v: f64| -> Result<usize> {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(invalid("sweep", format!("{v} is not a positive integer step count")));
            }
            Ok(v as usize)
        };
        let p = match self {
            ProtocolConfig::Sa(p) => ProtocolConfig::Sa(SaParams { t_mcs: steps(value)?, ..*p }),
            ProtocolConfig::Sqa(p) => ProtocolConfig::Sqa(SqaParams { t_mcs: steps(value)?, ..*p }),
            ProtocolConfig::Svmc(p) => ProtocolConfig::Svmc(SvmcParams { t_mcs: steps(value)?, ..*p }),
            ProtocolConfig::Tebd(p) => ProtocolConfig::Tebd(TebdParams { t_a: value, ..*p }),
            ProtocolConfig::Classical(c) => {
                steps(value)?;
                ProtocolConfig::Classical(c.clone())
            }
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProtocolConfig::Sa(p) => p.validate(),
            ProtocolConfig::Sqa(p) => p.validate(),
            ProtocolConfig::Svmc(p) => p.validate(),
            ProtocolConfig::Tebd(p) => p.validate(),
            ProtocolConfig::Classical(c) => c.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalConfig {
    pub algorithm: Algorithm,
    pub n_init: usize,
    pub bh: BhParams,
    pub de: DeParams,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::De,
            n_init: 1000,
            bh: BhParams::default(),
            de: DeParams::default(),
        }
    }
}

impl ClassicalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_init == 0 {
            return Err(invalid("n_init", "must be >= 1"));
        }
        self.bh.validate()?;
        self.de.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunsConfig {
    pub n_runs: usize,
    /// Reads per run (SQA returns its `trotter_m` replicas instead).
    pub n_reads: usize,
    pub seed: u64,
    pub n_resamples: usize,
}

impl Default for RunsConfig {
    fn default() -> Self {
        Self {
            n_runs: 20,
            n_reads: 1000,
            seed: 0,
            n_resamples: observables::N_RESAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// A fit to run on the finished curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    /// Abscissa column; `t` is the sweep column, `one_minus_<col>` is `1 − col`.
    #[serde(default = "default_x")]
    pub x: String,
    pub y: String,
    pub model: FitModel,
    pub window: (f64, f64),
    #[serde(default)]
    pub weighted: bool,
}

fn default_x() -> String {
    "t".into()
}

impl ExperimentConfig {
    /// Default chain (N = 211, λ = J = 1, h = 2) with the given protocol.
    pub fn with_protocol(protocol: ProtocolConfig) -> Self {
        Self {
            potential: default_potential(),
            encoding: ChainParams::default(),
            protocol,
            sweep: Vec::new(),
            runs: RunsConfig::default(),
            output: OutputConfig::default(),
            fits: Vec::new(),
        }
    }

    /// Every semantic problem in the config, in a stable order.
    pub fn problems(&self) -> Vec<String> {
        self.problems_with(true)
    }

    fn problems_with(&self, require_sweep: bool) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |r: Result<()>| {
            if let Err(e) = r {
                out.push(e.to_string());
            }
        };
        push(self.potential.validate());
        push(self.encoding.validate());
        push(self.protocol.validate());
        if require_sweep && self.sweep.is_empty() {
            push(Err(invalid("sweep", "the sweep list is empty")));
        }
        for &v in &self.sweep {
            push(self.protocol.at(v).map(|_| ()));
        }
        if self.runs.n_runs == 0 || self.runs.n_reads == 0 {
            push(Err(invalid("runs", "n_runs and n_reads must be >= 1")));
        }
        if self.runs.n_resamples < 100 {
            push(Err(invalid("n_resamples", "need >= 100")));
        }
        for f in &self.fits {
            if !(f.window.0 <= f.window.1) {
                push(Err(invalid("fits", format!("window ({}, {}) is empty", f.window.0, f.window.1))));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }

    pub fn chain(&self) -> Result<ChainInstance> {
        build_chain(&self.potential, &self.encoding)
    }

    pub fn sha256(&self) -> Result<String> {
        Ok(format!("{:x}", Sha256::digest(serde_json::to_vec(self)?)))
    }

    /// Seed of sweep point `k`; run `r` inside it uses `derive(seed, &[k, r])`.
    pub fn point_seed(&self, k: usize) -> u64 {
        rng::derive(self.runs.seed, &[k as u64])
    }
}

/// Keys present in `value` but absent from `template`, as dotted paths.
fn unknown_keys(value: &Value, template: &Value, path: &str, out: &mut Vec<String>) {
    if let (Value::Object(v), Value::Object(t)) = (value, template) {
        for (key, child) in v {
            let p = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
            match t.get(key) {
                Some(tc) => unknown_keys(child, tc, &p, out),
                None => out.push(format!("unknown key `{p}`")),
            }
        }
    }
}

fn template_for(value: &Value) -> Result<Value> {
    let protocol = value
        .get("protocol")
        .and_then(Value::as_object)
        .and_then(|o| o.keys().next())
        .and_then(|k| ProtocolConfig::default_named(k))
        .unwrap_or(ProtocolConfig::Sa(SaParams::default()));
    let mut cfg = ExperimentConfig::with_protocol(protocol);
    cfg.fits.push(FitSpec {
        x: default_x(),
        y: String::new(),
        model: FitModel::PowerLaw,
        window: (0.0, 0.0),
        weighted: false,
    });
    let mut t = serde_json::to_value(&cfg)?;
    // any number of fits share the one template entry
    if let (Some(Value::Array(vf)), Some(Value::Array(tf))) = (value.get("fits"), t.get_mut("fits")) {
        let one = tf[0].clone();
        *tf = vec![one; vf.len()];
    }
    Ok(t)
}

/// Parse and fully validate a config, reporting every offending key at once.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with(text, true)
}

/// [`parse_config`] for single-shot commands that may omit the sweep list.
pub fn parse_run_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with(text, false)
}

fn parse_config_with(text: &str, require_sweep: bool) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("malformed JSON: {e}")]))?;
    let mut problems = Vec::new();
    unknown_keys(&value, &template_for(&value)?, "", &mut problems);
    if let Some(o) = value.get("protocol").and_then(Value::as_object) {
        if o.len() != 1 || ProtocolConfig::default_named(o.keys().next().unwrap()).is_none() {
            problems.push("`protocol` must hold exactly one of sa, sqa, svmc, tebd, classical".into());
        }
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let cfg: ExperimentConfig = serde_json::from_value(value).map_err(|e| Error::Config(vec![e.to_string()]))?;
    let problems = cfg.problems_with(require_sweep);
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// Only the potential and encoding blocks of a config file; other keys are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub encoding: ChainParams,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            potential: default_potential(),
            encoding: ChainParams::default(),
        }
    }
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        let mut problems = Vec::new();
        for r in [p.potential.validate(), p.encoding.validate()] {
            if let Err(e) = r {
                problems.push(e.to_string());
            }
        }
        if problems.is_empty() {
            Ok(p)
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn chain(&self) -> Result<ChainInstance> {
        build_chain(&self.potential, &self.encoding)
    }
}

/// A TEBD curve row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TebdRow {
    pub t_a: f64,
    pub rho: f64,
    pub p_const: f64,
    pub e_res: f64,
    pub p_gs: f64,
    pub truncation_error: f64,
}

/// A classical-optimizer curve row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalRow {
    pub t_max: usize,
    pub p_gs: f64,
    pub e_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointRow {
    Mc(observables::ObservableRecord),
    Tebd(TebdRow),
    Classical(ClassicalRow),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointTiming {
    pub index: usize,
    pub value: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub index: usize,
    pub value: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedFit {
    pub x: String,
    pub y: String,
    pub result: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub protocol: String,
    pub n_points: usize,
    pub e0: Option<f64>,
    pub fits: Vec<NamedFit>,
    pub failures: Vec<PointFailure>,
    pub timings: Vec<PointTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub code_version: String,
    pub seed_rule: String,
    pub point_seeds: Vec<u64>,
}

/// In-memory result of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<PointRow>,
    pub summary: Summary,
    pub curve_csv: Vec<u8>,
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub curve: PathBuf,
    pub summary: PathBuf,
    pub provenance: PathBuf,
    pub n_failed: usize,
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::Config(vec![format!("{WORKERS_ENV}={v} is not a positive integer")]))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| invalid("workers", e.to_string()))
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    chain: ChainInstance,
    e0: f64,
    ground_set: Vec<SpinConfig>,
}

impl Context<'_> {
    fn point(&self, k: usize, value: f64) -> Result<PointRow> {
        let cfg = self.cfg;
        let seed = cfg.point_seed(k);
        let runs = cfg.runs;
        let run_seed = |r: usize| rng::derive(cfg.runs.seed, &[k as u64, r as u64]);
        let mc = |samples: Vec<SpinConfig>| -> Result<PointRow> {
            let scorer = Scorer {
                chain: &self.chain,
                objective: &cfg.potential,
                e0: self.e0,
                ground_set: &self.ground_set,
                n_resamples: runs.n_resamples,
            };
            Ok(PointRow::Mc(scorer.record(cfg.protocol.name(), value, &samples, seed)?))
        };
        match cfg.protocol.at(value)? {
            ProtocolConfig::Sa(p) => {
                let mut all = Vec::new();
                for r in 0..runs.n_runs {
                    all.extend(sa_run(&self.chain, &p, runs.n_reads, run_seed(r))?.samples);
                }
                mc(all)
            }
            ProtocolConfig::Sqa(p) => {
                let mut all = Vec::new();
                for r in 0..runs.n_runs {
                    all.extend(sqa_run(&self.chain, &p, run_seed(r))?.samples);
                }
                mc(all)
            }
            ProtocolConfig::Svmc(p) => {
                let mut all = Vec::new();
                for r in 0..runs.n_runs {
                    all.extend(svmc_run(&self.chain, &p, runs.n_reads, run_seed(r))?.samples);
                }
                mc(all)
            }
            ProtocolConfig::Tebd(p) => {
                let pt = tebd_point(&self.chain, &p, self.e0, &self.ground_set)?;
                Ok(PointRow::Tebd(TebdRow {
                    t_a: pt.t_a,
                    rho: pt.rho,
                    p_const: pt.p_const,
                    e_res: pt.e_res,
                    p_gs: pt.p_gs,
                    truncation_error: pt.truncation_error,
                }))
            }
            ProtocolConfig::Classical(c) => {
                let target = Target::for_grid(&cfg.potential, cfg.encoding.n_spins)?;
                let settings = SweepSettings { bh: c.bh, de: c.de.clone() };
                let t_max = value as usize;
                let row = benchmark_sweep(&cfg.potential, c.algorithm, c.n_init, &[t_max], seed, &target, &settings)?;
                Ok(PointRow::Classical(ClassicalRow {
                    t_max,
                    p_gs: row[0].p_gs,
                    e_abs: row[0].e_abs,
                }))
            }
        }
    }
}

fn curve_bytes(rows: &[PointRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        match r {
            PointRow::Mc(x) => w.serialize(x)?,
            PointRow::Tebd(x) => w.serialize(x)?,
            PointRow::Classical(x) => w.serialize(x)?,
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Numeric columns of a CSV curve by header name; blank cells become NaN.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: BTreeMap<String, Vec<f64>>,
}

impl Table {
    pub fn from_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut columns: BTreeMap<String, Vec<f64>> = headers.iter().map(|h| (h.clone(), Vec::new())).collect();
        for rec in reader.records() {
            let rec = rec?;
            for (h, cell) in headers.iter().zip(rec.iter()) {
                columns.get_mut(h).unwrap().push(cell.trim().parse().unwrap_or(f64::NAN));
            }
        }
        Ok(Self { headers, columns })
    }

    /// Column by name; `t` is the sweep column and `one_minus_<c>` is `1 − c`.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        if name == "t" {
            let sweep = ["t_a_or_mcs", "t_a", "t_max"].iter().find(|h| self.columns.contains_key(**h));
            if let Some(h) = sweep.map(|h| h.to_string()).or_else(|| self.headers.first().cloned()) {
                return self.column(&h);
            }
        }
        if let Some(c) = self.columns.get(name) {
            return Ok(c.clone());
        }
        if let Some(base) = name.strip_prefix("one_minus_") {
            return Ok(self.column(base)?.iter().map(|v| 1.0 - v).collect());
        }
        Err(invalid("column", format!("no column `{name}`; have {}", self.headers.join(", "))))
    }

    pub fn fit(&self, spec: &FitSpec) -> Result<FitResult> {
        let x = self.column(&spec.x)?;
        let y = self.column(&spec.y)?;
        let (lo, hi) = spec.window;
        if spec.weighted {
            let se = self.column(&format!("{}_se", spec.y))?;
            return match spec.model {
                FitModel::PowerLaw => analysis::power_law_fit_weighted(&x, &y, &se, spec.window),
                FitModel::Exponential => analysis::exponential_fit_weighted(&x, &y, &se, spec.window),
                FitModel::LogLogSlope => Err(invalid("weighted", "log-log slopes are unweighted")),
            };
        }
        match spec.model {
            FitModel::PowerLaw => analysis::power_law_fit(&x, &y, spec.window),
            FitModel::Exponential => analysis::exponential_fit(&x, &y, spec.window),
            FitModel::LogLogSlope => analysis::loglog_slope(&x, &y, |x, _| x >= lo && x <= hi),
        }
    }
}

/// Run the sweep in memory. Failed points are reported, not fatal.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let chain = cfg.chain()?;
    let needs_exact = !matches!(cfg.protocol, ProtocolConfig::Classical(_));
    let (e0, ground_set) = if needs_exact {
        let gs = ground_state_dp(&chain);
        (Some(gs.e0), gs.ground_set)
    } else {
        (None, Vec::new())
    };
    let ctx = Context {
        cfg,
        chain,
        e0: e0.unwrap_or(0.0),
        ground_set,
    };
    let pool = worker_pool()?;
    let results: Vec<(Result<PointRow>, f64)> = pool.install(|| {
        cfg.sweep
            .par_iter()
            .enumerate()
            .map(|(k, &v)| {
                let start = Instant::now();
                let r = ctx.point(k, v);
                (r, start.elapsed().as_secs_f64())
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    for (k, (r, wall)) in results.into_iter().enumerate() {
        let value = cfg.sweep[k];
        timings.push(PointTiming { index: k, value, wall_time: wall });
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(PointFailure { index: k, value, error: e.to_string() }),
        }
    }
    let curve_csv = curve_bytes(&rows)?;
    let fits = if rows.is_empty() {
        Vec::new()
    } else {
        let table = Table::from_csv(curve_csv.as_slice())?;
        cfg.fits
            .iter()
            .map(|f| {
                let r = table.fit(f);
                NamedFit {
                    x: f.x.clone(),
                    y: f.y.clone(),
                    error: r.as_ref().err().map(|e| e.to_string()),
                    result: r.ok(),
                }
            })
            .collect()
    };
    Ok(SweepOutcome {
        rows,
        summary: Summary {
            protocol: cfg.protocol.name().into(),
            n_points: cfg.sweep.len(),
            e0,
            fits,
            failures,
            timings,
        },
        curve_csv,
    })
}

pub fn provenance(cfg: &ExperimentConfig) -> Result<Provenance> {
    Ok(Provenance {
        config: cfg.clone(),
        config_sha256: cfg.sha256()?,
        code_version: format!("dwopt {}", env!("CARGO_PKG_VERSION")),
        seed_rule: "point k: derive(seed, [k]); run r of point k: derive(seed, [k, r])".into(),
        point_seeds: (0..cfg.sweep.len()).map(|k| cfg.point_seed(k)).collect(),
    })
}

/// Run the sweep and write its artifacts into `dir` (the config's `output.dir` when `None`).
pub fn run_experiment(cfg: &ExperimentConfig, dir: Option<&Path>) -> Result<Artifacts> {
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let outcome = run_sweep(cfg)?;
    write_artifacts(cfg, &outcome, &dir)
}

pub fn write_artifacts(cfg: &ExperimentConfig, outcome: &SweepOutcome, dir: &Path) -> Result<Artifacts> {
    fs::create_dir_all(dir)?;
    let art = Artifacts {
        dir: dir.to_path_buf(),
        curve: dir.join("curve.csv"),
        summary: dir.join("summary.json"),
        provenance: dir.join("provenance.json"),
        n_failed: outcome.summary.failures.len(),
    };
    fs::write(&art.curve, &outcome.curve_csv)?;
    fs::write(&art.summary, serde_json::to_string_pretty(&outcome.summary)?)?;
    fs::write(&art.provenance, serde_json::to_string_pretty(&provenance(cfg)?)?)?;
    Ok(art)
}

fn logspace_int(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp().round())
        .collect();
    v.dedup();
    v
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn power_fit(y: &str, window: (f64, f64)) -> FitSpec {
    FitSpec {
        x: default_x(),
        y: y.into(),
        model: FitModel::PowerLaw,
        window,
        weighted: false,
    }
}

/// Recipe ids accepted by [`reproduce`].
pub const RECIPES: &[&str] = &[
    "table1-sa",
    "table1-sqa",
    "table1-svmc",
    "fig5-nenc",
    "fig-tebd1",
    "fig-tebd2",
    "fig8-classical",
];

const BARRIERS: [f64; 3] = [0.2, 1.0, 3.0];

/// The canned configs of a sweep recipe, keyed by output subdirectory.
pub fn recipe_configs(id: &str) -> Result<Vec<(String, ExperimentConfig)>> {
    let mc = |protocol: ProtocolConfig, window: (f64, f64)| -> Vec<(String, ExperimentConfig)> {
        BARRIERS
            .iter()
            .map(|&h0| {
                let mut cfg = ExperimentConfig::with_protocol(protocol.clone());
                cfg.potential = PotentialSpec::washboard(h0);
                cfg.sweep = logspace_int(2.0, 100.0, 12);
                cfg.fits = vec![power_fit("rho", window), power_fit("e_res", window)];
                (format!("h0_{h0}"), cfg)
            })
            .collect()
    };
    let tebd = |h0: f64, sweep: Vec<f64>, fits: Vec<FitSpec>| {
        let mut cfg = ExperimentConfig::with_protocol(ProtocolConfig::Tebd(TebdParams::default()));
        cfg.potential = PotentialSpec::washboard(h0);
        cfg.encoding = ChainParams::with_n(128);
        cfg.sweep = sweep;
        cfg.fits = fits;
        (format!("h0_{h0}"), cfg)
    };
    Ok(match id {
        "table1-sa" => mc(ProtocolConfig::Sa(SaParams::default()), (2.0, 100.0)),
        "table1-sqa" => mc(ProtocolConfig::Sqa(SqaParams::default()), (4.0, 100.0)),
        "table1-svmc" => mc(ProtocolConfig::Svmc(SvmcParams::default()), (4.0, 100.0)),
        "fig-tebd1" => BARRIERS
            .iter()
            .map(|&h0| tebd(h0, logspace(1.0, 100.0, 7), vec![power_fit("rho", (1.0, 100.0))]))
            .collect(),
        "fig-tebd2" => vec![tebd(
            0.2,
            logspace(10.0, 300.0, 6),
            vec![
                FitSpec {
                    x: default_x(),
                    y: "e_res".into(),
                    model: FitModel::Exponential,
                    window: (10.0, 300.0),
                    weighted: false,
                },
                FitSpec {
                    x: "one_minus_p_gs".into(),
                    y: "e_res".into(),
                    model: FitModel::LogLogSlope,
                    window: (0.0, 0.1),
                    weighted: false,
                },
            ],
        )],
        "fig8-classical" => [Algorithm::Nm, Algorithm::Cgd, Algorithm::Bh, Algorithm::De]
            .iter()
            .map(|&algorithm| {
                let c = ClassicalConfig { algorithm, ..ClassicalConfig::default() };
                let mut cfg = ExperimentConfig::with_protocol(ProtocolConfig::Classical(c));
                cfg.sweep = (0..=10).map(|i| (1u64 << i) as f64).collect();
                (algorithm.as_str().to_string(), cfg)
            })
            .collect(),
        _ => {
            return Err(Error::UnknownRecipe {
                id: id.into(),
                valid: RECIPES.iter().map(|s| s.to_string()).collect(),
            })
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NencRow {
    pub h0: f64,
    pub n_enc_gradient: usize,
    pub n_enc_exact_difference: usize,
}

/// `n_enc` of the 211-spin chain against the barrier height, both field modes.
pub fn nenc_curve(h0s: &[f64]) -> Result<Vec<NencRow>> {
    h0s.par_iter()
        .map(|&h0| {
            let spec = PotentialSpec::washboard(h0);
            let grad = build_chain(&spec, &ChainParams::default())?;
            let diff = build_chain(
                &spec,
                &ChainParams {
                    field_mode: FieldMode::ExactDifference,
                    ..ChainParams::default()
                },
            )?;
            Ok(NencRow {
                h0,
                n_enc_gradient: compute_n_enc(&grad),
                n_enc_exact_difference: compute_n_enc(&diff),
            })
        })
        .collect()
}

/// Outcome of [`reproduce`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecipeOutcome {
    pub id: String,
    pub parts: Vec<String>,
    pub fits: BTreeMap<String, Vec<NamedFit>>,
    pub n_failed: usize,
}

/// Run a canned recipe into `dir`, writing one artifact bundle per part and `fits.json`.
pub fn reproduce(id: &str, dir: &Path, seed: Option<u64>) -> Result<RecipeOutcome> {
    fs::create_dir_all(dir)?;
    if id == "fig5-nenc" {
        let h0s: Vec<f64> = (0..=30).map(|i| i as f64 / 10.0).collect();
        let rows = nenc_curve(&h0s)?;
        let mut w = csv::Writer::from_path(dir.join("nenc.csv"))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        return Ok(RecipeOutcome {
            id: id.into(),
            parts: vec!["nenc.csv".into()],
            fits: BTreeMap::new(),
            n_failed: 0,
        });
    }
    let mut outcome = RecipeOutcome {
        id: id.into(),
        parts: Vec::new(),
        fits: BTreeMap::new(),
        n_failed: 0,
    };
    for (name, mut cfg) in recipe_configs(id)? {
        if let Some(s) = seed {
            cfg.runs.seed = s;
        }
        let sub = dir.join(&name);
        cfg.output.dir = sub.clone();
        let run = run_sweep(&cfg)?;
        let art = write_artifacts(&cfg, &run, &sub)?;
        outcome.n_failed += art.n_failed;
        outcome.fits.insert(name.clone(), run.summary.fits);
        outcome.parts.push(name);
    }
    fs::write(dir.join("fits.json"), serde_json::to_string_pretty(&outcome.fits)?)?;
    Ok(outcome)
}
