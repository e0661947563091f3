//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 partial or runtime failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dwopt::analysis::FitModel;
use dwopt::continuous_opt::{benchmark_sweep, Algorithm, SweepSettings, Target};
use dwopt::encoding::{kink_count, ChainInstance, FieldMode};
use dwopt::exact::{estimate_freeze_out, spectrum_summary};
use dwopt::experiment::{
    self, parse_run_config, run_sweep, write_artifacts, ClassicalConfig, ExperimentConfig, FitSpec, ProblemConfig,
    ProtocolConfig, Table,
};
use dwopt::mc::{sa_run, sqa_run, svmc_run, Protocol, RunBatch, SaParams, SqaParams, SvmcParams};
use dwopt::schedule::{Linear, Schedule, Tabulated};
use dwopt::{Error, PotentialSpec, Result};

#[derive(Parser)]
#[command(name = "dwopt", version, about = "Domain-wall encoded annealing of rugged 1D potentials")]
struct Cli {
    /// Override the base seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ProblemArgs {
    /// JSON file with `potential` and `encoding` blocks; other keys are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    h0: Option<f64>,
    #[arg(long)]
    n_spins: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    field_mode: Option<FieldModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldModeArg {
    Gradient,
    ExactDifference,
}

impl ProblemArgs {
    fn problem(&self) -> Result<ProblemConfig> {
        let mut p = match &self.config {
            Some(path) => ProblemConfig::parse(&fs::read_to_string(path)?)?,
            None => ProblemConfig::default(),
        };
        if let Some(h0) = self.h0 {
            p.potential = PotentialSpec { h0, ..p.potential };
        }
        if let Some(n) = self.n_spins {
            p.encoding.n_spins = n;
        }
        if let Some(l) = self.lambda {
            p.encoding.lambda = l;
        }
        if let Some(m) = self.field_mode {
            p.encoding.field_mode = match m {
                FieldModeArg::Gradient => FieldMode::Gradient,
                FieldModeArg::ExactDifference => FieldMode::ExactDifference,
            };
        }
        let text = serde_json::to_string(&p)?;
        ProblemConfig::parse(&text)
    }

    fn chain(&self) -> Result<ChainInstance> {
        self.problem()?.chain()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Sa,
    Sqa,
    Svmc,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Nm,
    Cgd,
    Bh,
    De,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Nm => Algorithm::Nm,
            AlgoArg::Cgd => Algorithm::Cgd,
            AlgoArg::Bh => Algorithm::Bh,
            AlgoArg::De => Algorithm::De,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    PowerLaw,
    Exponential,
    Loglog,
}

#[derive(Subcommand)]
enum Command {
    /// Build the chain; write it as JSON or encode a single value.
    Encode {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Encode this value and print the spin string instead of the chain.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print e0, e1, n_enc and the ground degeneracy as JSON.
    Exact {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Anneal with a Monte Carlo protocol and dump every sample.
    Anneal {
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep TEBD anneal times and write the curve.
    Tebd {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmark a continuous optimizer over the sweep of iteration budgets.
    Classical {
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a config and write curve.csv, summary.json and provenance.json.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a column of a curve file and print the result as JSON.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Abscissa column; `t` is the sweep column, `one_minus_<col>` is `1 − col`.
        #[arg(long, default_value = "t")]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_enum, default_value = "power-law")]
        model: ModelArg,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
        window: Vec<f64>,
        /// Weight by the `<y>_se` column.
        #[arg(long)]
        weighted: bool,
    },
    /// Effective temperature of a mean energy and the matching freeze-out point.
    Efftemp {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, allow_hyphen_values = true)]
        energy: f64,
        #[arg(long, default_value_t = 1.0)]
        t_phys: f64,
        /// CSV with columns s, a, b; the linear schedule when absent.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Run a canned recipe.
    Reproduce {
        id: String,
        #[arg(long, default_value = "reproduce")]
        out: PathBuf,
    },
}

enum Failure {
    Config(Error),
    Partial(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidParameter { .. }
            | Error::UnknownRecipe { .. }
            | Error::Json(_)
            | Error::LengthMismatch { .. }
            | Error::OutOfBox { .. } => Failure::Config(e),
            other => Failure::Runtime(other),
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = parse_run_config(&fs::read_to_string(path)?)?;
    if let Some(s) = seed {
        cfg.runs.seed = s;
    }
    Ok(cfg)
}

fn require_sweep(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()
}

#[derive(Serialize)]
struct SampleRow {
    run_id: usize,
    read_id: usize,
    energy: f64,
    kinks: usize,
    decoded_x: Option<f64>,
    spins: String,
}

fn anneal(protocol: ProtocolArg, cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let chain = cfg.chain()?;
    let want = match protocol {
        ProtocolArg::Sa => Protocol::Sa,
        ProtocolArg::Sqa => Protocol::Sqa,
        ProtocolArg::Svmc => Protocol::Svmc,
    };
    // a config written for another protocol contributes only its chain and runs
    let (sa, sqa, svmc) = match &cfg.protocol {
        ProtocolConfig::Sa(p) => (*p, SqaParams::default(), SvmcParams::default()),
        ProtocolConfig::Sqa(p) => (SaParams::default(), *p, SvmcParams::default()),
        ProtocolConfig::Svmc(p) => (SaParams::default(), SqaParams::default(), *p),
        _ => (SaParams::default(), SqaParams::default(), SvmcParams::default()),
    };
    if cfg.protocol.name() != want.as_str() && matches!(cfg.protocol, ProtocolConfig::Sa(_) | ProtocolConfig::Sqa(_) | ProtocolConfig::Svmc(_)) {
        return Err(Error::Config(vec![format!(
            "--protocol {} does not match the config's `protocol.{}` block",
            want,
            cfg.protocol.name()
        )]));
    }
    let mut w = csv::Writer::from_path(out)?;
    for r in 0..cfg.runs.n_runs {
        let seed = dwopt::rng::derive(cfg.runs.seed, &[0, r as u64]);
        let batch: RunBatch = match want {
            Protocol::Sa => sa_run(&chain, &sa, cfg.runs.n_reads, seed)?,
            Protocol::Sqa => sqa_run(&chain, &sqa, seed)?,
            Protocol::Svmc => svmc_run(&chain, &svmc, cfg.runs.n_reads, seed)?,
        };
        for (i, s) in batch.samples.iter().enumerate() {
            w.serialize(SampleRow {
                run_id: r,
                read_id: i,
                energy: chain.energy(s)?,
                kinks: kink_count(s),
                decoded_x: chain.decode(s)?,
                spins: s.to_sign_string(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EncodedValue {
    x: f64,
    decoded_x: Option<f64>,
    bond: Option<usize>,
    energy: f64,
    spins: String,
}

fn read_schedule(path: &Path) -> Result<Tabulated> {
    let t = Table::from_csv(fs::File::open(path)?)?;
    Tabulated::new(t.column("s")?, t.column("a")?, t.column("b")?)
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let seed = cli.seed;
    match cli.command {
        Command::Encode { problem, x, out } => {
            let chain = problem.chain()?;
            match x {
                Some(x) => {
                    let s = chain.encode(x)?;
                    print_json(&EncodedValue {
                        x,
                        decoded_x: chain.decode(&s)?,
                        bond: s.wall_position(),
                        energy: chain.energy(&s)?,
                        spins: s.to_sign_string(),
                    })?;
                }
                None => {
                    let text = chain.to_json()?;
                    match out {
                        Some(p) => fs::write(p, text).map_err(Error::from)?,
                        None => println!("{text}"),
                    }
                }
            }
        }
        Command::Exact { problem } => {
            let chain = problem.chain()?;
            print_json(&spectrum_summary(&chain).report())?;
        }
        Command::Anneal { protocol, config, out } => {
            let cfg = load(&config, seed)?;
            anneal(protocol, &cfg, &out)?;
        }
        Command::Tebd { config, out } => {
            let cfg = load(&config, seed)?;
            if !matches!(cfg.protocol, ProtocolConfig::Tebd(_)) {
                return Err(Failure::Config(Error::Config(vec!["`tebd` needs a `protocol.tebd` block".into()])));
            }
            require_sweep(&cfg)?;
            let outcome = run_sweep(&cfg)?;
            fs::write(&out, &outcome.curve_csv).map_err(Error::from)?;
            if !outcome.summary.failures.is_empty() {
                return Err(Failure::Partial(format!("{} sweep points failed", outcome.summary.failures.len())));
            }
        }
        Command::Classical { algo, config, out } => {
            let cfg = load(&config, seed)?;
            require_sweep(&cfg)?;
            let c = match &cfg.protocol {
                ProtocolConfig::Classical(c) => c.clone(),
                _ => ClassicalConfig::default(),
            };
            let target = Target::for_grid(&cfg.potential, cfg.encoding.n_spins)?;
            let budgets: Vec<usize> = cfg.sweep.iter().map(|&v| v as usize).collect();
            let settings = SweepSettings { bh: c.bh, de: c.de };
            let rows = benchmark_sweep(&cfg.potential, algo.into(), c.n_init, &budgets, cfg.runs.seed, &target, &settings)?;
            let mut w = csv::Writer::from_path(&out).map_err(Error::from)?;
            for r in &rows {
                w.serialize(r).map_err(Error::from)?;
            }
            w.flush().map_err(Error::from)?;
        }
        Command::Sweep { config, out } => {
            let cfg = load(&config, seed)?;
            require_sweep(&cfg)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let outcome = run_sweep(&cfg)?;
            let art = write_artifacts(&cfg, &outcome, &dir)?;
            eprintln!("wrote {}", art.dir.display());
            if art.n_failed > 0 {
                return Err(Failure::Partial(format!("{} sweep points failed; see summary.json", art.n_failed)));
            }
        }
        Command::Fit { input, x, y, model, window, weighted } => {
            let table = Table::from_csv(fs::File::open(&input).map_err(Error::from)?)?;
            let window = match window.as_slice() {
                [lo, hi] => (*lo, *hi),
                _ => (f64::NEG_INFINITY, f64::INFINITY),
            };
            let spec = FitSpec {
                x,
                y,
                model: match model {
                    ModelArg::PowerLaw => FitModel::PowerLaw,
                    ModelArg::Exponential => FitModel::Exponential,
                    ModelArg::Loglog => FitModel::LogLogSlope,
                },
                window,
                weighted,
            };
            print_json(&table.fit(&spec)?)?;
        }
        Command::Efftemp { problem, energy, t_phys, schedule } => {
            let chain = problem.chain()?;
            let sched: Box<dyn Schedule> = match schedule {
                Some(p) => Box::new(read_schedule(&p)?),
                None => Box::new(Linear),
            };
            print_json(&estimate_freeze_out(&chain, energy, sched.as_ref(), t_phys)?)?;
        }
        Command::Reproduce { id, out } => {
            let dir = out.join(&id);
            let outcome = experiment::reproduce(&id, &dir, seed)?;
            print_json(&outcome)?;
            if outcome.n_failed > 0 {
                return Err(Failure::Partial(format!("{} sweep points failed", outcome.n_failed)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
