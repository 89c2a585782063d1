use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amplab::born::{sweep_csv, BornError};
use amplab::checks::{run_suite, CheckContext, Suite};
use amplab::format::{complex17, sig17};
use amplab::setup::{bind, SetupError};
use amplab::{
    amplitude_chain, born, build_hamiltonian, build_kernel, convergence_sweep, evolve, parse, AmplitudeError, Filter,
    LatticeConfig, StateSpec, StateSpecError, StepKernel, WaveState,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

mod exit {
    pub const USAGE: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const COMPOSITION: u8 = 3;
    pub const LATTICE: u8 = 4;
    pub const ZERO_STATE: u8 = 5;
}

/// Amplitudes, evolution and ensemble Born statistics for a particle on a
/// 1D lattice.
#[derive(Parser, Debug)]
#[command(name = "amplab", version)]
struct Cli {
    /// Lattice configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    lattice: Option<PathBuf>,
    /// Time step of the evolution kernel.
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Amplitude of the setup in a DSL file.
    Amp {
        setup: PathBuf,
    },
    /// Evolve a state by a number of kernel steps.
    Evolve {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        steps: u64,
        /// Filters as JSON: [{"time": t, "holes": [..]}, ...].
        #[arg(long)]
        filters: Option<String>,
    },
    /// Weighted Born probabilities of a state.
    Born {
        #[command(flatten)]
        state: StateArgs,
    },
    /// Fraction-filter distance for a list of replica counts.
    Ensemble {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        site: usize,
        /// Target fraction f.
        #[arg(long)]
        fraction: f64,
        /// Window half-width epsilon.
        #[arg(long)]
        eps: f64,
        /// Ascending replica counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        replicas: Vec<u64>,
    },
    /// Run a seeded property suite (or "all").
    Check {
        suite: String,
        #[arg(long, default_value_t = 100)]
        cases: u64,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct StateArgs {
    /// State spec file (JSON).
    #[arg(long, value_name = "PATH")]
    state: Option<PathBuf>,
    /// Inline amplitudes: [[re, im], ...].
    #[arg(long, value_name = "JSON")]
    amplitudes: Option<String>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<SetupError> for Failure {
    fn from(e: SetupError) -> Self {
        let code = match e {
            SetupError::Parse(_) => exit::PARSE,
            _ => exit::COMPOSITION,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<AmplitudeError> for Failure {
    fn from(e: AmplitudeError) -> Self {
        let code = match &e {
            AmplitudeError::LatticeMismatch { .. } | AmplitudeError::DimensionMismatch { .. } => exit::LATTICE,
            AmplitudeError::Setup(_) | AmplitudeError::FilterOutsideWindow { .. } => exit::COMPOSITION,
            _ => exit::USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<StateSpecError> for Failure {
    fn from(e: StateSpecError) -> Self {
        let code = match &e {
            StateSpecError::Json(_) | StateSpecError::Invalid(_) => exit::PARSE,
            StateSpecError::LengthMismatch { .. } | StateSpecError::SiteOutOfRange { .. } => exit::LATTICE,
            StateSpecError::State(_) => exit::PARSE,
            StateSpecError::Amplitude(_) => exit::USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<BornError> for Failure {
    fn from(e: BornError) -> Self {
        let code = match &e {
            BornError::ZeroState => exit::ZERO_STATE,
            BornError::SiteOutOfRange { .. } => exit::LATTICE,
            BornError::Amplitude(_) => exit::LATTICE,
            _ => exit::USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(exit::USAGE, format!("cannot read {}: {e}", path.display())))
}

fn lattice(cli: &Cli) -> Result<LatticeConfig, Failure> {
    let path = cli
        .lattice
        .as_deref()
        .ok_or_else(|| Failure::new(exit::USAGE, "--lattice is required for this command"))?;
    LatticeConfig::from_json(&read(path)?).map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", path.display())))
}

fn dt(cli: &Cli) -> Result<f64, Failure> {
    match cli.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => Ok(dt),
        Some(dt) => Err(Failure::new(exit::USAGE, format!("--dt must be positive and finite, got {dt}"))),
        None => Err(Failure::new(exit::USAGE, "--dt is required for this command")),
    }
}

fn kernel(cfg: &LatticeConfig, dt: f64) -> Result<StepKernel, Failure> {
    build_kernel(&build_hamiltonian(cfg), dt).map_err(|e| Failure::new(exit::USAGE, e.to_string()))
}

fn load_state(cli: &Cli, args: &StateArgs, cfg: &LatticeConfig) -> Result<WaveState, Failure> {
    let spec = match (&args.state, &args.amplitudes) {
        (Some(path), _) => StateSpec::from_json(&read(path)?)
            .map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", path.display())))?,
        (None, Some(text)) => StateSpec::from_json(text)?,
        (None, None) => unreachable!("clap requires one state source"),
    };
    let k = if spec.needs_kernel() {
        Some(kernel(cfg, dt(cli)?)?)
    } else {
        None
    };
    Ok(spec.realize(cfg, k.as_ref())?)
}

fn cmd_amp(cli: &Cli, setup: &Path) -> Result<String, Failure> {
    let text = read(setup)?;
    let expr = parse(&text).map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", setup.display())))?;
    let cfg = lattice(cli)?;
    let canonical = bind(&expr, cfg.num_sites())
        .map_err(|e| Failure::new(exit::COMPOSITION, format!("{}: {e}", setup.display())))?;
    let k = kernel(&cfg, dt(cli)?)?;
    let a = amplitude_chain(&canonical, &k)?.value();
    Ok(match cli.format {
        Format::Csv => format!("{}\n", complex17(a)),
        Format::Json => json_line(json!({ "setup": canonical.to_string(), "re": a.re, "im": a.im })),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    time: i64,
    holes: Vec<usize>,
}

fn cmd_evolve(cli: &Cli, args: &StateArgs, steps: u64, filters: Option<&str>) -> Result<String, Failure> {
    let cfg = lattice(cli)?;
    let state = load_state(cli, args, &cfg)?;
    let filters = match filters {
        None => Vec::new(),
        Some(text) => serde_json::from_str::<Vec<RawFilter>>(text)
            .map_err(|e| Failure::new(exit::PARSE, format!("invalid --filters: {e}")))?
            .into_iter()
            .map(|f| {
                if let Some(&site) = f.holes.iter().find(|&&h| h >= cfg.num_sites()) {
                    return Err(Failure::new(
                        exit::COMPOSITION,
                        format!("filter hole {site} is outside a lattice of {} sites", cfg.num_sites()),
                    ));
                }
                Filter::new(f.time, f.holes).map_err(Failure::from)
            })
            .collect::<Result<_, _>>()?,
    };
    let out = evolve(&state, &kernel(&cfg, dt(cli)?)?, steps, &filters)?;
    Ok(match cli.format {
        Format::Csv => {
            let mut s = String::from("site,re,im\n");
            for (i, a) in out.amplitudes().iter().enumerate() {
                s.push_str(&format!("{i},{},{}\n", sig17(a.re), sig17(a.im)));
            }
            s
        }
        Format::Json => {
            let amps: Vec<[f64; 2]> = out.amplitudes().iter().map(|a| [a.re, a.im]).collect();
            json_line(json!({ "time": out.time(), "amplitudes": amps }))
        }
    })
}

fn cmd_born(cli: &Cli, args: &StateArgs) -> Result<String, Failure> {
    let cfg = lattice(cli)?;
    let report = born(&load_state(cli, args, &cfg)?)?;
    Ok(match cli.format {
        Format::Csv => report.to_csv(),
        Format::Json => json_line(report.to_json()),
    })
}

fn cmd_ensemble(
    cli: &Cli,
    args: &StateArgs,
    site: usize,
    fraction: f64,
    eps: f64,
    replicas: &[u64],
) -> Result<String, Failure> {
    let cfg = lattice(cli)?;
    let state = load_state(cli, args, &cfg)?;
    let rows = convergence_sweep(&state, site, fraction, eps, replicas)?;
    Ok(match cli.format {
        Format::Csv => sweep_csv(&rows),
        Format::Json => json_line(json!(rows
            .iter()
            .map(|r| json!({
                "N": r.replicas,
                "distance_sq": r.distance_sq,
                "hoeffding_bound": r.hoeffding_bound,
                "lower_bound": r.lower_bound,
            }))
            .collect::<Vec<_>>())),
    })
}

fn cmd_check(cli: &Cli, name: &str, cases: u64) -> Result<String, Failure> {
    let suites: Vec<Suite> = if name == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![name.parse::<Suite>().map_err(|e| Failure::new(exit::USAGE, format!("{e}, all")))?]
    };
    let ctx = CheckContext {
        lattice: cli.lattice.as_ref().map(|_| lattice(cli)).transpose()?,
        dt: cli.dt.map(|_| dt(cli)).transpose()?,
    };
    if cases == 0 {
        eprintln!("warning: --cases 0 runs no cases");
    }
    let mut extra = String::new();
    if let Some(path) = &cli.lattice {
        extra.push_str(&format!(" --lattice {}", path.display()));
    }
    if let Some(dt) = cli.dt {
        extra.push_str(&format!(" --dt {dt}"));
    }

    let mut out = String::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for suite in suites {
        let r = run_suite(suite, &ctx, cli.seed, cases);
        let passed = r.cases - r.failures.len() as u64;
        out.push_str(&format!("{suite},{},{passed},{}\n", r.cases, sig17(r.worst)));
        rows.push(json!({ "suite": suite.name(), "cases": r.cases, "passed": passed, "worst": r.worst }));
        for f in &r.failures {
            failures.push(format!(
                "{suite} case {} failed: {}\n  reproduce: amplab check {suite} --seed {} --cases 1{extra}",
                f.case, f.detail, f.seed
            ));
        }
    }
    if !failures.is_empty() {
        return Err(Failure::new(exit::USAGE, failures.join("\n")));
    }
    Ok(match cli.format {
        Format::Csv => format!("suite,cases,passed,worst\n{out}"),
        Format::Json => json_line(json!(rows)),
    })
}

fn json_line(v: serde_json::Value) -> String {
    format!("{v}\n")
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Amp { setup } => cmd_amp(cli, setup),
        Command::Evolve { state, steps, filters } => cmd_evolve(cli, state, *steps, filters.as_deref()),
        Command::Born { state } => cmd_born(cli, state),
        Command::Ensemble {
            state,
            site,
            fraction,
            eps,
            replicas,
        } => cmd_ensemble(cli, state, *site, *fraction, *eps, replicas),
        Command::Check { suite, cases } => cmd_check(cli, suite, *cases),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = run(&cli).and_then(|text| {
        match &cli.out {
            Some(path) => fs::write(path, text.as_bytes()),
            None => io::stdout().lock().write_all(text.as_bytes()),
        }
        .map_err(|e| Failure::new(exit::USAGE, format!("cannot write output: {e}")))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
