//! The `secrelay` command line.
//!
//! Subcommands: `bounds`, `fig3`, `sweep`, `oracle-check`, `gradcheck`.
//! Configuration comes from an optional JSON file (`--config`) with flags
//! taking precedence; unknown keys are ignored, so a `.meta.json` sidecar
//! written by `sweep` can be fed back in. Exit status is 0 on success, 2 for
//! configuration errors and 3 for size or I/O errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channel::{
    uniform_allocation, Allocation, DeterministicSubchannel, Mode, ModeAssignment,
    ParallelChannel, PowerBudget,
};
use crate::error::Error;
use crate::fading::{self, format_sig, FadingScenario, Scheme};
use crate::optim::{self, BoundKind, SolverOptions};
use crate::rates::{self, BoundResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "SECRELAY_THREADS";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Resource(_) => EXIT_RESOURCE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Resource(m) => write!(f, "resource error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::OracleTooLarge { .. } => CliError::Resource(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

#[derive(Parser, Debug)]
#[command(name = "secrelay", version, about = "Secrecy rates of parallel relay-eavesdropper channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimized lower, upper and relay-deaf bounds of a parallel channel.
    Bounds(ChannelArgs),
    /// The deterministic two-subchannel example.
    Fig3,
    /// Ergodic rates versus relay position.
    Sweep(SweepArgs),
    /// Optimizer against the exhaustive grid oracle.
    OracleCheck(ChannelArgs),
    /// Analytic against finite-difference gradients.
    Gradcheck(ChannelArgs),
}

#[derive(Args, Debug)]
struct ChannelArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_states: Option<usize>,
    #[arg(long)]
    d_min: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
    #[arg(long)]
    d_step: Option<f64>,
    /// Comma-separated subset of DF_all,NF_all,hybrid_best,no_relay,upper.
    #[arg(long)]
    schemes: Option<String>,
}

// ---------------------------------------------------------------------------
// configs

/// Input of `bounds`, `oracle-check` and `gradcheck`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    #[serde(flatten)]
    pub channel: ParallelChannel,
    pub budget: PowerBudget,
    /// Mode assignment for the lower bound; when absent all-DF and all-NF
    /// are both tried and the better one is reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<ModeAssignment>,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Point for `gradcheck`; defaults to an interior point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Allocation>,
}

/// Input of `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub scenario: FadingScenario,
    pub d_min: f64,
    pub d_max: f64,
    pub d_step: f64,
    pub schemes: Vec<Scheme>,
    pub solver: SolverOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenario: FadingScenario {
                n_states: 16,
                ..FadingScenario::reference(0.1, 42)
            },
            d_min: 0.1,
            d_max: 1.9,
            d_step: 0.1,
            schemes: Scheme::ALL.to_vec(),
            solver: SolverOptions::default(),
        }
    }
}

impl SweepConfig {
    pub fn d_values(&self) -> crate::Result<Vec<f64>> {
        fading::d_grid(self.d_min, self.d_max, self.d_step)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Resource(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// commands

/// `across=.. separate=..` for the built-in deterministic instance.
pub fn cmd_fig3() -> String {
    let subs = [
        DeterministicSubchannel::new(4.0, 3.0, 2.0).expect("valid capacities"),
        DeterministicSubchannel::new(5.0, 7.0, 3.0).expect("valid capacities"),
    ];
    let across = rates::deterministic_across(&subs).expect("non-empty");
    let separate = rates::deterministic_separate(&subs).expect("non-empty");
    format!("across={} separate={}\n", format_sig(across, 9), format_sig(separate, 9))
}

fn best_lower(cfg: &ChannelConfig) -> crate::Result<BoundResult> {
    let l = cfg.channel.len();
    match &cfg.modes {
        Some(m) => optim::maximize_lower(&cfg.channel, &cfg.budget, m, &cfg.solver),
        None => {
            let df = optim::maximize_lower(
                &cfg.channel,
                &cfg.budget,
                &ModeAssignment::all(l, Mode::Df),
                &cfg.solver,
            )?;
            let nf = optim::maximize_lower(
                &cfg.channel,
                &cfg.budget,
                &ModeAssignment::all(l, Mode::Nf),
                &cfg.solver,
            )?;
            Ok(if nf.value > df.value { nf } else { df })
        }
    }
}

/// The `bounds` report, including the resolved config.
pub fn cmd_bounds(cfg: &ChannelConfig) -> CliResult<Value> {
    cfg.solver.validate()?;
    if let Some(m) = &cfg.modes {
        m.check_len(cfg.channel.len())?;
    }
    let lower = best_lower(cfg)?;
    let upper = optim::maximize_upper(&cfg.channel, &cfg.budget, &cfg.solver)?;
    let deaf_upper = optim::maximize_deaf(&cfg.channel, &cfg.budget, &cfg.solver, false)?;
    let deaf_lower = optim::maximize_deaf(&cfg.channel, &cfg.budget, &cfg.solver, true)?;
    let capacity = optim::detect_deaf_capacity(&cfg.channel, &cfg.budget, &cfg.solver)?;
    Ok(json!({
        "lower": {
            "value": lower.value,
            "allocation": lower.allocation,
            "modes": lower.modes,
        },
        "upper": {
            "value": upper.value,
            "allocation": upper.allocation,
        },
        "deaf": {
            "upper": deaf_upper.value,
            "lower": deaf_lower.value,
            "capacity": capacity.capacity,
        },
        "config": cfg,
        "meta": { "version": version_string() },
    }))
}

/// Optimizer and oracle values side by side for every objective.
pub fn cmd_oracle_check(cfg: &ChannelConfig) -> CliResult<Value> {
    cfg.solver.validate()?;
    let l = cfg.channel.len();
    let modes = cfg
        .modes
        .clone()
        .unwrap_or_else(|| ModeAssignment::all(l, Mode::Df));
    modes.check_len(l)?;
    let res = cfg.solver.grid_resolution;
    let mut out = serde_json::Map::new();
    let mut worst = 0.0f64;
    for (name, kind) in [
        ("lower", BoundKind::Lower(modes)),
        ("upper", BoundKind::Upper),
        ("deaf", BoundKind::Deaf { require_condition: false }),
        ("deaf_constrained", BoundKind::Deaf { require_condition: true }),
    ] {
        let oracle = optim::grid_oracle(&cfg.channel, &cfg.budget, &kind, res)?;
        let opt = match &kind {
            BoundKind::Lower(m) => optim::maximize_lower(&cfg.channel, &cfg.budget, m, &cfg.solver)?,
            BoundKind::Upper => optim::maximize_upper(&cfg.channel, &cfg.budget, &cfg.solver)?,
            BoundKind::Deaf { require_condition } => {
                optim::maximize_deaf(&cfg.channel, &cfg.budget, &cfg.solver, *require_condition)?
            }
        };
        let diff = opt.value - oracle.value;
        worst = worst.max(diff.abs());
        out.insert(
            name.into(),
            json!({ "optimizer": opt.value, "oracle": oracle.value, "difference": diff }),
        );
    }
    out.insert("grid_resolution".into(), json!(res));
    out.insert("max_abs_difference".into(), json!(worst));
    out.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    out.insert("meta".into(), json!({ "version": version_string() }));
    Ok(Value::Object(out))
}

/// Interior point: half of each budget spread evenly, `alpha = 0.5`,
/// `psi = 0.25`.
pub fn default_check_point(channel: &ParallelChannel, budget: &PowerBudget) -> Allocation {
    let mut a = uniform_allocation(channel, budget);
    a.p1.iter_mut().for_each(|v| *v *= 0.5);
    a.p2.iter_mut().for_each(|v| *v *= 0.5);
    a.alpha.iter_mut().for_each(|v| *v = 0.5);
    a.psi.iter_mut().for_each(|v| *v = 0.25);
    a
}

/// Relative gradient errors per objective; a point too near a kink is
/// reported as that objective's error instead of failing the command.
pub fn cmd_gradcheck(cfg: &ChannelConfig) -> CliResult<Value> {
    let l = cfg.channel.len();
    let point = cfg
        .point
        .clone()
        .unwrap_or_else(|| default_check_point(&cfg.channel, &cfg.budget));
    point.validate(l, &cfg.budget)?;
    let modes = cfg
        .modes
        .clone()
        .unwrap_or_else(|| ModeAssignment::all(l, Mode::Df));
    modes.check_len(l)?;
    let mut out = serde_json::Map::new();
    for (name, kind) in [
        ("lower", BoundKind::Lower(modes)),
        ("upper", BoundKind::Upper),
        ("deaf", BoundKind::Deaf { require_condition: false }),
    ] {
        let entry = match optim::finite_diff_check(&kind, &cfg.channel, &cfg.budget, &point) {
            Ok(e) => json!({ "relative_error": e }),
            Err(e @ Error::KinkProximity(_)) => json!({ "error": e.to_string() }),
            Err(e) => return Err(e.into()),
        };
        out.insert(name.into(), entry);
    }
    out.insert("point".into(), serde_json::to_value(&point).expect("allocation serializes"));
    out.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    out.insert("meta".into(), json!({ "version": version_string() }));
    Ok(Value::Object(out))
}

/// The sweep CSV for a resolved config.
pub fn cmd_sweep(cfg: &SweepConfig) -> CliResult<String> {
    let d = cfg.d_values()?;
    let rows = fading::sweep_relay_position(&cfg.scenario, &d, &cfg.schemes, &cfg.solver)?;
    let mut buf = Vec::new();
    fading::write_csv(&rows, &mut buf).map_err(|e| CliError::Resource(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Sidecar contents: the resolved config plus version metadata.
pub fn sweep_sidecar(cfg: &SweepConfig) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    v["meta"] = json!({ "version": version_string() });
    v
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn resolve_sweep(args: &SweepArgs) -> CliResult<SweepConfig> {
    let mut cfg = match &args.config {
        Some(p) => read_json::<SweepConfig>(p)?,
        None => SweepConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.scenario.seed = s;
    }
    if let Some(n) = args.n_states {
        cfg.scenario.n_states = n;
    }
    if let Some(v) = args.d_min {
        cfg.d_min = v;
    }
    if let Some(v) = args.d_max {
        cfg.d_max = v;
    }
    if let Some(v) = args.d_step {
        cfg.d_step = v;
    }
    if let Some(list) = &args.schemes {
        cfg.schemes = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse::<Scheme>())
            .collect::<crate::Result<_>>()?;
    }
    cfg.scenario.validate()?;
    cfg.solver.validate()?;
    cfg.d_values()?;
    if cfg.schemes.is_empty() {
        return Err(Error::Empty("schemes").into());
    }
    Ok(cfg)
}

fn resolve_channel(args: &ChannelArgs) -> CliResult<ChannelConfig> {
    let mut cfg: ChannelConfig = read_json(&args.config)?;
    if let Some(s) = args.seed {
        cfg.solver.seed = s;
    }
    cfg.solver.validate()?;
    Ok(cfg)
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} = {v:?}: expected a positive integer")))?;
    // a pool configured earlier in the process stays in force
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Fig3 => {
            print!("{}", cmd_fig3());
            Ok(())
        }
        Command::Bounds(args) => {
            let cfg = resolve_channel(&args)?;
            write_out(args.out.as_deref(), &pretty(&cmd_bounds(&cfg)?))
        }
        Command::OracleCheck(args) => {
            let cfg = resolve_channel(&args)?;
            write_out(args.out.as_deref(), &pretty(&cmd_oracle_check(&cfg)?))
        }
        Command::Gradcheck(args) => {
            let cfg = resolve_channel(&args)?;
            write_out(args.out.as_deref(), &pretty(&cmd_gradcheck(&cfg)?))
        }
        Command::Sweep(args) => {
            let cfg = resolve_sweep(&args)?;
            let csv = cmd_sweep(&cfg)?;
            write_out(args.out.as_deref(), &csv)?;
            if let Some(out) = &args.out {
                write_out(Some(&sidecar_path(out)), &pretty(&sweep_sidecar(&cfg)))?;
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("secrelay: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
