//! `chronomap`: JSON front end to the space-time correlation library.
//!
//! Every subcommand prints one JSON document on stdout. Exit codes: 0 ok,
//! 1 verification failed, 2 invalid input, 3 numerical domain error (details
//! as JSON on stderr).

mod wire;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use chronomap_core::chronomap::{channel_to_state, state_to_channel};
use chronomap_core::correlators::{spatial_corr, temporal_corr, temporal_corr_post, tripartite_temporal};
use chronomap_core::inequalities::{
    chsh_spatial, chsh_temporal, cglmp3, cglmp3_temporal_anomaly, violation_threshold, werner_scan,
    werner_scan_temporal, ChshSettings,
};
use chronomap_core::pointer_oracle::{finite_eps_moments, mc_sample_corr, PointerConfig};
use chronomap_core::studies::{decoherence_scan, gain_bench, haar_unitarity_study};
use chronomap_core::verify::{corollary2, oracle_limit, theorem1, SuiteConfig};
use chronomap_core::{CMatrix, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wire::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "chronomap", version, about = "Weak-measurement correlations in space and time")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map a state file to a channel file or back.
    Map {
        direction: Direction,
        #[arg(long = "in")]
        input: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<String>,
    },
    /// Evaluate one correlation.
    Correlate(CorrelateArgs),
    /// Run a randomized equality suite.
    Verify(VerifyArgs),
    /// Bell and Leggett-Garg quantities.
    Ineq(IneqArgs),
    /// Finite-strength Gaussian pointers.
    Oracle(OracleArgs),
    /// Studies: Haar concentration, decoherence, cost benchmark.
    Study(StudyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    StateToChannel,
    ChannelToState,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrKind {
    Spatial,
    Temporal,
    Tripartite,
}

#[derive(Args)]
struct CorrelateArgs {
    kind: CorrKind,
    /// Bipartite state (spatial).
    #[arg(long)]
    state: Option<String>,
    /// Channel (temporal).
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    obs1: String,
    #[arg(long)]
    obs2: String,
    #[arg(long)]
    obs3: Option<String>,
    #[arg(long)]
    post_a: Option<String>,
    #[arg(long)]
    post_b: Option<String>,
    #[arg(long)]
    post_fi: Option<String>,
    /// Initial state (temporal, tripartite); defaults to `I/d`.
    #[arg(long)]
    rho_in: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Theorem1,
    Corollary2,
    OracleLimit,
}

#[derive(Args)]
struct VerifyArgs {
    suite: Suite,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Comma-separated local dimensions (default "2,3,4"; "2" for oracle-limit).
    #[arg(long)]
    dims: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pass threshold (default 1e-9; 1e-4 for oracle-limit).
    #[arg(long)]
    tol: Option<f64>,
    /// Pointer strength for oracle-limit.
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum IneqKind {
    Chsh,
    Lg,
    WernerScan,
    Cglmp,
}

#[derive(Args)]
struct IneqArgs {
    kind: IneqKind,
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    channel: Option<String>,
    /// Settings tuned for the singlet (the default).
    #[arg(long)]
    optimal: bool,
    /// Settings tuned for |Φ+⟩.
    #[arg(long, conflicts_with = "optimal")]
    phi_plus: bool,
    #[arg(long)]
    rho_in: Option<String>,
    /// Werner scan step.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Exact,
    Mc,
}

#[derive(Args)]
struct OracleArgs {
    kind: OracleKind,
    #[arg(long)]
    channel: String,
    #[arg(long)]
    obs1: String,
    #[arg(long)]
    obs2: String,
    #[arg(long)]
    rho_in: Option<String>,
    #[arg(long)]
    post_fi: Option<String>,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 512)]
    grid_points: usize,
    #[arg(long, default_value_t = 6.0)]
    halfwidth: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    Haar,
    Decoherence,
    Bench,
}

#[derive(Args)]
struct StudyArgs {
    kind: StudyKind,
    /// Dimension N (comma-separated list allowed for haar).
    #[arg(long)]
    dim: Option<String>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Unitary `{"matrix"}` file for decoherence; identity when omitted.
    #[arg(long)]
    unitary: Option<String>,
    #[arg(long)]
    obs1: Option<String>,
    #[arg(long)]
    obs2: Option<String>,
    #[arg(long)]
    rho_in: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    lambda_step: f64,
    /// Correlators per benchmark repetition.
    #[arg(long, default_value_t = 1)]
    settings: usize,
    /// Kraus rank of the benchmark channel.
    #[arg(long, default_value_t = 1)]
    rank: usize,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Input { source: "arguments".into(), pointer: None, message: message.into() }
}

fn required<'a>(v: &'a Option<String>, flag: &str) -> CliResult<&'a str> {
    v.as_deref().ok_or_else(|| usage(format!("--{flag} is required here")))
}

fn require_seed(seed: Option<u64>) -> CliResult<u64> {
    seed.ok_or_else(|| usage("--seed is required for randomized runs"))
}

fn parse_list(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| usage(format!("bad integer list {s:?}"))))
        .collect()
}

fn report<T: serde::Serialize>(x: &T) -> Value {
    wire::tagged(serde_json::to_value(x).expect("reports serialize"))
}

fn run_map(direction: Direction, input: &str, out: Option<&str>) -> CliResult<Value> {
    let doc = match direction {
        Direction::StateToChannel => wire::channel_to_json(&state_to_channel(&wire::load_state(input)?)),
        Direction::ChannelToState => wire::state_to_json(&channel_to_state(&wire::load_channel(input)?)),
    };
    match out {
        Some(path) => {
            let text = serde_json::to_string_pretty(&doc).expect("json");
            fs::write(path, text).map_err(|e| CliError::Input { source: path.into(), pointer: None, message: e.to_string() })?;
            Ok(json!({ "schema": wire::SCHEMA, "written": path }))
        }
        None => Ok(doc),
    }
}

fn run_correlate(a: &CorrelateArgs) -> CliResult<Value> {
    let o1 = wire::load_observable(&a.obs1)?;
    let o2 = wire::load_observable(&a.obs2)?;
    let load_opt = |s: &Option<String>| s.as_deref().map(wire::load_density).transpose();
    let e = match a.kind {
        CorrKind::Spatial => {
            let rho = wire::load_state(required(&a.state, "state")?)?;
            spatial_corr(&rho, &o1, &o2, load_opt(&a.post_a)?.as_ref(), load_opt(&a.post_b)?.as_ref())?
        }
        CorrKind::Temporal => {
            let ch = wire::load_channel(required(&a.channel, "channel")?)?;
            let rho_in = load_opt(&a.rho_in)?
                .unwrap_or_else(|| chronomap_core::DensityMatrix::maximally_mixed(ch.d_in()));
            match load_opt(&a.post_fi)? {
                Some(fi) => temporal_corr_post(&rho_in, &fi, &ch, &o1, &o2)?,
                None => temporal_corr(&rho_in, &ch, &o1, &o2)?,
            }
        }
        CorrKind::Tripartite => {
            let o3 = wire::load_observable(required(&a.obs3, "obs3")?)?;
            let rho_in = load_opt(&a.rho_in)?
                .unwrap_or_else(|| chronomap_core::DensityMatrix::maximally_mixed(o1.dim()));
            tripartite_temporal(&rho_in, &o1, &o2, &o3)?
        }
    };
    Ok(json!({ "schema": wire::SCHEMA, "E": e }))
}

fn run_verify(a: &VerifyArgs) -> CliResult<(Value, bool)> {
    let default_dims = if matches!(a.suite, Suite::OracleLimit) { "2" } else { "2,3,4" };
    let dims = parse_list(a.dims.as_deref().unwrap_or(default_dims))?;
    let default_tol = if matches!(a.suite, Suite::OracleLimit) { 1e-4 } else { 1e-9 };
    let cfg = SuiteConfig::new(a.trials, &dims, a.seed, a.tol.unwrap_or(default_tol));
    let r = match a.suite {
        Suite::Theorem1 => theorem1(&cfg)?,
        Suite::Corollary2 => corollary2(&cfg)?,
        Suite::OracleLimit => oracle_limit(&cfg, a.eps)?,
    };
    Ok((report(&r), r.passed))
}

fn run_ineq(a: &IneqArgs) -> CliResult<Value> {
    let settings = if a.phi_plus { ChshSettings::optimal_phi_plus() } else { ChshSettings::optimal_singlet() };
    let name = if a.phi_plus { "phi+" } else { "singlet" };
    Ok(match a.kind {
        IneqKind::Chsh => {
            let rho = wire::load_state(required(&a.state, "state")?)?;
            json!({ "schema": wire::SCHEMA, "S": chsh_spatial(&rho, &settings)?, "settings": name })
        }
        IneqKind::Lg => {
            let ch = wire::load_channel(required(&a.channel, "channel")?)?;
            let rho_in = a.rho_in.as_deref().map(wire::load_density).transpose()?;
            json!({ "schema": wire::SCHEMA, "S": chsh_temporal(&ch, &settings, rho_in.as_ref())?, "settings": name })
        }
        IneqKind::WernerScan => {
            if !(a.step > 0.0 && a.step <= 1.0) {
                return Err(usage("--step must lie in (0, 1]"));
            }
            let n = (1.0 / a.step).round() as usize;
            let grid: Vec<f64> = (0..=n).map(|i| (i as f64 * a.step).min(1.0)).collect();
            let spatial = werner_scan(&grid)?;
            let temporal = werner_scan_temporal(&grid)?;
            json!({
                "schema": wire::SCHEMA,
                "threshold": violation_threshold(&spatial),
                "temporal_threshold": violation_threshold(&temporal),
                "scan": spatial.iter().zip(&temporal).map(|((w, s), (_, t))| json!({ "w": w, "S": s, "S_temporal": t })).collect::<Vec<_>>(),
            })
        }
        IneqKind::Cglmp => match &a.state {
            Some(s) => json!({ "schema": wire::SCHEMA, "I3": cglmp3(&wire::load_state(s)?)? }),
            None => report(&cglmp3_temporal_anomaly()?),
        },
    })
}

fn run_oracle(a: &OracleArgs) -> CliResult<Value> {
    let ch = wire::load_channel(&a.channel)?;
    let o1 = wire::load_observable(&a.obs1)?;
    let o2 = wire::load_observable(&a.obs2)?;
    let rho_in = match &a.rho_in {
        Some(s) => wire::load_density(s)?,
        None => chronomap_core::DensityMatrix::maximally_mixed(ch.d_in()),
    };
    let fi = a.post_fi.as_deref().map(wire::load_density).transpose()?;
    Ok(match a.kind {
        OracleKind::Exact => report(&finite_eps_moments(&rho_in, fi.as_ref(), &ch, &o1, &o2, a.eps)?),
        OracleKind::Mc => {
            let cfg = PointerConfig {
                epsilon: a.eps,
                grid_halfwidth_sigmas: a.halfwidth,
                grid_points: a.grid_points,
                seed: require_seed(a.seed)?,
            };
            let (estimate, std_error) = mc_sample_corr(&rho_in, fi.as_ref(), &ch, &o1, &o2, &cfg, a.samples)?;
            json!({
                "schema": wire::SCHEMA,
                "estimate": estimate,
                "std_error": std_error,
                "samples": a.samples,
                "epsilon": a.eps,
                "seed": cfg.seed,
            })
        }
    })
}

fn run_study(a: &StudyArgs) -> CliResult<Value> {
    Ok(match a.kind {
        StudyKind::Haar => {
            let dims = parse_list(a.dim.as_deref().unwrap_or("2,4,8,16"))?;
            let seed = require_seed(a.seed)?;
            let reports = dims
                .iter()
                .map(|&n| haar_unitarity_study(n, a.samples, seed).map(|r| serde_json::to_value(r).expect("json")))
                .collect::<chronomap_core::Result<Vec<_>>>()?;
            json!({ "schema": wire::SCHEMA, "reports": reports })
        }
        StudyKind::Decoherence => {
            let u = match &a.unitary {
                Some(s) => wire::load_matrix(s)?,
                None => CMatrix::identity(2),
            };
            if !u.is_square() {
                return Err(CliError::input(required(&a.unitary, "unitary")?, "/matrix", "unitary must be square"));
            }
            let deviation = (&u.dagger() * &u).max_abs_diff(&CMatrix::identity(u.rows()));
            if deviation > 1e-10 {
                return Err(CliError::Core(Error::NotUnitary { deviation }));
            }
            let obs = |s: &Option<String>| match s {
                Some(s) => wire::load_observable(s),
                None => Ok(chronomap_core::states::paulis::z()),
            };
            let (o1, o2) = (obs(&a.obs1)?, obs(&a.obs2)?);
            let rho_in = a.rho_in.as_deref().map(wire::load_density).transpose()?;
            if !(a.lambda_step > 0.0 && a.lambda_step <= 1.0) {
                return Err(usage("--lambda-step must lie in (0, 1]"));
            }
            let n = (1.0 / a.lambda_step).round() as usize;
            let grid: Vec<f64> = (0..=n).map(|i| (i as f64 * a.lambda_step).min(1.0)).collect();
            let scan = decoherence_scan(&u, &grid, &o1, &o2, rho_in.as_ref())?;
            json!({
                "schema": wire::SCHEMA,
                "scan": scan.iter().map(|(l, e)| json!({ "lambda": l, "E": e })).collect::<Vec<_>>(),
            })
        }
        StudyKind::Bench => {
            let n: usize = a.dim.as_deref().unwrap_or("32").parse().map_err(|_| usage("--dim must be an integer"))?;
            let seed = require_seed(a.seed)?;
            // timings are taken on one thread for both routes
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
            let r = pool.install(|| gain_bench(n, a.settings, a.rank, seed))?;
            let mut v = report(&r);
            v["valid"] = json!(r.is_valid());
            v
        }
    })
}

fn dispatch(cli: &Cli) -> CliResult<(Value, bool)> {
    match &cli.command {
        Command::Map { direction, input, out } => Ok((run_map(*direction, input, out.as_deref())?, true)),
        Command::Correlate(a) => Ok((run_correlate(a)?, true)),
        Command::Verify(a) => run_verify(a),
        Command::Ineq(a) => Ok((run_ineq(a)?, true)),
        Command::Oracle(a) => Ok((run_oracle(a)?, true)),
        Command::Study(a) => Ok((run_study(a)?, true)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", usage(e.to_string()).to_json());
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok((value, passed)) => {
            let mut out = std::io::stdout().lock();
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json"));
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
