//! Command-line surface: reference tables, region membership, boundary
//! sweeps, codec experiments, and self-verification suites.
//!
//! Exit codes: 0 success, 1 usage or validation, 2 I/O, 3 infeasible codec
//! config, 4 verification failure. All commands are deterministic given the
//! full flag set including --seed; the one exception is the wall_time_s
//! field of simulation output, which is why it sits on its own final line.
//!
//! Rate-valued flags (--delta, --r-i, --r-s, ...) are read in --base units
//! (bits unless --base nats). Parameter flags accept exact fractions ("9/10")
//! as well as decimals.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::codec::{
    calibrate_eps, mask, run_experiment, CodecConfig, CodecError, ExperimentConfig,
    ExperimentStats,
};
use crate::gaussmodel::{
    derive_rng, sample_converted, sample_forward, to_scaled, AuxiliaryParams, ChannelParams,
    UnscaledParams,
};
use crate::mcverify::{covariance3, discrete_plugin_mi, trend_test, TrendDirection};
use crate::rate::{parse_ratio, RateBase};
use crate::ratefuncs::{
    alpha_of_rj, builtin_examples, leakage_slope, make_tables, max_secrecy, min_leakage,
    rj_of_alpha, secrecy_slope, CASE_LABELS, EXAMPLE_FRACTIONS,
};
use crate::region::{
    boundary_trace, is_achievable, leakage_bound, storage_bound, sum_rate_bound, RateTuple,
    RegionForm, RegionQuery, SecretModel, TracePlane,
};
use rand::Rng;

/// Parses argv and runs; returns the process exit code.
pub fn run() -> i32 {
    if let Err(e) = apply_thread_cap() {
        eprintln!("error: {e}");
        return 1;
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

/// Caps worker concurrency from BIS_LAB_THREADS; absent means the rayon
/// default. Must run before any parallel work builds the global pool.
fn apply_thread_cap() -> Result<(), String> {
    let Ok(raw) = std::env::var("BIS_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| format!("BIS_LAB_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("thread pool: {e}"))
}

#[derive(Debug)]
enum CliError {
    /// Bad flag values or failed pre-write validation.
    Invalid(String),
    Io(String),
    Infeasible(String),
    VerifyFailed(Vec<&'static str>),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::VerifyFailed(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Io(m) | CliError::Infeasible(m) => f.write_str(m),
            CliError::VerifyFailed(suites) => write!(f, "failed suites: {}", suites.join(", ")),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(
    name = "bislab",
    version,
    about = "Capacity-region calculators and desk-scale experiments for Gaussian \
             biometric identification systems with noisy enrollment"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the built-in reference tables as table1.csv and table2.csv:
    /// large-storage asymptotes and zero-storage slopes of the secrecy and
    /// privacy-leakage rates, in bits at 2 decimals.
    Tables {
        /// Directory receiving the two CSV files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Trace a boundary projection of the capacity region as a CSV polyline
    /// with columns alpha,r_j,value.
    Sweep {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Identification rate, in --base units.
        #[arg(long, default_value = "0")]
        r_i: String,
        /// Projection plane: storage-vs-secrecy or storage-vs-leakage.
        #[arg(long, value_enum, default_value_t = PlaneArg::RjRs)]
        plane: PlaneArg,
        /// Number of trace points.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = ModelArg::Generated)]
        model: ModelArg,
        #[arg(long, value_enum, default_value_t = BaseArg::Bits)]
        base: BaseArg,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether a rate tuple (R_I, R_S, R_J, R_L) lies in the capacity
    /// region; prints the verdict, the witness alpha, and the three bound
    /// values at the witness.
    Region {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        unscaled: UnscaledArgs,
        #[arg(long, value_enum, default_value_t = ModelArg::Generated)]
        model: ModelArg,
        /// Identification rate, in --base units.
        #[arg(long)]
        r_i: String,
        /// Secrecy rate, in --base units.
        #[arg(long)]
        r_s: String,
        /// Storage rate, in --base units.
        #[arg(long)]
        r_j: String,
        /// Privacy-leakage rate, in --base units.
        #[arg(long)]
        r_l: String,
        #[arg(long, value_enum, default_value_t = BaseArg::Bits)]
        base: BaseArg,
        /// Membership tolerance in nats; verdicts within it of the boundary
        /// are flagged.
        #[arg(long, default_value = "1e-9")]
        tolerance: String,
    },
    /// Run seeded enroll-probe-identify experiments and write a stats JSON
    /// (plus optional per-trial CSV); --n accepts a comma list for a sweep.
    Simulate {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Auxiliary parameter alpha in (0, 1].
        #[arg(long, default_value = "1/2")]
        alpha: String,
        /// Block length, or a comma-separated sweep like 8,12,16,20.
        #[arg(long, default_value = "16")]
        n: String,
        /// Typicality rate slack, in --base units.
        #[arg(long, default_value = "0.05")]
        delta: String,
        /// Identification rate, in --base units.
        #[arg(long, default_value = "0.1")]
        r_i: String,
        /// Enrolled users per trial.
        #[arg(long, default_value_t = 4)]
        users: usize,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Typicality slack; calibrated automatically when absent.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long, value_enum, default_value_t = ModelArg::Generated)]
        mode: ModelArg,
        #[arg(long, value_enum, default_value_t = BaseArg::Bits)]
        base: BaseArg,
        /// Stats file (single n; stdout when absent) or directory for
        /// stats_n*.json plus trend.json (n sweep; default ".").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-trial records: trials.csv at this path (single n)
        /// or trials_n*.csv next to the stats files (sweep, path ignored
        /// except as an on switch).
        #[arg(long)]
        trials_out: Option<PathBuf>,
        /// Share one codebook across trials instead of drawing a fresh one
        /// per trial (faster; key-vs-record MI then mixes across trials).
        #[arg(long)]
        shared_codebook: bool,
    },
    /// Run the cross-module identity and statistical suites; exit 0 iff all
    /// pass.
    Verify {
        /// Reduced sample counts, same suite set.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        /// Negative control: flip a sign inside the slope suite so it must
        /// fail.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

/// Scaled channel parameters; accepted by every command.
#[derive(Args)]
struct ChannelArgs {
    /// Squared enrollment correlation in (0, 1], fraction or decimal.
    #[arg(long, default_value = "9/10")]
    rho1_sq: String,
    /// Squared identification correlation in (0, 1), fraction or decimal.
    #[arg(long, default_value = "7/8")]
    rho2_sq: String,
}

/// Raw-variance form; giving any of these switches the region command to the
/// unscaled bounds (all three are then required, and the rho flags ignored).
#[derive(Args)]
struct UnscaledArgs {
    /// Bio-data variance sigma_X^2 > 0.
    #[arg(long, requires_all = ["sigma_1_sq", "sigma_2_sq"])]
    sigma_x_sq: Option<String>,
    /// Enrollment noise variance sigma_1^2 >= 0.
    #[arg(long, requires_all = ["sigma_x_sq", "sigma_2_sq"])]
    sigma_1_sq: Option<String>,
    /// Identification noise variance sigma_2^2 > 0.
    #[arg(long, requires_all = ["sigma_x_sq", "sigma_1_sq"])]
    sigma_2_sq: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Generated,
    Chosen,
}

impl From<ModelArg> for SecretModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Generated => SecretModel::GeneratedSecret,
            ModelArg::Chosen => SecretModel::ChosenSecret,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PlaneArg {
    /// Storage rate against achievable secrecy rate.
    RjRs,
    /// Storage rate against minimum privacy leakage.
    RjRl,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum BaseArg {
    Bits,
    Nats,
}

impl From<BaseArg> for RateBase {
    fn from(b: BaseArg) -> Self {
        match b {
            BaseArg::Bits => RateBase::Bits,
            BaseArg::Nats => RateBase::Nats,
        }
    }
}

impl BaseArg {
    fn label(self) -> &'static str {
        RateBase::from(self).label()
    }
}

fn parse_flag(name: &str, value: &str) -> Result<f64, CliError> {
    parse_ratio(value).map_err(|e| CliError::Invalid(format!("--{name} {value}: {e}")))
}

fn channel(args: &ChannelArgs) -> Result<ChannelParams, CliError> {
    let r1 = parse_flag("rho1-sq", &args.rho1_sq)?;
    let r2 = parse_flag("rho2-sq", &args.rho2_sq)?;
    ChannelParams::new(r1, r2).map_err(|e| CliError::Invalid(e.to_string()))
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Tables { out_dir } => cmd_tables(&out_dir),
        Cmd::Sweep {
            channel,
            r_i,
            plane,
            grid,
            model,
            base,
            out,
        } => cmd_sweep(&channel, &r_i, plane, grid, model, base, out.as_deref()),
        Cmd::Region {
            channel,
            unscaled,
            model,
            r_i,
            r_s,
            r_j,
            r_l,
            base,
            tolerance,
        } => cmd_region(
            &channel, &unscaled, model, &r_i, &r_s, &r_j, &r_l, base, &tolerance,
        ),
        Cmd::Simulate {
            channel,
            alpha,
            n,
            delta,
            r_i,
            users,
            trials,
            seed,
            eps,
            mode,
            base,
            out,
            trials_out,
            shared_codebook,
        } => cmd_simulate(SimulateFlags {
            channel,
            alpha,
            n,
            delta,
            r_i,
            users,
            trials,
            seed,
            eps,
            mode,
            base,
            out,
            trials_out,
            shared_codebook,
        }),
        Cmd::Verify {
            quick,
            seed,
            inject_fault,
        } => cmd_verify(quick, seed, inject_fault),
    }
}

// ---------------------------------------------------------------- tables --

fn cmd_tables(out_dir: &Path) -> Result<(), CliError> {
    let (limits, slopes) = make_tables(&builtin_examples());
    for (file, table) in [("table1.csv", &limits), ("table2.csv", &slopes)] {
        let mut csv = String::from("example,case,rho1_sq,rho2_sq,secrecy,leakage\n");
        for (i, (label, cases)) in EXAMPLE_FRACTIONS.iter().enumerate() {
            for (k, (r1, r2)) in cases.iter().enumerate() {
                csv.push_str(&format!(
                    "{label},{case},{r1},{r2},{s:.2},{l:.2}\n",
                    case = CASE_LABELS[k],
                    s = table.secrecy[i][k],
                    l = table.leakage[i][k],
                ));
            }
        }
        let path = out_dir.join(file);
        fs::write(&path, csv).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

// ----------------------------------------------------------------- sweep --

fn cmd_sweep(
    channel_args: &ChannelArgs,
    r_i: &str,
    plane: PlaneArg,
    grid: usize,
    model: ModelArg,
    base: BaseArg,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let p = channel(channel_args)?;
    let b = RateBase::from(base);
    let r_i = b.to_nats(parse_flag("r-i", r_i)?);
    if !(r_i >= 0.0 && r_i.is_finite()) {
        return Err(CliError::Invalid(format!("--r-i must be >= 0, got {r_i}")));
    }
    if grid < 2 {
        return Err(CliError::Invalid("--grid must be >= 2".into()));
    }
    let q = RegionQuery::new(model.into(), RegionForm::Scaled(p), 1e-9)
        .expect("fixed tolerance is valid");
    let tp = match plane {
        PlaneArg::RjRs => TracePlane::RjRs,
        PlaneArg::RjRl => TracePlane::RjRl,
    };
    let trace = boundary_trace(&q, r_i, tp, grid);
    if trace.is_empty() {
        eprintln!("note: r_i is at or beyond the identification capacity; empty polyline");
    }
    // Both rate coordinates must be nondecreasing along the trace; a breach
    // means the bounds are broken and the file must not be written.
    for w in trace.windows(2) {
        if w[1].1 < w[0].1 || w[1].2 < w[0].2 - 1e-15 {
            return Err(CliError::Invalid(format!(
                "internal: non-monotone trace near alpha = {}",
                w[1].0
            )));
        }
    }
    let mut csv = String::from("alpha,r_j,value\n");
    for (alpha, r_j, value) in &trace {
        csv.push_str(&format!(
            "{alpha},{},{}\n",
            b.from_nats(*r_j),
            b.from_nats(*value)
        ));
    }
    write_or_print(out, &csv)
}

fn write_or_print(out: Option<&Path>, payload: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, payload).map_err(|e| io_err(path, e)),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- region --

#[allow(clippy::too_many_arguments)]
fn cmd_region(
    channel_args: &ChannelArgs,
    unscaled: &UnscaledArgs,
    model: ModelArg,
    r_i: &str,
    r_s: &str,
    r_j: &str,
    r_l: &str,
    base: BaseArg,
    tolerance: &str,
) -> Result<(), CliError> {
    let form = match (&unscaled.sigma_x_sq, &unscaled.sigma_1_sq, &unscaled.sigma_2_sq) {
        (Some(sx), Some(s1), Some(s2)) => {
            let u = UnscaledParams::new(
                parse_flag("sigma-x-sq", sx)?,
                parse_flag("sigma-1-sq", s1)?,
                parse_flag("sigma-2-sq", s2)?,
            )
            .map_err(|e| CliError::Invalid(e.to_string()))?;
            RegionForm::Unscaled(u)
        }
        _ => RegionForm::Scaled(channel(channel_args)?),
    };
    let b = RateBase::from(base);
    let tol = parse_flag("tolerance", tolerance)?;
    let q = RegionQuery::new(model.into(), form, tol)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let t = RateTuple::new(
        b.to_nats(parse_flag("r-i", r_i)?),
        b.to_nats(parse_flag("r-s", r_s)?),
        b.to_nats(parse_flag("r-j", r_j)?),
        b.to_nats(parse_flag("r-l", r_l)?),
    )
    .map_err(|e| CliError::Invalid(e.to_string()))?;
    // An undecidable-at-tolerance verdict is a validation failure: the caller
    // asked a question the tolerance cannot answer.
    let verdict = is_achievable(&t, &q).map_err(|e| CliError::Invalid(e.to_string()))?;
    println!("achievable: {}", verdict.achievable);
    println!("base: {}", base.label());
    if let Some(alpha) = verdict.witness {
        let p = q.scaled_params();
        let a = AuxiliaryParams::new(alpha).expect("witness is a valid alpha");
        println!("witness_alpha: {alpha}");
        println!("boundary: {}", verdict.boundary);
        println!(
            "sum_rate_bound: {}",
            b.from_nats(sum_rate_bound(&p, a))
        );
        println!(
            "storage_bound: {}",
            b.from_nats(storage_bound(q.model(), &p, a, t.r_i()))
        );
        println!(
            "leakage_bound: {}",
            b.from_nats(leakage_bound(&p, a, t.r_i()))
        );
    }
    Ok(())
}

// -------------------------------------------------------------- simulate --

struct SimulateFlags {
    channel: ChannelArgs,
    alpha: String,
    n: String,
    delta: String,
    r_i: String,
    users: usize,
    trials: usize,
    seed: u64,
    eps: Option<String>,
    mode: ModelArg,
    base: BaseArg,
    out: Option<PathBuf>,
    trials_out: Option<PathBuf>,
    shared_codebook: bool,
}

/// Stats document; wall_time_s stays last so tooling can strip the one
/// nondeterministic line.
#[derive(Serialize)]
struct StatsDoc {
    command: String,
    params: ParamsDoc,
    base: &'static str,
    seed: u64,
    results: ResultsDoc,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct ParamsDoc {
    rho1_sq: f64,
    rho2_sq: f64,
    alpha: f64,
    n: usize,
    /// In `base` units, as all rate fields are.
    delta: f64,
    r_i: f64,
    users: usize,
    trials: usize,
    eps: f64,
    mode: SecretModel,
    fresh_codebook: bool,
}

#[derive(Serialize)]
struct ResultsDoc {
    m_i: usize,
    m_s: usize,
    m_j: usize,
    elements: usize,
    error_probability: f64,
    e_frequencies: [f64; 4],
    /// Plug-in entropy of the probed keys, in `base` units.
    key_entropy: f64,
    key_helper_mi: Option<MiDoc>,
    enroll_failures_by_user: Vec<usize>,
}

#[derive(Serialize)]
struct MiDoc {
    value: f64,
    std_error: f64,
    count: usize,
}

fn parse_n_list(n: &str) -> Result<Vec<usize>, CliError> {
    let ns: Result<Vec<usize>, _> = n.split(',').map(|s| s.trim().parse::<usize>()).collect();
    let ns = ns.map_err(|e| CliError::Invalid(format!("--n {n}: {e}")))?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::Invalid(format!("--n {n}: need positive block lengths")));
    }
    Ok(ns)
}

fn codec_error(e: CodecError) -> CliError {
    match e {
        CodecError::ConfigInfeasible { .. } => {
            CliError::Infeasible(format!("config infeasible: {e}"))
        }
        other => CliError::Invalid(other.to_string()),
    }
}

fn cmd_simulate(f: SimulateFlags) -> Result<(), CliError> {
    let start = Instant::now();
    let p = channel(&f.channel)?;
    let b = RateBase::from(f.base);
    let alpha = AuxiliaryParams::new(parse_flag("alpha", &f.alpha)?)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let delta = parse_flag("delta", &f.delta)?;
    let r_i = parse_flag("r-i", &f.r_i)?;
    let eps_flag = f.eps.as_deref().map(|s| parse_flag("eps", s)).transpose()?;
    if f.users == 0 || f.trials == 0 {
        return Err(CliError::Invalid("--users and --trials must be >= 1".into()));
    }
    let ns = parse_n_list(&f.n)?;
    let sweep = ns.len() > 1;

    let mut runs = Vec::with_capacity(ns.len());
    for &n in &ns {
        let c = CodecConfig::new(n, alpha, b.to_nats(delta), b.to_nats(r_i), b)
            .map_err(codec_error)?;
        let sizes = c.sizes(&p).map_err(codec_error)?;
        let eps = match eps_flag {
            Some(e) => e,
            None => calibrate_eps(&p, &c, 200, f.seed).map_err(codec_error)?,
        };
        let e = ExperimentConfig {
            mode: f.mode.into(),
            users: f.users,
            trials: f.trials,
            seed: f.seed,
            eps,
            fresh_codebook: !f.shared_codebook,
            record_trials: f.trials_out.is_some(),
            user_labels: None,
        };
        let stats = run_experiment(&p, &c, &e).map_err(codec_error)?;
        let doc = StatsDoc {
            command: "simulate".into(),
            params: ParamsDoc {
                rho1_sq: p.rho1_sq(),
                rho2_sq: p.rho2_sq(),
                alpha: alpha.alpha(),
                n,
                delta,
                r_i,
                users: f.users,
                trials: f.trials,
                eps,
                mode: f.mode.into(),
                fresh_codebook: !f.shared_codebook,
            },
            base: f.base.label(),
            seed: f.seed,
            results: ResultsDoc {
                m_i: sizes.m_i,
                m_s: sizes.m_s,
                m_j: sizes.m_j,
                elements: sizes.elements,
                error_probability: stats.error_probability,
                e_frequencies: stats.e_frequencies,
                key_entropy: b.from_nats(stats.key_entropy),
                key_helper_mi: stats.key_helper_mi.map(|mi| MiDoc {
                    value: b.from_nats(mi.value),
                    std_error: b.from_nats(mi.std_error),
                    count: mi.count,
                }),
                enroll_failures_by_user: stats.enroll_failures_by_user.clone(),
            },
            wall_time_s: 0.0,
        };
        runs.push((n, doc, stats));
    }

    if sweep {
        let dir = f.out.clone().unwrap_or_else(|| PathBuf::from("."));
        let errors: Vec<f64> = runs.iter().map(|(_, d, _)| d.results.error_probability).collect();
        for (n, mut doc, stats) in runs {
            doc.wall_time_s = start.elapsed().as_secs_f64();
            let path = dir.join(format!("stats_n{n}.json"));
            write_json(&path, &doc)?;
            if f.trials_out.is_some() {
                let path = dir.join(format!("trials_n{n}.csv"));
                write_trials(&path, &stats)?;
            }
        }
        let trend = TrendDoc {
            command: "simulate".into(),
            params: TrendParamsDoc {
                n: ns,
                trials: f.trials,
                users: f.users,
            },
            base: f.base.label(),
            seed: f.seed,
            results: TrendResultsDoc {
                error_probabilities: errors.clone(),
                trend_p_value: trend_test(&errors, TrendDirection::Decreasing),
            },
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        write_json(&dir.join("trend.json"), &trend)
    } else {
        let (_, mut doc, stats) = runs.pop().expect("one run");
        doc.wall_time_s = start.elapsed().as_secs_f64();
        let payload = to_json(&doc)?;
        write_or_print(f.out.as_deref(), &payload)?;
        if let Some(path) = &f.trials_out {
            write_trials(path, &stats)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct TrendDoc {
    command: String,
    params: TrendParamsDoc,
    base: &'static str,
    seed: u64,
    results: TrendResultsDoc,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct TrendParamsDoc {
    n: Vec<usize>,
    trials: usize,
    users: usize,
}

#[derive(Serialize)]
struct TrendResultsDoc {
    error_probabilities: Vec<f64>,
    trend_p_value: f64,
}

fn to_json<T: Serialize>(doc: &T) -> Result<String, CliError> {
    let mut payload = serde_json::to_string_pretty(doc)
        .map_err(|e| CliError::Io(format!("serialize: {e}")))?;
    payload.push('\n');
    Ok(payload)
}

fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<(), CliError> {
    fs::write(path, to_json(doc)?).map_err(|e| io_err(path, e))
}

fn write_trials(path: &Path, stats: &ExperimentStats) -> Result<(), CliError> {
    let records = stats
        .records
        .as_ref()
        .expect("record_trials was set when trials_out is given");
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut csv = String::from(
        "trial,user,enrolled_key,enrolled_j,helper_j,masked_key,decoded_user,decoded_key,e1,e2,e3,e4\n",
    );
    for (t, r) in records.iter().enumerate() {
        let pair = |v: Option<(usize, usize)>| match v {
            Some((a, b)) => (a.to_string(), b.to_string()),
            None => (String::new(), String::new()),
        };
        let (ek, ej) = pair(r.enrolled);
        let (du, dk) = pair(r.decoded);
        let masked = r
            .helper
            .masked_key
            .map(|m| m.to_string())
            .unwrap_or_default();
        csv.push_str(&format!(
            "{t},{user},{ek},{ej},{hj},{masked},{du},{dk},{e1},{e2},{e3},{e4}\n",
            user = r.user,
            hj = r.helper.generated,
            e1 = r.e1 as u8,
            e2 = r.e2 as u8,
            e3 = r.e3 as u8,
            e4 = r.e4 as u8,
        ));
    }
    file.write_all(csv.as_bytes()).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------- verify --

struct Suite {
    name: &'static str,
    pass: bool,
}

fn cmd_verify(quick: bool, seed: u64, inject_fault: bool) -> Result<(), CliError> {
    let suites = vec![
        Suite {
            name: "scaled-unscaled-equivalence",
            pass: suite_equivalence(quick, seed),
        },
        Suite {
            name: "alpha-round-trip",
            pass: suite_round_trip(quick),
        },
        Suite {
            name: "slope-finite-difference",
            pass: suite_slopes(inject_fault),
        },
        Suite {
            name: "sampler-covariance",
            pass: suite_covariance(quick, seed),
        },
        Suite {
            name: "one-time-pad",
            pass: suite_one_time_pad(quick, seed),
        },
    ];
    let mut failed = Vec::new();
    for s in &suites {
        println!("{}: {}", s.name, if s.pass { "pass" } else { "FAIL" });
        if !s.pass {
            failed.push(s.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(failed))
    }
}

/// Unscaled bounds equal scaled bounds after normalization, random variances.
fn suite_equivalence(quick: bool, seed: u64) -> bool {
    let cases = if quick { 20 } else { 100 };
    let mut rng = derive_rng(seed, &[101]);
    for k in 0..cases {
        let sx: f64 = (4.0 * rng.random::<f64>() - 2.0).exp();
        // Every fourth case pins a noiseless enrollment channel.
        let s1: f64 = if k % 4 == 0 {
            0.0
        } else {
            (4.0 * rng.random::<f64>() - 2.0).exp()
        };
        let s2: f64 = (4.0 * rng.random::<f64>() - 2.0).exp();
        let u = UnscaledParams::new(sx, s1, s2).expect("positive variances");
        let sp = to_scaled(&u).expect("normalizable");
        for alpha in [1e-9, 1e-3, 0.25, 0.8, 1.0] {
            let a = AuxiliaryParams::new(alpha).expect("valid alpha");
            let r_i = 0.3 * rng.random::<f64>();
            for model in [SecretModel::GeneratedSecret, SecretModel::ChosenSecret] {
                let (sum, stor, leak) = crate::region::unscaled_region_bounds(&u, a, r_i, model);
                if (sum - sum_rate_bound(&sp, a)).abs() > 1e-10
                    || (stor - storage_bound(model, &sp, a, r_i)).abs() > 1e-10
                    || (leak - leakage_bound(&sp, a, r_i)).abs() > 1e-10
                {
                    return false;
                }
            }
        }
    }
    true
}

/// alpha -> r_j -> alpha round-trips on a log grid for the built-in examples.
fn suite_round_trip(quick: bool) -> bool {
    let grid = if quick { 100 } else { 1000 };
    for ex in builtin_examples() {
        for p in &ex.cases {
            for k in 0..grid {
                let alpha = (10f64).powf(-9.0 * k as f64 / (grid - 1) as f64);
                let a = AuxiliaryParams::new(alpha).expect("valid alpha");
                let back = alpha_of_rj(p, rj_of_alpha(p, a));
                if (back - alpha).abs() > 1e-10 {
                    return false;
                }
            }
        }
    }
    true
}

/// Zero-storage slopes match finite differences of the rate functions.
fn suite_slopes(inject_fault: bool) -> bool {
    let h = 1e-6;
    // The negative control flips the sign of the expected secrecy slope.
    let fault = if inject_fault { -1.0 } else { 1.0 };
    for ex in builtin_examples() {
        for p in &ex.cases {
            let fd_s = max_secrecy(p, h) / h;
            let fd_l = min_leakage(p, h) / h;
            if (fd_s - fault * secrecy_slope(p)).abs() > 1e-3
                || (fd_l - leakage_slope(p)).abs() > 1e-3
            {
                return false;
            }
        }
    }
    true
}

/// Forward and converted samplers both match the model covariance, and the
/// composite-noise variance of Z - rho1 rho2 Y matches 1 - rho1^2 rho2^2.
fn suite_covariance(quick: bool, seed: u64) -> bool {
    let count = if quick { 10_000 } else { 100_000 };
    let p = ChannelParams::new(0.75, 2.0 / 3.0).expect("valid");
    let tol = 4.0 / (count as f64).sqrt();
    let c = p.rho1_sq() * p.rho2_sq();
    let model = [
        [1.0, p.rho1(), p.rho2()],
        [p.rho1(), 1.0, p.rho1() * p.rho2()],
        [p.rho2(), p.rho1() * p.rho2(), 1.0],
    ];
    for (which, blocks) in [
        sample_forward(&p, count, 1, seed),
        sample_converted(&p, count, 1, seed),
    ]
    .iter()
    .enumerate()
    {
        let rows: Vec<[f64; 3]> = blocks[0].iter().map(|s| [s.x, s.y, s.z]).collect();
        let got = covariance3(&rows);
        for i in 0..3 {
            for j in 0..3 {
                if (got[i][j] - model[i][j]).abs() > tol {
                    return false;
                }
            }
        }
        // Composite-channel residual: Z minus its Y-explained part.
        let rr = p.rho1() * p.rho2();
        let resid_var = blocks[0]
            .iter()
            .map(|s| (s.z - rr * s.y).powi(2))
            .sum::<f64>()
            / count as f64;
        if (resid_var - (1.0 - c)).abs() > tol {
            return false;
        }
        let _ = which;
    }
    true
}

/// Masked output is uniform (chi-squared at 1%) and carries < 0.05 bit about
/// the chosen key.
fn suite_one_time_pad(quick: bool, seed: u64) -> bool {
    let draws = if quick { 2000 } else { 10_000 };
    let m_s = 8;
    let mut rng = derive_rng(seed, &[102]);
    let mut counts = vec![0usize; m_s];
    let mut pairs = Vec::with_capacity(draws);
    for _ in 0..draws {
        let s_c = rng.random_range(1..=m_s);
        let s_g = rng.random_range(1..=m_s);
        let masked = mask(s_c, s_g, m_s);
        counts[masked - 1] += 1;
        pairs.push((s_c, masked));
    }
    let expect = draws as f64 / m_s as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expect).powi(2) / expect)
        .sum();
    // 1% critical value of chi-squared with 7 degrees of freedom.
    if chi2 >= 18.475 {
        return false;
    }
    match discrete_plugin_mi(&pairs) {
        Ok(mi) => crate::rate::bits(mi.value) < 0.05,
        Err(_) => false,
    }
}
