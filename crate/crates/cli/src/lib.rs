//! Command-line front end: full-scheme runs, detection sweeps, bound tables
//! and overhead measurements, all writing CSV with a reproducible header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use srpm3::security::{bound_repeated_distinct, bound_repeated_iid, bound_single, bound_single_raw};
use srpm3::sim::{
    run_detection_experiment, run_full_scheme, run_overhead_experiment, DetectionConfig, ErrorModel, FullRunConfig,
    FullRunError, OverheadConfig,
};
use srpm3::FqMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "srpm3", version, about = "Secure rateless distributed matrix multiplication simulator")]
pub struct Cli {
    /// JSON file with the command's keys; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for trial sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Runs the full scheme on two matrix files.
    Run(RunArgs),
    /// Missed-detection rates of the per-cluster check.
    DetectRate(DetectArgs),
    /// Upper bounds on the missed-detection probability.
    Bounds(BoundsArgs),
    /// CPU-time overhead of the checks relative to coding.
    Overhead(OverheadArgs),
    /// Direct product of two matrix files.
    MultiplyDirect(MultiplyArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Run statistics CSV; stdout when absent.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub eta: Option<usize>,
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub z: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<u64>>,
    #[arg(long)]
    pub n_u: Option<usize>,
    #[arg(long)]
    pub z: Option<usize>,
    /// Sets r = s = l.
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub model: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub eta: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<u64>>,
    #[arg(long)]
    pub deg: Option<usize>,
    #[arg(long)]
    pub eta_max: Option<usize>,
}

#[derive(Args, Debug)]
pub struct OverheadArgs {
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub cluster_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub z: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MultiplyArgs {
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
}

/// Resolved `detect-rate` configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectRateConfig {
    pub q: Vec<u64>,
    pub n_u: usize,
    pub z: usize,
    pub dims: usize,
    pub model: Vec<ErrorModel>,
    pub eta: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
}

impl Default for DetectRateConfig {
    fn default() -> Self {
        Self {
            q: vec![7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53],
            n_u: 3,
            z: 1,
            dims: 2,
            model: ErrorModel::ALL[1..].to_vec(),
            eta: vec![1],
            trials: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub q: Vec<u64>,
    pub deg: usize,
    pub eta_max: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            q: vec![23],
            deg: 10,
            eta_max: 12,
        }
    }
}

/// Resolved `run` configuration: the matrix paths plus the scheme keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub a: PathBuf,
    pub b: PathBuf,
    #[serde(flatten)]
    pub scheme: FullRunConfig,
}

fn default_overhead() -> OverheadConfig {
    OverheadConfig {
        q: srpm3::field::NTT_PRIME_62,
        dims: 64,
        cluster_sizes: vec![4, 8, 16, 32, 64, 128, 256],
        z: 1,
        reps: 10,
        seed: 0,
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
    }
}

/// `Ok(code)` for completed or computation-failed commands; `Err` for
/// usage and configuration problems.
fn execute(cli: &Cli) -> anyhow::Result<i32> {
    if cli.threads == 0 {
        bail!("--threads must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .context("building thread pool")?;
    let base = load_config(cli.config.as_deref())?;
    pool.install(|| match &cli.command {
        Command::Run(args) => cmd_run(cli, args, base),
        Command::DetectRate(args) => cmd_detect_rate(cli, args, base),
        Command::Bounds(args) => cmd_bounds(cli, args, base),
        Command::Overhead(args) => cmd_overhead(cli, args, base),
        Command::MultiplyDirect(args) => cmd_multiply(cli, args, base),
    })
}

fn load_config(path: Option<&Path>) -> anyhow::Result<Map<String, Value>> {
    let Some(path) = path else { return Ok(Map::new()) };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    match serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))? {
        Value::Object(map) => Ok(map),
        _ => bail!("config {} must hold a JSON object", path.display()),
    }
}

/// Layers: defaults, then config file, then flags.
fn resolve<C: Serialize + DeserializeOwned>(
    defaults: Option<C>,
    file: Map<String, Value>,
    overrides: Vec<(&str, Option<Value>)>,
) -> anyhow::Result<C> {
    let merged = merge(defaults, file, overrides)?;
    serde_json::from_value(Value::Object(merged)).context("invalid configuration")
}

fn merge<C: Serialize>(
    defaults: Option<C>,
    mut file: Map<String, Value>,
    overrides: Vec<(&str, Option<Value>)>,
) -> anyhow::Result<Map<String, Value>> {
    let mut merged = match defaults {
        Some(d) => match serde_json::to_value(d)? {
            Value::Object(m) => m,
            _ => unreachable!("configs serialize to objects"),
        },
        None => Map::new(),
    };
    merged.append(&mut file);
    for (key, value) in overrides {
        if let Some(v) = value {
            merged.insert(key.to_string(), v);
        }
    }
    Ok(merged)
}

fn opt<T: Serialize>(v: &Option<T>) -> Option<Value> {
    v.as_ref().map(|x| serde_json::to_value(x).expect("plain values serialize"))
}

fn header<C: Serialize>(cfg: &C) -> anyhow::Result<String> {
    Ok(format!("# {}\n", serde_json::to_string(cfg)?))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_matrix(path: &Path) -> anyhow::Result<FqMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading matrix {}", path.display()))?;
    FqMatrix::from_text(&text).with_context(|| format!("parsing matrix {}", path.display()))
}

/// `x` to 12 significant digits.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return "nan".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        format!("{:.*}", (11 - exp).max(0) as usize, x)
    } else {
        format!("{:.11e}", x)
    }
}

fn cmd_run(cli: &Cli, args: &RunArgs, base: Map<String, Value>) -> anyhow::Result<i32> {
    let mut merged = merge::<RunConfig>(
        None,
        base,
        vec![
            ("a", opt(&args.a)),
            ("b", opt(&args.b)),
            ("seed", opt(&cli.seed)),
            ("rounds", opt(&args.rounds)),
            ("eta", opt(&args.eta)),
            ("timeout", opt(&args.timeout)),
            ("clusters", opt(&args.clusters)),
            ("m", opt(&args.m)),
            ("k", opt(&args.k)),
            ("z", opt(&args.z)),
        ],
    )?;
    let mut path = |key: &str| -> anyhow::Result<PathBuf> {
        let v = merged.remove(key).with_context(|| format!("missing matrix path `{key}`"))?;
        serde_json::from_value(v).with_context(|| format!("`{key}` must be a path"))
    };
    let (a_path, b_path) = (path("a")?, path("b")?);
    let scheme: FullRunConfig = serde_json::from_value(Value::Object(merged)).context("invalid configuration")?;
    let cfg = RunConfig {
        a: a_path,
        b: b_path,
        scheme,
    };
    cfg.scheme.validate()?;
    let a = read_matrix(&cfg.a)?;
    let b = read_matrix(&cfg.b)?;
    if a.modulus().value() != cfg.scheme.q || b.modulus().value() != cfg.scheme.q {
        bail!("matrix files and config disagree on q");
    }
    if a.cols() != b.rows() {
        bail!("cannot multiply {}x{} by {}x{}", a.rows(), a.cols(), b.rows(), b.cols());
    }
    let (report, code) = match run_full_scheme(&cfg.scheme, &a, &b) {
        Ok(r) => (r, EXIT_OK),
        Err(FullRunError::BudgetExhausted { report }) => {
            eprintln!(
                "error: round budget exhausted with {}/{} blocks recovered",
                report.recovered_blocks, report.total_blocks
            );
            (*report, EXIT_COMPUTE)
        }
        Err(FullRunError::Scheme(e)) => {
            eprintln!("error: {e}");
            return Ok(EXIT_COMPUTE);
        }
    };
    if let Some(product) = &report.product {
        emit(cli.out.as_deref(), &product.to_text())?;
    }
    let flagged: Vec<String> = report.flagged_workers.iter().map(usize::to_string).collect();
    let mut csv = header(&cfg)?;
    csv.push_str(
        "completed,rounds_used,detections,flagged_workers,missed_detections,corrupted_decodes,quarantined_rounds,empty_rounds,recovered_blocks,total_blocks\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{}",
        report.product.is_some(),
        report.rounds_used,
        report.detections,
        flagged.join(";"),
        report.stats.missed_detections,
        report.stats.corrupted_rounds,
        report.quarantined_rounds,
        report.empty_rounds,
        report.recovered_blocks,
        report.total_blocks
    );
    emit(args.stats.as_deref(), &csv)?;
    Ok(code)
}

fn cmd_detect_rate(cli: &Cli, args: &DetectArgs, base: Map<String, Value>) -> anyhow::Result<i32> {
    let models = args
        .model
        .as_ref()
        .map(|names| names.iter().map(|s| s.parse::<ErrorModel>()).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    let cfg: DetectRateConfig = resolve(
        Some(DetectRateConfig::default()),
        base,
        vec![
            ("q", opt(&args.q)),
            ("n_u", opt(&args.n_u)),
            ("z", opt(&args.z)),
            ("dims", opt(&args.dims)),
            ("model", opt(&models)),
            ("eta", opt(&args.eta)),
            ("trials", opt(&args.trials)),
            ("seed", opt(&cli.seed)),
        ],
    )?;
    let mut csv = header(&cfg)?;
    csv.push_str("q,model,eta,trials,missed,rate,bound_single,bound_distinct\n");
    for &q in &cfg.q {
        for &model in &cfg.model {
            for &eta in &cfg.eta {
                let dc = DetectionConfig {
                    q,
                    n_u: cfg.n_u,
                    z: cfg.z,
                    r: cfg.dims,
                    s: cfg.dims,
                    l: cfg.dims,
                    model,
                    eta,
                    trials: cfg.trials,
                    seed: cfg.seed,
                };
                let stats = run_detection_experiment(&dc)?;
                let deg = dc.deg_h()?;
                let single = bound_single(q, deg).map_or(f64::NAN, |b| b);
                let distinct = bound_repeated_distinct(q, deg, eta).map_or(f64::NAN, |b| b);
                let _ = writeln!(
                    csv,
                    "{q},{model},{eta},{},{},{},{},{}",
                    stats.corrupted_rounds,
                    stats.missed_detections,
                    sig12(stats.miss_rate()),
                    sig12(single),
                    sig12(distinct)
                );
            }
        }
    }
    emit(cli.out.as_deref(), &csv)?;
    Ok(EXIT_OK)
}

fn cmd_bounds(cli: &Cli, args: &BoundsArgs, base: Map<String, Value>) -> anyhow::Result<i32> {
    let cfg: BoundsConfig = resolve(
        Some(BoundsConfig::default()),
        base,
        vec![("q", opt(&args.q)), ("deg", opt(&args.deg)), ("eta_max", opt(&args.eta_max))],
    )?;
    if cfg.eta_max == 0 {
        bail!("eta_max must be at least 1");
    }
    let mut csv = header(&cfg)?;
    csv.push_str("q,deg,eta,bound_single,bound_repeated_iid,bound_repeated_distinct,vacuous\n");
    for &q in &cfg.q {
        srpm3::PrimeModulus::new(q).with_context(|| format!("q = {q}"))?;
        for eta in 1..=cfg.eta_max {
            let raw = bound_single_raw(q, cfg.deg).ok();
            let single = bound_single(q, cfg.deg).map_or(f64::NAN, |b| b);
            let iid = bound_repeated_iid(q, cfg.deg, eta).map_or(f64::NAN, |b| b);
            let distinct = bound_repeated_distinct(q, cfg.deg, eta).map_or(f64::NAN, |b| b);
            let vacuous = raw.is_none_or(|r| r >= 1.0) || distinct.is_nan();
            let _ = writeln!(
                csv,
                "{q},{},{eta},{},{},{},{vacuous}",
                cfg.deg,
                sig12(single),
                sig12(iid),
                sig12(distinct)
            );
        }
    }
    emit(cli.out.as_deref(), &csv)?;
    Ok(EXIT_OK)
}

fn cmd_overhead(cli: &Cli, args: &OverheadArgs, base: Map<String, Value>) -> anyhow::Result<i32> {
    let cfg: OverheadConfig = resolve(
        Some(default_overhead()),
        base,
        vec![
            ("q", opt(&args.q)),
            ("dims", opt(&args.dims)),
            ("cluster_sizes", opt(&args.cluster_sizes)),
            ("z", opt(&args.z)),
            ("reps", opt(&args.reps)),
            ("seed", opt(&cli.seed)),
        ],
    )?;
    let rows = run_overhead_experiment(&cfg)?;
    let mut csv = header(&cfg)?;
    csv.push_str("n_u,dims,per_cluster_ratio,per_worker_ratio,coding_seconds,cluster_check_seconds,worker_check_seconds\n");
    for r in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.n_u,
            r.dims,
            sig12(r.per_cluster_ratio),
            sig12(r.per_worker_ratio),
            sig12(r.coding_time),
            sig12(r.cluster_check_time),
            sig12(r.worker_check_time)
        );
    }
    emit(cli.out.as_deref(), &csv)?;
    Ok(EXIT_OK)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiplyConfig {
    a: PathBuf,
    b: PathBuf,
}

fn cmd_multiply(cli: &Cli, args: &MultiplyArgs, base: Map<String, Value>) -> anyhow::Result<i32> {
    let cfg: MultiplyConfig = resolve(None, base, vec![("a", opt(&args.a)), ("b", opt(&args.b))])?;
    let a = read_matrix(&cfg.a)?;
    let b = read_matrix(&cfg.b)?;
    let c = a.matmul(&b).context("multiplying inputs")?;
    emit(cli.out.as_deref(), &c.to_text())?;
    Ok(EXIT_OK)
}
