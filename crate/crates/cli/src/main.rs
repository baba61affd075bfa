//! sobex: sharp Sobolev constants, extremals and the reverse-Hölder inequality.
//!
//! Exit codes: 0 pass, 2 inequality violated, 3 solver failure, 4 configuration error.

mod pipeline;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use sobex_core::export::{self, to_json};
use sobex_core::field::FlowParams;
use sobex_core::Domain;

use pipeline::{GridSettings, RadialSettings};

const EXIT_VIOLATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "sobex", version, about = "Extremal Sobolev functions and the reverse-Hölder inequality")]
struct Cli {
    /// Log progress to stderr (RUST_LOG overrides)
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Radial extremal on a ball; exits 0 iff the ball attains equality
    Ball(BallArgs),
    /// Grid extremal on a planar domain; exits 0 iff every margin holds
    Domain(DomainArgs),
    /// Batch of domains and exponents written as one CSV table
    Sweep(SweepArgs),
    /// Minimize the one-dimensional quotient Λ* on [0, ρ_M]
    LambdaStar(LambdaStarArgs),
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BallArgs {
    /// JSON file with any of these options; flags take precedence
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(short)]
    n: Option<usize>,
    #[arg(short)]
    p: Option<f64>,
    /// Ball radius
    #[arg(long)]
    rho_m: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    lambda_points: Option<usize>,
    /// Relative tolerance on the equality deficit
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DomainArgs {
    /// Domain JSON, e.g. {"kind": "ellipse", "n": 2, "params": {"a": 2, "b": 1}}
    #[serde(skip)]
    spec: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(short)]
    p: Option<f64>,
    /// Mesh width
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    lambda_points: Option<usize>,
    /// Relative slack allowed on every margin
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// implicit or explicit
    #[arg(long)]
    stepping: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Sweep JSON: {"domains": [...], "p": [...], ...}
    config: PathBuf,
    /// Worker threads
    #[arg(long, env = "SOBEX_JOBS")]
    jobs: Option<usize>,
    /// CSV destination; stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LambdaStarArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(short)]
    n: Option<usize>,
    #[arg(short)]
    p: Option<f64>,
    #[arg(long)]
    rho_m: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Tolerance on both sandwich gaps
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    domains: Vec<Domain>,
    p: Vec<f64>,
    #[serde(default = "default_h")]
    h: f64,
    #[serde(default = "default_grid_levels")]
    grid_levels: usize,
    #[serde(default = "default_radial_levels")]
    radial_levels: usize,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default = "default_lambda_points")]
    lambda_points: usize,
    #[serde(default = "default_slack")]
    slack: f64,
    #[serde(default = "default_ball_tol")]
    ball_tol: f64,
}

fn default_h() -> f64 {
    1.0 / 128.0
}
fn default_grid_levels() -> usize {
    256
}
fn default_radial_levels() -> usize {
    2000
}
fn default_samples() -> usize {
    10_000
}
fn default_lambda_points() -> usize {
    4001
}
fn default_slack() -> f64 {
    1e-3
}
fn default_ball_tol() -> f64 {
    1e-6
}

/// Anything that ends the run with a nonzero code.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    fn config(kind: &str, message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, kind: kind.into(), message: message.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self { code: EXIT_SOLVER, kind: "io".into(), message: format!("{}: {e}", path.display()) }
    }

    fn to_json(&self) -> String {
        let v = serde_json::json!({
            "error": { "kind": self.kind, "message": self.message, "exit_code": self.code }
        });
        to_json(&v)
    }
}

impl From<sobex_core::Error> for Failure {
    fn from(e: sobex_core::Error) -> Self {
        let code = if e.is_config_error() { EXIT_CONFIG } else { EXIT_SOLVER };
        Self { code, kind: e.kind().into(), message: e.to_string() }
    }
}

type Outcome = Result<bool, Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::config("unreadable-input", format!("{}: {e}", path.display())))
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(path) => serde_json::from_str(&read_text(path)?)
            .map_err(|e| Failure::config("invalid-config", format!("{}: {e}", path.display()))),
    }
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::config("missing-option", format!("{name} must be given by flag or config file")))
}

fn write_files(dir: Option<&Path>, files: &[(&str, String)]) -> Result<(), Failure> {
    let Some(dir) = dir else { return Ok(()) };
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
    }
    Ok(())
}

fn run_ball(args: BallArgs) -> Outcome {
    let file: BallArgs = read_config(args.config.as_deref())?;
    let n = required(args.n.or(file.n), "n")?;
    let p = required(args.p.or(file.p), "p")?;
    let rho_m = args.rho_m.or(file.rho_m).unwrap_or(1.0);
    let tol = args.tol.or(file.tol).unwrap_or(default_ball_tol());
    let settings = RadialSettings {
        samples: args.samples.or(file.samples).unwrap_or(default_samples()),
        levels: args.levels.or(file.levels).unwrap_or(default_radial_levels()),
        lambda_points: args.lambda_points.or(file.lambda_points).unwrap_or(default_lambda_points()),
    };
    log::info!("ball n = {n}, p = {p}, rho_m = {rho_m}");
    let run = pipeline::run_ball(n, p, rho_m, &settings)?;
    let summary = pipeline::ball_summary(&run, tol);
    let text = to_json(&summary);
    let out = args.out.or(file.out);
    write_files(
        out.as_deref(),
        &[
            ("summary.json", text.clone()),
            ("profile.json", to_json(&summary.profile)),
            ("profile.csv", export::profile_csv(&run.profile)),
            ("levels.csv", export::levels_csv(&run.levels)),
            ("report.json", to_json(&run.report)),
            ("lambda_star.json", to_json(&run.lambda_star)),
        ],
    )?;
    print!("{text}");
    Ok(summary.pass)
}

fn flow_params(stepping: Option<&str>, max_iters: Option<usize>) -> Result<FlowParams, Failure> {
    let mut fp = match stepping.unwrap_or("implicit") {
        "implicit" => FlowParams::default(),
        "explicit" => FlowParams::explicit(),
        other => return Err(Failure::config("invalid-config", format!("unknown stepping {other:?}"))),
    };
    if let Some(m) = max_iters {
        fp.max_iters = m;
    }
    Ok(fp)
}

fn run_domain(args: DomainArgs) -> Outcome {
    let file: DomainArgs = read_config(args.config.as_deref())?;
    let domain = Domain::from_json(&read_text(&args.spec)?)?;
    let p = required(args.p.or(file.p), "p")?;
    let slack = args.slack.or(file.slack).unwrap_or(default_slack());
    let stepping = args.stepping.or(file.stepping);
    let settings = GridSettings {
        h: args.h.or(file.h).unwrap_or(default_h()),
        levels: args.levels.or(file.levels).unwrap_or(default_grid_levels()),
        lambda_points: args.lambda_points.or(file.lambda_points).unwrap_or(default_lambda_points()),
        flow: flow_params(stepping.as_deref(), args.max_iters.or(file.max_iters))?,
    };
    log::info!("domain {} p = {p}, h = {}", domain.id(), settings.h);
    let run = pipeline::run_grid(&domain, p, &settings)?;
    let summary = pipeline::domain_summary(&run, slack)?;
    let text = to_json(&summary);
    let out = args.out.or(file.out);
    write_files(
        out.as_deref(),
        &[
            ("summary.json", text.clone()),
            ("field.json", to_json(&summary.field)),
            ("field.csv", export::field_csv(&run.field)),
            ("levels.csv", export::levels_csv(&run.levels)),
            ("report.json", to_json(&run.report)),
            ("lambda_star.json", to_json(&run.lambda_star)),
        ],
    )?;
    print!("{text}");
    Ok(summary.pass)
}

fn run_lambda_star(args: LambdaStarArgs) -> Outcome {
    let file: LambdaStarArgs = read_config(args.config.as_deref())?;
    let n = required(args.n.or(file.n), "n")?;
    let p = required(args.p.or(file.p), "p")?;
    let rho_m = args.rho_m.or(file.rho_m).unwrap_or(1.0);
    let points = args.points.or(file.points).unwrap_or(8001);
    let tol = args.tol.or(file.tol).unwrap_or(1e-6);
    let (report, res) = pipeline::lambda_star_report(n, p, rho_m, points, tol)?;
    let text = to_json(&report);
    let out = args.out.or(file.out);
    write_files(out.as_deref(), &[("summary.json", text.clone()), ("lambda_star.json", to_json(&res))])?;
    print!("{text}");
    Ok(report.pass)
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One CSV row and the exit code it contributes.
fn sweep_case(cfg: &SweepConfig, d: &Domain, p: f64) -> (Vec<String>, u8) {
    let result = if d.is_ball() {
        let s = RadialSettings { samples: cfg.samples, levels: cfg.radial_levels, lambda_points: cfg.lambda_points };
        let radius = sobex_core::volume_radius(d.volume(), d.n);
        radius.and_then(|r| pipeline::run_ball(d.n, p, r, &s)).map(|run| {
            let pass = run.report.ball_equality(cfg.ball_tol) && run.report.holds(cfg.slack);
            (run.report, pass)
        })
    } else {
        let s = GridSettings {
            h: cfg.h,
            levels: cfg.grid_levels,
            lambda_points: cfg.lambda_points,
            flow: FlowParams::default(),
        };
        pipeline::run_grid(d, p, &s).map(|run| {
            let pass = run.report.holds(cfg.slack);
            (run.report, pass)
        })
    };
    let width = export::REPORT_COLUMNS.len();
    match result {
        Ok((report, pass)) => {
            let mut row = export::report_row(&report);
            row.push(if pass { "pass" } else { "violation" }.into());
            row.push(String::new());
            (row, if pass { 0 } else { EXIT_VIOLATION })
        }
        Err(e) => {
            log::warn!("{} p = {p}: {e}", d.id());
            let failure = Failure::from(e);
            let mut row = vec![String::new(); width];
            row[0] = d.id();
            row[1] = d.n.to_string();
            row[2] = export::fmt_sig(p, export::CSV_DIGITS);
            row.push(failure.kind);
            row.push(csv_escape(&failure.message));
            (row, failure.code)
        }
    }
}

fn run_sweep(args: SweepArgs) -> Result<u8, Failure> {
    let cfg: SweepConfig = serde_json::from_str(&read_text(&args.config)?)
        .map_err(|e| Failure::config("invalid-config", format!("{}: {e}", args.config.display())))?;
    let domains = cfg.domains.iter().map(|d| Domain::new(d.n, d.shape.clone())).collect::<Result<Vec<_>, _>>()?;
    let cases: Vec<(&Domain, f64)> = domains.iter().flat_map(|d| cfg.p.iter().map(move |&p| (d, p))).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Failure::config("invalid-config", "--jobs must be positive"));
        }
        builder = builder.num_threads(jobs);
    }
    let pool = builder.build().map_err(|e| Failure::config("invalid-config", e.to_string()))?;
    let rows: Vec<(Vec<String>, u8)> =
        pool.install(|| cases.par_iter().map(|&(d, p)| sweep_case(&cfg, d, p)).collect());

    let mut text = export::REPORT_COLUMNS.join(",") + ",status,error\n";
    for (row, _) in &rows {
        text += &row.join(",");
        text.push('\n');
    }
    match &args.out {
        Some(path) => fs::write(path, &text).map_err(|e| Failure::io(path, e))?,
        None => print!("{text}"),
    }
    Ok(rows.iter().map(|(_, code)| *code).max().unwrap_or(0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level)).init();

    let result = match cli.command {
        Command::Ball(a) => run_ball(a).map(|pass| if pass { 0 } else { EXIT_VIOLATION }),
        Command::Domain(a) => run_domain(a).map(|pass| if pass { 0 } else { EXIT_VIOLATION }),
        Command::LambdaStar(a) => run_lambda_star(a).map(|pass| if pass { 0 } else { EXIT_VIOLATION }),
        Command::Sweep(a) => run_sweep(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprint!("{}", f.to_json());
            ExitCode::from(f.code)
        }
    }
}
