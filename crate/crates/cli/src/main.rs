//! `htensor`: membership checks, certificates, minimum H-eigenvalues and
//! form bounds from JSON files, with exit codes for scripts.
//!
//! Exit codes: 0 member / success, 1 not member / certificate rejected,
//! 2 marginal, ill-conditioned, malformed input or inconsistent results.

mod commands;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use commands::Outcome;

#[derive(Parser, Debug)]
#[command(name = "htensor", version, about = "Symmetric H+-tensor toolkit")]
struct Cli {
    /// Feasibility and optimality tolerance of the conic solver; also the
    /// verification tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Interior-point iteration cap.
    #[arg(long, global = true, default_value_t = 200)]
    max_iter: usize,
    /// Seed for randomized steps (sampled upper bounds).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads when an input path is a directory of instance files.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Arithmetic for certificate verification.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Float)]
    mode: Mode,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Float,
    Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Dd,
    Ddplus,
    Hplus,
    M,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Conic,
    Oracle,
    Bisect,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Cone {
    Ddth,
    Gddth,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide membership of a tensor file (or every .json file in a directory).
    Check {
        #[arg(value_enum)]
        kind: Kind,
        path: PathBuf,
        /// Leave the certificate out of the report.
        #[arg(long)]
        no_certificate: bool,
        /// Also write the bare certificate to this file.
        #[arg(long)]
        certificate_out: Option<PathBuf>,
    },
    /// Minimum H-eigenvalue of a symmetric M-tensor.
    Mineig {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Conic)]
        method: Method,
        /// Final bracket width of the bisection method.
        #[arg(long, default_value_t = 1e-7)]
        bisect_tol: f64,
    },
    /// Lower bounds for the minimum of an even-degree form over the unit m-sphere.
    Polybound {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Cone::Both)]
        cone: Cone,
        /// Random directions tried by the sampled upper bound.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Check a certificate against a tensor without a solver.
    Verify { tensor: PathBuf, certificate: PathBuf },
    /// Split a tensor into the sparse components of a certificate.
    Decompose { tensor: PathBuf, certificate: PathBuf },
}

pub struct RunConfig {
    pub solver: htensor::SolverConfig,
    pub seed: u64,
    pub mode: Mode,
}

fn config_echo(cli: &Cli) -> Value {
    json!({
        "feas_tol": cli.tol,
        "gap_tol": cli.tol,
        "max_iter": cli.max_iter,
        "seed": cli.seed,
        "mode": format!("{:?}", cli.mode).to_lowercase(),
        "jobs": cli.jobs,
    })
}

/// Files to process: the path itself, or the sorted `.json` files inside it.
fn inputs(path: &Path) -> std::io::Result<Option<Vec<PathBuf>>> {
    if !path.is_dir() {
        return Ok(None);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    Ok(Some(files))
}

fn run_batch(files: &[PathBuf], jobs: usize, f: &(dyn Fn(&Path) -> Outcome + Sync)) -> Vec<Outcome> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Outcome>>> = Mutex::new((0..files.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, files.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(file) = files.get(k) else { break };
                let out = f(file);
                slots.lock().expect("no worker panics while holding the lock")[k] = Some(out);
            });
        }
    });
    slots.into_inner().expect("workers finished").into_iter().map(|o| o.expect("every slot filled")).collect()
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("HTENSOR_LOG")).init();
    let cli = Cli::parse();
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        eprintln!("error: --tol must be positive");
        std::process::exit(2);
    }
    let cfg = RunConfig {
        solver: htensor::SolverConfig {
            feas_tol: cli.tol,
            gap_tol: cli.tol,
            max_iter: cli.max_iter,
            ..htensor::SolverConfig::default()
        },
        seed: cli.seed,
        mode: cli.mode,
    };
    if let Err(e) = cfg.solver.validate() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }

    let (name, path, single): (&str, Option<&PathBuf>, Box<dyn Fn(&Path) -> Outcome + Sync>) = match &cli.command {
        Command::Check { kind, path, no_certificate, certificate_out } => {
            let (kind, keep, out) = (*kind, !*no_certificate, certificate_out.clone());
            let cfg = &cfg;
            ("check", Some(path), Box::new(move |p| commands::check(cfg, kind, p, keep, out.as_deref())))
        }
        Command::Mineig { path, method, bisect_tol } => {
            let (method, bt, cfg) = (*method, *bisect_tol, &cfg);
            ("mineig", Some(path), Box::new(move |p| commands::mineig(cfg, method, bt, p)))
        }
        Command::Polybound { path, cone, samples } => {
            let (cone, samples, cfg) = (*cone, *samples, &cfg);
            ("polybound", Some(path), Box::new(move |p| commands::polybound(cfg, cone, samples, p)))
        }
        Command::Verify { tensor, certificate } => {
            let (t, c, cfg) = (tensor.clone(), certificate.clone(), &cfg);
            ("verify", None, Box::new(move |_| commands::verify(cfg, &t, &c)))
        }
        Command::Decompose { tensor, certificate } => {
            let (t, c, cfg) = (tensor.clone(), certificate.clone(), &cfg);
            ("decompose", None, Box::new(move |_| commands::decompose(cfg, &t, &c)))
        }
    };

    let mut report = Map::new();
    report.insert("tool".into(), json!("htensor"));
    report.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    report.insert("command".into(), json!(name));
    report.insert("config".into(), config_echo(&cli));

    let batch = match path.map(|p| inputs(p)).transpose() {
        Ok(b) => b.flatten(),
        Err(e) => {
            eprintln!("error: cannot read directory: {e}");
            std::process::exit(2);
        }
    };
    let (code, text) = match batch {
        Some(files) => {
            let outs = run_batch(&files, cli.jobs, single.as_ref());
            let code = outs.iter().map(|o| o.code).max().unwrap_or(0);
            let mut text = String::new();
            let mut results = Vec::new();
            for (file, out) in files.iter().zip(outs) {
                text.push_str(&format!("{}: {}\n", file.display(), out.text.trim_end().replace('\n', "\n  ")));
                let mut body = out.body;
                body.insert("file".into(), json!(file.display().to_string()));
                body.insert("exit_code".into(), json!(out.code));
                results.push(Value::Object(body));
            }
            report.insert("results".into(), Value::Array(results));
            (code, text)
        }
        None => {
            let out = single(path.map(PathBuf::as_path).unwrap_or(Path::new("")));
            if let Some(p) = path {
                report.insert("file".into(), json!(p.display().to_string()));
            }
            report.extend(out.body);
            (out.code, out.text)
        }
    };
    report.insert("exit_code".into(), json!(code));
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&Value::Object(report)).expect("report is valid JSON")),
        Format::Text => print!("{}", if text.ends_with('\n') { text } else { text + "\n" }),
    }
    std::process::exit(code);
}
