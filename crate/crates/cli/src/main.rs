use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use jsr_core::engine::{algorithm1, algorithm2, brute_force_bounds, verify_certificate, EngineOptions, RunOutcome};
use jsr_core::error::JsrError;
use jsr_core::io::{
    self, BoundsReport, CertificateFile, CertificateRef, LiftFile, ReportFile,
};
use jsr_core::lift::lift_set;

#[derive(Parser)]
#[command(name = "jsr", version, about = "Joint spectral radius via lifted invariant conitopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    /// Eigenvector-seeded conitope iteration with restarts.
    Conitope,
    /// Identity-seeded iteration that rescales in place.
    Dynamic,
}

#[derive(Subcommand)]
enum Command {
    /// Brute-force sandwich bounds over all products up to a length.
    Bounds {
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Maximum number of enumerated products.
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
    /// Compute the JSR with one of the conitope algorithms.
    Compute {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Algorithm::Conitope)]
        algorithm: Algorithm,
        #[arg(long)]
        max_smp_len: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Stop once B <= 1 + tol.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the certificate here instead of embedding it in the report.
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Re-check a certificate against a problem file.
    Verify { cert: PathBuf, problem: PathBuf },
    /// Emit the lifted operators.
    Lift {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit codes shared by all commands for failures.
fn failure_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<JsrError>() {
        Some(JsrError::Budget { .. }) => 3,
        Some(JsrError::Numeric(_)) | Some(JsrError::State(_)) => 4,
        _ => 2,
    }
}

fn options(
    max_smp_len: Option<usize>,
    max_iters: Option<usize>,
    tol: Option<f64>,
) -> anyhow::Result<EngineOptions> {
    let mut opts = EngineOptions::default();
    if let Some(l) = max_smp_len {
        anyhow::ensure!(l >= 1, JsrError::Input("--max-smp-len must be at least 1".into()));
        opts.max_smp_len = l;
    }
    if let Some(i) = max_iters {
        opts.max_iters = i;
    }
    if let Some(t) = tol {
        anyhow::ensure!(t > 0.0 && t < 1.0, JsrError::Input(format!("--tol must lie in (0, 1), got {t}")));
        opts.tol.tol_b = t;
        opts.tol.tol_cert = opts.tol.tol_cert.max(10.0 * t);
    }
    Ok(opts)
}

fn summary(out: &RunOutcome) -> String {
    format!(
        "JSR in [{}, {}] exact={} smp={} steps={}",
        out.lower(),
        out.upper(),
        out.is_exact(),
        out.certificate.smp.word,
        out.state.iteration
    )
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Bounds { file, depth, budget } => {
            let set = io::parse_problem(&file)?;
            anyhow::ensure!(depth >= 1, JsrError::Input("--depth must be at least 1".into()));
            let bf = brute_force_bounds(&set, depth, budget)?;
            let report = BoundsReport {
                lower: bf.lower,
                upper: bf.upper,
                lower_word: bf.lower_word,
                depth: bf.depth,
                requested_depth: depth,
                complete: bf.complete,
            };
            println!("{}", io::to_json_pretty(&report)?);
            if report.complete {
                Ok(0)
            } else {
                eprintln!(
                    "error: depth {depth} exceeds the product budget of {budget}; bounds above stop at depth {}",
                    report.depth
                );
                Ok(3)
            }
        }
        Command::Compute { file, algorithm, max_smp_len, max_iters, tol, out, cert } => {
            let set = io::parse_problem(&file)?;
            let opts = options(max_smp_len, max_iters, tol)?;
            let start = Instant::now();
            let outcome = match algorithm {
                Algorithm::Conitope => algorithm1(&set, &opts)?,
                Algorithm::Dynamic => algorithm2(&set, &opts)?,
            };
            let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            let cert_file = CertificateFile::from_certificate(&outcome.certificate);
            let certificate = match &cert {
                Some(p) => {
                    io::write_json(p, &cert_file)?;
                    info!("certificate written to {}", p.display());
                    CertificateRef::Path(p.display().to_string())
                }
                None => CertificateRef::Embedded(Box::new(cert_file)),
            };
            let report = ReportFile {
                algorithm: match algorithm {
                    Algorithm::Conitope => "conitope",
                    Algorithm::Dynamic => "dynamic",
                }
                .into(),
                lower: outcome.lower(),
                upper: outcome.upper(),
                exact: outcome.is_exact(),
                smp_word: outcome.certificate.smp.word.clone(),
                smp_value: outcome.certificate.smp.value,
                steps: outcome.state.iteration,
                restarts: outcome.state.restarts,
                vertices: outcome.state.vertex_count,
                iterations: outcome.state.history.clone(),
                certificate,
                tolerances: opts.tol,
                runtime_ms,
            };
            if let Some(p) = &out {
                io::write_json(p, &report)?;
            }
            println!("{}", summary(&outcome));
            Ok(if outcome.is_exact() { 0 } else { 1 })
        }
        Command::Verify { cert, problem } => {
            let set = io::parse_problem(&problem)?;
            let file = io::read_certificate(&cert)?;
            let c = file.to_certificate()?;
            let v = verify_certificate(&c, &set)?;
            if v.passed() {
                let norm = v.max_image_norm.map_or(String::new(), |m| format!(" max image norm {m}"));
                println!("certificate valid: JSR in [{}, {}]{norm}", c.lower, c.upper);
                Ok(0)
            } else {
                println!("certificate INVALID ({} violations)", v.violations.len());
                for x in &v.violations {
                    println!("  {x}");
                }
                Ok(1)
            }
        }
        Command::Lift { file, out } => {
            let set = io::parse_problem(&file)?;
            let lifted = LiftFile::from_operators(&lift_set(&set)?)?;
            emit(&io::to_json_pretty(&lifted)?, out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("JSR_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(failure_code(&e))
        }
    }
}
