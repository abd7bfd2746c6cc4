//! `crt`: local CR torsion densities, model kernels and self-checks from the
//! command line.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 numerical failure, 4 violated
//! precondition of the torsion asymptotics.

mod problem;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crtorsion::density::{local_q_density, supertrace_density};
use crtorsion::kernels::heisenberg_heat_regularized;
use crtorsion::quad::QuadOptions;
use crtorsion::torsion::torsion_asymptotics;
use crtorsion::verify::{run_suite, Suite};
use crtorsion::Error;

use problem::ProblemFile;

#[derive(Parser)]
#[command(name = "crt", version, about = "CR analytic-torsion densities and model kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// η-integrated heat density minus Szegő counterterm, one row per t.
    /// Without --q the supertrace Σ(−1)^q q·density is reported.
    Density {
        file: PathBuf,
        #[arg(long)]
        q: Option<usize>,
        /// Comma-separated t values; overrides the file's t_grid.
        #[arg(long = "t-grid", value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagonal (0,q)-trace of the Heisenberg heat kernel at the origin,
    /// Szegő-subtracted in the degrees n₋ and n₊.
    Kernel {
        file: PathBuf,
        #[arg(long)]
        q: usize,
        #[arg(long = "t-grid", value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leading coefficients c_log and c_k of the torsion asymptotics.
    Torsion {
        file: PathBuf,
        /// Common split point; defaults to the largest per-sample default.
        #[arg(long = "C")]
        c: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite: identities, mellin, hx, kernels or all.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Validation(_)
            | Error::Domain { .. }
            | Error::SingularSplit { .. }
            | Error::DegeneratePencil
            | Error::PencilRoot { .. }
            | Error::Unsupported(_)
            | Error::ConvergenceDomain { .. }
            | Error::DivergentIntegral { .. } => 2,
            Error::Precondition(_) => 4,
            Error::QuadratureFailure { .. }
            | Error::Pole { .. }
            | Error::InsufficientSeries { .. }
            | Error::SeriesMismatch { .. }
            | Error::RouteMismatch { .. }
            | Error::SeriesTail { .. }
            | Error::Overflow(_) => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    }
}

fn load(path: &Path) -> Result<ProblemFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(ProblemFile::parse(&text)?)
}

fn t_grid(flag: Option<Vec<f64>>, file: &ProblemFile) -> Result<Vec<f64>, Failure> {
    let grid = flag.or_else(|| file.t_grid.clone()).unwrap_or_default();
    if grid.is_empty() {
        return Err(Error::Validation("no t values: pass --t-grid or set t_grid in the file".into()).into());
    }
    if let Some(&t) = grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::Validation(format!("t must be positive and finite, got {t}")).into());
    }
    Ok(grid)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Row {
    t: f64,
    value: f64,
    error: f64,
}

fn rows_text(rows: &[Row], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("t,value,error\n");
            for r in rows {
                // {:e} round-trips f64 exactly.
                writeln!(s, "{:e},{:e},{:e}", r.t, r.value, r.error).expect("writing to a String");
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(rows).expect("rows serialize") + "\n",
    }
}

fn cmd_density(
    file: &Path,
    q: Option<usize>,
    grid: Option<Vec<f64>>,
    format: Format,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let p = load(file)?;
    let data = p.curvature()?;
    if let Some(q) = q {
        if q > data.n() {
            return Err(Error::Validation(format!("--q {q} exceeds n = {}", data.n())).into());
        }
    }
    let quad = p.eta_quadrature(&data)?;
    let rows = t_grid(grid, &p)?
        .into_iter()
        .map(|t| {
            let r = match q {
                Some(q) => local_q_density(&data, q, t, &quad)?,
                None => supertrace_density(&data, t, &quad)?,
            };
            Ok(Row {
                t,
                value: r.value,
                error: r.error,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    emit(&rows_text(&rows, format), out)
}

fn cmd_kernel(file: &Path, q: usize, grid: Option<Vec<f64>>, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let p = load(file)?;
    let model = p.heisenberg()?;
    let origin = vec![0.0; 2 * model.n() + 1];
    let opts = QuadOptions {
        rel_tol: p.quadrature.as_ref().and_then(|s| s.rel_tol).unwrap_or(1e-10),
        abs_tol: p.quadrature.as_ref().and_then(|s| s.abs_tol).unwrap_or(1e-14),
        ..QuadOptions::default()
    };
    let rows = t_grid(grid, &p)?
        .into_iter()
        .map(|t| {
            let k = heisenberg_heat_regularized(&model, q, &origin, &origin, t, true, &opts)?;
            Ok(Row {
                t,
                value: k.value.degree_trace(q).re,
                error: k.error,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    emit(&rows_text(&rows, format), out)
}

#[derive(Serialize)]
struct TorsionOutput {
    c_log: f64,
    c_log_error: f64,
    c_k: f64,
    c_k_error: f64,
    split: f64,
    samples: Vec<crtorsion::torsion::SampleBreakdown>,
}

fn cmd_torsion(file: &Path, c: Option<f64>, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let p = load(file)?;
    let samples = p.weighted_samples()?;
    let r = torsion_asymptotics(&samples, c.or(p.c))?;
    // c_log is a finite sum of closed forms; its error is rounding only.
    let c_log_error = 16.0
        * f64::EPSILON
        * r.samples
            .iter()
            .map(|s| s.weight.abs() * (s.f_n1.abs() + s.h0.abs()))
            .sum::<f64>();
    let output = TorsionOutput {
        c_log: r.coefficients.c_log,
        c_log_error,
        c_k: r.coefficients.c_k,
        c_k_error: r.c_k_error,
        split: r.split,
        samples: r.samples,
    };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&output).expect("output serializes") + "\n",
        Format::Csv => {
            let mut s = String::from("sample,weight,f_n1,h0,h_prime0,log_two_pi_term,log_det_term,log_det_error,c_log,c_k\n");
            for (i, b) in output.samples.iter().enumerate() {
                writeln!(
                    s,
                    "{i},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                    b.weight, b.f_n1, b.h0, b.h_prime0, b.log_two_pi_term, b.log_det_term, b.log_det_error, b.c_log, b.c_k
                )
                .expect("writing to a String");
            }
            writeln!(
                s,
                "total,,,,,,,{:e},{:e},{:e}",
                output.c_k_error, output.c_log, output.c_k
            )
            .expect("writing to a String");
            s
        }
    };
    emit(&text, out)
}

fn cmd_verify(suite: &str, seed: u64, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let report = run_suite(suite, seed);
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Format::Csv => {
            let mut s = String::from("family,name,value,reference,error,tolerance,passed\n");
            for c in &report.checks {
                writeln!(
                    s,
                    "{},\"{}\",{:e},{:e},{:e},{:e},{}",
                    c.family, c.name, c.value, c.reference, c.error, c.tolerance, c.passed
                )
                .expect("writing to a String");
            }
            s
        }
    };
    emit(&text, out)?;
    eprint!("{}", report.summary());
    if report.passed() {
        Ok(())
    } else {
        let mut message = String::from("verification failed:");
        for c in report.failures() {
            write!(message, "\n  [{}] {}: error {:e} > tolerance {:e}", c.family, c.name, c.error, c.tolerance)
                .expect("writing to a String");
            if let Some(d) = &c.detail {
                write!(message, " ({d})").expect("writing to a String");
            }
        }
        Err(Failure { code: 3, message })
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("CRT_MAX_THREADS") else {
        return Ok(());
    };
    let threads: usize = v.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| Failure {
        code: 2,
        message: format!("CRT_MAX_THREADS must be a positive integer, got '{v}'"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure {
            code: 2,
            message: format!("thread pool: {e}"),
        })
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Density {
            file,
            q,
            t_grid,
            format,
            out,
        } => cmd_density(&file, q, t_grid, format, out.as_deref()),
        Command::Kernel {
            file,
            q,
            t_grid,
            format,
            out,
        } => cmd_kernel(&file, q, t_grid, format, out.as_deref()),
        Command::Torsion { file, c, format, out } => cmd_torsion(&file, c, format, out.as_deref()),
        Command::Verify {
            suite,
            seed,
            format,
            out,
        } => cmd_verify(&suite, seed, format, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
