//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed property check, 2 invalid input,
//! 3 numerical failure during a run.

pub mod invariants;
pub mod scenario;
pub mod simulate;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::check::{run_checks, CheckConfig};
use crate::spaces::{MetricTensor, MAX_DIM};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "affine-bodies", version, about = "Affinely-rigid body deformation algebra and dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a scenario file and write the trajectory as CSV.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print one-body or two-body invariants as JSON.
    Invariants {
        /// Configuration of a single body, as JSON rows.
        #[arg(long, value_name = "M")]
        phi: Option<String>,
        /// Two configurations `psi phi`; displacements are `psi^-1 phi` and `phi psi^-1`.
        #[arg(long, num_args = 2, value_names = ["M1", "M2"])]
        pair: Option<Vec<String>>,
        /// Spatial and material metrics `g eta` (default: identity).
        #[arg(long, num_args = 2, value_names = ["G", "ETA"])]
        metrics: Option<Vec<String>>,
    },
    /// Run the randomized property suites.
    Check {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Flips the sign of one structure constant in the bracket suite.
        #[arg(long, hide = true)]
        inject_sign_flip: bool,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

fn numeric(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_NUMERIC,
        message: message.into(),
    }
}

/// Runs the command line given by `args` (including the program name) and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate { scenario, out: path } => cmd_simulate(&scenario, &path),
        Command::Invariants { phi, pair, metrics } => cmd_invariants(phi, pair, metrics, out),
        Command::Check {
            dim,
            seed,
            trials,
            tol,
            inject_sign_flip,
        } => cmd_check(dim, seed, trials, tol, inject_sign_flip, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn cmd_simulate(scenario_path: &PathBuf, out_path: &PathBuf) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(scenario_path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", scenario_path.display())))?;
    let parsed = scenario::parse(&text).map_err(|e| invalid(format!("{}: {e}", scenario_path.display())))?;
    let prepared = scenario::prepare(&parsed).map_err(|e| invalid(format!("{}: {e}", scenario_path.display())))?;
    let csv = simulate::simulate_csv(&prepared).map_err(|e| numeric(e.to_string()))?;
    std::fs::write(out_path, csv).map_err(|e| invalid(format!("cannot write {}: {e}", out_path.display())))?;
    Ok(EXIT_OK)
}

fn cmd_invariants(
    phi: Option<String>,
    pair: Option<Vec<String>>,
    metrics: Option<Vec<String>>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    use invariants::{parse_matrix, summarize, Subject};
    let subject = match (phi, pair) {
        (Some(phi), None) => Subject::Single(parse_matrix(&phi).map_err(invalid)?),
        (None, Some(pair)) => Subject::Pair(
            parse_matrix(&pair[0]).map_err(invalid)?,
            parse_matrix(&pair[1]).map_err(invalid)?,
        ),
        (Some(_), Some(_)) => return Err(invalid("give either --phi or --pair, not both")),
        (None, None) => return Err(invalid("one of --phi or --pair is required")),
    };
    let n = match &subject {
        Subject::Single(m) => m.nrows(),
        Subject::Pair(a, b) => {
            if a.nrows() != b.nrows() {
                return Err(invalid("--pair matrices differ in size"));
            }
            a.nrows()
        }
    };
    if n > MAX_DIM {
        return Err(invalid(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    let (g, eta) = match metrics {
        None => (MetricTensor::identity(n), MetricTensor::identity(n)),
        Some(m) => {
            let build = |text: &str, name: &str| -> Result<MetricTensor, Failure> {
                let c = parse_matrix(text).map_err(invalid)?;
                if c.nrows() != n {
                    return Err(invalid(format!("{name} is {}x{0}, expected {n}x{n}", c.nrows())));
                }
                MetricTensor::new(c).map_err(|e| invalid(format!("{name}: {e}")))
            };
            (build(&m[0], "G")?, build(&m[1], "ETA")?)
        }
    };
    let summary = summarize(&subject, &eta, &g).map_err(|e| invalid(e.to_string()))?;
    let text = serde_json::to_string(&summary).map_err(|e| numeric(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| invalid(e.to_string()))?;
    Ok(EXIT_OK)
}

fn cmd_check(
    dim: usize,
    seed: u64,
    trials: usize,
    tol: f64,
    sign_flip: bool,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(invalid(format!("--dim must be in 2..={MAX_DIM}")));
    }
    if trials == 0 {
        return Err(invalid("--trials must be at least 1"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid("--tol must be positive"));
    }
    let config = CheckConfig {
        dim,
        seed,
        trials,
        tol,
        sign_flip,
    };
    let report = run_checks(&config).map_err(|e| numeric(e.to_string()))?;
    writeln!(out, "{report}").map_err(|e| invalid(e.to_string()))?;
    Ok(if report.pass() { EXIT_OK } else { EXIT_CHECK_FAILED })
}
