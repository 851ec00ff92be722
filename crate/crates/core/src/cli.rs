//! `coherence-lab` command-line front end.
//!
//! Exit codes: 0 success or PASS, 1 violations found, 2 usage error,
//! 3 I/O or format error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::channels::{canonical_form, is_cpo, is_incoherent_channel, ChannelFile, ENTRY_TOL};
use crate::error::CoherenceError;
use crate::harness::{
    check_c2, check_lemma1, mcs_distance, run_criterion, skew_violation_witness, Criterion,
    CriterionReport, TrialConfig,
};
use crate::mcs::{is_mcs, transform_mcs_to, transform_mcs_to_mixed, McsDescriptor};
use crate::measures::Measure;
use crate::states::{AnyState, StateFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

const CPO_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "coherence-lab",
    version,
    about = "Coherence measures, incoherent channels and criterion checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a coherence measure on a state file.
    Measure {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        measure: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report incoherence and CPO verdicts for a channel, with its canonical form.
    CheckChannel {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run criterion checks.
    Verify {
        #[arg(long)]
        measure: Option<String>,
        /// C1..C5, LEMMA1, LEMMA2, THEOREM3 or ALL.
        #[arg(long, default_value = "ALL")]
        criterion: String,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, env = "COHERENCE_LAB_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the skew-information witness and search for further counterexamples.
    Hunt {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, env = "COHERENCE_LAB_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test MCS membership, or build the channel taking |Ψ_d⟩ to a target.
    Mcs {
        #[arg(long, required_unless_present = "transform_to")]
        state: Option<PathBuf>,
        #[arg(long)]
        transform_to: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m,
        }
    }
}

/// Errors caused by flag values are usage errors; anything else comes from input files.
fn usage(e: CoherenceError) -> CliError {
    CliError::Usage(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| io_err(format!("{}: {e}", path.display())))
}

fn read_state(path: &Path) -> Result<AnyState, CliError> {
    let file: StateFile = read_json(path)?;
    file.to_state()
        .map_err(|e| io_err(format!("{}: {e}", path.display())))
}

/// Serializes a report list as JSON (single object when there is one) or CSV.
pub fn emit_reports(reports: &[CriterionReport], format: Format) -> String {
    match format {
        Format::Json => {
            let text = if reports.len() == 1 {
                serde_json::to_string_pretty(&reports[0])
            } else {
                serde_json::to_string_pretty(reports)
            };
            text.expect("reports serialize") + "\n"
        }
        Format::Csv => {
            let mut s = String::from(CriterionReport::CSV_HEADER);
            s.push('\n');
            for r in reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
    }
}

pub fn emit_report(report: &CriterionReport, format: Format) -> String {
    emit_reports(std::slice::from_ref(report), format)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn write_output(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_err(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(io_err),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--jobs must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(io_err)?;
            Ok(pool.install(f))
        }
    }
}

fn parse_measure(name: &str) -> Result<Measure, CliError> {
    name.parse().map_err(usage)
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Measure {
            state,
            measure,
            out,
        } => {
            let m = parse_measure(&measure)?;
            let rho = read_state(&state)?.to_density();
            let value = m.evaluate(&rho).map_err(io_err)?;
            let body = json!({ "measure": m.name(), "dim": rho.dim(), "value": value });
            write_output(out.as_deref(), &to_json(&body), stdout)?;
            Ok(EXIT_OK)
        }
        Command::CheckChannel { channel, out } => {
            let file: ChannelFile = read_json(&channel)?;
            let ch = file
                .to_channel()
                .map_err(|e| io_err(format!("{}: {e}", channel.display())))?;
            let incoherent = is_incoherent_channel(&ch, ENTRY_TOL);
            let form = if incoherent {
                canonical_form(&ch).ok()
            } else {
                None
            };
            let body = json!({
                "dim": ch.dim(),
                "kraus_count": ch.kraus().len(),
                "completeness_defect": ch.completeness_defect(),
                "incoherent": incoherent,
                "cpo": is_cpo(&ch, CPO_TOL),
                "canonical_form": form,
            });
            write_output(out.as_deref(), &to_json(&body), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            measure,
            criterion,
            dim,
            trials,
            seed,
            tol,
            jobs,
            format,
            out,
        } => {
            let criteria: Vec<Criterion> = if criterion.eq_ignore_ascii_case("ALL") {
                Criterion::ALL.to_vec()
            } else {
                vec![criterion.parse().map_err(usage)?]
            };
            let m = measure.as_deref().map(parse_measure).transpose()?;
            if m.is_none() && criteria.iter().any(Criterion::takes_measure) {
                return Err(CliError::Usage(
                    "--measure is required for this criterion".into(),
                ));
            }
            let m = m.unwrap_or(Measure::L1);
            let mut cfg = TrialConfig::for_measure(&m, dim, trials, seed);
            if let Some(t) = tol {
                cfg.tol = t;
            }
            cfg.validate().map_err(usage)?;
            let reports = with_jobs(jobs, || {
                criteria
                    .iter()
                    .map(|&c| run_criterion(c, &m, &cfg))
                    .collect::<crate::Result<Vec<_>>>()
            })?
            .map_err(usage)?;
            write_output(out.as_deref(), &emit_reports(&reports, format), stdout)?;
            let violations = reports.iter().any(|r| r.violations > 0);
            Ok(if violations { EXIT_VIOLATIONS } else { EXIT_OK })
        }
        Command::Hunt {
            dim,
            trials,
            seed,
            jobs,
            out,
        } => {
            let witness = skew_violation_witness(dim).map_err(usage)?;
            let skew = Measure::Skew(None);
            let cfg = TrialConfig::new(dim, trials, seed);
            cfg.validate().map_err(usage)?;
            let reports = with_jobs(jobs, || -> crate::Result<Vec<CriterionReport>> {
                Ok(vec![check_c2(&skew, &cfg)?, check_lemma1(&skew, &cfg)?])
            })?
            .map_err(usage)?;
            let body =
                json!({ "measure": "skew", "dim": dim, "witness": witness, "reports": reports });
            write_output(out.as_deref(), &to_json(&body), stdout)?;
            Ok(EXIT_VIOLATIONS)
        }
        Command::Mcs {
            state,
            transform_to,
            tol,
            out,
        } => {
            if tol.is_nan() || tol <= 0.0 {
                return Err(CliError::Usage("--tol must be positive".into()));
            }
            if let Some(target) = transform_to {
                let ch = match read_state(&target)? {
                    AnyState::Pure(psi) => transform_mcs_to(&psi),
                    AnyState::Density(rho) => transform_mcs_to_mixed(&rho),
                }
                .map_err(io_err)?;
                write_output(
                    out.as_deref(),
                    &to_json(&ChannelFile::from_channel(&ch)),
                    stdout,
                )?;
                return Ok(EXIT_OK);
            }
            let path = state.expect("clap enforces --state without --transform-to");
            let any = read_state(&path)?;
            let rho = any.to_density();
            let member = is_mcs(&rho, tol);
            let phases = match (&any, member) {
                (AnyState::Pure(psi), true) => Some(McsDescriptor::from_state(psi)),
                _ => None,
            };
            let body = json!({
                "dim": rho.dim(),
                "is_mcs": member,
                "mcs_distance": mcs_distance(&rho),
                "descriptor": phases,
            });
            write_output(out.as_deref(), &to_json(&body), stdout)?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI on `args` (including the program name), writing reports to `stdout`
/// and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

pub fn main() -> i32 {
    run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}
