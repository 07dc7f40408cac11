//! Command-line front end: verification suites and profile analyses with
//! deterministic JSON reports.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails (or no
//! admissible profile exists), 2 on usage errors.

pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qch_core::identities::{self, product_parameters, suite_basis, CheckResult, SuiteConfig};
use qch_core::{profile_report_with_margin, solve_profile, QchError};

use crate::report::{CheckRecord, ProfileRecord, ProfileReportRecord, Report, ReportItem};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qch", version, about = "Verify QCH curvature identities and analyse warping profiles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run identity checks on Π, Φ, Ψ
    Verify(VerifyArgs),
    /// Solve and analyse a warping profile r(t)
    Profile(ProfileArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Table,
    Eq32,
    Theorem1,
    Product,
    Algebraic,
    All,
}

impl Suite {
    fn label(self) -> &'static str {
        match self {
            Suite::Table => "table",
            Suite::Eq32 => "eq32",
            Suite::Theorem1 => "theorem1",
            Suite::Product => "product",
            Suite::Algebraic => "algebraic",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Complex dimension (real dimension 2n)
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..=8))]
    pub n: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 5.0)]
    pub coeff_range: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Holomorphic curvature of the E factor for `product` (drawn from the seed if absent)
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Curvature of the surface factor for `product` (drawn from the seed if absent)
    #[arg(long, allow_negative_numbers = true)]
    pub l: Option<f64>,
    /// Write the JSON report here (`-` for stdout)
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the structure and basis tensors as text records
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Omit timestamp and timing fields for byte-stable output
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileAction {
    Solve,
    Report,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(value_enum)]
    pub action: ProfileAction,
    #[arg(long, allow_negative_numbers = true)]
    pub r0: f64,
    #[arg(long = "L", allow_negative_numbers = true)]
    pub length: f64,
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
    /// Endpoint margin for the alternate form of a+b/2 (default L·1e-3)
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write `t,ab2` samples as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] QchError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(QchError::InvalidProfileParameter(_)) => EXIT_USAGE,
            CliError::Core(QchError::ComplexDimensionTooSmall(_)) => EXIT_USAGE,
            CliError::Core(_) | CliError::Io { .. } => EXIT_FAIL,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let outcome = match cli.command {
        Command::Verify(args) => cmd_verify(&args),
        Command::Profile(args) => cmd_profile(&args),
    };
    match outcome {
        Ok(report) => {
            if report.overall_pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn timestamp(disabled: bool) -> Option<String> {
    (!disabled).then(|| chrono::Utc::now().to_rfc3339())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(report: &Report, json: Option<&Path>, summary: &[String]) -> Result<(), CliError> {
    let to_stdout = json.is_some_and(|p| p == Path::new("-"));
    if to_stdout {
        print!("{}", report.to_json());
    } else {
        let mut out = std::io::stdout().lock();
        for line in summary {
            let _ = writeln!(out, "{line}");
        }
        let verdict = if report.overall_pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "overall: {verdict}");
        if let Some(path) = json {
            write_file(path, &report.to_json())?;
        }
    }
    Ok(())
}

fn check_line(c: &CheckResult) -> String {
    let verdict = if c.ok() { "PASS" } else { "FAIL" };
    let guard = match c.nonvacuous {
        Some(false) => " (vacuous)",
        _ => "",
    };
    format!(
        "{verdict} {:<52} n={} seed={} defect={:.3e} tol={:.3e}{guard}",
        c.name, c.n, c.seed, c.max_defect, c.tolerance
    )
}

fn cmd_verify(args: &VerifyArgs) -> Result<Report, CliError> {
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", args.tol)));
    }
    if !(args.coeff_range > 0.0 && args.coeff_range.is_finite()) {
        return Err(CliError::Usage(format!(
            "--coeff-range must be positive, got {}",
            args.coeff_range
        )));
    }
    let n = args.n as usize;
    let seed = args.seed;
    let cfg = SuiteConfig {
        n_list: vec![n],
        seeds: vec![seed],
        tol: args.tol,
        trials: args.trials as usize,
        coeff_range: args.coeff_range,
        perturbation: None,
    };
    let basis = suite_basis(n, seed, None)?;
    let (drawn_k, drawn_l) = product_parameters(seed, args.coeff_range);
    let (k, l) = (args.k.unwrap_or(drawn_k), args.l.unwrap_or(drawn_l));

    let checks = match args.suite {
        Suite::Table => identities::table_checks(&basis, args.tol)?,
        Suite::Eq32 => identities::eq32_checks(&basis, args.tol)?,
        Suite::Theorem1 => vec![identities::theorem1_check(
            &basis,
            cfg.trials,
            cfg.coeff_range,
            args.tol * 10.0,
            seed,
        )?],
        Suite::Product => identities::product_checks(&basis, k, l, args.tol, seed)?,
        Suite::Algebraic => identities::algebraic_checks(&basis, args.tol)?,
        Suite::All => identities::run_suite_with(&cfg)?,
    };

    if let Some(path) = &args.dump {
        write_file(path, &dump_records(basis.space(), &basis))?;
    }

    let mut params = BTreeMap::new();
    params.insert("n".into(), n.to_string());
    params.insert("seed".into(), seed.to_string());
    params.insert("tol".into(), report::sci::format(args.tol));
    if matches!(args.suite, Suite::Theorem1 | Suite::All) {
        params.insert("trials".into(), args.trials.to_string());
        params.insert("coeff_range".into(), report::sci::format(args.coeff_range));
    }
    if matches!(args.suite, Suite::Product) {
        params.insert("k".into(), report::sci::format(k));
        params.insert("l".into(), report::sci::format(l));
    }
    let with_timing = !args.no_timestamp;
    let items = checks
        .iter()
        .map(|c| ReportItem::Check(CheckRecord::from_check(c, with_timing)))
        .collect();
    let report = Report::new(
        format!("verify {}", args.suite.label()),
        params,
        items,
        seed,
        timestamp(args.no_timestamp),
    );
    let summary: Vec<String> = checks.iter().map(check_line).collect();
    emit(&report, args.json.as_deref(), &summary)?;
    Ok(report)
}

fn dump_records(space: &Arc<qch_core::HermitianSpace>, basis: &qch_core::QchBasis) -> String {
    let st = space.structure_tensors();
    let named = [
        ("g", space.g()),
        ("J", space.j()),
        ("p_D", space.p_d()),
        ("h", &st.h),
        ("omega", &st.omega_d),
        ("Omega", &st.kahler_form),
        ("Pi", basis.pi.tensor()),
        ("Phi", basis.phi.tensor()),
        ("Psi", basis.psi.tensor()),
    ];
    named
        .iter()
        .map(|(name, t)| format!("name={name}\n{}", t.to_record()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn cmd_profile(args: &ProfileArgs) -> Result<Report, CliError> {
    let profile = solve_profile(args.r0, args.length, args.k, args.n)?;
    let mut params = BTreeMap::new();
    params.insert("r0".into(), report::sci::format(args.r0));
    params.insert("L".into(), report::sci::format(args.length));
    params.insert("k".into(), args.k.to_string());
    params.insert("n".into(), args.n.to_string());

    let record = ProfileRecord::from_profile(&profile);
    let mut summary = vec![
        format!(
            "profile r0={} L={} k={} n={} s={}",
            profile.r0, profile.length, profile.k, profile.n, profile.s
        ),
        format!("gamma0={:.17e} gamma1={:.17e}", profile.gamma0, profile.gamma1),
        format!(
            "boundary residuals: left={:.3e} right={:.3e}",
            record.residual_left, record.residual_right
        ),
    ];
    let mut items = vec![ReportItem::Profile(record)];

    if args.action == ProfileAction::Report {
        if args.grid < 3 {
            return Err(CliError::Usage(format!("--grid must be at least 3, got {}", args.grid)));
        }
        let margin = args.eps.unwrap_or_else(|| profile.default_margin());
        if !(margin > 0.0 && 2.0 * margin < profile.length) {
            return Err(CliError::Usage(format!("--eps must lie in (0, L/2), got {margin}")));
        }
        let rep = profile_report_with_margin(&profile, args.grid, margin)?;
        params.insert("grid".into(), args.grid.to_string());
        params.insert("eps".into(), report::sci::format(margin));
        if let Some(path) = &args.csv {
            let mut csv = String::from("t,ab2\n");
            for (t, v) in rep.grid.iter().zip(&rep.ab2_values) {
                csv.push_str(&format!("{},{}\n", report::sci::format(*t), report::sci::format(*v)));
            }
            write_file(path, &csv)?;
        }
        summary.push(format!(
            "sign changes of a+b/2: {}",
            rep.sign_change_points
                .iter()
                .map(|t| format!("{t:.12}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        summary.push(format!("max |alternate - primary| = {:.3e}", rep.max_form_gap));
        items.push(ReportItem::ProfileReport(ProfileReportRecord::from_report(&rep)));
    }

    let action = match args.action {
        ProfileAction::Solve => "solve",
        ProfileAction::Report => "report",
    };
    let report = Report::new(
        format!("profile {action}"),
        params,
        items,
        0,
        timestamp(args.no_timestamp),
    );
    emit(&report, args.json.as_deref(), &summary)?;
    Ok(report)
}
