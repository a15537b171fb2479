//! `weylab`: command-line access to the constants, single spectra and experiment suites.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use weylab_core::harness::{self, acceptance_suite, emit, load_reports, OperatorSpec, SuiteConfig};
use weylab_core::operators::Laplacian;
use weylab_core::spectra::{little_ideal_diagnostic, singular_values, weyl_estimate};
use weylab_core::symbols::{kappa, kappa_prime, sphere_measure};
use weylab_core::{LatticeBasis, Report, WindowPolicy};

mod overrides;

use overrides::Overrides;

#[derive(Parser)]
#[command(
    name = "weylab",
    version,
    about = "Weyl asymptotics of truncated operators on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print κ_d and κ′_d with the spinor dimension and |S^{d-1}|.
    Constants {
        /// Single dimension; 2..=6 when absent.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Singular values and a Weyl estimate for one operator.
    Spectrum(SpectrumArgs),
    /// Run an experiment suite and check every gate.
    Verify(SuiteArgs),
    /// Summarize report files written by `verify --out`.
    Report {
        /// Directory holding the reports.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Preset: inverse-laplacian, half-torus, tensor-sum, commutator, dbar.
    #[arg(
        long,
        default_value = "inverse-laplacian",
        conflicts_with = "operator_json"
    )]
    operator: String,
    /// JSON file with an operator description instead of a preset.
    #[arg(long)]
    operator_json: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 16.0)]
    radius: f64,
    /// Schatten exponent; `d/|alpha|` (or `d` for dbar) when absent.
    #[arg(long)]
    p: Option<f64>,
    /// Explicit zero-based inclusive rank window.
    #[arg(long, value_parser = parse_window)]
    window: Option<(usize, usize)>,
    #[arg(long, value_enum, default_value_t = LaplacianArg::Homogeneous)]
    laplacian: LaplacianArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Directory for `spectrum.csv` and `spectrum.json`; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LaplacianArg {
    Homogeneous,
    Inhomogeneous,
}

impl From<LaplacianArg> for Laplacian {
    fn from(l: LaplacianArg) -> Self {
        match l {
            LaplacianArg::Homogeneous => Laplacian::Homogeneous,
            LaplacianArg::Inhomogeneous => Laplacian::Inhomogeneous,
        }
    }
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite config; the built-in acceptance suite when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for JSON reports and CSV spectra.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run only the experiments with these names.
    #[arg(long = "only", value_delimiter = ',')]
    only: Vec<String>,
    /// Dimension override for experiments with a free dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Radius override for single-radius Weyl experiments.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, value_parser = parse_window)]
    window: Option<(usize, usize)>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Print the effective suite config and exit without running.
    #[arg(long)]
    dry_run: bool,
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("lo: {e}"))?;
    let hi: usize = hi.trim().parse().map_err(|e| format!("hi: {e}"))?;
    if lo > hi {
        return Err(format!("lo {lo} > hi {hi}"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    harness::configure_threads();
    let outcome = match cli.command {
        Command::Constants { d, format } => constants(d, format),
        Command::Spectrum(args) => spectrum(&args),
        Command::Verify(args) => verify(&args),
        Command::Report { out, format } => summarize(&out, format),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Writes to stdout; a closed pipe ends output quietly.
fn emit_stdout(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn constants(d: Option<usize>, format: Format) -> Result<bool> {
    let dims: Vec<usize> = match d {
        Some(d) if d < 2 => bail!("d must be at least 2"),
        Some(d) => vec![d],
        None => (2..=6).collect(),
    };
    let rows: Vec<_> = dims
        .iter()
        .map(|&d| {
            (
                d,
                1usize << (d / 2),
                kappa(d),
                kappa_prime(d),
                sphere_measure(d),
            )
        })
        .collect();
    match format {
        Format::Csv => {
            let mut text = String::from("d,N,kappa,kappa_prime,sphere_measure\n");
            for (d, n, k, kp, s) in rows {
                writeln!(text, "{d},{n},{k:.15e},{kp:.15e},{s:.15e}")?;
            }
            emit_stdout(&text)?;
        }
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|&(d, n, k, kp, s)| json!({"d": d, "N": n, "kappa": k, "kappa_prime": kp, "sphere_measure": s}))
                .collect();
            emit_stdout(&format!("{}\n", serde_json::to_string_pretty(&v)?))?;
        }
    }
    Ok(true)
}

fn default_exponent(spec: &OperatorSpec) -> Result<f64> {
    let d = spec.dim() as f64;
    let alpha = match spec {
        OperatorSpec::Multiplier { alpha, .. }
        | OperatorSpec::TensorSum { alpha, .. }
        | OperatorSpec::Commutator { alpha, .. } => *alpha,
        OperatorSpec::QuantizedDerivative { .. } => -1.0,
    };
    if alpha.is_nan() || alpha >= 0.0 {
        bail!("alpha = {alpha} gives no decay; pass --p explicitly");
    }
    Ok(d / alpha.abs())
}

fn spectrum(args: &SpectrumArgs) -> Result<bool> {
    let spec = match &args.operator_json {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => OperatorSpec::preset(&args.operator, args.d)?,
    };
    let d = spec.dim();
    let p = match args.p {
        Some(p) => p,
        None => default_exponent(&spec)?,
    };
    let basis = Arc::new(LatticeBasis::enumerate(d, args.radius)?);
    let op = spec.build(&basis, args.laplacian.into())?;
    let s = singular_values(&op)?;
    let policy = match args.window {
        Some((lo, hi)) => WindowPolicy::with_window(lo, hi),
        None => WindowPolicy::default(),
    };
    let estimate = weyl_estimate(&s, p, &policy)?;
    let diagnostic = little_ideal_diagnostic(&s, p).ok();
    let summary = json!({
        "operator": args.operator_json.as_ref().map_or(args.operator.clone(), |p| p.display().to_string()),
        "d": d,
        "R": args.radius,
        "dim": s.dim(),
        "estimate": estimate,
        "diagnostic": diagnostic,
    });
    let summary = serde_json::to_string_pretty(&summary)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            harness::write_atomic(&dir.join("spectrum.csv"), s.to_csv(p).as_bytes())?;
            harness::write_atomic(&dir.join("spectrum.json"), summary.as_bytes())?;
            eprintln!("wrote {}", dir.display());
        }
        None => match args.format {
            Format::Csv => emit_stdout(&s.to_csv(p))?,
            Format::Json => emit_stdout(&format!("{summary}\n"))?,
        },
    }
    Ok(true)
}

fn load_suite(args: &SuiteArgs) -> Result<SuiteConfig> {
    let mut suite = match &args.config {
        Some(path) => SuiteConfig::load(path)?,
        None => acceptance_suite(),
    };
    if !args.only.is_empty() {
        if let Some(missing) = args
            .only
            .iter()
            .find(|n| !suite.experiments.iter().any(|e| e.name() == *n))
        {
            bail!("no experiment named '{missing}'");
        }
        suite
            .experiments
            .retain(|e| args.only.iter().any(|n| n == e.name()));
    }
    let ov = Overrides {
        d: args.d,
        radius: args.radius,
        window: args.window,
    };
    for e in &mut suite.experiments {
        ov.apply(e)?;
        e.validate()?;
    }
    Ok(suite)
}

fn verify(args: &SuiteArgs) -> Result<bool> {
    let suite = load_suite(args)?;
    if args.dry_run {
        emit_stdout(&format!("{}\n", suite.to_json()))?;
        return Ok(true);
    }
    let reports = harness::run_suite(&suite);
    if let Some(dir) = &args.out {
        for r in &reports {
            emit(r, dir)?;
        }
    }
    print_reports(&reports, args.format)?;
    Ok(reports.iter().all(|r| r.passed))
}

fn summarize(dir: &Path, format: Format) -> Result<bool> {
    let reports = load_reports(dir)?;
    if reports.is_empty() {
        bail!("no reports in {}", dir.display());
    }
    print_reports(&reports, format)?;
    Ok(reports.iter().all(|r| r.passed))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

fn print_reports(reports: &[Report], format: Format) -> Result<()> {
    match format {
        Format::Json => emit_stdout(&format!("{}\n", serde_json::to_string_pretty(reports)?)),
        Format::Csv => {
            let mut text = String::from(
                "status,name,id,coefficient,reference,rel_error,runtime_s,failed_gates\n",
            );
            for r in reports {
                let failed: Vec<&str> = r.failed_gates().map(|g| g.name.as_str()).collect();
                writeln!(
                    text,
                    "{},{},{},{},{},{},{:.3},{}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.id,
                    opt(r.coefficient),
                    opt(r.reference),
                    opt(r.rel_error),
                    r.runtime_s,
                    failed.join(";"),
                )?;
            }
            emit_stdout(&text)
        }
    }
}
