mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use opdiff_core::bounds::{exact_norm_bz, norm_report, NormReport};
use opdiff_core::operator::{build_matrix, OperatorSpec};
use opdiff_core::spectral::{
    argmax_l, common_fixed_point, operator_norm, spectral_radius_closed, spectrum_report,
};
use opdiff_core::verify::{default_suite, run_suite, SuiteCase, VerificationReport};
use opdiff_core::{OpError, TruncatedSeries};

use output::{csv_string, emit, num, opt, to_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "opdiff",
    version,
    about = "Finite sections, norms and spectra of weighted composition-differentiation operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Operator spec (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,

    /// Space parameter: -1 is the Hardy space, alpha > -1 a weighted Bergman space.
    #[arg(long, global = true, default_value_t = -1.0, allow_negative_numbers = true)]
    alpha: f64,

    /// Matrix dimension N (monomials z^0 .. z^{N-1}).
    #[arg(long, global = true, default_value_t = 128,
          value_parser = clap::value_parser!(u64).range(8..=2048))]
    trunc: u64,

    #[arg(long, global = true, default_value_t = 1e-10, value_parser = positive)]
    tol: f64,

    /// Number of closed-form spectrum terms.
    #[arg(long, global = true)]
    lmax: Option<usize>,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Include wall-clock runtimes (makes output nondeterministic).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Finite section in the orthonormal monomial basis.
    Matrix,
    /// Numeric norm with lower, upper and closed-form values where available.
    Norm {
        /// Upper-bound parameter with sup|phi| <= b < 1.
        #[arg(long)]
        b: Option<f64>,
    },
    /// Closed-form and numeric spectrum.
    Spectrum,
    /// Closed-form spectral radius and its maximizing index.
    Radius,
    /// Norm bounds, or a table over phi = bz for the given b and n grids.
    Bounds {
        #[arg(long)]
        b: Option<f64>,
        /// Comma-separated b values for a sweep over phi(z) = bz.
        #[arg(long, value_delimiter = ',')]
        b_grid: Vec<f64>,
        /// Comma-separated orders n for the sweep.
        #[arg(long, value_delimiter = ',')]
        n_grid: Vec<usize>,
    },
    /// Run a verification suite: "default" or a manifest path.
    Verify {
        #[arg(long, default_value = "default")]
        suite: String,
    },
    /// Spectrum, radius and norm summary in one document.
    Report,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

/// A failure that ends the process with exit code 1.
#[derive(Debug, Serialize)]
struct CliError {
    kind: String,
    message: String,
}

impl From<OpError> for CliError {
    fn from(e: OpError) -> Self {
        CliError {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

impl CliError {
    fn new(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            kind: kind.to_string(),
            message: message.into(),
        }
    }

    fn io(e: std::io::Error) -> Self {
        CliError::new("io", e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

enum Outcome {
    Ok,
    VerificationFailed,
}

fn load_spec(path: Option<&Path>) -> CliResult<OperatorSpec> {
    let path =
        path.ok_or_else(|| CliError::new("invalid_argument", "this command needs --spec"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new("io", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::new("schema", format!("{}: {e}", path.display())))
}

fn render_json<T: Serialize>(value: &T) -> CliResult<String> {
    to_json(value).map_err(|e| CliError::new("internal", e.to_string()))
}

fn render_csv(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    csv_string(header, rows).map_err(|e| CliError::new("internal", e.to_string()))
}

#[derive(Serialize)]
struct MatrixOutput {
    alpha: f64,
    dim: usize,
    basis: &'static str,
    entries: Vec<Vec<Complex64>>,
}

fn cmd_matrix(cli: &Cli) -> CliResult<String> {
    let spec = load_spec(cli.spec.as_deref())?;
    let dim = cli.trunc as usize;
    let m = build_matrix(&spec, cli.alpha, dim)?;
    match cli.format {
        Format::Json => {
            let entries = (0..dim)
                .map(|i| (0..dim).map(|j| m.entries[(i, j)]).collect())
                .collect();
            render_json(&MatrixOutput {
                alpha: cli.alpha,
                dim,
                basis: "orthonormal",
                entries,
            })
        }
        Format::Csv => {
            let mut rows = Vec::with_capacity(dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    let v = m.entries[(i, j)];
                    rows.push(vec![i.to_string(), j.to_string(), num(v.re), num(v.im)]);
                }
            }
            render_csv(&["row", "col", "re", "im"], &rows)
        }
    }
}

/// Norm output for operators outside the Hardy differentiation-only setting.
#[derive(Serialize)]
struct NumericNorm {
    numeric: f64,
    trunc_degree: usize,
    alpha: f64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum NormOutput {
    Full(NormReport),
    Numeric(NumericNorm),
}

fn norm_output(cli: &Cli, spec: &OperatorSpec, b: Option<f64>) -> CliResult<NormOutput> {
    let dim = cli.trunc as usize;
    if cli.alpha == -1.0 && spec.diff_only().is_some() {
        Ok(NormOutput::Full(norm_report(spec, dim, cli.tol, b)?))
    } else {
        let m = build_matrix(spec, cli.alpha, dim)?;
        Ok(NormOutput::Numeric(NumericNorm {
            numeric: operator_norm(&m, cli.tol)?,
            trunc_degree: dim,
            alpha: cli.alpha,
        }))
    }
}

fn cmd_norm(cli: &Cli, b: Option<f64>) -> CliResult<String> {
    let spec = load_spec(cli.spec.as_deref())?;
    let out = norm_output(cli, &spec, b)?;
    match cli.format {
        Format::Json => render_json(&out),
        Format::Csv => {
            let row = match &out {
                NormOutput::Full(r) => {
                    vec![num(r.lower), num(r.upper), opt(r.exact), num(r.numeric)]
                }
                NormOutput::Numeric(r) => {
                    vec![String::new(), String::new(), String::new(), num(r.numeric)]
                }
            };
            render_csv(&["lower", "upper", "exact", "numeric"], &[row])
        }
    }
}

fn cmd_spectrum(cli: &Cli) -> CliResult<String> {
    let spec = load_spec(cli.spec.as_deref())?;
    let report = spectrum_report(&spec, cli.alpha, cli.trunc as usize, cli.lmax, cli.tol)?;
    match cli.format {
        Format::Json => render_json(&report),
        Format::Csv => {
            let mut rows = Vec::new();
            for e in &report.closed_form.eigenvalues {
                rows.push(vec![
                    "closed_form".into(),
                    e.l.map(|l| l.to_string()).unwrap_or_default(),
                    num(e.value.re),
                    num(e.value.im),
                    String::new(),
                    String::new(),
                ]);
            }
            for p in &report.numeric {
                rows.push(vec![
                    "numeric".into(),
                    String::new(),
                    num(p.value.re),
                    num(p.value.im),
                    num(p.residual),
                    p.flagged.to_string(),
                ]);
            }
            render_csv(&["source", "l", "re", "im", "residual", "flagged"], &rows)
        }
    }
}

#[derive(Serialize)]
struct RadiusOutput {
    radius: f64,
    l_star: usize,
    tie: bool,
    fixed_point: Complex64,
}

fn radius_output(spec: &OperatorSpec) -> CliResult<RadiusOutput> {
    let fp = common_fixed_point(spec)?;
    let (radius, l_star) = spectral_radius_closed(spec, &fp)?;
    let order = spec.diff_only().map(|d| d.order).unwrap_or(1);
    let tie = argmax_l(order, fp.phi_prime.norm())?.tie;
    Ok(RadiusOutput {
        radius,
        l_star,
        tie,
        fixed_point: fp.w,
    })
}

fn cmd_radius(cli: &Cli) -> CliResult<String> {
    let spec = load_spec(cli.spec.as_deref())?;
    let r = radius_output(&spec)?;
    match cli.format {
        Format::Json => render_json(&r),
        Format::Csv => render_csv(
            &["radius", "l_star", "tie"],
            &[vec![num(r.radius), r.l_star.to_string(), r.tie.to_string()]],
        ),
    }
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    b: f64,
    lower: f64,
    upper: f64,
    exact: f64,
    numeric: f64,
}

fn cmd_bounds(cli: &Cli, b: Option<f64>, b_grid: &[f64], n_grid: &[usize]) -> CliResult<String> {
    if b_grid.is_empty() && n_grid.is_empty() {
        return cmd_norm(cli, b);
    }
    if b_grid.is_empty() || n_grid.is_empty() {
        return Err(CliError::new(
            "invalid_argument",
            "a sweep needs both --b-grid and --n-grid",
        ));
    }
    let one = TruncatedSeries::constant(Complex64::new(1.0, 0.0));
    let mut rows = Vec::new();
    for &n in n_grid {
        for &bv in b_grid {
            let phi = TruncatedSeries::new(vec![Complex64::new(0.0, 0.0), Complex64::new(bv, 0.0)]);
            let spec = OperatorSpec::differentiation(one.clone(), phi, n)?;
            let r = norm_report(&spec, cli.trunc as usize, cli.tol, None)?;
            rows.push(SweepRow {
                n,
                b: bv,
                lower: r.lower,
                upper: r.upper,
                exact: exact_norm_bz(Complex64::new(bv, 0.0), n)?,
                numeric: r.numeric,
            });
        }
    }
    match cli.format {
        Format::Json => render_json(&rows),
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        num(r.b),
                        num(r.lower),
                        num(r.upper),
                        num(r.exact),
                        num(r.numeric),
                    ]
                })
                .collect();
            render_csv(&["n", "b", "lower", "upper", "exact", "numeric"], &table)
        }
    }
}

fn load_suite(name: &str) -> CliResult<Vec<SuiteCase>> {
    if name == "default" {
        return Ok(default_suite());
    }
    let text = std::fs::read_to_string(name)
        .map_err(|e| CliError::new("io", format!("cannot read suite {name}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::new("schema", format!("{name}: {e}")))
}

fn cmd_verify(cli: &Cli, suite: &str) -> CliResult<(String, Outcome)> {
    let cases = load_suite(suite)?;
    let reports: Vec<VerificationReport> = run_suite(&cases, cli.timings);
    let outcome = if reports.iter().all(|r| r.pass) {
        Outcome::Ok
    } else {
        Outcome::VerificationFailed
    };
    let text = match cli.format {
        Format::Json => render_json(&reports)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.case_id.clone(),
                        r.tag.clone(),
                        num(r.residual),
                        num(r.tolerance),
                        r.pass.to_string(),
                    ]
                })
                .collect();
            render_csv(&["case", "tag", "residual", "tol", "pass"], &rows)?
        }
    };
    Ok((text, outcome))
}

/// Either a section value or the error that prevented it.
#[derive(Serialize)]
#[serde(untagged)]
enum Section<T> {
    Value(T),
    Unavailable { unavailable: CliError },
}

impl<T> From<CliResult<T>> for Section<T> {
    fn from(r: CliResult<T>) -> Self {
        match r {
            Ok(v) => Section::Value(v),
            Err(e) => Section::Unavailable { unavailable: e },
        }
    }
}

#[derive(Serialize)]
struct FullReport {
    spec: OperatorSpec,
    alpha: f64,
    trunc_degree: usize,
    spectrum: Section<opdiff_core::spectral::SpectrumReport>,
    radius: Section<RadiusOutput>,
    norm: Section<NormOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<f64>,
}

fn cmd_report(cli: &Cli) -> CliResult<String> {
    if cli.format != Format::Json {
        return Err(CliError::new(
            "invalid_argument",
            "report is only available as JSON",
        ));
    }
    let start = Instant::now();
    let spec = load_spec(cli.spec.as_deref())?;
    let dim = cli.trunc as usize;
    let spectrum =
        spectrum_report(&spec, cli.alpha, dim, cli.lmax, cli.tol).map_err(CliError::from);
    let radius = radius_output(&spec);
    let norm = norm_output(cli, &spec, None);
    render_json(&FullReport {
        spec: spec.clone(),
        alpha: cli.alpha,
        trunc_degree: dim,
        spectrum: spectrum.into(),
        radius: radius.into(),
        norm: norm.into(),
        runtime_ms: cli.timings.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    let text = match &cli.command {
        Command::Matrix => cmd_matrix(cli)?,
        Command::Norm { b } => cmd_norm(cli, *b)?,
        Command::Spectrum => cmd_spectrum(cli)?,
        Command::Radius => cmd_radius(cli)?,
        Command::Bounds { b, b_grid, n_grid } => cmd_bounds(cli, *b, b_grid, n_grid)?,
        Command::Verify { suite } => {
            let (text, outcome) = cmd_verify(cli, suite)?;
            emit(&text, cli.out.as_deref()).map_err(CliError::io)?;
            return Ok(outcome);
        }
        Command::Report => cmd_report(cli)?,
    };
    emit(&text, cli.out.as_deref()).map_err(CliError::io)?;
    Ok(Outcome::Ok)
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("OPDIFF_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::new(
            "invalid_argument",
            format!("OPDIFF_THREADS must be a positive integer, got {value:?}"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::new("internal", e.to_string()))
}

fn fail(e: &CliError) -> ExitCode {
    let body = serde_json::json!({ "error": e });
    eprintln!("{body}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Err(e) = configure_threads() {
        return fail(&e);
    }
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(2),
        Err(e) => fail(&e),
    }
}
