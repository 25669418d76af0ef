//! `rankloop` command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::continuation::{read_sidecar, GaugeMode};
use crate::detector::{detect, parse_detection_points, DetectOptions};
use crate::embedding::{build_m, diagnose_point, discr_m, eigendec_m, PointDiagnostics};
use crate::error::Error;
use crate::linalg::{discriminant, herm_eig, svd_point, unitarity_defect, ComplexMatrix, C64};
use crate::model::{grid_scan, parse_family, parse_loop, Bbox, MatrixFamily, PathLoop, Point};
use crate::phase::{analyze_loop, format_phase, AnalysisOptions, UV_MISMATCH_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONTINUATION: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

/// Samples used when a loop is given as a box boundary.
pub const BOX_LOOP_SAMPLES: usize = 1024;

#[derive(Debug, Parser)]
#[command(
    name = "rankloop",
    version,
    about = "Smooth SVD phases and rank-loss detection for two-parameter matrix families"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the smallest singular value, gap and |det| on a grid.
    Scan(ScanArgs),
    /// Continue the SVD around a loop and report the accrued phases.
    Loop(LoopArgs),
    /// Locate rank-loss points inside a box.
    Detect(DetectArgs),
    /// Genericity diagnostics and embedding identity checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Family document (JSON).
    #[arg(long)]
    pub family: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// joint, umvd or vmvd.
    #[arg(long, default_value = "joint")]
    pub gauge: GaugeMode,
    /// Loop samples; overrides the loop document
    #[arg(long)]
    pub samples: Option<usize>,
    /// Seed for the random checks of verify
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    /// xmin,xmax,ymin,ymax
    #[arg(long = "box", default_value = "-1,1,-1,1", allow_hyphen_values = true)]
    pub bbox: Bbox,
    /// Grid nodes per axis.
    #[arg(long, default_value_t = 41)]
    pub resolution: usize,
}

#[derive(Debug, Args)]
pub struct LoopArgs {
    #[command(flatten)]
    pub common: Common,
    /// Loop document (JSON).
    #[arg(long = "loop", conflicts_with = "bbox")]
    pub loop_file: Option<PathBuf>,
    /// Use the boundary of this box as the loop.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bbox: Option<Bbox>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "box", default_value = "-1,1,-1,1", allow_hyphen_values = true)]
    pub bbox: Bbox,
    #[arg(long, default_value_t = 1e-3)]
    pub loc_tol: f64,
    #[arg(long, default_value_t = 4096)]
    pub max_cells: usize,
    /// Tile the box into k×k cells before subdividing.
    #[arg(long, default_value_t = 1)]
    pub initial_split: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Candidate point x,y.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "detection")]
    pub point: Option<String>,
    /// Detection document whose points are verified.
    #[arg(long)]
    pub detection: Option<PathBuf>,
    /// Binary trace sidecar to check.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Random embedding checks.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Domain(_) | Error::Dimension(_) => EXIT_CONFIG,
            Error::ContinuationFailed { .. }
            | Error::NearDegenerate { .. }
            | Error::StepTooLarge { .. } => EXIT_CONTINUATION,
            _ => EXIT_OTHER,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError {
            code: EXIT_OTHER,
            message: e.to_string(),
        }
    }
}

type CliResult = std::result::Result<(), CliError>;

fn read_text(path: &Path, what: &str) -> std::result::Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {what} file '{}': {e}", path.display())))
}

fn load_family(path: &Path) -> std::result::Result<MatrixFamily, CliError> {
    let text = read_text(path, "family")?;
    parse_family(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn prepare_out(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::config(format!(
            "cannot create output directory '{}': {e}",
            dir.display()
        ))
    })
}

fn parse_point(s: &str) -> std::result::Result<Point, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::config(format!("bad point '{s}': {e}")))?;
    match v.as_slice() {
        [x, y] if x.is_finite() && y.is_finite() => Ok([*x, *y]),
        _ => Err(CliError::config(format!("bad point '{s}': expected x,y"))),
    }
}

/// Parses `args` and runs the command, writing the human summary to `out`.
/// Returns the process exit code.
pub fn run_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult {
    match &cli.command {
        Command::Scan(a) => cmd_scan(a, out),
        Command::Loop(a) => cmd_loop(a, out),
        Command::Detect(a) => cmd_detect(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

fn cmd_scan(a: &ScanArgs, out: &mut dyn Write) -> CliResult {
    let f = load_family(&a.common.family)?;
    if a.resolution < 2 {
        return Err(CliError::config("--resolution must be at least 2"));
    }
    prepare_out(&a.common.out)?;
    let s = grid_scan(&f, a.bbox, a.resolution, a.resolution)?;
    fs::write(a.common.out.join("surface.csv"), s.to_csv())?;
    let m = s.argmin_sigma();
    let summary = json!({
        "box": [a.bbox.xmin, a.bbox.xmax, a.bbox.ymin, a.bbox.ymax],
        "resolution": a.resolution,
        "nodes": s.nodes.len(),
        "argmin_sigma": {"xy": [m.x, m.y], "sigma_min": m.sigma_min, "absdet": m.absdet},
        "min_gap": s.min_gap(),
    });
    fs::write(
        a.common.out.join("scan_summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    writeln!(
        out,
        "{} nodes; smallest sigma_{} = {:.6e} at ({:.6}, {:.6}); min gap {:.6e}",
        s.nodes.len(),
        f.n(),
        m.sigma_min,
        m.x,
        m.y,
        s.min_gap()
    )?;
    Ok(())
}

fn cmd_loop(a: &LoopArgs, out: &mut dyn Write) -> CliResult {
    let f = load_family(&a.common.family)?;
    let mut l = match (&a.loop_file, &a.bbox) {
        (Some(p), _) => {
            let text = read_text(p, "loop")?;
            parse_loop(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
        }
        (None, Some(b)) => PathLoop::rect(*b, BOX_LOOP_SAMPLES)?,
        (None, None) => return Err(CliError::config("loop needs --loop FILE or --box")),
    };
    if let Some(n) = a.common.samples {
        l = l.with_samples(n)?;
    }
    prepare_out(&a.common.out)?;
    let analysis = analyze_loop(&f, &l, a.common.gauge, &AnalysisOptions::default())?;
    let (rep, tr) = (&analysis.report, &analysis.trace);
    fs::write(a.common.out.join("trace.csv"), tr.to_csv())?;
    let mut bin = io::BufWriter::new(fs::File::create(a.common.out.join("trace.bin"))?);
    tr.write_sidecar(&mut bin)?;
    bin.flush()?;
    fs::write(a.common.out.join("report.json"), rep.to_json())?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "gauge {}, {} samples, {} steps ({} rejected)",
        a.common.gauge,
        analysis.path.samples,
        tr.steps(),
        tr.rejected_steps
    );
    for (j, b) in rep.beta.iter().enumerate() {
        let _ = writeln!(s, "beta_{}  {}", j + 1, format_phase(*b));
    }
    let _ = writeln!(s, "sum     {}", format_phase(rep.sum_mod_2pi));
    let _ = writeln!(s, "classification {}", rep.classification);
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn cmd_detect(a: &DetectArgs, out: &mut dyn Write) -> CliResult {
    let f = load_family(&a.common.family)?;
    let mut opts = DetectOptions {
        loc_tol: a.loc_tol,
        max_cells: a.max_cells,
        initial_split: a.initial_split,
        ..DetectOptions::default()
    };
    if let Some(n) = a.common.samples {
        if n < crate::model::MIN_SAMPLES {
            return Err(CliError::config(format!(
                "--samples must be at least {}",
                crate::model::MIN_SAMPLES
            )));
        }
        opts.samples = n;
    }
    if opts.loc_tol.is_nan()
        || opts.loc_tol <= 0.0
        || opts.max_cells == 0
        || opts.initial_split == 0
    {
        return Err(CliError::config(
            "--loc-tol, --max-cells and --initial-split must be positive",
        ));
    }
    prepare_out(&a.common.out)?;
    let r = detect(&f, a.bbox, &opts)?;
    fs::write(a.common.out.join("detection.json"), r.to_json())?;
    writeln!(
        out,
        "{} points, {} cells tested, {} inconclusive",
        r.points.len(),
        r.cells_tested,
        r.inconclusive.len()
    )?;
    for p in &r.points {
        writeln!(
            out,
            "  ({:.10}, {:.10})  |det| {:.3e}  generic {}",
            p.location[0], p.location[1], p.polish_residual, p.genericity.regular
        )?;
    }
    if r.budget_exhausted {
        return Err(CliError {
            code: EXIT_BUDGET,
            message: format!(
                "cell budget of {} exhausted; partial result written",
                opts.max_cells
            ),
        });
    }
    Ok(())
}

/// Tolerances of the embedding identity checks.
const SPECTRUM_TOL: f64 = 1e-10;
const EIGVEC_TOL: f64 = 1e-10;
const DISCR_TOL: f64 = 1e-8;
const TRACE_UNITARY_TOL: f64 = 1e-10;
const TRACE_RECON_TOL: f64 = 1e-10;

#[derive(Debug, Serialize)]
pub struct IdentityCheck {
    pub eps: f64,
    pub spectrum_error: f64,
    /// `None` when the singular values are too close for the closed form.
    pub eigvec_residual: Option<f64>,
    pub discriminant_rel_error: f64,
    pub passed: bool,
}

/// Compares the spectrum, closed-form eigenvectors and discriminant of
/// `M(A, eps)` against the singular values of `A`.
pub fn identity_check(a: &ComplexMatrix, eps: f64) -> crate::error::Result<IdentityCheck> {
    let m = build_m(a, eps)?;
    let t = svd_point(a)?;
    let e = herm_eig(&m)?;
    let mut expect: Vec<f64> = t
        .sigma
        .iter()
        .map(|s| s.hypot(eps))
        .chain(t.sigma.iter().map(|s| -s.hypot(eps)))
        .collect();
    expect.sort_by(|x, y| y.total_cmp(x));
    let spectrum_error = e
        .lambda
        .iter()
        .zip(&expect)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let eigvec_residual = eigendec_m(&t, eps).ok().map(|ed| {
        let d = ed.w.adjoint_mul(&(&m * &ed.w));
        d.sub(&ComplexMatrix::from_real_diag(&ed.eigenvalues()))
            .frobenius_norm()
            / m.frobenius_norm().max(f64::MIN_POSITIVE)
    });
    let closed = discr_m(&t.sigma, eps);
    let numeric = discriminant(&e.lambda);
    let discriminant_rel_error = if closed == 0.0 {
        numeric.abs()
    } else {
        ((numeric - closed) / closed).abs()
    };
    let scale = 1.0 + a.frobenius_norm();
    let passed = spectrum_error <= SPECTRUM_TOL * scale
        && eigvec_residual.is_none_or(|r| r <= EIGVEC_TOL)
        && discriminant_rel_error <= DISCR_TOL;
    Ok(IdentityCheck {
        eps,
        spectrum_error,
        eigvec_residual,
        discriminant_rel_error,
        passed,
    })
}

/// Complex matrix with entries uniform in the unit square.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let data = (0..n * n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    ComplexMatrix::from_vec(n, n, data).expect("finite entries")
}

#[derive(Serialize)]
struct PointReport {
    diagnostics: PointDiagnostics,
    identities: Vec<IdentityCheck>,
}

#[derive(Serialize)]
struct TraceReport {
    samples: usize,
    max_unitarity_defect: f64,
    max_reconstruction_error: f64,
    endpoint_uv_mismatch: f64,
    passed: bool,
}

fn check_trace(
    f: &MatrixFamily,
    path: &Path,
    gauge: GaugeMode,
) -> std::result::Result<TraceReport, CliError> {
    let bytes = fs::read(path).map_err(|e| {
        CliError::config(format!("cannot read trace file '{}': {e}", path.display()))
    })?;
    let samples = read_sidecar(bytes.as_slice())
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if samples.len() < 2 || samples[0].svd.n() != f.n() {
        return Err(CliError::config(format!(
            "{}: trace does not match the family",
            path.display()
        )));
    }
    let mut unit: f64 = 0.0;
    let mut recon: f64 = 0.0;
    for s in &samples {
        unit = unit
            .max(unitarity_defect(&s.svd.u))
            .max(unitarity_defect(&s.svd.v));
        let a = f.eval(s.xi);
        recon =
            recon.max(s.svd.reconstruct().sub(&a).frobenius_norm() / (1.0 + a.frobenius_norm()));
    }
    let (first, last) = (&samples[0].svd, &samples[samples.len() - 1].svd);
    let p = first.u.adjoint_mul(&last.u).diagonal();
    let q = first.v.adjoint_mul(&last.v).diagonal();
    let mismatch = p
        .iter()
        .zip(&q)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let symmetric = gauge != GaugeMode::Joint || mismatch <= UV_MISMATCH_TOL;
    Ok(TraceReport {
        samples: samples.len(),
        max_unitarity_defect: unit,
        max_reconstruction_error: recon,
        endpoint_uv_mismatch: mismatch,
        passed: unit <= TRACE_UNITARY_TOL && recon <= TRACE_RECON_TOL && symmetric,
    })
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult {
    let f = load_family(&a.common.family)?;
    let points: Vec<Point> = match (&a.point, &a.detection) {
        (Some(p), _) => vec![parse_point(p)?],
        (None, Some(d)) => {
            let text = read_text(d, "detection")?;
            parse_detection_points(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", d.display())))?
        }
        (None, None) if a.trace.is_some() => Vec::new(),
        (None, None) => {
            return Err(CliError::config(
                "verify needs --point x,y, --detection FILE or --trace FILE",
            ))
        }
    };
    prepare_out(&a.common.out)?;

    let mut all_passed = true;
    let mut point_reports = Vec::with_capacity(points.len());
    for p in &points {
        let diagnostics = diagnose_point(&f, *p)?;
        let a_p = f.eval(*p);
        let identities = [0.25, 1.0]
            .iter()
            .map(|&eps| identity_check(&a_p, eps))
            .collect::<crate::error::Result<Vec<_>>>()?;
        all_passed &= identities.iter().all(|c| c.passed);
        point_reports.push(PointReport {
            diagnostics,
            identities,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let mut random_failed = 0;
    let mut worst_spectrum: f64 = 0.0;
    let mut worst_discr: f64 = 0.0;
    for _ in 0..a.trials {
        let m = random_matrix(&mut rng, f.n());
        let eps = rng.gen_range(-2.0..2.0);
        let c = identity_check(&m, eps)?;
        worst_spectrum = worst_spectrum.max(c.spectrum_error);
        worst_discr = worst_discr.max(c.discriminant_rel_error);
        if !c.passed {
            random_failed += 1;
        }
    }
    all_passed &= random_failed == 0;

    let trace = match &a.trace {
        Some(t) => Some(check_trace(&f, t, a.common.gauge)?),
        None => None,
    };
    all_passed &= trace.as_ref().is_none_or(|t| t.passed);

    let doc = json!({
        "points": point_reports,
        "random_checks": {
            "seed": a.common.seed,
            "trials": a.trials,
            "failed": random_failed,
            "max_spectrum_error": worst_spectrum,
            "max_discriminant_rel_error": worst_discr,
        },
        "trace": trace,
        "identities_passed": all_passed,
    });
    fs::write(
        a.common.out.join("diagnostics.json"),
        serde_json::to_string_pretty(&doc).expect("diagnostics serialize"),
    )?;

    for r in &point_reports {
        let d = &r.diagnostics;
        writeln!(
            out,
            "({:.10}, {:.10}): det-regular {}, sigma-probe {}, discr-probe {}{}",
            d.xy[0],
            d.xy[1],
            d.genericity.regular,
            d.sigma_probe.positive,
            d.discr_probe.positive,
            if d.generic { "" } else { "  [NOT GENERIC]" }
        )?;
    }
    writeln!(
        out,
        "random embedding checks: {}/{} passed",
        a.trials - random_failed,
        a.trials
    )?;
    if let Some(t) = &trace {
        writeln!(
            out,
            "trace checks: {}",
            if t.passed { "passed" } else { "FAILED" }
        )?;
    }
    if !all_passed {
        return Err(CliError {
            code: EXIT_VERIFICATION,
            message: "identity checks failed".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_check_diag() {
        let c = identity_check(&ComplexMatrix::from_real_diag(&[2.0, 1.0]), 0.0).unwrap();
        assert!(c.passed && c.spectrum_error < 1e-14);
        let c = identity_check(&ComplexMatrix::from_real_diag(&[1.0, 0.0]), 0.25).unwrap();
        assert!(c.passed && c.eigvec_residual.is_none());
    }

    #[test]
    fn point_parsing() {
        assert_eq!(parse_point("0.5,-1").unwrap(), [0.5, -1.0]);
        assert!(parse_point("1").is_err());
        assert!(parse_point("a,b").is_err());
    }

    #[test]
    fn clap_usage_error_is_config() {
        let mut o = Vec::new();
        let mut e = Vec::new();
        assert_eq!(
            run_with_args(["rankloop", "scan"], &mut o, &mut e),
            EXIT_CONFIG
        );
        assert_eq!(
            run_with_args(["rankloop", "frobnicate"], &mut o, &mut e),
            EXIT_CONFIG
        );
        assert_eq!(
            run_with_args(["rankloop", "--help"], &mut o, &mut e),
            EXIT_OK
        );
    }
}
