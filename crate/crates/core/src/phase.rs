//! Accrued phases of a closed trace and the phase-sum loop test.

use std::f64::consts::PI;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::continuation::{
    continue_loop, wrap_angle, ContinuationOptions, ContinuationTrace, GaugeMode,
};
use crate::error::{Error, Result};
use crate::model::{MatrixFamily, PathLoop};

/// Default classification tolerance in radians.
pub const CLASS_TOL: f64 = 0.3;
/// Largest tolerated off-diagonal magnitude of `U(0)^* U(1)`.
pub const ENDPOINT_OFFDIAG_TOL: f64 = 1e-6;
/// Largest tolerated mismatch between the diagonals of `U(0)^* U(1)` and `V(0)^* V(1)`.
pub const UV_MISMATCH_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    RankLossInside,
    NoRankLoss,
    Inconclusive,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::RankLossInside => "RANK_LOSS_INSIDE",
            Classification::NoRankLoss => "NO_RANK_LOSS",
            Classification::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Classification {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseDiagnostics {
    pub gauge: GaugeMode,
    pub samples: usize,
    pub steps: usize,
    pub rejected_steps: usize,
    pub min_gap: f64,
    pub min_sigma: f64,
    pub min_correlation: f64,
    /// Largest off-diagonal magnitude of `U(0)^* U(1)` and `V(0)^* V(1)`.
    pub endpoint_offdiag: f64,
    /// Largest difference between the two endpoint diagonals.
    pub uv_mismatch: f64,
    pub refinements: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub beta: Vec<f64>,
    /// Per-column unwrapped phases; `None` when the trace is too coarse.
    pub beta_unwrapped: Option<Vec<f64>>,
    pub sum_mod_2pi: f64,
    pub classification: Classification,
    /// Distance of the sum to the nearest of `0` and `π`.
    pub residual: f64,
    pub diagnostics: PhaseDiagnostics,
}

impl PhaseReport {
    /// Single-object JSON export.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Formats a phase with four decimals and explicit sign. Values that round
/// to `−π` are shown as `+π` and negative zero as `+0.0000`, matching the
/// `(−π, π]` branch.
pub fn format_phase(x: f64) -> String {
    let s = format!("{x:+.4}");
    match s.as_str() {
        "-0.0000" => "+0.0000".to_string(),
        "-3.1416" => "+3.1416".to_string(),
        _ => s,
    }
}

/// Distance of `sum` (already in `(−π, π]`) to the nearest of `0` and `π`.
pub fn residual(sum: f64) -> f64 {
    let a = wrap_angle(sum).abs();
    a.min(PI - a)
}

/// Classifies a phase sum against `0` and `π` with tolerance `class_tol`.
pub fn classify_sum(sum: f64, class_tol: f64) -> Classification {
    let a = wrap_angle(sum).abs();
    if PI - a <= class_tol {
        Classification::RankLossInside
    } else if a <= class_tol {
        Classification::NoRankLoss
    } else {
        Classification::Inconclusive
    }
}

/// Classifies a report: only joint-gauge traces whose endpoint frames are
/// diagonal and consistent produce a definite answer.
pub fn classify(report: &PhaseReport, class_tol: f64) -> Classification {
    let d = &report.diagnostics;
    if d.gauge != GaugeMode::Joint
        || d.endpoint_offdiag.is_nan()
        || d.endpoint_offdiag > ENDPOINT_OFFDIAG_TOL
        || d.uv_mismatch.is_nan()
        || d.uv_mismatch > UV_MISMATCH_TOL
    {
        return Classification::Inconclusive;
    }
    classify_sum(report.sum_mod_2pi, class_tol)
}

fn ensure_closed(trace: &ContinuationTrace) -> Result<()> {
    if !trace.closed || trace.samples.len() < 2 || trace.last().t != 1.0 {
        return Err(Error::Contract("trace is not closed".into()));
    }
    Ok(())
}

/// Branch `(−π, π]` angle, mapping `−π` to `π`.
fn branch(a: f64) -> f64 {
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Accrued phases `β_j = arg (U(0)^* U(1))_jj` with classification.
pub fn accrued_phases(trace: &ContinuationTrace, class_tol: f64) -> Result<PhaseReport> {
    ensure_closed(trace)?;
    let (p, q) = trace.endpoint_overlaps();
    let n = trace.n();
    let pd = p.diagonal();
    let qd = q.diagonal();
    let beta: Vec<f64> = pd.iter().map(|z| branch(z.arg())).collect();
    let uv_mismatch = pd
        .iter()
        .zip(&qd)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let endpoint_offdiag = p.max_abs_off_diagonal().max(q.max_abs_off_diagonal());
    let total: f64 = beta.iter().sum();
    let sum = branch(wrap_angle(total));

    let beta_unwrapped = (0..n)
        .map(|j| unwrapped_phase(trace, j))
        .collect::<Result<Vec<_>>>()
        .ok();

    let mut report = PhaseReport {
        beta,
        beta_unwrapped,
        sum_mod_2pi: sum,
        classification: Classification::Inconclusive,
        residual: residual(sum),
        diagnostics: PhaseDiagnostics {
            gauge: trace.gauge,
            samples: trace.samples.len(),
            steps: trace.steps(),
            rejected_steps: trace.rejected_steps,
            min_gap: trace.min_gap(),
            min_sigma: trace.min_sigma(),
            min_correlation: trace.min_correlation(),
            endpoint_offdiag,
            uv_mismatch,
            refinements: 0,
        },
    };
    report.classification = classify(&report, class_tol);
    Ok(report)
}

/// Accrued phase of column `j` without branch reduction.
///
/// Follows the continuous argument of `t ↦ u_j(0)^* u_j(t)` along the trace,
/// summing wrapped increments. The overlap ends at `e^{iβ_j}`, so the result
/// equals `β_j` modulo `2π`; whole turns of the overlap around zero are kept.
pub fn unwrapped_phase(trace: &ContinuationTrace, j: usize) -> Result<f64> {
    ensure_closed(trace)?;
    if j >= trace.n() {
        return Err(Error::Dimension(format!("column {j} out of range")));
    }
    let start = &trace.first().svd.u;
    let mut prev = 0.0;
    let mut total = 0.0;
    for (k, s) in trace.samples.iter().enumerate().skip(1) {
        let cur = start.column_dot(j, &s.svd.u, j).arg();
        let inc = wrap_angle(cur - prev);
        if inc.abs() >= PI / 2.0 {
            return Err(Error::RefinementNeeded {
                column: j,
                step: k - 1,
                increment: inc,
            });
        }
        total += inc;
        prev = cur;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub continuation: ContinuationOptions,
    pub class_tol: f64,
    /// Rounds of sample doubling tried while the result is inconclusive.
    pub max_refinements: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            continuation: ContinuationOptions::default(),
            class_tol: CLASS_TOL,
            max_refinements: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoopAnalysis {
    pub report: PhaseReport,
    pub trace: ContinuationTrace,
    pub path: PathLoop,
}

/// Continues around `l` and classifies it. Inconclusive joint-gauge results
/// are retried with doubled sample counts up to `max_refinements` times.
pub fn analyze_loop(
    f: &MatrixFamily,
    l: &PathLoop,
    gauge: GaugeMode,
    opts: &AnalysisOptions,
) -> Result<LoopAnalysis> {
    let mut path = *l;
    let mut round = 0;
    loop {
        let trace = continue_loop(f, &path, gauge, &opts.continuation)?;
        let mut report = accrued_phases(&trace, opts.class_tol)?;
        report.diagnostics.refinements = round;
        let done = gauge != GaugeMode::Joint
            || report.classification != Classification::Inconclusive
            || round >= opts.max_refinements;
        if done {
            return Ok(LoopAnalysis {
                report,
                trace,
                path,
            });
        }
        round += 1;
        path = path.with_samples(path.samples * 2)?;
    }
}
