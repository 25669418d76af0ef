//! Rank-loss localisation by quadtree subdivision with boundary phase tests
//! and a determinant Newton polish.
//!
//! A cell whose boundary loop classifies as `RANK_LOSS_INSIDE` is split into
//! four until its diameter drops below `loc_tol`. Two rank-loss points in the
//! same cell cancel in the phase sum, so such a pair is only found if an
//! earlier subdivision separates them; `initial_split` controls the starting
//! grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::continuation::GaugeMode;
use crate::embedding::{default_fd_step, genericity_det, Genericity};
use crate::error::{Error, Result};
use crate::linalg::det;
use crate::model::{Bbox, MatrixFamily, PathLoop, Point};
use crate::phase::{analyze_loop, AnalysisOptions, Classification, PhaseReport};

#[derive(Clone, Debug, PartialEq)]
pub struct DetectOptions {
    /// Cells are split until their diameter is at most this.
    pub loc_tol: f64,
    /// Maximum number of loop tests.
    pub max_cells: usize,
    /// Boundary samples per cell loop.
    pub samples: usize,
    /// Relative growth of a cell whose boundary continuation failed.
    pub inflate: f64,
    pub inflate_retries: usize,
    pub newton_iters: usize,
    /// Polish target for `|det A|`; `None` scales `1e-10` by `max(1, ‖A‖_F)^n`.
    pub det_tol: Option<f64>,
    /// The search box is first tiled into `initial_split × initial_split` cells.
    pub initial_split: usize,
    pub analysis: AnalysisOptions,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            loc_tol: 1e-3,
            max_cells: 4096,
            samples: 256,
            inflate: 0.1,
            inflate_retries: 3,
            newton_iters: 50,
            det_tol: None,
            initial_split: 1,
            analysis: AnalysisOptions::default(),
        }
    }
}

/// Outcome of one boundary loop test.
#[derive(Clone, Debug)]
pub struct LoopTest {
    pub classification: Classification,
    pub report: Option<PhaseReport>,
    /// The box actually tested, after any inflation.
    pub tested: Bbox,
    pub inflations: usize,
    pub failure: Option<String>,
}

/// Joint-gauge phase test around the boundary of `b`. Continuation failures
/// on the boundary are retried on inflated boxes.
pub fn loop_test(f: &MatrixFamily, b: Bbox, opts: &DetectOptions) -> LoopTest {
    let mut tested = b;
    let mut last_failure = None;
    for attempt in 0..=opts.inflate_retries {
        let outcome = PathLoop::rect(tested, opts.samples)
            .and_then(|l| analyze_loop(f, &l, GaugeMode::Joint, &opts.analysis));
        match outcome {
            Ok(a) => {
                return LoopTest {
                    classification: a.report.classification,
                    report: Some(a.report),
                    tested,
                    inflations: attempt,
                    failure: None,
                }
            }
            Err(e @ (Error::ContinuationFailed { .. } | Error::NearDegenerate { .. })) => {
                last_failure = Some(e.to_string());
                tested = tested.inflate(opts.inflate);
            }
            Err(e) => {
                last_failure = Some(e.to_string());
                break;
            }
        }
    }
    LoopTest {
        classification: Classification::Inconclusive,
        report: None,
        tested,
        inflations: opts.inflate_retries,
        failure: last_failure,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolishResult {
    pub location: Point,
    pub absdet: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `1e-10 · max(1, ‖A(ξ)‖_F)^n`.
pub fn default_det_tol(f: &MatrixFamily, xi: Point) -> f64 {
    1e-10 * f.eval(xi).frobenius_norm().max(1.0).powi(f.n() as i32)
}

/// Damped Newton iteration on `(Re det A, Im det A) = 0` from `start`.
pub fn polish(
    f: &MatrixFamily,
    start: Point,
    det_tol: f64,
    max_iter: usize,
) -> Result<PolishResult> {
    let absdet = |p: Point| det(&f.eval(p)).map(|d| d.norm());
    let mut x = start;
    let mut d = det(&f.eval(x))?;
    let mut iterations = 0;
    while d.norm() > det_tol && iterations < max_iter {
        iterations += 1;
        let g = genericity_det(f, x, default_fd_step(x))?;
        let j = g.jacobian;
        let jd = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if jd == 0.0 || !jd.is_finite() {
            break;
        }
        // Solve J s = -F.
        let s = [
            -(j[1][1] * d.re - j[0][1] * d.im) / jd,
            -(-j[1][0] * d.re + j[0][0] * d.im) / jd,
        ];
        let current = d.norm();
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= 1.0 / 1024.0 {
            let trial = [x[0] + lambda * s[0], x[1] + lambda * s[1]];
            if absdet(trial)? < current {
                x = trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        d = det(&f.eval(x))?;
    }
    Ok(PolishResult {
        location: x,
        absdet: d.norm(),
        iterations,
        converged: d.norm() <= det_tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectedPoint {
    /// Polished location.
    pub location: Point,
    /// Centre of the final cell, before polishing.
    pub estimate: Point,
    pub cell: Bbox,
    pub polish_residual: f64,
    pub polish_iterations: usize,
    pub genericity: Genericity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InconclusiveCell {
    pub cell: Bbox,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionResult {
    pub points: Vec<DetectedPoint>,
    pub cells_tested: usize,
    pub inconclusive: Vec<InconclusiveCell>,
    pub budget_exhausted: bool,
}

#[derive(Serialize)]
struct PointDoc {
    xy: Point,
    absdet: f64,
    generic: bool,
    estimate: Point,
    #[serde(rename = "box")]
    cell: [f64; 4],
    polish_iterations: usize,
}

#[derive(Serialize)]
struct CellDoc<'a> {
    #[serde(rename = "box")]
    cell: [f64; 4],
    reason: &'a str,
}

#[derive(Serialize)]
struct DetectionDoc<'a> {
    points: Vec<PointDoc>,
    inconclusive: Vec<CellDoc<'a>>,
    cells_tested: usize,
    budget_exhausted: bool,
}

fn box_array(b: &Bbox) -> [f64; 4] {
    [b.xmin, b.xmax, b.ymin, b.ymax]
}

impl DetectionResult {
    pub fn to_json(&self) -> String {
        let doc = DetectionDoc {
            points: self
                .points
                .iter()
                .map(|p| PointDoc {
                    xy: p.location,
                    absdet: p.polish_residual,
                    generic: p.genericity.regular,
                    estimate: p.estimate,
                    cell: box_array(&p.cell),
                    polish_iterations: p.polish_iterations,
                })
                .collect(),
            inconclusive: self
                .inconclusive
                .iter()
                .map(|c| CellDoc {
                    cell: box_array(&c.cell),
                    reason: &c.reason,
                })
                .collect(),
            cells_tested: self.cells_tested,
            budget_exhausted: self.budget_exhausted,
        };
        serde_json::to_string_pretty(&doc).expect("detection serializes")
    }
}

/// Reads the `xy` coordinates of the points in a detection document.
pub fn parse_detection_points(text: &str) -> Result<Vec<Point>> {
    #[derive(serde::Deserialize)]
    struct P {
        xy: Point,
    }
    #[derive(serde::Deserialize)]
    struct D {
        points: Vec<P>,
    }
    let d: D = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    Ok(d.points.into_iter().map(|p| p.xy).collect())
}

/// Finds rank-loss points of `f` inside `b`.
pub fn detect(f: &MatrixFamily, b: Bbox, opts: &DetectOptions) -> Result<DetectionResult> {
    if opts.loc_tol.is_nan()
        || opts.loc_tol <= 0.0
        || opts.initial_split == 0
        || opts.max_cells == 0
    {
        return Err(Error::Domain("invalid detector options".into()));
    }
    let mut level = b.tile(opts.initial_split);
    let mut leaves: Vec<Bbox> = Vec::new();
    let mut inconclusive = Vec::new();
    let mut cells_tested = 0;
    let mut budget_exhausted = false;

    while !level.is_empty() {
        let room = opts.max_cells - cells_tested;
        if level.len() > room {
            budget_exhausted = true;
            for cell in level.drain(room..) {
                inconclusive.push(InconclusiveCell {
                    cell,
                    reason: "not tested: cell budget exhausted".into(),
                });
            }
        }
        cells_tested += level.len();
        let tests: Vec<LoopTest> = level.par_iter().map(|c| loop_test(f, *c, opts)).collect();
        let mut next = Vec::new();
        for (cell, t) in level.iter().zip(tests) {
            match t.classification {
                Classification::RankLossInside => {
                    if t.tested.diameter() <= opts.loc_tol {
                        leaves.push(t.tested);
                    } else {
                        next.extend(t.tested.split4());
                    }
                }
                Classification::NoRankLoss => {}
                Classification::Inconclusive => {
                    let reason = match (&t.failure, &t.report) {
                        (Some(msg), _) => msg.clone(),
                        (None, Some(r)) => format!(
                            "phase sum {:.4} not near 0 or pi (residual {:.3e})",
                            r.sum_mod_2pi, r.residual
                        ),
                        (None, None) => "inconclusive".into(),
                    };
                    inconclusive.push(InconclusiveCell {
                        cell: *cell,
                        reason,
                    });
                }
            }
        }
        level = next;
        if budget_exhausted {
            for cell in level.drain(..) {
                inconclusive.push(InconclusiveCell {
                    cell,
                    reason: "not tested: cell budget exhausted".into(),
                });
            }
        }
    }

    let polished: Vec<Result<(Bbox, PolishResult)>> = leaves
        .par_iter()
        .map(|cell| {
            let c = cell.center();
            let tol = opts.det_tol.unwrap_or_else(|| default_det_tol(f, c));
            polish(f, c, tol, opts.newton_iters).map(|p| (*cell, p))
        })
        .collect();

    let mut points: Vec<DetectedPoint> = Vec::new();
    for item in polished {
        let (cell, p) = item?;
        let dup = points.iter().any(|q| {
            let d = (q.location[0] - p.location[0]).hypot(q.location[1] - p.location[1]);
            d <= opts.loc_tol
        });
        if dup {
            continue;
        }
        if !p.converged || !cell.contains(p.location) {
            inconclusive.push(InconclusiveCell {
                cell,
                reason: format!(
                    "polish did not converge inside the cell (|det| = {:.3e} at ({}, {}))",
                    p.absdet, p.location[0], p.location[1]
                ),
            });
            continue;
        }
        let genericity = genericity_det(f, p.location, default_fd_step(p.location))?;
        points.push(DetectedPoint {
            location: p.location,
            estimate: cell.center(),
            cell,
            polish_residual: p.absdet,
            polish_iterations: p.iterations,
            genericity,
        });
    }

    Ok(DetectionResult {
        points,
        cells_tested,
        inconclusive,
        budget_exhausted,
    })
}
