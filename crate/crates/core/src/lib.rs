//! Smooth gauge-fixed SVD continuation of two-parameter complex matrix
//! families, phase accumulation around closed loops, and rank-loss point
//! detection.
//!
//! ```
//! use rankloop::{continue_loop, ComplexMatrix, ContinuationOptions, GaugeMode, MatrixFamily, PathLoop, C64};
//! use rankloop::phase::{accrued_phases, format_phase, CLASS_TOL};
//!
//! // A(x, y) = [[1, 1], [0, x - iy]] loses rank at the origin.
//! let f = MatrixFamily::affine(
//!     ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]]).unwrap(),
//!     ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]).unwrap(),
//!     ComplexMatrix::from_diag(&[C64::new(0.0, 0.0), C64::new(0.0, -1.0)]),
//! )
//! .unwrap();
//! let l = PathLoop::circle([0.0, 0.0], 1.0, 512).unwrap();
//! let trace = continue_loop(&f, &l, GaugeMode::Joint, &ContinuationOptions::default()).unwrap();
//! let report = accrued_phases(&trace, CLASS_TOL).unwrap();
//! assert_eq!(format_phase(report.sum_mod_2pi), "+3.1416");
//! ```

pub mod cli;
pub mod continuation;
pub mod detector;
pub mod embedding;
pub mod error;
pub mod linalg;
pub mod model;
pub mod phase;

pub use continuation::{continue_loop, ContinuationOptions, ContinuationTrace, GaugeMode};
pub use detector::{detect, DetectOptions, DetectionResult};
pub use error::{Error, Result};
pub use linalg::{svd_point, ComplexMatrix, SvdTriple, C64};
pub use model::{parse_family, parse_loop, Bbox, MatrixFamily, PathLoop, Point};
pub use phase::{accrued_phases, analyze_loop, Classification, PhaseReport};
