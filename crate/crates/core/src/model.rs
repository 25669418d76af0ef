//! Two-parameter matrix families, closed loops in the parameter plane and
//! the sigma-surface scan, together with their JSON/CSV formats.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det, svd_point, ComplexMatrix, C64};

/// A point `(x, y)` of the parameter plane.
pub type Point = [f64; 2];

/// One polynomial term `x^jx y^ky M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub jx: u32,
    pub ky: u32,
    pub matrix: ComplexMatrix,
}

/// Polynomial family `A(x, y) = sum_{j,k} x^j y^k M_{jk}` of `n × n` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixFamily {
    n: usize,
    terms: Vec<Term>,
}

impl MatrixFamily {
    pub fn new(n: usize, terms: Vec<Term>) -> Result<Self> {
        if n == 0 || n > crate::linalg::MAX_DIM {
            return Err(Error::Dimension(format!(
                "family size n = {n} out of range"
            )));
        }
        let mut seen = BTreeSet::new();
        for (i, t) in terms.iter().enumerate() {
            if t.matrix.rows() != n || t.matrix.cols() != n {
                return Err(Error::parse(
                    format!("terms[{i}].matrix"),
                    format!(
                        "expected {n}x{n}, got {}x{}",
                        t.matrix.rows(),
                        t.matrix.cols()
                    ),
                ));
            }
            if !seen.insert((t.jx, t.ky)) {
                return Err(Error::parse(
                    format!("terms[{i}]"),
                    format!("duplicate exponent pair ({}, {})", t.jx, t.ky),
                ));
            }
        }
        Ok(MatrixFamily { n, terms })
    }

    /// Affine family `M0 + x M1 + y M2`.
    pub fn affine(m0: ComplexMatrix, m1: ComplexMatrix, m2: ComplexMatrix) -> Result<Self> {
        let n = m0.rows();
        Self::new(
            n,
            vec![
                Term {
                    jx: 0,
                    ky: 0,
                    matrix: m0,
                },
                Term {
                    jx: 1,
                    ky: 0,
                    matrix: m1,
                },
                Term {
                    jx: 0,
                    ky: 1,
                    matrix: m2,
                },
            ],
        )
    }

    pub fn constant(m: ComplexMatrix) -> Result<Self> {
        Self::new(
            m.rows(),
            vec![Term {
                jx: 0,
                ky: 0,
                matrix: m,
            }],
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, p: Point) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.n, self.n);
        for t in &self.terms {
            let w = p[0].powi(t.jx as i32) * p[1].powi(t.ky as i32);
            if w != 0.0 {
                out.axpy(C64::new(w, 0.0), &t.matrix);
            }
        }
        out
    }

    /// Analytic derivative of `A` at `p` along `dir`. The result is linear in
    /// `dir`, so a non-unit vector yields the correspondingly scaled derivative.
    pub fn eval_derivative(&self, p: Point, dir: Point) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.n, self.n);
        let [x, y] = p;
        for t in &self.terms {
            let mut w = 0.0;
            if t.jx > 0 {
                w += t.jx as f64 * x.powi(t.jx as i32 - 1) * y.powi(t.ky as i32) * dir[0];
            }
            if t.ky > 0 {
                w += t.ky as f64 * x.powi(t.jx as i32) * y.powi(t.ky as i32 - 1) * dir[1];
            }
            if w != 0.0 {
                out.axpy(C64::new(w, 0.0), &t.matrix);
            }
        }
        out
    }

    /// Serialises to the family JSON document.
    pub fn to_json(&self) -> String {
        let doc = FamilyDoc {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| TermDoc {
                    jx: t.jx,
                    ky: t.ky,
                    matrix: (0..self.n)
                        .map(|i| {
                            (0..self.n)
                                .map(|j| {
                                    let z = t.matrix[(i, j)];
                                    [z.re, z.im]
                                })
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("family serialisation")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyDoc {
    n: usize,
    terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    jx: u32,
    ky: u32,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::parse(
        format!("line {} column {}", e.line(), e.column()),
        e.to_string(),
    )
}

/// Parses a family document:
/// `{"n": 2, "terms": [{"jx": 0, "ky": 0, "matrix": [[[re, im], ...], ...]}]}`.
pub fn parse_family(text: &str) -> Result<MatrixFamily> {
    let doc: FamilyDoc = serde_json::from_str(text).map_err(json_error)?;
    let mut terms = Vec::with_capacity(doc.terms.len());
    for (i, t) in doc.terms.into_iter().enumerate() {
        if t.matrix.len() != doc.n {
            return Err(Error::parse(
                format!("terms[{i}].matrix"),
                format!("{} rows, expected {}", t.matrix.len(), doc.n),
            ));
        }
        let mut data = Vec::with_capacity(doc.n * doc.n);
        for (r, row) in t.matrix.iter().enumerate() {
            if row.len() != doc.n {
                return Err(Error::parse(
                    format!("terms[{i}].matrix[{r}]"),
                    format!("{} entries, expected {}", row.len(), doc.n),
                ));
            }
            data.extend(row.iter().map(|&[re, im]| C64::new(re, im)));
        }
        let matrix = ComplexMatrix::from_vec(doc.n, doc.n, data)
            .map_err(|e| Error::parse(format!("terms[{i}].matrix"), e.to_string()))?;
        terms.push(Term {
            jx: t.jx,
            ky: t.ky,
            matrix,
        });
    }
    MatrixFamily::new(doc.n, terms)
}

/// Axis-aligned rectangle `[xmin, xmax] × [ymin, ymax]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bbox {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let b = Bbox {
            xmin,
            xmax,
            ymin,
            ymax,
        };
        if ![xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite()) || xmin >= xmax || ymin >= ymax {
            return Err(Error::Domain(format!("degenerate box {b:?}")));
        }
        Ok(b)
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point {
        [0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax)]
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.xmin && p[0] <= self.xmax && p[1] >= self.ymin && p[1] <= self.ymax
    }

    pub fn intersects(&self, o: &Bbox) -> bool {
        self.xmin <= o.xmax && o.xmin <= self.xmax && self.ymin <= o.ymax && o.ymin <= self.ymax
    }

    /// Grows each side by `frac` of the corresponding extent (half on either side).
    pub fn inflate(&self, frac: f64) -> Bbox {
        let dx = 0.5 * frac * self.width();
        let dy = 0.5 * frac * self.height();
        Bbox {
            xmin: self.xmin - dx,
            xmax: self.xmax + dx,
            ymin: self.ymin - dy,
            ymax: self.ymax + dy,
        }
    }

    /// Quadrants in canonical order: SW, SE, NW, NE.
    pub fn split4(&self) -> [Bbox; 4] {
        let [cx, cy] = self.center();
        [
            Bbox {
                xmin: self.xmin,
                xmax: cx,
                ymin: self.ymin,
                ymax: cy,
            },
            Bbox {
                xmin: cx,
                xmax: self.xmax,
                ymin: self.ymin,
                ymax: cy,
            },
            Bbox {
                xmin: self.xmin,
                xmax: cx,
                ymin: cy,
                ymax: self.ymax,
            },
            Bbox {
                xmin: cx,
                xmax: self.xmax,
                ymin: cy,
                ymax: self.ymax,
            },
        ]
    }

    /// Regular `k × k` tiling, row by row from the bottom-left.
    pub fn tile(&self, k: usize) -> Vec<Bbox> {
        let k = k.max(1);
        let mut out = Vec::with_capacity(k * k);
        for iy in 0..k {
            for ix in 0..k {
                let x0 = self.xmin + self.width() * ix as f64 / k as f64;
                let x1 = self.xmin + self.width() * (ix + 1) as f64 / k as f64;
                let y0 = self.ymin + self.height() * iy as f64 / k as f64;
                let y1 = self.ymin + self.height() * (iy + 1) as f64 / k as f64;
                out.push(Bbox {
                    xmin: x0,
                    xmax: x1,
                    ymin: y0,
                    ymax: y1,
                });
            }
        }
        out
    }
}

impl FromStr for Bbox {
    type Err = Error;

    /// Parses `xmin,xmax,ymin,ymax`.
    fn from_str(s: &str) -> Result<Self> {
        let vals: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse("box", e.to_string()))?;
        if vals.len() != 4 {
            return Err(Error::parse("box", "expected xmin,xmax,ymin,ymax"));
        }
        Bbox::new(vals[0], vals[1], vals[2], vals[3])
    }
}

/// Shape of a closed parameter curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LoopKind {
    Circle {
        center: Point,
        radius: f64,
    },
    /// Boundary of the box, traversed counterclockwise from `(xmin, ymin)`.
    Rect(Bbox),
}

/// Closed curve `gamma: [0, 1] -> R^2` with a nominal sample count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLoop {
    pub kind: LoopKind,
    pub samples: usize,
}

/// Point on a loop together with `d gamma / dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopPoint {
    pub xi: Point,
    pub tangent: Point,
}

pub const MIN_SAMPLES: usize = 8;

impl PathLoop {
    pub fn circle(center: Point, radius: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::Domain(format!("invalid circle radius {radius}")));
        }
        Self::checked(LoopKind::Circle { center, radius }, samples)
    }

    pub fn rect(b: Bbox, samples: usize) -> Result<Self> {
        let b = Bbox::new(b.xmin, b.xmax, b.ymin, b.ymax)?;
        Self::checked(LoopKind::Rect(b), samples)
    }

    fn checked(kind: LoopKind, samples: usize) -> Result<Self> {
        if samples < MIN_SAMPLES {
            return Err(Error::Domain(format!(
                "loop needs at least {MIN_SAMPLES} samples, got {samples}"
            )));
        }
        Ok(PathLoop { kind, samples })
    }

    pub fn with_samples(&self, samples: usize) -> Result<Self> {
        Self::checked(self.kind, samples)
    }

    /// `gamma(t)` and its tangent. `t` is taken modulo 1, so `t = 0` and `t = 1`
    /// give bit-identical results.
    pub fn point(&self, t: f64) -> LoopPoint {
        let t = t - t.floor();
        match self.kind {
            LoopKind::Circle { center, radius } => {
                let (s, c) = (2.0 * PI * t).sin_cos();
                LoopPoint {
                    xi: [center[0] + radius * c, center[1] + radius * s],
                    tangent: [-2.0 * PI * radius * s, 2.0 * PI * radius * c],
                }
            }
            LoopKind::Rect(b) => {
                let (w, h) = (b.width(), b.height());
                let perim = 2.0 * (w + h);
                let s = t * perim;
                if s < w {
                    LoopPoint {
                        xi: [b.xmin + s, b.ymin],
                        tangent: [perim, 0.0],
                    }
                } else if s < w + h {
                    LoopPoint {
                        xi: [b.xmax, b.ymin + (s - w)],
                        tangent: [0.0, perim],
                    }
                } else if s < 2.0 * w + h {
                    LoopPoint {
                        xi: [b.xmax - (s - w - h), b.ymax],
                        tangent: [-perim, 0.0],
                    }
                } else {
                    LoopPoint {
                        xi: [b.xmin, b.ymax - (s - 2.0 * w - h)],
                        tangent: [0.0, -perim],
                    }
                }
            }
        }
    }

    /// Whether `p` lies in the region bounded by the loop.
    pub fn encloses(&self, p: Point) -> bool {
        match self.kind {
            LoopKind::Circle { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) < radius
            }
            LoopKind::Rect(b) => p[0] > b.xmin && p[0] < b.xmax && p[1] > b.ymin && p[1] < b.ymax,
        }
    }

    /// Distance from `p` to the curve itself.
    pub fn distance_to_curve(&self, p: Point) -> f64 {
        match self.kind {
            LoopKind::Circle { center, radius } => {
                ((p[0] - center[0]).hypot(p[1] - center[1]) - radius).abs()
            }
            LoopKind::Rect(b) => {
                let dx = (b.xmin - p[0]).max(p[0] - b.xmax).max(0.0);
                let dy = (b.ymin - p[1]).max(p[1] - b.ymax).max(0.0);
                if dx > 0.0 || dy > 0.0 {
                    dx.hypot(dy)
                } else {
                    (p[0] - b.xmin)
                        .min(b.xmax - p[0])
                        .min(p[1] - b.ymin)
                        .min(b.ymax - p[1])
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        let doc = match self.kind {
            LoopKind::Circle { center, radius } => LoopDoc::Circle {
                center,
                radius,
                samples: self.samples,
            },
            LoopKind::Rect(b) => LoopDoc::Rect {
                bbox: [b.xmin, b.xmax, b.ymin, b.ymax],
                samples: self.samples,
            },
        };
        serde_json::to_string(&doc).expect("loop serialisation")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum LoopDoc {
    Circle {
        center: Point,
        radius: f64,
        samples: usize,
    },
    Rect {
        #[serde(rename = "box")]
        bbox: [f64; 4],
        samples: usize,
    },
}

/// Parses `{"kind":"circle","center":[x,y],"radius":r,"samples":N}` or
/// `{"kind":"rect","box":[xmin,xmax,ymin,ymax],"samples":N}`.
pub fn parse_loop(text: &str) -> Result<PathLoop> {
    let doc: LoopDoc = serde_json::from_str(text).map_err(json_error)?;
    match doc {
        LoopDoc::Circle {
            center,
            radius,
            samples,
        } => PathLoop::circle(center, radius, samples),
        LoopDoc::Rect {
            bbox: [a, b, c, d],
            samples,
        } => PathLoop::rect(Bbox::new(a, b, c, d)?, samples),
    }
}

/// One node of a sigma surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceNode {
    pub x: f64,
    pub y: f64,
    pub sigma_min: f64,
    pub gap: f64,
    pub absdet: f64,
}

/// Smallest singular value, singular gap and `|det A|` on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaSurface {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major with `y` as the slow index.
    pub nodes: Vec<SurfaceNode>,
}

impl SigmaSurface {
    pub fn argmin_sigma(&self) -> &SurfaceNode {
        self.nodes
            .iter()
            .min_by(|a, b| a.sigma_min.total_cmp(&b.sigma_min))
            .expect("non-empty surface")
    }

    pub fn min_gap(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| n.gap)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,sigma_min,gap,absdet\n");
        for n in &self.nodes {
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{:e}",
                n.x, n.y, n.sigma_min, n.gap, n.absdet
            );
        }
        s
    }
}

/// Evaluates `sigma_n`, the singular gap and `|det A|` on an `nx × ny` lattice.
pub fn grid_scan(f: &MatrixFamily, b: Bbox, nx: usize, ny: usize) -> Result<SigmaSurface> {
    let b = Bbox::new(b.xmin, b.xmax, b.ymin, b.ymax)?;
    if nx < 2 || ny < 2 {
        return Err(Error::Domain(format!("grid resolution {nx}x{ny} below 2")));
    }
    let xs: Vec<f64> = (0..nx)
        .map(|i| b.xmin + b.width() * i as f64 / (nx - 1) as f64)
        .collect();
    let ys: Vec<f64> = (0..ny)
        .map(|i| b.ymin + b.height() * i as f64 / (ny - 1) as f64)
        .collect();
    let nodes = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (xs[idx % nx], ys[idx / nx]);
            let a = f.eval([x, y]);
            let s = svd_point(&a)?;
            Ok(SurfaceNode {
                x,
                y,
                sigma_min: s.sigma_min(),
                gap: s.min_gap(),
                absdet: det(&a)?.norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SigmaSurface { xs, ys, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE_42: &str = r#"{"n": 2, "terms": [
        {"jx": 0, "ky": 0, "matrix": [[[1,0],[1,0]],[[0,0],[0,0]]]},
        {"jx": 1, "ky": 0, "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]]},
        {"jx": 0, "ky": 1, "matrix": [[[0,0],[0,0]],[[0,0],[0,-1]]]}
    ]}"#;

    #[test]
    fn parse_constant_identity() {
        let f = parse_family(
            r#"{"n":2,"terms":[{"jx":0,"ky":0,"matrix":[[[1,0],[0,0]],[[0,0],[1,0]]]}]}"#,
        )
        .unwrap();
        assert_eq!(f.eval([0.7, -3.0]), ComplexMatrix::identity(2));
    }

    #[test]
    fn parse_triangular_family() {
        let f = parse_family(EXAMPLE_42).unwrap();
        let a = f.eval([0.3, 0.4]);
        assert_eq!(a[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(a[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(a[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(a[(1, 1)], C64::new(0.3, -0.4));
        let a0 = f.eval([0.0, 0.0]);
        assert_eq!(
            a0,
            ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]]).unwrap()
        );
    }

    #[test]
    fn parse_errors_carry_location() {
        let dup = r#"{"n":1,"terms":[{"jx":0,"ky":0,"matrix":[[[1,0]]]},{"jx":0,"ky":0,"matrix":[[[2,0]]]}]}"#;
        match parse_family(dup) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "terms[1]"),
            other => panic!("{other:?}"),
        }
        let ragged = r#"{"n":2,"terms":[{"jx":0,"ky":0,"matrix":[[[1,0],[0,0]],[[0,0]]]}]}"#;
        match parse_family(ragged) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "terms[0].matrix[1]"),
            other => panic!("{other:?}"),
        }
        match parse_family("{\"n\": 2,\n \"terms\": [}") {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn affine_derivatives() {
        let f = parse_family(EXAMPLE_42).unwrap();
        let m1 = &f.terms()[1].matrix;
        let m2 = &f.terms()[2].matrix;
        for p in [[0.0, 0.0], [1.5, -0.2]] {
            assert_eq!(&f.eval_derivative(p, [1.0, 0.0]), m1);
            assert_eq!(&f.eval_derivative(p, [0.0, 1.0]), m2);
        }
        let c = MatrixFamily::constant(ComplexMatrix::identity(2)).unwrap();
        assert_eq!(
            c.eval_derivative([0.3, 0.3], [0.6, 0.8]),
            ComplexMatrix::zeros(2, 2)
        );
    }

    #[test]
    fn circle_points() {
        let l = PathLoop::circle([1.0, 2.0], 0.5, 64).unwrap();
        let p0 = l.point(0.0);
        assert_eq!(p0.xi, [1.5, 2.0]);
        assert_eq!(p0.tangent, [0.0, 2.0 * PI * 0.5]);
        let p = l.point(0.5);
        assert!((p.xi[0] - 0.5).abs() < 1e-15 && (p.xi[1] - 2.0).abs() < 1e-15);
        assert_eq!(l.point(1.0), p0);
    }

    #[test]
    fn rect_points_and_corners() {
        let b = Bbox::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let l = PathLoop::rect(b, 64).unwrap();
        let p0 = l.point(0.0);
        assert_eq!(p0.xi, [0.0, 0.0]);
        assert_eq!(p0.tangent, [4.0, 0.0]);
        // Corner (1, 0) belongs to the right edge.
        let c = l.point(0.25);
        assert_eq!(c.xi, [1.0, 0.0]);
        assert_eq!(c.tangent, [0.0, 4.0]);
        assert_eq!(l.point(0.5).xi, [1.0, 1.0]);
        assert_eq!(l.point(0.625).xi, [0.5, 1.0]);
        assert_eq!(l.point(0.875).xi, [0.0, 0.5]);
        assert_eq!(l.point(1.0), p0);
    }

    #[test]
    fn loop_documents() {
        let l = parse_loop(r#"{"kind":"circle","center":[0,0],"radius":1,"samples":256}"#).unwrap();
        assert_eq!(l, PathLoop::circle([0.0, 0.0], 1.0, 256).unwrap());
        let r = parse_loop(r#"{"kind":"rect","box":[-1,1,-2,2],"samples":64}"#).unwrap();
        assert_eq!(
            r.kind,
            LoopKind::Rect(Bbox::new(-1.0, 1.0, -2.0, 2.0).unwrap())
        );
        assert_eq!(parse_loop(&r.to_json()).unwrap(), r);
        assert!(
            parse_loop(r#"{"kind":"circle","center":[0,0],"radius":-1,"samples":64}"#).is_err()
        );
        assert!(parse_loop(r#"{"kind":"circle","center":[0,0],"radius":1,"samples":4}"#).is_err());
        assert!(parse_loop(r#"{"kind":"rect","box":[1,1,0,1],"samples":64}"#).is_err());
    }

    #[test]
    fn bbox_helpers() {
        let b: Bbox = "-1, 1, -1, 1".parse().unwrap();
        let q = b.split4();
        assert_eq!(
            q[0],
            Bbox {
                xmin: -1.0,
                xmax: 0.0,
                ymin: -1.0,
                ymax: 0.0
            }
        );
        assert_eq!(
            q[3],
            Bbox {
                xmin: 0.0,
                xmax: 1.0,
                ymin: 0.0,
                ymax: 1.0
            }
        );
        assert_eq!(b.tile(2), q.to_vec());
        let i = b.inflate(0.1);
        assert!((i.xmin + 1.1).abs() < 1e-15 && (i.ymax - 1.1).abs() < 1e-15);
        assert!("1,2,3".parse::<Bbox>().is_err());
    }

    #[test]
    fn scan_constant_identity() {
        let f = MatrixFamily::constant(ComplexMatrix::identity(2)).unwrap();
        let s = grid_scan(&f, Bbox::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 5, 4).unwrap();
        assert_eq!(s.nodes.len(), 20);
        assert!(s
            .nodes
            .iter()
            .all(|n| n.sigma_min == 1.0 && n.gap == 0.0 && n.absdet == 1.0));
        assert!(s.to_csv().starts_with("x,y,sigma_min,gap,absdet\n"));
    }

    #[test]
    fn scan_finds_origin_dip() {
        let f = parse_family(EXAMPLE_42).unwrap();
        let s = grid_scan(&f, Bbox::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 21, 21).unwrap();
        let m = s.argmin_sigma();
        assert_eq!((m.x, m.y), (0.0, 0.0));
        assert!(m.sigma_min < 1e-15);
        assert!(grid_scan(&f, Bbox::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 1, 5).is_err());
    }
}
