//! Hermitian embedding `M(ε) = [[εI, A], [A^*, −εI]]` and genericity
//! diagnostics at candidate rank-loss points.

use rayon::prelude::*;
use serde::Serialize;

use crate::continuation::{check_nondegenerate, Thresholds};
use crate::error::{Error, Result};
use crate::linalg::{det, svd_point, ComplexMatrix, SvdTriple, C64};
use crate::model::{MatrixFamily, Point};

/// Relative cutoff for numerical regularity and probe positivity.
pub const GEN_TOL: f64 = 1e-6;
pub const DEFAULT_T_VALUES: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
/// Relative agreement of the last two probe ratios that counts as converged.
pub const PROBE_STABLE: f64 = 0.05;

/// Builds the `2n × 2n` Hermitian embedding of a square `A`.
pub fn build_m(a: &ComplexMatrix, eps: f64) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension("embedding needs a square matrix".into()));
    }
    let n = a.rows();
    let mut m = ComplexMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, i)] = C64::new(eps, 0.0);
        m[(n + i, n + i)] = C64::new(-eps, 0.0);
        for j in 0..n {
            m[(i, n + j)] = a[(i, j)];
            m[(n + j, i)] = a[(i, j)].conj();
        }
    }
    Ok(m)
}

/// Diagonal entries `(c, d)` of the blocks `C`, `D` for one singular value:
/// `c = σ / sqrt(2 (s² − ε s))`, `d = (s − ε) / sqrt(2 (s² − ε s))` with
/// `s = sqrt(σ² + ε²)`. `s − ε` is evaluated as `σ² / (s + ε)` for `ε > 0`
/// to avoid cancellation.
pub fn cd_factors(sigma: f64, eps: f64) -> Result<(f64, f64)> {
    if sigma.is_nan() || sigma <= 0.0 || !eps.is_finite() {
        return Err(Error::Domain(format!(
            "cd_factors needs sigma > 0, got {sigma}"
        )));
    }
    let s = sigma.hypot(eps);
    let sme = if eps > 0.0 {
        sigma * sigma / (s + eps)
    } else {
        s - eps
    };
    let denom = std::f64::consts::SQRT_2 * (s * sme).sqrt();
    Ok((sigma / denom, sme / denom))
}

/// Closed-form eigendecomposition `W^* M W = diag(S, −S)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingEig {
    pub w: ComplexMatrix,
    pub s: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl EmbeddingEig {
    /// Eigenvalues in the order of the columns of `W`: `(S, −S)`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.s
            .iter()
            .copied()
            .chain(self.s.iter().map(|x| -x))
            .collect()
    }
}

/// Assembles `W = [[U C, −U D], [V D, V C]]` from an SVD of `A`.
pub fn eigendec_m(t: &SvdTriple, eps: f64) -> Result<EmbeddingEig> {
    check_nondegenerate(&t.sigma, &Thresholds::default())?;
    let n = t.n();
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for &sg in &t.sigma {
        let (cj, dj) = cd_factors(sg, eps)?;
        c.push(cj);
        d.push(dj);
    }
    let s: Vec<f64> = t.sigma.iter().map(|sg| sg.hypot(eps)).collect();
    let mut w = ComplexMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] = t.u[(i, j)] * c[j];
            w[(i, n + j)] = -t.u[(i, j)] * d[j];
            w[(n + i, j)] = t.v[(i, j)] * d[j];
            w[(n + i, n + j)] = t.v[(i, j)] * c[j];
        }
    }
    Ok(EmbeddingEig { w, s, c, d })
}

/// `4^n ∏_{j<l} (σ_j² − σ_l²)^4 ∏_j (σ_j² + ε²)`.
pub fn discr_m(sigma: &[f64], eps: f64) -> f64 {
    let n = sigma.len();
    let mut p = 4f64.powi(n as i32);
    for j in 0..n {
        for l in (j + 1)..n {
            p *= (sigma[j] * sigma[j] - sigma[l] * sigma[l]).powi(4);
        }
        p *= sigma[j] * sigma[j] + eps * eps;
    }
    p
}

/// Singular values `(max, min)` of a real 2×2 matrix.
fn sv2(j: &[[f64; 2]; 2]) -> (f64, f64) {
    let fro2 = j[0][0].powi(2) + j[0][1].powi(2) + j[1][0].powi(2) + j[1][1].powi(2);
    let dt = (j[0][0] * j[1][1] - j[0][1] * j[1][0]).abs();
    let disc = ((fro2 - 2.0 * dt) * (fro2 + 2.0 * dt)).max(0.0).sqrt();
    let smax = (0.5 * (fro2 + disc)).sqrt();
    let smin = if smax > 0.0 { dt / smax } else { 0.0 };
    (smax, smin)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Genericity {
    pub regular: bool,
    /// Rows `(Re det, Im det)`, columns `(∂x, ∂y)`.
    pub jacobian: [[f64; 2]; 2],
    pub min_singular_value: f64,
    pub max_singular_value: f64,
    pub det: [f64; 2],
}

pub fn default_fd_step(xi0: Point) -> f64 {
    1e-6 * (1.0 + xi0[0].hypot(xi0[1]))
}

/// Central-difference Jacobian of `ξ ↦ (Re det A(ξ), Im det A(ξ))` and a
/// numerical regular-zero decision.
pub fn genericity_det(f: &MatrixFamily, xi0: Point, h: f64) -> Result<Genericity> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Domain(
            "finite-difference step must be positive".into(),
        ));
    }
    let d = |p: Point| det(&f.eval(p));
    let mut jac = [[0.0; 2]; 2];
    for (col, e) in [[1.0, 0.0], [0.0, 1.0]].iter().enumerate() {
        let plus = d([xi0[0] + h * e[0], xi0[1] + h * e[1]])?;
        let minus = d([xi0[0] - h * e[0], xi0[1] - h * e[1]])?;
        let g = (plus - minus) / (2.0 * h);
        jac[0][col] = g.re;
        jac[1][col] = g.im;
    }
    let (smax, smin) = sv2(&jac);
    let d0 = d(xi0)?;
    Ok(Genericity {
        regular: smin >= GEN_TOL * (1.0 + smax),
        jacobian: jac,
        min_singular_value: smin,
        max_singular_value: smax,
        det: [d0.re, d0.im],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionProbe {
    pub direction: Vec<f64>,
    /// One ratio per entry of `t_values`.
    pub ratios: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    /// False when `ξ0` is clearly not a rank-loss point.
    pub applicable: bool,
    pub t_values: Vec<f64>,
    pub directions: Vec<DirectionProbe>,
    /// Minimum and maximum over directions of the smallest-`t` ratio.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub all_converged: bool,
    /// Applicable, converged in every direction, and bounded away from zero.
    pub positive: bool,
}

/// `k` equispaced unit vectors in the plane.
pub fn plane_directions(k: usize) -> Vec<Point> {
    (0..k)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            [a.cos(), a.sin()]
        })
        .collect()
}

/// Unit directions `(vx, vy, γ)` in `(x, y, ε)` space: `k` in the plane
/// `γ = 0`, `k` at 45° elevation and both poles.
pub fn space_directions(k: usize) -> Vec<[f64; 3]> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out: Vec<[f64; 3]> = plane_directions(k)
        .iter()
        .map(|p| [p[0], p[1], 0.0])
        .collect();
    out.extend(plane_directions(k).iter().map(|p| [h * p[0], h * p[1], h]));
    out.push([0.0, 0.0, 1.0]);
    out.push([0.0, 0.0, -1.0]);
    out
}

fn rank_loss_candidate(f: &MatrixFamily, xi0: Point) -> Result<bool> {
    let s = svd_point(&f.eval(xi0))?;
    Ok(s.sigma_min() <= GEN_TOL * (1.0 + s.sigma[0]))
}

fn summarize(applicable: bool, t_values: &[f64], directions: Vec<DirectionProbe>) -> ProbeReport {
    let last: Vec<f64> = directions
        .iter()
        .map(|d| *d.ratios.last().unwrap_or(&0.0))
        .collect();
    let min_ratio = last.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = last.iter().copied().fold(0.0, f64::max);
    let all_converged = directions.iter().all(|d| d.converged);
    let positive =
        applicable && all_converged && min_ratio > 0.0 && min_ratio > GEN_TOL * max_ratio;
    ProbeReport {
        applicable,
        t_values: t_values.to_vec(),
        directions,
        min_ratio,
        max_ratio,
        all_converged,
        positive,
    }
}

fn converged(ratios: &[f64]) -> bool {
    match ratios {
        [.., a, b] => {
            let scale = a.abs().max(b.abs());
            scale > 0.0 && (a - b).abs() <= PROBE_STABLE * scale
        }
        _ => false,
    }
}

/// Ratios `σ_n(A(ξ0 + t v)) / t` per direction and `t`.
pub fn sigma_limit_probe(
    f: &MatrixFamily,
    xi0: Point,
    directions: &[Point],
    t_values: &[f64],
) -> Result<ProbeReport> {
    let applicable = rank_loss_candidate(f, xi0)?;
    let probes = directions
        .par_iter()
        .map(|v| {
            let ratios = t_values
                .iter()
                .map(|&t| {
                    let s = svd_point(&f.eval([xi0[0] + t * v[0], xi0[1] + t * v[1]]))?;
                    Ok(s.sigma_min() / t)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DirectionProbe {
                direction: v.to_vec(),
                converged: converged(&ratios),
                ratios,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(applicable, t_values, probes))
}

/// Ratios `discr(M(ξ0 + t v, t γ)) / t²` per direction `(v, γ)` and `t`,
/// with `discr(M)` evaluated from the singular values of `A`.
pub fn discr_limit_probe(
    f: &MatrixFamily,
    xi0: Point,
    directions: &[[f64; 3]],
    t_values: &[f64],
) -> Result<ProbeReport> {
    let applicable = rank_loss_candidate(f, xi0)?;
    let probes = directions
        .par_iter()
        .map(|v| {
            let ratios = t_values
                .iter()
                .map(|&t| {
                    let s = svd_point(&f.eval([xi0[0] + t * v[0], xi0[1] + t * v[1]]))?;
                    Ok(discr_m(&s.sigma, t * v[2]) / (t * t))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DirectionProbe {
                direction: v.to_vec(),
                converged: converged(&ratios),
                ratios,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(applicable, t_values, probes))
}

/// All three genericity diagnostics at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointDiagnostics {
    pub xy: Point,
    pub genericity: Genericity,
    pub sigma_probe: ProbeReport,
    pub discr_probe: ProbeReport,
    /// The three tests give the same verdict.
    pub consistent: bool,
    /// All three tests report a generic rank-loss point.
    pub generic: bool,
}

pub fn diagnose_point(f: &MatrixFamily, xi0: Point) -> Result<PointDiagnostics> {
    let genericity = genericity_det(f, xi0, default_fd_step(xi0))?;
    let sigma_probe = sigma_limit_probe(f, xi0, &plane_directions(16), &DEFAULT_T_VALUES)?;
    let discr_probe = discr_limit_probe(f, xi0, &space_directions(16), &DEFAULT_T_VALUES)?;
    let verdicts = [
        genericity.regular,
        sigma_probe.positive,
        discr_probe.positive,
    ];
    Ok(PointDiagnostics {
        xy: xi0,
        consistent: verdicts.iter().all(|&v| v == verdicts[0]),
        generic: verdicts.iter().all(|&v| v),
        genericity,
        sigma_probe,
        discr_probe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{discriminant, herm_eig, unitarity_defect};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn example_42() -> MatrixFamily {
        MatrixFamily::affine(
            ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]]).unwrap(),
            ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]).unwrap(),
            ComplexMatrix::from_rows(&[
                vec![c(0.0, 0.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), c(0.0, -1.0)],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn squared() -> MatrixFamily {
        // diag((x - i y)², 1) = diag(x² - y² - 2 i x y, 1)
        let e = |a: C64| ComplexMatrix::from_diag(&[a, c(0.0, 0.0)]);
        let f = crate::model::Term {
            jx: 0,
            ky: 0,
            matrix: ComplexMatrix::from_diag(&[c(0.0, 0.0), c(1.0, 0.0)]),
        };
        let terms = vec![
            f,
            crate::model::Term {
                jx: 2,
                ky: 0,
                matrix: e(c(1.0, 0.0)),
            },
            crate::model::Term {
                jx: 0,
                ky: 2,
                matrix: e(c(-1.0, 0.0)),
            },
            crate::model::Term {
                jx: 1,
                ky: 1,
                matrix: e(c(0.0, -2.0)),
            },
        ];
        MatrixFamily::new(2, terms).unwrap()
    }

    #[test]
    fn build_m_examples() {
        let m = build_m(&ComplexMatrix::zeros(2, 2), 1.0).unwrap();
        assert_eq!(m, ComplexMatrix::from_real_diag(&[1.0, 1.0, -1.0, -1.0]));
        let m = build_m(&ComplexMatrix::identity(2), 0.0).unwrap();
        let e = herm_eig(&m).unwrap();
        assert!(e
            .lambda
            .iter()
            .zip([1.0, 1.0, -1.0, -1.0])
            .all(|(a, b)| (a - b).abs() < 1e-14));
        let m = build_m(&ComplexMatrix::from_real_diag(&[2.0, 1.0]), 0.0).unwrap();
        let e = herm_eig(&m).unwrap();
        assert!(e
            .lambda
            .iter()
            .zip([2.0, 1.0, -1.0, -2.0])
            .all(|(a, b)| (a - b).abs() < 1e-14));
        assert!(build_m(&ComplexMatrix::zeros(2, 3), 0.0).is_err());
    }

    #[test]
    fn cd_examples() {
        for s in [0.1, 1.0, 7.0] {
            let (cc, dd) = cd_factors(s, 0.0).unwrap();
            assert!((cc - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
            assert!((dd - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let (cc, dd) = cd_factors(1.0, 1e6).unwrap();
        assert!((cc - 1.0).abs() <= 1e-6 && dd < 1e-6);
        for (s, e) in [(0.3, 0.7), (2.0, -1.5), (1.0, 1e-9)] {
            let (c1, d1) = cd_factors(s, e).unwrap();
            let (c2, d2) = cd_factors(s, -e).unwrap();
            assert!((c1 * c1 + d1 * d1 - 1.0).abs() < 1e-14);
            assert!((c2 - d1).abs() < 1e-13 && (d2 - c1).abs() < 1e-13);
        }
        assert!(cd_factors(0.0, 1.0).is_err());
        assert!(cd_factors(-1.0, 1.0).is_err());
    }

    #[test]
    fn eigendec_diag_example() {
        let t = svd_point(&ComplexMatrix::from_real_diag(&[2.0, 1.0])).unwrap();
        let e = eigendec_m(&t, 0.0).unwrap();
        assert_eq!(e.eigenvalues(), vec![2.0, 1.0, -2.0, -1.0]);
        let mut sorted = e.eigenvalues();
        sorted.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(sorted, vec![2.0, 1.0, -1.0, -2.0]);
        // Hand-assembled W for U = V = I and C = D = I/√2.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = ComplexMatrix::from_real_rows(&[
            &[h, 0.0, -h, 0.0],
            &[0.0, h, 0.0, -h],
            &[h, 0.0, h, 0.0],
            &[0.0, h, 0.0, h],
        ])
        .unwrap();
        assert!(e.w.sub(&expect).frobenius_norm() < 1e-15);
        let m = build_m(&ComplexMatrix::from_real_diag(&[2.0, 1.0]), 0.0).unwrap();
        let d = e.w.adjoint_mul(&(&m * &e.w));
        let target = ComplexMatrix::from_real_diag(&e.eigenvalues());
        assert!(d.sub(&target).frobenius_norm() < 1e-14);
    }

    #[test]
    fn eigendec_complex_and_parity() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(0.4, -0.1), c(1.0, 0.3), c(0.0, 0.2)],
            vec![c(-0.5, 0.5), c(0.2, 0.0), c(0.7, -0.4)],
            vec![c(0.1, 0.9), c(-0.3, 0.0), c(0.6, 0.6)],
        ])
        .unwrap();
        let t = svd_point(&a).unwrap();
        let eps = 0.7;
        let e = eigendec_m(&t, eps).unwrap();
        let m = build_m(&a, eps).unwrap();
        assert!(unitarity_defect(&e.w) < 1e-12);
        let d = e.w.adjoint_mul(&(&m * &e.w));
        let target = ComplexMatrix::from_real_diag(&e.eigenvalues());
        assert!(d.sub(&target).frobenius_norm() <= 1e-10 * m.frobenius_norm());

        // W(−ε) first block column is W(ε) second block column with the
        // top block negated.
        let em = eigendec_m(&t, -eps).unwrap();
        let n = 3;
        for i in 0..2 * n {
            let sign = if i < n { -1.0 } else { 1.0 };
            for j in 0..n {
                assert!((em.w[(i, j)] - e.w[(i, n + j)] * sign).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn eigendec_rejects_degenerate() {
        let t = svd_point(&ComplexMatrix::identity(2)).unwrap();
        assert!(matches!(
            eigendec_m(&t, 0.5),
            Err(Error::NearDegenerate { .. })
        ));
        let t = svd_point(&ComplexMatrix::from_real_diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(
            eigendec_m(&t, 0.5),
            Err(Error::NearDegenerate { .. })
        ));
    }

    #[test]
    fn discr_examples() {
        assert_eq!(discr_m(&[3.0], 2.0), 4.0 * 13.0);
        assert_eq!(discr_m(&[2.0, 1.0], 0.0), 5184.0);
        assert_eq!(discriminant(&[2.0, 1.0, -1.0, -2.0]), 5184.0);
        assert_eq!(discr_m(&[1.5, 0.5], 0.3), discr_m(&[1.5, 0.5], -0.3));
    }

    #[test]
    fn genericity_examples() {
        let g = genericity_det(&example_42(), [0.0, 0.0], default_fd_step([0.0, 0.0])).unwrap();
        assert!(g.regular);
        let expect = [[1.0, 0.0], [0.0, -1.0]];
        for (row, want) in g.jacobian.iter().zip(&expect) {
            for (x, y) in row.iter().zip(want) {
                assert!((x - y).abs() < 1e-9);
            }
        }
        let g = genericity_det(&squared(), [0.0, 0.0], 1e-6).unwrap();
        assert!(!g.regular);
        assert!(genericity_det(&squared(), [0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn sigma_probe_examples() {
        let p = sigma_limit_probe(
            &example_42(),
            [0.0, 0.0],
            &plane_directions(16),
            &DEFAULT_T_VALUES,
        )
        .unwrap();
        assert!(p.applicable && p.positive, "{p:?}");
        let along_x =
            sigma_limit_probe(&example_42(), [0.0, 0.0], &[[1.0, 0.0]], &[1e-4, 1e-5]).unwrap();
        let r = &along_x.directions[0].ratios;
        assert!((r[0] - r[1]).abs() < 1e-3);
        let q = sigma_limit_probe(
            &squared(),
            [0.0, 0.0],
            &plane_directions(16),
            &DEFAULT_T_VALUES,
        )
        .unwrap();
        assert!(q.applicable && !q.positive);
        assert!(q.max_ratio < 1e-4);
    }

    #[test]
    fn discr_probe_examples() {
        let p = discr_limit_probe(
            &example_42(),
            [0.0, 0.0],
            &space_directions(16),
            &DEFAULT_T_VALUES,
        )
        .unwrap();
        assert!(p.positive, "{p:?}");
        let q = discr_limit_probe(
            &squared(),
            [0.0, 0.0],
            &space_directions(16),
            &DEFAULT_T_VALUES,
        )
        .unwrap();
        assert!(!q.positive);
        let full = MatrixFamily::constant(ComplexMatrix::from_real_diag(&[2.0, 1.0])).unwrap();
        let r =
            discr_limit_probe(&full, [0.0, 0.0], &space_directions(4), &DEFAULT_T_VALUES).unwrap();
        assert!(!r.applicable && !r.positive);
    }

    #[test]
    fn diagnose_agrees() {
        let d = diagnose_point(&example_42(), [0.0, 0.0]).unwrap();
        assert!(d.generic && d.consistent);
        let d = diagnose_point(&squared(), [0.0, 0.0]).unwrap();
        assert!(!d.generic && d.consistent, "{d:?}");
    }
}
