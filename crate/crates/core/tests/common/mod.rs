#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rankloop::model::Term;
use rankloop::{parse_family, ComplexMatrix, MatrixFamily, Point, C64};
use std::f64::consts::PI;

pub fn family(name: &str) -> MatrixFamily {
    let text = match name {
        "triangular2" => include_str!("../../data/triangular2.json"),
        "affine4" => include_str!("../../data/affine4.json"),
        "squared2" => include_str!("../../data/squared2.json"),
        "identity2" => include_str!("../../data/identity2.json"),
        _ => panic!("unknown family {name}"),
    };
    parse_family(text).unwrap()
}

/// Closed-form first-column phase of [[1, 1], [0, x - iy]] around the
/// circle of radius r about the origin.
pub fn beta1(r: f64) -> f64 {
    let r2 = r * r;
    PI * r2 / ((0.5 * ((r2 * r2 + 4.0).sqrt() - r2) + 1.0).powi(2) + r2)
}

pub fn gaussian_c64(rng: &mut ChaCha8Rng) -> C64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    let rad = (-2.0 * u1.ln()).sqrt();
    C64::from_polar(rad, 2.0 * PI * u2) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let data = (0..n * n).map(|_| gaussian_c64(rng)).collect();
    ComplexMatrix::from_vec(n, n, data).unwrap()
}

/// Haar-ish random unitary by Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n);
    let mut q = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut col = g.column(j);
        for _ in 0..2 {
            for k in 0..j {
                let qk = q.column(k);
                let dot: C64 = qk.iter().zip(&col).map(|(a, b)| a.conj() * b).sum();
                for (c, a) in col.iter_mut().zip(&qk) {
                    *c -= dot * a;
                }
            }
        }
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let unit: Vec<C64> = col.iter().map(|z| z / norm).collect();
        q.set_column(j, &unit);
    }
    q
}

/// A(x, y) = B T(x, y) C with random unitary B, C and upper-triangular
/// T = diag((x - a) - i(y - b), 4, 6, ...) plus a small constant strictly
/// upper part. det A vanishes only at (a, b), where the zero is regular.
pub struct Manufactured {
    pub family: MatrixFamily,
    pub root: Point,
}

pub fn manufactured(rng: &mut ChaCha8Rng, n: usize, root: Point) -> Manufactured {
    let b = random_unitary(rng, n);
    let c = random_unitary(rng, n);
    let mut t0 = ComplexMatrix::zeros(n, n);
    t0[(0, 0)] = C64::new(-root[0], root[1]);
    for j in 1..n {
        t0[(j, j)] = C64::new(2.0 + 2.0 * j as f64, 0.0);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            t0[(i, j)] = gaussian_c64(rng) * 0.1;
        }
    }
    let mut t1 = ComplexMatrix::zeros(n, n);
    t1[(0, 0)] = C64::new(1.0, 0.0);
    let mut t2 = ComplexMatrix::zeros(n, n);
    t2[(0, 0)] = C64::new(0.0, -1.0);
    let conj = |t: &ComplexMatrix| &(&b * t) * &c;
    let family = MatrixFamily::new(
        n,
        vec![
            Term {
                jx: 0,
                ky: 0,
                matrix: conj(&t0),
            },
            Term {
                jx: 1,
                ky: 0,
                matrix: conj(&t1),
            },
            Term {
                jx: 0,
                ky: 1,
                matrix: conj(&t2),
            },
        ],
    )
    .unwrap();
    Manufactured { family, root }
}
