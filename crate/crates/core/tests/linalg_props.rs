mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rankloop::linalg::{det, herm_eig, svd_point, unitarity_defect, ComplexMatrix};

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let g = common::random_matrix(rng, n);
    g.add(&g.adjoint()).scale(rankloop::C64::new(0.5, 0.0))
}

#[test]
fn reconstruction_over_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..1000 {
        let n = 2 + i % 7;
        let a = common::random_matrix(&mut rng, n);
        let t = svd_point(&a).unwrap();
        let err = t.reconstruct().sub(&a).frobenius_norm();
        assert!(
            err <= 1e-11 * n as f64 * a.frobenius_norm(),
            "n={n} err={err:e}"
        );
        assert!(unitarity_defect(&t.u) <= 1e-12 * n as f64);
        assert!(unitarity_defect(&t.v) <= 1e-12 * n as f64);
        assert!(t.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(*t.sigma.last().unwrap() >= 0.0);
    }
}

#[test]
fn reconstruction_of_rank_deficient_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 2..=6 {
        // rank n - 1
        let b = common::random_matrix(&mut rng, n);
        let mut c = common::random_matrix(&mut rng, n);
        for j in 0..n {
            c[(n - 1, j)] = rankloop::C64::new(0.0, 0.0);
        }
        let a = &b * &c;
        let t = svd_point(&a).unwrap();
        assert!(t.reconstruct().sub(&a).frobenius_norm() <= 1e-11 * n as f64 * a.frobenius_norm());
        assert!(t.sigma[n - 1] <= 1e-13 * t.sigma[0]);
        assert!(unitarity_defect(&t.u) <= 1e-12 * n as f64);
    }
}

proptest! {
    #[test]
    fn adjoint_has_same_singular_values(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_matrix(&mut rng, n);
        let s = svd_point(&a).unwrap();
        let sa = svd_point(&a.adjoint()).unwrap();
        for (x, y) in s.sigma.iter().zip(&sa.sigma) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn svd_is_deterministic(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_matrix(&mut rng, n);
        prop_assert_eq!(svd_point(&a).unwrap(), svd_point(&a).unwrap());
    }

    #[test]
    fn herm_eig_residual_and_order(seed in any::<u64>(), n in 1usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(&mut rng, n);
        let e = herm_eig(&h).unwrap();
        let d = e.q.adjoint_mul(&(&h * &e.q));
        let r = d.sub(&ComplexMatrix::from_real_diag(&e.lambda)).frobenius_norm();
        prop_assert!(r <= 1e-11 * h.frobenius_norm().max(1e-300));
        prop_assert!(e.lambda.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn abs_det_is_product_of_singular_values(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_matrix(&mut rng, n);
        let d = det(&a).unwrap().norm();
        let p: f64 = svd_point(&a).unwrap().sigma.iter().product();
        prop_assert!((d - p).abs() <= 1e-10 * p.max(1e-300) + 1e-14);
    }
}
