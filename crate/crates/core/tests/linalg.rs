mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapeopt::linalg::{assemble, factor_solve, LinalgError, SparseOperator, TripletBuilder};

use common::{dense_solve, max_diff, norm};

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>();
        }
        a[i][i] += n as f64;
    }
    a
}

fn sparse_from_dense(a: &[Vec<f64>]) -> SparseOperator {
    let n = a.len();
    assemble(n, n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j, a[i][j])))).unwrap()
}

#[test]
fn random_spd_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let a = random_spd(5, &mut rng);
        let b: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = factor_solve(&sparse_from_dense(&a), &b).unwrap();
        let y = dense_solve(&a, &b);
        assert!(max_diff(&x, &y) <= 1e-12 * norm(&y).max(1.0));
    }
}

#[test]
fn trivial_solves() {
    let b = vec![3.0, -1.0, 2.5];
    assert_eq!(factor_solve(&SparseOperator::identity(3), &b).unwrap(), b);
    let x = factor_solve(&SparseOperator::from_diagonal(&[2.0, 4.0]), &[2.0, 8.0]).unwrap();
    assert_eq!(x, vec![1.0, 2.0]);
}

#[test]
fn singular_reports_pivot() {
    let a = assemble(3, 3, [(0, 0, 1.0), (1, 1, 1.0), (2, 0, 1.0), (2, 1, 1.0)]).unwrap();
    assert!(matches!(factor_solve(&a, &[1.0, 1.0, 1.0]), Err(LinalgError::Singular { .. })));
}

/// 2D grid Laplacian plus a rank-one coupling, large enough to exercise the ordering.
fn grid_operator(nx: usize, shift: f64) -> SparseOperator {
    let n = nx * nx;
    let mut b = TripletBuilder::new(n, n);
    for j in 0..nx {
        for i in 0..nx {
            let k = i + nx * j;
            b.push(k, k, 4.0 + shift);
            if i + 1 < nx {
                b.push(k, k + 1, -1.0);
                b.push(k + 1, k, -1.0);
            }
            if j + 1 < nx {
                b.push(k, k + nx, -1.0);
                b.push(k + nx, k, -1.0);
            }
        }
    }
    b.build()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solve_recovers_x(seed in any::<u64>(), nx in 3usize..25, shift in 0.01f64..2.0) {
        let a = grid_operator(nx, shift);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..nx * nx).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = a.mul_vec(&x);
        let y = factor_solve(&a, &b).unwrap();
        prop_assert!(max_diff(&x, &y) <= 1e-10 * norm(&x).max(1e-300));
    }

    #[test]
    fn indefinite_saddle_recovers_x(seed in any::<u64>(), nx in 3usize..12) {
        // [[A, B], [Bᵀ, 0]] with B selecting the first m unknowns
        let a = grid_operator(nx, 0.5);
        let n = nx * nx;
        let m = nx;
        let mut bld = TripletBuilder::new(n + m, n + m);
        bld.push_operator(0, 0, &a, 1.0);
        for k in 0..m {
            bld.push(k * nx, n + k, 1.0);
            bld.push(n + k, k * nx, 1.0);
        }
        let s = bld.build();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n + m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = factor_solve(&s, &s.mul_vec(&x)).unwrap();
        prop_assert!(max_diff(&x, &y) <= 1e-10 * norm(&x));
    }
}
