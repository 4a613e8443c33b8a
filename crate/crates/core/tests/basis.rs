use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvspline::basis::{build_knot_grid, index_set_for_domain, AxisKnots, Domain, TensorKnotGrid};
use tvspline::collocation::PixelGrid;
use tvspline_oracles::bspline::{cox_de_boor, cox_de_boor_derivative, pixel_knots, tensor_value};

fn grid(mu: &[usize], n: &[usize]) -> TensorKnotGrid {
    build_knot_grid(&PixelGrid::new(mu).unwrap(), n).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, g: &TensorKnotGrid) -> Vec<f64> {
    g.axes().iter().map(|a| rng.random_range(a.lo()..=a.hi())).collect()
}

#[test]
fn knots_match_pixel_construction() {
    for n in 2..=6 {
        for mu in [3, 7, 12] {
            let g = grid(&[mu], &[n]);
            assert_eq!(g.axis(0).knots(), pixel_knots(n, mu).as_slice(), "n {n} mu {mu}");
        }
    }
}

#[test]
fn axis_values_match_cox_de_boor() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 2..=6 {
        let g = grid(&[9], &[n]);
        let axis = g.axis(0);
        let t = axis.knots();
        for _ in 0..200 {
            let x = rng.random_range(0.0..=9.0);
            for i in 0..axis.num_basis() {
                let v = axis.eval(i, x).unwrap();
                assert!((v - cox_de_boor(t, i, n, x)).abs() < 1e-13, "n {n} i {i} x {x}");
            }
        }
        for i in 0..axis.num_basis() {
            for x in [0.0, 9.0, 4.5, 3.0] {
                assert!((axis.eval(i, x).unwrap() - cox_de_boor(t, i, n, x)).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn axis_derivatives_match_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 2..=5 {
        let g = grid(&[8], &[n]);
        let axis = g.axis(0);
        for _ in 0..100 {
            let x = rng.random_range(0.0..8.0);
            for i in 0..axis.num_basis() {
                let want = cox_de_boor_derivative(axis.knots(), i, n, x);
                assert!((axis.eval_derivative(i, x).unwrap() - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn tensor_row_matches_oracle() {
    let g = grid(&[6, 5], &[3, 4]);
    let knots: Vec<Vec<f64>> = g.axes().iter().map(|a| a.knots().to_vec()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let x = random_point(&mut rng, &g);
        let row = g.eval_tensor_row(&x).unwrap();
        let mut dense = vec![0.0; g.num_coeffs()];
        for (&i, &v) in row.indices.iter().zip(&row.values) {
            dense[i] = v;
        }
        for (alpha, v) in dense.iter().enumerate() {
            assert!((v - tensor_value(&knots, &[3, 4], alpha, &x)).abs() < 1e-13);
        }
    }
}

#[test]
fn partition_of_unity_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 2..=5 {
        let g = grid(&[11, 13], &[n, n]);
        for _ in 0..10_000 {
            let x = random_point(&mut rng, &g);
            let row = g.eval_tensor_row(&x).unwrap();
            assert!((row.sum() - 1.0).abs() <= 1e-12);
            assert!(row.values.iter().all(|&v| v >= 0.0));
            assert!(row.nnz() <= n * n);
        }
    }
}

#[test]
fn corner_rows_are_unit_vectors() {
    let g = grid(&[6, 7], &[3, 3]);
    let dims = g.basis_dims();
    for (x, idx) in [
        ([0.0, 0.0], [0, 0]),
        ([6.0, 0.0], [dims[0] - 1, 0]),
        ([0.0, 7.0], [0, dims[1] - 1]),
        ([6.0, 7.0], [dims[0] - 1, dims[1] - 1]),
    ] {
        let row = g.eval_tensor_row(&x).unwrap();
        let flat = idx[0] * dims[1] + idx[1];
        for (&i, &v) in row.indices.iter().zip(&row.values) {
            assert!((v - if i == flat { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }
}

#[test]
fn linear_precision_and_ramp_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 2..=5 {
        let g = grid(&[9, 10], &[n, n]);
        for axis in 0..2 {
            let f = g.linear_coefficients(axis);
            for _ in 0..500 {
                let x = random_point(&mut rng, &g);
                assert!((g.eval_spline(&f, &x).unwrap() - x[axis]).abs() <= 1e-12);
                let grad = g.eval_gradient_rows(&x).unwrap();
                for (j, row) in grad.iter().enumerate() {
                    let want = if j == axis { 1.0 } else { 0.0 };
                    assert!((row.dot(&f) - want).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 2..=5 {
        let g = grid(&[8, 9], &[n, n]);
        let f: Vec<f64> = (0..g.num_coeffs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut checked = 0;
        while checked < 200 {
            let x = random_point(&mut rng, &g);
            // stay away from knots so both sides of the stencil see one polynomial
            let near_knot = g
                .axes()
                .iter()
                .zip(&x)
                .any(|(a, &xi)| a.knots().iter().any(|&t| (t - xi).abs() < 1e-3 * a.grid_width()));
            if near_knot {
                continue;
            }
            checked += 1;
            let grad = g.eval_gradient_rows(&x).unwrap();
            for j in 0..2 {
                let h = 1e-5;
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[j] += h;
                xm[j] -= h;
                let fd = (g.eval_spline(&f, &xp).unwrap() - g.eval_spline(&f, &xm).unwrap()) / (2.0 * h);
                let exact = grad[j].dot(&f);
                let scale = exact.abs().max(1.0);
                assert!(
                    (fd - exact).abs() <= 1e-6 * scale,
                    "n {n} x {x:?} fd {fd} exact {exact}"
                );
            }
        }
    }
}

#[test]
fn stability_ratio_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 2..=5 {
        let g = grid(&[10, 10], &[n, n]);
        for _ in 0..100 {
            let f: Vec<f64> = (0..g.num_coeffs()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let f: Vec<f64> = f.iter().map(|v| v / fmax).collect();
            let mut smax = 0.0f64;
            for _ in 0..400 {
                let x = random_point(&mut rng, &g);
                smax = smax.max(g.eval_spline(&f, &x).unwrap().abs());
            }
            assert!((1e-3..=1.0 + 1e-12).contains(&smax), "n {n} ratio {smax}");
        }
    }
}

#[test]
fn index_sets_for_domains() {
    let g = grid(&[8, 9], &[3, 4]);
    let all_cells: Vec<Vec<usize>> = (0..g.cell_dims()[0])
        .flat_map(|a| (0..g.cell_dims()[1]).map(move |b| vec![a, b]))
        .collect();
    let full = index_set_for_domain(&g, &Domain::Cells(all_cells));
    assert_eq!(full.len(), g.num_coeffs());
    let m: Vec<usize> = g.axes().iter().map(AxisKnots::interior).collect();
    assert_eq!(full.len(), (m[0] + 3) * (m[1] + 4));
    assert_eq!(index_set_for_domain(&g, &Domain::Cells(vec![vec![0, 0]])).len(), 12);
    assert!(index_set_for_domain(&g, &Domain::Cells(vec![])).is_empty());
    assert!(index_set_for_domain(&g, &Domain::Boxes(vec![])).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity_any_order(
        n0 in 2usize..=6, n1 in 2usize..=6,
        mu0 in 3usize..=20, mu1 in 3usize..=20,
        u in 0.0f64..=1.0, v in 0.0f64..=1.0,
    ) {
        let g = grid(&[mu0, mu1], &[n0, n1]);
        let x = [u * mu0 as f64, v * mu1 as f64];
        let row = g.eval_tensor_row(&x).unwrap();
        prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
        prop_assert!(row.values.iter().all(|&b| b >= 0.0));
    }

    #[test]
    fn basis_vanishes_outside_support(n in 2usize..=6, mu in 3usize..=15, u in 0.0f64..=1.0) {
        let g = grid(&[mu], &[n]);
        let axis = g.axis(0);
        let x = u * mu as f64;
        for i in 0..axis.num_basis() {
            let (lo, hi) = axis.support(i);
            let v = axis.eval(i, x).unwrap();
            prop_assert!(v >= 0.0 && v <= 1.0 + 1e-15);
            if x < lo || x > hi {
                prop_assert_eq!(v, 0.0);
            }
        }
    }
}
