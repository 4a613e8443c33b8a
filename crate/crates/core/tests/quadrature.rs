use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvspline::basis::{build_knot_grid, TensorKnotGrid};
use tvspline::collocation::{build_site_sets, InpaintingMask, PixelGrid};
use tvspline::imaging::{make_mask, MaskSpec};
use tvspline::quadrature::{
    active_region, assemble_gradient_operator, block_norm_sum, build_rule, gauss_legendre_nodes, ActiveRegion,
};
use tvspline::sparse::LinearOperator;
use tvspline_oracles::gauss::golub_welsch;

fn setup(mu: usize, n: usize, mask: &InpaintingMask) -> (TensorKnotGrid, ActiveRegion) {
    let pixels = PixelGrid::new(&[mu, mu]).unwrap();
    let g = build_knot_grid(&pixels, &[n, n]).unwrap();
    let sites = build_site_sets(&g, &pixels, mask).unwrap();
    let region = active_region(&g, &sites);
    (g, region)
}

fn random_mask(mu: usize, fraction: f64, seed: u64) -> InpaintingMask {
    make_mask(&MaskSpec::random(fraction, seed), &[mu, mu]).unwrap()
}

#[test]
fn nodes_and_weights_match_golub_welsch() {
    for q in 1..=16 {
        let (x, w) = gauss_legendre_nodes(q).unwrap();
        let (xo, wo) = golub_welsch(q);
        for k in 0..q {
            assert!((x[k] - xo[k]).abs() < 1e-13, "q {q} node {k}");
            assert!((w[k] - wo[k]).abs() < 1e-13, "q {q} weight {k}");
        }
        assert!(w.iter().all(|&v| v > 0.0));
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }
    let (x, w) = gauss_legendre_nodes(3).unwrap();
    let quartic: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(4)).sum();
    assert!((quartic - 0.4).abs() < 1e-14);
}

/// `∫_lo^hi x^k dx`.
fn monomial_integral(k: i32, lo: f64, hi: f64) -> f64 {
    (hi.powi(k + 1) - lo.powi(k + 1)) / (k + 1) as f64
}

#[test]
fn per_cell_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mask = random_mask(16, 0.05, 3);
    for n in 2..=4 {
        let (g, region) = setup(16, n, &mask);
        for q in [1usize, 2, 3, 5] {
            let rule = build_rule(&g, &region, &[q, q + 1]).unwrap();
            let deg = [2 * q as i32 - 1, 2 * (q as i32 + 1) - 1];
            let terms: Vec<(i32, i32, f64)> = (0..6)
                .map(|_| {
                    (
                        rng.random_range(0..=deg[0]),
                        rng.random_range(0..=deg[1]),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect();
            let per = rule.nodes_per_cell();
            for (pos, &cell) in rule.cells().iter().enumerate() {
                let idx = region.cell_index(cell);
                let (x0, x1) = g.axis(0).cell_bounds(idx[0]);
                let (y0, y1) = g.axis(1).cell_bounds(idx[1]);
                let mut approx = 0.0;
                let mut wsum = 0.0;
                for i in pos * per..(pos + 1) * per {
                    assert_eq!(rule.cell_of_node(i), pos);
                    let x = rule.node(i);
                    assert!(x[0] > x0 && x[0] < x1 && x[1] > y0 && x[1] < y1);
                    let w = rule.weights()[i];
                    wsum += w;
                    approx += w * terms
                        .iter()
                        .map(|&(a, b, c)| c * x[0].powi(a) * x[1].powi(b))
                        .sum::<f64>();
                }
                let exact: f64 = terms
                    .iter()
                    .map(|&(a, b, c)| c * monomial_integral(a, x0, x1) * monomial_integral(b, y0, y1))
                    .sum();
                let scale = terms
                    .iter()
                    .map(|&(a, b, c)| (c * monomial_integral(a, x0, x1) * monomial_integral(b, y0, y1)).abs())
                    .sum::<f64>();
                assert!((approx - exact).abs() <= 1e-12 * scale.max(1e-300), "n {n} q {q}");
                assert!((wsum - (x1 - x0) * (y1 - y0)).abs() < 1e-12);
            }
            assert_eq!(rule.num_nodes(), region.cells().len() * q * (q + 1));
        }
    }
}

#[test]
fn ramp_objective_equals_active_volume() {
    let mask = random_mask(24, 0.05, 8);
    for n in 2..=5 {
        let (g, region) = setup(24, n, &mask);
        let rule = build_rule(&g, &region, &[n, n]).unwrap();
        let k = assemble_gradient_operator(&g, &rule);
        let volume = region.volume(&g);
        assert!((rule.integrate(|_| 1.0) - volume).abs() < 1e-12 * volume);
        for axis in 0..2 {
            let f = g.linear_coefficients(axis);
            assert!((k.objective(&f) - volume).abs() <= 1e-10 * volume, "n {n} axis {axis}");
            let mut y = vec![0.0; k.nrows()];
            k.apply(&f, &mut y);
            for (i, blk) in y.chunks(2).enumerate() {
                let w = rule.weights()[i];
                assert!((blk[axis] - w).abs() < 1e-12 && blk[1 - axis].abs() < 1e-12);
            }
        }
        // derivative rows sum to zero only up to rounding
        let c = vec![3.5; g.num_coeffs()];
        assert!(k.objective(&c) < 1e-12 * 3.5 * volume);
    }
}

#[test]
fn objective_is_sum_over_cells() {
    let mask = random_mask(20, 0.04, 2);
    let (g, region) = setup(20, 3, &mask);
    let rule = build_rule(&g, &region, &[3, 3]).unwrap();
    let k = assemble_gradient_operator(&g, &rule);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f: Vec<f64> = (0..g.num_coeffs()).map(|_| rng.random_range(0.0..255.0)).collect();
    let mut y = vec![0.0; k.nrows()];
    k.apply(&f, &mut y);
    let per = rule.nodes_per_cell() * 2;
    let by_cell: f64 = y.chunks(per).map(|c| block_norm_sum(c, 2)).sum();
    assert!((by_cell - k.objective(&f)).abs() <= 1e-12 * by_cell);
    // direct evaluation of Σ w ‖∇s‖ through the basis
    let direct: f64 = (0..rule.num_nodes())
        .map(|i| {
            let rows = g.eval_gradient_rows(rule.node(i)).unwrap();
            let gx = rows[0].dot(&f);
            let gy = rows[1].dot(&f);
            rule.weights()[i] * (gx * gx + gy * gy).sqrt()
        })
        .sum();
    assert!((direct - by_cell).abs() <= 1e-10 * direct);
}

#[test]
fn operator_rows_are_local() {
    let mask = random_mask(16, 0.05, 4);
    for n in 2..=4 {
        let (g, region) = setup(16, n, &mask);
        let rule = build_rule(&g, &region, &[n, n]).unwrap();
        let k = assemble_gradient_operator(&g, &rule).to_sparse();
        for r in 0..k.nrows() {
            let (cols, _) = k.row(r);
            assert!(cols.len() <= n * n);
        }
    }
}

#[test]
fn quadrature_self_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mask = random_mask(20, 0.05, 6);
    for n in 2..=4 {
        let (g, region) = setup(20, n, &mask);
        let lx = g.linear_coefficients(0);
        let ly = g.linear_coefficients(1);
        let f: Vec<f64> = (0..g.num_coeffs())
            .map(|i| lx[i] + 0.5 * ly[i] + 0.05 * rng.random_range(-1.0..1.0))
            .collect();
        let k4 = assemble_gradient_operator(&g, &build_rule(&g, &region, &[4, 4]).unwrap());
        let k8 = assemble_gradient_operator(&g, &build_rule(&g, &region, &[8, 8]).unwrap());
        let (a, b) = (k4.objective(&f), k8.objective(&f));
        assert!((a - b).abs() < 1e-6 * b, "n {n}: {a} vs {b}");
    }
}

#[test]
fn empty_mask_gives_empty_region() {
    let (g, region) = setup(10, 3, &InpaintingMask::empty(&[10, 10]));
    assert!(region.is_empty());
    let rule = build_rule(&g, &region, &[3, 3]).unwrap();
    assert_eq!(rule.num_nodes(), 0);
}
