//! Cox–de Boor recursion on an explicit knot vector.

/// Order-`n` B-spline `i` on `knots` at `x`.
///
/// Right-continuous at interior knots; at the last knot the final
/// nondegenerate interval is treated as closed.
pub fn cox_de_boor(knots: &[f64], i: usize, n: usize, x: f64) -> f64 {
    let last = *knots.last().unwrap();
    if n == 1 {
        let (a, b) = (knots[i], knots[i + 1]);
        if a < b && ((a <= x && x < b) || (x == last && b == last)) {
            return 1.0;
        }
        return 0.0;
    }
    let mut v = 0.0;
    let d1 = knots[i + n - 1] - knots[i];
    if d1 > 0.0 {
        v += (x - knots[i]) / d1 * cox_de_boor(knots, i, n - 1, x);
    }
    let d2 = knots[i + n] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + n] - x) / d2 * cox_de_boor(knots, i + 1, n - 1, x);
    }
    v
}

/// Derivative through the order-reduction formula.
pub fn cox_de_boor_derivative(knots: &[f64], i: usize, n: usize, x: f64) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let p = (n - 1) as f64;
    let mut v = 0.0;
    let d1 = knots[i + n - 1] - knots[i];
    if d1 > 0.0 {
        v += p / d1 * cox_de_boor(knots, i, n - 1, x);
    }
    let d2 = knots[i + n] - knots[i + 1];
    if d2 > 0.0 {
        v -= p / d2 * cox_de_boor(knots, i + 1, n - 1, x);
    }
    v
}

/// Open knot vector on `[a, b]` with `order`-fold ends around `interior`.
pub fn open_knots(order: usize, a: f64, b: f64, interior: &[f64]) -> Vec<f64> {
    let mut t = vec![a; order];
    t.extend_from_slice(interior);
    t.extend(std::iter::repeat_n(b, order));
    t
}

/// Knots whose Greville points are the centers of `pixels` unit pixels on
/// `[0, pixels]`: interior knots on pixel edges for odd order, on centers
/// for even order.
pub fn pixel_knots(order: usize, pixels: usize) -> Vec<f64> {
    let interior: Vec<f64> = if order % 2 == 1 {
        (1..pixels).map(|k| k as f64).collect()
    } else {
        (0..pixels).map(|k| k as f64 + 0.5).collect()
    };
    open_knots(order, 0.0, pixels as f64, &interior)
}

/// Greville abscissae `(t_{i+1} + .. + t_{i+n-1}) / (n - 1)`.
pub fn greville(knots: &[f64], order: usize) -> Vec<f64> {
    let count = knots.len() - order;
    (0..count)
        .map(|i| knots[i + 1..i + order].iter().sum::<f64>() / (order - 1) as f64)
        .collect()
}

/// Tensor-product basis value `Π_j B_{α_j}(x_j)`; `alpha` is flat with the
/// last axis fastest.
pub fn tensor_value(knots: &[Vec<f64>], orders: &[usize], alpha: usize, x: &[f64]) -> f64 {
    let dims: Vec<usize> = knots.iter().zip(orders).map(|(t, n)| t.len() - n).collect();
    let idx = unflatten(alpha, &dims);
    (0..dims.len())
        .map(|j| cox_de_boor(&knots[j], idx[j], orders[j], x[j]))
        .product()
}

/// Gradient of the tensor-product basis function `alpha` at `x`.
pub fn tensor_gradient(knots: &[Vec<f64>], orders: &[usize], alpha: usize, x: &[f64]) -> Vec<f64> {
    let dims: Vec<usize> = knots.iter().zip(orders).map(|(t, n)| t.len() - n).collect();
    let idx = unflatten(alpha, &dims);
    (0..dims.len())
        .map(|k| {
            (0..dims.len())
                .map(|j| {
                    if j == k {
                        cox_de_boor_derivative(&knots[j], idx[j], orders[j], x[j])
                    } else {
                        cox_de_boor(&knots[j], idx[j], orders[j], x[j])
                    }
                })
                .product()
        })
        .collect()
}

pub fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for j in (0..dims.len()).rev() {
        out[j] = flat % dims[j];
        flat /= dims[j];
    }
    out
}
