//! Order-deterministic reductions and small least-squares fits.

/// Pairwise (tree) summation. The association order depends only on the
/// slice length, so results do not depend on how the slice was produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Weighted mean and its Monte-Carlo standard error.
pub fn weighted_mean_and_error(values: &[f64], weights: &[f64]) -> (f64, f64) {
    assert_eq!(values.len(), weights.len());
    let total_w = pairwise_sum(weights);
    let products: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    let mean = pairwise_sum(&products) / total_w;
    let sq: Vec<f64> = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean).powi(2))
        .collect();
    let variance = pairwise_sum(&sq) / total_w;
    let w2: Vec<f64> = weights.iter().map(|w| (w / total_w).powi(2)).collect();
    (mean, (variance * pairwise_sum(&w2)).sqrt())
}

/// Least-squares line y = a + b x; returns (a, b).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Least-squares polynomial fit of the given degree. Coefficients are in
/// increasing power; the second value is R².
#[allow(clippy::needless_range_loop)]
pub fn polynomial_fit(x: &[f64], y: &[f64], degree: usize) -> (Vec<f64>, f64) {
    let m = degree + 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    for (&xi, &yi) in x.iter().zip(y) {
        let powers: Vec<f64> = (0..m).map(|k| xi.powi(k as i32)).collect();
        for r in 0..m {
            for c in 0..m {
                a[r][c] += powers[r] * powers[c];
            }
            a[r][m] += powers[r] * yi;
        }
    }
    // Gaussian elimination with partial pivoting on the normal equations
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..=m {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut coef = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * coef[k]).sum();
        coef[row] = (a[row][m] - s) / a[row][row];
    }
    let eval = |xi: f64| coef.iter().rev().fold(0.0, |acc, c| acc * xi + c);
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(&xi, &yi)| (yi - eval(xi)).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|yi| (yi - my).powi(2)).sum();
    (coef, 1.0 - ss_res / ss_tot)
}

/// Location of the maximum of sampled data, refined by a parabola through
/// the three samples around the largest one.
pub fn refined_peak(x: &[f64], y: &[f64]) -> (f64, f64) {
    let i = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    if i == 0 || i + 1 == y.len() {
        return (x[i], y[i]);
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if a >= 0.0 {
        return (x1, y1);
    }
    let xv = -b / (2.0 * a);
    let c = y1 - a * x1 * x1 - b * x1;
    (xv.clamp(x0, x2), a * xv * xv + b * xv + c)
}
