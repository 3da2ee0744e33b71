//! Dense least squares by Householder QR; only used for small column counts.

/// Solves min ||A b - y||₂ for a row-major `rows x cols` matrix. Returns `None`
/// when A is numerically rank deficient.
pub fn least_squares(a: &[f64], rows: usize, cols: usize, y: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.len(), rows * cols);
    assert_eq!(y.len(), rows);
    if rows < cols {
        return None;
    }
    let mut r = a.to_vec();
    let mut qty = y.to_vec();
    let col_norm_max = (0..cols)
        .map(|j| (0..rows).map(|i| r[i * cols + j].powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);

    for k in 0..cols {
        let norm = (k..rows).map(|i| r[i * cols + k].powi(2)).sum::<f64>().sqrt();
        if norm <= 1e-13 * col_norm_max {
            return None;
        }
        let alpha = if r[k * cols + k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..rows).map(|i| r[i * cols + k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..cols {
            let dot: f64 = (k..rows).map(|i| v[i - k] * r[i * cols + j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..rows {
                r[i * cols + j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..rows).map(|i| v[i - k] * qty[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..rows {
            qty[i] -= f * v[i - k];
        }
    }

    let mut b = vec![0.0; cols];
    for k in (0..cols).rev() {
        let s: f64 = (k + 1..cols).map(|j| r[k * cols + j] * b[j]).sum();
        b[k] = (qty[k] - s) / r[k * cols + k];
    }
    Some(b)
}
