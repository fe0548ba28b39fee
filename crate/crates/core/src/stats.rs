//! Small least-squares helpers for exponent fits.

/// Least squares `y ~ X beta` through normal equations (`X` is `m x k`,
/// `k` small). Returns `None` for a singular system.
pub fn lstsq(x: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let k = x.first()?.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (row, &yi) in x.iter().zip(y) {
        for r in 0..k {
            for c in 0..k {
                a[r][c] += row[r] * row[c];
            }
            a[r][k] += row[r] * yi;
        }
    }
    solve(a)
}

/// Gaussian elimination with partial pivoting on an augmented `k x (k+1)` matrix.
pub fn solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = a.len();
    let scale = a.iter().flat_map(|r| r[..k].iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..k {
        let piv = (col..k).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale.max(1e-300) {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            for c in col..=k {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut out = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * out[c]).sum();
        out[r] = (a[r][k] - s) / a[r][r];
    }
    Some(out)
}

/// Slope of the least-squares line through `(x, y)`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v]).collect();
    lstsq(&rows, y).map(|b| b[1]).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_plane() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![1.0, i as f64, ((i * 7) % 5) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 0.5 - 2.0 * r[1] + 0.25 * r[2]).collect();
        let b = lstsq(&rows, &y).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-12 && (b[1] + 2.0).abs() < 1e-12 && (b[2] - 0.25).abs() < 1e-12);
        assert!((slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-14);
    }
}
