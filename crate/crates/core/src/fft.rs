//! Thin FFT layer over `rustfft`: n-dimensional transforms on row-major
//! buffers, Fourier multipliers on the box frequency grid, and zero-padded
//! spatial convolutions.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::grid::BoxDomain;
use crate::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// In-place n-dimensional DFT of a row-major cube of side `n`.
/// The inverse transform is normalized by the total sample count.
pub fn fft_nd(data: &mut [C64], dim: usize, n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let fft = plan(n, inverse);
    match dim {
        1 => fft.process(data),
        2 => {
            for row in data.chunks_exact_mut(n) {
                fft.process(row);
            }
            let mut col = vec![C64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = data[r * n + c];
                }
                fft.process(&mut col);
                for r in 0..n {
                    data[r * n + c] = col[r];
                }
            }
        }
        _ => unreachable!("dimension checked by BoxDomain"),
    }
    if inverse {
        let s = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Signed DFT index: k for k < n/2, k - n otherwise.
#[inline]
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Angular frequencies 2*pi*k/(n*h) along one axis, in DFT order.
pub fn axis_frequencies(domain: &BoxDomain) -> Vec<f64> {
    let n = domain.samples();
    let scale = 2.0 * PI / (n as f64 * domain.spacing());
    (0..n).map(|k| signed_index(k, n) as f64 * scale).collect()
}

/// Evaluates `symbol(xi)` on the full frequency grid (row-major, DFT order).
pub fn frequency_grid<F>(domain: &BoxDomain, symbol: F) -> Vec<C64>
where
    F: Fn([f64; 2]) -> C64,
{
    let freqs = axis_frequencies(domain);
    let n = domain.samples();
    match domain.dim() {
        1 => freqs.iter().map(|&x| symbol([x, 0.0])).collect(),
        _ => {
            let mut out = Vec::with_capacity(n * n);
            for &a in &freqs {
                for &b in &freqs {
                    out.push(symbol([a, b]));
                }
            }
            out
        }
    }
}

/// Returns the inverse DFT of `m * DFT(values)`.
pub fn apply_multiplier(domain: &BoxDomain, values: &[C64], m: &[C64]) -> Vec<C64> {
    let mut buf = values.to_vec();
    fft_nd(&mut buf, domain.dim(), domain.samples(), false);
    for (b, s) in buf.iter_mut().zip(m) {
        *b *= *s;
    }
    fft_nd(&mut buf, domain.dim(), domain.samples(), true);
    buf
}

/// Non-periodic convolution `x -> sum_y f(y) K(x - y) h^n` with the function
/// taken as zero outside the box. `kernel` receives displacements in real
/// units, each component in [-2L, 2L).
pub fn convolve_zero_padded<K>(domain: &BoxDomain, values: &[f64], kernel: K) -> Vec<f64>
where
    K: Fn([f64; 2]) -> f64,
{
    let n = domain.samples();
    let m = 2 * n;
    let dim = domain.dim();
    let h = domain.spacing();
    let disp = |d: usize| -> f64 { signed_index(d, m) as f64 * h };
    let total = m.pow(dim as u32);
    let mut fb = vec![C64::new(0.0, 0.0); total];
    let mut kb = vec![C64::new(0.0, 0.0); total];
    match dim {
        1 => {
            for i in 0..n {
                fb[i] = C64::new(values[i], 0.0);
            }
            for d in 0..m {
                kb[d] = C64::new(kernel([disp(d), 0.0]), 0.0);
            }
        }
        _ => {
            for r in 0..n {
                for c in 0..n {
                    fb[r * m + c] = C64::new(values[r * n + c], 0.0);
                }
            }
            for r in 0..m {
                for c in 0..m {
                    kb[r * m + c] = C64::new(kernel([disp(r), disp(c)]), 0.0);
                }
            }
        }
    }
    fft_nd(&mut fb, dim, m, false);
    fft_nd(&mut kb, dim, m, false);
    for (a, b) in fb.iter_mut().zip(&kb) {
        *a *= *b;
    }
    fft_nd(&mut fb, dim, m, true);
    let vol = h.powi(dim as i32);
    match dim {
        1 => (0..n).map(|i| fb[i].re * vol).collect(),
        _ => {
            let mut out = Vec::with_capacity(n * n);
            for r in 0..n {
                for c in 0..n {
                    out.push(fb[r * m + c].re * vol);
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_2d() {
        let n = 8;
        let mut v: Vec<C64> = (0..n * n).map(|i| C64::new(i as f64, -(i as f64) * 0.5)).collect();
        let orig = v.clone();
        fft_nd(&mut v, 2, n, false);
        fft_nd(&mut v, 2, n, true);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_padded_matches_direct_sum() {
        let d = BoxDomain::new(1, 1.0, 16).unwrap();
        let f: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64).collect();
        let k = |y: [f64; 2]| (-y[0] * y[0]).exp();
        let got = convolve_zero_padded(&d, &f, k);
        let h = d.spacing();
        for x in 0..16 {
            let want: f64 = (0..16).map(|y| f[y] * k([(x as f64 - y as f64) * h, 0.0]) * h).sum();
            assert!((got[x] - want).abs() < 1e-12);
        }
    }
}
