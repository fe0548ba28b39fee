//! Test-function battery: smooth, oscillating, translated, band-limited and
//! slowly decaying members, all sampled on a given box.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{apply_multiplier, frequency_grid};
use crate::grid::{BoxDomain, GridFunction};
use crate::kernels::smooth_step;
use crate::C64;

/// Named members of the default battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryId {
    GaussNarrow,
    GaussMid,
    GaussWide,
    GaussShifted,
    Hat,
    CubicSpline,
    Chirp,
    FmOne,
    FmThree,
    RandomBand,
    SmoothedCube,
    TranslatedBump,
}

impl BatteryId {
    pub const ALL: [BatteryId; 12] = [
        BatteryId::GaussNarrow,
        BatteryId::GaussMid,
        BatteryId::GaussWide,
        BatteryId::GaussShifted,
        BatteryId::Hat,
        BatteryId::CubicSpline,
        BatteryId::Chirp,
        BatteryId::FmOne,
        BatteryId::FmThree,
        BatteryId::RandomBand,
        BatteryId::SmoothedCube,
        BatteryId::TranslatedBump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BatteryId::GaussNarrow => "gauss_narrow",
            BatteryId::GaussMid => "gauss_mid",
            BatteryId::GaussWide => "gauss_wide",
            BatteryId::GaussShifted => "gauss_shifted",
            BatteryId::Hat => "hat",
            BatteryId::CubicSpline => "cubic_spline",
            BatteryId::Chirp => "chirp",
            BatteryId::FmOne => "fm_1",
            BatteryId::FmThree => "fm_3",
            BatteryId::RandomBand => "random_band",
            BatteryId::SmoothedCube => "smoothed_cube",
            BatteryId::TranslatedBump => "translated_bump",
        }
    }
}

/// One battery member.
#[derive(Debug, Clone)]
pub struct BatteryFunction {
    pub id: String,
    pub f: GridFunction,
}

fn tensor<F: Fn(f64) -> f64>(d: &BoxDomain, g: F) -> GridFunction {
    let dim = d.dim();
    GridFunction::from_real_fn(*d, |x| if dim == 1 { g(x[0]) } else { g(x[0]) * g(x[1]) })
}

/// Cardinal B-spline of order `m` supported on `[0, m]` (unit integral).
pub fn cardinal_bspline(m: u32, x: f64) -> f64 {
    if x <= 0.0 || x >= m as f64 {
        return 0.0;
    }
    let mut fact = 1.0;
    for i in 1..m {
        fact *= i as f64;
    }
    let mut s = 0.0;
    let mut binom = 1.0;
    for k in 0..=m {
        let t = x - k as f64;
        if t > 0.0 {
            s += binom * if k % 2 == 0 { 1.0 } else { -1.0 } * t.powi(m as i32 - 1);
        }
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    s / fact
}

/// Centered B-spline of order `m` (support `[-m/2, m/2]`).
pub fn centered_bspline(m: u32, x: f64) -> f64 {
    cardinal_bspline(m, x + m as f64 / 2.0)
}

/// Frequency half-width `c` of `f_m(t) = (2 sin(c t)/t)^m` placing the
/// spectrum exactly in `[-1/2, 1/2]`.
pub fn fm_default_c(m: u32) -> f64 {
    1.0 / (2.0 * m as f64)
}

/// `f_m(t) = (2 sin(c t) / t)^m` on the real line (1-d profile).
pub fn fm_value(m: u32, c: f64, t: f64) -> f64 {
    if t.abs() < 1e-12 {
        (2.0 * c).powi(m as i32)
    } else {
        (2.0 * (c * t).sin() / t).powi(m as i32)
    }
}

/// Fourier transform of `f_m`: `2 pi` times the `m`-fold convolution of
/// `chi_[-c, c]`, a dilated B-spline.
pub fn fm_hat(m: u32, c: f64, xi: f64) -> f64 {
    let s = 2.0 * c;
    2.0 * PI * s.powi(m as i32 - 1) * cardinal_bspline(m, xi / s + m as f64 / 2.0)
}

/// Periodization of `f_m` over the box, sampled exactly through its Fourier
/// series (the spectrum is compact). In 2-d the tensor product is used.
pub fn fm_periodized(d: &BoxDomain, m: u32, c: f64) -> Result<GridFunction> {
    if m == 0 || !(c > 0.0) {
        return Err(Error::Parameter(format!("f_m needs m >= 1 and c > 0, got m = {m}, c = {c}")));
    }
    let nyq = PI / d.spacing();
    if m as f64 * c >= nyq {
        return Err(Error::Resolution(format!("spectrum of f_{m} exceeds the Nyquist frequency {nyq}")));
    }
    let dim = d.dim();
    let l = d.half_width();
    // Fourier series coefficients fhat(xi)/(2L)^n, rotated so that sample 0
    // sits at the box corner x = -L; the DFT of samples is fhat(xi)/h^n.
    let h = d.cell_volume();
    let mut buf = frequency_grid(d, |xi| {
        let v = if dim == 1 { fm_hat(m, c, xi[0]) } else { fm_hat(m, c, xi[0]) * fm_hat(m, c, xi[1]) };
        C64::from_polar(v / h, -(xi[0] + xi[1]) * l)
    });
    crate::fft::fft_nd(&mut buf, dim, d.samples(), true);
    let values: Vec<C64> = buf.iter().map(|v| C64::new(v.re, 0.0)).collect();
    GridFunction::new(*d, values)
}

/// Smooth `f_0` with `chi_(3,4) <= f_0 <= chi_(2,5)`.
pub fn f0_profile(t: f64) -> f64 {
    smooth_step(t - 2.0) * smooth_step(5.0 - t)
}

/// `f_a(t) = f_0(t - a)` (tensor product in 2-d).
pub fn translated_bump(d: &BoxDomain, a: f64) -> GridFunction {
    tensor(d, |t| f0_profile(t - a))
}

/// Seeded random real field with spectrum in `|xi| <= band`.
pub fn random_band_limited(d: &BoxDomain, band: f64, seed: u64) -> GridFunction {
    let rng = std::cell::RefCell::new(ChaCha8Rng::seed_from_u64(seed));
    let spec = frequency_grid(d, |xi| {
        let mut rng = rng.borrow_mut();
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if r <= band {
            C64::new(a, b)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let mut buf = spec;
    crate::fft::fft_nd(&mut buf, d.dim(), d.samples(), true);
    let peak = buf.iter().fold(0.0f64, |m, v| m.max(v.re.abs())).max(1e-300);
    let values = buf.iter().map(|v| C64::new(v.re / peak, 0.0)).collect();
    GridFunction { domain: *d, values }
}

/// `chi_[-1,1]^n` smoothed spectrally by `exp(-sigma^2 |xi|^2 / 2)`.
pub fn smoothed_cube(d: &BoxDomain, sigma: f64) -> GridFunction {
    let chi = tensor(d, |t| if t.abs() <= 1.0 { 1.0 } else { 0.0 });
    let m = frequency_grid(d, |xi| C64::new((-sigma * sigma * (xi[0] * xi[0] + xi[1] * xi[1]) / 2.0).exp(), 0.0));
    let v = apply_multiplier(d, &chi.values, &m).into_iter().map(|z| C64::new(z.re, 0.0)).collect();
    GridFunction { domain: *d, values: v }
}

/// Samples one battery member.
pub fn battery_function(d: &BoxDomain, id: BatteryId, seed: u64) -> Result<GridFunction> {
    let gauss = |s: f64, c: f64| tensor(d, move |t| (-(t - c) * (t - c) / (2.0 * s * s)).exp());
    Ok(match id {
        BatteryId::GaussNarrow => gauss(0.25, 0.0),
        BatteryId::GaussMid => gauss(0.5, 0.0),
        BatteryId::GaussWide => gauss(1.0, 0.0),
        BatteryId::GaussShifted => gauss(0.5, 1.5),
        BatteryId::Hat => tensor(d, |t| centered_bspline(2, t)),
        BatteryId::CubicSpline => tensor(d, |t| centered_bspline(4, t)),
        BatteryId::Chirp => tensor(d, |t| (2.0 * t + 0.5 * t * t).cos() * (-t * t / 2.0).exp()),
        BatteryId::FmOne => fm_periodized(d, 1, fm_default_c(1))?,
        BatteryId::FmThree => fm_periodized(d, 3, fm_default_c(3))?,
        BatteryId::RandomBand => random_band_limited(d, 4.0, seed),
        BatteryId::SmoothedCube => smoothed_cube(d, 0.1),
        BatteryId::TranslatedBump => translated_bump(d, -3.5),
    })
}

/// The default 12-member battery.
pub fn default_battery(d: &BoxDomain, seed: u64) -> Result<Vec<BatteryFunction>> {
    select_battery(d, &BatteryId::ALL, seed)
}

/// A chosen subset of the battery, in the given order.
pub fn select_battery(d: &BoxDomain, ids: &[BatteryId], seed: u64) -> Result<Vec<BatteryFunction>> {
    ids.iter()
        .map(|&id| Ok(BatteryFunction { id: id.name().to_string(), f: battery_function(d, id, seed)? }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bspline_partition_of_unity() {
        for m in 1..6 {
            for i in 0..20 {
                let x = 0.05 * i as f64 + 0.013;
                let s: f64 = (-8..8).map(|k| cardinal_bspline(m, x + k as f64)).sum();
                assert!((s - 1.0).abs() < 1e-12, "order {m}: {s}");
            }
        }
    }

    #[test]
    fn periodized_fm_matches_direct_sum() {
        let d = BoxDomain::new(1, 32.0, 512).unwrap();
        let f = fm_periodized(&d, 3, fm_default_c(3)).unwrap();
        for idx in [0usize, 100, 256, 300, 511] {
            let x = d.coord(idx);
            let direct: f64 = (-2000..=2000).map(|k| fm_value(3, fm_default_c(3), x + 64.0 * k as f64)).sum();
            assert!((f.values[idx].re - direct).abs() < 1e-9, "{x}: {} vs {direct}", f.values[idx].re);
        }
    }

    #[test]
    fn battery_is_finite_and_named() {
        let d = BoxDomain::new(1, 8.0, 512).unwrap();
        let b = default_battery(&d, 7).unwrap();
        assert_eq!(b.len(), 12);
        for m in &b {
            assert!(m.f.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
            assert!(m.f.max_abs() > 0.0, "{}", m.id);
        }
    }
}
