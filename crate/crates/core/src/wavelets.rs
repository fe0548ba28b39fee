//! Spline biorthogonal (Cohen-Daubechies-Feauveau) filter banks, periodic
//! tensor wavelet transforms and the wavelet sequence norm.
//!
//! The filter engine is generic over the scalar type; grid transforms run in
//! `f64` on the real and imaginary parts separately.

use std::fmt;
use std::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::decompositions::{coeff_norm, CoefficientField};
use crate::error::{Error, Result};
use crate::grid::{BoxDomain, DyadicCube, GridFunction, ScaleWindow};
use crate::norms::SpaceSpec;
use crate::C64;

/// A spline biorthogonal family `CDF(N, N~)`: the synthesis scaling function
/// is the B-spline of order `N`, the analysis one has `N~` as its
/// polynomial-reproduction order. Named `bior{N}.{N~}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveletPreset {
    pub primal: u32,
    pub dual: u32,
}

/// Every shipped preset, ordered by (N, N~).
pub const PRESETS: [WaveletPreset; 15] = [
    WaveletPreset { primal: 1, dual: 1 },
    WaveletPreset { primal: 1, dual: 3 },
    WaveletPreset { primal: 1, dual: 5 },
    WaveletPreset { primal: 2, dual: 2 },
    WaveletPreset { primal: 2, dual: 4 },
    WaveletPreset { primal: 2, dual: 6 },
    WaveletPreset { primal: 2, dual: 8 },
    WaveletPreset { primal: 3, dual: 1 },
    WaveletPreset { primal: 3, dual: 3 },
    WaveletPreset { primal: 3, dual: 5 },
    WaveletPreset { primal: 3, dual: 7 },
    WaveletPreset { primal: 3, dual: 9 },
    WaveletPreset { primal: 4, dual: 4 },
    WaveletPreset { primal: 4, dual: 6 },
    WaveletPreset { primal: 4, dual: 8 },
];

impl fmt::Display for WaveletPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bior{}.{}", self.primal, self.dual)
    }
}

impl FromStr for WaveletPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("unknown wavelet preset {s:?}"));
        let rest = s.strip_prefix("bior").ok_or_else(bad)?;
        let (a, b) = rest.split_once('.').ok_or_else(bad)?;
        let p = WaveletPreset { primal: a.parse().map_err(|_| bad())?, dual: b.parse().map_err(|_| bad())? };
        if PRESETS.contains(&p) {
            Ok(p)
        } else {
            Err(bad())
        }
    }
}

impl Serialize for WaveletPreset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WaveletPreset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Smoothness and moment budgets of a filter bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    /// Synthesis functions are `C^K` (`-1`: not continuous).
    pub k: i32,
    /// Synthesis wavelet has vanishing moments of orders `0..=L`.
    pub l: i32,
    /// Analysis functions are `C^{K~}` (lower bound from the Sobolev estimate).
    pub k_tilde: i32,
    /// Analysis wavelet has vanishing moments of orders `0..=L~`.
    pub l_tilde: i32,
    /// Sobolev exponent estimate of the analysis scaling function.
    pub dual_sobolev: f64,
}

/// Analysis and synthesis filter quadruple. Taps are stored with the index
/// of their first entry (`*_start`).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank<T> {
    pub preset: WaveletPreset,
    /// Analysis low pass `h~`.
    pub ana_low: Vec<T>,
    /// Analysis high pass `g~`.
    pub ana_high: Vec<T>,
    /// Synthesis low pass `h`.
    pub syn_low: Vec<T>,
    /// Synthesis high pass `g`.
    pub syn_high: Vec<T>,
    pub ana_low_start: i64,
    pub ana_high_start: i64,
    pub syn_low_start: i64,
    pub syn_high_start: i64,
    pub budgets: Budgets,
}

pub type FilterBank32 = FilterBank<f32>;
pub type FilterBank64 = FilterBank<f64>;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Laurent polynomial product; returns (coefficients, start index).
fn poly_mul(a: &[f64], sa: i64, b: &[f64], sb: i64) -> (Vec<f64>, i64) {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (k, y) in b.iter().enumerate() {
            out[i + k] += x * y;
        }
    }
    (out, sa + sb)
}

/// `((1 + z)/2)^n` starting at `z^0`.
fn binomial_poly(n: u32) -> Vec<f64> {
    (0..=n).map(|k| binomial(n, k) / (n as f64).exp2()).collect()
}

/// `sum_{m < l} C(l-1+m, m) s^m` with `s = (2 - z - z^{-1})/4`; returns taps
/// starting at `z^{-(l-1)}`.
fn dual_factor(l: u32) -> Vec<f64> {
    let s = [-0.25, 0.5, -0.25];
    let mut acc = vec![0.0; 2 * l as usize - 1];
    let mut pw = vec![1.0];
    let mut pw_start = 0i64;
    let off = l as i64 - 1;
    for m in 0..l {
        let c = binomial(l - 1 + m, m);
        for (i, v) in pw.iter().enumerate() {
            acc[(pw_start + off) as usize + i] += c * v;
        }
        let (np, ns) = poly_mul(&pw, pw_start, &s, -1);
        pw = np;
        pw_start = ns;
    }
    acc
}

/// Spectral radius of a small square matrix by normalized repeated squaring.
fn spectral_radius(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut log_scale = 0.0f64;
    let mut power = 1.0f64;
    for _ in 0..40 {
        let mut sq = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                if m[i][k] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    sq[i][j] += m[i][k] * m[k][j];
                }
            }
        }
        log_scale *= 2.0;
        power *= 2.0;
        let norm = sq.iter().flatten().fold(0.0f64, |a, &x| a.max(x.abs()));
        if norm == 0.0 {
            return 0.0;
        }
        log_scale += norm.ln();
        for row in sq.iter_mut() {
            for x in row.iter_mut() {
                *x /= norm;
            }
        }
        m = sq;
    }
    (log_scale / power).exp()
}

/// Sobolev exponent of the scaling function with normalized symbol
/// `m(xi) = ((1 + e^{-i xi})/2)^n R(xi)`, given the taps of `R`
/// (`R(0) = 1`): `s = n - log2(rho(T)) / 2`, `T_{ik} = 2 a_{2i-k}` with `a` the
/// Fourier coefficients of `|R|^2`. Using the full transfer matrix makes the
/// value a lower bound.
pub fn sobolev_exponent(n: u32, remainder: &[f64]) -> f64 {
    let rev: Vec<f64> = remainder.iter().rev().cloned().collect();
    let (a, _) = poly_mul(remainder, 0, &rev, 0);
    let r = (a.len() / 2) as i64;
    let coef = |k: i64| -> f64 {
        let idx = k + r;
        if (0..a.len() as i64).contains(&idx) {
            a[idx as usize]
        } else {
            0.0
        }
    };
    let size = (2 * r + 1) as usize;
    let t: Vec<Vec<f64>> = (0..size)
        .map(|i| (0..size).map(|k| 2.0 * coef(2 * (i as i64 - r) - (k as i64 - r))).collect())
        .collect();
    n as f64 - spectral_radius(t).log2() / 2.0
}

/// Largest `k` with `H^s` embedded in `C^k` (`s > k + 1/2`); `-1` if none.
fn smoothness_from_sobolev(s: f64) -> i32 {
    let k = (s - 0.5).ceil() as i32 - 1;
    k.max(-1)
}

impl<T: Float> FilterBank<T> {
    /// Converts the taps to another float type.
    pub fn cast<U: Float>(&self) -> FilterBank<U> {
        let c = |v: &[T]| v.iter().map(|x| U::from(*x).expect("finite tap")).collect();
        FilterBank {
            preset: self.preset,
            ana_low: c(&self.ana_low),
            ana_high: c(&self.ana_high),
            syn_low: c(&self.syn_low),
            syn_high: c(&self.syn_high),
            ana_low_start: self.ana_low_start,
            ana_high_start: self.ana_high_start,
            syn_low_start: self.syn_low_start,
            syn_high_start: self.syn_high_start,
            budgets: self.budgets,
        }
    }

    /// Longest filter support.
    pub fn max_len(&self) -> usize {
        self.ana_low.len().max(self.ana_high.len()).max(self.syn_low.len()).max(self.syn_high.len())
    }

    /// One periodic analysis step: `a[m] = sum_k h~[k] c[2m + k]`,
    /// `d[m] = sum_k g~[k] c[2m + k]`.
    pub fn analysis_step(&self, c: &[T]) -> (Vec<T>, Vec<T>) {
        let n = c.len() as i64;
        let half = c.len() / 2;
        let corr = |taps: &[T], start: i64| -> Vec<T> {
            (0..half)
                .map(|m| {
                    taps.iter().enumerate().fold(T::zero(), |acc, (i, &t)| {
                        let idx = (2 * m as i64 + start + i as i64).rem_euclid(n) as usize;
                        acc + t * c[idx]
                    })
                })
                .collect()
        };
        (corr(&self.ana_low, self.ana_low_start), corr(&self.ana_high, self.ana_high_start))
    }

    /// One periodic synthesis step: `c[n] = sum_m a[m] h[n - 2m] + d[m] g[n - 2m]`.
    pub fn synthesis_step(&self, a: &[T], d: &[T]) -> Vec<T> {
        let n = 2 * a.len();
        let mut out = vec![T::zero(); n];
        let mut spread = |coef: &[T], taps: &[T], start: i64| {
            for (m, &v) in coef.iter().enumerate() {
                if v == T::zero() {
                    continue;
                }
                for (i, &t) in taps.iter().enumerate() {
                    let idx = (2 * m as i64 + start + i as i64).rem_euclid(n as i64) as usize;
                    out[idx] = out[idx] + v * t;
                }
            }
        };
        spread(a, &self.syn_low, self.syn_low_start);
        spread(d, &self.syn_high, self.syn_high_start);
        out
    }

    /// Multi-level 1-d analysis; returns `(approximation, details)` with
    /// `details[0]` the finest band.
    pub fn forward_1d(&self, c: &[T], depth: usize) -> (Vec<T>, Vec<Vec<T>>) {
        let mut a = c.to_vec();
        let mut details = Vec::with_capacity(depth);
        for _ in 0..depth {
            let (na, nd) = self.analysis_step(&a);
            details.push(nd);
            a = na;
        }
        (a, details)
    }

    /// Inverse of [`FilterBank::forward_1d`].
    pub fn inverse_1d(&self, approx: &[T], details: &[Vec<T>]) -> Vec<T> {
        let mut a = approx.to_vec();
        for d in details.iter().rev() {
            a = self.synthesis_step(&a, d);
        }
        a
    }
}

/// Builds the spline biorthogonal filters of a preset.
pub fn build_preset(preset: WaveletPreset) -> Result<FilterBank64> {
    let (n, nd) = (preset.primal, preset.dual);
    if n == 0 || nd == 0 || (n + nd) % 2 != 0 {
        return Err(Error::Parameter(format!("{preset}: orders must be positive with even sum")));
    }
    let l = (n + nd) / 2;
    let sqrt2 = std::f64::consts::SQRT_2;
    let syn_low: Vec<f64> = binomial_poly(n).iter().map(|x| x * sqrt2).collect();
    let syn_low_start = -((n / 2) as i64);
    let rem = dual_factor(l);
    let (dual, dual_start) = poly_mul(&binomial_poly(nd), -((nd / 2) as i64), &rem, -(l as i64 - 1));
    let ana_low: Vec<f64> = dual.iter().map(|x| x * sqrt2).collect();
    let ana_low_start = dual_start;
    // g[k] = (-1)^k h~[1 - k], g~[k] = (-1)^k h[1 - k].
    let mirror = |taps: &[f64], start: i64| -> (Vec<f64>, i64) {
        let end = start + taps.len() as i64 - 1;
        let new_start = 1 - end;
        let v = (0..taps.len())
            .map(|i| {
                let k = new_start + i as i64;
                let src = (1 - k - start) as usize;
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                sign * taps[src]
            })
            .collect();
        (v, new_start)
    };
    let (syn_high, syn_high_start) = mirror(&ana_low, ana_low_start);
    let (ana_high, ana_high_start) = mirror(&syn_low, syn_low_start);
    let dual_sobolev = sobolev_exponent(nd, &rem);
    let budgets = Budgets {
        k: n as i32 - 2,
        l: nd as i32 - 1,
        k_tilde: smoothness_from_sobolev(dual_sobolev),
        l_tilde: n as i32 - 1,
        dual_sobolev,
    };
    Ok(FilterBank {
        preset,
        ana_low,
        ana_high,
        syn_low,
        syn_high,
        ana_low_start,
        ana_high_start,
        syn_low_start,
        syn_high_start,
        budgets,
    })
}

/// One budget inequality and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetCheck {
    pub condition: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Admissibility of a filter bank for a space specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub preset: WaveletPreset,
    pub synthesis: Vec<BudgetCheck>,
    pub analysis: Vec<BudgetCheck>,
    /// Decay budgets are met by compact support and always hold.
    pub decay_by_support: bool,
}

impl BudgetReport {
    pub fn admissible(&self) -> bool {
        self.synthesis.iter().chain(&self.analysis).all(|c| c.holds)
    }

    /// Human-readable list of failed conditions.
    pub fn violations(&self) -> String {
        self.synthesis
            .iter()
            .chain(&self.analysis)
            .filter(|c| !c.holds)
            .map(|c| format!("{} ({} vs {})", c.condition, c.lhs, c.rhs))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

fn gt(condition: &str, lhs: f64, rhs: f64) -> BudgetCheck {
    BudgetCheck { condition: condition.into(), lhs, rhs, holds: lhs > rhs }
}

/// Checks the smoothness/moment budgets of the synthesis and analysis pairs
/// against a space specification. Analysis moments are used at the largest
/// declared order compatible with `K~ + 1 >= L~`.
pub fn check_budgets<T: Float>(bank: &FilterBank<T>, spec: &SpaceSpec) -> BudgetReport {
    let c = spec.w.class;
    let p = spec.space.declared;
    let n = spec.space.dim as f64;
    let (a1, a2, a3) = (c.alpha1, c.alpha2, c.alpha3);
    let (gamma, delta, tau, a) = (p.gamma, p.delta, spec.tau, spec.a);
    let b = bank.budgets;
    let (k, l, kt) = (b.k as f64, b.l as f64, b.k_tilde as f64);
    let lt = (b.l_tilde.min(b.k_tilde + 1)) as f64;
    let synthesis = vec![
        gt("L > a3 + delta + n - 1 + gamma - n tau + a1", l, a3 + delta + n - 1.0 + gamma - n * tau + a1),
        gt("K + 1 > a2 + n tau", k + 1.0, a2 + n * tau),
        gt("L + 1 > a1", l + 1.0, a1),
    ];
    let m = (n / 2.0).max((a2 - gamma).max(0.0));
    let analysis = vec![
        gt("L~ > a3 + 2 delta + n - 1 + gamma + max(n/2, (a2 - gamma)+)", lt, a3 + 2.0 * delta + n - 1.0 + gamma + m),
        gt("K~ + 1 > a1 + gamma", kt + 1.0, a1 + gamma),
        gt("L~ + 1 > max(n/2, (a2 - gamma)+)", lt + 1.0, m),
        BudgetCheck { condition: "K~ + 1 >= L~".into(), lhs: kt + 1.0, rhs: lt, holds: kt + 1.0 >= lt },
        gt("L~ > 2a + n tau", lt, 2.0 * a + n * tau),
    ];
    BudgetReport { preset: bank.preset, synthesis, analysis, decay_by_support: true }
}

/// Builds a preset and, when a specification is given, rejects it unless
/// every budget inequality holds.
pub fn build_filters(preset: WaveletPreset, spec: Option<&SpaceSpec>) -> Result<FilterBank64> {
    let bank = build_preset(preset)?;
    if let Some(spec) = spec {
        let rep = check_budgets(&bank, spec);
        if !rep.admissible() {
            return Err(Error::Hypothesis(format!("{preset} not admissible: {}", rep.violations())));
        }
    }
    Ok(bank)
}

/// First shipped preset admissible for `spec`.
pub fn first_admissible(spec: &SpaceSpec) -> Option<WaveletPreset> {
    PRESETS.iter().copied().find(|&p| build_preset(p).map(|b| check_budgets(&b, spec).admissible()).unwrap_or(false))
}

/// One orientation band at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBand {
    /// `c` in `{0,1}^n` (unused axes 0).
    pub orientation: [u8; 2],
    pub values: Vec<C64>,
}

/// Detail bands of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletLevel {
    pub j: i32,
    /// Coefficients per axis at this level.
    pub size: usize,
    pub bands: Vec<WaveletBand>,
}

/// Periodic wavelet coefficients `<f, psi~_{jk}>` (L2 normalized).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    pub domain: BoxDomain,
    pub preset: WaveletPreset,
    pub depth: usize,
    /// Level of the sample grid, `h = 2^{-finest}`.
    pub finest: i32,
    /// Scaling coefficients at level `finest - depth`.
    pub scaling: Vec<C64>,
    /// Detail levels, coarsest first.
    pub levels: Vec<WaveletLevel>,
}

impl WaveletCoefficients {
    pub fn coarsest(&self) -> i32 {
        self.finest - self.depth as i32
    }

    /// Same shape, all coefficients zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.scaling.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for lv in z.levels.iter_mut() {
            for b in lv.bands.iter_mut() {
                b.values.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            }
        }
        z
    }

    /// `c1 A + c2 B` for equally shaped coefficient sets.
    pub fn combine(&self, c1: C64, other: &Self, c2: C64) -> Result<Self> {
        if self.scaling.len() != other.scaling.len() || self.levels.len() != other.levels.len() {
            return Err(Error::Parameter("coefficient shapes differ".into()));
        }
        let mut out = self.clone();
        for (o, b) in out.scaling.iter_mut().zip(&other.scaling) {
            *o = c1 * *o + c2 * b;
        }
        for (lo, lb) in out.levels.iter_mut().zip(&other.levels) {
            for (bo, bb) in lo.bands.iter_mut().zip(&lb.bands) {
                for (o, b) in bo.values.iter_mut().zip(&bb.values) {
                    *o = c1 * *o + c2 * b;
                }
            }
        }
        Ok(out)
    }

    /// Sum of squared moduli of every coefficient.
    pub fn energy(&self) -> f64 {
        let s: f64 = self.scaling.iter().map(|v| v.norm_sqr()).sum();
        s + self.levels.iter().flat_map(|l| &l.bands).flat_map(|b| &b.values).map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// Integer offset `k = m + offset` of coefficient index `m` at level `j`.
    fn k_offset(&self, j: i32) -> i64 {
        (-self.domain.half_width() * (j as f64).exp2()).round() as i64
    }

    /// L-infinity normalized coefficient fields `2^{jn/2} <f, psi~_{jk}>`:
    /// the scaling field (one level) and one field per detail orientation,
    /// restricted to `window`.
    pub fn fields(&self, window: &ScaleWindow) -> (CoefficientField, Vec<([u8; 2], CoefficientField)>) {
        let d = self.domain;
        let n = d.dim();
        let mut scaling = CoefficientField::new(d, *window);
        let jc = self.coarsest();
        let size_c = d.samples() >> self.depth;
        if window.contains(jc) {
            let s = (jc as f64 * n as f64 / 2.0).exp2();
            let off = self.k_offset(jc);
            for (m, v) in self.scaling.iter().enumerate() {
                if *v != C64::new(0.0, 0.0) {
                    scaling.set(cube_at(n, size_c, m, off, jc), v * s);
                }
            }
        }
        let mut bands: Vec<([u8; 2], CoefficientField)> = Vec::new();
        for lv in &self.levels {
            if !window.contains(lv.j) {
                continue;
            }
            let s = (lv.j as f64 * n as f64 / 2.0).exp2();
            let off = self.k_offset(lv.j);
            for b in &lv.bands {
                let pos = match bands.iter().position(|(o, _)| *o == b.orientation) {
                    Some(p) => p,
                    None => {
                        bands.push((b.orientation, CoefficientField::new(d, *window)));
                        bands.len() - 1
                    }
                };
                for (m, v) in b.values.iter().enumerate() {
                    if *v != C64::new(0.0, 0.0) {
                        bands[pos].1.set(cube_at(n, lv.size, m, off, lv.j), v * s);
                    }
                }
            }
        }
        (scaling, bands)
    }
}

fn cube_at(n: usize, size: usize, m: usize, off: i64, j: i32) -> DyadicCube {
    if n == 1 {
        DyadicCube::new(j, &[m as i64 + off])
    } else {
        DyadicCube::new(j, &[(m / size) as i64 + off, (m % size) as i64 + off])
    }
}

/// Level of the sample grid, when `1/h` is a power of two.
fn sample_level(d: &BoxDomain) -> Result<i32> {
    let lv = (1.0 / d.spacing()).log2();
    if (lv - lv.round()).abs() > 1e-9 {
        return Err(Error::Parameter(format!("grid spacing {} is not a power of two", d.spacing())));
    }
    Ok(lv.round() as i32)
}

fn check_depth(d: &BoxDomain, depth: usize) -> Result<()> {
    if depth == 0 || d.samples() % (1usize << depth) != 0 || (d.samples() >> depth) < 1 {
        return Err(Error::Parameter(format!("{} samples per axis are not divisible by 2^{depth}", d.samples())));
    }
    Ok(())
}

fn split_parts(v: &[C64]) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect())
}

fn join_parts(re: &[f64], im: &[f64]) -> Vec<C64> {
    re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect()
}

/// Applies a 1-d operation to every row (axis 1) or column (axis 0) of an
/// `s x s` block stored in a larger `n x n` row-major array.
fn along_axis<F: Fn(&[f64]) -> Vec<f64>>(buf: &mut [f64], n: usize, s: usize, axis: usize, op: F) {
    let mut line = vec![0.0; s];
    for o in 0..s {
        for (t, x) in line.iter_mut().enumerate() {
            *x = if axis == 1 { buf[o * n + t] } else { buf[t * n + o] };
        }
        let out = op(&line);
        for (t, x) in out.into_iter().enumerate() {
            if axis == 1 {
                buf[o * n + t] = x;
            } else {
                buf[t * n + o] = x;
            }
        }
    }
}

/// Standard (Mallat) tensor analysis of one real part, in place: after the
/// call, the top-left `s/2^depth` block holds the scaling coefficients.
fn forward_real(bank: &FilterBank64, data: &mut [f64], dim: usize, n: usize, depth: usize) {
    let step = |line: &[f64]| -> Vec<f64> {
        let (a, d) = bank.analysis_step(line);
        a.into_iter().chain(d).collect()
    };
    let mut s = n;
    for _ in 0..depth {
        if dim == 1 {
            let out = step(&data[..s]);
            data[..s].copy_from_slice(&out);
        } else {
            along_axis(data, n, s, 1, step);
            along_axis(data, n, s, 0, step);
        }
        s /= 2;
    }
}

fn inverse_real(bank: &FilterBank64, data: &mut [f64], dim: usize, n: usize, depth: usize) {
    let step = |line: &[f64]| -> Vec<f64> {
        let h = line.len() / 2;
        bank.synthesis_step(&line[..h], &line[h..])
    };
    let mut s = n >> depth;
    for _ in 0..depth {
        s *= 2;
        if dim == 1 {
            let out = step(&data[..s]);
            data[..s].copy_from_slice(&out);
        } else {
            along_axis(data, n, s, 0, step);
            along_axis(data, n, s, 1, step);
        }
    }
}

/// Periodic tensor wavelet analysis of `f` over `depth` levels. Samples enter
/// as the finest scaling coefficients `h^{n/2} f(x_i)`.
pub fn forward_transform(f: &GridFunction, bank: &FilterBank64, depth: usize) -> Result<WaveletCoefficients> {
    let d = f.domain;
    check_depth(&d, depth)?;
    let finest = sample_level(&d)?;
    let (dim, n) = (d.dim(), d.samples());
    let norm = d.cell_volume().sqrt();
    let (mut re, mut im) = split_parts(&f.values);
    for v in re.iter_mut().chain(im.iter_mut()) {
        *v *= norm;
    }
    forward_real(bank, &mut re, dim, n, depth);
    forward_real(bank, &mut im, dim, n, depth);
    let packed = join_parts(&re, &im);
    Ok(unpack(d, bank.preset, depth, finest, &packed))
}

fn unpack(d: BoxDomain, preset: WaveletPreset, depth: usize, finest: i32, packed: &[C64]) -> WaveletCoefficients {
    let (dim, n) = (d.dim(), d.samples());
    let sc = n >> depth;
    let block = |r0: usize, c0: usize, s: usize| -> Vec<C64> {
        if dim == 1 {
            packed[r0..r0 + s].to_vec()
        } else {
            (0..s).flat_map(|r| (0..s).map(move |c| (r, c))).map(|(r, c)| packed[(r0 + r) * n + c0 + c]).collect()
        }
    };
    let scaling = block(0, 0, sc);
    let mut levels = Vec::with_capacity(depth);
    let mut s = sc;
    for lvl in 0..depth {
        let j = finest - depth as i32 + lvl as i32;
        let bands = if dim == 1 {
            vec![WaveletBand { orientation: [1, 0], values: block(s, 0, s) }]
        } else {
            vec![
                WaveletBand { orientation: [0, 1], values: block(0, s, s) },
                WaveletBand { orientation: [1, 0], values: block(s, 0, s) },
                WaveletBand { orientation: [1, 1], values: block(s, s, s) },
            ]
        };
        levels.push(WaveletLevel { j, size: s, bands });
        s *= 2;
    }
    WaveletCoefficients { domain: d, preset, depth, finest, scaling, levels }
}

fn pack(c: &WaveletCoefficients) -> Result<Vec<C64>> {
    let d = c.domain;
    let (dim, n) = (d.dim(), d.samples());
    let mut out = vec![C64::new(0.0, 0.0); d.len()];
    let mut put = |r0: usize, c0: usize, s: usize, v: &[C64]| -> Result<()> {
        if v.len() != s.pow(dim as u32) {
            return Err(Error::Parameter("coefficient block has the wrong size".into()));
        }
        if dim == 1 {
            out[r0..r0 + s].copy_from_slice(v);
        } else {
            for r in 0..s {
                for k in 0..s {
                    out[(r0 + r) * n + c0 + k] = v[r * s + k];
                }
            }
        }
        Ok(())
    };
    let sc = n >> c.depth;
    put(0, 0, sc, &c.scaling)?;
    if c.levels.len() != c.depth {
        return Err(Error::Parameter("number of levels does not match the depth".into()));
    }
    let mut s = sc;
    for lv in &c.levels {
        if lv.size != s {
            return Err(Error::Parameter("level size does not match the depth".into()));
        }
        for b in &lv.bands {
            let (r0, c0) = match b.orientation {
                [1, 0] => (s, 0),
                [0, 1] => (0, s),
                [1, 1] => (s, s),
                o => return Err(Error::Parameter(format!("invalid orientation {o:?}"))),
            };
            put(r0, c0, s, &b.values)?;
        }
        s *= 2;
    }
    Ok(out)
}

/// Periodic tensor synthesis; inverse of [`forward_transform`].
pub fn inverse_transform(c: &WaveletCoefficients, bank: &FilterBank64) -> Result<GridFunction> {
    let d = c.domain;
    check_depth(&d, c.depth)?;
    if c.preset != bank.preset {
        return Err(Error::Parameter(format!("coefficients are {}, filters are {}", c.preset, bank.preset)));
    }
    let packed = pack(c)?;
    let (mut re, mut im) = split_parts(&packed);
    inverse_real(bank, &mut re, d.dim(), d.samples(), c.depth);
    inverse_real(bank, &mut im, d.dim(), d.samples(), c.depth);
    let norm = 1.0 / d.cell_volume().sqrt();
    let values = join_parts(&re, &im).into_iter().map(|v| v * norm).collect();
    GridFunction::new(d, values)
}

/// `||lambda^0||` (scaling part) plus the sum over detail orientations of the
/// coefficient norms of each field, with the scale of `spec`.
pub fn wavelet_seq_norm(c: &WaveletCoefficients, spec: &SpaceSpec) -> Result<f64> {
    let (scaling, bands) = c.fields(&spec.window);
    let mut total = coeff_norm(&scaling, spec)?;
    for (_, field) in &bands {
        total += coeff_norm(field, spec)?;
    }
    Ok(total)
}

/// Full-depth transform: scaling coefficients land on level 0 (requires the
/// box half width to be a power of two, at least 1/2).
pub fn full_depth(d: &BoxDomain) -> Result<usize> {
    let fin = sample_level(d)?;
    if fin < 0 || (d.samples() >> fin as usize) == 0 || d.samples() % (1usize << fin) != 0 {
        return Err(Error::Parameter("box does not admit a transform down to level 0".into()));
    }
    Ok(fin as usize)
}
