//! Fundamental quasi-normed lattices `L(R^n)`: Lebesgue, weighted Lebesgue,
//! Morrey, generalized Morrey, Orlicz, Herz, variable exponent, amalgam and
//! the split space `L^{1 + chi}` whose exponent jumps across `x_n = 0`.
//!
//! Every space is evaluated on `|f|` restricted to an index box of the grid,
//! so mixed norms can take cube-local norms without copying.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::convolve_zero_padded;
use crate::grid::{BoxDomain, DyadicCube, GridFunction, ScaleWindow};
use crate::kernels::{maximal_values, MaximalKind};
use crate::stats;
use crate::weights::WeightModel;
use crate::C64;

/// Index box `r0 x r1` (the second range is `0..1` in 1-d).
pub type Region = [Range<usize>; 2];

/// The whole grid as a region.
pub fn full_region(d: &BoxDomain) -> Region {
    let n = d.samples();
    [0..n, if d.dim() == 2 { 0..n } else { 0..1 }]
}

/// Grid points of a dyadic cube as a region.
pub fn cube_region(d: &BoxDomain, q: &DyadicCube) -> Region {
    d.cube_ranges(q)
}

/// Named Young functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum YoungPreset {
    /// `t^p`.
    Power { p: f64 },
    /// `t^p log(e + t)`.
    PowerLog { p: f64 },
}

impl YoungPreset {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            YoungPreset::Power { p } => t.powf(p),
            YoungPreset::PowerLog { p } => t.powf(p) * (std::f64::consts::E + t).ln(),
        }
    }
}

/// Named growth functions for generalized Morrey spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrowthPreset {
    /// `t^small` for `t <= 1` and `t^large` for `t >= 1`.
    TwoPower { small: f64, large: f64 },
}

impl GrowthPreset {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            GrowthPreset::TwoPower { small, large } => {
                if t <= 1.0 {
                    t.powf(small)
                } else {
                    t.powf(large)
                }
            }
        }
    }

    /// Worst ratio `phi(r) int_r^inf phi(t)^{-1} dt/t` over `r` in `[2^-12, 2^12]`
    /// (finite iff the reciprocal integral condition holds uniformly).
    pub fn integral_condition_constant(&self) -> f64 {
        let GrowthPreset::TwoPower { small, large } = *self;
        if large <= 0.0 {
            return f64::INFINITY;
        }
        let tail = |r: f64| -> f64 {
            // int_r^inf phi(t)^{-1} dt / t in closed form.
            if r >= 1.0 {
                r.powf(-large) / large
            } else {
                let head = if small == 0.0 { -r.ln() } else { (r.powf(-small) - 1.0) / small };
                head + 1.0 / large
            }
        };
        (-12..=12).map(|e| (e as f64).exp2()).map(|r| self.eval(r) * tail(r)).fold(0.0, f64::max)
    }
}

/// Named variable exponents `p(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentPreset {
    /// `p_inf + c / log(e + |x|)`.
    LogDecay { p_inf: f64, c: f64 },
    /// `p_inf + amp exp(-|x|^2 / width^2)`.
    Bump { p_inf: f64, amp: f64, width: f64 },
}

impl ExponentPreset {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        match *self {
            ExponentPreset::LogDecay { p_inf, c } => p_inf + c / (std::f64::consts::E + r).ln(),
            ExponentPreset::Bump { p_inf, amp, width } => p_inf + amp * (-(r / width).powi(2)).exp(),
        }
    }

    /// `p_- = inf p`.
    pub fn p_minus(&self) -> f64 {
        match *self {
            ExponentPreset::LogDecay { p_inf, c } => p_inf.min(p_inf + c),
            ExponentPreset::Bump { p_inf, amp, .. } => p_inf.min(p_inf + amp),
        }
    }

    /// `p_+ = sup p`.
    pub fn p_plus(&self) -> f64 {
        match *self {
            ExponentPreset::LogDecay { p_inf, c } => p_inf.max(p_inf + c),
            ExponentPreset::Bump { p_inf, amp, .. } => p_inf.max(p_inf + amp),
        }
    }
}

/// Kinds of fundamental space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceKind {
    Lebesgue { p: f64 },
    /// `L^p((1 + |x|)^beta dx)`.
    WeightedLebesgue { p: f64, beta: f64 },
    /// `sup_Q |Q|^{1/p - 1/u} (int_Q |f|^u)^{1/u}`, `u <= p`.
    Morrey { p: f64, u: f64 },
    /// `sup_Q phi(l(Q)) (avg_Q |f|^p)^{1/p}`.
    GeneralizedMorrey { p: f64, phi: GrowthPreset },
    Orlicz { young: YoungPreset },
    Herz { p: f64, q: f64, alpha: f64 },
    VariableLebesgue { exponent: ExponentPreset },
    /// `l^q` over unit tiles `z + [0,1)^n` of `(1 + |z|)^s ||f chi_tile||_p`.
    Amalgam { p: f64, q: f64, s: f64 },
    /// Modular `int_{x_n > 0} |f|^2 + int_{x_n <= 0} |f|`.
    PathologicalSplit,
}

/// Axiom parameters declared for a space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomParams {
    pub theta: f64,
    pub n0: f64,
    pub gamma: f64,
    pub delta: f64,
}

/// A fundamental space on `R^n` with its declared parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalSpace {
    pub kind: SpaceKind,
    pub dim: usize,
    pub declared: AxiomParams,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {v} must be positive")))
    }
}

impl FundamentalSpace {
    pub fn new(kind: SpaceKind, dim: usize) -> Result<Self> {
        let n = dim as f64;
        let declared = match kind {
            SpaceKind::Lebesgue { p } => {
                positive("p", p)?;
                AxiomParams { theta: p.min(1.0), n0: n / p, gamma: n / p, delta: 0.0 }
            }
            SpaceKind::WeightedLebesgue { p, beta } => {
                positive("p", p)?;
                if beta <= -n {
                    return Err(Error::Parameter(format!("weight exponent {beta} must exceed -n")));
                }
                AxiomParams { theta: p.min(1.0), n0: (n + beta.max(0.0)) / p, gamma: n / p, delta: (-beta).max(0.0) / p }
            }
            SpaceKind::Morrey { p, u } => {
                positive("p", p)?;
                positive("u", u)?;
                if u > p {
                    return Err(Error::Parameter(format!("Morrey exponents need u <= p, got u = {u}, p = {p}")));
                }
                AxiomParams { theta: u.min(1.0), n0: n / p + 1.0, gamma: n / p, delta: 0.0 }
            }
            SpaceKind::GeneralizedMorrey { p, phi } => {
                if p < 1.0 {
                    return Err(Error::Parameter(format!("generalized Morrey needs p >= 1, got {p}")));
                }
                let GrowthPreset::TwoPower { small, large } = phi;
                if !(small > 0.0 && large > 0.0 && small <= n / p && large <= n / p) {
                    return Err(Error::Parameter(format!(
                        "growth exponents must lie in (0, n/p] so phi increases and phi^p t^-n decreases, got ({small}, {large})"
                    )));
                }
                AxiomParams { theta: 1.0, n0: n / p + 1.0, gamma: n / p, delta: 0.0 }
            }
            SpaceKind::Orlicz { young } => {
                let (YoungPreset::Power { p } | YoungPreset::PowerLog { p }) = young;
                if p < 1.0 {
                    return Err(Error::Parameter(format!("Young function needs p >= 1, got {p}")));
                }
                AxiomParams { theta: 1.0, n0: n + 1.0, gamma: n, delta: 0.0 }
            }
            SpaceKind::Herz { p, q, alpha } => {
                positive("p", p)?;
                positive("q", q)?;
                AxiomParams { theta: p.min(q).min(1.0), n0: n / q + 1.0 + alpha.max(0.0), gamma: n / p + alpha, delta: 0.0 }
            }
            SpaceKind::VariableLebesgue { exponent } => {
                let pm = exponent.p_minus();
                positive("p_-", pm)?;
                AxiomParams { theta: pm.min(1.0), n0: n / pm + 1.0, gamma: n / pm, delta: 0.0 }
            }
            SpaceKind::Amalgam { p, q, s } => {
                positive("p", p)?;
                positive("q", q)?;
                AxiomParams { theta: p.min(q).min(1.0), n0: n + 1.0 + s, gamma: n / p, delta: (-s).max(0.0) }
            }
            SpaceKind::PathologicalSplit => AxiomParams { theta: 1.0, n0: n + 1.0, gamma: n, delta: 0.0 },
        };
        Ok(Self { kind, dim, declared })
    }

    /// `||f||_L`.
    pub fn quasi_norm(&self, f: &GridFunction) -> Result<f64> {
        self.norm_abs(&f.domain, &f.abs())
    }

    /// Norm of a nonnegative field on the whole grid.
    pub fn norm_abs(&self, d: &BoxDomain, v: &[f64]) -> Result<f64> {
        self.norm_in(d, v, &full_region(d))
    }

    /// Norm of `chi_region * v` for a nonnegative field `v`.
    pub fn norm_in(&self, d: &BoxDomain, v: &[f64], region: &Region) -> Result<f64> {
        if d.dim() != self.dim {
            return Err(Error::Parameter(format!("space is {}-dimensional, grid is {}-dimensional", self.dim, d.dim())));
        }
        let cell = d.cell_volume();
        let pts = RegionIter::new(d, region);
        Ok(match self.kind {
            SpaceKind::Lebesgue { p } => {
                let s: f64 = pts.map(|(i, _)| v[i].powf(p)).sum();
                (s * cell).powf(1.0 / p)
            }
            SpaceKind::WeightedLebesgue { p, beta } => {
                let s: f64 = pts.map(|(i, x)| v[i].powf(p) * (1.0 + norm(x)).powf(beta)).sum();
                (s * cell).powf(1.0 / p)
            }
            SpaceKind::Morrey { p, u } => {
                let n = d.dim() as f64;
                dyadic_sup(d, v, region, u, |j, mass| (-(j as f64) * n * (1.0 / p - 1.0 / u)).exp2() * mass.powf(1.0 / u))
            }
            SpaceKind::GeneralizedMorrey { p, phi } => {
                let n = d.dim() as f64;
                dyadic_sup(d, v, region, p, |j, mass| {
                    let side = (-(j as f64)).exp2();
                    phi.eval(side) * (mass / side.powf(n)).powf(1.0 / p)
                })
            }
            SpaceKind::Herz { p, q, alpha } => {
                let mut rings: BTreeMap<i32, f64> = BTreeMap::new();
                for (i, x) in pts {
                    let t = x[0].abs().max(x[1].abs());
                    let ring = if t <= 1.0 { 0 } else { t.log2().ceil() as i32 };
                    *rings.entry(ring).or_insert(0.0) += v[i].powf(p);
                }
                let core = rings.get(&0).map(|s| (s * cell).powf(1.0 / p)).unwrap_or(0.0);
                let terms = rings.iter().filter(|(&r, _)| r >= 1).map(|(&r, s)| (r as f64 * alpha).exp2() * (s * cell).powf(1.0 / p));
                core + lq(terms, q)
            }
            SpaceKind::Amalgam { p, q, s } => {
                let mut tiles: BTreeMap<(i64, i64), f64> = BTreeMap::new();
                for (i, x) in pts {
                    let z = (x[0].floor() as i64, if d.dim() == 2 { x[1].floor() as i64 } else { 0 });
                    *tiles.entry(z).or_insert(0.0) += v[i].powf(p);
                }
                let terms = tiles.iter().map(|(z, m)| {
                    let zn = ((z.0 * z.0 + z.1 * z.1) as f64).sqrt();
                    (1.0 + zn).powf(s) * (m * cell).powf(1.0 / p)
                });
                lq(terms, q)
            }
            SpaceKind::Orlicz { young } => {
                let data: Vec<f64> = pts.map(|(i, _)| v[i]).collect();
                luxemburg(&data, |u, _| young.eval(u), &vec![0.0; data.len()], cell)?
            }
            SpaceKind::VariableLebesgue { exponent } => {
                let (data, ex): (Vec<f64>, Vec<f64>) = pts.map(|(i, x)| (v[i], exponent.eval(x))).unzip();
                luxemburg(&data, |u, p| u.powf(p), &ex, cell)?
            }
            SpaceKind::PathologicalSplit => {
                let last = d.dim() - 1;
                let (data, ex): (Vec<f64>, Vec<f64>) =
                    pts.map(|(i, x)| (v[i], if x[last] > 0.0 { 2.0 } else { 1.0 })).unzip();
                luxemburg(&data, |u, p| if p == 2.0 { u * u } else { u }, &ex, cell)?
            }
        })
    }
}

fn norm(x: [f64; 2]) -> f64 {
    (x[0] * x[0] + x[1] * x[1]).sqrt()
}

/// `l^q` sum, `q = inf` giving the maximum.
pub fn lq<I: Iterator<Item = f64>>(terms: I, q: f64) -> f64 {
    if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Iterator over `(flat index, point)` of a region, row-major.
struct RegionIter<'a> {
    d: &'a BoxDomain,
    r0: Range<usize>,
    r1: Range<usize>,
    i0: usize,
    i1: usize,
}

impl<'a> RegionIter<'a> {
    fn new(d: &'a BoxDomain, region: &Region) -> Self {
        let (r0, r1) = (region[0].clone(), region[1].clone());
        Self { d, i0: r0.start, i1: r1.start, r0, r1 }
    }
}

impl Iterator for RegionIter<'_> {
    type Item = (usize, [f64; 2]);

    fn next(&mut self) -> Option<Self::Item> {
        if self.r1.is_empty() || self.i0 >= self.r0.end {
            return None;
        }
        let (i0, i1) = (self.i0, self.i1);
        self.i1 += 1;
        if self.i1 >= self.r1.end {
            self.i1 = self.r1.start;
            self.i0 += 1;
        }
        let idx = self.d.flatten([i0, i1]);
        let x = if self.d.dim() == 1 { [self.d.coord(i0), 0.0] } else { [self.d.coord(i0), self.d.coord(i1)] };
        Some((idx, x))
    }
}

/// `sup_Q value(j_Q, int_{Q cap region} v^u)` over dyadic cubes of levels
/// from the cover level down to the finest resolved level.
fn dyadic_sup<F: Fn(i32, f64) -> f64>(d: &BoxDomain, v: &[f64], region: &Region, u: f64, value: F) -> f64 {
    let (r0, r1) = (region[0].clone(), region[1].clone());
    if r0.is_empty() || r1.is_empty() {
        return 0.0;
    }
    let (a0, a1) = (r0.len(), r1.len());
    let cell = d.cell_volume();
    // Summed-area table of v^u h^n over the region.
    let mut sat = vec![0.0f64; (a0 + 1) * (a1 + 1)];
    for i in 0..a0 {
        for k in 0..a1 {
            let idx = d.flatten([r0.start + i, r1.start + k]);
            sat[(i + 1) * (a1 + 1) + k + 1] =
                v[idx].powf(u) * cell + sat[i * (a1 + 1) + k + 1] + sat[(i + 1) * (a1 + 1) + k] - sat[i * (a1 + 1) + k];
        }
    }
    let rect = |p: Range<usize>, q: Range<usize>| -> f64 {
        sat[p.end * (a1 + 1) + q.end] - sat[p.start * (a1 + 1) + q.end] - sat[p.end * (a1 + 1) + q.start]
            + sat[p.start * (a1 + 1) + q.start]
    };
    let local = |r: &Range<usize>, c: Range<usize>| -> Range<usize> {
        let lo = c.start.max(r.start);
        let hi = c.end.min(r.end).max(lo);
        (lo - r.start)..(hi - r.start)
    };
    let mut best = 0.0f64;
    for j in d.cover_level()..=d.finest_level() {
        let s = (-(j as f64)).exp2();
        let krange = |r: &Range<usize>| -> Range<i64> {
            let lo = (d.coord(r.start) / s).floor() as i64;
            let hi = (d.coord(r.end - 1) / s).floor() as i64;
            lo..hi + 1
        };
        let k1s = if d.dim() == 2 { krange(&r1) } else { 0..1 };
        for k0 in krange(&r0) {
            let p = local(&r0, d.axis_range(s * k0 as f64, s * (k0 + 1) as f64));
            if p.is_empty() {
                continue;
            }
            for k1 in k1s.clone() {
                let q = if d.dim() == 2 { local(&r1, d.axis_range(s * k1 as f64, s * (k1 + 1) as f64)) } else { 0..1 };
                if q.is_empty() {
                    continue;
                }
                let mass = rect(p.clone(), q).max(0.0);
                best = best.max(value(j, mass));
            }
        }
    }
    best
}

/// Luxemburg norm `inf{lambda : h^n sum Phi(v_i / lambda, aux_i) <= 1}`.
/// Values are normalized by their maximum; the bracket is
/// `lambda in [1e-12, 1e12]` in normalized units; bisection (geometric, then
/// arithmetic) down to a few ulps.
fn luxemburg<F: Fn(f64, f64) -> f64>(v: &[f64], phi: F, aux: &[f64], cell: f64) -> Result<f64> {
    let vmax = v.iter().cloned().fold(0.0f64, f64::max);
    if vmax == 0.0 {
        return Ok(0.0);
    }
    let u: Vec<f64> = v.iter().map(|x| x / vmax).collect();
    let g = |lam: f64| -> f64 { cell * u.iter().zip(aux).map(|(&t, &a)| phi(t / lam, a)).sum::<f64>() - 1.0 };
    let (mut lo, mut hi) = (1e-12f64, 1e12f64);
    if g(hi) > 0.0 {
        return Err(Error::Overflow(format!("modular stays above 1 at lambda = {}", hi * vmax)));
    }
    if g(lo) <= 0.0 {
        return Ok(lo * vmax);
    }
    let mut it = 0;
    while hi - lo > 4.0 * f64::EPSILON * hi && it < 200 {
        let mid = if hi / lo > 2.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        it += 1;
    }
    Ok(hi * vmax)
}

/// One axiom check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: String,
    pub passed: bool,
    /// Worst violation margin (0 when every sample passes with slack).
    pub worst: f64,
    pub detail: String,
}

/// Fitted exponents of `||chi_{Q_jk}||` against the declared ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub gamma_hat: f64,
    pub delta_hat: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl ExponentFit {
    /// Whether the fitted exponents reproduce the declared ones within `tol`
    /// relative (absolute when the declared value is 0).
    pub fn matches(&self, tol: f64) -> bool {
        let close = |a: f64, b: f64| if b == 0.0 { a.abs() <= tol } else { ((a - b) / b).abs() <= tol };
        close(self.gamma_hat, self.gamma) && close(self.delta_hat, self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
    pub fit: ExponentFit,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Indicator of a dyadic cube on the grid.
pub fn cube_indicator(d: &BoxDomain, q: &DyadicCube) -> Vec<f64> {
    let mut v = vec![0.0; d.len()];
    for (i, _) in RegionIter::new(d, &cube_region(d, q)) {
        v[i] = 1.0;
    }
    v
}

/// Fits `gamma` and `delta` from `log2 ||chi_{Q_jk}||`. Herz spaces fit `gamma`
/// on large cubes `Q_{j,0}`, `j < 0`, where the `alpha` weight is visible;
/// every other kind fits it on small cubes `Q_{j,0}`, `j >= 0`. `delta` is
/// fitted on unit cubes `Q_{0,(2^i, 0)}` against `log2(1 + |k|)`.
pub fn fit_exponents(space: &FundamentalSpace, d: &BoxDomain) -> Result<ExponentFit> {
    let dim = d.dim();
    let kvec = |k0: i64| if dim == 1 { vec![k0] } else { vec![k0, 0] };
    let levels: Vec<i32> = if matches!(space.kind, SpaceKind::Herz { .. }) {
        let m = d.half_width().log2().floor() as i32;
        (-m..=(-m + 4).min(-1)).collect()
    } else {
        (0..=d.finest_level().min(6)).collect()
    };
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &j in &levels {
        let q = DyadicCube::new(j, &kvec(0));
        xs.push(j as f64);
        ys.push(space.norm_abs(d, &cube_indicator(d, &q))?.log2());
    }
    let gamma_hat = -stats::slope(&xs, &ys);
    let (mut xk, mut yk) = (Vec::new(), Vec::new());
    let mut i = 0;
    while ((1i64 << i) + 1) as f64 <= d.half_width() {
        let k = 1i64 << i;
        let q = DyadicCube::new(0, &kvec(k));
        xk.push((1.0 + k as f64).log2());
        yk.push(space.norm_abs(d, &cube_indicator(d, &q))?.log2());
        i += 1;
    }
    let delta_hat = if xk.len() >= 2 { (-stats::slope(&xk, &yk)).max(0.0) } else { 0.0 };
    Ok(ExponentFit { gamma_hat, delta_hat, gamma: space.declared.gamma, delta: space.declared.delta })
}

/// Runs the lattice axiom checks on a battery and fits the cube exponents.
pub fn verify_axioms(space: &FundamentalSpace, d: &BoxDomain, battery: &[GridFunction]) -> Result<AxiomReport> {
    if battery.is_empty() {
        return Err(Error::Parameter("axiom battery is empty".into()));
    }
    let norms: Vec<f64> = battery.iter().map(|f| space.quasi_norm(f)).collect::<Result<_>>()?;
    let mut checks = Vec::new();

    // (L1): positivity, and zero exactly on the zero function.
    let zero = space.quasi_norm(&GridFunction::zeros(*d))?;
    let l1_ok = zero == 0.0 && battery.iter().zip(&norms).all(|(f, &n)| (n > 0.0) == (f.max_abs() > 0.0));
    checks.push(AxiomCheck { axiom: "L1".into(), passed: l1_ok, worst: zero, detail: "positivity".into() });

    // (L2): homogeneity for c in {-2, 0.5, i}.
    let mut worst = 0.0f64;
    for (f, &nf) in battery.iter().zip(&norms) {
        for c in [C64::new(-2.0, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 1.0)] {
            let nc = space.quasi_norm(&f.scale(c))?;
            let want = c.norm() * nf;
            if want > 0.0 {
                worst = worst.max((nc - want).abs() / want);
            }
        }
    }
    checks.push(AxiomCheck { axiom: "L2".into(), passed: worst <= 1e-10, worst, detail: "relative homogeneity error".into() });

    // (L3): theta-triangle on all pairs.
    let th = space.declared.theta;
    let mut worst = 0.0f64;
    for a in 0..battery.len() {
        for b in a..battery.len() {
            let s = space.quasi_norm(&battery[a].add(&battery[b]))?;
            let rhs = norms[a].powf(th) + norms[b].powf(th);
            worst = worst.max((s.powf(th) - rhs) / rhs.max(1e-300));
        }
    }
    checks.push(AxiomCheck {
        axiom: "L3".into(),
        passed: worst <= 1e-10,
        worst: worst.max(0.0),
        detail: format!("theta = {th}"),
    });

    // (L4): lattice property on masked pairs |g| <= |f|.
    let mut worst = 0.0f64;
    for (f, &nf) in battery.iter().zip(&norms) {
        for mask in 0..3usize {
            let g: Vec<f64> = f
                .abs()
                .iter()
                .enumerate()
                .map(|(i, &x)| match mask {
                    0 => if d.point(i)[0] < 0.0 { x } else { 0.0 },
                    1 => 0.5 * x,
                    _ => if i % 3 == 0 { 0.0 } else { x },
                })
                .collect();
            worst = worst.max(space.norm_abs(d, &g)? - nf);
        }
    }
    checks.push(AxiomCheck { axiom: "L4".into(), passed: worst <= 1e-12, worst: worst.max(0.0), detail: "lattice".into() });

    // (L5) / Fatou: monotone truncations f chi_{|x| < R_m} increasing to f.
    let mut worst = 0.0f64;
    let mut monotone = true;
    for (f, &nf) in battery.iter().zip(&norms) {
        let fa = f.abs();
        let mut prev = 0.0f64;
        let mut sup = 0.0f64;
        for m in 1..=8 {
            let rad = d.half_width() * 2f64.sqrt() * m as f64 / 8.0;
            let g: Vec<f64> = fa.iter().enumerate().map(|(i, &x)| if norm(d.point(i)) < rad { x } else { 0.0 }).collect();
            let ng = space.norm_abs(d, &g)?;
            monotone &= ng + 1e-12 >= prev;
            prev = ng;
            sup = sup.max(ng);
        }
        worst = worst.max(nf - sup);
    }
    checks.push(AxiomCheck {
        axiom: "L5".into(),
        passed: monotone && worst <= 1e-10,
        worst: worst.max(0.0),
        detail: "Fatou on radial truncations".into(),
    });

    let fit = fit_exponents(space, d)?;
    Ok(AxiomReport { checks, fit })
}

/// Worst ratios of the maximal-compatibility checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeetreCompatReport {
    pub worst_scalar: f64,
    pub worst_vector: f64,
    pub cap: f64,
    pub passed: bool,
}

/// `(eta_{j,R} * |g|^r)^{1/r}` with `eta_{j,R}(x) = 2^{jn}(1 + 2^j|x|)^{-R}`.
pub fn eta_average(d: &BoxDomain, g: &[f64], r: f64, big_r: f64, j: i32) -> Vec<f64> {
    let s = (j as f64).exp2();
    let sn = s.powi(d.dim() as i32);
    let gr: Vec<f64> = g.iter().map(|x| x.powf(r)).collect();
    convolve_zero_padded(d, &gr, |y| sn * (1.0 + s * norm(y)).powf(-big_r))
        .into_iter()
        .map(|x| x.max(0.0).powf(1.0 / r))
        .collect()
}

/// Checks the scalar and vector-valued maximal compatibility of `L` with
/// the weight: worst `||w_j (eta_{j,R} * |f|^r)^{1/r}|| / ||w_j f||` over the
/// battery and levels, and its `l^q`-valued analogue over seeded random
/// sequences built from the battery.
#[allow(clippy::too_many_arguments)]
pub fn verify_peetre_compat(
    space: &FundamentalSpace,
    d: &BoxDomain,
    window: &ScaleWindow,
    r: f64,
    big_r: f64,
    w: &WeightModel,
    q: f64,
    battery: &[GridFunction],
    seed: u64,
    cap: f64,
) -> Result<PeetreCompatReport> {
    if big_r <= d.dim() as f64 + 1.0 {
        return Err(Error::Parameter(format!("decay R = {big_r} must exceed n + 1")));
    }
    let weighted = |g: &[f64], j: i32| -> Vec<f64> { g.iter().enumerate().map(|(i, x)| x * w.eval(d.point(i), j)).collect() };
    let mut worst_scalar = 0.0f64;
    for f in battery {
        let fa = f.abs();
        for j in window.levels() {
            let den = space.norm_abs(d, &weighted(&fa, j))?;
            if den > 0.0 {
                let num = space.norm_abs(d, &weighted(&eta_average(d, &fa, r, big_r, j), j))?;
                worst_scalar = worst_scalar.max(num / den);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_vector = 0.0f64;
    for _ in 0..4 {
        let mut num = vec![0.0f64; d.len()];
        let mut den = vec![0.0f64; d.len()];
        for j in window.levels() {
            let f = &battery[rng.gen_range(0..battery.len())];
            let c: f64 = rng.gen_range(0.1..1.0);
            let fa: Vec<f64> = f.abs().iter().map(|x| c * x).collect();
            let avg = eta_average(d, &fa, r, big_r, j);
            for i in 0..d.len() {
                let wj = w.eval(d.point(i), j);
                accumulate(&mut num[i], wj * avg[i], q);
                accumulate(&mut den[i], wj * fa[i], q);
            }
        }
        finish(&mut num, q);
        finish(&mut den, q);
        let dn = space.norm_abs(d, &den)?;
        if dn > 0.0 {
            worst_vector = worst_vector.max(space.norm_abs(d, &num)? / dn);
        }
    }
    let passed = worst_scalar <= cap && worst_vector <= cap;
    Ok(PeetreCompatReport { worst_scalar, worst_vector, cap, passed })
}

/// Adds one term to a running `l^q` accumulator (stores sum of `t^q`, or max).
pub fn accumulate(acc: &mut f64, t: f64, q: f64) {
    if q.is_infinite() {
        *acc = acc.max(t);
    } else {
        *acc += t.powf(q);
    }
}

/// Converts accumulated `sum t^q` into `(sum t^q)^{1/q}`.
pub fn finish(acc: &mut [f64], q: f64) {
    if q.is_finite() {
        for a in acc.iter_mut() {
            *a = a.powf(1.0 / q);
        }
    }
}

/// One row of the split-space maximal sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub norm_f: f64,
    pub norm_mf: f64,
    pub ratio: f64,
}

/// `f_r = chi_{[-r, 0]}(x_n) chi_{[-1,1]^{n-1}}` on the grid.
pub fn split_test_function(d: &BoxDomain, r: f64) -> GridFunction {
    let n = d.dim();
    GridFunction::from_real_fn(*d, |x| {
        let t = x[n - 1];
        let lateral = n == 1 || x[0].abs() <= 1.0;
        if (-r..0.0).contains(&t) && lateral {
            1.0
        } else {
            0.0
        }
    })
}

/// Ratio `||M f_r|| / ||f_r||` in the split space for `r = 2^{-e}`,
/// `e` in `exps`, with `M` the given maximal operator.
pub fn split_space_sweep(d: &BoxDomain, exps: Range<i32>, kind: MaximalKind) -> Result<Vec<SweepRow>> {
    let space = FundamentalSpace::new(SpaceKind::PathologicalSplit, d.dim())?;
    exps.map(|e| {
        let r = (-(e as f64)).exp2();
        let f = split_test_function(d, r);
        let norm_f = space.quasi_norm(&f)?;
        let mf = maximal_values(d, &f.abs(), kind);
        let norm_mf = space.norm_abs(d, &mf)?;
        Ok(SweepRow { r, norm_f, norm_mf, ratio: norm_mf / norm_f })
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d1() -> BoxDomain {
        BoxDomain::new(1, 4.0, 512).unwrap()
    }

    fn unit(d: &BoxDomain) -> GridFunction {
        GridFunction::from_real_fn(*d, |x| {
            let inside = |t: f64| (0.0..1.0).contains(&t);
            if inside(x[0]) && (d.dim() == 1 || inside(x[1])) {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn unit_cube_values() {
        for dim in [1, 2] {
            let d = BoxDomain::new(dim, 4.0, if dim == 1 { 512 } else { 64 }).unwrap();
            let f = unit(&d);
            let l2 = FundamentalSpace::new(SpaceKind::Lebesgue { p: 2.0 }, dim).unwrap();
            assert!((l2.quasi_norm(&f).unwrap() - 1.0).abs() < 1e-12);
            let ps = FundamentalSpace::new(SpaceKind::PathologicalSplit, dim).unwrap();
            let shifted = if dim == 1 {
                GridFunction::from_real_fn(d, |x| if x[0] > 0.0 && x[0] <= 1.0 { 1.0 } else { 0.0 })
            } else {
                GridFunction::from_real_fn(d, |x| {
                    if (0.0..1.0).contains(&x[0]) && x[1] > 0.0 && x[1] <= 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                })
            };
            assert!((ps.quasi_norm(&shifted).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn morrey_with_equal_exponents_is_lebesgue() {
        let d = d1();
        let f = GridFunction::from_real_fn(d, |x| if x[0] >= 0.0 { (-(x[0] - 1.5).powi(2)).exp() } else { 0.0 });
        let m = FundamentalSpace::new(SpaceKind::Morrey { p: 3.0, u: 3.0 }, 1).unwrap();
        let l = FundamentalSpace::new(SpaceKind::Lebesgue { p: 3.0 }, 1).unwrap();
        let (a, b) = (m.quasi_norm(&f).unwrap(), l.quasi_norm(&f).unwrap());
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn orlicz_power_is_lebesgue() {
        let d = d1();
        let f = GridFunction::from_real_fn(d, |x| (-x[0] * x[0]).exp() * 3.0);
        let o = FundamentalSpace::new(SpaceKind::Orlicz { young: YoungPreset::Power { p: 2.5 } }, 1).unwrap();
        let l = FundamentalSpace::new(SpaceKind::Lebesgue { p: 2.5 }, 1).unwrap();
        let (a, b) = (o.quasi_norm(&f).unwrap(), l.quasi_norm(&f).unwrap());
        assert!((a - b).abs() <= 1e-10 * b);
    }

    #[test]
    fn herz_box_indicator() {
        for dim in [1usize, 2] {
            let d = BoxDomain::new(dim, 4.0, if dim == 1 { 512 } else { 128 }).unwrap();
            // Closed cube [-2, 2]^n; grid points on the boundary belong to it.
            let f = GridFunction::from_real_fn(d, |x| if x[0].abs() <= 2.0 && x[1].abs() <= 2.0 { 1.0 } else { 0.0 });
            let p = 2.0;
            let h = FundamentalSpace::new(SpaceKind::Herz { p, q: p, alpha: 0.0 }, dim).unwrap();
            let n = dim as i32;
            let want = 2f64.powi(n).powf(1.0 / p) + (4f64.powi(n) - 2f64.powi(n)).powf(1.0 / p);
            let got = h.quasi_norm(&f).unwrap();
            // Riemann sums over the closed cubes pick up one extra boundary layer.
            assert!((got - want).abs() < 4.0 * dim as f64 * d.spacing() * want, "{got} vs {want}");
        }
    }

    #[test]
    fn growth_preset_condition() {
        let g = GrowthPreset::TwoPower { small: 0.25, large: 0.4 };
        assert!(g.integral_condition_constant() < 10.0);
        assert!(GrowthPreset::TwoPower { small: 0.25, large: 0.0 }.integral_condition_constant().is_infinite());
    }

    #[test]
    fn luxemburg_homogeneity_is_tight() {
        let d = d1();
        let f = GridFunction::from_real_fn(d, |x| (-(x[0] - 0.3).powi(2)).exp() + 0.2 * (-(x[0] + 2.0).powi(2)).exp());
        let spaces = [
            SpaceKind::Orlicz { young: YoungPreset::PowerLog { p: 1.5 } },
            SpaceKind::VariableLebesgue { exponent: ExponentPreset::LogDecay { p_inf: 2.0, c: 1.0 } },
            SpaceKind::PathologicalSplit,
        ];
        for k in spaces {
            let s = FundamentalSpace::new(k, 1).unwrap();
            let a = s.quasi_norm(&f).unwrap();
            for c in [1e-6, 0.5, 7.0, 1e5] {
                let b = s.quasi_norm(&f.scale(C64::new(c, 0.0))).unwrap();
                assert!((b - c * a).abs() <= 1e-12 * c * a, "{k:?} {c}");
            }
        }
    }
}
