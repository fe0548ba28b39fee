//! Littlewood-Paley systems, band convolutions, Peetre and Hardy-Littlewood
//! maximal functions, Fourier multipliers and the bump pairing estimate.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{apply_multiplier, convolve_zero_padded, fft_nd, frequency_grid};
use crate::grid::{BoxDomain, GridFunction, ScaleWindow};
use crate::C64;

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`, built from `exp(-1/u)`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    a / (a + b)
}

/// Plateau `eta^(t)`: 1 on `t <= 1`, 0 on `t >= 2`, smooth in between.
pub fn eta_hat(t: f64) -> f64 {
    smooth_step(2.0 - t.abs())
}

/// Low-pass symbol `Phi^(xi) = eta^(|xi|)`.
pub fn low_symbol(r: f64) -> f64 {
    eta_hat(r)
}

/// Band symbol `phi^(xi) = eta^(|xi|) - eta^(2|xi|)`, supported in `1/2 <= |xi| <= 2`.
pub fn band_symbol(r: f64) -> f64 {
    eta_hat(r) - eta_hat(2.0 * r)
}

#[inline]
fn norm2(xi: [f64; 2]) -> f64 {
    (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
}

/// A family of convolution kernels indexed by dyadic level, given through
/// their Fourier multipliers on the box frequency grid.
pub trait BandFamily: Sync {
    fn domain(&self) -> &BoxDomain;
    /// Multiplier of the level-`j` kernel on the frequency grid (DFT order).
    fn multiplier(&self, j: i32) -> Vec<C64>;
}

/// Littlewood-Paley pair `(Phi, phi)` with `Phi^ + sum_j phi^(2^{-j} .) = 1`.
#[derive(Debug, Clone)]
pub struct LpSystem {
    pub domain: BoxDomain,
    pub window: ScaleWindow,
    /// Low-pass kernel samples, centered at the origin.
    pub low: GridFunction,
    /// Band kernel samples, centered at the origin.
    pub band: GridFunction,
    pub partition_of_unity: bool,
}

/// Builds the Littlewood-Paley system by the plateau-difference recipe.
pub fn build_lp_system(domain: &BoxDomain, window: &ScaleWindow) -> Result<LpSystem> {
    window.validate_for(domain)?;
    let nyquist = PI / domain.spacing();
    if nyquist <= 2.0 {
        return Err(Error::Resolution(format!(
            "Nyquist frequency {nyquist} does not resolve the band |xi| <= 2"
        )));
    }
    let low = kernel_from_symbol(domain, |xi| low_symbol(norm2(xi)));
    let band = kernel_from_symbol(domain, |xi| band_symbol(norm2(xi)));
    Ok(LpSystem { domain: *domain, window: *window, low, band, partition_of_unity: true })
}

/// Samples the kernel whose Fourier transform is `symbol`, centered at the
/// origin of the box (periodic).
pub fn kernel_from_symbol<F: Fn([f64; 2]) -> f64>(domain: &BoxDomain, symbol: F) -> GridFunction {
    let m = frequency_grid(domain, |xi| C64::new(symbol(xi), 0.0));
    // Delta at the grid point x = 0, scaled to unit mass.
    let mut delta = vec![C64::new(0.0, 0.0); domain.len()];
    let zero = domain.samples() / 2;
    delta[domain.flatten([zero, zero])] = C64::new(1.0 / domain.cell_volume(), 0.0);
    let values = apply_multiplier(domain, &delta, &m);
    GridFunction { domain: *domain, values }
}

impl LpSystem {
    /// Whether level `j` uses the low-pass symbol (inhomogeneous `j = 0`).
    fn is_low(&self, j: i32) -> bool {
        j == 0 && self.window.j_min >= 0
    }

    /// Radial symbol of the level-`j` kernel at frequency modulus `r`.
    pub fn symbol(&self, j: i32, r: f64) -> f64 {
        if self.is_low(j) {
            low_symbol(r)
        } else {
            band_symbol(r * (-j as f64).exp2())
        }
    }
}

impl BandFamily for LpSystem {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn multiplier(&self, j: i32) -> Vec<C64> {
        frequency_grid(&self.domain, |xi| C64::new(self.symbol(j, norm2(xi)), 0.0))
    }
}

/// `phi_j * f` (or `Phi * f` at `j = 0` for inhomogeneous windows).
pub fn band_convolve(f: &GridFunction, sys: &LpSystem, j: i32) -> Result<GridFunction> {
    if !sys.window.contains(j) {
        return Err(Error::Parameter(format!(
            "level {j} outside window [{}, {}]",
            sys.window.j_min, sys.window.j_max
        )));
    }
    Ok(family_convolve(f, sys, j))
}

/// Level-`j` convolution for any band family.
pub fn family_convolve<B: BandFamily + ?Sized>(f: &GridFunction, fam: &B, j: i32) -> GridFunction {
    let m = fam.multiplier(j);
    GridFunction { domain: f.domain, values: apply_multiplier(&f.domain, &f.values, &m) }
}

/// Alternative system `(Psi, psi)` with `psi^` vanishing to order `L` at 0.
#[derive(Debug, Clone)]
pub struct AltSystem {
    pub domain: BoxDomain,
    pub kind: AltKind,
    pub low: GridFunction,
    pub band: GridFunction,
    /// `d^alpha psi^(0) = 0` for all `|alpha| <= moment_order`.
    pub moment_order: i32,
    /// `psi^` is bounded below on `eps/2 < |xi| < 2 eps`.
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AltKind {
    /// `Psi^ = exp(-|xi|^2)`, `psi^ = |xi|^{2m} exp(-|xi|^2)`.
    GaussianMoment { m: u32 },
    /// `Psi` a compactly supported bump, `psi = Delta^{l0+1} Psi`.
    LocalMeans { l0: u32 },
}

/// Gaussian-based system whose band kernel has `moment_order >= L`.
pub fn build_alt_system(domain: &BoxDomain, moment_order: i32) -> Result<AltSystem> {
    if moment_order < 0 {
        return Err(Error::Parameter(format!("moment order {moment_order} must be >= 0")));
    }
    let m = ((moment_order + 2) / 2) as u32;
    let kind = AltKind::GaussianMoment { m };
    let low = kernel_from_symbol(domain, |xi| (-norm2(xi).powi(2)).exp());
    let band = kernel_from_symbol(domain, |xi| {
        let r = norm2(xi);
        r.powi(2 * m as i32) * (-r * r).exp()
    });
    Ok(AltSystem { domain: *domain, kind, low, band, moment_order: 2 * m as i32 - 1, epsilon: 1.0 })
}

/// Bump profile with `chi_{B(0,1)} <= Psi <= chi_{B(0,2)}`.
pub fn bump(r: f64) -> f64 {
    smooth_step(2.0 - r)
}

/// Local-means system: `Psi` a compact bump, `psi = Delta^{l0+1} Psi`.
pub fn build_local_mean_system(domain: &BoxDomain, l0: i32) -> Result<AltSystem> {
    if l0 < 0 {
        return Err(Error::Parameter(format!("l0 = {l0} must be >= 0")));
    }
    let kind = AltKind::LocalMeans { l0: l0 as u32 };
    let low = GridFunction::from_real_fn(*domain, |x| bump(norm2(x)));
    let tmp = AltSystem {
        domain: *domain,
        kind,
        low: low.clone(),
        band: low.clone(),
        moment_order: 2 * l0 + 1,
        epsilon: 1.0,
    };
    let band = GridFunction {
        domain: *domain,
        values: apply_multiplier(domain, &low.values, &tmp.laplacian_power(0)),
    };
    Ok(AltSystem { band, ..tmp })
}

impl AltSystem {
    /// `(-|2^{-j} xi|^2)^{l0+1}` on the frequency grid.
    fn laplacian_power(&self, j: i32) -> Vec<C64> {
        let p = match self.kind {
            AltKind::LocalMeans { l0 } => l0 as i32 + 1,
            AltKind::GaussianMoment { .. } => 0,
        };
        let s = (-j as f64).exp2();
        frequency_grid(&self.domain, |xi| C64::new((-(norm2(xi) * s).powi(2)).powi(p), 0.0))
    }

    /// Spatial samples of `2^{jn} Psi(2^j x)` for the local-means bump.
    fn dilated_bump_hat(&self, j: i32) -> Vec<C64> {
        let d = &self.domain;
        let s = (j as f64).exp2();
        let scale = s.powi(d.dim() as i32);
        // Sample the kernel with the origin moved to index 0 so the DFT is its transform.
        let n = d.samples();
        let h = d.spacing();
        let wrap = |i: usize| -> f64 {
            let k = crate::fft::signed_index(i, n) as f64;
            k * h
        };
        let mut buf: Vec<C64> = (0..d.len())
            .map(|idx| {
                let i = d.unflatten(idx);
                let x = if d.dim() == 1 { [wrap(i[0]), 0.0] } else { [wrap(i[0]), wrap(i[1])] };
                C64::new(scale * bump(norm2(x) * s) * d.cell_volume(), 0.0)
            })
            .collect();
        fft_nd(&mut buf, d.dim(), n, false);
        buf
    }
}

impl BandFamily for AltSystem {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn multiplier(&self, j: i32) -> Vec<C64> {
        match self.kind {
            AltKind::GaussianMoment { m } => {
                let s = (-j as f64).exp2();
                frequency_grid(&self.domain, |xi| {
                    let r = norm2(xi) * s;
                    let v = if j == 0 { (-r * r).exp() } else { r.powi(2 * m as i32) * (-r * r).exp() };
                    C64::new(v, 0.0)
                })
            }
            AltKind::LocalMeans { .. } => {
                let hat = self.dilated_bump_hat(j);
                if j == 0 {
                    hat
                } else {
                    let lap = self.laplacian_power(j);
                    hat.iter().zip(&lap).map(|(a, b)| a * b).collect()
                }
            }
        }
    }
}

/// Peetre maximal function of a nonnegative field:
/// `x -> max_y v(x+y) / (1 + scale |y|)^a`, `y` over minimal-image periodic
/// displacements of the grid. Exact (branch and bound over block maxima).
pub fn peetre_max(domain: &BoxDomain, v: &[f64], scale: f64, a: f64) -> Vec<f64> {
    let n = domain.samples();
    let h = domain.spacing();
    let dim = domain.dim();
    let half = n / 2;
    let weight = |d: f64| (1.0 + scale * h * d).powf(-a);
    let gmax = v.iter().cloned().fold(0.0f64, f64::max);
    if gmax == 0.0 {
        return vec![0.0; v.len()];
    }
    let mind = |i: usize, k: usize| -> usize {
        let d = if i > k { i - k } else { k - i };
        d.min(n - d)
    };
    if dim == 1 {
        let table: Vec<f64> = (0..=half).map(|d| weight(d as f64)).collect();
        let bs = n.min(32);
        let nb = n / bs;
        let bmax: Vec<f64> = v.chunks(bs).map(|c| c.iter().cloned().fold(0.0, f64::max)).collect();
        let mut offsets: Vec<(usize, usize)> = (0..nb)
            .map(|o| {
                let oo = o.min(nb - o);
                (o, if oo == 0 { 0 } else { (oo - 1) * bs })
            })
            .collect();
        offsets.sort_by_key(|&(o, lb)| (lb, o));
        let offsets: Vec<(usize, usize)> = offsets
            .into_iter()
            .flat_map(|(o, lb)| if o == 0 || 2 * o == nb { vec![(o, lb)] } else { vec![(o, lb), (nb - o, lb)] })
            .collect::<Vec<_>>();
        let mut seen = vec![false; nb];
        let offsets: Vec<(usize, usize)> = offsets.into_iter().filter(|&(o, _)| !std::mem::replace(&mut seen[o], true)).collect();
        return (0..n)
            .into_par_iter()
            .map(|x| {
                let xb = x / bs;
                let mut best = v[x];
                for &(o, lb) in &offsets {
                    if gmax * table[lb.min(half)] <= best {
                        break;
                    }
                    let b = (xb + o) % nb;
                    let lo = b * bs;
                    let hi = lo + bs - 1;
                    let dmin = if (lo..=hi).contains(&x) { 0 } else { mind(x, lo).min(mind(x, hi)) };
                    if bmax[b] * table[dmin] * (1.0 + 1e-12) <= best {
                        continue;
                    }
                    for y in lo..=hi {
                        let t = v[y] * table[mind(x, y)];
                        if t > best {
                            best = t;
                        }
                    }
                }
                best
            })
            .collect();
    }
    // Two dimensions: weight table over per-axis index distances.
    let tw = half + 1;
    let mut table = vec![0.0; tw * tw];
    for dx in 0..tw {
        for dy in 0..tw {
            table[dx * tw + dy] = weight(((dx * dx + dy * dy) as f64).sqrt());
        }
    }
    let bs = n.min(8);
    let nb = n / bs;
    let mut bmax = vec![0.0f64; nb * nb];
    for r in 0..n {
        for c in 0..n {
            let b = (r / bs) * nb + c / bs;
            bmax[b] = bmax[b].max(v[r * n + c]);
        }
    }
    let lbd = |o: usize| -> usize {
        let oo = o.min(nb - o);
        if oo == 0 {
            0
        } else {
            (oo - 1) * bs
        }
    };
    let mut offsets: Vec<(usize, usize, f64)> = Vec::with_capacity(nb * nb);
    for ox in 0..nb {
        for oy in 0..nb {
            let (lx, ly) = (lbd(ox).min(half), lbd(oy).min(half));
            offsets.push((ox, oy, table[lx * tw + ly]));
        }
    }
    offsets.sort_by(|p, q| q.2.partial_cmp(&p.2).unwrap().then((p.0, p.1).cmp(&(q.0, q.1))));
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (xr, xc) = (idx / n, idx % n);
            let (xbr, xbc) = (xr / bs, xc / bs);
            let mut best = v[idx];
            for &(ox, oy, wlb) in &offsets {
                if gmax * wlb <= best {
                    break;
                }
                let br = (xbr + ox) % nb;
                let bc = (xbc + oy) % nb;
                let (r0, c0) = (br * bs, bc * bs);
                let dr = if (r0..r0 + bs).contains(&xr) { 0 } else { mind(xr, r0).min(mind(xr, r0 + bs - 1)) };
                let dc = if (c0..c0 + bs).contains(&xc) { 0 } else { mind(xc, c0).min(mind(xc, c0 + bs - 1)) };
                if bmax[br * nb + bc] * table[dr * tw + dc] * (1.0 + 1e-12) <= best {
                    continue;
                }
                for r in r0..r0 + bs {
                    let drr = mind(xr, r) * tw;
                    for c in c0..c0 + bs {
                        let t = v[r * n + c] * table[drr + mind(xc, c)];
                        if t > best {
                            best = t;
                        }
                    }
                }
            }
            best
        })
        .collect()
}

/// Peetre maximal function `(phi_j^* f)_a` of an LP system.
pub fn peetre_maximal(f: &GridFunction, sys: &LpSystem, j: i32, a: f64) -> Result<GridFunction> {
    if !(a > 0.0) {
        return Err(Error::Parameter(format!("a = {a} must be positive")));
    }
    let g = band_convolve(f, sys, j)?;
    let v = peetre_max(&f.domain, &g.abs(), (j as f64).exp2(), a);
    GridFunction::from_real(f.domain, &v)
}

/// Peetre maximal sequence for any band family.
pub fn family_peetre<B: BandFamily + ?Sized>(f: &GridFunction, fam: &B, j: i32, a: f64) -> Vec<f64> {
    let g = family_convolve(f, fam, j);
    peetre_max(&f.domain, &g.abs(), (j as f64).exp2(), a)
}

/// Maximal operator kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaximalKind {
    /// Cube-window Hardy-Littlewood operator over dyadic radii.
    HardyLittlewood,
    /// `M_{r,lambda}`: damped `r`-power averages.
    Windowed { r: f64, lambda: f64 },
}

/// Maximal function of `|f|`. Windows are the cubes `|y_i| < R` for
/// `R = h, 2h, 4h, ... <= 2L`, normalized by `R^n`; outside the box `f = 0`.
pub fn maximal_operator(f: &GridFunction, kind: MaximalKind) -> GridFunction {
    let v = f.abs();
    let out = maximal_values(&f.domain, &v, kind);
    GridFunction::from_real(f.domain, &out).expect("finite maximal values")
}

/// Maximal function of a nonnegative field.
pub fn maximal_values(domain: &BoxDomain, v: &[f64], kind: MaximalKind) -> Vec<f64> {
    let h = domain.spacing();
    let n = domain.samples();
    let dim = domain.dim();
    let mut radii = Vec::new();
    let mut m = 1usize;
    while (m as f64) * h <= 2.0 * domain.half_width() + 1e-12 {
        radii.push(m);
        m *= 2;
    }
    match kind {
        MaximalKind::HardyLittlewood => {
            let mut best = vec![0.0f64; v.len()];
            if dim == 1 {
                let mut pre = vec![0.0f64; n + 1];
                for i in 0..n {
                    pre[i + 1] = pre[i] + v[i];
                }
                for &m in &radii {
                    let w = m - 1;
                    let norm = h / (m as f64 * h);
                    for i in 0..n {
                        let lo = i.saturating_sub(w);
                        let hi = (i + w + 1).min(n);
                        let avg = (pre[hi] - pre[lo]) * norm;
                        if avg > best[i] {
                            best[i] = avg;
                        }
                    }
                }
            } else {
                let mut sat = vec![0.0f64; (n + 1) * (n + 1)];
                for r in 0..n {
                    for c in 0..n {
                        sat[(r + 1) * (n + 1) + c + 1] =
                            v[r * n + c] + sat[r * (n + 1) + c + 1] + sat[(r + 1) * (n + 1) + c] - sat[r * (n + 1) + c];
                    }
                }
                for &m in &radii {
                    let w = m - 1;
                    let norm = 1.0 / (m as f64 * m as f64);
                    for r in 0..n {
                        let (r0, r1) = (r.saturating_sub(w), (r + w + 1).min(n));
                        for c in 0..n {
                            let (c0, c1) = (c.saturating_sub(w), (c + w + 1).min(n));
                            let s = sat[r1 * (n + 1) + c1] - sat[r0 * (n + 1) + c1] - sat[r1 * (n + 1) + c0]
                                + sat[r0 * (n + 1) + c0];
                            let avg = s * norm;
                            if avg > best[r * n + c] {
                                best[r * n + c] = avg;
                            }
                        }
                    }
                }
            }
            best
        }
        MaximalKind::Windowed { r, lambda } => {
            let vr: Vec<f64> = v.iter().map(|x| x.powf(r)).collect();
            let mut best = vec![0.0f64; v.len()];
            for &m in &radii {
                let big_r = m as f64 * h;
                let norm = big_r.powi(dim as i32);
                let conv = convolve_zero_padded(domain, &vr, |y| {
                    let inside = y[..dim].iter().all(|c| c.abs() < big_r - 0.5 * h);
                    if inside {
                        (1.0 + norm2(y)).powf(-r * lambda) / norm
                    } else {
                        0.0
                    }
                });
                for (b, c) in best.iter_mut().zip(conv) {
                    let val = c.max(0.0).powf(1.0 / r);
                    if val > *b {
                        *b = val;
                    }
                }
            }
            best
        }
    }
}

/// Bessel potential lift `(1 - Delta)^{s/2} f`.
pub fn bessel_lift(f: &GridFunction, s: f64) -> GridFunction {
    let m = frequency_grid(&f.domain, |xi| C64::new((1.0 + norm2(xi).powi(2)).powf(s / 2.0), 0.0));
    GridFunction { domain: f.domain, values: apply_multiplier(&f.domain, &f.values, &m) }
}

/// Fourier multiplier `(m f^)^v` with `m` sampled on the frequency grid.
pub fn fourier_multiplier(f: &GridFunction, m: &[C64]) -> Result<GridFunction> {
    if m.len() != f.values.len() {
        return Err(Error::Parameter("multiplier size does not match the grid".into()));
    }
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Parameter("multiplier must be finite".into()));
    }
    Ok(GridFunction { domain: f.domain, values: apply_multiplier(&f.domain, &f.values, m) })
}

/// Probabilists' Hermite polynomial `He_k(t)`; `d^k/dt^k e^{-t^2/2} = (-1)^k He_k(t) e^{-t^2/2}`.
pub fn hermite_he(k: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if k == 0 {
        return p0;
    }
    for m in 1..k {
        let p2 = t * p1 - m as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `d^k/dt^k exp(-t^2/2)`.
pub fn gaussian_derivative(k: usize, t: f64) -> f64 {
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * hermite_he(k, t) * (-0.5 * t * t).exp()
}

/// Tensor Gaussian-derivative kernel `2^{jn} g^{(k)}(2^j (x - x_c))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelData {
    pub dim: usize,
    pub level: i32,
    pub center: [f64; 2],
    /// Derivative orders of the profile along each axis.
    pub orders: [usize; 2],
}

impl KernelData {
    /// Profile `g^{(k1)}(t1) g^{(k2)}(t2)` with extra derivative `alpha`.
    pub fn profile(&self, t: [f64; 2], alpha: [usize; 2]) -> f64 {
        let mut v = gaussian_derivative(self.orders[0] + alpha[0], t[0]);
        if self.dim == 2 {
            v *= gaussian_derivative(self.orders[1] + alpha[1], t[1]);
        }
        v
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let s = (self.level as f64).exp2();
        let t = [s * (x[0] - self.center[0]), s * (x[1] - self.center[1])];
        s.powi(self.dim as i32) * self.profile(t, [0, 0])
    }

    /// Vanishing moments of the profile: all `|beta| <= orders[0] - 1`
    /// vanish when the derivative sits on the first axis.
    pub fn moment_order(&self) -> i32 {
        if self.dim == 1 {
            self.orders[0] as i32 - 1
        } else {
            self.orders[0].max(self.orders[1]) as i32 - 1
        }
    }

    /// Smallest `C` with `|profile^{(alpha)}(t)| <= C (1 + |t|)^{-decay}` on a
    /// fine sampling of `[-T, T]^n`.
    pub fn envelope_constant(&self, alpha: [usize; 2], decay: f64) -> f64 {
        let (t_max, step) = if self.dim == 1 { (48.0, 1.0 / 128.0) } else { (24.0, 1.0 / 24.0) };
        let m = (2.0 * t_max / step) as usize;
        let coord = |i: usize| -t_max + step * i as f64;
        let eval = |t: [f64; 2]| {
            let r = (t[0] * t[0] + t[1] * t[1]).sqrt();
            self.profile(t, alpha).abs() * (1.0 + r).powf(decay)
        };
        if self.dim == 1 {
            (0..=m).map(|i| eval([coord(i), 0.0])).fold(0.0, f64::max)
        } else {
            (0..=m)
                .into_par_iter()
                .map(|i| (0..=m).map(|k| eval([coord(i), coord(k)])).fold(0.0, f64::max))
                .reduce(|| 0.0, f64::max)
        }
    }
}

/// Both sides of the bump pairing estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingBound {
    pub lhs: f64,
    pub rhs: f64,
    pub a_sum: f64,
    pub b: f64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `|int phi_j phi_nu|` against the moment/decay bound. `phi_j` must satisfy
/// the derivative bound of order `l` with decay `m`, `phi_nu` the size bound
/// with decay `big_n` and vanishing moments through `l - 1`.
pub fn bump_pairing_bound(phi_j: &KernelData, phi_nu: &KernelData, m: f64, big_n: f64, l: usize) -> Result<PairingBound> {
    let n = phi_j.dim;
    if phi_nu.dim != n {
        return Err(Error::Parameter("kernel dimensions differ".into()));
    }
    if phi_nu.level < phi_j.level {
        return Err(Error::Parameter("need nu >= j".into()));
    }
    if !(big_n > m + l as f64 + n as f64) {
        return Err(Error::Parameter(format!("need N > M + L + n, got N = {big_n}, M = {m}, L = {l}")));
    }
    if phi_nu.moment_order() < l as i32 - 1 {
        return Err(Error::Parameter(format!(
            "phi_nu has vanishing moments through order {}, need {}",
            phi_nu.moment_order(),
            l as i32 - 1
        )));
    }
    let mut a_sum = 0.0;
    if n == 1 {
        a_sum = phi_j.envelope_constant([l, 0], m) / factorial(l);
    } else {
        for a0 in 0..=l {
            let alpha = [a0, l - a0];
            a_sum += phi_j.envelope_constant(alpha, m) / (factorial(alpha[0]) * factorial(alpha[1]));
        }
    }
    let b = phi_nu.envelope_constant([0, 0], big_n);
    let omega = if n == 1 { 2.0 } else { PI };
    let (j, nu) = (phi_j.level as f64, phi_nu.level as f64);
    let dist = ((phi_j.center[0] - phi_nu.center[0]).powi(2) + (phi_j.center[1] - phi_nu.center[1]).powi(2)).sqrt();
    let nml = big_n - m - l as f64;
    let rhs = a_sum * nml / (nml - n as f64) * b * omega * (j * n as f64 - (nu - j) * l as f64).exp2()
        * (1.0 + j.exp2() * dist).powf(-m);
    // Quadrature localized around phi_nu (Gaussian decay at scale 2^{-nu}).
    let s = (-nu).exp2();
    let (half, step) = if n == 1 { (40.0 * s, s / 64.0) } else { (20.0 * s, s / 16.0) };
    let cnt = (2.0 * half / step) as usize;
    let lhs = if n == 1 {
        let acc: f64 = (0..=cnt)
            .map(|i| {
                let x = [phi_nu.center[0] - half + step * i as f64, 0.0];
                phi_j.eval(x) * phi_nu.eval(x)
            })
            .sum();
        (acc * step).abs()
    } else {
        let rows: Vec<f64> = (0..=cnt)
            .into_par_iter()
            .map(|i| {
                let x0 = phi_nu.center[0] - half + step * i as f64;
                (0..=cnt)
                    .map(|k| {
                        let x = [x0, phi_nu.center[1] - half + step * k as f64];
                        phi_j.eval(x) * phi_nu.eval(x)
                    })
                    .sum::<f64>()
            })
            .collect();
        (rows.iter().sum::<f64>() * step * step).abs()
    };
    Ok(PairingBound { lhs, rhs, a_sum, b })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_peetre(d: &BoxDomain, v: &[f64], scale: f64, a: f64) -> Vec<f64> {
        let n = d.samples();
        let h = d.spacing();
        let md = |i: usize, k: usize| {
            let x = (i as i64 - k as i64).unsigned_abs() as usize;
            x.min(n - x) as f64
        };
        (0..v.len())
            .map(|x| {
                let xi = d.unflatten(x);
                (0..v.len())
                    .map(|y| {
                        let yi = d.unflatten(y);
                        let dist = if d.dim() == 1 {
                            md(xi[0], yi[0])
                        } else {
                            (md(xi[0], yi[0]).powi(2) + md(xi[1], yi[1]).powi(2)).sqrt()
                        };
                        v[y] / (1.0 + scale * h * dist).powf(a)
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    #[test]
    fn peetre_matches_naive_scan() {
        for &(dim, n) in &[(1usize, 256usize), (2, 32)] {
            let d = BoxDomain::new(dim, 4.0, n).unwrap();
            let v: Vec<f64> = (0..d.len()).map(|i| (((i * 7919) % 613) as f64 / 613.0).powi(3)).collect();
            for &(s, a) in &[(1.0, 0.5), (4.0, 2.0), (16.0, 6.0)] {
                let fast = peetre_max(&d, &v, s, a);
                let slow = naive_peetre(&d, &v, s, a);
                for (p, q) in fast.iter().zip(&slow) {
                    assert!((p - q).abs() <= 1e-14 * q.max(1e-300), "{p} vs {q}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_symbols() {
        for k in 0..2000 {
            let r = k as f64 * 0.01;
            let total: f64 = low_symbol(r) + (1..=8).map(|j| band_symbol(r * (-(j as f64)).exp2())).sum::<f64>();
            if r <= 128.0 {
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(band_symbol(0.49), 0.0);
        assert!(low_symbol(5.0 / 3.0) > 0.0);
        assert!(band_symbol(0.6) > 0.0 && band_symbol(5.0 / 3.0) > 0.0);
    }

    #[test]
    fn hardy_littlewood_indicator() {
        let d = BoxDomain::new(1, 16.0, 4096).unwrap();
        let f = GridFunction::from_real_fn(d, |x| if x[0].abs() <= 1.0 { 1.0 } else { 0.0 });
        let m = maximal_operator(&f, MaximalKind::HardyLittlewood);
        // Dyadic radii only reach R = x + 1 up to a factor 2 in general; at
        // x + 1 a power of two times h the window is exact.
        for &x in &[3.0, 7.0] {
            let i = ((x + 16.0) / d.spacing()) as usize;
            let want = 2.0 / (x + 1.0);
            assert!((m.values[i].re - want).abs() < 4.0 * d.spacing(), "{} vs {want}", m.values[i].re);
        }
        for (mv, fv) in m.values.iter().zip(&f.values) {
            assert!(mv.re >= fv.re);
        }
    }

    #[test]
    fn hermite_matches_finite_difference() {
        let h = 1e-4;
        for k in 0..5 {
            for &t in &[-1.3, 0.2, 2.5] {
                let fd = (gaussian_derivative(k, t + h) - gaussian_derivative(k, t - h)) / (2.0 * h);
                assert!((fd - gaussian_derivative(k + 1, t)).abs() < 1e-6);
            }
        }
    }
}
