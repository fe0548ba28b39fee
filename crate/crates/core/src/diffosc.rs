//! Iterated differences, local polynomial oscillations and the difference /
//! oscillation characterizations of the space norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::grid::{cubes_at_level, BoxDomain, GridFunction};
use crate::kernels::peetre_max;
use crate::norms::{Scale, SpaceSpec};
use crate::sequence::{cube_levels, mixed_norm_abs};
use crate::spaces::cube_region;
use crate::stats;
use crate::C64;

/// Order, integrability and radius constant of the difference / oscillation
/// characterizations, with the Peetre decay `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffOscConfig {
    /// Difference order / polynomial degree bound `M` (polynomials of degree `< M`).
    pub m: u32,
    /// Averaging exponent `u` in `[1, inf]`.
    pub u: f64,
    /// Ball radius constant: increments `|h| <= c_tilde 2^{-j}`.
    pub c_tilde: f64,
    pub a: f64,
}

impl DiffOscConfig {
    /// Structural validity of the parameters.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Parameter("difference order M must be >= 1".into()));
        }
        if !(self.u >= 1.0) {
            return Err(Error::Parameter(format!("u = {} must lie in [1, inf]", self.u)));
        }
        if !(self.c_tilde > 0.0 && self.c_tilde.is_finite()) {
            return Err(Error::Parameter(format!("radius constant {} must be positive", self.c_tilde)));
        }
        if !(self.a > 0.0) {
            return Err(Error::Parameter(format!("a = {} must be positive", self.a)));
        }
        Ok(())
    }

    /// Hypotheses of the characterization for `spec`: star weight,
    /// `M > a1 v (a + n tau + a2)` and `a1` in `(a, M)`.
    pub fn admissible_for(&self, spec: &SpaceSpec) -> Result<()> {
        self.validate()?;
        let c = spec.w.class;
        let n = spec.space.dim as f64;
        let m = self.m as f64;
        let need = c.alpha1.max(self.a + n * spec.tau + c.alpha2);
        let mut bad = Vec::new();
        if !c.star {
            bad.push("the weight must belong to the star class".to_string());
        }
        if !(m > need) {
            bad.push(format!("M = {m} must exceed a1 v (a + n tau + a2) = {need}"));
        }
        if !(c.alpha1 > self.a && c.alpha1 < m) {
            bad.push(format!("a1 = {} must lie in (a, M) = ({}, {m})", c.alpha1, self.a));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Hypothesis(bad.join("; ")))
        }
    }
}

fn shift_of(d: &BoxDomain, h: &[f64]) -> Result<[i64; 2]> {
    if h.len() != d.dim() {
        return Err(Error::Parameter(format!("increment has {} components, expected {}", h.len(), d.dim())));
    }
    let mut s = [0i64; 2];
    for (a, &v) in h.iter().enumerate() {
        let t = v / d.spacing();
        if (t - t.round()).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::Alignment(format!("increment component {v} is not a multiple of the spacing {}", d.spacing())));
        }
        s[a] = t.round() as i64;
    }
    Ok(s)
}

/// `g(x) = f(x - s h_grid)` on the periodic grid.
fn shifted(d: &BoxDomain, v: &[C64], s: [i64; 2]) -> Vec<C64> {
    let n = d.samples() as i64;
    if d.dim() == 1 {
        (0..n).map(|i| v[(i - s[0]).rem_euclid(n) as usize]).collect()
    } else {
        let mut out = Vec::with_capacity(v.len());
        for r in 0..n {
            let rr = (r - s[0]).rem_euclid(n);
            for c in 0..n {
                out.push(v[(rr * n + (c - s[1]).rem_euclid(n)) as usize]);
            }
        }
        out
    }
}

/// `Delta^M_h f` by `M`-fold composition of `f - f(. - h)` (periodic).
pub fn iterated_difference(f: &GridFunction, h: &[f64], m: u32) -> Result<GridFunction> {
    let s = shift_of(&f.domain, h)?;
    let mut cur = f.values.clone();
    for _ in 0..m {
        let sh = shifted(&f.domain, &cur, s);
        cur = cur.iter().zip(&sh).map(|(a, b)| a - b).collect();
    }
    Ok(GridFunction { domain: f.domain, values: cur })
}

/// Integer increments `s` with `|s| h_grid <= r`.
fn ball_shifts(d: &BoxDomain, r: f64) -> Vec<[i64; 2]> {
    let h = d.spacing();
    let m = (r / h + 1e-9).floor() as i64;
    let mut out = Vec::new();
    if d.dim() == 1 {
        for s in -m..=m {
            out.push([s, 0]);
        }
    } else {
        for a in -m..=m {
            for b in -m..=m {
                if ((a * a + b * b) as f64).sqrt() * h <= r * (1.0 + 1e-12) {
                    out.push([a, b]);
                }
            }
        }
    }
    out
}

/// Level fields `[avg_{|h| <= c 2^{-j}} |Delta^M_h f|^u]^{1/u}` before the
/// Peetre supremum; levels with fewer than `3^n` increments are zero.
pub fn difference_fields(f: &GridFunction, spec: &SpaceSpec, cfg: &DiffOscConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let d = f.domain;
    let n = d.dim();
    let mut out = Vec::with_capacity(spec.window.len());
    for j in spec.window.levels() {
        let shifts = ball_shifts(&d, cfg.c_tilde * (-j as f64).exp2());
        let mut acc = vec![0.0f64; d.len()];
        if shifts.len() < 3usize.pow(n as u32) {
            out.push(acc);
            continue;
        }
        for s in &shifts {
            let h = [s[0] as f64 * d.spacing(), s[1] as f64 * d.spacing()];
            let df = iterated_difference(f, &h[..n], cfg.m)?;
            for (a, v) in acc.iter_mut().zip(&df.values) {
                let t = v.norm();
                if cfg.u.is_infinite() {
                    *a = a.max(t);
                } else {
                    *a += t.powf(cfg.u);
                }
            }
        }
        if cfg.u.is_finite() {
            let cnt = shifts.len() as f64;
            acc.iter_mut().for_each(|a| *a = (*a / cnt).powf(1.0 / cfg.u));
        }
        out.push(acc);
    }
    Ok(out)
}

/// `sup_{P in cubes} |P|^{-tau} ||chi_P w_0 (f)*_a||_L` over cubes of level
/// `j_P <= 0` (`all_cubes = false`) or every level down to the window top.
pub fn j_functional(f: &GridFunction, spec: &SpaceSpec, a: f64, all_cubes: bool) -> Result<f64> {
    let d = f.domain;
    let pm = peetre_max(&d, &f.abs(), 1.0, a);
    let field: Vec<f64> = pm.iter().enumerate().map(|(i, v)| v * spec.w.eval(d.point(i), 0)).collect();
    let levels = cube_levels(&d, &spec.window);
    let top = if all_cubes { *levels.end() } else { 0.min(*levels.end()) };
    let mut best = 0.0f64;
    for jp in *levels.start()..=top {
        let scale = (jp as f64 * d.dim() as f64 * spec.tau).exp2();
        for q in cubes_at_level(&d, jp) {
            let v = spec.space.norm_in(&d, &field, &cube_region(&d, &q))?;
            best = best.max(v * scale);
        }
    }
    Ok(best)
}

fn uses_all_cubes(scale: Scale) -> bool {
    matches!(scale, Scale::N | Scale::E)
}

/// Difference characterization: mixed norm of the Peetre-damped difference
/// fields plus the matching `J` functional.
pub fn difference_norm(f: &GridFunction, spec: &SpaceSpec, cfg: &DiffOscConfig) -> Result<f64> {
    cfg.admissible_for(spec)?;
    let d = f.domain;
    let fields = difference_fields(f, spec, cfg)?;
    let g: Vec<Vec<f64>> =
        spec.window.levels().zip(fields).map(|(j, v)| peetre_max(&d, &v, (j as f64).exp2(), cfg.a)).collect();
    let main = mixed_norm_abs(&d, &spec.window, &g, spec.scale.kind(), &spec.space, &spec.w, spec.tau, spec.q)?;
    Ok(main + j_functional(f, spec, cfg.a, uses_all_cubes(spec.scale))?)
}

/// Relative objective-change tolerance of the iterative oscillation solvers.
pub const OSC_TOL: f64 = 1e-9;

fn monomial_exponents(dim: usize, m: u32) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for t in 0..m {
        if dim == 1 {
            out.push([t, 0]);
        } else {
            for a in 0..=t {
                out.push([a, t - a]);
            }
        }
    }
    out
}

/// `osc^M_u f(x, t) = inf_P (avg_{B(x,t)} |f - P|^u)^{1/u}`, `P` of degree `< M`
/// (sup norm for `u = inf`). `u = 2` is solved by the normal equations, other
/// `u` by iteratively reweighted least squares warm-started at `u = 2`.
pub fn oscillation(f: &GridFunction, x: &[f64], t: f64, m: u32, u: f64) -> Result<f64> {
    let d = f.domain;
    let dim = d.dim();
    if x.len() != dim {
        return Err(Error::Parameter(format!("point has {} components, expected {dim}", x.len())));
    }
    if !(u >= 1.0) || m == 0 || !(t > 0.0) {
        return Err(Error::Parameter(format!("need M >= 1, u >= 1, t > 0; got M = {m}, u = {u}, t = {t}")));
    }
    let mut pts: Vec<[f64; 2]> = Vec::new();
    let mut vals: Vec<C64> = Vec::new();
    for (i, v) in f.values.iter().enumerate() {
        let p = d.point(i);
        let mut r = [0.0; 2];
        for a in 0..dim {
            r[a] = (p[a] - x[a]) / t;
        }
        if (r[0] * r[0] + r[1] * r[1]).sqrt() < 1.0 {
            pts.push(r);
            vals.push(*v);
        }
    }
    let exps = monomial_exponents(dim, m);
    if pts.len() < exps.len() {
        return Err(Error::DegenerateBall(format!("{} grid points in the ball, need {}", pts.len(), exps.len())));
    }
    let design: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| exps.iter().map(|e| p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32)).collect())
        .collect();
    let re: Vec<f64> = vals.iter().map(|v| v.re).collect();
    let im: Vec<f64> = vals.iter().map(|v| v.im).collect();
    let fit = |w: &[f64]| -> Result<Vec<C64>> {
        let wd: Vec<Vec<f64>> = design.iter().zip(w).map(|(row, &wi)| row.iter().map(|x| x * wi.sqrt()).collect()).collect();
        let wr: Vec<f64> = re.iter().zip(w).map(|(y, &wi)| y * wi.sqrt()).collect();
        let wi_: Vec<f64> = im.iter().zip(w).map(|(y, &wi)| y * wi.sqrt()).collect();
        let cr = stats::lstsq(&wd, &wr).ok_or_else(|| Error::DegenerateBall("singular normal equations".into()))?;
        let ci = stats::lstsq(&wd, &wi_).ok_or_else(|| Error::DegenerateBall("singular normal equations".into()))?;
        Ok(cr.into_iter().zip(ci).map(|(a, b)| C64::new(a, b)).collect())
    };
    let residuals = |c: &[C64]| -> Vec<f64> {
        design
            .iter()
            .zip(&vals)
            .map(|(row, v)| {
                let p: C64 = row.iter().zip(c).map(|(x, ci)| ci * x).sum();
                (v - p).norm()
            })
            .collect()
    };
    let objective = |r: &[f64]| -> f64 {
        if u.is_infinite() {
            r.iter().cloned().fold(0.0, f64::max)
        } else {
            (r.iter().map(|x| x.powf(u)).sum::<f64>() / r.len() as f64).powf(1.0 / u)
        }
    };
    let ones = vec![1.0; pts.len()];
    let c2 = fit(&ones)?;
    let mut res = residuals(&c2);
    let mut best = objective(&res);
    if u == 2.0 || best == 0.0 {
        return Ok(best);
    }
    let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let floor = 1e-12 * scale;
    let mut weights = ones;
    for _ in 0..2000 {
        if u.is_infinite() {
            // Lawson iteration for the minimax fit.
            let total: f64 = weights.iter().zip(&res).map(|(w, r)| w * r).sum();
            if total <= 0.0 {
                break;
            }
            weights = weights.iter().zip(&res).map(|(w, r)| w * r / total).collect();
        } else {
            weights = res.iter().map(|r| r.max(floor).powf(u - 2.0)).collect();
        }
        let c = fit(&weights)?;
        res = residuals(&c);
        let obj = objective(&res);
        let improved = best - obj;
        if obj < best {
            best = obj;
        }
        if improved.abs() <= OSC_TOL * best.max(floor) {
            break;
        }
    }
    Ok(best)
}

/// Circular cross-correlation `sum_s k(s) v(x + s)` via FFT; `kernel` is
/// indexed by DFT-ordered displacement.
fn correlate(d: &BoxDomain, v: &[f64], kernel: &[f64]) -> Vec<f64> {
    let mut a: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
    let mut b: Vec<C64> = kernel.iter().map(|&x| C64::new(x, 0.0)).collect();
    fft_nd(&mut a, d.dim(), d.samples(), false);
    fft_nd(&mut b, d.dim(), d.samples(), false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    fft_nd(&mut a, d.dim(), d.samples(), true);
    a.into_iter().map(|z| z.re).collect()
}

/// `osc^M_2 f(x, t)` at every grid point (periodic balls), by correlating
/// with the monomials of the ball and solving one shared Gram system.
pub fn oscillation_field_l2(f: &GridFunction, t: f64, m: u32) -> Result<Vec<f64>> {
    let d = f.domain;
    let dim = d.dim();
    let n = d.samples();
    let h = d.spacing();
    let exps = monomial_exponents(dim, m);
    let mut disp: Vec<(usize, [f64; 2])> = Vec::new();
    let half = (t / h).ceil() as i64 + 1;
    let idx = |s: i64| -> usize { s.rem_euclid(n as i64) as usize };
    if (2 * half + 1) as usize > n {
        return Err(Error::DegenerateBall(format!("ball radius {t} exceeds the box")));
    }
    if dim == 1 {
        for s in -half..=half {
            let r = s as f64 * h / t;
            if r.abs() < 1.0 {
                disp.push((idx(s), [r, 0.0]));
            }
        }
    } else {
        for a in -half..=half {
            for b in -half..=half {
                let r = [a as f64 * h / t, b as f64 * h / t];
                if (r[0] * r[0] + r[1] * r[1]).sqrt() < 1.0 {
                    disp.push((idx(a) * n + idx(b), r));
                }
            }
        }
    }
    if disp.len() < exps.len() {
        return Err(Error::DegenerateBall(format!("{} grid points in the ball, need {}", disp.len(), exps.len())));
    }
    let mono = |r: [f64; 2], e: [u32; 2]| r[0].powi(e[0] as i32) * r[1].powi(e[1] as i32);
    let k = exps.len();
    let mut gram = vec![vec![0.0; k]; k];
    for (_, r) in &disp {
        for a in 0..k {
            for b in 0..k {
                gram[a][b] += mono(*r, exps[a]) * mono(*r, exps[b]);
            }
        }
    }
    let count = disp.len() as f64;
    let mut total = vec![0.0f64; d.len()];
    let mut ones = vec![0.0; d.len()];
    for (i, _) in &disp {
        ones[*i] = 1.0;
    }
    for part in 0..2 {
        let v: Vec<f64> = f.values.iter().map(|z| if part == 0 { z.re } else { z.im }).collect();
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        let energy = correlate(&d, &sq, &ones);
        let moments: Vec<Vec<f64>> = exps
            .iter()
            .map(|&e| {
                let mut ker = vec![0.0; d.len()];
                for (i, r) in &disp {
                    ker[*i] = mono(*r, e);
                }
                correlate(&d, &v, &ker)
            })
            .collect();
        for x in 0..d.len() {
            let mut aug: Vec<Vec<f64>> = gram.clone();
            for (a, row) in aug.iter_mut().enumerate() {
                row.push(moments[a][x]);
            }
            let c = stats::solve(aug).ok_or_else(|| Error::DegenerateBall("singular Gram matrix".into()))?;
            let proj: f64 = c.iter().zip(&moments).map(|(ci, mo)| ci * mo[x]).sum();
            total[x] += (energy[x] - proj).max(0.0);
        }
    }
    Ok(total.into_iter().map(|e| (e / count).sqrt()).collect())
}

/// Level fields `osc^M_u f(., 2^{-j})` before the Peetre supremum; levels
/// whose balls hold fewer than `max(3^n, dim P_M)` points are zero.
pub fn oscillation_fields(f: &GridFunction, spec: &SpaceSpec, cfg: &DiffOscConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let d = f.domain;
    let n = d.dim();
    let need = 3usize.pow(n as u32).max(monomial_exponents(n, cfg.m).len());
    let mut out = Vec::with_capacity(spec.window.len());
    for j in spec.window.levels() {
        let t = (-j as f64).exp2();
        let inside = ball_shifts(&d, t * (1.0 - 1e-9)).len();
        if inside < need {
            out.push(vec![0.0; d.len()]);
            continue;
        }
        if cfg.u == 2.0 {
            out.push(oscillation_field_l2(f, t, cfg.m)?);
        } else {
            let v: Vec<f64> = (0..d.len())
                .map(|i| oscillation(f, &d.point(i)[..n], t, cfg.m, cfg.u))
                .collect::<Result<_>>()?;
            out.push(v);
        }
    }
    Ok(out)
}

/// Oscillation characterization: mixed norm of the Peetre-damped oscillation
/// fields plus the matching `J` functional.
pub fn oscillation_norm(f: &GridFunction, spec: &SpaceSpec, cfg: &DiffOscConfig) -> Result<f64> {
    cfg.admissible_for(spec)?;
    let d = f.domain;
    let fields = oscillation_fields(f, spec, cfg)?;
    let g: Vec<Vec<f64>> =
        spec.window.levels().zip(fields).map(|(j, v)| peetre_max(&d, &v, (j as f64).exp2(), cfg.a)).collect();
    let main = mixed_norm_abs(&d, &spec.window, &g, spec.scale.kind(), &spec.space, &spec.w, spec.tau, spec.q)?;
    Ok(main + j_functional(f, spec, cfg.a, uses_all_cubes(spec.scale))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> BoxDomain {
        BoxDomain::new(1, 4.0, 256).unwrap()
    }

    #[test]
    fn difference_matches_binomial_sum() {
        let d = dom();
        let f = GridFunction::from_real_fn(d, |x| (3.0 * x[0]).sin() + x[0] * x[0]);
        let h = 5.0 * d.spacing();
        for m in 1..5u32 {
            let it = iterated_difference(&f, &[h], m).unwrap();
            let mut binom = 1.0;
            let mut direct = vec![C64::new(0.0, 0.0); d.len()];
            for k in 0..=m {
                let sh = shifted(&d, &f.values, [5 * k as i64, 0]);
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                for (a, b) in direct.iter_mut().zip(&sh) {
                    *a += b * (sign * binom);
                }
                binom = binom * (m - k) as f64 / (k + 1) as f64;
            }
            for (a, b) in it.values.iter().zip(&direct) {
                assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn misaligned_increment_is_rejected() {
        let d = dom();
        let f = GridFunction::zeros(d);
        assert!(matches!(iterated_difference(&f, &[0.3 * d.spacing()], 1), Err(Error::Alignment(_))));
    }

    #[test]
    fn best_constant_for_identity() {
        let d = BoxDomain::new(1, 4.0, 4096).unwrap();
        let f = GridFunction::from_real_fn(d, |x| x[0]);
        let t = 0.5;
        let v = oscillation(&f, &[0.0], t, 1, 2.0).unwrap();
        assert!((v - t / 3f64.sqrt()).abs() < 2e-3, "{v}");
        let field = oscillation_field_l2(&f, t, 1).unwrap();
        let mid = d.samples() / 2;
        assert!((field[mid] - v).abs() < 1e-9, "{} {v}", field[mid]);
    }

    #[test]
    fn polynomials_have_zero_oscillation() {
        let d = BoxDomain::new(1, 4.0, 512).unwrap();
        let f = GridFunction::from_real_fn(d, |x| 1.0 - 2.0 * x[0] + 0.5 * x[0] * x[0]);
        for u in [1.0, 2.0, 3.0, f64::INFINITY] {
            let v = oscillation(&f, &[0.3], 0.25, 3, u).unwrap();
            assert!(v < 1e-9, "u = {u}: {v}");
        }
    }
}
