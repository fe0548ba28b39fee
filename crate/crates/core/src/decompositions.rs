//! Coefficient fields and their sequence norms, atomic/molecular analysis
//! with a band-limited Calderon pair, block condition checks and synthesis.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{apply_multiplier, fft_nd, frequency_grid};
use crate::grid::{cubes_at_level, BoxDomain, DyadicCube, GridFunction, ScaleWindow};
use crate::kernels::{band_symbol, eta_hat, peetre_max, BandFamily, LpSystem};
use crate::norms::{space_norm, Scale, SpaceSpec};
use crate::sequence::mixed_norm_abs;
use crate::spaces::FundamentalSpace;
use crate::weights::WeightModel;
use crate::C64;

/// Finitely supported coefficients `lambda_{jk}` indexed by dyadic cubes.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub domain: BoxDomain,
    pub window: ScaleWindow,
    entries: BTreeMap<DyadicCube, C64>,
}

/// One JSONL record of a coefficient field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub j: i32,
    pub k: Vec<i64>,
    pub re: f64,
    pub im: f64,
    /// Wavelet orientation, when the field is one band of a transform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<u8>>,
}

impl CoefficientField {
    pub fn new(domain: BoxDomain, window: ScaleWindow) -> Self {
        Self { domain, window, entries: BTreeMap::new() }
    }

    /// Sets `lambda_Q` (a zero value removes the entry).
    pub fn set(&mut self, q: DyadicCube, v: C64) {
        if v == C64::new(0.0, 0.0) {
            self.entries.remove(&q);
        } else {
            self.entries.insert(q, v);
        }
    }

    pub fn get(&self, q: &DyadicCube) -> C64 {
        self.entries.get(q).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    /// Nonzero entries in cube order.
    pub fn iter(&self) -> impl Iterator<Item = (&DyadicCube, &C64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `c lambda`.
    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::new(self.domain, self.window);
        for (q, v) in &self.entries {
            out.set(*q, v * c);
        }
        out
    }

    /// `|Lambda(x, 2^{-j})| = sum_k |lambda_{jk}| chi_{Q_{jk}}(x)` on the grid, per window level.
    pub fn level_fields(&self) -> Vec<Vec<f64>> {
        let d = &self.domain;
        let mut out = vec![vec![0.0; d.len()]; self.window.len()];
        for (q, v) in &self.entries {
            if !self.window.contains(q.j) {
                continue;
            }
            let field = &mut out[(q.j - self.window.j_min) as usize];
            let r = d.cube_ranges(q);
            let a = v.norm();
            if d.dim() == 1 {
                for i in r[0].clone() {
                    field[i] = a;
                }
            } else {
                for i0 in r[0].clone() {
                    for i1 in r[1].clone() {
                        field[d.flatten([i0, i1])] = a;
                    }
                }
            }
        }
        out
    }

    /// `sup_y |Lambda(y, 2^{-j})| / (1 + 2^j |x - y|)^a` per window level.
    pub fn peetre_levels(&self, a: f64) -> Vec<Vec<f64>> {
        let d = self.domain;
        self.level_fields()
            .into_par_iter()
            .zip(self.window.levels().collect::<Vec<_>>())
            .map(|(v, j)| peetre_max(&d, &v, (j as f64).exp2(), a))
            .collect()
    }

    /// Writes one JSON record per nonzero entry.
    pub fn write_jsonl<W: Write>(&self, mut w: W, orientation: Option<[u8; 2]>) -> Result<()> {
        let n = self.domain.dim();
        for (q, v) in &self.entries {
            let rec = CoefficientRecord {
                j: q.j,
                k: q.k[..n].to_vec(),
                re: v.re,
                im: v.im,
                c: orientation.map(|o| o[..n].to_vec()),
            };
            serde_json::to_writer(&mut w, &rec)?;
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads records written by [`CoefficientField::write_jsonl`], grouped by orientation tag.
    pub fn read_jsonl<R: BufRead>(r: R, domain: BoxDomain, window: ScaleWindow) -> Result<Vec<(Option<Vec<u8>>, Self)>> {
        let mut groups: Vec<(Option<Vec<u8>>, Self)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CoefficientRecord = serde_json::from_str(&line)?;
            if rec.k.len() != domain.dim() {
                return Err(Error::Format(format!("record has {} indices, expected {}", rec.k.len(), domain.dim())));
            }
            let pos = match groups.iter().position(|(c, _)| *c == rec.c) {
                Some(p) => p,
                None => {
                    groups.push((rec.c.clone(), Self::new(domain, window)));
                    groups.len() - 1
                }
            };
            groups[pos].1.set(DyadicCube::new(rec.j, &rec.k), C64::new(rec.re, rec.im));
        }
        Ok(groups)
    }
}

/// Sequence quasi-norm of `lambda` with the scale of `spec`.
pub fn coeff_norm(lambda: &CoefficientField, spec: &SpaceSpec) -> Result<f64> {
    coeff_norm_with(lambda, spec.scale, &spec.space, &spec.w, spec.tau, spec.q, spec.a)
}

/// Sequence quasi-norm with explicit parameters: the Peetre-type supremum of
/// the level fields followed by the mixed norm of the scale.
pub fn coeff_norm_with(
    lambda: &CoefficientField,
    scale: Scale,
    space: &FundamentalSpace,
    w: &WeightModel,
    tau: f64,
    q: f64,
    a: f64,
) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Parameter(format!("a = {a} must be positive")));
    }
    if lambda.is_empty() {
        return Ok(0.0);
    }
    let g = lambda.peetre_levels(a);
    mixed_norm_abs(&lambda.domain, &lambda.window, &g, scale.kind(), space, w, tau, q)
}

/// Band-limited Calderon pair: `Psi^ = sqrt(eta^)`, `psi^ = sqrt(phi^)`, so
/// that `Psi^2 + sum_{j>=1} psi_j^2 = 1`. The band kernel vanishes near the
/// origin in frequency, hence has every vanishing moment.
#[derive(Debug, Clone, Copy)]
pub struct CalderonPair {
    pub domain: BoxDomain,
}

impl CalderonPair {
    fn radial(j: i32, r: f64) -> f64 {
        if j == 0 {
            eta_hat(r).sqrt()
        } else {
            band_symbol(r * (-j as f64).exp2()).max(0.0).sqrt()
        }
    }
}

impl BandFamily for CalderonPair {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn multiplier(&self, j: i32) -> Vec<C64> {
        frequency_grid(&self.domain, |xi| C64::new(Self::radial(j, (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()), 0.0))
    }
}

/// Atom or molecule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Atom,
    Molecule,
}

/// Smoothness `K`, moment order `L` (`-1`: none) and decay `N` of blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub k: u32,
    pub l: i32,
    pub n: f64,
}

impl BlockSpec {
    /// Structural validity: `L >= -1` and, for molecules, `N > L + n`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.l < -1 {
            return Err(Error::Parameter(format!("moment order L = {} must be >= -1", self.l)));
        }
        if self.kind == BlockKind::Molecule && !(self.n > self.l as f64 + dim as f64) {
            return Err(Error::Parameter(format!("molecule decay N = {} must exceed L + n = {}", self.n, self.l as f64 + dim as f64)));
        }
        Ok(())
    }

    /// Checks the synthesis hypotheses against a space: the general set, or
    /// for `L = -1` and a star weight the regular-case set.
    pub fn admissible_for(&self, spec: &SpaceSpec) -> Result<()> {
        let n = spec.space.dim as f64;
        self.validate(spec.space.dim)?;
        let c = spec.w.class;
        let p = spec.space.declared;
        let (k, l) = (self.k as f64, self.l as f64);
        let tau = spec.tau;
        let mut bad = Vec::new();
        let molecule = self.kind == BlockKind::Molecule;
        if self.l == -1 {
            if !c.star {
                bad.push("blocks without moments need a star-class weight".to_string());
            }
            let rhs = c.alpha3 + p.delta + n + p.gamma - n * tau - c.alpha1;
            if !(0.0 > rhs) {
                bad.push(format!("0 > a3 + delta + n + gamma - n tau - a1 fails (rhs = {rhs})"));
            }
            if !(c.alpha1 > n * tau) {
                bad.push(format!("a1 = {} must exceed n tau = {}", c.alpha1, n * tau));
            }
        } else {
            let rhs = c.alpha3 + p.delta + n - 1.0 + p.gamma - n * tau + c.alpha1;
            if !(l > rhs) {
                bad.push(format!("L = {l} must exceed a3 + delta + n - 1 + gamma - n tau + a1 = {rhs}"));
            }
            if !(l + 1.0 > c.alpha1) {
                bad.push(format!("L + 1 = {} must exceed a1 = {}", l + 1.0, c.alpha1));
            }
        }
        if molecule {
            let rhs = l + c.alpha3 + p.delta + 2.0 * n;
            if !(self.n > rhs) {
                bad.push(format!("N = {} must exceed L + a3 + delta + 2n = {rhs}", self.n));
            }
        }
        if !(k + 1.0 > c.alpha2 + n * tau) {
            bad.push(format!("K + 1 = {} must exceed a2 + n tau = {}", k + 1.0, c.alpha2 + n * tau));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Hypothesis(bad.join("; ")))
        }
    }

    /// Smallest admissible orders for `spec` (general case).
    pub fn minimal_for(spec: &SpaceSpec, kind: BlockKind) -> Self {
        let n = spec.space.dim as f64;
        let c = spec.w.class;
        let p = spec.space.declared;
        let rhs = (c.alpha3 + p.delta + n - 1.0 + p.gamma - n * spec.tau + c.alpha1).max(c.alpha1 - 1.0);
        let l = (rhs.floor() as i32 + 1).max(0);
        let k = (c.alpha2 + n * spec.tau).floor().max(0.0) as u32;
        let big_n = l as f64 + c.alpha3 + p.delta + 2.0 * n + 1.0;
        Self { kind, k, l, n: big_n }
    }
}

/// Result of a block check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub kind: BlockKind,
    /// Atoms: every sample outside `3Q` is exactly zero.
    pub support_ok: bool,
    /// `(alpha, ||d^alpha b||_inf |Q|^{|alpha|/n})` for `|alpha| <= K`.
    pub size_constants: Vec<([u32; 2], f64)>,
    /// Molecules: smallest `C` with `|d^alpha b(x)| <= C (1 + |x - c_Q|/l(Q))^{-N}`, over `|alpha| <= K`.
    pub decay_constant: Option<f64>,
    /// Largest relative moment `|sum b (x - c_Q)^beta| / sum |b| |x - c_Q|^beta`,
    /// `|beta| <= L` (periodic monomials for molecules).
    pub worst_moment: f64,
    /// Whether moments were required (`l(Q) < 1` and `L >= 0`).
    pub moments_required: bool,
    pub passed: bool,
}

impl BlockReport {
    /// Largest size constant (the atom normalization slack).
    pub fn normalization(&self) -> f64 {
        self.size_constants.iter().map(|c| c.1).fold(0.0, f64::max)
    }
}

/// Moment tolerance of block checks.
pub const MOMENT_TOL: f64 = 1e-8;

fn multi_indices(dim: usize, max: u32) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for t in 0..=max {
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

/// Minimal-image displacement `x - c` on the periodic box.
fn displacement(d: &BoxDomain, x: f64, c: f64) -> f64 {
    let p = 2.0 * d.half_width();
    let mut t = (x - c) % p;
    if t >= p / 2.0 {
        t -= p;
    } else if t < -p / 2.0 {
        t += p;
    }
    t
}

/// `d^alpha b` by spectral differentiation.
pub fn spectral_derivative(b: &GridFunction, alpha: [u32; 2]) -> GridFunction {
    if alpha == [0, 0] {
        return b.clone();
    }
    let d = &b.domain;
    let m = frequency_grid(d, |xi| {
        let mut z = C64::new(1.0, 0.0);
        for (axis, &p) in alpha.iter().enumerate().take(d.dim()) {
            z *= C64::new(0.0, xi[axis]).powu(p);
        }
        z
    });
    GridFunction { domain: *d, values: apply_multiplier(d, &b.values, &m) }
}

/// Checks the atom/molecule conditions of `b` relative to `q`.
pub fn check_block(b: &GridFunction, q: &DyadicCube, spec: &BlockSpec) -> BlockReport {
    let d = &b.domain;
    let dim = d.dim();
    let geo = q.geometry();
    let side = geo.side;
    let rel = |idx: usize| -> [f64; 2] {
        let x = d.point(idx);
        let mut r = [0.0; 2];
        for a in 0..dim {
            r[a] = displacement(d, x[a], geo.center[a]) / side;
        }
        r
    };
    // Molecules are not compactly supported, so on the periodic box their
    // moments are taken against the periodic monomials built from
    // `(P/2pi) sin(2pi (x - c)/P)`, which agree with `x - c` to second order
    // near the cube and are orthogonal to every block whose spectrum avoids
    // the lowest modes.
    let period = 2.0 * d.half_width();
    let periodic_rel = |idx: usize| -> [f64; 2] {
        let x = d.point(idx);
        let mut r = [0.0; 2];
        for a in 0..dim {
            let t = std::f64::consts::TAU * (x[a] - geo.center[a]) / period;
            r[a] = period / std::f64::consts::TAU * t.sin() / side;
        }
        r
    };
    let support_ok = if spec.kind == BlockKind::Atom {
        (0..d.len()).all(|i| {
            let r = rel(i);
            let inside = r[..dim].iter().all(|t| t.abs() <= 1.5 + 1e-12);
            inside || b.values[i] == C64::new(0.0, 0.0)
        })
    } else {
        true
    };
    let mut size_constants = Vec::new();
    let mut decay = 0.0f64;
    for alpha in multi_indices(dim, spec.k) {
        let db = spectral_derivative(b, alpha);
        let order = (alpha[0] + alpha[1]) as i32;
        let sup = db.max_abs();
        size_constants.push((alpha, sup * side.powi(order)));
        if spec.kind == BlockKind::Molecule {
            for (i, v) in db.values.iter().enumerate() {
                let r = rel(i);
                let dist = (r[0] * r[0] + r[1] * r[1]).sqrt();
                decay = decay.max(v.norm() * side.powi(order) * (1.0 + dist).powf(spec.n));
            }
        }
    }
    let moments_required = side < 1.0 && spec.l >= 0;
    let mut worst_moment = 0.0f64;
    if moments_required {
        for beta in multi_indices(dim, spec.l as u32) {
            let mut num = C64::new(0.0, 0.0);
            let mut den = 0.0f64;
            for (i, v) in b.values.iter().enumerate() {
                let r = if spec.kind == BlockKind::Molecule { periodic_rel(i) } else { rel(i) };
                let mono = r[0].powi(beta[0] as i32) * if dim == 2 { r[1].powi(beta[1] as i32) } else { 1.0 };
                num += v * mono;
                den += v.norm() * mono.abs();
            }
            if den > 0.0 {
                worst_moment = worst_moment.max(num.norm() / den);
            }
        }
    }
    let finite = size_constants.iter().all(|c| c.1.is_finite()) && decay.is_finite();
    let passed = support_ok && finite && (!moments_required || worst_moment <= MOMENT_TOL);
    BlockReport {
        kind: spec.kind,
        support_ok,
        size_constants,
        decay_constant: (spec.kind == BlockKind::Molecule).then_some(decay),
        worst_moment,
        moments_required,
        passed,
    }
}

/// Coefficients and blocks of the analysis decomposition.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub lambda: CoefficientField,
    pub blocks: BTreeMap<DyadicCube, GridFunction>,
    /// Moment order requested for the blocks.
    pub moment_order: i32,
}

/// Relative L2 tolerance of the spectral-containment check in [`analyze`].
pub const SPECTRUM_TOL: f64 = 1e-9;

/// Decomposes `f` as `sum lambda_{jk} A_{jk}` with
/// `lambda_{jk} = 2^{jn} int_{Q_{jk}} |psi_j * f|` and
/// `A_{jk} = psi_j * (chi_{Q_{jk}} psi_j * f) / lambda_{jk}` over the window of `spec`.
pub fn analyze(f: &GridFunction, spec: &SpaceSpec, moment_order: i32) -> Result<Analysis> {
    let d = f.domain;
    let window = spec.window;
    window.validate_for(&d)?;
    if window.j_min != 0 {
        return Err(Error::Parameter("analysis needs an inhomogeneous window starting at level 0".into()));
    }
    if moment_order < -1 {
        return Err(Error::Parameter(format!("moment order {moment_order} must be >= -1")));
    }
    // The pair reproduces exactly the part of the spectrum inside |xi| <= 2^J.
    let mut spec_f = f.values.clone();
    fft_nd(&mut spec_f, d.dim(), d.samples(), false);
    let cut = (window.j_max as f64).exp2();
    let outside = frequency_grid(&d, |xi| C64::new(1.0 - eta_hat((xi[0] * xi[0] + xi[1] * xi[1]).sqrt() / cut), 0.0));
    let total: f64 = spec_f.iter().map(|v| v.norm_sqr()).sum();
    let tail: f64 = spec_f.iter().zip(&outside).map(|(v, m)| (v * m).norm_sqr()).sum();
    if total > 0.0 && (tail / total).sqrt() > SPECTRUM_TOL {
        return Err(Error::Resolution(format!(
            "spectrum of f is not contained in |xi| <= 2^{} (relative tail {:.2e})",
            window.j_max,
            (tail / total).sqrt()
        )));
    }
    let pair = CalderonPair { domain: d };
    let n = d.dim() as i32;
    let hn = d.cell_volume();
    let mut lambda = CoefficientField::new(d, window);
    let mut blocks = BTreeMap::new();
    for j in window.levels() {
        let m = pair.multiplier(j);
        let g = apply_multiplier(&d, &f.values, &m);
        let scale = (j as f64 * n as f64).exp2();
        let cubes = cubes_at_level(&d, j);
        let built: Vec<Option<(DyadicCube, C64, GridFunction)>> = cubes
            .par_iter()
            .map(|q| {
                let r = d.cube_ranges(q);
                let mut local = vec![C64::new(0.0, 0.0); d.len()];
                let mut mass = 0.0;
                let mut visit = |idx: usize| {
                    local[idx] = g[idx];
                    mass += g[idx].norm();
                };
                if d.dim() == 1 {
                    r[0].clone().for_each(&mut visit);
                } else {
                    for i0 in r[0].clone() {
                        for i1 in r[1].clone() {
                            visit(d.flatten([i0, i1]));
                        }
                    }
                }
                let lam = scale * mass * hn;
                if lam == 0.0 {
                    return None;
                }
                let vals: Vec<C64> = apply_multiplier(&d, &local, &m).into_iter().map(|v| v / lam).collect();
                Some((*q, C64::new(lam, 0.0), GridFunction { domain: d, values: vals }))
            })
            .collect();
        for (q, lam, b) in built.into_iter().flatten() {
            lambda.set(q, lam);
            blocks.insert(q, b);
        }
    }
    Ok(Analysis { lambda, blocks, moment_order })
}

/// Output of [`synthesize`].
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub f: GridFunction,
    pub space_norm: f64,
    pub coeff_norm: f64,
    /// `space_norm / coeff_norm`.
    pub norm_ratio: f64,
    /// Worst block report (largest normalization) among the checked blocks.
    pub worst_block: Option<BlockReport>,
    /// Largest relative moment over the blocks that need moments.
    pub worst_moment: f64,
}

/// `f = sum lambda_{jk} A_{jk}` after checking the block specification and
/// every block, plus the ratio of the space norm of `f` to `||lambda||`.
pub fn synthesize(
    lambda: &CoefficientField,
    blocks: &BTreeMap<DyadicCube, GridFunction>,
    block_spec: &BlockSpec,
    spec: &SpaceSpec,
    sys: &LpSystem,
) -> Result<Synthesis> {
    block_spec.admissible_for(spec)?;
    let d = lambda.domain;
    let mut acc = vec![C64::new(0.0, 0.0); d.len()];
    let mut checks = Vec::with_capacity(lambda.len());
    for (q, v) in lambda.iter() {
        let b = blocks.get(q).ok_or_else(|| Error::Parameter(format!("no block for cube {q:?}")))?;
        if b.domain != d {
            return Err(Error::Parameter("block sampled on a different box".into()));
        }
        checks.push((q, b));
        for (a, x) in acc.iter_mut().zip(&b.values) {
            *a += v * x;
        }
    }
    let reports: Vec<BlockReport> = checks.par_iter().map(|(q, b)| check_block(b, q, block_spec)).collect();
    if let Some((i, r)) = reports.iter().enumerate().find(|(_, r)| !r.passed) {
        return Err(Error::Hypothesis(format!(
            "block at {:?} fails the block conditions (support {}, worst moment {:.2e})",
            checks[i].0, r.support_ok, r.worst_moment
        )));
    }
    let worst_moment = reports.iter().filter(|r| r.moments_required).map(|r| r.worst_moment).fold(0.0, f64::max);
    let worst_block = reports.into_iter().max_by(|a, b| a.normalization().total_cmp(&b.normalization()));
    let f = GridFunction::new(d, acc)?;
    let sn = space_norm(&f, spec, sys)?;
    let cn = coeff_norm(lambda, spec)?;
    let norm_ratio = if cn > 0.0 { sn / cn } else { 0.0 };
    Ok(Synthesis { f, space_norm: sn, coeff_norm: cn, norm_ratio, worst_block, worst_moment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceKind;

    fn spec(d: &BoxDomain, j: i32) -> SpaceSpec {
        let sp = FundamentalSpace::new(SpaceKind::Lebesgue { p: 2.0 }, d.dim()).unwrap();
        SpaceSpec::new(Scale::B, sp, WeightModel::constant(1.0), 0.0, 2.0, ScaleWindow::inhomogeneous(j))
    }

    #[test]
    fn pair_partition_of_unity() {
        let d = BoxDomain::new(1, 4.0, 256).unwrap();
        let pair = CalderonPair { domain: d };
        let mut acc = vec![0.0; d.len()];
        for j in 0..=4 {
            for (a, m) in acc.iter_mut().zip(pair.multiplier(j)) {
                *a += m.re * m.re;
            }
        }
        for (a, xi) in acc.iter().zip(crate::fft::axis_frequencies(&d)) {
            if xi.abs() <= 16.0 {
                assert!((a - 1.0).abs() < 1e-12, "{xi}: {a}");
            }
        }
    }

    #[test]
    fn analysis_reconstructs_band_limited_input() {
        let d = BoxDomain::new(1, 8.0, 1024).unwrap();
        let f = GridFunction::from_real_fn(d, |x| (-x[0] * x[0]).exp());
        let an = analyze(&f, &spec(&d, 5), 2).unwrap();
        let mut acc = vec![C64::new(0.0, 0.0); d.len()];
        for (q, v) in an.lambda.iter() {
            assert!(v.re >= 0.0 && v.im == 0.0);
            for (a, b) in acc.iter_mut().zip(&an.blocks[q].values) {
                *a += v * b;
            }
        }
        let err = GridFunction::new(d, acc).unwrap().sub(&f).l2_norm() / f.l2_norm();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn spectrum_outside_window_is_rejected() {
        let d = BoxDomain::new(1, 4.0, 512).unwrap();
        let f = GridFunction::from_real_fn(d, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 });
        assert!(matches!(analyze(&f, &spec(&d, 3), 1), Err(Error::Resolution(_))));
    }

    #[test]
    fn jsonl_round_trip() {
        let d = BoxDomain::new(1, 4.0, 64).unwrap();
        let mut c = CoefficientField::new(d, ScaleWindow::inhomogeneous(2));
        c.set(DyadicCube::new(1, &[3]), C64::new(1.5, -0.25));
        c.set(DyadicCube::new(0, &[-2]), C64::new(-2.0, 0.0));
        let mut buf = Vec::new();
        c.write_jsonl(&mut buf, None).unwrap();
        let back = CoefficientField::read_jsonl(&buf[..], d, c.window).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].1, c);
    }
}
