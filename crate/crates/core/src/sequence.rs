//! The six mixed sequence quasi-norms over scales, space and dyadic cubes,
//! geometric mixing of sequences, the tau collapse comparison and the
//! proper-subspace witness.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompositions::{coeff_norm_with, CoefficientField};
use crate::error::{Error, Result};
use crate::grid::{cubes_at_level, BoxDomain, DyadicCube, GridFunction, ScaleWindow};
use crate::norms::Scale;
use crate::spaces::{accumulate, cube_region, finish, FundamentalSpace};
use crate::weights::{derive_weight, DeriveKind, WeightModel};

/// Mixed-norm kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixKind {
    /// `|| (sum_j |w_j g_j|^q)^{1/q} ||_L`.
    LwLq,
    /// `(sum_j ||w_j g_j||_L^q)^{1/q}`.
    LqLw,
    /// `sup_P |P|^{-tau} || (sum_{j >= j_P} |chi_P w_j g_j|^q)^{1/q} ||_L`.
    LwTauLq,
    /// As `LwTauLq` with the inner sum over every level.
    ELwTauLq,
    /// `sup_P |P|^{-tau} (sum_{j >= j_P} ||chi_P w_j g_j||_L^q)^{1/q}`.
    LqLwTau,
    /// `(sum_j sup_P |P|^{-tau q} ||chi_P w_j g_j||_L^q)^{1/q}`.
    LqNLwTau,
}

impl MixKind {
    pub const ALL: [MixKind; 6] =
        [MixKind::LwLq, MixKind::LqLw, MixKind::LwTauLq, MixKind::ELwTauLq, MixKind::LqLwTau, MixKind::LqNLwTau];

    /// Whether the kind carries the cube supremum with `|P|^{-tau}`.
    pub fn has_tau(self) -> bool {
        !matches!(self, MixKind::LwLq | MixKind::LqLw)
    }
}

/// A finite family `{g_j}` over a scale window.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceField {
    pub window: ScaleWindow,
    /// `levels[i]` holds `g_{window.j_min + i}`.
    pub levels: Vec<GridFunction>,
}

impl SequenceField {
    pub fn new(window: ScaleWindow, levels: Vec<GridFunction>) -> Result<Self> {
        if levels.len() != window.len() {
            return Err(Error::Parameter(format!("{} levels for a window of {}", levels.len(), window.len())));
        }
        if let Some(first) = levels.first() {
            if levels.iter().any(|g| g.domain != first.domain) {
                return Err(Error::Parameter("levels live on different grids".into()));
            }
        }
        Ok(Self { window, levels })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.levels[0].domain
    }

    pub fn level(&self, j: i32) -> &GridFunction {
        &self.levels[(j - self.window.j_min) as usize]
    }

    /// Magnitudes `|g_j|` per level.
    pub fn magnitudes(&self) -> Vec<Vec<f64>> {
        self.levels.iter().map(|g| g.abs()).collect()
    }

    /// Writes one binary grid file per level plus `manifest.json`.
    pub fn write_dir(&self, dir: &Path, weight: &str, space: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (i, g) in self.levels.iter().enumerate() {
            let name = format!("level_{}.plab", self.window.j_min + i as i32);
            g.write_binary(std::io::BufWriter::new(std::fs::File::create(dir.join(&name))?))?;
            files.push(name);
        }
        let manifest = Manifest { window: self.window, weight: weight.into(), space: space.into(), files };
        let mut out = std::fs::File::create(dir.join("manifest.json"))?;
        out.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        Ok(())
    }

    /// Reads a directory written by [`SequenceField::write_dir`].
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let mut s = String::new();
        std::fs::File::open(dir.join("manifest.json"))?.read_to_string(&mut s)?;
        let m: Manifest = serde_json::from_str(&s)?;
        let levels = m
            .files
            .iter()
            .map(|f| GridFunction::read_binary(std::io::BufReader::new(std::fs::File::open(dir.join(f))?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(m.window, levels)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    window: ScaleWindow,
    weight: String,
    space: String,
    files: Vec<String>,
}

/// Levels of the cube supremum: from the coarsest cube covering an orthant of
/// the box (or the window minimum, if lower) up to the window maximum.
pub fn cube_levels(d: &BoxDomain, window: &ScaleWindow) -> std::ops::RangeInclusive<i32> {
    d.cover_level().min(window.j_min)..=window.j_max
}

/// Mixed quasi-norm of `{g_j}` (see [`mixed_norm_abs`]).
pub fn mixed_norm(
    g: &SequenceField,
    kind: MixKind,
    space: &FundamentalSpace,
    w: &WeightModel,
    tau: f64,
    q: f64,
) -> Result<f64> {
    mixed_norm_abs(g.domain(), &g.window, &g.magnitudes(), kind, space, w, tau, q)
}

/// Mixed quasi-norm on magnitudes `g[i] = |g_{j_min + i}|`.
#[allow(clippy::too_many_arguments)]
pub fn mixed_norm_abs(
    d: &BoxDomain,
    window: &ScaleWindow,
    g: &[Vec<f64>],
    kind: MixKind,
    space: &FundamentalSpace,
    w: &WeightModel,
    tau: f64,
    q: f64,
) -> Result<f64> {
    if !kind.has_tau() && tau != 0.0 {
        return Err(Error::Parameter(format!("{kind:?} is defined for tau = 0 only, got {tau}")));
    }
    if !(tau >= 0.0) || !(q > 0.0) {
        return Err(Error::Parameter(format!("need tau >= 0 and q > 0, got tau = {tau}, q = {q}")));
    }
    if g.len() != window.len() {
        return Err(Error::Parameter("sequence length does not match the window".into()));
    }
    let weighted: Vec<Vec<f64>> = window
        .levels()
        .zip(g)
        .map(|(j, gj)| {
            if w.is_constant_in_x() {
                let c = w.eval([0.0, 0.0], j);
                gj.iter().map(|x| c * x).collect()
            } else {
                gj.iter().enumerate().map(|(i, x)| w.eval(d.point(i), j) * x).collect()
            }
        })
        .collect();
    let lq_field = |from: usize| -> Vec<f64> {
        let mut acc = vec![0.0f64; d.len()];
        for wj in &weighted[from..] {
            for (a, &t) in acc.iter_mut().zip(wj) {
                accumulate(a, t, q);
            }
        }
        finish(&mut acc, q);
        acc
    };
    let first = |jp: i32| -> usize { (jp.max(window.j_min) - window.j_min) as usize };
    let norm_cube = |v: &[f64], cube: &DyadicCube| space.norm_in(d, v, &cube_region(d, cube));
    let levels = cube_levels(d, window);
    let cube_sup = |jp: i32, f: &(dyn Fn(&DyadicCube) -> Result<f64> + Sync)| -> Result<f64> {
        let scale = (jp as f64 * d.dim() as f64 * tau).exp2();
        let vals: Vec<f64> = cubes_at_level(d, jp).par_iter().map(f).collect::<Result<_>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max) * scale)
    };
    match kind {
        MixKind::LwLq => space.norm_abs(d, &lq_field(0)),
        MixKind::LqLw => {
            let norms: Vec<f64> = weighted.iter().map(|wj| space.norm_abs(d, wj)).collect::<Result<_>>()?;
            Ok(crate::spaces::lq(norms.into_iter(), q))
        }
        MixKind::LwTauLq => {
            let mut best = 0.0f64;
            for jp in levels {
                if first(jp) >= weighted.len() {
                    continue;
                }
                let field = lq_field(first(jp));
                best = best.max(cube_sup(jp, &|c| norm_cube(&field, c))?);
            }
            Ok(best)
        }
        MixKind::ELwTauLq => {
            let field = lq_field(0);
            let mut best = 0.0f64;
            for jp in levels {
                best = best.max(cube_sup(jp, &|c| norm_cube(&field, c))?);
            }
            Ok(best)
        }
        MixKind::LqLwTau => {
            let mut best = 0.0f64;
            for jp in levels {
                let from = first(jp);
                if from >= weighted.len() {
                    continue;
                }
                let v = cube_sup(jp, &|c| {
                    let terms: Vec<f64> = weighted[from..].iter().map(|wj| norm_cube(wj, c)).collect::<Result<_>>()?;
                    Ok(crate::spaces::lq(terms.into_iter(), q))
                })?;
                best = best.max(v);
            }
            Ok(best)
        }
        MixKind::LqNLwTau => {
            let mut sups = Vec::with_capacity(weighted.len());
            for wj in &weighted {
                let mut s = 0.0f64;
                for jp in levels.clone() {
                    s = s.max(cube_sup(jp, &|c| norm_cube(wj, c))?);
                }
                sups.push(s);
            }
            Ok(crate::spaces::lq(sups.into_iter(), q))
        }
    }
}

/// `G_j = sum_{nu <= j} 2^{-(j-nu) D2} g_nu + sum_{nu > j} 2^{-(nu-j) D1} g_nu`
/// over the window (on magnitudes).
pub fn geometric_mix(g: &SequenceField, d1: f64, d2: f64) -> SequenceField {
    let mags = g.magnitudes();
    let mixed = geometric_mix_abs(&mags, d1, d2);
    let dom = *g.domain();
    let levels = mixed.into_iter().map(|v| GridFunction::from_real(dom, &v).expect("finite mix")).collect();
    SequenceField { window: g.window, levels }
}

/// [`geometric_mix`] on magnitude arrays.
pub fn geometric_mix_abs(g: &[Vec<f64>], d1: f64, d2: f64) -> Vec<Vec<f64>> {
    let m = g.len();
    (0..m)
        .map(|j| {
            let mut out = vec![0.0f64; g[0].len()];
            for (nu, gn) in g.iter().enumerate() {
                let c = if nu <= j { (-((j - nu) as f64) * d2).exp2() } else { (-((nu - j) as f64) * d1).exp2() };
                if c == 0.0 {
                    continue;
                }
                for (o, &x) in out.iter_mut().zip(gn) {
                    *o += c * x;
                }
            }
            out
        })
        .collect()
}

/// Estimates `tau~ = sup_P (1/(n j)) log2(1/||chi_P||)` at the finest level
/// of the window (`j >= 1`).
pub fn estimate_tau_tilde(space: &FundamentalSpace, d: &BoxDomain, window: &ScaleWindow) -> Result<f64> {
    let j = window.j_max.max(1);
    let n = d.dim() as f64;
    let cubes = cubes_at_level(d, j);
    let vals: Vec<f64> = cubes
        .par_iter()
        .map(|c| {
            let ind = crate::spaces::cube_indicator(d, c);
            let nrm = space.norm_abs(d, &ind)?;
            Ok((1.0 / nrm).log2() / (n * j as f64))
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Both sides of the tau collapse comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseComparison {
    pub lhs: f64,
    pub rhs: f64,
    pub tau_tilde: f64,
}

/// Compares the `f^{w,tau}_{L,q,a}` sequence norm of `lambda` with the
/// `f^{w~}_{inf,inf,a}` norm `sup_{x,j} w~_j(x) Lambda*_j(x)`, where
/// `w~ = 2^{jn(tau - tau~)} w`.
pub fn tau_collapse_compare(
    lambda: &CoefficientField,
    space: &FundamentalSpace,
    w: &WeightModel,
    tau: f64,
    q: f64,
    a: f64,
) -> Result<CollapseComparison> {
    let d = lambda.domain;
    let tau_tilde = estimate_tau_tilde(space, &d, &lambda.window)?;
    if !(tau > tau_tilde) {
        return Err(Error::Hypothesis(format!("need tau > tau~, got tau = {tau}, tau~ = {tau_tilde}")));
    }
    let lhs = coeff_norm_with(lambda, Scale::F, space, w, tau, q, a)?;
    let wt = derive_weight(w, DeriveKind::TauCollapse { tau, tau_tilde, dim: d.dim() });
    let stars = lambda.peetre_levels(a);
    let mut rhs = 0.0f64;
    for (j, s) in lambda.window.levels().zip(&stars) {
        for (i, &v) in s.iter().enumerate() {
            if v > 0.0 {
                rhs = rhs.max(wt.eval(d.point(i), j) * v);
            }
        }
    }
    Ok(CollapseComparison { lhs, rhs, tau_tilde })
}

/// Besov-type and Nikol'skij-type norms of the proper-subspace witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessNorms {
    pub levels: i32,
    pub b_norm: f64,
    pub n_norm: f64,
}

/// Builds `lambda_Q = ||w_j chi_{R_j}||^{-1} |R_j|^tau` on `R_j = Q_{j,(1,...,1)}`,
/// `j` in `[0, J]`, and returns its `b` and `n` sequence norms.
pub fn proper_subspace_witness(
    d: &BoxDomain,
    space: &FundamentalSpace,
    w: &WeightModel,
    tau: f64,
    q: f64,
    a: f64,
    big_j: i32,
) -> Result<WitnessNorms> {
    let window = ScaleWindow::inhomogeneous(big_j);
    window.validate_for(d)?;
    let mut lambda = CoefficientField::new(*d, window);
    for j in 0..=big_j {
        let k = vec![1i64; d.dim()];
        let r = DyadicCube::new(j, &k);
        let ind = crate::spaces::cube_indicator(d, &r);
        let weighted: Vec<f64> = ind.iter().enumerate().map(|(i, x)| x * w.eval(d.point(i), j)).collect();
        let nrm = space.norm_abs(d, &weighted)?;
        lambda.set(r, crate::C64::new(r.volume().powf(tau) / nrm, 0.0));
    }
    let b_norm = coeff_norm_with(&lambda, Scale::B, space, w, tau, q, a)?;
    let n_norm = coeff_norm_with(&lambda, Scale::N, space, w, tau, q, a)?;
    Ok(WitnessNorms { levels: big_j, b_norm, n_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceKind;

    fn setup() -> (BoxDomain, ScaleWindow, FundamentalSpace) {
        let d = BoxDomain::new(1, 2.0, 128).unwrap();
        (d, ScaleWindow::inhomogeneous(4), FundamentalSpace::new(SpaceKind::Lebesgue { p: 2.0 }, 1).unwrap())
    }

    fn field(d: &BoxDomain, win: &ScaleWindow, seed: u64) -> Vec<Vec<f64>> {
        win.levels()
            .map(|j| {
                (0..d.len())
                    .map(|i| {
                        let x = d.point(i)[0];
                        let t = ((i as u64 * 2654435761 + seed * 97 + j as u64 * 13) % 1000) as f64 / 1000.0;
                        if x > 0.0 { t } else { 0.0 }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_level_reduces_to_space_norm() {
        let (d, win, sp) = setup();
        let w = WeightModel::constant(1.0);
        let mut g = vec![vec![0.0; d.len()]; win.len()];
        g[2] = (0..d.len()).map(|i| (-(d.point(i)[0]).powi(2)).exp()).collect();
        let want = sp.norm_abs(&d, &g[2]).unwrap() * 4.0;
        for q in [0.5, 1.0, 2.0, f64::INFINITY] {
            for kind in [MixKind::LwLq, MixKind::LqLw] {
                let v = mixed_norm_abs(&d, &win, &g, kind, &sp, &w, 0.0, q).unwrap();
                assert!((v - want).abs() <= 1e-12 * want);
            }
        }
    }

    #[test]
    fn tau_zero_orthant_field_matches_untruncated_kinds() {
        let (d, win, sp) = setup();
        let w = WeightModel::constant(0.5);
        let g = field(&d, &win, 3);
        for q in [1.0, 2.0] {
            let b = mixed_norm_abs(&d, &win, &g, MixKind::LqLw, &sp, &w, 0.0, q).unwrap();
            let bt = mixed_norm_abs(&d, &win, &g, MixKind::LqLwTau, &sp, &w, 0.0, q).unwrap();
            let f = mixed_norm_abs(&d, &win, &g, MixKind::LwLq, &sp, &w, 0.0, q).unwrap();
            let ft = mixed_norm_abs(&d, &win, &g, MixKind::LwTauLq, &sp, &w, 0.0, q).unwrap();
            assert!((b - bt).abs() <= 1e-12 * b, "{b} {bt}");
            assert!((f - ft).abs() <= 1e-12 * f, "{f} {ft}");
        }
    }

    #[test]
    fn q_monotonicity_every_kind() {
        let (d, win, sp) = setup();
        let w = WeightModel::constant(1.0);
        let g = field(&d, &win, 5);
        for kind in MixKind::ALL {
            let tau = if kind.has_tau() { 0.25 } else { 0.0 };
            let vals: Vec<f64> = [1.0, 2.0, f64::INFINITY]
                .iter()
                .map(|&q| mixed_norm_abs(&d, &win, &g, kind, &sp, &w, tau, q).unwrap())
                .collect();
            assert!(vals[0] >= vals[1] && vals[1] >= vals[2], "{kind:?} {vals:?}");
        }
    }

    #[test]
    fn tau_on_untruncated_kind_is_rejected() {
        let (d, win, sp) = setup();
        let g = field(&d, &win, 1);
        let e = mixed_norm_abs(&d, &win, &g, MixKind::LqLw, &sp, &WeightModel::constant(0.0), 0.5, 2.0);
        assert!(matches!(e, Err(Error::Parameter(_))));
    }

    #[test]
    fn geometric_mix_single_source_and_limit() {
        let (d, win, _) = setup();
        let mut g = vec![vec![0.0; d.len()]; win.len()];
        g[0] = vec![1.0; d.len()];
        let out = geometric_mix_abs(&g, 3.0, 2.0);
        for (j, o) in out.iter().enumerate() {
            assert!((o[0] - (-2.0 * j as f64).exp2()).abs() < 1e-15);
        }
        let g = field(&d, &win, 9);
        let out = geometric_mix_abs(&g, 2000.0, 2000.0);
        assert_eq!(out, g);
    }
}
