//! The four space quasi-norms (Besov-type `B`, Nikol'skij-type `N`,
//! Triebel-Lizorkin-type `F`, `E`), the equivalence harness over every
//! characterization, embedding checks and the decay witness for `f_m`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::battery::{fm_default_c, fm_periodized, BatteryFunction};
use crate::diffosc::{difference_norm, oscillation_norm, DiffOscConfig};
use crate::error::{Error, Result};
use crate::grid::{BoxDomain, GridFunction, ScaleWindow};
use crate::kernels::{
    build_alt_system, build_local_mean_system, build_lp_system, family_convolve, family_peetre, AltSystem,
    BandFamily, LpSystem,
};
use crate::sequence::{mixed_norm_abs, MixKind};
use crate::spaces::{verify_peetre_compat, FundamentalSpace, SpaceKind};
use crate::stats;
use crate::wavelets::{build_filters, first_admissible, forward_transform, full_depth, wavelet_seq_norm, FilterBank64, WaveletPreset};
use crate::weights::WeightModel;

/// Scale letter of a space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scale {
    B,
    N,
    F,
    E,
}

impl Scale {
    pub const ALL: [Scale; 4] = [Scale::B, Scale::N, Scale::F, Scale::E];

    /// Mixed-norm kind used by the scale.
    pub fn kind(self) -> MixKind {
        match self {
            Scale::B => MixKind::LqLwTau,
            Scale::N => MixKind::LqNLwTau,
            Scale::F => MixKind::LwTauLq,
            Scale::E => MixKind::ELwTauLq,
        }
    }
}

/// `q` in `(0, inf]`, serialized as a number or the string `"inf"`.
pub mod q_format {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
        if q.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*q)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Q {
            Num(f64),
            Str(String),
        }
        match Q::deserialize(d)? {
            Q::Num(v) => Ok(v),
            Q::Str(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
            Q::Str(s) => Err(de::Error::custom(format!("invalid q {s:?}"))),
        }
    }
}

/// Full specification of one space `A^{w,tau}_{L,q,a}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub scale: Scale,
    pub space: FundamentalSpace,
    pub w: WeightModel,
    pub tau: f64,
    #[serde(with = "q_format")]
    pub q: f64,
    pub a: f64,
    pub window: ScaleWindow,
    /// Whether `a > N0 + alpha3` is enforced.
    pub paper_admissible: bool,
}

/// Default Peetre decay `N0 + alpha3 + n + 1`.
pub fn default_a(space: &FundamentalSpace, w: &WeightModel) -> f64 {
    space.declared.n0 + w.class.alpha3 + space.dim as f64 + 1.0
}

impl SpaceSpec {
    /// Admissible specification (with the `a` bound enforced) and the default `a`.
    pub fn new(scale: Scale, space: FundamentalSpace, w: WeightModel, tau: f64, q: f64, window: ScaleWindow) -> Self {
        let a = default_a(&space, &w);
        Self { scale, space, w, tau, q, a, window, paper_admissible: true }
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_scale(mut self, scale: Scale) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_window(mut self, window: ScaleWindow) -> Self {
        self.window = window;
        self
    }

    pub fn with_weight(mut self, w: WeightModel) -> Self {
        self.w = w;
        self
    }

    /// Drops the `a > N0 + alpha3` requirement.
    pub fn relaxed(mut self) -> Self {
        self.paper_admissible = false;
        self
    }

    /// Checks parameter ranges, the window against the box and, when flagged
    /// admissible, `a > N0 + alpha3`.
    pub fn validate(&self, d: &BoxDomain) -> Result<()> {
        if self.space.dim != d.dim() {
            return Err(Error::Parameter(format!("space is {}-dimensional, box is {}-dimensional", self.space.dim, d.dim())));
        }
        self.window.validate_for(d)?;
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Parameter(format!("tau = {} must be a finite nonnegative number", self.tau)));
        }
        if !(self.q > 0.0) {
            return Err(Error::Parameter(format!("q = {} must lie in (0, inf]", self.q)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::Parameter(format!("a = {} must be positive", self.a)));
        }
        let bound = self.space.declared.n0 + self.w.class.alpha3;
        if self.paper_admissible && !(self.a > bound) {
            return Err(Error::Hypothesis(format!(
                "(3.27) violated: a = {} must exceed N0 + alpha3 = {bound}",
                self.a
            )));
        }
        Ok(())
    }
}

/// Applies the mixed norm of `spec` to Peetre-type level fields.
pub fn norm_of_levels(d: &BoxDomain, spec: &SpaceSpec, g: &[Vec<f64>]) -> Result<f64> {
    mixed_norm_abs(d, &spec.window, g, spec.scale.kind(), &spec.space, &spec.w, spec.tau, spec.q)
}

/// `(phi_j^* f)_a` for every level of the spec window.
pub fn peetre_levels<B: BandFamily + ?Sized>(f: &GridFunction, fam: &B, spec: &SpaceSpec) -> Vec<Vec<f64>> {
    let levels: Vec<i32> = spec.window.levels().collect();
    levels.par_iter().map(|&j| family_peetre(f, fam, j, spec.a)).collect()
}

fn check_system(f: &GridFunction, spec: &SpaceSpec, sys: &LpSystem) -> Result<()> {
    spec.validate(&f.domain)?;
    if sys.domain != f.domain {
        return Err(Error::Parameter("LP system and function live on different boxes".into()));
    }
    if spec.window.j_min < sys.window.j_min || spec.window.j_max > sys.window.j_max {
        return Err(Error::Parameter("LP system window does not cover the spec window".into()));
    }
    if (spec.window.j_min >= 0) != (sys.window.j_min >= 0) {
        return Err(Error::Parameter("spec and LP system disagree on (in)homogeneity".into()));
    }
    Ok(())
}

/// `||f||_{A^{w,tau}_{L,q,a}}`: Peetre maximal functions of the LP system
/// followed by the mixed norm of the scale.
pub fn space_norm(f: &GridFunction, spec: &SpaceSpec, sys: &LpSystem) -> Result<f64> {
    check_system(f, spec, sys)?;
    norm_of_levels(&f.domain, spec, &peetre_levels(f, sys, spec))
}

/// Space norm with the plain band convolutions `|phi_j * f|` in place of the
/// Peetre maximal functions.
pub fn plain_norm(f: &GridFunction, spec: &SpaceSpec, sys: &LpSystem) -> Result<f64> {
    check_system(f, spec, sys)?;
    let levels: Vec<i32> = spec.window.levels().collect();
    let g: Vec<Vec<f64>> = levels.par_iter().map(|&j| family_convolve(f, sys, j).abs()).collect();
    norm_of_levels(&f.domain, spec, &g)
}

/// Equivalent characterizations of the space norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characterization {
    Default,
    AltSystem,
    LocalMeans,
    NoPeetre,
    Wavelet,
    Difference,
    Oscillation,
}

impl Characterization {
    pub const ALL: [Characterization; 7] = [
        Characterization::Default,
        Characterization::AltSystem,
        Characterization::LocalMeans,
        Characterization::NoPeetre,
        Characterization::Wavelet,
        Characterization::Difference,
        Characterization::Oscillation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Characterization::Default => "default",
            Characterization::AltSystem => "alt_system",
            Characterization::LocalMeans => "local_means",
            Characterization::NoPeetre => "no_peetre",
            Characterization::Wavelet => "wavelet",
            Characterization::Difference => "difference",
            Characterization::Oscillation => "oscillation",
        }
    }
}

/// Orders and auxiliary parameters of the characterizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivParams {
    /// Moment order `L` of the alternative system.
    pub alt_moment_order: i32,
    /// Local-means order `l0` (`psi = Delta^{l0+1} Psi`).
    pub local_means_l0: i32,
    pub wavelet: WaveletPreset,
    pub diff: DiffOscConfig,
    /// Exponent `r` and decay `R` of the maximal-compatibility check.
    pub compat_r: f64,
    pub compat_big_r: f64,
    /// Largest accepted compatibility ratio.
    pub compat_cap: f64,
    pub seed: u64,
}

/// `a1 v (a + n tau + a2)`.
pub fn moment_threshold(spec: &SpaceSpec) -> f64 {
    let c = spec.w.class;
    c.alpha1.max(spec.a + spec.space.dim as f64 * spec.tau + c.alpha2)
}

impl EquivParams {
    /// Smallest admissible orders for `spec`; the wavelet preset is the first
    /// admissible one (or the largest preset, which then reports the failure).
    pub fn for_spec(spec: &SpaceSpec) -> Self {
        let need = moment_threshold(spec);
        let alt = (need.floor() as i32).max(0);
        let l0 = (((need - 1.0) / 2.0).floor() as i32 + 1).max(1);
        let m = need.floor() as u32 + 1;
        let theta = spec.space.declared.theta;
        Self {
            alt_moment_order: alt,
            local_means_l0: l0,
            wavelet: first_admissible(spec).unwrap_or(WaveletPreset { primal: 4, dual: 8 }),
            diff: DiffOscConfig { m, u: 2.0, c_tilde: 1.0, a: spec.a },
            compat_r: 0.5 * theta,
            compat_big_r: spec.space.dim as f64 + 2.0,
            compat_cap: 20.0,
            seed: 17,
        }
    }
}

fn violated_moments(name: &str, lhs: f64, spec: &SpaceSpec) -> Option<Error> {
    let c = spec.w.class;
    let need = moment_threshold(spec);
    (lhs <= need).then(|| {
        Error::Hypothesis(format!(
            "{name} ≤ α1 ∨ (a+nτ+α2) ({name} = {lhs}, α1 = {}, a+nτ+α2 = {})",
            c.alpha1,
            spec.a + spec.space.dim as f64 * spec.tau + c.alpha2
        ))
    })
}

/// Moment hypothesis of the alternative system: `L + 1 > a1 v (a + n tau + a2)`.
pub fn check_alt_order(spec: &SpaceSpec, l: i32) -> Result<()> {
    match violated_moments("L+1", l as f64 + 1.0, spec) {
        Some(Error::Hypothesis(m)) => Err(Error::Hypothesis(format!("(3.5) violated: {m}"))),
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Moment hypothesis of local means: `2 l0 + 1 > a1 v (a + n tau + a2)`, `l0 >= 1`.
pub fn check_local_means_order(spec: &SpaceSpec, l0: i32) -> Result<()> {
    if l0 < 1 {
        return Err(Error::Parameter(format!("l0 = {l0} must be a positive integer")));
    }
    match violated_moments("2ℓ0+1", 2.0 * l0 as f64 + 1.0, spec) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

enum Engine {
    Default,
    Alt(AltSystem),
    NoPeetre,
    Wavelet(FilterBank64, usize),
    Difference(DiffOscConfig),
    Oscillation(DiffOscConfig),
}

fn prepare(
    ch: Characterization,
    battery: &[BatteryFunction],
    spec: &SpaceSpec,
    params: &EquivParams,
    d: &BoxDomain,
) -> Result<Engine> {
    Ok(match ch {
        Characterization::Default => Engine::Default,
        Characterization::AltSystem => {
            check_alt_order(spec, params.alt_moment_order)?;
            Engine::Alt(build_alt_system(d, params.alt_moment_order)?)
        }
        Characterization::LocalMeans => {
            check_local_means_order(spec, params.local_means_l0)?;
            Engine::Alt(build_local_mean_system(d, params.local_means_l0)?)
        }
        Characterization::NoPeetre => {
            if matches!(spec.space.kind, SpaceKind::PathologicalSplit) {
                return Err(Error::Hypothesis("the maximal operator is unbounded on this space".into()));
            }
            let fs: Vec<GridFunction> = battery.iter().map(|b| b.f.clone()).collect();
            let rep = verify_peetre_compat(
                &spec.space,
                d,
                &spec.window,
                params.compat_r,
                params.compat_big_r,
                &spec.w,
                spec.q,
                &fs,
                params.seed,
                params.compat_cap,
            )?;
            if !rep.passed {
                return Err(Error::Hypothesis(format!(
                    "maximal compatibility fails: worst ratios {:.3} (scalar), {:.3} (vector) exceed {}",
                    rep.worst_scalar, rep.worst_vector, rep.cap
                )));
            }
            Engine::NoPeetre
        }
        Characterization::Wavelet => {
            let bank = build_filters(params.wavelet, Some(spec))?;
            Engine::Wavelet(bank, full_depth(d)?)
        }
        Characterization::Difference => {
            params.diff.admissible_for(spec)?;
            Engine::Difference(params.diff)
        }
        Characterization::Oscillation => {
            params.diff.admissible_for(spec)?;
            Engine::Oscillation(params.diff)
        }
    })
}

impl Engine {
    fn norm(&self, f: &GridFunction, spec: &SpaceSpec, sys: &LpSystem) -> Result<f64> {
        match self {
            Engine::Default => space_norm(f, spec, sys),
            Engine::Alt(alt) => {
                spec.validate(&f.domain)?;
                norm_of_levels(&f.domain, spec, &peetre_levels(f, alt, spec))
            }
            Engine::NoPeetre => plain_norm(f, spec, sys),
            Engine::Wavelet(bank, depth) => wavelet_seq_norm(&forward_transform(f, bank, *depth)?, spec),
            Engine::Difference(cfg) => difference_norm(f, spec, cfg),
            Engine::Oscillation(cfg) => oscillation_norm(f, spec, cfg),
        }
    }
}

/// One (function, characterization) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivRow {
    pub function_id: String,
    pub characterization: Characterization,
    pub value: Option<f64>,
    /// `value / default value`.
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

/// Ratio spread of one characterization over the battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadRow {
    pub characterization: Characterization,
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    /// `max ratio / min ratio`.
    pub spread: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivReport {
    pub rows: Vec<EquivRow>,
    pub spreads: Vec<SpreadRow>,
}

impl EquivReport {
    pub fn spread(&self, ch: Characterization) -> Option<f64> {
        self.spreads.iter().find(|s| s.characterization == ch).and_then(|s| s.spread)
    }
}

/// Evaluates each characterization on each battery function and reports the
/// ratios to the default norm. Hypothesis failures become per-row errors.
pub fn equivalence_report(
    battery: &[BatteryFunction],
    spec: &SpaceSpec,
    sys: &LpSystem,
    chars: &[Characterization],
    params: &EquivParams,
) -> Result<EquivReport> {
    let d = sys.domain;
    spec.validate(&d)?;
    let defaults: Vec<Result<f64>> = battery.par_iter().map(|b| space_norm(&b.f, spec, sys)).collect();
    let engines: Vec<Result<Engine>> = chars.iter().map(|&c| prepare(c, battery, spec, params, &d)).collect();
    let cells: Vec<(usize, usize)> = (0..battery.len()).flat_map(|i| (0..chars.len()).map(move |c| (i, c))).collect();
    let values: Vec<std::result::Result<f64, String>> = cells
        .par_iter()
        .map(|&(i, c)| match (&engines[c], &defaults[i]) {
            (Err(e), _) => Err(e.to_string()),
            (_, Err(e)) => Err(e.to_string()),
            (Ok(Engine::Default), Ok(v)) => Ok(*v),
            (Ok(eng), Ok(_)) => eng.norm(&battery[i].f, spec, sys).map_err(|e| e.to_string()),
        })
        .collect();
    let mut rows = Vec::with_capacity(cells.len());
    for (&(i, c), v) in cells.iter().zip(values) {
        let def = defaults[i].as_ref().ok().copied();
        let (value, ratio, error) = match v {
            Ok(x) => {
                let r = def.filter(|d| *d > 0.0).map(|d| x / d);
                (Some(x), r, None)
            }
            Err(e) => (None, None, Some(e)),
        };
        rows.push(EquivRow { function_id: battery[i].id.clone(), characterization: chars[c], value, ratio, error });
    }
    let spreads = chars
        .iter()
        .enumerate()
        .map(|(c, &ch)| {
            let ratios: Vec<f64> = rows.iter().filter(|r| r.characterization == ch).filter_map(|r| r.ratio).collect();
            let error = engines[c].as_ref().err().map(|e| e.to_string());
            if ratios.is_empty() {
                return SpreadRow { characterization: ch, min_ratio: None, max_ratio: None, spread: None, error };
            }
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            SpreadRow { characterization: ch, min_ratio: Some(lo), max_ratio: Some(hi), spread: Some(hi / lo), error }
        })
        .collect();
    Ok(EquivReport { rows, spreads })
}

/// One embedding inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Embedding inequalities evaluated on one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub checks: Vec<EmbeddingCheck>,
}

impl EmbeddingReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Rounding allowance of the embedding comparisons (a few ulps).
pub const EMBEDDING_ULPS: f64 = 1e-13;

fn q_name(q: f64) -> String {
    if q.is_infinite() {
        "inf".into()
    } else {
        format!("{q}")
    }
}

/// Checks, on the computed values: `||f||_{A,q2} <= ||f||_{A,q1}` for
/// `(q1, q2)` in `{(1, 2), (2, inf)}` and each scale; `||f||_{N,inf} <=
/// ||f||_{A,q}` for each scale at the spec's `q`; `||f||_{B,inf} <= ||f||_{E,q}`.
pub fn embedding_check(f: &GridFunction, spec: &SpaceSpec, sys: &LpSystem) -> Result<EmbeddingReport> {
    check_system(f, spec, sys)?;
    let d = f.domain;
    let g = peetre_levels(f, sys, spec);
    let nrm = |scale: Scale, q: f64| -> Result<f64> {
        mixed_norm_abs(&d, &spec.window, &g, scale.kind(), &spec.space, &spec.w, spec.tau, q)
    };
    let le = |name: String, lhs: f64, rhs: f64| EmbeddingCheck {
        name,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + EMBEDDING_ULPS),
    };
    let mut checks = Vec::new();
    for scale in Scale::ALL {
        for (q1, q2) in [(1.0, 2.0), (2.0, f64::INFINITY)] {
            let (a, b) = (nrm(scale, q1)?, nrm(scale, q2)?);
            checks.push(le(format!("{scale:?}: q = {} below q = {}", q_name(q2), q_name(q1)), b, a));
        }
    }
    let n_inf = nrm(Scale::N, f64::INFINITY)?;
    for scale in Scale::ALL {
        checks.push(le(format!("N q = inf below {scale:?} q = {}", q_name(spec.q)), n_inf, nrm(scale, spec.q)?));
    }
    checks.push(le(format!("B q = inf below E q = {}", q_name(spec.q)), nrm(Scale::B, f64::INFINITY)?, nrm(Scale::E, spec.q)?));
    Ok(EmbeddingReport { checks })
}

/// Outcome of the `f_m` decay witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example34Report {
    pub m: u32,
    pub a: f64,
    pub p: f64,
    /// Fitted exponent of `(Phi^* f_m)_a(x)` against `1 + |x|`.
    pub fitted_exponent: f64,
    /// `max(-a, -m)`.
    pub predicted_exponent: f64,
    /// `sup_{j >= 1} sup (phi_j^* f_m)_a / sup (Phi^* f_m)_a`.
    pub band_ratio: f64,
    /// Log-log slope of the shell masses `int_{R < |x| <= 2R} ((Phi^* f_m)_a)^p`.
    pub shell_slope: f64,
    pub finite_observed: bool,
    /// `p min(a, m) > 1`.
    pub finite_predicted: bool,
}

/// Builds `f_m` (spectrum in `[-1/2, 1/2]`) on a 1-d box and measures the
/// decay of its Peetre maximal function, the vanishing of the band parts and
/// the growth of `L^p` shell masses. The fit uses dyadic shells
/// `[2^k, 2^{k+1}]` inside `[16, L/4]`, taking the upper envelope.
pub fn example_3_4_witness(d: &BoxDomain, m: u32, a: f64, p: f64, j_max: i32) -> Result<Example34Report> {
    if d.dim() != 1 {
        return Err(Error::Parameter("the f_m witness is one-dimensional".into()));
    }
    if !(a > 0.0 && p > 0.0) || j_max < 1 {
        return Err(Error::Parameter(format!("need a > 0, p > 0, J >= 1; got a = {a}, p = {p}, J = {j_max}")));
    }
    let window = ScaleWindow::inhomogeneous(j_max);
    let sys = build_lp_system(d, &window)?;
    let f = fm_periodized(d, m, fm_default_c(m))?;
    let low = family_peetre(&f, &sys, 0, a);
    let low_sup = low.iter().cloned().fold(0.0, f64::max);
    let band_sup = (1..=j_max).map(|j| family_peetre(&f, &sys, j, a).into_iter().fold(0.0, f64::max)).fold(0.0, f64::max);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let (mut rs, mut ss) = (Vec::new(), Vec::new());
    let mut r = 16.0;
    while 2.0 * r <= d.half_width() / 4.0 + 1e-9 {
        let (mut best, mut at) = (0.0f64, r);
        let mut mass = 0.0;
        for (i, v) in low.iter().enumerate() {
            let x = d.coord(i).abs();
            if x > r && x <= 2.0 * r {
                if *v > best {
                    best = *v;
                    at = x;
                }
                mass += v.powf(p) * d.spacing();
            }
        }
        xs.push((1.0 + at).ln());
        ys.push(best.ln());
        rs.push(r.ln());
        ss.push(mass.ln());
        r *= 2.0;
    }
    if xs.len() < 2 {
        return Err(Error::Resolution("box too small for the decay fit (need L >= 256)".into()));
    }
    let fitted = stats::slope(&xs, &ys);
    let shell_slope = stats::slope(&rs, &ss);
    Ok(Example34Report {
        m,
        a,
        p,
        fitted_exponent: fitted,
        predicted_exponent: (-a).max(-(m as f64)),
        band_ratio: if low_sup > 0.0 { band_sup / low_sup } else { 0.0 },
        shell_slope,
        finite_observed: shell_slope < 0.0,
        finite_predicted: p * a.min(m as f64) > 1.0,
    })
}

/// Convenience: the LP system covering a spec window.
pub fn system_for(d: &BoxDomain, spec: &SpaceSpec) -> Result<LpSystem> {
    build_lp_system(d, &spec.window)
}

/// Lebesgue space `L^p` on `R^n`.
pub fn lebesgue(p: f64, dim: usize) -> Result<FundamentalSpace> {
    FundamentalSpace::new(SpaceKind::Lebesgue { p }, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (BoxDomain, SpaceSpec, LpSystem) {
        let d = BoxDomain::new(1, 8.0, 512).unwrap();
        let spec = SpaceSpec::new(Scale::B, lebesgue(2.0, 1).unwrap(), WeightModel::constant(1.0), 0.0, 2.0, ScaleWindow::inhomogeneous(4));
        let sys = system_for(&d, &spec).unwrap();
        (d, spec, sys)
    }

    #[test]
    fn zero_and_homogeneity() {
        let (d, spec, sys) = setup();
        assert_eq!(space_norm(&GridFunction::zeros(d), &spec, &sys).unwrap(), 0.0);
        let f = GridFunction::from_real_fn(d, |x| (-x[0] * x[0]).exp());
        let a = space_norm(&f, &spec, &sys).unwrap();
        let b = space_norm(&f.scale(crate::C64::new(0.0, -3.0)), &spec, &sys).unwrap();
        assert!((b - 3.0 * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn inadmissible_a_names_the_condition() {
        let (d, spec, _) = setup();
        let err = spec.with_a(0.25).validate(&d).unwrap_err().to_string();
        assert!(err.contains("(3.27)"), "{err}");
        assert!(spec.with_a(0.25).relaxed().validate(&d).is_ok());
    }

    #[test]
    fn alt_order_message() {
        let (_, spec, _) = setup();
        let err = check_alt_order(&spec, 0).unwrap_err().to_string();
        assert!(err.contains("(3.5) violated: L+1 ≤ α1 ∨ (a+nτ+α2)"), "{err}");
    }

    #[test]
    fn q_format_accepts_inf() {
        let (_, spec, _) = setup();
        let s = serde_json::to_string(&spec.with_q(f64::INFINITY)).unwrap();
        assert!(s.contains("\"inf\""));
        let back: SpaceSpec = serde_json::from_str(&s).unwrap();
        assert!(back.q.is_infinite());
    }
}
