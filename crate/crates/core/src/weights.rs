//! Scale-and-space weights `w(x, 2^{-j})` with declared class parameters,
//! empirical class certification and the derived weights used by lifts,
//! Sobolev-type bounds and the tau collapse.

use serde::{Deserialize, Serialize};

use crate::grid::{BoxDomain, ScaleWindow};

/// Base weight profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightPreset {
    /// `w_j = 2^{js}`.
    Constant { s: f64 },
    /// `w_j = 2^{-j} sqrt(|j| + 1)`.
    Yoneda,
    /// `w_j(x) = 2^{js} (1 + |x|)^eps`.
    SpatialPower { s: f64, eps: f64 },
}

/// Declared class `W^{alpha3}_{alpha1, alpha2}` (or the star class).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightClass {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub star: bool,
}

/// A weight `w(x, 2^{-j}) = base(x, j) 2^{j e} (1 + |x|)^d` with its class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightModel {
    pub base: WeightPreset,
    /// Extra level exponent `e`.
    pub level_exp: f64,
    /// Extra spatial exponent `d`.
    pub spatial_exp: f64,
    pub class: WeightClass,
    pub homogeneous: bool,
}

/// Weight transformations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeriveKind {
    /// `2^{-js} w_j`.
    Lift { s: f64 },
    /// `2^{j(tau - gamma)} (1 + |x|)^delta w_j`.
    Sobolev { tau: f64, gamma: f64, delta: f64 },
    /// `2^{jn(tau - tau_tilde)} w_j`.
    TauCollapse { tau: f64, tau_tilde: f64, dim: usize },
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

impl WeightModel {
    /// `2^{js}` in the plain class `W^0_{(-s)+, (s)+}`.
    pub fn constant(s: f64) -> Self {
        Self::from_preset(WeightPreset::Constant { s })
    }

    /// `2^{js}`, `s >= 0`, in the star class with `alpha1 = alpha2 = s`.
    pub fn constant_star(s: f64) -> Self {
        let mut w = Self::constant(s);
        if s >= 0.0 {
            w.class = WeightClass { alpha1: s, alpha2: s, alpha3: 0.0, star: true };
        }
        w
    }

    pub fn from_preset(base: WeightPreset) -> Self {
        let class = match base {
            WeightPreset::Constant { s } => WeightClass { alpha1: pos(-s), alpha2: pos(s), alpha3: 0.0, star: false },
            WeightPreset::Yoneda => WeightClass { alpha1: 1.0, alpha2: 0.5, alpha3: 0.0, star: false },
            WeightPreset::SpatialPower { s, eps } => {
                WeightClass { alpha1: pos(-s), alpha2: pos(s), alpha3: eps.abs(), star: false }
            }
        };
        Self { base, level_exp: 0.0, spatial_exp: 0.0, class, homogeneous: false }
    }

    /// Marks the weight as defined for all integer levels.
    pub fn homogeneous(mut self) -> Self {
        self.homogeneous = true;
        self
    }

    /// `w(x, 2^{-j})`.
    pub fn eval(&self, x: [f64; 2], j: i32) -> f64 {
        let jf = j as f64;
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let base = match self.base {
            WeightPreset::Constant { s } => (jf * s).exp2(),
            WeightPreset::Yoneda => (-jf).exp2() * ((j.unsigned_abs() as f64) + 1.0).sqrt(),
            WeightPreset::SpatialPower { s, eps } => (jf * s).exp2() * (1.0 + r).powf(eps),
        };
        let mut v = base * (jf * self.level_exp).exp2();
        if self.spatial_exp != 0.0 {
            v *= (1.0 + r).powf(self.spatial_exp);
        }
        v
    }

    /// Whether the weight does not depend on `x`.
    pub fn is_constant_in_x(&self) -> bool {
        let base_const = !matches!(self.base, WeightPreset::SpatialPower { eps, .. } if eps != 0.0);
        base_const && self.spatial_exp == 0.0
    }

    /// Multiplies by `2^{je}`; class follows `((alpha1 - e)+, (alpha2 + e)+)`.
    fn times_level_power(mut self, e: f64) -> Self {
        self.level_exp += e;
        let c = self.class;
        self.class = if c.star {
            let a1 = c.alpha1 + e;
            if a1 >= 0.0 {
                WeightClass { alpha1: a1, alpha2: pos(c.alpha2 + e), ..c }
            } else {
                WeightClass { alpha1: -a1, alpha2: pos(c.alpha2 + e), star: false, ..c }
            }
        } else if let (WeightPreset::Constant { s }, true) = (self.base, self.spatial_exp == 0.0) {
            // Pure powers 2^{jt} have the exact class ((-t)+, t+).
            let t = s + self.level_exp;
            WeightClass { alpha1: pos(-t), alpha2: pos(t), ..c }
        } else {
            WeightClass { alpha1: pos(c.alpha1 - e), alpha2: pos(c.alpha2 + e), ..c }
        };
        self
    }

    fn times_spatial_power(mut self, d: f64) -> Self {
        self.spatial_exp += d;
        self.class.alpha3 += d.abs();
        self
    }
}

/// Applies a weight transformation and recomputes the declared class.
pub fn derive_weight(w: &WeightModel, kind: DeriveKind) -> WeightModel {
    match kind {
        DeriveKind::Lift { s } => {
            if s == 0.0 {
                *w
            } else {
                w.times_level_power(-s)
            }
        }
        DeriveKind::Sobolev { tau, gamma, delta } => {
            let mut v = *w;
            if tau != gamma {
                v = v.times_level_power(tau - gamma);
            }
            if delta != 0.0 {
                v = v.times_spatial_power(delta);
            }
            v
        }
        DeriveKind::TauCollapse { tau, tau_tilde, dim } => {
            if tau == tau_tilde {
                *w
            } else {
                w.times_level_power(dim as f64 * (tau - tau_tilde))
            }
        }
    }
}

/// Worst empirical constants of the weight-class inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    /// Smallest `C` making the scale inequalities hold on the sample.
    pub c_scale: f64,
    /// Smallest `C` making the spatial inequality hold on the sample.
    pub c_space: f64,
    pub passed: bool,
}

/// Cap on the empirical constants for a pass.
pub const WEIGHT_CAP: f64 = 16.0;

/// Certifies the declared class over the window on a deterministic sample.
pub fn check_weight_class(w: &WeightModel, window: &ScaleWindow, domain: &BoxDomain) -> WeightReport {
    let stride = (domain.len() / 48).max(1);
    let pts: Vec<[f64; 2]> = (0..domain.len()).step_by(stride).map(|i| domain.point(i)).collect();
    let c = w.class;
    let mut c_scale = 1.0f64;
    for &x in &pts {
        for j in window.levels() {
            for nu in window.j_min..=j {
                let d = (j - nu) as f64;
                let (wj, wn) = (w.eval(x, j), w.eval(x, nu));
                let lower = if c.star { (d * c.alpha1).exp2() } else { (-d * c.alpha1).exp2() };
                let upper = (d * c.alpha2).exp2();
                c_scale = c_scale.max(lower * wn / wj).max(wj / (upper * wn));
            }
        }
    }
    let mut c_space = 1.0f64;
    if !w.is_constant_in_x() {
        for &x in &pts {
            for &y in pts.iter().step_by(3) {
                let dist = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                for j in window.levels() {
                    let bound = w.eval(y, j) * (1.0 + (j as f64).exp2() * dist).powf(c.alpha3);
                    c_space = c_space.max(w.eval(x, j) / bound);
                }
            }
        }
    }
    let passed = c_scale.is_finite() && c_space.is_finite() && c_scale <= WEIGHT_CAP && c_space <= WEIGHT_CAP;
    WeightReport { c_scale, c_space, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (BoxDomain, ScaleWindow) {
        (BoxDomain::new(1, 4.0, 256).unwrap(), ScaleWindow::inhomogeneous(5))
    }

    #[test]
    fn constant_weight_star_class_is_tight() {
        let (d, win) = setup();
        let r = check_weight_class(&WeightModel::constant_star(1.5), &win, &d);
        assert!(r.passed);
        assert!((r.c_scale - 1.0).abs() < 1e-12 && r.c_space == 1.0);
    }

    #[test]
    fn lifted_classes_follow_shift_rule() {
        let (d, win) = setup();
        for &s in &[-1.0, 0.0, 2.0] {
            let w = derive_weight(&WeightModel::constant(1.0), DeriveKind::Lift { s });
            assert_eq!(w.class.alpha1, pos(-(1.0 - s)));
            assert_eq!(w.class.alpha2, pos(1.0 - s));
            assert!(check_weight_class(&w, &win, &d).passed);
        }
    }

    #[test]
    fn sobolev_class_arithmetic() {
        let w = WeightModel::from_preset(WeightPreset::SpatialPower { s: 0.5, eps: 0.25 });
        let v = derive_weight(&w, DeriveKind::Sobolev { tau: 0.2, gamma: 0.7, delta: 1.0 });
        assert!((v.class.alpha1 - pos(0.0 + 0.7 - 0.2)).abs() < 1e-15);
        assert!((v.class.alpha2 - pos(0.5 + 0.2 - 0.7)).abs() < 1e-15);
        assert!((v.class.alpha3 - 1.25).abs() < 1e-15);
        let (d, win) = setup();
        assert!(check_weight_class(&v, &win, &d).passed);
    }

    #[test]
    fn yoneda_and_spatial_presets_pass() {
        let (d, win) = setup();
        assert!(check_weight_class(&WeightModel::from_preset(WeightPreset::Yoneda), &win, &d).passed);
        let sp = WeightModel::from_preset(WeightPreset::SpatialPower { s: 1.0, eps: 0.5 });
        assert!(check_weight_class(&sp, &win, &d).passed);
    }

    #[test]
    fn trivial_derivations_are_identities() {
        let w = WeightModel::constant(0.7);
        assert_eq!(derive_weight(&w, DeriveKind::Lift { s: 0.0 }), w);
        assert_eq!(derive_weight(&w, DeriveKind::TauCollapse { tau: 0.3, tau_tilde: 0.3, dim: 2 }), w);
    }
}
