//! Randomized quasi-norm and lattice properties of the fundamental spaces,
//! the mixed sequence norms and the Peetre maximal functions.

use plab_core::grid::ball_average;
use plab_core::kernels::{build_lp_system, peetre_maximal};
use plab_core::sequence::mixed_norm_abs;
use plab_core::spaces::{ExponentPreset, SpaceKind, YoungPreset};
use plab_core::{BoxDomain, DyadicCube, FundamentalSpace, GridFunction, MixKind, ScaleWindow, WeightModel};
use proptest::prelude::*;

const SAMPLES: usize = 64;

fn domain() -> BoxDomain {
    BoxDomain::new(1, 2.0, SAMPLES).unwrap()
}

fn spaces() -> Vec<FundamentalSpace> {
    [
        SpaceKind::Lebesgue { p: 2.0 },
        SpaceKind::Lebesgue { p: 0.5 },
        SpaceKind::Morrey { p: 2.0, u: 1.0 },
        SpaceKind::Orlicz { young: YoungPreset::PowerLog { p: 2.0 } },
        SpaceKind::Herz { p: 2.0, q: 1.0, alpha: 0.5 },
        SpaceKind::VariableLebesgue { exponent: ExponentPreset::LogDecay { p_inf: 2.0, c: 1.0 } },
        SpaceKind::Amalgam { p: 2.0, q: 2.0, s: -1.0 },
    ]
    .into_iter()
    .map(|k| FundamentalSpace::new(k, 1).unwrap())
    .collect()
}

fn field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, SAMPLES)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quasi_norms_are_homogeneous(v in field(), c in 0.01f64..100.0) {
        let d = domain();
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        for sp in spaces() {
            let (a, b) = (sp.norm_abs(&d, &v).unwrap(), sp.norm_abs(&d, &scaled).unwrap());
            prop_assert!(rel_close(b, c * a, 1e-9), "{:?}: {} vs {}", sp.kind, b, c * a);
        }
    }

    #[test]
    fn quasi_norms_are_lattice_monotone(v in field(), t in prop::collection::vec(0.0f64..1.0, SAMPLES)) {
        let d = domain();
        let smaller: Vec<f64> = v.iter().zip(&t).map(|(x, s)| x * s).collect();
        for sp in spaces() {
            let (a, b) = (sp.norm_abs(&d, &smaller).unwrap(), sp.norm_abs(&d, &v).unwrap());
            prop_assert!(a <= b * (1.0 + 1e-10) + 1e-12, "{:?}: {} > {}", sp.kind, a, b);
        }
    }

    #[test]
    fn theta_triangle_holds(f in field(), g in field()) {
        let d = domain();
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        for sp in spaces() {
            let th = sp.declared.theta;
            let lhs = sp.norm_abs(&d, &sum).unwrap().powf(th);
            let rhs = sp.norm_abs(&d, &f).unwrap().powf(th) + sp.norm_abs(&d, &g).unwrap().powf(th);
            prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-10, "{:?}: {} > {}", sp.kind, lhs, rhs);
        }
    }

    #[test]
    fn mixed_norms_are_homogeneous_and_monotone(
        levels in prop::collection::vec(field(), 3),
        shrink in prop::collection::vec(0.0f64..1.0, SAMPLES),
        c in 0.01f64..100.0,
    ) {
        let d = domain();
        let window = ScaleWindow::inhomogeneous(2);
        let sp = FundamentalSpace::new(SpaceKind::Lebesgue { p: 2.0 }, 1).unwrap();
        let w = WeightModel::constant(0.5);
        let scaled: Vec<Vec<f64>> = levels.iter().map(|g| g.iter().map(|x| c * x).collect()).collect();
        let smaller: Vec<Vec<f64>> = levels.iter().map(|g| g.iter().zip(&shrink).map(|(x, s)| x * s).collect()).collect();
        for kind in MixKind::ALL {
            let tau = if kind.has_tau() { 0.25 } else { 0.0 };
            let norm = |g: &[Vec<f64>], q: f64| mixed_norm_abs(&d, &window, g, kind, &sp, &w, tau, q).unwrap();
            let base = norm(&levels, 2.0);
            prop_assert!(rel_close(norm(&scaled, 2.0), c * base, 1e-9), "{:?} homogeneity", kind);
            prop_assert!(norm(&smaller, 2.0) <= base * (1.0 + 1e-12), "{:?} monotonicity", kind);
            prop_assert!(norm(&levels, 4.0) <= norm(&levels, 1.0) * (1.0 + 1e-12), "{:?} q-monotonicity", kind);
        }
    }

    #[test]
    fn ball_average_is_monotone_in_u(v in field(), x in -1.5f64..1.5, r in 0.1f64..1.0) {
        let d = domain();
        let f = GridFunction::from_real(d, &v).unwrap();
        let us = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];
        let avgs: Vec<f64> = us.iter().map(|&u| ball_average(&f, &[x], r, u).unwrap()).collect();
        for pair in avgs.windows(2) {
            prop_assert!(pair[0] <= pair[1] * (1.0 + 1e-12), "{:?}", avgs);
        }
    }

    #[test]
    fn cube_geometry_round_trips(j in -4i32..8, k in -50i64..50, m in -50i64..50) {
        let q = DyadicCube::new(j, &[k, m]);
        let geo = q.geometry();
        prop_assert_eq!(DyadicCube::from_geometry(&geo.corner[..2], geo.side).unwrap(), q);
    }
}

#[test]
fn peetre_maximal_decreases_in_a() {
    let d = BoxDomain::new(1, 8.0, 512).unwrap();
    let window = ScaleWindow::inhomogeneous(4);
    let sys = build_lp_system(&d, &window).unwrap();
    let f = GridFunction::from_real_fn(d, |x| (-(x[0] - 0.3).powi(2)).exp() * (3.0 * x[0]).cos());
    for j in window.levels() {
        let lo = peetre_maximal(&f, &sys, j, 1.5).unwrap();
        let hi = peetre_maximal(&f, &sys, j, 4.0).unwrap();
        for (a, b) in lo.values.iter().zip(&hi.values) {
            assert!(a.re >= b.re, "level {j}: {} < {}", a.re, b.re);
        }
    }
}
