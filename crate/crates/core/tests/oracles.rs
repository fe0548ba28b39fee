//! Independent closed-form or brute-force oracles for the norms, the cube
//! enumeration, the witness profiles and the Littlewood-Paley system.

use plab_core::battery::{fm_hat, fm_value, random_band_limited};
use plab_core::grid::enumerate_cubes;
use plab_core::kernels::{band_convolve, build_lp_system};
use plab_core::sequence::{estimate_tau_tilde, mixed_norm_abs};
use plab_core::spaces::SpaceKind;
use plab_core::{BoxDomain, FundamentalSpace, GridFunction, MixKind, ScaleWindow, WeightModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_levels(d: &BoxDomain, levels: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..levels).map(|_| (0..d.len()).map(|_| rng.gen_range(0.0..1.0)).collect()).collect()
}

#[test]
fn besov_type_sum_matches_direct_evaluation() {
    let d = BoxDomain::new(1, 4.0, 128).unwrap();
    let window = ScaleWindow::inhomogeneous(3);
    let (p, q, s) = (2.0, 1.5, 0.5);
    let sp = FundamentalSpace::new(SpaceKind::Lebesgue { p }, 1).unwrap();
    let w = WeightModel::constant(s);
    let g = random_levels(&d, window.len(), 11);
    let h = d.spacing();
    let lp = |j: usize| -> f64 {
        let wj = (j as f64 * s).exp2();
        (g[j].iter().map(|v| (wj * v).powf(p)).sum::<f64>() * h).powf(1.0 / p)
    };
    let direct = (0..g.len()).map(|j| lp(j).powf(q)).sum::<f64>().powf(1.0 / q);
    let got = mixed_norm_abs(&d, &window, &g, MixKind::LqLw, &sp, &w, 0.0, q).unwrap();
    assert!((got - direct).abs() <= 1e-12 * direct, "{got} vs {direct}");
}

#[test]
fn triebel_type_sum_matches_direct_evaluation() {
    let d = BoxDomain::new(1, 4.0, 128).unwrap();
    let window = ScaleWindow::inhomogeneous(3);
    let (p, q, s) = (3.0, 2.0, -0.5);
    let sp = FundamentalSpace::new(SpaceKind::Lebesgue { p }, 1).unwrap();
    let w = WeightModel::constant(s);
    let g = random_levels(&d, window.len(), 12);
    let h = d.spacing();
    let inner: Vec<f64> = (0..d.len())
        .map(|i| (0..g.len()).map(|j| ((j as f64 * s).exp2() * g[j][i]).powf(q)).sum::<f64>().powf(1.0 / q))
        .collect();
    let direct = (inner.iter().map(|v| v.powf(p)).sum::<f64>() * h).powf(1.0 / p);
    let got = mixed_norm_abs(&d, &window, &g, MixKind::LwLq, &sp, &w, 0.0, q).unwrap();
    assert!((got - direct).abs() <= 1e-12 * direct, "{got} vs {direct}");
}

#[test]
fn lebesgue_tau_tilde_is_reciprocal_exponent() {
    for (dim, l, n) in [(1, 8.0, 1024), (2, 4.0, 128)] {
        let d = BoxDomain::new(dim, l, n).unwrap();
        for p in [1.0, 1.5, 2.0, 4.0] {
            let sp = FundamentalSpace::new(SpaceKind::Lebesgue { p }, dim).unwrap();
            let t = estimate_tau_tilde(&sp, &d, &ScaleWindow::inhomogeneous(4)).unwrap();
            assert!((t - 1.0 / p).abs() < 1e-9, "dim {dim}, p {p}: {t}");
        }
    }
}

#[test]
fn fm_profile_meets_its_power_envelope() {
    for m in [1u32, 2, 3, 4] {
        let c = 0.25;
        for k in 1..200 {
            // sin(c t) = +-1 exactly here, so |f_m| = (2/t)^m.
            let t = (k as f64 - 0.5) * std::f64::consts::PI / c;
            let env = (2.0 / t).powi(m as i32);
            assert!((fm_value(m, c, t).abs() - env).abs() <= 1e-12 * env, "m {m}, t {t}");
            let between = t + 0.3;
            assert!(fm_value(m, c, between).abs() <= (2.0 / between).powi(m as i32) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn fm_transform_matches_quadrature() {
    // Trapezoid rule for the Fourier integral of the real, even profile.
    let (c, big_t, dt) = (0.25, 4000.0, 0.02);
    for m in [3u32, 4] {
        for xi in [0.0, 0.1, 0.3, 0.6, 0.9] {
            let steps = (big_t / dt) as usize;
            let mut acc = 0.5 * fm_value(m, c, 0.0);
            for i in 1..=steps {
                let t = i as f64 * dt;
                acc += fm_value(m, c, t) * (xi * t).cos();
            }
            let quad = 2.0 * acc * dt;
            let exact = fm_hat(m, c, xi);
            assert!((quad - exact).abs() < 1e-5, "m {m}, xi {xi}: {quad} vs {exact}");
        }
    }
}

#[test]
fn cube_levels_partition_the_box() {
    for (dim, l) in [(1, 3.0), (2, 1.5)] {
        let d = BoxDomain::new(dim, l, 256).unwrap();
        let window = ScaleWindow::new(-1, 3).unwrap();
        let cubes = enumerate_cubes(&d, &window).unwrap();
        for j in window.levels() {
            let vol: f64 = cubes
                .iter()
                .filter(|q| q.j == j)
                .map(|q| {
                    let geo = q.geometry();
                    (0..dim)
                        .map(|a| ((geo.corner[a] + geo.side).min(l) - geo.corner[a].max(-l)).max(0.0))
                        .product::<f64>()
                })
                .sum();
            assert!((vol - d.volume()).abs() < 1e-12, "dim {dim}, level {j}: {vol}");
        }
    }
}

#[test]
fn distant_bands_are_orthogonal_and_bands_sum_to_identity() {
    let d = BoxDomain::new(1, 8.0, 1024).unwrap();
    let big_j = 5;
    let window = ScaleWindow::inhomogeneous(big_j);
    let sys = build_lp_system(&d, &window).unwrap();
    let f = random_band_limited(&d, (big_j as f64 - 1.0).exp2(), 5);
    let bands: Vec<GridFunction> = window.levels().map(|j| band_convolve(&f, &sys, j).unwrap()).collect();
    for j in window.levels() {
        for jp in window.levels().filter(|&jp| (jp - j).abs() >= 2) {
            let twice = band_convolve(&bands[jp as usize], &sys, j).unwrap();
            assert!(twice.max_abs() < 1e-10, "bands {j}, {jp}: {}", twice.max_abs());
        }
    }
    let mut sum = GridFunction::zeros(d);
    for b in &bands {
        sum = sum.add(b);
    }
    let err = sum.sub(&f).max_abs();
    assert!(err < 1e-10, "{err}");
}
