//! Tensor wavelet transforms on the sample grid.

use plab_core::battery::random_band_limited;
use plab_core::wavelets::{build_preset, forward_transform, inverse_transform, PRESETS};
use plab_core::{BoxDomain, GridFunction, C64};

#[test]
fn every_preset_reconstructs_in_two_dimensions() {
    let d = BoxDomain::new(2, 4.0, 64).unwrap();
    let f = GridFunction::from_real_fn(d, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp() * (1.0 + x[0]).sin());
    for preset in PRESETS {
        let bank = build_preset(preset).unwrap();
        for depth in 1..=3 {
            let c = forward_transform(&f, &bank, depth).unwrap();
            let err = inverse_transform(&c, &bank).unwrap().sub(&f).max_abs();
            assert!(err <= 1e-10, "{preset} depth {depth}: {err}");
        }
    }
}

#[test]
fn transform_is_linear_and_energy_is_scale_covariant() {
    let d = BoxDomain::new(1, 8.0, 512).unwrap();
    let bank = build_preset("bior2.4".parse().unwrap()).unwrap();
    let f = random_band_limited(&d, 4.0, 1);
    let g = random_band_limited(&d, 8.0, 2);
    let (a, b) = (C64::new(2.0, 0.0), C64::new(-0.5, 0.0));
    let cf = forward_transform(&f, &bank, 4).unwrap();
    let cg = forward_transform(&g, &bank, 4).unwrap();
    let direct = forward_transform(&f.scale(a).add(&g.scale(b)), &bank, 4).unwrap();
    let combined = cf.combine(a, &cg, b).unwrap();
    let diff = direct.combine(C64::new(1.0, 0.0), &combined, C64::new(-1.0, 0.0)).unwrap();
    assert!(diff.energy() <= 1e-24 * direct.energy(), "{}", diff.energy());
    let scaled = forward_transform(&f.scale(a), &bank, 4).unwrap();
    assert!((scaled.energy() - 4.0 * cf.energy()).abs() <= 1e-12 * scaled.energy());
}
