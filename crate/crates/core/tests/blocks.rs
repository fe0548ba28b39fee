//! Block conditions on hand-built molecules and spline atoms, and synthesis
//! from spline atoms.

use std::collections::BTreeMap;

use plab_core::battery::centered_bspline;
use plab_core::decompositions::{check_block, synthesize, BlockKind, BlockSpec, CoefficientField};
use plab_core::norms::system_for;
use plab_core::spaces::SpaceKind;
use plab_core::{
    BoxDomain, DyadicCube, FundamentalSpace, GridFunction, Scale, ScaleWindow, SpaceSpec, WeightModel, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPLINE_ORDER: u32 = 4;

fn spec(d: &BoxDomain, big_j: i32) -> SpaceSpec {
    let sp = FundamentalSpace::new(SpaceKind::Lebesgue { p: 2.0 }, d.dim()).unwrap();
    SpaceSpec::new(Scale::B, sp, WeightModel::constant(1.0), 0.0, 2.0, ScaleWindow::inhomogeneous(big_j))
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// 1-d profile `Delta^{L+1}` of a centered B-spline, dilated by `w` samples
/// per unit, as a function of the displacement in samples. The difference
/// step is `w` samples, so discrete moments of order `<= L` vanish exactly.
fn spline_difference(l: i32, w: f64, offset: f64) -> f64 {
    let r = (l + 1) as u32;
    (0..=r)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(r, k) * centered_bspline(SPLINE_ORDER, offset / w - k as f64 + r as f64 / 2.0)
        })
        .sum()
}

/// Tensor spline atom on `q` filling `3Q`: `(SPLINE_ORDER + L + 1) w` samples
/// wide, normalized so that every size constant is at most one.
fn spline_atom(d: &BoxDomain, q: &DyadicCube, bs: &BlockSpec) -> GridFunction {
    let geo = q.geometry();
    let h = d.spacing();
    let w = ((3.0 * geo.side / h) / (SPLINE_ORDER as i32 + bs.l + 1) as f64).floor();
    assert!(w >= 1.0, "cube {q:?} is too small for the grid");
    let dim = d.dim();
    let raw = GridFunction::from_real_fn(*d, |x| {
        (0..dim).map(|a| spline_difference(bs.l, w, ((x[a] - geo.center[a]) / h).round())).product()
    });
    let norm = check_block(&raw, q, bs).normalization();
    raw.scale(C64::new(1.0 / norm, 0.0))
}

fn atom_spec(s: &SpaceSpec) -> BlockSpec {
    let bs = BlockSpec::minimal_for(s, BlockKind::Atom);
    assert!(SPLINE_ORDER >= bs.k + 2, "spline is not C^K");
    bs
}

#[test]
fn gaussian_is_a_molecule_with_the_analytic_decay_constant() {
    let d = BoxDomain::new(1, 16.0, 4096).unwrap();
    let q = DyadicCube::new(0, &[1]);
    let c = q.geometry().center[0];
    let b = GridFunction::from_real_fn(d, |x| (-(x[0] - c).powi(2) / 2.0).exp());
    for big_n in [2.0, 4.0, 8.0] {
        let bs = BlockSpec { kind: BlockKind::Molecule, k: 0, l: -1, n: big_n };
        let r = check_block(&b, &q, &bs);
        assert!(r.passed && !r.moments_required);
        // sup_t e^{-t^2/2} (1 + t)^N sits at t^2 + t = N.
        let t = (-1.0 + (1.0 + 4.0 * big_n).sqrt()) / 2.0;
        let oracle = (-t * t / 2.0).exp() * (1.0 + t).powf(big_n);
        let got = r.decay_constant.unwrap();
        assert!((got - oracle).abs() < 1e-4 * oracle, "N {big_n}: {got} vs {oracle}");
    }
    // Derivative sizes: sup |t e^{-t^2/2}| = e^{-1/2}, sup |(t^2 - 1) e^{-t^2/2}| = 1.
    let r = check_block(&b, &q, &BlockSpec { kind: BlockKind::Molecule, k: 2, l: -1, n: 4.0 });
    let sizes: Vec<f64> = r.size_constants.iter().map(|c| c.1).collect();
    for (s, e) in sizes.iter().zip([1.0, (-0.5f64).exp(), 1.0]) {
        assert!((s - e).abs() < 1e-4, "{sizes:?}");
    }
}

#[test]
fn spline_differences_are_atoms() {
    for (d, j) in [(BoxDomain::new(1, 16.0, 4096).unwrap(), 2), (BoxDomain::new(2, 8.0, 256).unwrap(), 1)] {
        let s = spec(&d, 4);
        let bs = atom_spec(&s);
        let k = if d.dim() == 1 { vec![3] } else { vec![1, -2] };
        let q = DyadicCube::new(j, &k);
        let b = spline_atom(&d, &q, &bs);
        let r = check_block(&b, &q, &bs);
        assert!(r.passed && r.support_ok && r.moments_required, "{r:?}");
        assert!((r.normalization() - 1.0).abs() < 1e-12);
        // Direct moment sums against exact monomials.
        let geo = q.geometry();
        for b0 in 0..=bs.l {
            for b1 in 0..=(if d.dim() == 2 { bs.l - b0 } else { 0 }) {
                let (mut num, mut den) = (0.0, 0.0);
                for (i, v) in b.values.iter().enumerate() {
                    let x = d.point(i);
                    let mono = ((x[0] - geo.center[0]) / geo.side).powi(b0)
                        * if d.dim() == 2 { ((x[1] - geo.center[1]) / geo.side).powi(b1) } else { 1.0 };
                    num += v.re * mono;
                    den += v.re.abs() * mono.abs();
                }
                assert!(num.abs() <= 1e-10 * den, "moment ({b0}, {b1}): {num} of {den}");
            }
        }
    }
}

#[test]
fn single_atom_synthesis_reproduces_the_atom_and_scales() {
    let d = BoxDomain::new(1, 16.0, 4096).unwrap();
    let s = spec(&d, 6);
    let bs = atom_spec(&s);
    let sys = system_for(&d, &s).unwrap();
    let q = DyadicCube::new(3, &[-5]);
    let atom = spline_atom(&d, &q, &bs);
    let blocks = BTreeMap::from([(q, atom.clone())]);
    let mut lambda = CoefficientField::new(d, s.window);
    lambda.set(q, C64::new(1.0, 0.0));
    let one = synthesize(&lambda, &blocks, &bs, &s, &sys).unwrap();
    assert_eq!(one.f, atom);
    assert!(one.norm_ratio.is_finite() && one.norm_ratio > 0.0);
    let scaled = synthesize(&lambda.scale(C64::new(-2.5, 0.0)), &blocks, &bs, &s, &sys).unwrap();
    assert!(scaled.f.sub(&atom.scale(C64::new(-2.5, 0.0))).max_abs() < 1e-15);
    assert!((scaled.norm_ratio - one.norm_ratio).abs() < 1e-10 * one.norm_ratio);
}

#[test]
fn inadmissible_block_spec_is_rejected() {
    let d = BoxDomain::new(1, 16.0, 4096).unwrap();
    let s = spec(&d, 4);
    let mut bs = atom_spec(&s);
    bs.l = -1;
    let sys = system_for(&d, &s).unwrap();
    let lambda = CoefficientField::new(d, s.window);
    let err = synthesize(&lambda, &BTreeMap::new(), &bs, &s, &sys).unwrap_err();
    assert!(err.to_string().contains("star-class"), "{err}");
}

/// Ratio for 40 random coefficients on cubes of levels `0..6` inside
/// `[-4, 4)`, with atoms sampled on `d`.
fn sparse_ratio(d: &BoxDomain) -> f64 {
    let s = spec(d, 6);
    let bs = atom_spec(&s);
    let sys = system_for(d, &s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut lambda = CoefficientField::new(*d, s.window);
    let mut blocks = BTreeMap::new();
    while lambda.len() < 40 {
        let j = rng.gen_range(0..6);
        let span = 4i64 << j;
        let q = DyadicCube::new(j, &[rng.gen_range(-span..span)]);
        lambda.set(q, C64::new(rng.gen_range(-1.0..1.0), 0.0));
        blocks.entry(q).or_insert_with(|| spline_atom(d, &q, &bs));
    }
    synthesize(&lambda, &blocks, &bs, &s, &sys).unwrap().norm_ratio
}

#[test]
fn sparse_atomic_synthesis_is_bounded_and_grid_stable() {
    let coarse = sparse_ratio(&BoxDomain::new(1, 16.0, 4096).unwrap());
    let fine = sparse_ratio(&BoxDomain::new(1, 16.0, 8192).unwrap());
    assert!(coarse <= 10.0 && fine <= 10.0, "{coarse}, {fine}");
    assert!((fine / coarse - 1.0).abs() <= 0.2, "{coarse} vs {fine}");
}
