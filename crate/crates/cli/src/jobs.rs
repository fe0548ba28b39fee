//! Command implementations: each turns a config into result tables, a JSON
//! summary and the list of failed assertions.

use plab_core::battery::{select_battery, BatteryFunction, BatteryId};
use plab_core::decompositions::{analyze, synthesize, BlockSpec, CoefficientField};
use plab_core::diffosc::DiffOscConfig;
use plab_core::grid::{cubes_at_level, BoxDomain, ScaleWindow};
use plab_core::kernels::MaximalKind;
use plab_core::norms::{
    default_a, equivalence_report, example_3_4_witness, space_norm, system_for, Characterization, EquivParams,
};
use plab_core::sequence::{estimate_tau_tilde, proper_subspace_witness, tau_collapse_compare};
use plab_core::spaces::{split_space_sweep, verify_axioms, FundamentalSpace, SpaceKind};
use plab_core::stats;
use plab_core::wavelets::{build_filters, check_budgets, forward_transform, full_depth, inverse_transform, PRESETS};
use plab_core::weights::WeightModel;
use plab_core::{GridFunction, C64};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, JobConfig, Registry, WitnessConfig};
use crate::table::{Cell, Table};
use crate::{CliError, Result};

/// Tables (the first is `results`), summary and failed assertions of one job.
#[derive(Debug, Clone, PartialEq)]
pub struct JobOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub failures: Vec<String>,
}

/// Witness bounds asserted by the CLI.
pub mod limits {
    /// Relative tolerance of the `f_m` decay-exponent fit.
    pub const FM_EXPONENT_RTOL: f64 = 0.05;
    /// Largest band-part ratio of `f_m`.
    pub const FM_BAND_RATIO: f64 = 1e-8;
    /// `b_norm` interval `[1/c, c]` and the `q = inf` agreement factor.
    pub const THM_912_FACTOR: f64 = 3.0;
    /// Relative tolerance of the `n_norm ~ (J+1)^{1/q}` exponent.
    pub const THM_912_EXPONENT_RTOL: f64 = 0.10;
    /// Relative tolerance of the `tau~` estimate.
    pub const TAU_TILDE_RTOL: f64 = 0.02;
    /// Largest window drift of the collapse ratio.
    pub const COLLAPSE_DRIFT: f64 = 0.15;
    /// Expected log2-slope of the split-space ratio and its tolerance.
    pub const SPLIT_SLOPE: f64 = -0.5;
    pub const SPLIT_SLOPE_RTOL: f64 = 0.15;
    /// Perfect-reconstruction tolerance of the wavelet engine.
    pub const RECONSTRUCTION_TOL: f64 = 1e-10;
    /// Synthesis-to-analysis norm interval `[1/c, c]`.
    pub const SYNTHESIS_FACTOR: f64 = 3.0;
}

fn domain(cfg: &JobConfig, reg: &Registry) -> Result<BoxDomain> {
    let name = cfg
        .domain
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("command {} needs a `domain` preset", cfg.command.name())))?;
    reg.domain(name)
}

fn battery(cfg: &JobConfig, d: &BoxDomain, reg: &Registry, default: &[BatteryId]) -> Result<Vec<BatteryFunction>> {
    let ids = cfg.battery.clone().unwrap_or_else(|| default.to_vec());
    Ok(select_battery(d, &ids, cfg.seed.unwrap_or(reg.battery_seed))?)
}

fn rel_err(x: f64, target: f64) -> f64 {
    ((x - target) / target).abs()
}

/// Runs one non-report command.
pub fn run_command(cfg: &JobConfig, reg: &Registry) -> Result<JobOutput> {
    match cfg.command {
        Command::Norm => norm_job(cfg, reg),
        Command::Equiv => equiv_job(cfg, reg),
        Command::Axioms => axioms_job(cfg, reg),
        Command::Witness => witness_job(cfg, reg),
        Command::Wavelet => wavelet_job(cfg, reg),
        Command::Decompose => decompose_job(cfg, reg),
        Command::Report => Err(CliError::Config("report jobs are run through run_job".into())),
    }
}

fn norm_job(cfg: &JobConfig, reg: &Registry) -> Result<JobOutput> {
    let d = domain(cfg, reg)?;
    let spec = cfg.space_spec(&d)?;
    let sys = system_for(&d, &spec)?;
    let bat = battery(cfg, &d, reg, &BatteryId::ALL)?;
    let values: Vec<_> = bat.par_iter().map(|b| space_norm(&b.f, &spec, &sys)).collect();
    let mut t = Table::new("results", &["function_id", "scale", "q", "value", "error"]);
    let mut failures = Vec::new();
    for (b, v) in bat.iter().zip(values) {
        let (value, error) = match v {
            Ok(x) if x.is_finite() => (Cell::Real(x), Cell::Empty),
            Ok(x) => {
                failures.push(format!("{}: non-finite norm {x}", b.id));
                (Cell::Real(x), Cell::Empty)
            }
            Err(e) => {
                failures.push(format!("{}: {e}", b.id));
                (Cell::Empty, Cell::Text(e.to_string()))
            }
        };
        t.push(vec![b.id.as_str().into(), format!("{:?}", spec.scale).into(), Cell::Real(spec.q), value, error]);
    }
    Ok(JobOutput { tables: vec![t], summary: json!({ "spec": spec }), failures })
}

fn equiv_params(cfg: &JobConfig, spec: &plab_core::SpaceSpec) -> EquivParams {
    let mut p = EquivParams::for_spec(spec);
    if let Some(e) = &cfg.equiv {
        if let Some(l) = e.alt_moment_order {
            p.alt_moment_order = l;
        }
        if let Some(l0) = e.local_means_l0 {
            p.local_means_l0 = l0;
        }
        if let Some(w) = e.wavelet {
            p.wavelet = w;
        }
        let d = p.diff;
        p.diff = DiffOscConfig {
            m: e.m.unwrap_or(d.m),
            u: e.u.map_or(d.u, |u| u.0),
            c_tilde: e.c_tilde.unwrap_or(d.c_tilde),
            a: spec.a,
        };
    }
    p
}

fn equiv_job(cfg: &JobConfig, reg: &Registry) -> Result<JobOutput> {
    let d = domain(cfg, reg)?;
    let spec = cfg.space_spec(&d)?;
    let sys = system_for(&d, &spec)?;
    let bat = battery(cfg, &d, reg, &BatteryId::ALL)?;
    let chars = cfg.characterizations.clone().unwrap_or_else(|| Characterization::ALL.to_vec());
    let params = equiv_params(cfg, &spec);
    let rep = equivalence_report(&bat, &spec, &sys, &chars, &params)?;
    let mut t = Table::new("results", &["function_id", "characterization", "value", "ratio", "error"]);
    let mut plot = Table::new("ratios", &["function_id", "characterization", "ratio"]);
    let mut failures = Vec::new();
    for r in &rep.rows {
        let ch = r.characterization.name();
        t.push(vec![r.function_id.as_str().into(), ch.into(), r.value.into(), r.ratio.into(), r.error.clone().into()]);
        plot.push(vec![r.function_id.as_str().into(), ch.into(), r.ratio.into()]);
        if r.characterization == Characterization::Default && r.error.is_none() && r.ratio != Some(1.0) {
            failures.push(format!("{}: default ratio {:?} is not 1", r.function_id, r.ratio));
        }
    }
    let cap = cfg.equiv.as_ref().and_then(|e| e.spread_cap);
    if let Some(cap) = cap {
        for s in &rep.spreads {
            match s.spread {
                Some(v) if v <= cap => {}
                Some(v) => failures.push(format!("{}: spread {v} exceeds cap {cap}", s.characterization.name())),
                None => failures.push(format!(
                    "{}: no spread ({})",
                    s.characterization.name(),
                    s.error.clone().unwrap_or_default()
                )),
            }
        }
    }
    let summary = json!({ "spec": spec, "params": params, "spreads": rep.spreads, "spread_cap": cap });
    Ok(JobOutput { tables: vec![t, plot], summary, failures })
}

fn axioms_job(cfg: &JobConfig, reg: &Registry) -> Result<JobOutput> {
    /// Relative tolerance of the cube-exponent fit.
    const FIT_RTOL: f64 = 0.05;
    let d = domain(cfg, reg)?;
    let space = FundamentalSpace::new(cfg.space_kind()?, d.dim())?;
    let bat = battery(cfg, &d, reg, &BatteryId::ALL)?;
    let fs: Vec<GridFunction> = bat.into_iter().map(|b| b.f).collect();
    let rep = verify_axioms(&space, &d, &fs)?;
    let mut t = Table::new("results", &["check", "passed", "worst", "detail"]);
    let mut failures = Vec::new();
    for c in &rep.checks {
        t.push(vec![c.axiom.as_str().into(), c.passed.into(), c.worst.into(), c.detail.as_str().into()]);
        if !c.passed {
            failures.push(format!("{}: {}", c.axiom, c.detail));
        }
    }
    let fit = rep.fit;
    let fit_ok = fit.matches(FIT_RTOL);
    for (name, hat, decl) in [("fit_gamma", fit.gamma_hat, fit.gamma), ("fit_delta", fit.delta_hat, fit.delta)] {
        let worst = if decl == 0.0 { hat.abs() } else { rel_err(hat, decl) };
        t.push(vec![name.into(), (worst <= FIT_RTOL).into(), worst.into(), format!("fitted {hat}, declared {decl}").into()]);
    }
    if !fit_ok {
        failures.push(format!("exponent fit {fit:?} misses the declared values by more than {FIT_RTOL}"));
    }
    Ok(JobOutput { tables: vec![t], summary: json!({ "space": space, "fit": fit }), failures })
}

fn witness_job(cfg: &JobConfig, reg: &Registry) -> Result<JobOutput> {
    use limits::*;
    let target = cfg
        .witness
        .as_ref()
        .ok_or_else(|| CliError::Config("command witness needs a `witness` block".into()))?;
    let d = domain(cfg, reg)?;
    let mut failures = Vec::new();
    match target {
        WitnessConfig::Example34 { cases, j_max } => {
            let rows: Vec<_> =
                cases.par_iter().map(|c| example_3_4_witness(&d, c.m, c.a, c.p, *j_max)).collect::<Result<_, _>>()?;
            let mut t = Table::new(
                "results",
                &[
                    "m",
                    "a",
                    "p",
                    "fitted_exponent",
                    "predicted_exponent",
                    "relative_error",
                    "band_ratio",
                    "shell_slope",
                    "finite_observed",
                    "finite_predicted",
                ],
            );
            let mut plot = Table::new("fitted_exponents", &["m", "a", "fitted_exponent", "predicted_exponent"]);
            for r in &rows {
                let err = rel_err(r.fitted_exponent, r.predicted_exponent);
                t.push(vec![
                    r.m.into(),
                    r.a.into(),
                    r.p.into(),
                    r.fitted_exponent.into(),
                    r.predicted_exponent.into(),
                    err.into(),
                    r.band_ratio.into(),
                    r.shell_slope.into(),
                    r.finite_observed.into(),
                    r.finite_predicted.into(),
                ]);
                plot.push(vec![r.m.into(), r.a.into(), r.fitted_exponent.into(), r.predicted_exponent.into()]);
                let id = format!("f_{} at a = {}", r.m, r.a);
                if err > FM_EXPONENT_RTOL {
                    failures.push(format!("{id}: fitted {} vs {}", r.fitted_exponent, r.predicted_exponent));
                }
                if r.band_ratio > FM_BAND_RATIO {
                    failures.push(format!("{id}: band ratio {}", r.band_ratio));
                }
                if r.finite_observed != r.finite_predicted {
                    failures.push(format!("{id}, p = {}: shell slope {} contradicts the finiteness rule", r.p, r.shell_slope));
                }
            }
            Ok(JobOutput { tables: vec![t, plot], summary: json!({ "target": "example_3_4" }), failures })
        }
        WitnessConfig::Thm912 { levels, q, tau, a } => {
            let space = FundamentalSpace::new(cfg.space_kind()?, d.dim())?;
            let w = cfg.weight_model()?;
            let a = a.unwrap_or_else(|| default_a(&space, &w));
            let cells: Vec<(f64, i32)> = q.iter().flat_map(|q| levels.iter().map(move |&j| (q.0, j))).collect();
            let rows: Vec<_> = cells
                .par_iter()
                .map(|&(q, j)| proper_subspace_witness(&d, &space, &w, *tau, q, a, j).map(|r| (q, r)))
                .collect::<Result<_, _>>()?;
            let mut t = Table::new("results", &["q", "J", "b_norm", "n_norm"]);
            for (q, r) in &rows {
                t.push(vec![Cell::Real(*q), r.levels.into(), r.b_norm.into(), r.n_norm.into()]);
                if !(r.b_norm >= 1.0 / THM_912_FACTOR && r.b_norm <= THM_912_FACTOR) {
                    failures.push(format!("q = {q}, J = {}: b_norm {} outside [1/3, 3]", r.levels, r.b_norm));
                }
                if q.is_infinite() && (r.b_norm / r.n_norm).max(r.n_norm / r.b_norm) > THM_912_FACTOR {
                    failures.push(format!("q = inf, J = {}: b {} and n {} disagree", r.levels, r.b_norm, r.n_norm));
                }
            }
            let mut slopes = Vec::new();
            for qv in q.iter().map(|q| q.0).filter(|q| q.is_finite()) {
                let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .filter(|(q, _)| *q == qv)
                    .map(|(_, r)| ((r.levels as f64 + 1.0).ln(), r.n_norm.ln()))
                    .unzip();
                if xs.len() >= 2 {
                    let s = stats::slope(&xs, &ys);
                    if rel_err(s, 1.0 / qv) > THM_912_EXPONENT_RTOL {
                        failures.push(format!("q = {qv}: n_norm growth exponent {s} vs {}", 1.0 / qv));
                    }
                    slopes.push(json!({ "q": qv, "exponent": s, "expected": 1.0 / qv }));
                }
            }
            let plot = Table { name: "n_norm_vs_j".into(), ..t.clone() };
            Ok(JobOutput { tables: vec![t, plot], summary: json!({ "target": "thm_9_12", "a": a, "growth": slopes }), failures })
        }
        WitnessConfig::TauCollapse { p, windows, tau_offset } => {
            let w = cfg.weight.map_or_else(|| WeightModel::constant(0.0), |w| w.model());
            let (q, a_cfg) = cfg.spec.map_or((2.0, None), |s| (s.q, s.a));
            let cells: Vec<(f64, i32)> = p.iter().flat_map(|&p| windows.iter().map(move |&j| (p, j))).collect();
            let rows: Vec<_> = cells
                .par_iter()
                .map(|&(p, j)| -> plab_core::Result<_> {
                    let space = FundamentalSpace::new(SpaceKind::Lebesgue { p }, d.dim())?;
                    let window = ScaleWindow::inhomogeneous(j);
                    window.validate_for(&d)?;
                    let tt = estimate_tau_tilde(&space, &d, &window)?;
                    let tau = 1.0 / p + tau_offset;
                    let a = a_cfg.unwrap_or_else(|| default_a(&space, &w));
                    let cmp = tau_collapse_compare(&collapse_field(&d, window), &space, &w, tau, q, a)?;
                    Ok((p, j, tt, tau, cmp))
                })
                .collect::<Result<_, _>>()?;
            let mut t = Table::new("results", &["p", "J", "tau_tilde", "tau", "lhs", "rhs", "ratio"]);
            for (p, j, tt, tau, c) in &rows {
                t.push(vec![(*p).into(), (*j).into(), (*tt).into(), (*tau).into(), c.lhs.into(), c.rhs.into(), (c.lhs / c.rhs).into()]);
                if rel_err(*tt, 1.0 / p) > TAU_TILDE_RTOL {
                    failures.push(format!("p = {p}, J = {j}: tau~ = {tt} vs {}", 1.0 / p));
                }
            }
            for &pv in p {
                let ratios: Vec<f64> = rows.iter().filter(|r| r.0 == pv).map(|r| r.4.lhs / r.4.rhs).collect();
                if let (Some(first), Some(last)) = (ratios.first(), ratios.last()) {
                    let drift = rel_err(*last, *first);
                    if drift > COLLAPSE_DRIFT {
                        failures.push(format!("p = {pv}: collapse ratio drifts by {drift}"));
                    }
                }
            }
            Ok(JobOutput { tables: vec![t], summary: json!({ "target": "tau_collapse" }), failures })
        }
        WitnessConfig::SplitSweep { exp_min, exp_max } => {
            let rows = split_space_sweep(&d, *exp_min..exp_max + 1, MaximalKind::HardyLittlewood)?;
            let mut t = Table::new("results", &["r", "norm_f", "norm_mf", "ratio", "log2_slope"]);
            let mut plot = Table::new("split_sweep", &["r", "norm_ratio", "log2_slope"]);
            for (i, r) in rows.iter().enumerate() {
                let local = (i > 0).then(|| (r.ratio / rows[i - 1].ratio).log2() / (r.r / rows[i - 1].r).log2());
                t.push(vec![r.r.into(), r.norm_f.into(), r.norm_mf.into(), r.ratio.into(), local.into()]);
                plot.push(vec![r.r.into(), r.ratio.into(), local.into()]);
                if i > 0 && !(r.ratio > rows[i - 1].ratio) {
                    failures.push(format!("ratio does not increase at r = {}", r.r));
                }
            }
            let xs: Vec<f64> = rows.iter().map(|r| r.r.log2()).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.ratio.log2()).collect();
            let slope = if rows.len() >= 2 { stats::slope(&xs, &ys) } else { f64::NAN };
            if !(rel_err(slope, SPLIT_SLOPE) <= SPLIT_SLOPE_RTOL) {
                failures.push(format!("log2-slope {slope} is not within {SPLIT_SLOPE_RTOL} of {SPLIT_SLOPE}"));
            }
            Ok(JobOutput { tables: vec![t, plot], summary: json!({ "target": "split_sweep", "log2_slope": slope }), failures })
        }
    }
}

/// Fixed coefficient field on levels `0..=3` over `[-2, 2]^n`, independent
/// of the window beyond level 3.
pub fn collapse_field(d: &BoxDomain, window: ScaleWindow) -> CoefficientField {
    let mut f = CoefficientField::new(*d, window);
    for j in 0..=window.j_max.min(3) {
        for q in cubes_at_level(d, j) {
            let c = q.geometry().center;
            if c.iter().take(d.dim()).all(|x| x.abs() <= 2.0) {
                let r: f64 = c.iter().take(d.dim()).map(|x| x * x).sum::<f64>().sqrt();
                f.set(q, C64::new(1.0 / (1.0 + r + j as f64), 0.0));
            }
        }
    }
    f
}

fn wavelet_job(cfg: &JobConfig, reg: &Registry) -> Result<JobOutput> {
    use limits::RECONSTRUCTION_TOL;
    let d = domain(cfg, reg)?;
    let job = cfg.wavelet.clone().unwrap_or_default();
    let presets = job.presets.unwrap_or_else(|| PRESETS.to_vec());
    let depth = match job.depth {
        Some(k) => k,
        None => full_depth(&d)?,
    };
    let spec = if cfg.spec.is_some() { Some(cfg.space_spec(&d)?) } else { None };
    let bat = battery(cfg, &d, reg, &BatteryId::ALL)?;
    let mut t = Table::new("results", &["preset", "function_id", "depth", "reconstruction_error", "admissible"]);
    let mut failures = Vec::new();
    let mut budgets = Vec::new();
    for p in presets {
        let bank = build_filters(p, None)?;
        let admissible = spec.as_ref().map(|s| check_budgets(&bank, s));
        budgets.push(json!({
            "preset": p,
            "budgets": format!("{:?}", bank.budgets),
            "violations": admissible.as_ref().map(|r| r.violations()),
        }));
        let errs: Vec<f64> = bat
            .par_iter()
            .map(|b| -> plab_core::Result<f64> {
                let c = forward_transform(&b.f, &bank, depth)?;
                let g = inverse_transform(&c, &bank)?;
                Ok(b.f.values.iter().zip(&g.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
            })
            .collect::<Result<_, _>>()?;
        for (b, e) in bat.iter().zip(errs) {
            t.push(vec![
                p.to_string().into(),
                b.id.as_str().into(),
                depth.into(),
                e.into(),
                admissible.as_ref().map(|r| r.admissible()).into(),
            ]);
            if !(e <= RECONSTRUCTION_TOL) {
                failures.push(format!("{p} on {}: reconstruction error {e}", b.id));
            }
        }
    }
    Ok(JobOutput { tables: vec![t], summary: json!({ "depth": depth, "presets": budgets }), failures })
}

/// Battery members whose spectra are numerically contained in low windows.
pub const BAND_LIMITED: [BatteryId; 6] = [
    BatteryId::GaussMid,
    BatteryId::GaussWide,
    BatteryId::GaussShifted,
    BatteryId::FmOne,
    BatteryId::FmThree,
    BatteryId::RandomBand,
];

fn decompose_job(cfg: &JobConfig, reg: &Registry) -> Result<JobOutput> {
    use limits::SYNTHESIS_FACTOR;
    let d = domain(cfg, reg)?;
    let spec = cfg.space_spec(&d)?;
    let sys = system_for(&d, &spec)?;
    let job = cfg
        .decompose
        .ok_or_else(|| CliError::Config("command decompose needs a `decompose` block".into()))?;
    let mut block = BlockSpec::minimal_for(&spec, job.kind);
    if let Some(l) = job.moment_order {
        block.l = l;
        block.n = block.n.max(l as f64 + spec.w.class.alpha3 + spec.space.declared.delta + 2.0 * d.dim() as f64 + 1.0);
    }
    let bat = battery(cfg, &d, reg, &BAND_LIMITED)?;
    let rows: Vec<_> = bat
        .iter()
        .map(|b| -> plab_core::Result<_> {
            let norm = space_norm(&b.f, &spec, &sys)?;
            let an = analyze(&b.f, &spec, block.l)?;
            let syn = synthesize(&an.lambda, &an.blocks, &block, &spec, &sys)?;
            Ok((norm, syn))
        })
        .collect();
    let mut t = Table::new(
        "results",
        &[
            "function_id",
            "space_norm",
            "coeff_norm",
            "coeff_ratio",
            "synthesis_ratio",
            "worst_moment",
            "size_constant",
            "decay_constant",
            "error",
        ],
    );
    let mut failures = Vec::new();
    for (b, r) in bat.iter().zip(rows) {
        match r {
            Ok((norm, syn)) => {
                let synth_ratio = syn.space_norm / norm;
                let wb = syn.worst_block.as_ref();
                t.push(vec![
                    b.id.as_str().into(),
                    norm.into(),
                    syn.coeff_norm.into(),
                    (syn.coeff_norm / norm).into(),
                    synth_ratio.into(),
                    syn.worst_moment.into(),
                    wb.map(|w| w.normalization()).into(),
                    wb.and_then(|w| w.decay_constant).into(),
                    Cell::Empty,
                ]);
                if !(synth_ratio >= 1.0 / SYNTHESIS_FACTOR && synth_ratio <= SYNTHESIS_FACTOR) {
                    failures.push(format!("{}: synthesis ratio {synth_ratio}", b.id));
                }
            }
            Err(e) => {
                failures.push(format!("{}: {e}", b.id));
                let mut row = vec![b.id.as_str().into()];
                row.extend(std::iter::repeat(Cell::Empty).take(7));
                row.push(e.to_string().into());
                t.push(row);
            }
        }
    }
    Ok(JobOutput { tables: vec![t], summary: json!({ "spec": spec, "block": block }), failures })
}
