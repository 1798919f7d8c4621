//! One runner per scenario kind. Each returns checks, tables and snapshots;
//! writing them is left to the caller.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, ScenarioKind};
use super::output::{Check, Snapshot, Table};
use crate::anisotropy::{AnisotropyModel, MollifiedAnisotropy, SmoothDensity};
use crate::conjugate;
use crate::error::Result;
use crate::evolution::{self, EvolutionConfig};
use crate::facet::{self, Mask, PairOfSets};
use crate::grid::{self, Grid, GridFunction, GridVectorField};
use crate::linalg::{self, Vec2};
use crate::resolvent::{self, GapTolerance, ResolventConfig};
use crate::speed::SpeedLaw;

#[derive(Default)]
pub struct RunData {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub snapshots: Vec<Snapshot>,
}

impl RunData {
    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn snapshot(&mut self, file: &str, time: f64, data: GridFunction) {
        self.snapshots.push(Snapshot { file: file.to_string(), time, data });
    }
}

pub(crate) fn dispatch(cfg: &ScenarioConfig) -> Result<RunData> {
    match cfg.kind {
        ScenarioKind::AnisotropyCheck => anisotropy_check(cfg),
        ScenarioKind::Resolvent => resolvent_run(cfg),
        ScenarioKind::Curvature => curvature_run(cfg),
        ScenarioKind::Monotonicity => monotonicity_run(cfg),
        ScenarioKind::Evolve => evolve_run(cfg),
        ScenarioKind::Compare => compare_run(cfg),
        ScenarioKind::Barrier => barrier_run(cfg),
        ScenarioKind::ViscosityTest => viscosity_run(cfg),
    }
}

fn grid_of(cfg: &ScenarioConfig) -> Result<Grid> {
    Grid::new(cfg.integer("grid.dim") as usize, cfg.integer("grid.n") as usize)
}

fn anisotropy_of(cfg: &ScenarioConfig) -> Result<AnisotropyModel> {
    AnisotropyModel::by_name(cfg.text("anisotropy.kind"), cfg.integer("grid.dim") as usize, None)
}

fn law_of(cfg: &ScenarioConfig) -> Result<SpeedLaw> {
    SpeedLaw::by_name(cfg.text("speed.law"), cfg.float("speed.driving"))
}

fn center_distance(g: &Grid, x: Vec2) -> f64 {
    let c = if g.dim() == 1 { [0.5, 0.0] } else { [0.5, 0.5] };
    grid::torus_distance(x, c)
}

/// Random trigonometric polynomial with decaying modes, zero mean.
pub fn random_field(g: Grid, amplitude: f64, rng: &mut impl Rng) -> GridFunction {
    let modes: Vec<(f64, f64, f64, f64)> = (1..=4)
        .map(|k| (k as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let dim = g.dim();
    GridFunction::from_fn(g, |x| {
        modes
            .iter()
            .map(|&(k, a, b, c)| {
                let sx = a * (TAU * k * x[0]).sin() + b * (TAU * k * x[0]).cos();
                let sy = if dim == 2 { c * (TAU * k * x[1]).sin() + a * b * (TAU * k * (x[0] + x[1])).cos() } else { 0.0 };
                amplitude * (sx + sy) / (k * k)
            })
            .sum()
    })
}

/// Initial data (or resolvent input) named by `initial.kind`.
pub fn initial_data(cfg: &ScenarioConfig, g: Grid) -> GridFunction {
    let dim = g.dim();
    let amp = cfg.float("initial.amplitude");
    match cfg.text("initial.kind") {
        "tent" => {
            let s = cfg.float("initial.slope");
            GridFunction::from_fn(g, |x| s * (0.5 - center_distance(&g, x)))
        }
        "sin" => GridFunction::from_fn(g, |x| {
            if dim == 1 {
                amp * (TAU * x[0]).sin()
            } else {
                0.5 * amp * ((TAU * x[0]).sin() + (TAU * x[1]).sin())
            }
        }),
        "constant" => GridFunction::constant(g, cfg.float("initial.value")),
        "facet" => {
            let (r, depth) = (cfg.float("initial.radius"), cfg.float("initial.depth"));
            GridFunction::from_fn(g, |x| -(center_distance(&g, x) - r).clamp(0.0, depth))
        }
        "smooth" => GridFunction::from_fn(g, |x| {
            let y = if dim == 2 { (TAU * x[1]).sin() } else { 0.0 };
            amp * (1.5 * (TAU * x[0]).sin() + y)
        }),
        _ => random_field(g, amp, &mut ChaCha8Rng::seed_from_u64(cfg.seed())),
    }
}

/// Ordered pair `u <= v`, touching nowhere by less than `gap`.
pub fn ordered_pair(g: Grid, amplitude: f64, gap: f64, rng: &mut impl Rng) -> (GridFunction, GridFunction) {
    let u = random_field(g, amplitude, rng);
    let lift = random_field(g, amplitude, rng);
    let low = lift.min();
    let v = u.zip_map(&lift, |a, b| a + ((b - low).max(0.0) + gap)).expect("same grid");
    (u, v)
}

fn anisotropy_check(cfg: &ScenarioConfig) -> Result<RunData> {
    let mut out = RunData::default();
    let w = anisotropy_of(cfg)?;
    let dim = w.dim();
    let m = cfg.float("evolve.m");
    let wm = MollifiedAnisotropy::new(w.clone(), m)?;
    let e = wm.ellipticity();
    out.check(Check::at_least("hessian_floor", e.min_eigenvalue, 2.0 / m * (1.0 - 1e-9)));
    out.check(Check::at_most("ellipticity_constant", e.a_m, 1e12));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let law = law_of(cfg)?;
    out.check(Check::at_least("speed_ellipticity", law.sampled_ellipticity(10_000, &mut rng), 1.0));
    let (mut worst_polar, mut worst_fixed, mut worst_above) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..1000 {
        let z = if dim == 1 { [rng.gen_range(-3.0..3.0), 0.0] } else { [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)] };
        let pz = w.project_wulff(z);
        worst_polar = worst_polar.max(w.polar(pz) - 1.0);
        worst_fixed = worst_fixed.max(linalg::norm(linalg::sub(w.project_wulff(pz), pz)));
        let p = linalg::scale(z, 0.5);
        worst_above = worst_above.min(wm.value(p) - w.eval(p));
    }
    out.check(Check::at_most("projection_inside_wulff", worst_polar, 1e-12));
    out.check(Check::at_most("projection_idempotent", worst_fixed, 1e-10));
    out.check(Check::at_least("mollified_above_base", worst_above, -1e-12));
    let mut t = Table::new("anisotropy.csv", &["angle", "w", "polar", "w_m"]);
    let dirs = if dim == 1 { 2 } else { 64 };
    for i in 0..dirs {
        let th = TAU * i as f64 / dirs as f64;
        let e = if dim == 1 { [th.cos().signum(), 0.0] } else { [th.cos(), th.sin()] };
        t.push(vec![th, w.eval(e), w.polar(e), wm.value(e)]);
    }
    out.tables.push(t);
    Ok(out)
}

fn resolvent_run(cfg: &ScenarioConfig) -> Result<RunData> {
    let mut out = RunData::default();
    let g = grid_of(cfg)?;
    let w = anisotropy_of(cfg)?;
    let psi = initial_data(cfg, g);
    let a = cfg.float("resolvent.a");
    let tol = GapTolerance::Relative(cfg.float("resolvent.tolerance"));
    let rc = ResolventConfig::new(a).with_tolerance(tol);
    let rep = resolvent::resolve_singular(&psi, &w, &rc)?;
    out.check(Check::holds("gap_certified", rep.certified));
    out.check(Check::at_most("mean_drift", rep.mean_drift.abs(), 1e-10 * (1.0 + psi.sup_norm())));
    if cfg.text("initial.kind") == "tent" && g.dim() == 1 && cfg.text("anisotropy.kind") == "euclidean" {
        let s = cfg.float("initial.slope");
        let h = g.spacing();
        let ell_target = (2.0 * a / s).sqrt();
        let drop_target = (2.0 * a * s).sqrt();
        // nodes the resolvent cut below the peak; position error is thr/s
        let thr = 1e-4 * drop_target;
        let cut = (0..g.len()).filter(|&i| psi.get(i) - rep.psi_a.get(i) > thr && psi.get(i) > 0.5 * psi.max()).count();
        let ell = cut as f64 * h / 2.0;
        let drop = psi.max() - rep.psi_a.max();
        out.check(Check::at_most("facet_half_length", (ell - ell_target).abs(), 3.0 * h));
        out.check(Check::at_most("facet_drop", (drop - drop_target).abs() / drop_target, cfg.float("check.tolerance")));
        let mut t = Table::new("resolvent.csv", &["a", "ell", "ell_target", "drop", "drop_target"]);
        t.push(vec![a, ell, ell_target, drop, drop_target]);
        out.tables.push(t);
    }
    let pairs = cfg.integer("resolvent.pairs");
    if pairs > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
        let mut worst = 0.0f64;
        let mut t = Table::new("comparison.csv", &["pair", "violation", "gap_lower", "gap_upper"]);
        for k in 0..pairs {
            let (u, v) = ordered_pair(g, cfg.float("initial.amplitude"), 0.0, &mut rng);
            let ru = resolvent::resolve_singular(&u, &w, &rc)?;
            let rv = resolvent::resolve_singular(&v, &w, &rc)?;
            let viol = resolvent::comparison_violation(&ru, &rv);
            worst = worst.max(viol);
            t.push(vec![k as f64, viol, ru.gap, rv.gap]);
        }
        out.tables.push(t);
        out.check(Check::at_most("comparison_violation", worst, 1e-6));
    }
    out.snapshot("psi.grid", 0.0, psi);
    out.snapshot("psi_a.grid", a, rep.psi_a);
    Ok(out)
}

fn curvature_run(cfg: &ScenarioConfig) -> Result<RunData> {
    let mut out = RunData::default();
    let g = grid_of(cfg)?;
    let w = anisotropy_of(cfg)?;
    let psi = initial_data(cfg, g);
    let a_list = cfg.floats("resolvent.a_list");
    let base = ResolventConfig::new(a_list[0]).with_tolerance(GapTolerance::Relative(cfg.float("resolvent.tolerance")));
    let (q, diag) = resolvent::curvature_extrapolated(&psi, &w, a_list, &base)?;
    out.check(Check::holds("gap_certified", diag.certified));
    let tol = cfg.float("check.tolerance");
    match cfg.text("initial.kind") {
        "facet" if cfg.text("anisotropy.kind") == "euclidean" => {
            let r = cfg.float("initial.radius");
            let target = -(g.dim() as f64) / r;
            let facet = resolvent::support_facet(&psi);
            out.check(Check::at_least("facet_nodes", facet.count() as f64, 1.0));
            let dev = (0..g.len()).filter(|&i| facet.get(i)).map(|i| ((q.get(i) - target) / target).abs()).fold(0.0, f64::max);
            out.check(Check::at_most("facet_curvature", dev, tol));
        }
        "smooth" | "sin" => {
            let gp = grid::gradient_fd(&psi);
            let flux = GridVectorField::from_fn(g, |i| w.grad(gp.at(i)).unwrap_or([0.0, 0.0]));
            let expect = grid::divergence_fd(&flux);
            let gmax = (0..g.len()).map(|i| linalg::norm(gp.at(i))).fold(0.0, f64::max);
            let (mut num, mut den) = (0.0, 0.0);
            for i in (0..g.len()).filter(|&i| linalg::norm(gp.at(i)) >= 0.3 * gmax) {
                num += (q.get(i) - expect.get(i)).powi(2);
                den += expect.get(i).powi(2);
            }
            out.check(Check::at_most("smooth_curvature", (num / den).sqrt(), tol));
        }
        _ => {}
    }
    let mut t = Table::new("curvature.csv", &["a", "gap", "iterations", "cauchy"]);
    for (k, &a) in diag.a.iter().enumerate() {
        let cauchy = if k == 0 { f64::NAN } else { diag.cauchy[k - 1] };
        t.push(vec![a, diag.gaps[k], diag.iterations[k] as f64, cauchy]);
    }
    out.tables.push(t);
    out.snapshot("psi.grid", 0.0, psi);
    out.snapshot("curvature.grid", *a_list.last().expect("validated"), q);
    Ok(out)
}

fn radial_support(g: Grid, r: f64, w: &AnisotropyModel) -> Result<facet::SupportFunctionCertificate> {
    let minus = Mask::from_fn(g, |x| center_distance(&g, x) > r);
    facet::support_from_smooth_pair(&PairOfSets::new(minus, Mask::empty(g))?, w)
}

fn monotonicity_run(cfg: &ScenarioConfig) -> Result<RunData> {
    let mut out = RunData::default();
    let g = grid_of(cfg)?;
    let w = anisotropy_of(cfg)?;
    let (r1, r2) = (cfg.float("initial.radius"), cfg.float("monotonicity.outer_radius"));
    let small = radial_support(g, r1, &w)?;
    let large = radial_support(g, r2, &w)?;
    let a_list = cfg.floats("resolvent.a_list");
    let base = ResolventConfig::new(a_list[0]).with_tolerance(GapTolerance::Relative(cfg.float("resolvent.tolerance")));
    let rep = resolvent::monotonicity_check(&small, &large, 0.5 * (r2 - r1), &w, a_list, &base)?;
    out.check(Check::holds("gap_certified", rep.certified));
    out.check(Check::at_least("common_facet_nodes", rep.nodes as f64, 1.0));
    out.check(Check::at_least("relative_margin", rep.relative_margin, -cfg.float("check.tolerance")));
    let mut t = Table::new("monotonicity.csv", &["nodes", "worst_margin", "value_scale", "relative_margin"]);
    t.push(vec![rep.nodes as f64, rep.worst_margin, rep.value_scale, rep.relative_margin]);
    out.tables.push(t);
    out.snapshot("psi_inner.grid", 0.0, small.psi);
    out.snapshot("psi_outer.grid", 0.0, large.psi);
    Ok(out)
}

fn evolution_config(cfg: &ScenarioConfig, w: &AnisotropyModel, m: f64) -> Result<EvolutionConfig> {
    Ok(EvolutionConfig::new(w, m, law_of(cfg)?, cfg.float("evolve.final_time"))?
        .with_cfl(cfg.float("evolve.cfl"))
        .with_cadence(cfg.integer("evolve.snapshots") as usize))
}

fn evolve_run(cfg: &ScenarioConfig) -> Result<RunData> {
    let mut out = RunData::default();
    let g = grid_of(cfg)?;
    let w = anisotropy_of(cfg)?;
    let u0 = initial_data(cfg, g);
    let ec = evolution_config(cfg, &w, cfg.float("evolve.m"))?;
    let tr = evolution::evolve(&u0, &ec)?;
    let lip = evolution::lipschitz_monitor(&tr);
    out.check(Check::at_most("lipschitz", lip.max, lip.bound));
    if matches!(ec.law, SpeedLaw::TvFlow) {
        let drift = (tr.final_state().mean() - u0.mean()).abs();
        out.check(Check::at_most("mass_drift", drift, 1e-12 * (1.0 + u0.sup_norm())));
    }
    if cfg.text("initial.kind") == "constant" {
        let expect = u0.get(0) - ec.law.eval([0.0, 0.0], 0.0) * ec.final_time;
        let dev = tr.final_state().values().iter().map(|v| (v - expect).abs()).fold(0.0, f64::max);
        out.check(Check::at_most("constant_drift", dev, 1e-12 * (1.0 + expect.abs())));
    }
    let m_list = cfg.floats("evolve.m_list");
    if !m_list.is_empty() {
        let st = evolution::m_stability(&u0, &w, &ec.law, cfg.float("evolve.final_time"), cfg.integer("evolve.snapshots") as usize, m_list)?;
        out.check(Check::holds("m_stability_decreasing", st.strictly_decreasing));
        let mut t = Table::new("stability.csv", &["m", "sup_difference"]);
        for (m, d) in st.m.iter().zip(&st.sup_differences) {
            t.push(vec![*m, *d]);
        }
        out.tables.push(t);
    }
    let mut t = Table::new("monitor.csv", &["time", "lipschitz", "min", "max", "mean"]);
    for r in &tr.monitor {
        t.push(vec![r.time, r.lipschitz, r.min, r.max, r.mean]);
    }
    out.tables.push(t);
    out.snapshot("u_0000.grid", 0.0, tr.initial.clone());
    for (k, (t, u)) in tr.times.iter().zip(&tr.snapshots).enumerate() {
        out.snapshot(&format!("u_{:04}.grid", k + 1), *t, u.clone());
    }
    Ok(out)
}

fn compare_run(cfg: &ScenarioConfig) -> Result<RunData> {
    let mut out = RunData::default();
    let g = grid_of(cfg)?;
    let w = anisotropy_of(cfg)?;
    let ec = evolution_config(cfg, &w, cfg.float("evolve.m"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut t = Table::new("compare.csv", &["pair", "max_crossing", "worst_time", "steps"]);
    let mut worst = 0.0f64;
    for k in 0..cfg.integer("compare.pairs") {
        let (u, v) = ordered_pair(g, cfg.float("initial.amplitude"), 0.0, &mut rng);
        let rep = evolution::comparison_harness(&u, &v, &ec)?;
        worst = worst.max(rep.max_crossing);
        t.push(vec![k as f64, rep.max_crossing, rep.worst_time, rep.steps as f64]);
    }
    out.tables.push(t);
    out.check(Check::at_most("max_crossing", worst, 10.0 * g.spacing()));
    Ok(out)
}

fn barrier_run(cfg: &ScenarioConfig) -> Result<RunData> {
    let mut out = RunData::default();
    let g = grid_of(cfg)?;
    let w = anisotropy_of(cfg)?;
    let law = law_of(cfg)?;
    let (delta, k) = (cfg.float("barrier.delta"), cfg.float("barrier.k"));
    let choice = conjugate::choose_parameters(delta, k, &w)?;
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    out.check(Check::at_most("a_constant", rel(choice.a, delta / (8.0 * choice.mu)), 1e-12));
    out.check(Check::at_most("q_constant", rel(choice.q, 8.0 * k / delta), 1e-12));
    let lower = choice.lower_bound_checks.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    out.check(Check::at_least("conjugate_lower_bound", lower, 2.0 * k));
    let fam = conjugate::barrier_from_parameters(&choice, &w, &law)?;
    let lemma = fam.verify(cfg.integer("barrier.samples") as usize, 100, 1.5 * delta, cfg.seed())?;
    out.check(Check::at_most("gradient_violations", lemma.gradient_violations as f64, 0.0));
    out.check(Check::at_most("operator_violations", lemma.operator_violations as f64, 0.0));
    out.check(Check::at_most("hessian_identity", lemma.max_hessian_identity_error, 1e-3));
    let xi0 = if g.dim() == 1 { [0.5, 0.0] } else { [0.5, 0.5] };
    let ec = EvolutionConfig::new(&w, fam.m(), law, cfg.float("evolve.final_time"))?
        .with_cfl(cfg.float("evolve.cfl"))
        .with_cadence(cfg.integer("evolve.snapshots") as usize);
    let sup = evolution::barrier_supersolution_check(&fam, &ec, g, xi0)?;
    out.check(Check::at_most("evolved_excess", sup.evolved_excess, sup.tolerance));
    let mut t = Table::new("barrier.csv", &["x", "conjugate"]);
    let n = g.resolution();
    let row = if g.dim() == 1 { 0 } else { n / 2 };
    for i in 0..n {
        let idx = g.index([i, row]);
        let x = g.point(idx);
        t.push(vec![x[0], fam.upper(x, 0.0, xi0, 0.0)]);
    }
    out.tables.push(t);
    Ok(out)
}

fn viscosity_run(cfg: &ScenarioConfig) -> Result<RunData> {
    let mut out = RunData::default();
    let g = grid_of(cfg)?;
    let w = anisotropy_of(cfg)?;
    let law = law_of(cfg)?;
    let u0 = initial_data(cfg, g);
    let ec = evolution_config(cfg, &w, cfg.float("evolve.m"))?;
    if ec.snapshot_times.len() < 3 {
        return Err(crate::Error::Config("viscosity-test needs evolve.snapshots >= 3".into()));
    }
    let tr = evolution::evolve(&u0, &ec)?;
    let k = tr.times.len() / 2;
    let t_hat = tr.times[k];
    let s = cfg.float("initial.slope");
    let eta = cfg.float("viscosity.eta");
    let h = g.spacing();
    let ell = (2.0 * t_hat / s).sqrt();
    let half = ell + eta + 8.0 * h;
    let minus = Mask::from_fn(g, |x| (x[0] - 0.5).abs() > half);
    let cert = facet::support_from_smooth_pair(&PairOfSets::new(minus, Mask::empty(g))?, &w)?;
    let slope = (tr.snapshots[k + 1].max() - tr.snapshots[k - 1].max()) / (tr.times[k + 1] - tr.times[k - 1]);
    let time = evolution::viscosity::TimePart { slope, curvature: 1e5 };
    let rep = evolution::viscosity::faceted_test_residual(&tr, &cert, &w, &law, time, [0.5, 0.0], t_hat, eta, cfg.floats("resolvent.a_list"))?;
    out.check(Check::at_most("faceted_residual", rep.residual, 1e-9));
    let mut t = Table::new("faceted.csv", &["delta", "essinf_curvature", "residual"]);
    for &(d, inf, r) in &rep.sweep {
        t.push(vec![d, inf, r]);
    }
    out.tables.push(t);
    out.snapshot("u_hat.grid", t_hat, tr.snapshots[k].clone());
    out.snapshot("psi.grid", 0.0, cert.psi);
    Ok(out)
}
