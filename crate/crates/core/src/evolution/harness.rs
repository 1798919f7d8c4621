use serde::Serialize;

use super::{evolve, EvolutionConfig, EvolutionTrace, Stepper};
use crate::anisotropy::AnisotropyModel;
use crate::conjugate::BarrierFamily;
use crate::error::{Error, Result};
use crate::grid::{self, GridFunction};
use crate::linalg::{self, Vec2};
use crate::speed::SpeedLaw;

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    /// `max_t max_x (u - v)⁺`
    pub max_crossing: f64,
    pub worst_time: f64,
    pub tolerance: f64,
    pub steps: usize,
    pub passed: bool,
}

/// Evolve an ordered pair in lockstep and track the largest crossing.
pub fn comparison_harness(u0: &GridFunction, v0: &GridFunction, cfg: &EvolutionConfig) -> Result<ComparisonReport> {
    u0.grid().check_same(v0.grid())?;
    if let Some(i) = (0..u0.grid().len()).find(|&i| u0.get(i) > v0.get(i)) {
        return Err(Error::Precondition(format!("initial data not ordered at node {i}")));
    }
    let mut s = Stepper::new(cfg, &[u0, v0])?;
    let mut u = u0.values().to_vec();
    let mut v = v0.values().to_vec();
    let mut rep = ComparisonReport {
        max_crossing: 0.0,
        worst_time: 0.0,
        tolerance: 10.0 * u0.grid().spacing(),
        steps: 0,
        passed: false,
    };
    let mut t = 0.0;
    while t < cfg.final_time {
        let dt = s.dt().min(cfg.final_time - t);
        s.step(&mut u, dt)?;
        s.step(&mut v, dt)?;
        t = if dt < s.dt() { cfg.final_time } else { t + dt };
        let c = u.iter().zip(&v).map(|(a, b)| (a - b).max(0.0)).fold(0.0, f64::max);
        if c > rep.max_crossing {
            rep.max_crossing = c;
            rep.worst_time = t;
        }
    }
    rep.steps = s.steps() / 2;
    rep.passed = rep.max_crossing <= rep.tolerance;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub initial: f64,
    pub max: f64,
    pub worst_time: f64,
    pub bound: f64,
    /// Monitor rows never increase the Lipschitz constant.
    pub non_increasing: bool,
    pub passed: bool,
}

/// `Lip(u(t)) <= Lip(u₀)(1 + 1e-3) + 10h` over every monitor row.
pub fn lipschitz_monitor(trace: &EvolutionTrace) -> LipschitzReport {
    let initial = grid::lipschitz_constant(&trace.initial);
    let bound = initial * (1.0 + 1e-3) + 10.0 * trace.grid().spacing();
    let mut rep = LipschitzReport { initial, max: initial, worst_time: 0.0, bound, non_increasing: true, passed: true };
    let mut last = initial;
    for r in &trace.monitor {
        if r.lipschitz > rep.max {
            rep.max = r.lipschitz;
            rep.worst_time = r.time;
        }
        if r.lipschitz > last * (1.0 + 1e-12) {
            rep.non_increasing = false;
        }
        last = r.lipschitz;
    }
    rep.passed = rep.max <= bound;
    rep
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub m: Vec<f64>,
    /// `sup_{t, x} |u_m - u_{2m}|` for each `m`.
    pub sup_differences: Vec<f64>,
    pub strictly_decreasing: bool,
}

/// Self-convergence in the mollification index over snapshot times.
pub fn m_stability(
    u0: &GridFunction,
    w: &AnisotropyModel,
    law: &SpeedLaw,
    final_time: f64,
    snapshots: usize,
    m_list: &[f64],
) -> Result<StabilityReport> {
    if m_list.is_empty() {
        return Err(Error::InvalidArgument("empty m-list".into()));
    }
    let run = |m: f64| -> Result<EvolutionTrace> {
        let cfg = EvolutionConfig::new(w, m, law.clone(), final_time)?.with_cadence(snapshots);
        evolve(u0, &cfg)
    };
    let mut sup_differences = Vec::with_capacity(m_list.len());
    let mut cache: Vec<(f64, EvolutionTrace)> = Vec::new();
    let mut get = |m: f64| -> Result<EvolutionTrace> {
        if let Some((_, t)) = cache.iter().find(|(k, _)| *k == m) {
            return Ok(t.clone());
        }
        let t = run(m)?;
        cache.push((m, t.clone()));
        Ok(t)
    };
    for &m in m_list {
        let a = get(m)?;
        let b = get(2.0 * m)?;
        let mut d: f64 = 0.0;
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            d = d.max(x.zip_map(y, |p, q| p - q)?.sup_norm());
        }
        sup_differences.push(d);
    }
    let strictly_decreasing = sup_differences.windows(2).all(|w| w[1] < w[0]);
    Ok(StabilityReport { m: m_list.to_vec(), sup_differences, strictly_decreasing })
}

#[derive(Clone, Debug, Serialize)]
pub struct InitialTraceReport {
    pub xi0: Vec2,
    pub epsilon: f64,
    pub beta: f64,
    pub times: Vec<f64>,
    /// `u₀(ξ₀) + 2ε + βt - u(ξ₀, t)` per snapshot.
    pub upper_margin: Vec<f64>,
    /// `u(ξ₀, t) - (u₀(ξ₀) - 2ε - βt)` per snapshot.
    pub lower_margin: Vec<f64>,
    /// `max_{t, x} (u - φ⁺)` against the full upper barrier.
    pub upper_excess: f64,
    /// `max_{t, x} (φ⁻ - u)` against the full lower barrier.
    pub lower_excess: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn wrapped(x: Vec2, xi0: Vec2, dim: usize) -> Vec2 {
    let mut d = linalg::sub(x, xi0);
    for v in d.iter_mut().take(dim) {
        *v -= v.round();
    }
    d
}

/// Barriers `u₀(ξ₀) ± (2ε + βt + W*(x - ξ₀))` around the evolution of `u₀`.
pub fn initial_trace_check(
    u0: &GridFunction,
    cfg: &EvolutionConfig,
    barrier: &BarrierFamily,
    xi0: Vec2,
    epsilon: f64,
) -> Result<InitialTraceReport> {
    let grid = *u0.grid();
    let choice = barrier.provenance().ok_or_else(|| Error::Precondition("barrier was not built from chosen parameters".into()))?;
    if (barrier.m() - cfg.m()).abs() > 0.0 {
        return Err(Error::Precondition(format!("barrier index {} differs from the evolution index {}", barrier.m(), cfg.m())));
    }
    if barrier.m() < choice.m0 {
        return Err(Error::Precondition(format!("index {} is below m₀ = {}", barrier.m(), choice.m0)));
    }
    if u0.sup_norm() > choice.k {
        return Err(Error::Precondition(format!("‖u₀‖∞ = {} exceeds K = {}", u0.sup_norm(), choice.k)));
    }
    let c = grid.nearest(xi0);
    let xi0 = grid.point(c);
    let base = u0.get(c);
    let osc = (0..grid.len())
        .filter(|&j| grid.node_distance(c, j) < choice.delta)
        .map(|j| (u0.get(j) - base).abs())
        .fold(0.0, f64::max);
    if osc > epsilon {
        return Err(Error::Precondition(format!("oscillation {osc} on the δ-ball exceeds ε = {epsilon}")));
    }
    if 2.0 * grid.spacing() > choice.delta {
        return Err(Error::Infeasible(format!("δ = {} is below two grid cells", choice.delta)));
    }
    let beta = match barrier.beta() {
        Some(b) => b,
        None => crate::conjugate::beta_aq(&cfg.law, barrier.a(), barrier.q(), grid.dim()).value,
    };
    // beyond δ every periodic copy gives W* >= 2K, so only the near copy matters
    let floor = 2.0 * choice.k;
    let mut wstar = vec![floor; grid.len()];
    for j in 0..grid.len() {
        if grid.node_distance(c, j) < choice.delta {
            let d = wrapped(grid.point(j), xi0, grid.dim());
            wstar[j] = barrier.conjugate(d)?.value.min(floor);
        }
    }
    let trace = evolve(u0, cfg)?;
    let tolerance = 1e-9;
    let mut rep = InitialTraceReport {
        xi0,
        epsilon,
        beta,
        times: trace.times.clone(),
        upper_margin: Vec::new(),
        lower_margin: Vec::new(),
        upper_excess: f64::NEG_INFINITY,
        lower_excess: f64::NEG_INFINITY,
        tolerance,
        passed: false,
    };
    for (&t, u) in trace.times.iter().zip(&trace.snapshots) {
        let shift = 2.0 * epsilon + beta * t;
        rep.upper_margin.push(base + shift - u.get(c));
        rep.lower_margin.push(u.get(c) - (base - shift));
        for j in 0..grid.len() {
            rep.upper_excess = rep.upper_excess.max(u.get(j) - (base + shift + wstar[j]));
            rep.lower_excess = rep.lower_excess.max((base - shift - wstar[j]) - u.get(j));
        }
    }
    rep.passed = rep.upper_margin.iter().chain(&rep.lower_margin).all(|&m| m >= -tolerance)
        && rep.upper_excess <= tolerance
        && rep.lower_excess <= tolerance;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct BarrierCheckReport {
    pub beta: f64,
    /// `min_x β + F(∇W*, 𝓛_m W*)` from the exact conjugate.
    pub analytic_residual: f64,
    /// `min_x β + F(∇φ, L_m φ)` with the grid operator.
    pub discrete_residual: f64,
    pub worst_node: usize,
    /// `max_{t, x} u - φ` for the barrier evolved as initial data.
    pub evolved_excess: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Node-wise supersolution residuals of `φ(x, t) = βt + min_k W*(x + k - ξ₀)`
/// and the evolution of `φ(·, 0)` against it.
pub fn barrier_supersolution_check(barrier: &BarrierFamily, cfg: &EvolutionConfig, grid: crate::grid::Grid, xi0: Vec2) -> Result<BarrierCheckReport> {
    if (barrier.m() - cfg.m()).abs() > 0.0 {
        return Err(Error::Precondition(format!("barrier index {} differs from the evolution index {}", barrier.m(), cfg.m())));
    }
    let beta = match barrier.beta() {
        Some(b) => b,
        None => crate::conjugate::beta_aq(&cfg.law, barrier.a(), barrier.q(), grid.dim()).value,
    };
    let mut phi0 = vec![0.0; grid.len()];
    let mut analytic = f64::INFINITY;
    for (j, v) in phi0.iter_mut().enumerate() {
        let cp = barrier.upper_point(grid.point(j), xi0)?;
        *v = cp.value;
        analytic = analytic.min(beta + cfg.law.eval(cp.gradient, cp.operator));
    }
    let phi0 = GridFunction::new(grid, phi0)?;
    let op = super::regularized_operator(&phi0, cfg)?;
    let centered = grid::centered_gradient(&phi0);
    let mut discrete = f64::INFINITY;
    let mut worst_node = 0;
    for j in 0..grid.len() {
        let r = beta + cfg.law.eval(centered[j], op.get(j));
        if r < discrete {
            discrete = r;
            worst_node = j;
        }
    }
    let trace = evolve(&phi0, cfg)?;
    let mut excess = f64::NEG_INFINITY;
    for (&t, u) in trace.times.iter().zip(&trace.snapshots) {
        for j in 0..grid.len() {
            excess = excess.max(u.get(j) - phi0.get(j) - beta * t);
        }
    }
    let tolerance = 1e-6;
    Ok(BarrierCheckReport {
        beta,
        analytic_residual: analytic,
        discrete_residual: discrete,
        worst_node,
        evolved_excess: excess,
        tolerance,
        passed: analytic >= -tolerance && discrete >= -tolerance && excess <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugate::{barrier_from_parameters, choose_parameters};
    use crate::grid::Grid;

    fn euclid(dim: usize) -> AnisotropyModel {
        AnisotropyModel::euclidean(dim).unwrap()
    }

    #[test]
    fn shifted_copy_keeps_its_gap() {
        let g = Grid::new(1, 64).unwrap();
        let cfg = EvolutionConfig::new(&euclid(1), 8.0, SpeedLaw::TvFlow, 0.01).unwrap();
        let u = GridFunction::from_fn(g, |x| 0.3 * (2.0 * std::f64::consts::PI * x[0]).sin());
        let rep = comparison_harness(&u, &u.map(|v| v + 1.0), &cfg).unwrap();
        assert_eq!(rep.max_crossing, 0.0);
        let same = comparison_harness(&u, &u, &cfg).unwrap();
        assert_eq!(same.max_crossing, 0.0);
        assert!(matches!(comparison_harness(&u.map(|v| v + 1.0), &u, &cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn tent_slope_never_grows() {
        let g = Grid::new(1, 128).unwrap();
        let cfg = EvolutionConfig::new(&euclid(1), 16.0, SpeedLaw::TvFlow, 4e-3).unwrap().with_cadence(4);
        let tr = evolve(&GridFunction::from_fn(g, |x| 0.5 * (0.5 - (x[0] - 0.5).abs())), &cfg).unwrap();
        let rep = lipschitz_monitor(&tr);
        assert!(rep.passed && rep.non_increasing, "{rep:?}");
        assert!(rep.max <= 0.5 + 1e-12);
    }

    #[test]
    fn sin_under_graph_flow_has_non_increasing_gradient() {
        let g = Grid::new(1, 128).unwrap();
        let cfg = EvolutionConfig::new(&euclid(1), 8.0, SpeedLaw::GraphFlow, 5e-3).unwrap();
        let tr = evolve(&GridFunction::from_fn(g, |x| 0.2 * (2.0 * std::f64::consts::PI * x[0]).sin()), &cfg).unwrap();
        let rep = lipschitz_monitor(&tr);
        assert!(rep.passed && rep.non_increasing, "{rep:?}");
    }

    #[test]
    fn stability_differences_shrink() {
        let g = Grid::new(1, 64).unwrap();
        let u = GridFunction::from_fn(g, |x| 0.5 * (0.5 - (x[0] - 0.5).abs()));
        let rep = m_stability(&u, &euclid(1), &SpeedLaw::TvFlow, 2e-3, 2, &[2.0, 4.0, 8.0]).unwrap();
        assert!(rep.strictly_decreasing, "{rep:?}");
    }

    #[test]
    fn constant_data_sits_inside_barriers() {
        let g = Grid::new(1, 64).unwrap();
        let w = euclid(1);
        let choice = choose_parameters(0.25, 1.0, &w).unwrap();
        let barrier = barrier_from_parameters(&choice, &w, &SpeedLaw::TvFlow).unwrap();
        let cfg = EvolutionConfig::new(&w, barrier.m(), SpeedLaw::TvFlow, 1e-3).unwrap().with_cadence(2);
        let rep = initial_trace_check(&GridFunction::constant(g, 0.5), &cfg, &barrier, [0.3, 0.0], 0.05).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.upper_margin.iter().all(|&m| m >= 0.1));
    }
}
