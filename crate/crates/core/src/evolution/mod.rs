//! Explicit time stepping for `u_t + F(∇u, L_m u) = 0` with the divergence
//! form `L_m u = div⁻ ∇W_m(∇⁺u)`, plus monitors and harnesses.

mod flux;
mod harness;
pub mod viscosity;

use serde::Serialize;

pub use flux::{base_flux, BaseFlux, MollifiedFlux};
pub use harness::{
    barrier_supersolution_check, comparison_harness, initial_trace_check, lipschitz_monitor, m_stability, BarrierCheckReport,
    ComparisonReport, InitialTraceReport, LipschitzReport, StabilityReport,
};

use crate::anisotropy::{AnisotropyModel, MollifiedAnisotropy};
use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction};
use crate::speed::SpeedLaw;

#[derive(Clone, Debug)]
pub struct EvolutionConfig {
    pub law: SpeedLaw,
    pub final_time: f64,
    /// Safety factor on the monotone step, in `(0, 1)`.
    pub c_cfl: f64,
    /// Strictly increasing, ending at `final_time`.
    pub snapshot_times: Vec<f64>,
    /// Approximate number of monitor rows over the run.
    pub monitor_rows: usize,
    density: MollifiedAnisotropy,
    flux: MollifiedFlux,
}

impl EvolutionConfig {
    pub fn new(w: &AnisotropyModel, m: f64, law: SpeedLaw, final_time: f64) -> Result<Self> {
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {final_time}")));
        }
        Ok(EvolutionConfig {
            law,
            final_time,
            c_cfl: 0.9,
            snapshot_times: vec![final_time],
            monitor_rows: 200,
            density: MollifiedAnisotropy::new(w.clone(), m)?,
            flux: MollifiedFlux::new(w, m)?,
        })
    }

    pub fn with_cfl(mut self, c: f64) -> Self {
        self.c_cfl = c;
        self
    }

    /// `k` equally spaced snapshots.
    pub fn with_cadence(mut self, k: usize) -> Self {
        let k = k.max(1);
        self.snapshot_times = (1..=k).map(|i| self.final_time * i as f64 / k as f64).collect();
        self
    }

    /// Explicit snapshot times; `final_time` is appended when missing.
    pub fn with_snapshot_times(mut self, mut times: Vec<f64>) -> Result<Self> {
        if times.last().map_or(true, |&t| t < self.final_time) {
            times.push(self.final_time);
        }
        if times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) || *times.last().expect("non-empty") > self.final_time {
            return Err(Error::InvalidArgument("snapshot times must increase within (0, T]".into()));
        }
        self.snapshot_times = times;
        Ok(self)
    }

    pub fn with_monitor_rows(mut self, rows: usize) -> Self {
        self.monitor_rows = rows.max(1);
        self
    }

    pub fn m(&self) -> f64 {
        self.density.m()
    }

    pub fn anisotropy(&self) -> &AnisotropyModel {
        self.density.base()
    }

    pub fn a_m(&self) -> f64 {
        self.density.a_m()
    }

    pub fn density(&self) -> &MollifiedAnisotropy {
        &self.density
    }

    pub fn flux(&self) -> &MollifiedFlux {
        &self.flux
    }

    /// Monotone step `c h² / (2n a_m Λ_F)` for gradients up to `p_max`.
    pub fn time_step(&self, grid: &Grid, p_max: f64) -> Result<f64> {
        if !(self.c_cfl > 0.0 && self.c_cfl < 1.0) {
            return Err(Error::Cfl(format!("safety factor {} outside (0, 1)", self.c_cfl)));
        }
        let lambda = self.law.xi_slope_bound(p_max);
        let h = grid.spacing();
        if lambda == 0.0 {
            return Ok(self.final_time);
        }
        let dt = self.c_cfl * h * h / (2.0 * grid.dim() as f64 * self.a_m() * lambda);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Cfl(format!("time step {dt:e} from a_m {} and Λ_F {lambda}", self.a_m())));
        }
        Ok(dt)
    }
}

/// One monitor record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonitorRow {
    pub time: f64,
    pub lipschitz: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl MonitorRow {
    fn of(time: f64, u: &GridFunction) -> Self {
        MonitorRow { time, lipschitz: grid::lipschitz_constant(u), min: u.min(), max: u.max(), mean: u.mean() }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionTrace {
    pub initial: GridFunction,
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    pub monitor: Vec<MonitorRow>,
    pub dt: f64,
    pub steps: usize,
    pub m: f64,
    pub a_m: f64,
}

impl EvolutionTrace {
    pub fn grid(&self) -> &Grid {
        self.initial.grid()
    }

    pub fn final_state(&self) -> &GridFunction {
        self.snapshots.last().expect("at least one snapshot")
    }

    /// Snapshot at `t` (exact match up to `1e-12` relative), `t = 0` giving the initial data.
    pub fn at_time(&self, t: f64) -> Option<&GridFunction> {
        if t == 0.0 {
            return Some(&self.initial);
        }
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * s.max(1.0)).map(|k| &self.snapshots[k])
    }
}

/// Reusable buffers for the explicit update.
pub struct Stepper<'a> {
    cfg: &'a EvolutionConfig,
    grid: Grid,
    dt: f64,
    p_limit: f64,
    grad: Vec<Vec<f64>>,
    flux: Vec<Vec<f64>>,
    xi: Vec<f64>,
    steps: usize,
}

impl<'a> Stepper<'a> {
    /// Step size from the largest initial gradient among `data`.
    pub fn new(cfg: &'a EvolutionConfig, data: &[&GridFunction]) -> Result<Self> {
        let grid = *data.first().ok_or_else(|| Error::InvalidArgument("no initial data".into()))?.grid();
        if grid.dim() != cfg.anisotropy().dim() {
            return Err(Error::GridMismatch("anisotropy and grid dimensions differ".into()));
        }
        let mut p0: f64 = 0.0;
        for u in data {
            grid.check_same(u.grid())?;
            if let Some(i) = u.values().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { node: i, step: 0 });
            }
            p0 = p0.max(grid::lipschitz_constant(u));
        }
        // online range with a 2x margin
        let p_limit = 2.0 * p0.max(1.0);
        let dt = cfg.time_step(&grid, p_limit)?;
        let n = grid.len();
        let dim = grid.dim();
        Ok(Stepper {
            cfg,
            grid,
            dt,
            p_limit,
            grad: vec![vec![0.0; n]; dim],
            flux: vec![vec![0.0; n]; dim],
            xi: vec![0.0; n],
            steps: 0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `L_m u` into the internal buffer.
    fn operator(&mut self, u: &[f64]) {
        let dim = self.grid.dim();
        grid::gradient_into(&self.grid, u, &mut self.grad);
        let flux = self.cfg.flux();
        for i in 0..u.len() {
            let p = [self.grad[0][i], if dim == 2 { self.grad[1][i] } else { 0.0 }];
            let g = flux.eval(p);
            for k in 0..dim {
                self.flux[k][i] = g[k];
            }
        }
        grid::divergence_into(&self.grid, &self.flux, &mut self.xi);
    }

    /// `u ← u - dt F(∇u, L_m u)` with `dt` at most the monotone step.
    pub fn step(&mut self, u: &mut [f64], dt: f64) -> Result<()> {
        if dt > self.dt * (1.0 + 1e-12) {
            return Err(Error::Cfl(format!("step {dt:e} exceeds the monotone bound {:e}", self.dt)));
        }
        self.operator(u);
        let dim = self.grid.dim();
        let law = &self.cfg.law;
        let step = self.steps + 1;
        for i in 0..u.len() {
            // centered gradient = average of forward and backward differences
            let mut p = [0.0; 2];
            for k in 0..dim {
                p[k] = 0.5 * (self.grad[k][i] + self.grad[k][self.grid.backward(i, k)]);
            }
            if p[0].abs() > self.p_limit || p[1].abs() > self.p_limit {
                return Err(Error::Cfl(format!("gradient {p:?} at node {i} left the range {} used for the step", self.p_limit)));
            }
            let v = u[i] - dt * law.eval(p, self.xi[i]);
            if !v.is_finite() {
                return Err(Error::NonFinite { node: i, step });
            }
            u[i] = v;
        }
        self.steps = step;
        Ok(())
    }

    /// Advance from `t` to `target`, landing exactly on it.
    pub fn advance(&mut self, u: &mut [f64], t: &mut f64, target: f64) -> Result<()> {
        while *t < target {
            let remaining = target - *t;
            if remaining <= self.dt * (1.0 + 1e-12) {
                self.step(u, remaining)?;
                *t = target;
            } else {
                self.step(u, self.dt)?;
                *t += self.dt;
            }
        }
        Ok(())
    }
}

/// One explicit step of the monotone size.
pub fn step_explicit(u: &GridFunction, cfg: &EvolutionConfig) -> Result<GridFunction> {
    let mut s = Stepper::new(cfg, &[u])?;
    let mut v = u.values().to_vec();
    let dt = s.dt();
    s.step(&mut v, dt)?;
    GridFunction::new(*u.grid(), v)
}

/// `L_m u` in divergence form.
pub fn regularized_operator(u: &GridFunction, cfg: &EvolutionConfig) -> Result<GridFunction> {
    let mut s = Stepper::new(cfg, &[u])?;
    s.operator(u.values());
    GridFunction::new(*u.grid(), s.xi.clone())
}

pub fn evolve(u0: &GridFunction, cfg: &EvolutionConfig) -> Result<EvolutionTrace> {
    let mut stepper = Stepper::new(cfg, &[u0])?;
    let dt = stepper.dt();
    let grid = *u0.grid();
    let total = (cfg.final_time / dt).ceil() as usize + cfg.snapshot_times.len();
    let stride = (total / cfg.monitor_rows.max(1)).max(1);
    let mut u = u0.values().to_vec();
    let mut t = 0.0;
    let mut trace = EvolutionTrace {
        initial: u0.clone(),
        times: Vec::new(),
        snapshots: Vec::new(),
        monitor: vec![MonitorRow::of(0.0, u0)],
        dt,
        steps: 0,
        m: cfg.m(),
        a_m: cfg.a_m(),
    };
    for &ts in &cfg.snapshot_times {
        while t < ts {
            let next = if ts - t > dt * stride as f64 { t + dt * stride as f64 } else { ts };
            let target = if next >= ts { ts } else { next };
            stepper.advance(&mut u, &mut t, target)?;
            if t < ts {
                trace.monitor.push(MonitorRow::of(t, &GridFunction::new(grid, u.clone())?));
            }
        }
        let snap = GridFunction::new(grid, u.clone())?;
        trace.monitor.push(MonitorRow::of(ts, &snap));
        trace.times.push(ts);
        trace.snapshots.push(snap);
    }
    trace.steps = stepper.steps();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euclid(dim: usize) -> AnisotropyModel {
        AnisotropyModel::euclidean(dim).unwrap()
    }

    fn tent(grid: Grid, s: f64) -> GridFunction {
        GridFunction::from_fn(grid, |x| s * (0.5 - (x[0] - 0.5).abs()))
    }

    #[test]
    fn constants_are_stationary() {
        for dim in 1..=2 {
            let g = Grid::new(dim, 32).unwrap();
            let cfg = EvolutionConfig::new(&euclid(dim), 8.0, SpeedLaw::TvFlow, 1e-3).unwrap().with_cadence(3);
            let tr = evolve(&GridFunction::constant(g, 0.4), &cfg).unwrap();
            for s in &tr.snapshots {
                assert!(s.values().iter().all(|&v| v == 0.4));
            }
            assert!(tr.monitor.iter().all(|r| r.lipschitz == 0.0));
        }
    }

    #[test]
    fn constant_drifts_by_driving_speed() {
        let g = Grid::new(1, 64).unwrap();
        let cfg = EvolutionConfig::new(&euclid(1), 8.0, SpeedLaw::Driven { c: 0.7 }, 1e-3).unwrap();
        let u = GridFunction::constant(g, 0.1);
        let v = step_explicit(&u, &cfg).unwrap();
        let dt = Stepper::new(&cfg, &[&u]).unwrap().dt();
        assert!(v.values().iter().all(|&x| (x - (0.1 + 0.7 * dt)).abs() < 1e-15));
        let op = regularized_operator(&u, &cfg).unwrap();
        assert_eq!(op.sup_norm(), 0.0);
    }

    #[test]
    fn adding_constants_commutes() {
        let g = Grid::new(1, 64).unwrap();
        let cfg = EvolutionConfig::new(&euclid(1), 8.0, SpeedLaw::TvFlow, 2e-3).unwrap();
        let u = tent(g, 0.5);
        let a = evolve(&u, &cfg).unwrap();
        let b = evolve(&u.map(|v| v + 0.25), &cfg).unwrap();
        let d = a.final_state().zip_map(b.final_state(), |x, y| y - x - 0.25).unwrap();
        assert!(d.sup_norm() < 1e-14);
    }

    #[test]
    fn mass_is_conserved() {
        let g = Grid::new(2, 32).unwrap();
        let cfg = EvolutionConfig::new(&euclid(2), 4.0, SpeedLaw::TvFlow, 5e-3).unwrap();
        let u = GridFunction::from_fn(g, |x| (6.0 * x[0]).sin() * (2.0 * std::f64::consts::PI * x[1]).cos());
        let tr = evolve(&u, &cfg).unwrap();
        let drift = tr.monitor.iter().map(|r| (r.mean - u.mean()).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-8 * cfg.final_time, "{drift}");
    }

    #[test]
    fn translation_is_bitwise() {
        let g = Grid::new(2, 24).unwrap();
        let cfg = EvolutionConfig::new(&euclid(2), 4.0, SpeedLaw::GraphFlow, 1e-3).unwrap();
        let u = GridFunction::from_fn(g, |x| 0.2 * (2.0 * std::f64::consts::PI * (x[0] + 2.0 * x[1])).sin() + (x[0] - 0.5).abs() * 0.1);
        let a = evolve(&u, &cfg).unwrap();
        let b = evolve(&u.translate([5, -3]), &cfg).unwrap();
        assert_eq!(a.final_state().translate([5, -3]).values(), b.final_state().values());
    }

    #[test]
    fn tent_peak_follows_facet_law() {
        let g = Grid::new(1, 256).unwrap();
        let s = 0.5;
        let cfg = EvolutionConfig::new(&euclid(1), 32.0, SpeedLaw::TvFlow, 4e-3).unwrap().with_snapshot_times(vec![1e-3, 4e-3]).unwrap();
        let tr = evolve(&tent(g, s), &cfg).unwrap();
        for (t, snap) in tr.times.iter().zip(&tr.snapshots) {
            let expect = 0.25 - (2.0 * s * t).sqrt();
            assert!((snap.max() - expect).abs() < 0.05 * expect, "{t} {} {expect}", snap.max());
        }
    }

    #[test]
    fn cfl_errors() {
        let g = Grid::new(1, 32).unwrap();
        let cfg = EvolutionConfig::new(&euclid(1), 8.0, SpeedLaw::TvFlow, 1e-3).unwrap().with_cfl(10.0);
        assert!(matches!(evolve(&tent(g, 0.5), &cfg), Err(Error::Cfl(_))));
        let ok = EvolutionConfig::new(&euclid(1), 8.0, SpeedLaw::TvFlow, 1e-3).unwrap();
        let mut s = Stepper::new(&ok, &[&tent(g, 0.5)]).unwrap();
        let mut v = tent(g, 0.5).values().to_vec();
        let dt = s.dt();
        assert!(matches!(s.step(&mut v, 2.0 * dt), Err(Error::Cfl(_))));
        let blows_up = SpeedLaw::custom("blow_up", 1.0, |_, xi| if xi < 0.0 { f64::INFINITY } else { -xi });
        let cfg = EvolutionConfig::new(&euclid(1), 8.0, blows_up, 1e-3).unwrap();
        // the only concave node of the tent is its peak
        assert!(matches!(evolve(&tent(g, 0.5), &cfg), Err(Error::NonFinite { node: 16, step: 1 })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn one_step_is_monotone(seed in 0u64..10_000) {
            let g = Grid::new(1, 128).unwrap();
            let cfg = EvolutionConfig::new(&euclid(1), 16.0, SpeedLaw::TvFlow, 1.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let lo: Vec<f64> = (0..128).map(|_| rng.gen_range(-0.1..0.1)).collect();
                let hi: Vec<f64> = lo.iter().map(|v| v + rng.gen_range(0.0..0.02)).collect();
                let lo = GridFunction::new(g, lo).unwrap();
                let hi = GridFunction::new(g, hi).unwrap();
                let mut s = Stepper::new(&cfg, &[&lo, &hi]).unwrap();
                let dt = s.dt();
                let mut a = lo.values().to_vec();
                let mut b = hi.values().to_vec();
                s.step(&mut a, dt).unwrap();
                s.step(&mut b, dt).unwrap();
                prop_assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
            }
        }
    }
}
