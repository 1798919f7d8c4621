//! Residuals of the conventional and faceted viscosity tests on a computed
//! trace. A non-positive residual is consistent with a subsolution.

use serde::Serialize;

use super::EvolutionTrace;
use crate::anisotropy::AnisotropyModel;
use crate::error::{Error, Result};
use crate::facet::{self, Mask, SupportFunctionCertificate};
use crate::grid::{self, GridFunction};
use crate::linalg::{self, Mat2, Vec2};
use crate::resolvent::{self, ResolventConfig};
use crate::speed::SpeedLaw;

type Field<T> = Box<dyn Fn(Vec2, f64) -> T + Send + Sync>;

/// Smooth space-time test function with its derivatives.
pub struct TestFunction {
    value: Field<f64>,
    gradient: Field<Vec2>,
    hessian: Field<Mat2>,
    time_derivative: Field<f64>,
}

impl TestFunction {
    pub fn new(
        value: impl Fn(Vec2, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(Vec2, f64) -> Vec2 + Send + Sync + 'static,
        hessian: impl Fn(Vec2, f64) -> Mat2 + Send + Sync + 'static,
        time_derivative: impl Fn(Vec2, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian: Box::new(hessian),
            time_derivative: Box::new(time_derivative),
        }
    }
}

/// `k(p, X) = tr(∇²W(p) X)` for `p ≠ 0`.
pub fn k_operator(w: &AnisotropyModel, p: Vec2, x: &Mat2) -> Result<f64> {
    let h = w.hess(p)?;
    Ok(linalg::trace_product(&h, x, w.dim()))
}

fn snapshot_index(trace: &EvolutionTrace, t: f64) -> Result<usize> {
    trace
        .times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-12 * s.max(1.0))
        .ok_or_else(|| Error::Precondition(format!("t = {t} is not a snapshot time")))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConventionalReport {
    pub node: usize,
    pub gradient_norm: f64,
    pub curvature: f64,
    pub residual: f64,
}

/// `φ_t + F(∇φ, k(∇φ, ∇²φ))` at `(x̂, t̂)`, provided `u - φ` has a grid-local
/// maximum there (two-cell ball, neighbouring snapshots).
pub fn conventional_test_residual(
    trace: &EvolutionTrace,
    w: &AnisotropyModel,
    law: &SpeedLaw,
    phi: &TestFunction,
    x_hat: Vec2,
    t_hat: f64,
) -> Result<ConventionalReport> {
    let grid = *trace.grid();
    let k = snapshot_index(trace, t_hat)?;
    let c = grid.nearest(x_hat);
    let x = grid.point(c);
    let p = (phi.gradient)(x, t_hat);
    let gradient_norm = linalg::norm(p);
    if gradient_norm <= 1e-12 {
        return Err(Error::Precondition("test function has zero gradient".into()));
    }
    let diff = |u: &GridFunction, t: f64, j: usize| u.get(j) - (phi.value)(grid.point(j), t);
    let top = diff(&trace.snapshots[k], t_hat, c);
    let tol = 1e-12 * (1.0 + top.abs());
    let mut frames = vec![(&trace.snapshots[k], t_hat)];
    if k > 0 {
        frames.push((&trace.snapshots[k - 1], trace.times[k - 1]));
    } else {
        frames.push((&trace.initial, 0.0));
    }
    if k + 1 < trace.snapshots.len() {
        frames.push((&trace.snapshots[k + 1], trace.times[k + 1]));
    }
    for off in grid.ball_offsets(2.0 * grid.spacing()) {
        let j = grid.offset(c, off);
        for &(u, t) in &frames {
            if diff(u, t, j) > top + tol {
                return Err(Error::Precondition(format!("u - φ has no local maximum at node {c}")));
            }
        }
    }
    let curvature = k_operator(w, p, &(phi.hessian)(x, t_hat))?;
    Ok(ConventionalReport { node: c, gradient_norm, curvature, residual: (phi.time_derivative)(x, t_hat) + law.eval(p, curvature) })
}

/// Time part `g(t) = g(t̂) + g'(t - t̂) + ½ g''(t - t̂)²` of a faceted test function.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TimePart {
    pub slope: f64,
    pub curvature: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FacetedReport {
    pub node: usize,
    pub eta: f64,
    /// `(δ, essinf_{B_δ} curvature, residual)` over the sweep.
    pub sweep: Vec<(f64, f64, f64)>,
    pub delta: f64,
    pub residual: f64,
}

/// `g'(t̂) + F(0, essinf_{B_δ(x̂)} (-∂⁰E(ψ)))`, best over `δ ∈ {3h, 6h, 12h}` below `η`,
/// once `ψ + g` is verified to be in general position of radius `η`.
#[allow(clippy::too_many_arguments)]
pub fn faceted_test_residual(
    trace: &EvolutionTrace,
    cert: &SupportFunctionCertificate,
    w: &AnisotropyModel,
    law: &SpeedLaw,
    g: TimePart,
    x_hat: Vec2,
    t_hat: f64,
    eta: f64,
    a_list: &[f64],
) -> Result<FacetedReport> {
    let grid = *trace.grid();
    grid.check_same(cert.psi.grid())?;
    let h = grid.spacing();
    if eta < 3.0 * h * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("radius η = {eta} is below 3h")));
    }
    let k = snapshot_index(trace, t_hat)?;
    let c = grid.nearest(x_hat);
    let closure = facet::rho_neighborhood(&cert.pair.minus().union(cert.pair.plus()), h);
    if !Mask::ball(grid, grid.point(c), eta).is_disjoint(&closure) {
        return Err(Error::Precondition("ball of radius η meets the pair".into()));
    }
    let psi_eta = grid::erode(&cert.psi, eta)?;
    let offset = trace.snapshots[k].get(c) - cert.psi.get(c);
    let gt = |t: f64| offset + g.slope * (t - t_hat) + 0.5 * g.curvature * (t - t_hat).powi(2);
    let frames = std::iter::once((0.0, &trace.initial)).chain(trace.times.iter().copied().zip(&trace.snapshots));
    for (t, u) in frames.filter(|(t, _)| (t - t_hat).abs() <= eta) {
        let gv = gt(t);
        let scale = 1e-12 * (1.0 + u.sup_norm());
        if let Some(j) = (0..grid.len()).find(|&j| u.get(j) - psi_eta.get(j) - gv > scale) {
            return Err(Error::Precondition(format!("not in general position: node {j} at t = {t}")));
        }
    }
    let base = ResolventConfig::new(a_list[0]);
    let (curv, _) = resolvent::curvature_extrapolated(&cert.psi, w, a_list, &base)?;
    let mut sweep = Vec::new();
    for mult in [3.0, 6.0, 12.0] {
        let delta = mult * h;
        if delta >= eta {
            break;
        }
        let inf = resolvent::essinf_ball(&curv, grid.point(c), delta)?;
        sweep.push((delta, inf, g.slope + law.eval([0.0, 0.0], inf)));
    }
    let &(delta, _, residual) = sweep
        .iter()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .ok_or_else(|| Error::Precondition("no admissible δ below η".into()))?;
    Ok(FacetedReport { node: c, eta, sweep, delta, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, EvolutionConfig};
    use crate::facet::PairOfSets;
    use crate::grid::Grid;

    #[test]
    fn driven_profile_has_zero_residual() {
        let g = Grid::new(1, 256).unwrap();
        let w = AnisotropyModel::euclidean(1).unwrap();
        let c = 0.5;
        let law = SpeedLaw::Driven { c };
        let cfg = EvolutionConfig::new(&w, 32.0, law.clone(), 4e-3).unwrap().with_cadence(4);
        let tau = std::f64::consts::TAU;
        let u0 = move |x: f64| 0.2 * (tau * x).sin();
        let tr = evolve(&GridFunction::from_fn(g, |x| u0(x[0])), &cfg).unwrap();
        let (xh, th) = (0.0, 2e-3);
        let big = 1e3;
        let phi = TestFunction::new(
            move |x, t| u0(x[0]) + c * t + big * (x[0] - xh).powi(2) + big * (t - th).powi(2),
            move |x, _| [0.2 * tau * (tau * x[0]).cos() + 2.0 * big * (x[0] - xh), 0.0],
            move |x, _| [[-0.2 * tau * tau * (tau * x[0]).sin() + 2.0 * big, 0.0], [0.0, 0.0]],
            move |_, t| c + 2.0 * big * (t - th),
        );
        let rep = conventional_test_residual(&tr, &w, &law, &phi, [xh, 0.0], th).unwrap();
        assert!(rep.residual.abs() <= 5.0 * g.spacing(), "{rep:?}");
    }

    #[test]
    fn constant_in_time_tilt_is_not_a_touching_function() {
        let g = Grid::new(1, 64).unwrap();
        let w = AnisotropyModel::euclidean(1).unwrap();
        let cfg = EvolutionConfig::new(&w, 8.0, SpeedLaw::TvFlow, 1e-3).unwrap().with_cadence(4);
        let tr = evolve(&GridFunction::constant(g, 0.2), &cfg).unwrap();
        let flat = TestFunction::new(|_, t| 0.2 + t, |_, _| [0.0, 0.0], |_, _| [[0.0; 2]; 2], |_, _| 1.0);
        let r = conventional_test_residual(&tr, &w, &SpeedLaw::TvFlow, &flat, [0.5, 0.0], 5e-4);
        assert!(matches!(r, Err(Error::Precondition(_))));
        let tilted = TestFunction::new(|x, t| 0.2 + t + 0.1 * x[0], |_, _| [0.1, 0.0], |_, _| [[0.0; 2]; 2], |_, _| 1.0);
        let r = conventional_test_residual(&tr, &w, &SpeedLaw::TvFlow, &tilted, [0.5, 0.0], 5e-4);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn peak_facet_of_tent_is_subsolution_side() {
        let g = Grid::new(1, 256).unwrap();
        let w = AnisotropyModel::euclidean(1).unwrap();
        let s = 0.5;
        let cfg = EvolutionConfig::new(&w, 32.0, SpeedLaw::TvFlow, 3e-3).unwrap().with_snapshot_times(vec![1e-3, 1.5e-3, 2e-3, 2.5e-3]).unwrap();
        let tr = evolve(&GridFunction::from_fn(g, |x| s * (0.5 - (x[0] - 0.5).abs())), &cfg).unwrap();
        let t_hat = 2e-3;
        let ell = (2.0 * t_hat / s).sqrt();
        let eta = 0.05;
        // facet of ψ wider than the solution's by η and a margin
        let half = ell + eta + 0.03;
        let minus = Mask::from_fn(g, |x| (x[0] - 0.5).abs() > half);
        let pair = PairOfSets::new(minus, Mask::empty(g)).unwrap();
        let cert = facet::support_from_smooth_pair(&pair, &w).unwrap();
        let k = tr.times.iter().position(|&t| t == t_hat).unwrap();
        let slope = (tr.snapshots[k + 1].max() - tr.snapshots[k - 1].max()) / (tr.times[k + 1] - tr.times[k - 1]);
        let rep = faceted_test_residual(&tr, &cert, &w, &SpeedLaw::TvFlow, TimePart { slope, curvature: 1e5 }, [0.5, 0.0], t_hat, eta, &[1e-3, 5e-4])
            .unwrap();
        assert!(rep.residual <= 1e-9, "{rep:?}");
        // the theory value: -1/ℓ + 1/half
        assert!((rep.residual - (-1.0 / ell + 1.0 / half)).abs() < 0.2 / ell, "{rep:?}");
    }
}
