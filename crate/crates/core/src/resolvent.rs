//! Resolvent `ψ_a = (I + a∂E)⁻¹ψ` of the discrete energy
//! `E(v) = Σ W(∇v) hⁿ` and of its smooth regularization, plus the
//! nonlocal curvature `(ψ_a - ψ)/a` built from it.
//!
//! The singular problem is solved on the dual side:
//! `min_{z ∈ 𝒲} ‖ψ + a div z‖² / (2a)` by accelerated projected gradient
//! with adaptive restart. For `v = ψ + a div z` the duality gap is
//! `Σ (W(∇v) - z·∇v) hⁿ`, which certifies `‖v - ψ_a‖₂ <= sqrt(2a gap)`.

use serde::Serialize;

use crate::anisotropy::{AnisotropyModel, SmoothDensity};
use crate::error::{Error, Result};
use crate::facet::{self, Mask, SupportFunctionCertificate};
use crate::grid::{self, Grid, GridFunction, GridVectorField};
use crate::linalg;

/// Stopping rule for the duality gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GapTolerance {
    /// Certified relative `L²` error of the difference quotient:
    /// `sqrt(2 gap / a) <= tol ‖(ψ_a - ψ)/a‖₂`.
    Relative(f64),
    /// `gap <= tol`
    Absolute(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Algorithm {
    Singular,
    Regularized { m: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolventConfig {
    pub a: f64,
    /// Dual step; `None` uses `1 / (a ‖div‖²)`.
    pub step: Option<f64>,
    pub tolerance: GapTolerance,
    pub max_iterations: usize,
    /// Gap evaluations happen every this many iterations.
    pub check_every: usize,
    pub algorithm: Algorithm,
}

impl ResolventConfig {
    pub fn new(a: f64) -> Self {
        ResolventConfig {
            a,
            step: None,
            tolerance: GapTolerance::Relative(5e-3),
            max_iterations: 200_000,
            check_every: 10,
            algorithm: Algorithm::Singular,
        }
    }

    pub fn with_tolerance(mut self, tolerance: GapTolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    /// Largest dual step with guaranteed descent.
    pub fn max_step(&self, grid: &Grid) -> f64 {
        let h = grid.spacing();
        h * h / (4.0 * grid.dim() as f64 * self.a)
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidArgument(format!("resolvent step a must be positive, got {}", self.a)));
        }
        let tol = match self.tolerance {
            GapTolerance::Relative(t) | GapTolerance::Absolute(t) => t,
        };
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("gap tolerance must be positive".into()));
        }
        if let Some(s) = self.step {
            if !(s > 0.0 && s <= self.max_step(grid) * (1.0 + 1e-12)) {
                return Err(Error::InvalidArgument(format!("dual step {s:e} exceeds 1/(a‖div‖²)")));
            }
        }
        Ok(())
    }

    fn gap_bound(&self, div: &[f64], cell_volume: f64) -> f64 {
        match self.tolerance {
            GapTolerance::Relative(t) => 0.5 * t * t * self.a * div.iter().map(|d| d * d).sum::<f64>() * cell_volume,
            GapTolerance::Absolute(t) => t,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResolventReport {
    pub psi_a: GridFunction,
    /// Dual field; `ψ_a - ψ = a div z`.
    pub z: GridVectorField,
    pub iterations: usize,
    /// Duality gap (singular) or `h`-weighted gradient norm (regularized).
    pub gap: f64,
    pub certified: bool,
    pub mean_drift: f64,
    /// `(ψ_a - ψ) / a`
    pub curvature: GridFunction,
    pub algorithm: Algorithm,
}

impl ResolventReport {
    /// `‖ψ_a - exact‖₂ <= sqrt(2 a gap)` for the singular solver.
    pub fn l2_error_bound(&self, a: f64) -> f64 {
        (2.0 * a * self.gap.max(0.0)).sqrt()
    }
}

/// Duality gap and the rounding floor below which it cannot be resolved.
fn energy_gap(w: &AnisotropyModel, v: &[f64], z: &[Vec<f64>], grid: &Grid, grad: &mut [Vec<f64>]) -> (f64, f64) {
    grid::gradient_into(grid, v, grad);
    let dim = grid.dim();
    let mut s = 0.0;
    let mut scale = 0.0;
    for i in 0..grid.len() {
        let p = [grad[0][i], if dim == 2 { grad[1][i] } else { 0.0 }];
        let zi = [z[0][i], if dim == 2 { z[1][i] } else { 0.0 }];
        let e = w.eval(p);
        let pair = linalg::dot(zi, p);
        s += e - pair;
        scale += e + pair.abs();
    }
    let hv = grid.cell_volume();
    (s * hv, 64.0 * f64::EPSILON * scale * hv)
}

fn project(w: &AnisotropyModel, z: &mut [Vec<f64>], i: usize, dim: usize) {
    let zi = [z[0][i], if dim == 2 { z[1][i] } else { 0.0 }];
    if w.polar(zi) <= 1.0 {
        return;
    }
    let p = w.project_wulff(zi);
    for k in 0..dim {
        z[k][i] = p[k];
    }
}

/// Singular resolvent, optionally warm-started from a dual field.
pub fn resolve_singular_from(
    psi: &GridFunction,
    w: &AnisotropyModel,
    cfg: &ResolventConfig,
    z0: Option<&GridVectorField>,
) -> Result<ResolventReport> {
    let grid = *psi.grid();
    if w.dim() != grid.dim() {
        return Err(Error::GridMismatch("anisotropy and grid dimensions differ".into()));
    }
    cfg.validate(&grid)?;
    let dim = grid.dim();
    let n = grid.len();
    let a = cfg.a;
    let tau = cfg.step.unwrap_or_else(|| cfg.max_step(&grid));
    let f = psi.values();

    let mut z: Vec<Vec<f64>> = match z0 {
        Some(z0) => {
            grid.check_same(z0.grid())?;
            (0..dim).map(|k| z0.component(k).to_vec()).collect()
        }
        None => vec![vec![0.0; n]; dim],
    };
    for i in 0..n {
        project(w, &mut z, i, dim);
    }
    let mut y = z.clone();
    let mut z_prev = z.clone();
    let mut t = 1.0f64;
    let mut u = vec![0.0; n];
    let mut grad = vec![vec![0.0; n]; dim];
    let mut div = vec![0.0; n];

    let mut iterations = 0;
    let evaluate = |z: &[Vec<f64>], div: &mut [f64], u: &mut [f64], grad: &mut [Vec<f64>]| -> (f64, f64) {
        grid::divergence_into(&grid, z, div);
        for i in 0..n {
            u[i] = f[i] + a * div[i];
        }
        let (gap, floor) = energy_gap(w, u, z, &grid, grad);
        (gap, cfg.gap_bound(div, grid.cell_volume()).max(floor))
    };
    let (mut gap, mut bound) = evaluate(&z, &mut div, &mut u, &mut grad);
    while gap > bound && iterations < cfg.max_iterations {
        iterations += 1;
        grid::divergence_into(&grid, &y, &mut div);
        for i in 0..n {
            u[i] = f[i] + a * div[i];
        }
        grid::gradient_into(&grid, &u, &mut grad);
        std::mem::swap(&mut z_prev, &mut z);
        for k in 0..dim {
            for i in 0..n {
                z[k][i] = y[k][i] + tau * grad[k][i];
            }
        }
        for i in 0..n {
            project(w, &mut z, i, dim);
        }
        // restart when the momentum points uphill
        let mut uphill = 0.0;
        for k in 0..dim {
            for i in 0..n {
                uphill += (y[k][i] - z[k][i]) * (z[k][i] - z_prev[k][i]);
            }
        }
        let t_next = if uphill > 0.0 { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let beta = if uphill > 0.0 { 0.0 } else { (t - 1.0) / t_next };
        t = t_next;
        for k in 0..dim {
            for i in 0..n {
                y[k][i] = z[k][i] + beta * (z[k][i] - z_prev[k][i]);
            }
        }
        if iterations % cfg.check_every.max(1) == 0 {
            (gap, bound) = evaluate(&z, &mut div, &mut u, &mut grad);
        }
    }
    (gap, bound) = evaluate(&z, &mut div, &mut u, &mut grad);
    let psi_a = GridFunction::from_vec_unchecked(grid, u);
    let mean_drift = (psi_a.mean() - psi.mean()).abs();
    let curvature = GridFunction::from_vec_unchecked(grid, div);
    if psi_a.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node: 0, step: iterations });
    }
    Ok(ResolventReport {
        psi_a,
        z: GridVectorField::new(grid, z)?,
        iterations,
        gap,
        certified: gap <= bound,
        mean_drift,
        curvature,
        algorithm: Algorithm::Singular,
    })
}

pub fn resolve_singular(psi: &GridFunction, w: &AnisotropyModel, cfg: &ResolventConfig) -> Result<ResolventReport> {
    resolve_singular_from(psi, w, cfg, None)
}

/// Stopping rule of the Newton solver: `‖gradient‖₂ <= tol`, `h`-weighted.
const NEWTON_TOLERANCE: f64 = 1e-10;

/// Resolvent for a smooth density by damped Newton with conjugate gradients.
pub fn resolve_regularized(psi: &GridFunction, density: &dyn SmoothDensity, cfg: &ResolventConfig) -> Result<ResolventReport> {
    let grid = *psi.grid();
    if density.dim() != grid.dim() {
        return Err(Error::GridMismatch("density and grid dimensions differ".into()));
    }
    cfg.validate(&grid)?;
    let a = cfg.a;
    let dim = grid.dim();
    let n = grid.len();
    let hv = grid.cell_volume();
    let f = psi.values();
    let mut v = f.to_vec();
    let mut grad = vec![vec![0.0; n]; dim];
    let mut flux = vec![vec![0.0; n]; dim];
    let mut div = vec![0.0; n];

    // objective, residual g = -div ∇W(∇v) + (v - ψ)/a, and node Hessians
    let assemble = |v: &[f64], grad: &mut [Vec<f64>], flux: &mut [Vec<f64>], div: &mut [f64], hess: Option<&mut Vec<linalg::Mat2>>| {
        grid::gradient_into(&grid, v, grad);
        let mut energy = 0.0;
        let mut hs = hess;
        for i in 0..n {
            let p = [grad[0][i], if dim == 2 { grad[1][i] } else { 0.0 }];
            energy += density.value(p);
            let g = density.gradient(p);
            for k in 0..dim {
                flux[k][i] = g[k];
            }
            if let Some(h) = hs.as_deref_mut() {
                h[i] = density.hessian(p);
            }
        }
        grid::divergence_into(&grid, flux, div);
        let mut fit = 0.0;
        let res: Vec<f64> = (0..n)
            .map(|i| {
                fit += (v[i] - f[i]).powi(2);
                -div[i] + (v[i] - f[i]) / a
            })
            .collect();
        ((energy + fit / (2.0 * a)) * hv, res)
    };
    let norm_h = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() * hv).sqrt();
    let mut hess = vec![linalg::ZERO_MAT; n];
    let (mut obj, mut res) = assemble(&v, &mut grad, &mut flux, &mut div, Some(&mut hess));
    let mut iterations = 0;
    let mut gnorm = norm_h(&res);
    let tol = NEWTON_TOLERANCE * (1.0 + psi.l2_norm() / a);
    let mut d = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut pdir = vec![0.0; n];
    let mut hp = vec![0.0; n];
    let mut gd = vec![vec![0.0; n]; dim];
    let mut fl = vec![vec![0.0; n]; dim];
    let mut dv = vec![0.0; n];
    while gnorm > tol && iterations < cfg.max_iterations.min(200) {
        iterations += 1;
        // Hessian action: d ↦ -div(∇²W ∇d) + d/a
        let mut apply = |x: &[f64], out: &mut [f64]| {
            grid::gradient_into(&grid, x, &mut gd);
            for i in 0..n {
                let q = [gd[0][i], if dim == 2 { gd[1][i] } else { 0.0 }];
                let hq = linalg::mat_vec(&hess[i], q);
                for k in 0..dim {
                    fl[k][i] = hq[k];
                }
            }
            grid::divergence_into(&grid, &fl, &mut dv);
            for i in 0..n {
                out[i] = -dv[i] + x[i] / a;
            }
        };
        // conjugate gradients on H d = -g
        d.iter_mut().for_each(|x| *x = 0.0);
        r.iter_mut().zip(&res).for_each(|(ri, gi)| *ri = -gi);
        pdir.copy_from_slice(&r);
        let mut rr: f64 = r.iter().map(|x| x * x).sum();
        let target = (rr.sqrt() * (0.1f64).min(gnorm.sqrt())).powi(2).max(1e-300);
        for _ in 0..4 * n {
            if rr <= target {
                break;
            }
            apply(&pdir, &mut hp);
            let curv: f64 = pdir.iter().zip(&hp).map(|(a, b)| a * b).sum();
            if curv <= 0.0 {
                break;
            }
            let alpha = rr / curv;
            for i in 0..n {
                d[i] += alpha * pdir[i];
                r[i] -= alpha * hp[i];
            }
            let rr_new: f64 = r.iter().map(|x| x * x).sum();
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                pdir[i] = r[i] + beta * pdir[i];
            }
        }
        let slope: f64 = res.iter().zip(&d).map(|(g, di)| g * di).sum::<f64>() * hv;
        if slope >= 0.0 {
            // fall back to steepest descent
            d.iter_mut().zip(&res).for_each(|(di, gi)| *di = -gi * a);
        }
        let slope: f64 = res.iter().zip(&d).map(|(g, di)| g * di).sum::<f64>() * hv;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let cand: Vec<f64> = v.iter().zip(&d).map(|(x, di)| x + step * di).collect();
            let (o, rs) = assemble(&cand, &mut grad, &mut flux, &mut div, None);
            let closer = norm_h(&rs) < 0.5 * gnorm;
            if o <= obj + 1e-4 * step * slope || closer {
                v = cand;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::LineSearch { iterations, gradient_norm: gnorm });
        }
        let (o, rs) = assemble(&v, &mut grad, &mut flux, &mut div, Some(&mut hess));
        obj = o;
        res = rs;
        gnorm = norm_h(&res);
    }
    let (_, rs) = assemble(&v, &mut grad, &mut flux, &mut div, None);
    let psi_a = GridFunction::new(grid, v).map_err(|_| Error::NonFinite { node: 0, step: iterations })?;
    let curvature = psi_a.zip_map(psi, |x, y| (x - y) / a)?;
    let residual_ok = rs.iter().all(|r| (a * r).abs() <= 1e-6 * (1.0 + psi.sup_norm()));
    Ok(ResolventReport {
        mean_drift: (psi_a.mean() - psi.mean()).abs(),
        psi_a,
        z: GridVectorField::new(grid, flux)?,
        iterations,
        gap: gnorm,
        certified: gnorm <= tol && residual_ok,
        curvature,
        algorithm: Algorithm::Regularized { m: f64::NAN },
    })
}

/// Node-wise `ψ_a - ψ - a div ∇W(∇ψ_a)` for a smooth density.
pub fn regularized_residual(psi: &GridFunction, report: &ResolventReport, density: &dyn SmoothDensity, a: f64) -> f64 {
    let g = grid::gradient_fd(&report.psi_a);
    let flux = GridVectorField::from_fn(*psi.grid(), |i| density.gradient(g.at(i)));
    let div = grid::divergence_fd(&flux);
    (0..psi.grid().len())
        .map(|i| (report.psi_a.get(i) - psi.get(i) - a * div.get(i)).abs())
        .fold(0.0, f64::max)
}

/// Difference quotient `(ψ_a - ψ)/a` of the singular resolvent.
pub fn curvature_dq(psi: &GridFunction, w: &AnisotropyModel, cfg: &ResolventConfig) -> Result<ResolventReport> {
    resolve_singular(psi, w, cfg)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtrapolationDiagnostics {
    pub a: Vec<f64>,
    /// `‖q_k - q_{k+1}‖₂` between consecutive difference quotients.
    pub cauchy: Vec<f64>,
    pub gaps: Vec<f64>,
    pub iterations: Vec<usize>,
    pub certified: bool,
}

/// Default list `1e-2 · 2^-k`, `k = 0..=6`.
pub fn default_a_list() -> Vec<f64> {
    (0..=6).map(|k| 1e-2 * 0.5f64.powi(k)).collect()
}

/// Difference quotients along a decreasing list of steps; returns the one at
/// the smallest step together with the Cauchy gaps.
pub fn curvature_extrapolated(
    psi: &GridFunction,
    w: &AnisotropyModel,
    a_list: &[f64],
    base: &ResolventConfig,
) -> Result<(GridFunction, ExtrapolationDiagnostics)> {
    if a_list.is_empty() || a_list.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidArgument("a-list must be non-empty and strictly decreasing".into()));
    }
    let mut diag = ExtrapolationDiagnostics { a: a_list.to_vec(), cauchy: Vec::new(), gaps: Vec::new(), iterations: Vec::new(), certified: true };
    let mut last: Option<ResolventReport> = None;
    for &a in a_list {
        let cfg = ResolventConfig { a, ..base.clone() };
        let rep = resolve_singular_from(psi, w, &cfg, last.as_ref().map(|r| &r.z))?;
        if let Some(prev) = &last {
            let d = rep.curvature.zip_map(&prev.curvature, |x, y| x - y)?;
            diag.cauchy.push(d.l2_norm());
        }
        diag.gaps.push(rep.gap);
        diag.iterations.push(rep.iterations);
        diag.certified &= rep.certified;
        last = Some(rep);
    }
    Ok((last.expect("non-empty list").curvature, diag))
}

fn ball_values<'a>(curv: &'a GridFunction, center: crate::linalg::Vec2, delta: f64) -> Result<impl Iterator<Item = f64> + 'a> {
    let grid = *curv.grid();
    if delta < grid.spacing() * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("ball radius {delta:e} is below the grid spacing")));
    }
    let c = grid.nearest(center);
    let offsets = grid.ball_offsets(delta);
    Ok(offsets.into_iter().map(move |d| curv.get(grid.offset(c, d))))
}

/// Minimum of the field over the grid ball of radius `delta` around the node nearest `center`.
pub fn essinf_ball(curv: &GridFunction, center: crate::linalg::Vec2, delta: f64) -> Result<f64> {
    Ok(ball_values(curv, center, delta)?.fold(f64::INFINITY, f64::min))
}

pub fn esssup_ball(curv: &GridFunction, center: crate::linalg::Vec2, delta: f64) -> Result<f64> {
    Ok(ball_values(curv, center, delta)?.fold(f64::NEG_INFINITY, f64::max))
}

/// Flat nodes of `ψ` (all axis differences at most `0.1 Lip(ψ) h`), eroded by `2h`.
pub fn facet_interior(psi: &GridFunction) -> Mask {
    let grid = *psi.grid();
    let h = grid.spacing();
    let g = grid::gradient_fd(psi);
    let lip = (0..grid.dim()).flat_map(|k| g.component(k).iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let thr = 0.1 * lip;
    let flat: Vec<bool> = (0..grid.len())
        .map(|i| {
            (0..grid.dim()).all(|k| g.component(k)[i].abs() <= thr && g.component(k)[grid.backward(i, k)].abs() <= thr)
        })
        .collect();
    facet::rho_neighborhood(&Mask::new(grid, flat).expect("grid-sized mask"), -2.0 * h)
}

/// Interior of the zero facet `{ψ = 0}`, eroded by `2h`.
pub fn support_facet(psi: &GridFunction) -> Mask {
    let grid = *psi.grid();
    let zero = Mask::new(grid, psi.values().iter().map(|v| v.abs() <= 1e-12).collect()).expect("grid-sized mask");
    facet_interior(psi).intersection(&facet::rho_neighborhood(&zero, -2.0 * grid.spacing()))
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub nodes: usize,
    /// `min_D (q_H - q_G)`
    pub worst_margin: f64,
    pub worst_node: Option<usize>,
    /// `max_D max(|q_G|, |q_H|)`
    pub value_scale: f64,
    pub relative_margin: f64,
    pub certified: bool,
}

impl MonotonicityReport {
    pub fn passed(&self, relative_tolerance: f64) -> bool {
        self.nodes > 0 && self.relative_margin >= -relative_tolerance
    }
}

/// Curvatures of two strictly ordered support functions, compared on the
/// common zero facet.
pub fn monotonicity_check(
    g: &SupportFunctionCertificate,
    h: &SupportFunctionCertificate,
    delta_sep: f64,
    w: &AnisotropyModel,
    a_list: &[f64],
    base: &ResolventConfig,
) -> Result<MonotonicityReport> {
    let grid = *g.psi.grid();
    grid.check_same(h.psi.grid())?;
    if delta_sep < 2.0 * grid.spacing() * (1.0 - 1e-12) {
        return Err(Error::Precondition("separation must be at least 2h".into()));
    }
    let pg = facet::pair_of(&g.psi);
    let ph = facet::pair_of(&h.psi);
    if !facet::pair_leq(&facet::pair_nbhd(&pg, delta_sep), &ph) {
        return Err(Error::Precondition("pairs are not strictly ordered".into()));
    }
    let (qg, dg) = curvature_extrapolated(&g.psi, w, a_list, base)?;
    let (qh, dh) = curvature_extrapolated(&h.psi, w, a_list, base)?;
    let d = support_facet(&g.psi).intersection(&support_facet(&h.psi));
    let mut rep = MonotonicityReport {
        nodes: d.count(),
        worst_margin: f64::INFINITY,
        worst_node: None,
        value_scale: 0.0,
        relative_margin: 0.0,
        certified: dg.certified && dh.certified,
    };
    for i in (0..grid.len()).filter(|&i| d.get(i)) {
        let m = qh.get(i) - qg.get(i);
        if m < rep.worst_margin {
            rep.worst_margin = m;
            rep.worst_node = Some(i);
        }
        rep.value_scale = rep.value_scale.max(qg.get(i).abs()).max(qh.get(i).abs());
    }
    rep.relative_margin = if rep.value_scale > 0.0 { rep.worst_margin / rep.value_scale } else { 0.0 };
    Ok(rep)
}

/// `max (ψ¹_a - ψ²_a)⁺`
pub fn comparison_violation(lower: &ResolventReport, upper: &ResolventReport) -> f64 {
    lower.psi_a.values().iter().zip(upper.psi_a.values()).map(|(l, u)| (l - u).max(0.0)).fold(0.0, f64::max)
}
