//! Pairs of sets on the grid, ρ-neighborhoods, signed distances and
//! support functions with Cahn–Hoffman certificates.
//!
//! Sets are node sets. Dilation by `ρ > 0` keeps the nodes whose distance
//! to the set is at most `ρ`; erosion is the complement of the dilation of
//! the complement, so the complement duality holds by construction.

use serde::Serialize;

use crate::anisotropy::AnisotropyModel;
use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction, GridVectorField};
use crate::linalg::{self, Vec2};

/// Tie tolerance in squared grid units, shared with the grid balls.
const TIE: f64 = 1e-9;

/// Stand-in for `dist(x, ∅)`; larger than any torus distance.
pub const SATURATION: f64 = 1.0;

/// Membership tolerance used by the certificate audit.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    grid: Grid,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(grid: Grid, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::GridMismatch(format!("mask has {} nodes, grid {}", bits.len(), grid.len())));
        }
        Ok(Mask { grid, bits })
    }

    pub fn empty(grid: Grid) -> Self {
        Mask { grid, bits: vec![false; grid.len()] }
    }

    pub fn full(grid: Grid) -> Self {
        Mask { grid, bits: vec![true; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Vec2) -> bool) -> Self {
        Mask { grid, bits: (0..grid.len()).map(|i| f(grid.point(i))).collect() }
    }

    /// Nodes of the closed ball `|x - center| <= r` on the torus.
    pub fn ball(grid: Grid, center: Vec2, r: f64) -> Self {
        let h = grid.spacing();
        Mask::from_fn(grid, |x| {
            let d = grid::torus_distance(x, center) / h;
            d * d <= (r / h) * (r / h) + TIE
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> Mask {
        Mask { grid: self.grid, bits: self.bits.iter().map(|b| !b).collect() }
    }

    fn combine(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(self.grid, other.grid, "masks live on different grids");
        Mask { grid: self.grid, bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn union(&self, other: &Mask) -> Mask {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Mask) -> Mask {
        self.combine(other, |a, b| a && b)
    }

    pub fn is_subset(&self, other: &Mask) -> bool {
        self.grid == other.grid && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !(a && b))
    }

    /// Euclidean distance from every node to the set, `+inf` for the empty set.
    pub fn distance(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        grid::squared_distance_to(&self.grid, &self.bits).into_iter().map(|d| d.sqrt() * h).collect()
    }

    /// `dist(self, other)`, `+inf` when either set is empty.
    pub fn distance_to(&self, other: &Mask) -> f64 {
        if self.is_empty() || other.is_empty() {
            return f64::INFINITY;
        }
        let d2 = grid::squared_distance_to(&self.grid, &self.bits);
        let best = other.bits.iter().zip(&d2).filter(|(&b, _)| b).map(|(_, &d)| d).fold(f64::INFINITY, f64::min);
        best.sqrt() * self.grid.spacing()
    }
}

/// `𝒰^ρ(A)`: dilation for `ρ > 0`, erosion for `ρ < 0`.
pub fn rho_neighborhood(a: &Mask, rho: f64) -> Mask {
    if rho == 0.0 {
        return a.clone();
    }
    if rho < 0.0 {
        return rho_neighborhood(&a.complement(), -rho).complement();
    }
    let r = rho / a.grid.spacing();
    let bound = r * r + TIE;
    let d2 = grid::squared_distance_to(&a.grid, &a.bits);
    Mask { grid: a.grid, bits: d2.iter().map(|&d| d <= bound).collect() }
}

/// Signed distance `d_A = dist(·, A) - dist(·, A^c)`.
#[derive(Clone, Debug)]
pub struct SignedDistance {
    pub function: GridFunction,
    /// `A` or its complement was empty and the values were clamped to
    /// `±SATURATION`.
    pub saturated: bool,
}

pub fn signed_distance(a: &Mask) -> SignedDistance {
    let outside = a.distance();
    let inside = a.complement().distance();
    let mut saturated = false;
    let values = outside
        .iter()
        .zip(&inside)
        .map(|(&o, &i)| {
            if !o.is_finite() || !i.is_finite() {
                saturated = true;
            }
            o.min(SATURATION) - i.min(SATURATION)
        })
        .collect();
    SignedDistance { function: GridFunction::from_vec_unchecked(a.grid, values), saturated }
}

/// An ordered pair `(A₋, A₊)` of disjoint node sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairOfSets {
    minus: Mask,
    plus: Mask,
}

impl PairOfSets {
    pub fn new(minus: Mask, plus: Mask) -> Result<Self> {
        minus.grid.check_same(&plus.grid)?;
        if !minus.is_disjoint(&plus) {
            return Err(Error::InvalidArgument("the two sets of a pair must be disjoint".into()));
        }
        Ok(PairOfSets { minus, plus })
    }

    pub fn empty(grid: Grid) -> Self {
        PairOfSets { minus: Mask::empty(grid), plus: Mask::empty(grid) }
    }

    pub fn grid(&self) -> &Grid {
        &self.minus.grid
    }

    pub fn minus(&self) -> &Mask {
        &self.minus
    }

    pub fn plus(&self) -> &Mask {
        &self.plus
    }
}

/// `pair(ψ) = ({ψ < 0}, {ψ > 0})`.
pub fn pair_of(psi: &GridFunction) -> PairOfSets {
    let grid = *psi.grid();
    PairOfSets {
        minus: Mask { grid, bits: psi.values().iter().map(|&v| v < 0.0).collect() },
        plus: Mask { grid, bits: psi.values().iter().map(|&v| v > 0.0).collect() },
    }
}

/// `P ⪯ Q`: `P₊ ⊂ Q₊` and `Q₋ ⊂ P₋`.
pub fn pair_leq(p: &PairOfSets, q: &PairOfSets) -> bool {
    p.plus.is_subset(&q.plus) && q.minus.is_subset(&p.minus)
}

/// `-(A₋, A₊) = (A₊, A₋)`.
pub fn pair_reverse(p: &PairOfSets) -> PairOfSets {
    PairOfSets { minus: p.plus.clone(), plus: p.minus.clone() }
}

/// `𝒰^ρ(A₋, A₊) = (𝒰^{-ρ}(A₋), 𝒰^ρ(A₊))`.
pub fn pair_nbhd(p: &PairOfSets, rho: f64) -> PairOfSets {
    PairOfSets { minus: rho_neighborhood(&p.minus, -rho), plus: rho_neighborhood(&p.plus, rho) }
}

/// Average over the discrete ball of radius `eps` with weights `(1 - r²/ε²)²`.
fn mollify(u: &GridFunction, eps: f64) -> GridFunction {
    let grid = *u.grid();
    let h = grid.spacing();
    if eps < h {
        return u.clone();
    }
    let offsets = grid.ball_offsets(eps);
    let weights: Vec<f64> = offsets
        .iter()
        .map(|d| {
            let r2 = ((d[0] * d[0] + d[1] * d[1]) as f64) * h * h / (eps * eps);
            (1.0 - r2).max(0.0).powi(2) + 1e-12
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let v = u.values();
    let out = (0..grid.len())
        .map(|i| offsets.iter().zip(&weights).map(|(&d, &w)| w * v[grid.offset(i, d)]).sum::<f64>() / total)
        .collect();
    GridFunction::from_vec_unchecked(grid, out)
}

/// A pair squeezed between `𝒰^{ρ₁}(P)` and `𝒰^{ρ₂}(P)`, built from sublevel
/// sets of mollified signed distances.
pub fn smooth_pair_between(p: &PairOfSets, rho1: f64, rho2: f64) -> Result<PairOfSets> {
    let grid = *p.grid();
    let h = grid.spacing();
    if !(rho1 >= 0.0 && rho2 > rho1) {
        return Err(Error::InvalidArgument(format!("need 0 <= ρ₁ < ρ₂, got {rho1}, {rho2}")));
    }
    let delta = (rho2 - rho1) / 3.0;
    if delta < h * (1.0 - 1e-12) {
        return Err(Error::Infeasible(format!("δ = {delta:e} is below the grid spacing {h:e}")));
    }
    // the node signed distance is 2-Lipschitz across the boundary, so an
    // ε-average moves it by at most 2ε < δ/2
    let eps = delta / 5.0;
    let level = |a: &Mask, threshold: f64| -> Mask {
        let s = mollify(&signed_distance(a).function, eps);
        Mask { grid, bits: s.values().iter().map(|&v| v < threshold).collect() }
    };
    let plus = level(&p.plus, rho1 + 0.5 * delta);
    let minus = level(&p.minus, -rho2 + 0.5 * delta);
    PairOfSets::new(minus, plus)
}

/// Audit of `z ∈ ∂W(∇ψ)` at every node, with `∇` the forward difference.
#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub nodes: usize,
    pub violations: usize,
    pub violation_fraction: f64,
    pub worst_node: Option<usize>,
    pub worst_residual: f64,
    /// `max |div z|` with the backward divergence.
    pub max_divergence: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct SupportFunctionCertificate {
    pub psi: GridFunction,
    pub pair: PairOfSets,
    pub z: GridVectorField,
    /// Ramp width `δ` (the sup norm of `ψ` for the construction from a pair).
    pub delta: f64,
    /// Audit of the field before nodes in kink layers were repaired.
    pub formula_report: AdmissibilityReport,
    /// Formula violations farther than two cells from any kink.
    pub unconfined_violations: usize,
    pub repaired: usize,
    pub report: AdmissibilityReport,
}

fn membership_residual(w: &AnisotropyModel, p: Vec2, z: Vec2) -> f64 {
    if p == [0.0, 0.0] {
        (w.polar(z) - 1.0).max(0.0)
    } else {
        linalg::norm(linalg::sub(z, w.grad_unchecked(p)))
    }
}

fn audit(psi: &GridFunction, z: &GridVectorField, w: &AnisotropyModel) -> (AdmissibilityReport, Vec<usize>) {
    let grid = psi.grid();
    let g = grid::gradient_fd(psi);
    let mut bad = Vec::new();
    let mut worst = (None, 0.0);
    for i in 0..grid.len() {
        let r = membership_residual(w, g.at(i), z.at(i));
        if r > CERTIFICATE_TOLERANCE {
            bad.push(i);
            if r > worst.1 {
                worst = (Some(i), r);
            }
        }
    }
    let div = grid::divergence_fd(z);
    let report = AdmissibilityReport {
        nodes: grid.len(),
        violations: bad.len(),
        violation_fraction: bad.len() as f64 / grid.len() as f64,
        worst_node: worst.0,
        worst_residual: worst.1,
        max_divergence: div.sup_norm(),
        passed: bad.is_empty() && div.values().iter().all(|v| v.is_finite()),
    };
    (report, bad)
}

/// Node-wise `z ∈ ∂W(∇ψ)` and the size of `div z`.
pub fn admissibility_check(cert: &SupportFunctionCertificate, w: &AnisotropyModel) -> AdmissibilityReport {
    audit(&cert.psi, &cert.z, w).0
}

/// Replace `z` at the listed nodes by the canonical element of `∂W(∇ψ)`.
fn repair(psi: &GridFunction, z: &mut GridVectorField, w: &AnisotropyModel, nodes: &[usize]) {
    let g = grid::gradient_fd(psi);
    for &i in nodes {
        let p = g.at(i);
        let v = if p == [0.0, 0.0] { w.project_wulff(z.at(i)) } else { w.grad_unchecked(p) };
        z.set(i, v);
    }
}

/// `C^∞` cutoff: 1 on `[0, δ]`, 0 outside `(-δ, 2δ)`.
fn plateau(s: f64, delta: f64) -> f64 {
    fn step(t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
    if s < 0.0 {
        step(1.0 + s / delta)
    } else if s > delta {
        step(2.0 - s / delta)
    } else {
        1.0
    }
}

/// Curvature-limited smoothness radius of `∂G`, floored at `3h`.
fn smoothness_radius(g: &Mask) -> f64 {
    let grid = *g.grid();
    let h = grid.spacing();
    if g.is_empty() || g.count() == grid.len() {
        return f64::INFINITY;
    }
    let d = signed_distance(g).function;
    let s = mollify(&d, 2.0 * h);
    let v = s.values();
    let mut kmax: f64 = 0.0;
    for i in 0..grid.len() {
        if d.get(i).abs() > 2.0 * h {
            continue;
        }
        let lap: f64 = (0..grid.dim()).map(|k| v[grid.forward(i, k)] - 2.0 * v[i] + v[grid.backward(i, k)]).sum::<f64>() / (h * h);
        kmax = kmax.max(lap.abs());
    }
    if kmax == 0.0 {
        f64::INFINITY
    } else {
        (1.0 / kmax).max(3.0 * h)
    }
}

/// Largest ramp width used when every constraint on `δ` is vacuous.
const MAX_RAMP: f64 = 0.125;

/// Support function `χ(d_{G₊ᶜ}) - χ(d_{G₋ᶜ})` with its Cahn–Hoffman field.
pub fn support_from_smooth_pair(g: &PairOfSets, w: &AnisotropyModel) -> Result<SupportFunctionCertificate> {
    let grid = *g.grid();
    if w.dim() != grid.dim() {
        return Err(Error::GridMismatch("anisotropy and grid dimensions differ".into()));
    }
    let h = grid.spacing();
    let separation = g.minus.distance_to(&g.plus);
    if separation < 6.0 * h * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("dist(G₋, G₊) = {separation:e} is below 6h")));
    }
    let radius = smoothness_radius(&g.minus).min(smoothness_radius(&g.plus));
    let delta = (radius.min(separation) / 3.0).min(MAX_RAMP);
    let d_plus = signed_distance(&g.plus.complement()).function;
    let d_minus = signed_distance(&g.minus.complement()).function;
    let chi = |s: f64| s.clamp(0.0, delta);
    let psi = d_plus.zip_map(&d_minus, |a, b| chi(a) - chi(b))?;
    let field = |d: &GridFunction| {
        let g = grid::gradient_fd(d);
        let smooth = grid::gradient_fd(&mollify(d, 2.0 * h));
        (g, smooth)
    };
    let (gp, sp) = field(&d_plus);
    let (gm, sm) = field(&d_minus);
    let direction = |g: &GridVectorField, s: &GridVectorField, i: usize| -> Vec2 {
        let v = g.at(i);
        if linalg::norm(v) >= 0.5 {
            v
        } else {
            s.at(i)
        }
    };
    let mut z = GridVectorField::from_fn(grid, |i| {
        let mut out = [0.0; 2];
        let tp = plateau(d_plus.get(i), delta);
        if tp > 0.0 {
            let p = direction(&gp, &sp, i);
            if p != [0.0, 0.0] {
                out = linalg::add(out, linalg::scale(w.grad_unchecked(p), tp));
            }
        }
        let tm = plateau(d_minus.get(i), delta);
        if tm > 0.0 {
            let p = linalg::scale(direction(&gm, &sm, i), -1.0);
            if p != [0.0, 0.0] {
                out = linalg::add(out, linalg::scale(w.grad_unchecked(p), tm));
            }
        }
        out
    });
    let (formula_report, bad) = audit(&psi, &z, w);
    let near_kink = |i: usize| {
        [d_plus.get(i), d_minus.get(i)].iter().any(|&s| s.abs() <= 2.0 * h || (s - delta).abs() <= 2.0 * h)
    };
    let unconfined_violations = bad.iter().filter(|&&i| !near_kink(i)).count();
    repair(&psi, &mut z, w, &bad);
    let (report, still_bad) = audit(&psi, &z, w);
    if let Some(&node) = still_bad.first() {
        return Err(Error::Certificate { node, reason: format!("residual {:e} after repair", report.worst_residual) });
    }
    Ok(SupportFunctionCertificate {
        psi,
        pair: g.clone(),
        z,
        delta,
        formula_report,
        unconfined_violations,
        repaired: bad.len(),
        report,
    })
}

/// A support function of `H` dominating `θ`, rescaled from `ψ̂` (or from the
/// certificate of `H`) so that the Cahn–Hoffman field carries over unchanged.
pub fn ordered_support_function(
    theta: &GridFunction,
    h_pair: &PairOfSets,
    psi_hat: Option<&SupportFunctionCertificate>,
    w: &AnisotropyModel,
) -> Result<SupportFunctionCertificate> {
    theta.grid().check_same(h_pair.grid())?;
    let h = theta.grid().spacing();
    let g = pair_of(theta);
    if !pair_leq(&g, &pair_nbhd(h_pair, -2.0 * h)) {
        return Err(Error::Precondition("pair(θ) is not below 𝒰^{-2h}(H)".into()));
    }
    let base = match psi_hat {
        Some(c) => {
            if &c.pair != h_pair || pair_of(&c.psi) != *h_pair {
                return Err(Error::Precondition("ψ̂ does not support H".into()));
            }
            c.clone()
        }
        None => support_from_smooth_pair(h_pair, w)?,
    };
    let psi_h = &base.psi;
    let alpha = if g.plus.is_empty() {
        1.0
    } else {
        let lo = (0..psi_h.grid().len()).filter(|&i| g.plus.get(i)).map(|i| psi_h.get(i)).fold(f64::INFINITY, f64::min);
        theta.max() / lo
    };
    let beta = if h_pair.minus.is_empty() {
        1.0
    } else {
        let hi = (0..theta.grid().len()).filter(|&i| h_pair.minus.get(i)).map(|i| theta.get(i)).fold(f64::NEG_INFINITY, f64::max);
        hi / psi_h.min()
    };
    // any α above and β below these bounds keeps θ <= ψ; stay closest to ψ_H
    let (alpha, beta) = (alpha.max(1.0), beta.min(1.0));
    let psi = psi_h.map(|v| if v > 0.0 { alpha * v } else { beta * v });
    let (report, _) = audit(&psi, &base.z, w);
    Ok(SupportFunctionCertificate { psi, report, ..base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mask(grid: Grid, seed: u64) -> Mask {
        // a few random disks and single nodes
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Mask::empty(grid);
        for _ in 0..rng.gen_range(0..6) {
            let c = [rng.gen::<f64>(), rng.gen::<f64>()];
            m = m.union(&Mask::ball(grid, c, rng.gen_range(0.0..0.3)));
        }
        for _ in 0..rng.gen_range(0..20) {
            let i = rng.gen_range(0..grid.len());
            m.bits[i] = !m.bits[i];
        }
        m
    }

    fn brute_distance(a: &Mask) -> Vec<f64> {
        let g = a.grid;
        (0..g.len())
            .map(|x| (0..g.len()).filter(|&y| a.get(y)).map(|y| g.node_distance(x, y)).fold(f64::INFINITY, f64::min))
            .collect()
    }

    #[test]
    fn neighborhood_examples() {
        let g = Grid::new(2, 32).unwrap();
        let h = g.spacing();
        assert!(rho_neighborhood(&Mask::empty(g), 3.0 * h).is_empty());
        let c = [0.5, 0.5];
        let b = Mask::ball(g, c, 4.0 * h);
        assert_eq!(rho_neighborhood(&b, 0.0), b);
        assert_eq!(rho_neighborhood(&Mask::ball(g, c, 0.0), 5.0 * h), Mask::ball(g, c, 5.0 * h));
        assert_eq!(rho_neighborhood(&b, -4.0 * h), Mask::ball(g, c, 0.0));
        let g1 = Grid::new(1, 64).unwrap();
        let seg = Mask::from_fn(g1, |x| (0.25..0.5).contains(&x[0]));
        let grown = rho_neighborhood(&seg, 3.0 / 64.0);
        assert_eq!(grown.count(), seg.count() + 6);
    }

    #[test]
    fn signed_distance_matches_brute_force() {
        let g = Grid::new(2, 32).unwrap();
        for seed in 0..4 {
            let a = random_mask(g, seed);
            let sd = signed_distance(&a);
            let out = brute_distance(&a);
            let inside = brute_distance(&a.complement());
            for i in 0..g.len() {
                let expect = out[i].min(SATURATION) - inside[i].min(SATURATION);
                assert_eq!(sd.function.get(i), expect, "node {i}");
            }
        }
        let b = Mask::ball(g, [0.5, 0.5], 0.25);
        let sd = signed_distance(&b).function;
        let center = g.nearest([0.5, 0.5]);
        assert!((sd.get(center) + 0.25).abs() <= g.spacing());
        let e = signed_distance(&Mask::empty(g));
        assert!(e.saturated);
        assert!(e.function.values().iter().all(|&v| v == SATURATION));
    }

    #[test]
    fn boundary_nodes_are_within_one_cell() {
        let g = Grid::new(2, 64).unwrap();
        let b = Mask::ball(g, [0.3, 0.6], 0.2);
        let d = signed_distance(&b).function;
        for i in 0..g.len() {
            let edge = (0..2).any(|k| b.get(g.forward(i, k)) != b.get(i) || b.get(g.backward(i, k)) != b.get(i));
            if edge {
                assert!(d.get(i).abs() <= g.spacing() + 1e-15);
            }
        }
    }

    #[test]
    fn pair_operations() {
        let g = Grid::new(2, 32).unwrap();
        let zero = GridFunction::constant(g, 0.0);
        assert_eq!(pair_of(&zero), PairOfSets::empty(g));
        let psi = GridFunction::from_fn(g, |x| (6.0 * x[0]).sin() * (4.0 * x[1]).cos());
        assert_eq!(pair_of(&psi.map(|v| -v)), pair_reverse(&pair_of(&psi)));
        let p = pair_of(&psi);
        assert!(pair_leq(&p, &p));
        assert_eq!(pair_reverse(&pair_reverse(&p)), p);
        let h = g.spacing();
        let lo = pair_nbhd(&p, -2.0 * h);
        let hi = pair_nbhd(&p, 2.0 * h);
        assert!(pair_leq(&lo, &p) && pair_leq(&p, &hi));
        assert!(pair_leq(&pair_reverse(&hi), &pair_reverse(&p)));
        assert!(PairOfSets::new(Mask::full(g), Mask::full(g)).is_err());
    }

    #[test]
    fn smooth_pair_is_sandwiched_and_separated() {
        let g = Grid::new(2, 64).unwrap();
        let h = g.spacing();
        let p = PairOfSets::new(Mask::empty(g), Mask::ball(g, [0.5, 0.5], 0.15)).unwrap();
        let (r1, r2) = (2.0 * h, 14.0 * h);
        let s = smooth_pair_between(&p, r1, r2).unwrap();
        assert!(pair_leq(&pair_nbhd(&p, r1), &s));
        assert!(pair_leq(&s, &pair_nbhd(&p, r2)));
        let q = PairOfSets::new(Mask::ball(g, [0.1, 0.1], 0.1), Mask::ball(g, [0.6, 0.6], 0.15)).unwrap();
        let s = smooth_pair_between(&q, r1, r2).unwrap();
        assert!(pair_leq(&pair_nbhd(&q, r1), &s) && pair_leq(&s, &pair_nbhd(&q, r2)));
        let delta = (r2 - r1) / 3.0;
        assert!(s.minus().distance_to(s.plus()) >= delta - 2.0 * h);
        // a second pass is still sandwiched
        let again = smooth_pair_between(&s, r1, r2).unwrap();
        assert!(pair_leq(&pair_nbhd(&s, r1), &again) && pair_leq(&again, &pair_nbhd(&s, r2)));
        assert!(matches!(smooth_pair_between(&q, 0.0, 2.0 * h), Err(Error::Infeasible(_))));
    }

    #[test]
    fn tent_field_in_one_dimension() {
        let g = Grid::new(1, 64).unwrap();
        let w = AnisotropyModel::euclidean(1).unwrap();
        // tent with a flat top on [0.4, 0.6]
        let psi = GridFunction::from_fn(g, |x| 0.2 - (x[0] - 0.5).abs().max(0.125));
        let z = GridVectorField::from_fn(g, |i| {
            let x = g.point(i)[0];
            [if x < 0.375 { 1.0 } else if x >= 0.625 { -1.0 } else { 1.0 - 2.0 * (x - 0.375) / 0.25 }, 0.0]
        });
        let (rep, _) = audit(&psi, &z, &w);
        assert!(rep.passed, "{rep:?}");
        let (bad, nodes) = audit(&psi, &z.scaled(2.0), &w);
        assert!(!bad.passed);
        assert!(nodes.contains(&23) && nodes.contains(&24) && nodes.contains(&39) && nodes.contains(&40));
        assert!(bad.violation_fraction > 0.8);
    }

    #[test]
    fn certificate_for_annulus_pair() {
        let g = Grid::new(2, 128).unwrap();
        let w = AnisotropyModel::euclidean(2).unwrap();
        let c = [0.5, 0.5];
        let ring = Mask::ball(g, c, 0.35).intersection(&Mask::ball(g, c, 0.2).complement());
        let core = Mask::ball(g, c, 0.1);
        let cert = support_from_smooth_pair(&PairOfSets::new(core, ring).unwrap(), &w).unwrap();
        assert_eq!(pair_of(&cert.psi), cert.pair);
        assert!((cert.psi.sup_norm() - cert.delta).abs() < 1e-15);
        assert!(cert.report.passed);
        assert_eq!(cert.unconfined_violations, 0);
        let grad = grid::gradient_fd(&cert.psi);
        for k in 0..2 {
            assert!(grad.component(k).iter().all(|v| v.abs() <= 1.0 + 1e-9));
        }
        let rep = admissibility_check(&cert, &w);
        assert!(rep.violation_fraction <= 0.005);
    }

    #[test]
    fn ordered_support_dominates() {
        let g = Grid::new(2, 64).unwrap();
        let w = AnisotropyModel::euclidean(2).unwrap();
        let hp = PairOfSets::new(Mask::ball(g, [0.2, 0.2], 0.12), Mask::ball(g, [0.65, 0.65], 0.2)).unwrap();
        let base = support_from_smooth_pair(&hp, &w).unwrap();
        let minus_one = GridFunction::constant(g, -1.0);
        let same = ordered_support_function(&minus_one, &hp, Some(&base), &w).unwrap();
        assert_eq!(same.psi, base.psi);
        let theta = GridFunction::from_fn(g, |x| {
            let r = grid::torus_distance(x, [0.65, 0.65]);
            if r < 0.1 {
                3.0 * (0.1 - r)
            } else {
                -0.5
            }
        });
        let out = ordered_support_function(&theta, &hp, Some(&base), &w).unwrap();
        for i in 0..g.len() {
            assert!(theta.get(i) <= out.psi.get(i) + 1e-15);
        }
        assert_eq!(pair_of(&out.psi), hp);
        assert!(out.report.passed);
        let big = GridFunction::constant(g, 1.0);
        assert!(matches!(ordered_support_function(&big, &hp, Some(&base), &w), Err(Error::Precondition(_))));
    }

    #[test]
    fn erosion_has_no_left_adjoint() {
        // a lone node erodes to nothing, yet is not inside the dilation of ∅
        let g = Grid::new(2, 16).unwrap();
        let h = g.spacing();
        let mut a = Mask::empty(g);
        a.bits[5] = true;
        let e = Mask::empty(g);
        assert!(rho_neighborhood(&a, -h).is_subset(&e));
        assert!(!a.is_subset(&rho_neighborhood(&e, h)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn neighborhood_algebra(seed in 0u64..10_000, k in 1usize..4, sign in proptest::bool::ANY) {
            let g = Grid::new(2, 32).unwrap();
            let h = g.spacing();
            let rho = if sign { k as f64 * h } else { -(k as f64) * h };
            let a1 = random_mask(g, seed);
            let a2 = random_mask(g, seed + 1).union(&a1);
            let u = |a: &Mask, r: f64| rho_neighborhood(a, r);
            let r = rho.abs();
            prop_assert!(u(&a1, -r).is_subset(&a1) && a1.is_subset(&u(&a1, r)));
            prop_assert_eq!(u(&a1, rho).complement(), u(&a1.complement(), -rho));
            prop_assert!(u(&a1, rho).is_subset(&u(&a2, rho)));
            let b = random_mask(g, seed + 2);
            let lhs = u(&a1.intersection(&b), rho);
            let rhs = u(&a1, rho).intersection(&u(&b, rho));
            prop_assert!(lhs.is_subset(&rhs));
            if rho <= 0.0 {
                prop_assert_eq!(lhs, rhs);
            }
            prop_assert!(u(&u(&a1, rho), h).is_subset(&u(&a1, rho + h)));
            prop_assert_eq!(u(&a1, r).is_subset(&b), a1.is_subset(&u(&b, -r)));
        }
    }
}
