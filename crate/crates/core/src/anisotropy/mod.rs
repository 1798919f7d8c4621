//! Convex one-homogeneous anisotropies `W`, their polar `W°`, the Wulff set
//! `{W° <= 1}` and the local curvature operator `k(p, X) = tr[∇²W(p) X]`.

mod mollified;

pub use mollified::{MollifiedAnisotropy, QuadraticDensity, SmoothDensity};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};

/// Number of directions in the coarse search for the polar norm.
const DUAL_DIRECTIONS: usize = 256;
/// Relative tolerance of the golden-section refinement of the polar norm.
const DUAL_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AnisotropyKind {
    /// `|p|`
    Euclidean,
    /// `sqrt(p^T M p)` with `M` symmetric positive definite.
    Elliptic { matrix: Mat2 },
    /// `(p_1^4 + p_2^4)^(1/4)`
    Quartic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyModel {
    kind: AnisotropyKind,
    dim: usize,
    /// Eigen-decomposition of the elliptic matrix (values ascending, unit vectors).
    #[serde(skip)]
    eig: Option<([f64; 2], [Vec2; 2])>,
}

impl AnisotropyModel {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(AnisotropyModel { kind: AnisotropyKind::Euclidean, dim, eig: None })
    }

    pub fn elliptic(dim: usize, matrix: Mat2) -> Result<Self> {
        check_dim(dim)?;
        let mut m = matrix;
        if dim == 1 {
            m = [[matrix[0][0], 0.0], [0.0, 0.0]];
            if !(m[0][0] > 0.0 && m[0][0].is_finite()) {
                return Err(Error::InvalidArgument("elliptic coefficient must be positive".into()));
            }
            return Ok(AnisotropyModel {
                kind: AnisotropyKind::Elliptic { matrix: m },
                dim,
                eig: Some(([m[0][0], m[0][0]], [[1.0, 0.0], [0.0, 1.0]])),
            });
        }
        if (m[0][1] - m[1][0]).abs() > 1e-12 * (1.0 + m[0][1].abs()) {
            return Err(Error::InvalidArgument("elliptic matrix must be symmetric".into()));
        }
        let (lo, hi) = linalg::sym_eigenvalues(&m, 2);
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::InvalidArgument("elliptic matrix must be positive definite".into()));
        }
        let b = m[0][1];
        let vecs = if b.abs() < 1e-300 {
            if m[0][0] <= m[1][1] {
                [[1.0, 0.0], [0.0, 1.0]]
            } else {
                [[0.0, 1.0], [1.0, 0.0]]
            }
        } else {
            let v0 = [b, lo - m[0][0]];
            let v0 = linalg::scale(v0, 1.0 / linalg::norm(v0));
            [v0, [-v0[1], v0[0]]]
        };
        Ok(AnisotropyModel { kind: AnisotropyKind::Elliptic { matrix: m }, dim, eig: Some(([lo, hi], vecs)) })
    }

    pub fn quartic(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(AnisotropyModel { kind: AnisotropyKind::Quartic, dim, eig: None })
    }

    /// Model by name: `euclidean`, `elliptic` (uses `matrix`), `quartic`.
    pub fn by_name(name: &str, dim: usize, matrix: Option<Mat2>) -> Result<Self> {
        match name {
            "euclidean" => Self::euclidean(dim),
            "elliptic" => Self::elliptic(dim, matrix.unwrap_or([[4.0, 0.0], [0.0, 1.0]])),
            "quartic" | "l4" => Self::quartic(dim),
            other => Err(Error::Config(format!("unknown anisotropy '{other}'"))),
        }
    }

    pub fn kind(&self) -> &AnisotropyKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            AnisotropyKind::Euclidean => "euclidean",
            AnisotropyKind::Elliptic { .. } => "elliptic",
            AnisotropyKind::Quartic => "quartic",
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn restrict(&self, p: Vec2) -> Vec2 {
        if self.dim == 1 {
            [p[0], 0.0]
        } else {
            p
        }
    }

    #[inline]
    fn restrict_mat(&self, m: Mat2) -> Mat2 {
        if self.dim == 1 {
            [[m[0][0], 0.0], [0.0, 0.0]]
        } else {
            m
        }
    }

    /// Largest `λ₀` with `W(p) >= λ₀ |p|`.
    pub fn lambda0(&self) -> f64 {
        match &self.kind {
            AnisotropyKind::Euclidean => 1.0,
            AnisotropyKind::Elliptic { .. } => self.eig.as_ref().map(|e| e.0[0].sqrt()).unwrap_or(0.0),
            AnisotropyKind::Quartic => {
                if self.dim == 1 {
                    1.0
                } else {
                    2f64.powf(-0.25)
                }
            }
        }
    }

    /// Smallest `Λ` with `W(p) <= Λ |p|`.
    pub fn upper_constant(&self) -> f64 {
        match &self.kind {
            AnisotropyKind::Euclidean | AnisotropyKind::Quartic => 1.0,
            AnisotropyKind::Elliptic { .. } => {
                let e = self.eig.as_ref().expect("elliptic eigen data");
                if self.dim == 1 {
                    e.0[0].sqrt()
                } else {
                    e.0[1].sqrt()
                }
            }
        }
    }

    #[inline]
    pub fn eval(&self, p: Vec2) -> f64 {
        let p = self.restrict(p);
        match &self.kind {
            AnisotropyKind::Euclidean => linalg::norm(p),
            AnisotropyKind::Elliptic { matrix } => linalg::dot(p, linalg::mat_vec(matrix, p)).max(0.0).sqrt(),
            AnisotropyKind::Quartic => {
                let m = p[0].abs().max(p[1].abs());
                if m == 0.0 {
                    return 0.0;
                }
                let a = p[0] / m;
                let b = p[1] / m;
                m * (a * a * a * a + b * b * b * b).sqrt().sqrt()
            }
        }
    }

    /// `∇W(p)` for `p != 0`.
    pub fn grad(&self, p: Vec2) -> Result<Vec2> {
        let p = self.restrict(p);
        if p == [0.0, 0.0] {
            return Err(Error::Singular("gradient"));
        }
        Ok(self.restrict(self.grad_unchecked(p)))
    }

    #[inline]
    pub(crate) fn grad_unchecked(&self, p: Vec2) -> Vec2 {
        match &self.kind {
            AnisotropyKind::Euclidean => linalg::scale(p, 1.0 / linalg::norm(p)),
            AnisotropyKind::Elliptic { matrix } => {
                let mp = linalg::mat_vec(matrix, p);
                linalg::scale(mp, 1.0 / self.eval(p))
            }
            AnisotropyKind::Quartic => {
                let w = self.eval(p);
                let a = p[0] / w;
                let b = p[1] / w;
                [a * a * a, b * b * b]
            }
        }
    }

    /// `∇²W(p)` for `p != 0`.
    pub fn hess(&self, p: Vec2) -> Result<Mat2> {
        let p = self.restrict(p);
        if p == [0.0, 0.0] {
            return Err(Error::Singular("hessian"));
        }
        let h = match &self.kind {
            AnisotropyKind::Euclidean => {
                let r = linalg::norm(p);
                let u = linalg::scale(p, 1.0 / r);
                let id = linalg::identity(self.dim);
                linalg::mat_scale(&linalg::mat_add(&id, &linalg::mat_scale(&linalg::outer(u, u), -1.0)), 1.0 / r)
            }
            AnisotropyKind::Elliptic { matrix } => {
                let w = self.eval(p);
                let g = linalg::scale(linalg::mat_vec(matrix, p), 1.0 / w);
                linalg::mat_scale(&linalg::mat_add(matrix, &linalg::mat_scale(&linalg::outer(g, g), -1.0)), 1.0 / w)
            }
            AnisotropyKind::Quartic => {
                let w = self.eval(p);
                let a = [p[0] / w, p[1] / w];
                let g = [a[0] * a[0] * a[0], a[1] * a[1] * a[1]];
                let mut h = linalg::ZERO_MAT;
                for i in 0..2 {
                    for j in 0..2 {
                        let diag = if i == j { a[i] * a[i] } else { 0.0 };
                        h[i][j] = 3.0 * (diag - g[i] * g[j]) / w;
                    }
                }
                h
            }
        };
        Ok(self.restrict_mat(h))
    }

    /// `k(p, X) = tr[∇²W(p) X]` for `p != 0`.
    pub fn k_operator(&self, p: Vec2, x: &Mat2) -> Result<f64> {
        let h = self.hess(p)?;
        Ok(linalg::trace_product(&h, x, self.dim))
    }

    /// Polar norm `W°(x) = sup{x·p : W(p) <= 1}` by a direction search with
    /// golden-section refinement.
    pub fn dual_norm(&self, x: Vec2) -> Result<f64> {
        let x = self.restrict(x);
        if self.dim == 1 {
            return Ok(x[0].abs() / self.eval([1.0, 0.0]));
        }
        if x == [0.0, 0.0] {
            return Ok(0.0);
        }
        let f = |t: f64| {
            let e = [t.cos(), t.sin()];
            linalg::dot(x, e) / self.eval(e)
        };
        let step = std::f64::consts::TAU / DUAL_DIRECTIONS as f64;
        let (mut best_t, mut best) = (0.0, f(0.0));
        for k in 1..DUAL_DIRECTIONS {
            let t = k as f64 * step;
            let v = f(t);
            if v > best {
                best = v;
                best_t = t;
            }
        }
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (best_t - step, best_t + step);
        let mut c = hi - golden * (hi - lo);
        let mut d = lo + golden * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        let mut iterations = 0;
        while hi - lo > 1e-10 {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - golden * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + golden * (hi - lo);
                fd = f(d);
            }
            iterations += 1;
            if iterations > 200 {
                break;
            }
        }
        let refined = f(0.5 * (lo + hi)).max(fc).max(fd).max(best);
        // curvature-based bound on the remaining error of the bracket
        let spread = (f(lo) - refined).abs().max((f(hi) - refined).abs());
        if !refined.is_finite() || spread > DUAL_TOLERANCE * refined.abs().max(1e-300) * 1e3 {
            return Err(Error::Tolerance { tolerance: DUAL_TOLERANCE, achieved: spread / refined.abs() });
        }
        Ok(refined)
    }

    /// Closed-form polar norm, used by the solvers.
    pub(crate) fn polar(&self, x: Vec2) -> f64 {
        let x = self.restrict(x);
        match &self.kind {
            AnisotropyKind::Euclidean => linalg::norm(x),
            AnisotropyKind::Elliptic { .. } => {
                let (vals, vecs) = self.eig.as_ref().expect("elliptic eigen data");
                if self.dim == 1 {
                    return x[0].abs() / vals[0].sqrt();
                }
                let c0 = linalg::dot(x, vecs[0]);
                let c1 = linalg::dot(x, vecs[1]);
                (c0 * c0 / vals[0] + c1 * c1 / vals[1]).sqrt()
            }
            AnisotropyKind::Quartic => {
                let a = x[0].abs().powf(4.0 / 3.0) + x[1].abs().powf(4.0 / 3.0);
                a.powf(0.75)
            }
        }
    }

    /// `W°(z) <= 1 + tol`.
    pub fn wulff_contains(&self, z: Vec2, tol: f64) -> bool {
        self.polar(z) <= 1.0 + tol
    }

    /// Membership `z ∈ ∂W(p)`: the gradient for `p != 0`, the Wulff set at 0.
    pub fn subdifferential_contains(&self, p: Vec2, z: Vec2, tol: f64) -> bool {
        let p = self.restrict(p);
        let z = self.restrict(z);
        if p == [0.0, 0.0] {
            self.wulff_contains(z, tol)
        } else {
            linalg::norm(linalg::sub(z, self.grad_unchecked(p))) <= tol
        }
    }

    /// Euclidean projection onto the Wulff set.
    pub fn project_wulff(&self, z: Vec2) -> Vec2 {
        let z = self.restrict(z);
        match &self.kind {
            AnisotropyKind::Euclidean => {
                let r = linalg::norm(z);
                if r <= 1.0 {
                    z
                } else {
                    linalg::scale(z, 1.0 / r)
                }
            }
            AnisotropyKind::Elliptic { .. } => self.project_ellipse(z),
            AnisotropyKind::Quartic => {
                if self.dim == 1 {
                    return [z[0].clamp(-1.0, 1.0), 0.0];
                }
                if self.polar(z) <= 1.0 {
                    return z;
                }
                self.project_l43(z)
            }
        }
    }

    fn project_ellipse(&self, z: Vec2) -> Vec2 {
        let (vals, vecs) = self.eig.as_ref().expect("elliptic eigen data");
        if self.dim == 1 {
            let r = vals[0].sqrt();
            return [z[0].clamp(-r, r), 0.0];
        }
        if self.polar(z) <= 1.0 {
            return z;
        }
        // the Wulff set is {x : x^T M^{-1} x <= 1}; solve the secular equation for the multiplier
        let c = [linalg::dot(z, vecs[0]), linalg::dot(z, vecs[1])];
        let g = |mu: f64| -> (f64, f64) {
            let mut val = -1.0;
            let mut der = 0.0;
            for i in 0..2 {
                let d = vals[i] + mu;
                val += c[i] * c[i] * vals[i] / (d * d);
                der -= 2.0 * c[i] * c[i] * vals[i] / (d * d * d);
            }
            (val, der)
        };
        let mut mu = 0.0;
        for _ in 0..100 {
            let (v, d) = g(mu);
            let next = mu - v / d;
            if !(next > mu) || (next - mu) <= 1e-15 * (1.0 + mu) {
                mu = next.max(mu);
                break;
            }
            mu = next;
        }
        let x0 = c[0] * vals[0] / (vals[0] + mu);
        let x1 = c[1] * vals[1] / (vals[1] + mu);
        let x = linalg::add(linalg::scale(vecs[0], x0), linalg::scale(vecs[1], x1));
        // guard against roundoff just outside the boundary
        let s = self.polar(x);
        if s > 1.0 {
            linalg::scale(x, 1.0 / s)
        } else {
            x
        }
    }

    /// Projection onto the `ℓ^{4/3}` unit ball. For a multiplier `λ` each
    /// coordinate solves `y³ + (4/3)λ y = |z_i|` with `|x_i| = y³`; `λ` is then
    /// fixed by `Σ y⁴ = 1` with safeguarded Newton.
    fn project_l43(&self, z: Vec2) -> Vec2 {
        let c = [z[0].abs(), z[1].abs()];
        let solve = |lambda: f64| -> ([f64; 2], f64, f64) {
            let p = 4.0 / 3.0 * lambda;
            let mut y = [0.0; 2];
            let mut phi = -1.0;
            let mut dphi = 0.0;
            for i in 0..2 {
                if c[i] == 0.0 {
                    continue;
                }
                let disc = (0.25 * c[i] * c[i] + (p / 3.0).powi(3)).sqrt();
                let u = (0.5 * c[i] + disc).cbrt();
                let v = p / (3.0 * u);
                let yi = c[i] / (u * u + u * v + v * v);
                y[i] = yi;
                phi += yi.powi(4);
                let dy = -(4.0 / 3.0) * yi / (3.0 * yi * yi + p);
                dphi += 4.0 * yi.powi(3) * dy;
            }
            (y, phi, dphi)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while solve(hi).1 > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        let mut lambda = lo;
        for _ in 0..100 {
            let (_, phi, dphi) = solve(lambda);
            if phi.abs() <= 4.0 * f64::EPSILON {
                break;
            }
            if phi > 0.0 {
                lo = lambda;
            } else {
                hi = lambda;
            }
            let mut next = lambda - phi / dphi;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if next == lambda {
                break;
            }
            lambda = next;
        }
        let (y, _, _) = solve(lambda);
        let x = [y[0].powi(3).copysign(z[0]), y[1].powi(3).copysign(z[1])];
        let s = self.polar(x);
        if s > 1.0 {
            linalg::scale(x, 1.0 / s)
        } else {
            x
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<AnisotropyModel> {
        vec![
            AnisotropyModel::euclidean(2).unwrap(),
            AnisotropyModel::elliptic(2, [[4.0, 0.0], [0.0, 1.0]]).unwrap(),
            AnisotropyModel::elliptic(2, [[2.0, 0.7], [0.7, 1.0]]).unwrap(),
            AnisotropyModel::quartic(2).unwrap(),
            AnisotropyModel::euclidean(1).unwrap(),
            AnisotropyModel::elliptic(1, [[2.25, 0.0], [0.0, 0.0]]).unwrap(),
        ]
    }

    /// Entry-wise deviation with an absolute floor, for Hessians that vanish in 1D.
    fn deviation(a: &Mat2, b: &Mat2, dim: usize) -> f64 {
        let (lo, hi) = linalg::sym_eigenvalues(b, dim);
        let size = lo.abs().max(hi.abs()).max(1.0);
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                worst = worst.max((a[i][j] - b[i][j]).abs());
            }
        }
        worst / size
    }

    fn fd_hessian(w: &AnisotropyModel, p: Vec2) -> Mat2 {
        let e = 1e-4;
        let mut h = linalg::ZERO_MAT;
        for i in 0..w.dim() {
            for j in 0..w.dim() {
                let mut pp = p;
                let mut pm = p;
                let mut mp = p;
                let mut mm = p;
                pp[i] += e;
                pp[j] += e;
                pm[i] += e;
                pm[j] -= e;
                mp[i] -= e;
                mp[j] += e;
                mm[i] -= e;
                mm[j] -= e;
                h[i][j] = (w.eval(pp) - w.eval(pm) - w.eval(mp) + w.eval(mm)) / (4.0 * e * e);
            }
        }
        h
    }

    #[test]
    fn evaluation_examples() {
        let w = AnisotropyModel::euclidean(2).unwrap();
        assert_eq!(w.eval([3.0, 4.0]), 5.0);
        let g = w.grad([3.0, 4.0]).unwrap();
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let e = AnisotropyModel::elliptic(2, [[4.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(e.eval([1.0, 0.0]), 2.0);
        assert!(matches!(w.grad([0.0, 0.0]), Err(Error::Singular(_))));
        assert!(matches!(w.hess([0.0, 0.0]), Err(Error::Singular(_))));
        assert!(w.k_operator([0.0, 0.0], &linalg::identity(2)).is_err());
    }

    #[test]
    fn euler_identity_and_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for w in models() {
            for _ in 0..100 {
                let p = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let h = w.hess(p).unwrap();
                let hp = linalg::mat_vec(&h, w.restrict(p));
                let size = linalg::sym_eigenvalues(&h, w.dim()).1.abs().max(1.0);
                assert!(linalg::norm(hp) < 1e-12 * size * (1.0 + linalg::norm(p)));
                let (lo, _) = linalg::sym_eigenvalues(&h, w.dim());
                assert!(lo > -1e-12 * size);
                let a = rng.gen_range(0.1..10.0);
                let g1 = w.grad(p).unwrap();
                let g2 = w.grad(linalg::scale(p, a)).unwrap();
                assert!(linalg::norm(linalg::sub(g1, g2)) < 1e-12);
                let h2 = w.hess(linalg::scale(p, a)).unwrap();
                assert!(deviation(&linalg::mat_scale(&h2, a), &h, w.dim()) < 1e-10);
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for w in models() {
            for _ in 0..20 {
                let p = [rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0)];
                let h = w.hess(p).unwrap();
                let fd = fd_hessian(&w, p);
                assert!(deviation(&h, &fd, w.dim()) < 1e-5, "{} at {p:?}", w.name());
            }
        }
    }

    #[test]
    fn k_operator_examples() {
        let w = AnisotropyModel::euclidean(2).unwrap();
        let id = linalg::identity(2);
        assert!((w.k_operator([1.0, 0.0], &id).unwrap() - 1.0).abs() < 1e-15);
        let e = AnisotropyModel::elliptic(2, [[4.0, 0.0], [0.0, 1.0]]).unwrap();
        let k = e.k_operator([1.0, 1.0], &id).unwrap();
        let fd = fd_hessian(&e, [1.0, 1.0]);
        assert!((k - (fd[0][0] + fd[1][1])).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for w in models() {
            for _ in 0..50 {
                let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                let x = [[rng.gen_range(-1.0..1.0), 0.3], [0.3, rng.gen_range(-1.0..1.0)]];
                let k1 = w.k_operator(p, &x).unwrap();
                let k2 = w.k_operator(linalg::scale(p, 2.0), &x).unwrap();
                assert!((k2 - k1 / 2.0).abs() < 1e-12 * (1.0 + k1.abs()));
            }
        }
    }

    #[test]
    fn dual_norm_examples() {
        let w = AnisotropyModel::euclidean(2).unwrap();
        assert!((w.dual_norm([1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((w.dual_norm([0.3, -0.4]).unwrap() - 0.5).abs() < 1e-10);
        let e = AnisotropyModel::elliptic(2, [[4.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!((e.dual_norm([1.0, 0.0]).unwrap() - 0.5).abs() < 1e-10);
        let q = AnisotropyModel::quartic(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x: Vec2 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            // Hölder conjugate of the l4 norm
            let exact = (x[0].abs().powf(4.0 / 3.0) + x[1].abs().powf(4.0 / 3.0)).powf(0.75);
            let numeric = q.dual_norm(x).unwrap();
            assert!((numeric - exact).abs() <= 1e-8 * exact, "{numeric} vs {exact}");
        }
    }

    #[test]
    fn polar_agrees_with_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for w in models() {
            for _ in 0..20 {
                let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                let a = w.dual_norm(x).unwrap();
                let b = w.polar(x);
                assert!((a - b).abs() <= 1e-8 * b.max(1e-12), "{}: {a} vs {b}", w.name());
            }
        }
    }

    #[test]
    fn subdifferential_examples() {
        let w = AnisotropyModel::euclidean(2).unwrap();
        assert!(w.subdifferential_contains([0.0, 0.0], [0.5, 0.0], 1e-9));
        assert!(!w.subdifferential_contains([0.0, 0.0], [1.1, 0.0], 1e-9));
        assert!(w.subdifferential_contains([1.0, 0.0], [1.0, 0.0], 1e-9));
        assert!(!w.subdifferential_contains([1.0, 0.0], [0.9, 0.0], 1e-9));
        assert!(!w.subdifferential_contains([1.0, 0.0], [1.0, 0.1], 1e-9));
    }

    #[test]
    fn projection_is_a_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for w in models() {
            for _ in 0..200 {
                let z = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let x = w.project_wulff(z);
                assert!(w.polar(x) <= 1.0 + 1e-12, "{}", w.name());
                if w.polar(w.restrict(z)) <= 1.0 {
                    assert_eq!(x, w.restrict(z));
                    continue;
                }
                // variational inequality against random feasible points
                for _ in 0..10 {
                    let y = w.project_wulff([rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
                    let lhs = linalg::dot(linalg::sub(w.restrict(z), x), linalg::sub(y, x));
                    assert!(lhs <= 1e-9, "{}: {lhs}", w.name());
                }
            }
        }
    }

    #[test]
    fn lower_bound_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for w in models() {
            for _ in 0..500 {
                let p = w.restrict([rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
                let r = linalg::norm(p);
                assert!(w.eval(p) >= w.lambda0() * r * (1.0 - 1e-12));
                assert!(w.eval(p) <= w.upper_constant() * r * (1.0 + 1e-12));
            }
        }
    }

    proptest! {
        #[test]
        fn one_homogeneity(a in 1e-3f64..10.0, p0 in -5.0f64..5.0, p1 in -5.0f64..5.0, which in 0usize..6) {
            let w = &models()[which];
            let p = [p0, p1];
            let lhs = w.eval(linalg::scale(p, a));
            let rhs = a * w.eval(p);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * a * w.eval(p).max(1e-300) + 1e-300);
        }

        #[test]
        fn midpoint_convexity(p0 in -5.0f64..5.0, p1 in -5.0f64..5.0, q0 in -5.0f64..5.0, q1 in -5.0f64..5.0, which in 0usize..6) {
            let w = &models()[which];
            let p = [p0, p1];
            let q = [q0, q1];
            let mid = w.eval(linalg::scale(linalg::add(p, q), 0.5));
            prop_assert!(mid <= 0.5 * (w.eval(p) + w.eval(q)) + 1e-12);
        }

        #[test]
        fn dual_norm_is_homogeneous(a in 0.01f64..10.0, x0 in -3.0f64..3.0, x1 in -3.0f64..3.0, which in 0usize..6) {
            let w = &models()[which];
            let x = [x0, x1];
            let lhs = w.dual_norm(linalg::scale(x, a)).unwrap();
            let rhs = a * w.dual_norm(x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1e-12));
        }
    }
}
