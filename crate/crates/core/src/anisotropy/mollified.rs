//! Smooth regularizations `W_m(p) = (W * φ_{1/m})(p) + |p|²/m`.
//!
//! By homogeneity `(W * φ_{1/m})(p) = V(m p) / m` with `V = W * φ`, so all the
//! quadrature work happens once, for `V`.
//!
//! In one dimension `V` has closed forms in terms of tail integrals of the
//! mollifier. In two dimensions the integrals are taken in polar coordinates
//! around the kink of `W`: with `v = ρ e_θ`,
//!
//! ```text
//! V(y)   = ∫ W(e_θ)   ∫ ρ² φ(y - ρ e_θ) dρ dθ
//! ∇V(y)  = ∫ ∇W(e_θ)  ∫ ρ  φ(y - ρ e_θ) dρ dθ
//! ∇²V(y) = ∫ ∇²W(e_θ) ∫    φ(y - ρ e_θ) dρ dθ
//! ```
//!
//! so every integrand is smooth and each inner integral runs over a chord of
//! the unit disk.

use std::sync::OnceLock;

use serde::Serialize;

use super::AnisotropyModel;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};
use crate::quadrature;

const CHORD_NODES: usize = 64;
const WINDOW_NODES: usize = 96;
const CIRCLE_NODES: usize = 160;

/// A smooth convex density with exact first and second derivatives.
pub trait SmoothDensity: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, p: Vec2) -> f64;
    fn gradient(&self, p: Vec2) -> Vec2;
    fn hessian(&self, p: Vec2) -> Mat2;
}

/// `p ↦ ½ pᵀ Q p`, a smooth stand-in with a linear gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticDensity {
    q: Mat2,
    dim: usize,
}

impl QuadraticDensity {
    pub fn new(dim: usize, q: Mat2) -> Result<Self> {
        let q = if dim == 1 { [[q[0][0], 0.0], [0.0, 0.0]] } else { q };
        let (lo, _) = linalg::sym_eigenvalues(&q, dim);
        if !(lo > 0.0) || (dim == 2 && (q[0][1] - q[1][0]).abs() > 1e-14) {
            return Err(Error::InvalidArgument("quadratic density needs a symmetric positive definite matrix".into()));
        }
        Ok(QuadraticDensity { q, dim })
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.q
    }
}

impl SmoothDensity for QuadraticDensity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, p: Vec2) -> f64 {
        0.5 * linalg::dot(p, linalg::mat_vec(&self.q, p))
    }

    fn gradient(&self, p: Vec2) -> Vec2 {
        linalg::mat_vec(&self.q, p)
    }

    fn hessian(&self, _p: Vec2) -> Mat2 {
        self.q
    }
}

/// Normalizing constant of `exp(1/(|x|²-1))` on the unit ball.
fn mollifier_constant(dim: usize) -> f64 {
    static C: OnceLock<[f64; 2]> = OnceLock::new();
    let c = C.get_or_init(|| {
        let bump = |r: f64| if r < 1.0 { (1.0 / (r * r - 1.0)).exp() } else { 0.0 };
        let one = 2.0 * quadrature::integrate(0.0, 1.0, 200, bump);
        let two = std::f64::consts::TAU * quadrature::integrate(0.0, 1.0, 200, |r| r * bump(r));
        [1.0 / one, 1.0 / two]
    });
    c[dim - 1]
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticityEstimate {
    /// Bound with `a_m⁻¹ I <= ∇²W_m <= a_m I` on the sampled range.
    pub a_m: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Largest `|p|` sampled.
    pub sampled_radius: f64,
    pub samples: usize,
}

/// `W_m` for a base anisotropy and an index `m >= 1`.
#[derive(Debug)]
pub struct MollifiedAnisotropy {
    base: AnisotropyModel,
    m: f64,
    c: f64,
    /// Directions on the unit circle with `W`, `∇W`, `∇²W`, used when `|y| < 1`.
    circle: Vec<(Vec2, f64, Vec2, Mat2)>,
    ellipticity: OnceLock<EllipticityEstimate>,
}

impl Clone for MollifiedAnisotropy {
    fn clone(&self) -> Self {
        let e = OnceLock::new();
        if let Some(v) = self.ellipticity.get() {
            let _ = e.set(v.clone());
        }
        MollifiedAnisotropy {
            base: self.base.clone(),
            m: self.m,
            c: self.c,
            circle: self.circle.clone(),
            ellipticity: e,
        }
    }
}

impl MollifiedAnisotropy {
    pub fn new(base: AnisotropyModel, m: f64) -> Result<Self> {
        if !(m >= 1.0) || !m.is_finite() {
            return Err(Error::InvalidArgument(format!("mollification index must be >= 1, got {m}")));
        }
        let dim = base.dim();
        let c = mollifier_constant(dim);
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::Quadrature("mollifier does not normalize".into()));
        }
        let circle = if dim == 2 {
            (0..CIRCLE_NODES)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / CIRCLE_NODES as f64;
                    let e = [t.cos(), t.sin()];
                    let h = base.hess(e).expect("unit direction");
                    (e, base.eval(e), base.grad_unchecked(e), h)
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(MollifiedAnisotropy { base, m, c, circle, ellipticity: OnceLock::new() })
    }

    pub fn base(&self) -> &AnisotropyModel {
        &self.base
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Mollifier radius `1/m`.
    pub fn radius(&self) -> f64 {
        1.0 / self.m
    }

    /// One dimension: `V = c(|y| + 2 ∫_{|y|}^1 (u - |y|) φ(u) du)`.
    fn base_1d(&self, y: f64) -> (f64, f64, f64) {
        let k = self.base.eval([1.0, 0.0]);
        let a = y.abs();
        if a >= 1.0 {
            return (k * a, k * y.signum(), 0.0);
        }
        let c = self.c;
        let phi = |u: f64| if u < 1.0 { c * (1.0 / (u * u - 1.0)).exp() } else { 0.0 };
        let mut t0 = 0.0;
        let mut t1 = 0.0;
        let half = 0.5 * (1.0 - a);
        let mid = 0.5 * (1.0 + a);
        for &(x, w) in quadrature::gauss_legendre(CHORD_NODES) {
            let u = mid + half * x;
            let f = w * half * phi(u);
            t0 += f;
            t1 += f * (u - a);
        }
        let sign = if y > 0.0 {
            1.0
        } else if y < 0.0 {
            -1.0
        } else {
            0.0
        };
        (k * (a + 2.0 * t1), k * sign * (1.0 - 2.0 * t0), 2.0 * k * phi(a))
    }

    /// Chord integrals `∫ ρ^k φ(y - ρ e) dρ` for `k = 0, 1, 2`.
    #[inline]
    fn chord(&self, y: Vec2, e: Vec2) -> [f64; 3] {
        let b = linalg::dot(y, e);
        let d = 1.0 - (linalg::dot(y, y) - b * b);
        if d <= 0.0 {
            return [0.0; 3];
        }
        let sd = d.sqrt();
        let hi = b + sd;
        if hi <= 0.0 {
            return [0.0; 3];
        }
        let lo = (b - sd).max(0.0);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut k = [0.0; 3];
        for &(x, w) in quadrature::gauss_legendre(CHORD_NODES) {
            let rho = mid + half * x;
            let s = rho - b;
            let q = d - s * s;
            if q <= 0.0 {
                continue;
            }
            let f = w * (-1.0 / q).exp();
            k[0] += f;
            k[1] += f * rho;
            k[2] += f * rho * rho;
        }
        let scale = half * self.c;
        [k[0] * scale, k[1] * scale, k[2] * scale]
    }

    fn base_2d(&self, y: Vec2, with_hessian: bool) -> (f64, Vec2, Mat2) {
        let mut v = 0.0;
        let mut g = [0.0; 2];
        let mut h = linalg::ZERO_MAT;
        let r = linalg::norm(y);
        let mut add = |e: Vec2, w: f64, we: f64, ge: Vec2, he: Option<Mat2>| {
            let k = self.chord(y, e);
            v += w * we * k[2];
            g[0] += w * ge[0] * k[1];
            g[1] += w * ge[1] * k[1];
            if let Some(he) = he {
                for i in 0..2 {
                    for j in 0..2 {
                        h[i][j] += w * he[i][j] * k[0];
                    }
                }
            }
        };
        if r < 1.0 {
            let w = std::f64::consts::TAU / CIRCLE_NODES as f64;
            for &(e, we, ge, he) in &self.circle {
                add(e, w, we, ge, with_hessian.then_some(he));
            }
        } else {
            // only directions within the cone seen from y contribute
            let omega = (1.0 / r).asin();
            let t0 = y[1].atan2(y[0]);
            for &(x, w) in quadrature::gauss_legendre(WINDOW_NODES) {
                let t = t0 + omega * x;
                let e = [t.cos(), t.sin()];
                let he = if with_hessian { Some(self.base.hess(e).expect("unit direction")) } else { None };
                add(e, w * omega, self.base.eval(e), self.base.grad_unchecked(e), he);
            }
        }
        (v, g, h)
    }

    /// `V = W * φ` with gradient and Hessian.
    pub fn base_all(&self, y: Vec2) -> (f64, Vec2, Mat2) {
        if self.base.dim() == 1 {
            let (v, g, h) = self.base_1d(y[0]);
            return (v, [g, 0.0], [[h, 0.0], [0.0, 0.0]]);
        }
        self.base_2d(y, true)
    }

    /// `∇V(y)`.
    pub fn base_gradient(&self, y: Vec2) -> Vec2 {
        if self.base.dim() == 1 {
            return [self.base_1d(y[0]).1, 0.0];
        }
        self.base_2d(y, false).1
    }

    /// Value, gradient and Hessian of `W_m` at `p`.
    pub fn all(&self, p: Vec2) -> (f64, Vec2, Mat2) {
        let m = self.m;
        let dim = self.base.dim();
        let p = if dim == 1 { [p[0], 0.0] } else { p };
        let (v, g, h) = self.base_all(linalg::scale(p, m));
        let value = v / m + linalg::dot(p, p) / m;
        let grad = linalg::add(g, linalg::scale(p, 2.0 / m));
        let hess = linalg::mat_add(&linalg::mat_scale(&h, m), &linalg::mat_scale(&linalg::identity(dim), 2.0 / m));
        (value, grad, hess)
    }

    /// Sampled ellipticity bound `a_m`, computed once.
    pub fn ellipticity(&self) -> &EllipticityEstimate {
        self.ellipticity.get_or_init(|| self.estimate_ellipticity())
    }

    pub fn a_m(&self) -> f64 {
        self.ellipticity().a_m
    }

    fn estimate_ellipticity(&self) -> EllipticityEstimate {
        let dim = self.base.dim();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut samples = 0;
        let mut record = |y: Vec2| {
            let (_, _, h) = self.base_all(y);
            let (a, b) = linalg::sym_eigenvalues(&h, dim);
            lo = lo.min(self.m * a + 2.0 / self.m);
            hi = hi.max(self.m * b + 2.0 / self.m);
            samples += 1;
        };
        // dense where the mollifier sees the kink of W
        let reach = 1.5;
        let k = if dim == 1 { 600 } else { 48 };
        let step = 2.0 * reach / k as f64;
        if dim == 1 {
            for i in 0..=k {
                record([-reach + i as f64 * step, 0.0]);
            }
        } else {
            for i in 0..=k {
                for j in 0..=k {
                    record([-reach + i as f64 * step, -reach + j as f64 * step]);
                }
            }
        }
        // radial samples out to |p| = 10
        let outer = 10.0 * self.m;
        let dirs = if dim == 1 { 2 } else { 32 };
        for d in 0..dirs {
            let t = std::f64::consts::TAU * d as f64 / dirs as f64;
            let e = if dim == 1 { [if d == 0 { 1.0 } else { -1.0 }, 0.0] } else { [t.cos(), t.sin()] };
            let mut r = reach;
            while r <= outer {
                record(linalg::scale(e, r));
                r *= 1.25;
            }
        }
        EllipticityEstimate {
            a_m: hi.max(1.0 / lo),
            min_eigenvalue: lo,
            max_eigenvalue: hi,
            sampled_radius: outer / self.m,
            samples,
        }
    }
}

impl SmoothDensity for MollifiedAnisotropy {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, p: Vec2) -> f64 {
        let m = self.m;
        let dim = self.base.dim();
        let p = if dim == 1 { [p[0], 0.0] } else { p };
        let y = linalg::scale(p, m);
        let v = if dim == 1 { self.base_1d(y[0]).0 } else { self.base_2d(y, false).0 };
        v / m + linalg::dot(p, p) / m
    }

    fn gradient(&self, p: Vec2) -> Vec2 {
        let m = self.m;
        let dim = self.base.dim();
        let p = if dim == 1 { [p[0], 0.0] } else { p };
        let g = self.base_gradient(linalg::scale(p, m));
        linalg::add(g, linalg::scale(p, 2.0 / m))
    }

    fn hessian(&self, p: Vec2) -> Mat2 {
        self.all(p).2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bases() -> Vec<AnisotropyModel> {
        vec![
            AnisotropyModel::euclidean(1).unwrap(),
            AnisotropyModel::euclidean(2).unwrap(),
            AnisotropyModel::elliptic(2, [[4.0, 0.0], [0.0, 1.0]]).unwrap(),
            AnisotropyModel::quartic(2).unwrap(),
        ]
    }

    /// Brute-force `∫ W(y - u) φ(u) du` by a fine midpoint rule in `u`.
    fn brute_force(base: &AnisotropyModel, y: Vec2, n: usize) -> f64 {
        let dim = base.dim();
        let c = mollifier_constant(dim);
        let h = 2.0 / n as f64;
        let phi = |u: Vec2| {
            let r2 = u[0] * u[0] + u[1] * u[1];
            if r2 < 1.0 {
                c * (1.0 / (r2 - 1.0)).exp()
            } else {
                0.0
            }
        };
        let mut s = 0.0;
        if dim == 1 {
            for i in 0..n {
                let u = [-1.0 + (i as f64 + 0.5) * h, 0.0];
                s += base.eval(linalg::sub(y, u)) * phi(u) * h;
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    let u = [-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h];
                    s += base.eval(linalg::sub(y, u)) * phi(u) * h * h;
                }
            }
        }
        s
    }

    #[test]
    fn convolution_matches_brute_force() {
        for base in bases() {
            let w = MollifiedAnisotropy::new(base.clone(), 1.0).unwrap();
            let n = if base.dim() == 1 { 200_000 } else { 1500 };
            for y in [[0.0, 0.0], [0.3, -0.2], [0.95, 0.1], [1.2, 0.4], [-3.0, 2.0]] {
                let exact = brute_force(&base, y, n);
                let v = w.base_all(y).0;
                assert!((v - exact).abs() < 2e-6, "{} at {y:?}: {v} vs {exact}", base.name());
            }
        }
    }

    #[test]
    fn positive_at_origin_and_above_base() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for base in bases() {
            let w = MollifiedAnisotropy::new(base.clone(), 4.0).unwrap();
            assert!(w.value([0.0, 0.0]) > 0.0);
            for _ in 0..100 {
                let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                let p = if base.dim() == 1 { [p[0], 0.0] } else { p };
                let lower = base.eval(p) + linalg::dot(p, p) / w.m();
                assert!(w.value(p) >= lower - 1e-12, "{} at {p:?}", base.name());
            }
        }
        assert!(MollifiedAnisotropy::new(AnisotropyModel::euclidean(1).unwrap(), 0.5).is_err());
    }

    #[test]
    fn decreasing_in_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for base in bases() {
            let ws: Vec<_> = (1..=6).map(|m| MollifiedAnisotropy::new(base.clone(), m as f64).unwrap()).collect();
            for _ in 0..50 {
                let p = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
                for k in 0..5 {
                    assert!(ws[k + 1].value(p) <= ws[k].value(p) + 1e-12, "{} m={} p={p:?}", base.name(), k + 1);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for base in bases() {
            let w = MollifiedAnisotropy::new(base.clone(), 3.0).unwrap();
            let dim = base.dim();
            for _ in 0..30 {
                let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let p = if dim == 1 { [p[0], 0.0] } else { p };
                let (_, g, h) = w.all(p);
                let e = 1e-5;
                for i in 0..dim {
                    let mut pp = p;
                    let mut pm = p;
                    pp[i] += e;
                    pm[i] -= e;
                    let fd = (w.value(pp) - w.value(pm)) / (2.0 * e);
                    assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{} grad at {p:?}", base.name());
                    let gp = w.gradient(pp);
                    let gm = w.gradient(pm);
                    for j in 0..dim {
                        let fdh = (gp[j] - gm[j]) / (2.0 * e);
                        assert!((fdh - h[j][i]).abs() < 1e-5 * (1.0 + h[j][i].abs()), "{} hess at {p:?}", base.name());
                    }
                }
            }
        }
    }

    #[test]
    fn hessian_floor_near_origin() {
        for base in bases() {
            let m = 8.0;
            let w = MollifiedAnisotropy::new(base.clone(), m).unwrap();
            let dim = base.dim();
            let e = 1e-5;
            for i in 0..=10 {
                for j in 0..=10 {
                    let p = [-0.2 + 0.04 * i as f64, -0.2 + 0.04 * j as f64];
                    let p = if dim == 1 { [p[0], 0.0] } else { p };
                    // finite-difference Hessian from values
                    let mut h = linalg::ZERO_MAT;
                    for a in 0..dim {
                        for b in 0..dim {
                            let mut s = 0.0;
                            for (sa, sb, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                                let mut q = p;
                                q[a] += sa * e;
                                q[b] += sb * e;
                                s += sign * w.value(q);
                            }
                            h[a][b] = s / (4.0 * e * e);
                        }
                    }
                    let (lo, _) = linalg::sym_eigenvalues(&h, dim);
                    assert!(lo >= 2.0 / m - 1e-3, "{} at {p:?}: {lo}", base.name());
                }
            }
        }
    }

    #[test]
    fn ellipticity_estimate_is_consistent() {
        let w = MollifiedAnisotropy::new(AnisotropyModel::euclidean(1).unwrap(), 32.0).unwrap();
        let e = w.ellipticity();
        // the 1D second derivative of |.| * φ peaks at 2φ(0)
        let peak = 2.0 * mollifier_constant(1) * (-1f64).exp();
        assert!((e.max_eigenvalue - (32.0 * peak + 2.0 / 32.0)).abs() < 1e-9 * e.max_eigenvalue);
        assert!(e.a_m >= e.max_eigenvalue && e.a_m >= 1.0 / e.min_eigenvalue);
        assert!(e.min_eigenvalue >= 2.0 / 32.0 - 1e-9);
    }

    #[test]
    fn quadratic_density() {
        let q = QuadraticDensity::new(2, [[2.0, 0.5], [0.5, 1.0]]).unwrap();
        assert_eq!(q.value([1.0, 0.0]), 1.0);
        assert_eq!(q.gradient([1.0, 1.0]), [2.5, 1.5]);
        assert!(QuadraticDensity::new(2, [[1.0, 2.0], [2.0, 1.0]]).is_err());
    }
}
