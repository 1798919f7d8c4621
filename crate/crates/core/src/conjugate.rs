//! Discrete Legendre–Fenchel transforms and the conjugate barrier family
//! `W*_{m;A,q}` built from `W_{m;A,q}(p) = A(W_m(p) + q ψ(p/q) - W_m(0))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::anisotropy::{AnisotropyModel, MollifiedAnisotropy, SmoothDensity};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};
use crate::speed::SpeedLaw;

/// Function values on a uniform box grid; `None` marks `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledConvexFunction {
    dim: usize,
    lower: Vec2,
    upper: Vec2,
    n: usize,
    values: Vec<Option<f64>>,
    /// The sampled function stays finite beyond the box, so a conjugate whose
    /// maximizer sits on the box boundary is not resolved.
    unbounded_domain: bool,
}

impl SampledConvexFunction {
    pub fn new(dim: usize, lower: Vec2, upper: Vec2, n: usize, values: Vec<Option<f64>>, unbounded_domain: bool) -> Result<Self> {
        if !(dim == 1 || dim == 2) || n < 2 {
            return Err(Error::InvalidArgument("sampled function needs dim 1 or 2 and at least 2 nodes".into()));
        }
        if values.len() != n.pow(dim as u32) {
            return Err(Error::GridMismatch(format!("expected {} values, got {}", n.pow(dim as u32), values.len())));
        }
        for k in 0..dim {
            if !(upper[k] > lower[k]) {
                return Err(Error::InvalidArgument("empty sampling box".into()));
            }
        }
        Ok(SampledConvexFunction { dim, lower, upper, n, values, unbounded_domain })
    }

    pub fn from_fn(
        dim: usize,
        lower: Vec2,
        upper: Vec2,
        n: usize,
        unbounded_domain: bool,
        f: impl Fn(Vec2) -> Option<f64>,
    ) -> Result<Self> {
        let mut s = SampledConvexFunction::new(dim, lower, upper, n, vec![None; n.pow(dim as u32)], unbounded_domain)?;
        for i in 0..s.values.len() {
            s.values[i] = f(s.node(i)).filter(|v| v.is_finite());
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bounds(&self) -> (Vec2, Vec2) {
        (self.lower, self.upper)
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.n - 1) as f64
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.spacing(axis)
    }

    pub fn node(&self, idx: usize) -> Vec2 {
        if self.dim == 1 {
            [self.coord(0, idx), 0.0]
        } else {
            [self.coord(0, idx / self.n), self.coord(1, idx % self.n)]
        }
    }

    pub fn get(&self, idx: usize) -> Option<f64> {
        self.values[idx]
    }

    /// Multilinear interpolation; `None` outside the box or next to a sentinel.
    pub fn interpolate(&self, x: Vec2) -> Option<f64> {
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for k in 0..self.dim {
            let h = self.spacing(k);
            let t = (x[k] - self.lower[k]) / h;
            if t < -1e-9 || t > (self.n - 1) as f64 + 1e-9 {
                return None;
            }
            let i = (t.floor().max(0.0) as usize).min(self.n - 2);
            base[k] = i;
            frac[k] = (t - i as f64).clamp(0.0, 1.0);
        }
        if self.dim == 1 {
            let a = self.values[base[0]]?;
            let b = self.values[base[0] + 1]?;
            return Some(a + frac[0] * (b - a));
        }
        let at = |i: usize, j: usize| self.values[i * self.n + j];
        let (i, j) = (base[0], base[1]);
        let v00 = at(i, j)?;
        let v01 = at(i, j + 1)?;
        let v10 = at(i + 1, j)?;
        let v11 = at(i + 1, j + 1)?;
        let (s, t) = (frac[0], frac[1]);
        Some((1.0 - s) * ((1.0 - t) * v00 + t * v01) + s * ((1.0 - t) * v10 + t * v11))
    }
}

/// Exact discrete conjugate of a 1D sample set at sorted abscissae `xs`.
/// Returns the value and maximizing index, preferring interior maximizers.
fn conjugate_line(ps: &[f64], fs: &[Option<f64>], xs: &[f64]) -> Vec<Option<(f64, usize)>> {
    // lower convex hull of the finite points
    let mut hull: Vec<usize> = Vec::new();
    for (i, f) in fs.iter().enumerate() {
        let Some(fi) = *f else { continue };
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let (fa, fb) = (fs[a].unwrap(), fs[b].unwrap());
            // drop b when it lies on or above the chord from a to i
            let cross = (fb - fa) * (ps[i] - ps[a]) - (fi - fa) * (ps[b] - ps[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    if hull.is_empty() {
        return vec![None; xs.len()];
    }
    let last = ps.len() - 1;
    let value = |x: f64, k: usize| x * ps[hull[k]] - fs[hull[k]].unwrap();
    let mut out = Vec::with_capacity(xs.len());
    let mut k = 0;
    for &x in xs {
        while k + 1 < hull.len() && value(x, k + 1) > value(x, k) {
            k += 1;
        }
        let v = value(x, k);
        let mut arg = hull[k];
        if (arg == 0 || arg == last) && k + 1 < hull.len() {
            let w = value(x, k + 1);
            if (v - w).abs() <= 1e-13 * (1.0 + v.abs()) {
                arg = hull[k + 1];
            }
        }
        out.push(Some((v, arg)));
    }
    out
}

/// Discrete Legendre–Fenchel transform `f*(x) = max_p x·p - f(p)` over the
/// finite nodes of `f`, evaluated on a uniform grid over `[x_lower, x_upper]`.
pub fn legendre_transform(f: &SampledConvexFunction, x_lower: Vec2, x_upper: Vec2, x_n: usize) -> Result<SampledConvexFunction> {
    if f.values.iter().all(|v| v.is_none()) {
        return Err(Error::AllInfinite);
    }
    let dim = f.dim;
    let mut out = SampledConvexFunction::new(dim, x_lower, x_upper, x_n, vec![None; x_n.pow(dim as u32)], true)?;
    let n = f.n;
    let last = n - 1;
    let xs: Vec<Vec<f64>> = (0..dim).map(|k| (0..x_n).map(|i| out.coord(k, i)).collect()).collect();
    let ps: Vec<Vec<f64>> = (0..dim).map(|k| (0..n).map(|i| f.coord(k, i)).collect()).collect();
    if dim == 1 {
        for (i, r) in conjugate_line(&ps[0], &f.values, &xs[0]).into_iter().enumerate() {
            out.values[i] = r.and_then(|(v, a)| (!(f.unbounded_domain && (a == 0 || a == last))).then_some(v));
        }
        return Ok(out);
    }
    // inner pass along the second axis: g(p1, x2) = max_{p2} x2 p2 - f(p1, p2)
    let mut inner: Vec<Vec<Option<(f64, usize)>>> = Vec::with_capacity(n);
    for i in 0..n {
        let row = &f.values[i * n..(i + 1) * n];
        inner.push(conjugate_line(&ps[1], row, &xs[1]));
    }
    // outer pass along the first axis on -g
    for j in 0..x_n {
        let column: Vec<Option<f64>> = (0..n).map(|i| inner[i][j].map(|(v, _)| -v)).collect();
        for (i, r) in conjugate_line(&ps[0], &column, &xs[0]).into_iter().enumerate() {
            out.values[i * x_n + j] = r.and_then(|(v, a1)| {
                let a2 = inner[a1][j].map(|(_, a)| a).unwrap_or(0);
                let on_boundary = a1 == 0 || a1 == last || a2 == 0 || a2 == last;
                (!(f.unbounded_domain && on_boundary)).then_some(v)
            });
        }
    }
    Ok(out)
}

/// `ψ(p) = -ln(1 - |p|²)` on the open unit ball, `+∞` outside.
pub fn cap_function(p: Vec2) -> Option<f64> {
    let r2 = linalg::dot(p, p);
    if r2 < 1.0 {
        Some(-(-r2).ln_1p())
    } else {
        None
    }
}

/// Gradient and Hessian of [`cap_function`] inside the unit ball.
pub fn cap_derivatives(p: Vec2, dim: usize) -> (Vec2, Mat2) {
    let s = 1.0 - linalg::dot(p, p);
    let g = linalg::scale(p, 2.0 / s);
    let h = linalg::mat_add(
        &linalg::mat_scale(&linalg::identity(dim), 2.0 / s),
        &linalg::mat_scale(&linalg::outer(p, p), 4.0 / (s * s)),
    );
    (g, h)
}

/// Conjugate data at one point: value, gradient `p* = ∇W*(x)`, Hessian and
/// `L_m(W*)(x) = tr[∇²W_m(p*) ∇²W*(x)]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConjugatePoint {
    pub x: Vec2,
    pub value: f64,
    pub gradient: Vec2,
    pub hessian: Mat2,
    pub operator: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LemmaReport {
    pub samples: usize,
    /// Largest `|∇W*(x)| / q`; below one when the gradient bound holds.
    pub max_gradient_ratio: f64,
    pub min_operator: f64,
    pub max_operator: f64,
    /// `n / A`
    pub operator_bound: f64,
    pub gradient_violations: usize,
    pub operator_violations: usize,
    pub min_value: f64,
    /// Worst relative mismatch between the difference-quotient Hessian of
    /// `W*` and the inverse Hessian of the density.
    pub max_hessian_identity_error: f64,
    pub hessian_samples: usize,
}

impl LemmaReport {
    pub fn passed(&self, hessian_tolerance: f64) -> bool {
        self.gradient_violations == 0
            && self.operator_violations == 0
            && self.min_value >= -1e-12
            && self.max_hessian_identity_error <= hessian_tolerance
    }
}

/// How the barrier constants were chosen.
#[derive(Clone, Debug, Serialize)]
pub struct ParameterChoice {
    pub delta: f64,
    pub k: f64,
    pub mu: f64,
    pub a: f64,
    pub q: f64,
    pub m0: f64,
    /// `(m, sup_{|p|=q/2} |W_m(p) - W_m(0) - W(p)|)` along the doubling search.
    pub m0_search: Vec<(f64, f64)>,
    pub mu_samples: usize,
    /// Smallest sampled `W*(x)` over `|x| >= δ`, per verified `m`.
    pub lower_bound_checks: Vec<(f64, f64)>,
    pub verification_samples: usize,
}

/// `W_{m;A,q}` together with its conjugate.
#[derive(Clone, Debug)]
pub struct BarrierFamily {
    m: f64,
    a: f64,
    q: f64,
    dim: usize,
    wm: MollifiedAnisotropy,
    wm0: f64,
    beta: Option<f64>,
    table: SampledConvexFunction,
    report: LemmaReport,
    provenance: Option<ParameterChoice>,
}

/// Half-width of the tabulated conjugate; periodization needs `|x| <= 1.5`.
const TABLE_HALF_WIDTH: f64 = 2.0;

impl BarrierFamily {
    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    pub fn mollified(&self) -> &MollifiedAnisotropy {
        &self.wm
    }

    pub fn table(&self) -> &SampledConvexFunction {
        &self.table
    }

    pub fn report(&self) -> &LemmaReport {
        &self.report
    }

    pub fn provenance(&self) -> Option<&ParameterChoice> {
        self.provenance.as_ref()
    }

    /// Attach `β_{A,q}` for a speed law.
    pub fn with_speed(mut self, law: &SpeedLaw) -> Self {
        self.beta = Some(beta_aq(law, self.a, self.q, self.dim).value);
        self
    }

    /// `W_{m;A,q}(p)`, `+∞` outside the open ball of radius `q`.
    pub fn density(&self, p: Vec2) -> Option<f64> {
        let cap = cap_function(linalg::scale(p, 1.0 / self.q))?;
        Some(self.a * (self.wm.value(p) + self.q * cap - self.wm0))
    }

    fn density_all(&self, p: Vec2) -> (f64, Vec2, Mat2) {
        let (v, g, h) = self.wm.all(p);
        let u = linalg::scale(p, 1.0 / self.q);
        let cap = cap_function(u).unwrap_or(f64::INFINITY);
        let (cg, ch) = cap_derivatives(u, self.dim);
        let value = self.a * (v + self.q * cap - self.wm0);
        let grad = linalg::scale(linalg::add(g, cg), self.a);
        let hess = linalg::mat_scale(&linalg::mat_add(&h, &linalg::mat_scale(&ch, 1.0 / self.q)), self.a);
        (value, grad, hess)
    }

    /// Solve `∇W_{m;A,q}(p) = x` by damped Newton inside the ball `|p| < q`.
    pub fn conjugate(&self, x: Vec2) -> Result<ConjugatePoint> {
        let dim = self.dim;
        let x = if dim == 1 { [x[0], 0.0] } else { x };
        let mut p = [0.0; 2];
        // warm start from the tabulated maximizer direction when available
        let scale = 1.0 + linalg::norm(x);
        let mut last = self.density_all(p);
        for _ in 0..200 {
            let (v, g, h) = last;
            let r = linalg::sub(g, x);
            if linalg::norm(r) <= 1e-12 * scale {
                break;
            }
            let d = linalg::solve(&h, r, dim).ok_or(Error::Singular("conjugate hessian"))?;
            let obj = v - linalg::dot(x, p);
            let slope = linalg::dot(r, d);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = linalg::sub(p, linalg::scale(d, t));
                if linalg::norm(cand) < self.q {
                    let next = self.density_all(cand);
                    let decrease = next.0 - linalg::dot(x, cand) <= obj - 1e-4 * t * slope;
                    // the objective stalls at rounding level before the residual does
                    let closer = linalg::norm(linalg::sub(next.1, x)) < 0.5 * linalg::norm(r);
                    if decrease || closer {
                        p = cand;
                        last = next;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                // no further decrease at working precision
                break;
            }
        }
        let (v, g, h) = last;
        let res = linalg::norm(linalg::sub(g, x));
        // near the cap the Hessian is huge and the residual floor grows with it
        let stiff = h.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let tolerance = 1e-8 * scale + 1e-13 * self.q * stiff;
        if !(res <= tolerance) {
            return Err(Error::Tolerance { tolerance, achieved: res });
        }
        let inv = linalg::inverse(&h, dim).ok_or(Error::Singular("conjugate hessian"))?;
        let hm = self.wm.hessian(p);
        Ok(ConjugatePoint {
            x,
            value: linalg::dot(x, p) - v,
            gradient: p,
            hessian: inv,
            operator: linalg::trace_product(&hm, &inv, dim),
        })
    }

    /// Tabulated conjugate (multilinear), falling back to the exact solve.
    pub fn conjugate_value(&self, x: Vec2) -> f64 {
        match self.table.interpolate(x) {
            Some(v) => v,
            None => self.conjugate(x).map(|c| c.value).unwrap_or(f64::INFINITY),
        }
    }

    fn periodic_min(&self, x: Vec2, xi0: Vec2, exact: bool) -> (f64, Vec2) {
        let mut d = linalg::sub(x, xi0);
        for k in 0..self.dim {
            d[k] -= d[k].round();
        }
        let mut best = (f64::INFINITY, d);
        let shifts: &[f64] = &[-1.0, 0.0, 1.0];
        let second: &[f64] = if self.dim == 1 { &[0.0] } else { shifts };
        for &a in shifts {
            for &b in second {
                let y = [d[0] + a, d[1] + b];
                let v = if exact { self.conjugate(y).map(|c| c.value).unwrap_or(f64::INFINITY) } else { self.conjugate_value(y) };
                if v < best.0 {
                    best = (v, y);
                }
            }
        }
        best
    }

    /// `inf_k β t + W*(x + k - ξ₀) + offset`.
    pub fn upper(&self, x: Vec2, t: f64, xi0: Vec2, offset: f64) -> f64 {
        let beta = self.beta.unwrap_or(0.0);
        beta * t + self.periodic_min(x, xi0, true).0 + offset
    }

    /// `sup_k offset - β t - W*(x + k - ξ₀)`.
    pub fn lower(&self, x: Vec2, t: f64, xi0: Vec2, offset: f64) -> f64 {
        let beta = self.beta.unwrap_or(0.0);
        offset - beta * t - self.periodic_min(x, xi0, true).0
    }

    /// Exact conjugate data at the minimizing periodic copy of `x - ξ₀`.
    pub fn upper_point(&self, x: Vec2, xi0: Vec2) -> Result<ConjugatePoint> {
        let (_, y) = self.periodic_min(x, xi0, true);
        self.conjugate(y)
    }

    /// Check the conjugate lemmas at `samples` random points with `|x_i| <= radius`.
    pub fn verify(&self, samples: usize, hessian_samples: usize, radius: f64, seed: u64) -> Result<LemmaReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.dim;
        let bound = dim as f64 / self.a;
        let mut rep = LemmaReport {
            samples,
            operator_bound: bound,
            min_operator: f64::INFINITY,
            min_value: f64::INFINITY,
            hessian_samples,
            ..Default::default()
        };
        let draw = |rng: &mut ChaCha8Rng| -> Vec2 {
            let a = rng.gen_range(-radius..radius);
            let b = if dim == 2 { rng.gen_range(-radius..radius) } else { 0.0 };
            [a, b]
        };
        for _ in 0..samples {
            let x = draw(&mut rng);
            let c = self.conjugate(x)?;
            let ratio = linalg::norm(c.gradient) / self.q;
            rep.max_gradient_ratio = rep.max_gradient_ratio.max(ratio);
            if ratio >= 1.0 {
                rep.gradient_violations += 1;
            }
            rep.min_operator = rep.min_operator.min(c.operator);
            rep.max_operator = rep.max_operator.max(c.operator);
            if !(c.operator > 0.0 && c.operator <= bound * (1.0 + 1e-9)) {
                rep.operator_violations += 1;
            }
            rep.min_value = rep.min_value.min(c.value);
        }
        for _ in 0..hessian_samples {
            let x = draw(&mut rng);
            let c = self.conjugate(x)?;
            let e = 1e-5 * (1.0 + linalg::norm(x));
            let mut fd = linalg::ZERO_MAT;
            for j in 0..dim {
                let mut xp = x;
                let mut xm = x;
                xp[j] += e;
                xm[j] -= e;
                let gp = self.conjugate(xp)?.gradient;
                let gm = self.conjugate(xm)?.gradient;
                for i in 0..dim {
                    fd[i][j] = (gp[i] - gm[i]) / (2.0 * e);
                }
            }
            let err = linalg::relative_difference(&fd, &c.hessian, dim);
            rep.max_hessian_identity_error = rep.max_hessian_identity_error.max(err);
        }
        Ok(rep)
    }
}

/// Tabulate `W_{m;A,q}`, conjugate it and check the lemma bounds at a few
/// hundred samples.
pub fn build_barrier(m: f64, a: f64, q: f64, w: &AnisotropyModel) -> Result<BarrierFamily> {
    if !(m >= 1.0 && a > 0.0 && q > 0.0) {
        return Err(Error::InvalidArgument(format!("barrier needs m >= 1, A > 0, q > 0 (got {m}, {a}, {q})")));
    }
    let dim = w.dim();
    let wm = MollifiedAnisotropy::new(w.clone(), m)?;
    let wm0 = wm.value([0.0, 0.0]);
    let mut family = BarrierFamily {
        m,
        a,
        q,
        dim,
        wm,
        wm0,
        beta: None,
        table: SampledConvexFunction::new(dim, [-1.0, -1.0], [1.0, 1.0], 2, vec![None; 2usize.pow(dim as u32)], false)?,
        report: LemmaReport::default(),
        provenance: None,
    };
    let (pn, xn) = if dim == 1 { (4097, 801) } else { (121, 81) };
    let density = SampledConvexFunction::from_fn(dim, [-q, -q], [q, q], pn, false, |p| family.density(p))?;
    let hw = TABLE_HALF_WIDTH;
    family.table = legendre_transform(&density, [-hw, -hw], [hw, hw], xn)?;
    let report = family.verify(if dim == 1 { 400 } else { 100 }, 10, hw, 0x5eed)?;
    if report.gradient_violations > 0 {
        return Err(Error::Construction { check: "gradient bound", x: [0.0, 0.0], value: report.max_gradient_ratio * q, bound: q });
    }
    if report.operator_violations > 0 {
        let value = if report.min_operator <= 0.0 { report.min_operator } else { report.max_operator };
        return Err(Error::Construction { check: "operator bound", x: [0.0, 0.0], value, bound: report.operator_bound });
    }
    family.report = report;
    Ok(family)
}

#[derive(Clone, Debug, Serialize)]
pub struct BetaEstimate {
    pub value: f64,
    pub argmax_p: Vec2,
    pub argmax_xi: f64,
    pub samples: usize,
}

/// `β_{A,q} = sup{|F(p, ξ)| : |p| <= q, |ξ| <= n/A} + 1`.
pub fn beta_aq(law: &SpeedLaw, a: f64, q: f64, dim: usize) -> BetaEstimate {
    let xi_max = dim as f64 / a;
    let radii = 33;
    let dirs = if dim == 1 { 2 } else { 64 };
    let xis = 65;
    let point = |r: f64, t: f64| -> Vec2 {
        if dim == 1 {
            [if t < std::f64::consts::PI { r } else { -r }, 0.0]
        } else {
            [r * t.cos(), r * t.sin()]
        }
    };
    let mut best = (f64::NEG_INFINITY, [0.0; 2], 0.0, 0.0, 0.0);
    let mut samples = 0;
    for i in 0..radii {
        let r = q * i as f64 / (radii - 1) as f64;
        for d in 0..dirs {
            let t = std::f64::consts::TAU * d as f64 / dirs as f64;
            let p = point(r, t);
            for k in 0..xis {
                let xi = -xi_max + 2.0 * xi_max * k as f64 / (xis - 1) as f64;
                let v = law.eval(p, xi).abs();
                samples += 1;
                if v > best.0 {
                    best = (v, p, xi, r, t);
                }
            }
        }
    }
    // coordinate refinement around the best sample, clamped to the domain
    let (mut v, _, mut xi, mut r, mut t) = best;
    let mut steps = [q / (radii - 1) as f64, std::f64::consts::TAU / dirs as f64, 2.0 * xi_max / (xis - 1) as f64];
    for _ in 0..60 {
        let mut improved = false;
        for (c, step) in steps.iter().enumerate() {
            for s in [-1.0, 1.0] {
                let (mut r2, mut t2, mut x2) = (r, t, xi);
                match c {
                    0 => r2 = (r + s * step).clamp(0.0, q),
                    1 => t2 = t + s * step,
                    _ => x2 = (xi + s * step).clamp(-xi_max, xi_max),
                }
                let cand = law.eval(point(r2, t2), x2).abs();
                samples += 1;
                if cand > v {
                    v = cand;
                    r = r2;
                    t = t2;
                    xi = x2;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
        }
    }
    BetaEstimate { value: v + 1.0, argmax_p: point(r, t), argmax_xi: xi, samples }
}

/// Constants of the lower-bound lemma: `μ`, `A = δ/(8μ)`, `q = 8K/δ` and the
/// smallest dyadic `m₀`, followed by a sampled check of `W* >= 2K` on `|x| >= δ`.
pub fn choose_parameters(delta: f64, k: f64, w: &AnisotropyModel) -> Result<ParameterChoice> {
    if !(delta > 0.0 && k > 0.0) {
        return Err(Error::InvalidArgument("δ and K must be positive".into()));
    }
    let dim = w.dim();
    let dirs = if dim == 1 { 2 } else { 4096 };
    let dir = |i: usize| -> Vec2 {
        if dim == 1 {
            [if i == 0 { 1.0 } else { -1.0 }, 0.0]
        } else {
            let t = std::f64::consts::TAU * i as f64 / dirs as f64;
            [t.cos(), t.sin()]
        }
    };
    let cap_half = cap_function([0.5, 0.0]).expect("inside the unit ball");
    let mu = (0..dirs).map(|i| w.eval(linalg::scale(dir(i), 0.5))).fold(f64::NEG_INFINITY, f64::max) + cap_half;
    let a = delta / (8.0 * mu);
    let q = 8.0 * k / delta;
    let probe_dirs = if dim == 1 { 2 } else { 256 };
    let mut m = 1.0;
    let mut search = Vec::new();
    let m0 = loop {
        let wm = MollifiedAnisotropy::new(w.clone(), m)?;
        let w0 = wm.value([0.0, 0.0]);
        let dev = (0..probe_dirs)
            .map(|i| {
                let e = if dim == 1 {
                    dir(i)
                } else {
                    let t = std::f64::consts::TAU * i as f64 / probe_dirs as f64;
                    [t.cos(), t.sin()]
                };
                let p = linalg::scale(e, q / 2.0);
                (wm.value(p) - w0 - w.eval(p)).abs()
            })
            .fold(0.0, f64::max);
        search.push((m, dev));
        if dev <= q * mu {
            break m;
        }
        m *= 2.0;
        if m > 1e7 {
            return Err(Error::Parameters { x: [0.0, 0.0], value: dev, bound: q * mu });
        }
    };
    let mut choice = ParameterChoice {
        delta,
        k,
        mu,
        a,
        q,
        m0,
        m0_search: search,
        mu_samples: dirs,
        lower_bound_checks: Vec::new(),
        verification_samples: 0,
    };
    let samples = if dim == 1 { 1000 } else { 200 };
    for mm in [m0, 2.0 * m0] {
        let fam = BarrierFamily {
            m: mm,
            a,
            q,
            dim,
            wm: MollifiedAnisotropy::new(w.clone(), mm)?,
            wm0: 0.0,
            beta: None,
            table: SampledConvexFunction::new(dim, [-1.0, -1.0], [1.0, 1.0], 2, vec![None; 2usize.pow(dim as u32)], false)?,
            report: LemmaReport::default(),
            provenance: None,
        };
        let fam = BarrierFamily { wm0: fam.wm.value([0.0, 0.0]), ..fam };
        let mut worst = f64::INFINITY;
        for i in 0..samples {
            // radii in [δ, 2δ], directions spread evenly
            let s = i as f64 / samples as f64;
            let r = delta * (1.0 + (i % 10) as f64 / 9.0);
            let x = if dim == 1 {
                [if i % 2 == 0 { r } else { -r }, 0.0]
            } else {
                let t = std::f64::consts::TAU * s;
                [r * t.cos(), r * t.sin()]
            };
            let c = fam.conjugate(x)?;
            if c.value < 2.0 * k {
                return Err(Error::Parameters { x, value: c.value, bound: 2.0 * k });
            }
            worst = worst.min(c.value);
        }
        choice.lower_bound_checks.push((mm, worst));
        choice.verification_samples += samples;
    }
    Ok(choice)
}

/// Barrier family with constants from [`choose_parameters`].
pub fn barrier_from_parameters(choice: &ParameterChoice, w: &AnisotropyModel, law: &SpeedLaw) -> Result<BarrierFamily> {
    let mut fam = build_barrier(choice.m0, choice.a, choice.q, w)?.with_speed(law);
    fam.provenance = Some(choice.clone());
    Ok(fam)
}
