//! Periodic uniform grids on the unit torus in one or two dimensions.
//!
//! Nodes sit at `i * h` with `h = 1 / N`; every index wraps modulo `N`.
//! Values are stored once per fundamental domain in row-major order
//! (axis 0 is the slow axis).
//!
//! The discrete gradient is a forward difference and the discrete divergence
//! a backward difference, so that `<grad u, z> = -<u, div z>` holds exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;

/// Smallest admissible resolution per axis.
pub const MIN_RESOLUTION: usize = 8;

/// Tie tolerance for closed balls, in squared grid units.
const BALL_TIE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < MIN_RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "resolution must be at least {MIN_RESOLUTION}, got {n}"
            )));
        }
        Ok(Grid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Node volume `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stride of `axis` in the flat storage.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        if self.dim == 2 && axis == 0 {
            self.n
        } else {
            1
        }
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    #[inline]
    pub fn index(&self, c: [usize; 2]) -> usize {
        if self.dim == 1 {
            c[0] % self.n
        } else {
            (c[0] % self.n) * self.n + (c[1] % self.n)
        }
    }

    /// Node index shifted by a signed offset, wrapping on every axis.
    #[inline]
    pub fn offset(&self, idx: usize, d: [isize; 2]) -> usize {
        let n = self.n as isize;
        let c = self.coords(idx);
        let a = (c[0] as isize + d[0]).rem_euclid(n) as usize;
        if self.dim == 1 {
            a
        } else {
            let b = (c[1] as isize + d[1]).rem_euclid(n) as usize;
            a * self.n + b
        }
    }

    #[inline]
    pub fn forward(&self, idx: usize, axis: usize) -> usize {
        let c = self.coords(idx);
        let mut c2 = c;
        c2[axis] = (c[axis] + 1) % self.n;
        self.index(c2)
    }

    #[inline]
    pub fn backward(&self, idx: usize, axis: usize) -> usize {
        let c = self.coords(idx);
        let mut c2 = c;
        c2[axis] = (c[axis] + self.n - 1) % self.n;
        self.index(c2)
    }

    /// Position of a node in `[0, 1)^n`.
    pub fn point(&self, idx: usize) -> Vec2 {
        let c = self.coords(idx);
        let h = self.spacing();
        if self.dim == 1 {
            [c[0] as f64 * h, 0.0]
        } else {
            [c[0] as f64 * h, c[1] as f64 * h]
        }
    }

    /// Nearest node to a point of the torus.
    pub fn nearest(&self, x: Vec2) -> usize {
        let n = self.n as f64;
        let i0 = ((x[0].rem_euclid(1.0) * n).round() as usize) % self.n;
        if self.dim == 1 {
            i0
        } else {
            let i1 = ((x[1].rem_euclid(1.0) * n).round() as usize) % self.n;
            i0 * self.n + i1
        }
    }

    /// Squared torus distance between two nodes in grid units.
    pub fn node_distance_sq(&self, a: usize, b: usize) -> i64 {
        let ca = self.coords(a);
        let cb = self.coords(b);
        let n = self.n as i64;
        let mut s = 0;
        for k in 0..self.dim {
            let d = (ca[k] as i64 - cb[k] as i64).rem_euclid(n);
            let d = d.min(n - d);
            s += d * d;
        }
        s
    }

    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        (self.node_distance_sq(a, b) as f64).sqrt() * self.spacing()
    }

    /// Distinct torus offsets of the closed ball of radius `radius`.
    /// Nodes exactly on the sphere are included.
    pub fn ball_offsets(&self, radius: f64) -> Vec<[isize; 2]> {
        let r = radius / self.spacing();
        let r2 = r * r + BALL_TIE;
        let n = self.n as isize;
        // residues are enumerated once, with the signed representative in (-n/2, n/2]
        let reps: Vec<isize> = (0..n).map(|k| if k > n / 2 { k - n } else { k }).collect();
        let mut out = Vec::new();
        if self.dim == 1 {
            for &a in &reps {
                if ((a * a) as f64) <= r2 {
                    out.push([a, 0]);
                }
            }
        } else {
            for &a in &reps {
                if ((a * a) as f64) > r2 {
                    continue;
                }
                for &b in &reps {
                    if ((a * a + b * b) as f64) <= r2 {
                        out.push([a, b]);
                    }
                }
            }
        }
        out
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Euclidean distance on the unit torus.
pub fn torus_distance(x: Vec2, y: Vec2) -> f64 {
    let mut s = 0.0;
    for k in 0..2 {
        let d = (x[k] - y[k]).rem_euclid(1.0);
        let d = d.min(1.0 - d);
        s += d * d;
    }
    s.sqrt()
}

/// Periodic scalar field with one value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: i, step: 0 });
        }
        Ok(GridFunction { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Vec2) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        self.grid.check_same(&other.grid)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `L^2` norm with node weights `h^n`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Unweighted Euclidean inner product of node values.
    pub fn dot(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    /// Values translated by an integer number of nodes: `out(x) = self(x - d h)`.
    pub fn translate(&self, d: [isize; 2]) -> GridFunction {
        let mut out = vec![0.0; self.values.len()];
        for (i, &v) in self.values.iter().enumerate() {
            out[self.grid.offset(i, d)] = v;
        }
        GridFunction { grid: self.grid, values: out }
    }
}

/// Vector field with one component per axis, staggered with the forward gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct GridVectorField {
    grid: Grid,
    components: Vec<Vec<f64>>,
}

impl GridVectorField {
    pub fn zeros(grid: Grid) -> Self {
        GridVectorField { grid, components: vec![vec![0.0; grid.len()]; grid.dim()] }
    }

    pub fn new(grid: Grid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() || components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch("vector field shape does not match grid".into()));
        }
        if components.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("vector field has non-finite entries".into()));
        }
        Ok(GridVectorField { grid, components })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize) -> Vec2) -> Self {
        let mut z = Self::zeros(grid);
        for i in 0..grid.len() {
            let v = f(i);
            z.set(i, v);
        }
        z
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.components[axis]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Vec2 {
        if self.grid.dim() == 1 {
            [self.components[0][idx], 0.0]
        } else {
            [self.components[0][idx], self.components[1][idx]]
        }
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: Vec2) {
        for k in 0..self.grid.dim() {
            self.components[k][idx] = v[k];
        }
    }

    pub fn scaled(&self, s: f64) -> GridVectorField {
        GridVectorField {
            grid: self.grid,
            components: self.components.iter().map(|c| c.iter().map(|v| v * s).collect()).collect(),
        }
    }

    /// Unweighted inner product summed over nodes and components.
    pub fn dot(&self, other: &GridVectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len()).map(|i| crate::linalg::norm(self.at(i))).fold(0.0, f64::max)
    }
}

/// Forward-difference gradient written into `out` (no allocation).
pub(crate) fn gradient_into(grid: &Grid, u: &[f64], out: &mut [Vec<f64>]) {
    let n = grid.resolution();
    let inv_h = n as f64;
    if grid.dim() == 1 {
        let g = &mut out[0];
        for i in 0..n - 1 {
            g[i] = (u[i + 1] - u[i]) * inv_h;
        }
        g[n - 1] = (u[0] - u[n - 1]) * inv_h;
        return;
    }
    let (g0, g1) = out.split_at_mut(1);
    let g0 = &mut g0[0];
    let g1 = &mut g1[0];
    for r in 0..n {
        let rn = if r + 1 == n { 0 } else { r + 1 };
        let row = r * n;
        let next = rn * n;
        for c in 0..n {
            let i = row + c;
            g0[i] = (u[next + c] - u[i]) * inv_h;
            let cn = if c + 1 == n { 0 } else { c + 1 };
            g1[i] = (u[row + cn] - u[i]) * inv_h;
        }
    }
}

/// Backward-difference divergence written into `out` (no allocation).
pub(crate) fn divergence_into(grid: &Grid, z: &[Vec<f64>], out: &mut [f64]) {
    let n = grid.resolution();
    let inv_h = n as f64;
    if grid.dim() == 1 {
        let z0 = &z[0];
        out[0] = (z0[0] - z0[n - 1]) * inv_h;
        for i in 1..n {
            out[i] = (z0[i] - z0[i - 1]) * inv_h;
        }
        return;
    }
    let z0 = &z[0];
    let z1 = &z[1];
    for r in 0..n {
        let rp = if r == 0 { n - 1 } else { r - 1 };
        let row = r * n;
        let prev = rp * n;
        for c in 0..n {
            let i = row + c;
            let cp = if c == 0 { n - 1 } else { c - 1 };
            out[i] = (z0[i] - z0[prev + c] + z1[i] - z1[row + cp]) * inv_h;
        }
    }
}

/// Forward-difference gradient.
pub fn gradient_fd(u: &GridFunction) -> GridVectorField {
    let grid = *u.grid();
    let mut z = GridVectorField::zeros(grid);
    gradient_into(&grid, u.values(), &mut z.components);
    z
}

/// Backward-difference divergence, the negative adjoint of [`gradient_fd`].
pub fn divergence_fd(z: &GridVectorField) -> GridFunction {
    let grid = *z.grid();
    let mut out = vec![0.0; grid.len()];
    divergence_into(&grid, &z.components, &mut out);
    GridFunction::from_vec_unchecked(grid, out)
}

/// Centered-difference gradient at every node.
pub fn centered_gradient(u: &GridFunction) -> Vec<Vec2> {
    let grid = u.grid();
    let half_inv_h = 0.5 * grid.resolution() as f64;
    let v = u.values();
    (0..grid.len())
        .map(|i| {
            let mut g = [0.0; 2];
            for (k, gk) in g.iter_mut().enumerate().take(grid.dim()) {
                *gk = (v[grid.forward(i, k)] - v[grid.backward(i, k)]) * half_inv_h;
            }
            g
        })
        .collect()
}

fn ball_extremum(u: &GridFunction, eta: f64, take_min: bool) -> Result<GridFunction> {
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be non-negative, got {eta}")));
    }
    let grid = *u.grid();
    let offsets = grid.ball_offsets(eta);
    let v = u.values();
    let out = (0..grid.len())
        .map(|i| {
            let it = offsets.iter().map(|&d| v[grid.offset(i, d)]);
            if take_min {
                it.fold(f64::INFINITY, f64::min)
            } else {
                it.fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect();
    Ok(GridFunction::from_vec_unchecked(grid, out))
}

/// Pointwise infimum over the closed torus ball of radius `eta`.
pub fn erode(u: &GridFunction, eta: f64) -> Result<GridFunction> {
    ball_extremum(u, eta, true)
}

/// Pointwise supremum over the closed torus ball of radius `eta`.
pub fn dilate(u: &GridFunction, eta: f64) -> Result<GridFunction> {
    ball_extremum(u, eta, false)
}

/// Maximum Euclidean length of the forward-difference gradient.
pub fn lipschitz_constant(u: &GridFunction) -> f64 {
    let g = gradient_fd(u);
    g.max_norm()
}

/// Exact squared Euclidean torus distance (in squared grid units) from every
/// node to the nearest node of `mask`. Nodes of `mask` get 0; an empty mask
/// gives `+inf` everywhere.
pub fn squared_distance_to(grid: &Grid, mask: &[bool]) -> Vec<f64> {
    let n = grid.resolution();
    let mut f: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { f64::INFINITY }).collect();
    let mut line = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut scratch = EnvelopeScratch::new(n);
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        let starts: Vec<usize> = (0..grid.len()).filter(|&i| grid.coords(i)[axis] == 0).collect();
        for s in starts {
            for (k, l) in line.iter_mut().enumerate() {
                *l = f[s + k * stride];
            }
            periodic_lower_envelope(&line, &mut out, &mut scratch);
            for (k, &o) in out.iter().enumerate() {
                f[s + k * stride] = o;
            }
        }
    }
    f
}

struct EnvelopeScratch {
    v: Vec<i64>,
    z: Vec<f64>,
}

impl EnvelopeScratch {
    fn new(n: usize) -> Self {
        EnvelopeScratch { v: vec![0; 3 * n + 1], z: vec![0.0; 3 * n + 2] }
    }
}

/// One-dimensional squared distance transform on a periodic line: the lower
/// envelope of parabolas rooted at three periodic copies of the sites.
fn periodic_lower_envelope(f: &[f64], out: &mut [f64], s: &mut EnvelopeScratch) {
    let n = f.len() as i64;
    let val = |q: i64| f[q.rem_euclid(n) as usize];
    let mut k: usize = 0;
    let mut any = false;
    for q in -n..2 * n {
        let fq = val(q);
        if !fq.is_finite() {
            continue;
        }
        if !any {
            s.v[0] = q;
            s.z[0] = f64::NEG_INFINITY;
            s.z[1] = f64::INFINITY;
            any = true;
            continue;
        }
        loop {
            let p = s.v[k];
            let fp = val(p);
            let sx = ((fq + (q * q) as f64) - (fp + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if sx <= s.z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if sx <= s.z[k] {
                // k == 0 and the new parabola dominates everywhere
                s.v[0] = q;
                s.z[0] = f64::NEG_INFINITY;
                s.z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            s.v[k] = q;
            s.z[k] = sx;
            s.z[k + 1] = f64::INFINITY;
            break;
        }
    }
    if !any {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut j = 0;
    for (x, o) in out.iter_mut().enumerate() {
        let xf = x as f64;
        while s.z[j + 1] < xf {
            j += 1;
        }
        let p = s.v[j];
        let d = (x as i64 - p) as f64;
        *o = d * d + val(p);
    }
}
