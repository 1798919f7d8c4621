//! Tabulated `∇W_m`. The mollified base gradient `G = ∇(W * φ)` does not
//! depend on `m`, so one table per anisotropy serves every index through
//! `∇W_m(p) = G(m p) + 2p/m`.

use std::sync::{Arc, Mutex, OnceLock};

use crate::anisotropy::{AnisotropyModel, MollifiedAnisotropy};
use crate::error::Result;
use crate::linalg::{self, Vec2};

const LINE_NODES: usize = 4001;
const INNER_RADIUS: f64 = 2.0;
const INNER_NODES: usize = 161;
const THETA_NODES: usize = 512;
const S_NODES: usize = 33;

#[derive(Debug)]
enum Table {
    /// `G` on `[-1, 1]`; outside it equals `W(e₁) sign(y)` exactly.
    Line { k: f64, values: Vec<f64> },
    /// Cartesian nodes on `[-R, R]²`, polar nodes in `(θ, 1/|y|)` outside.
    Plane { inner: Vec<Vec2>, outer: Vec<Vec2> },
}

#[derive(Debug)]
pub struct BaseFlux {
    base: AnisotropyModel,
    table: Table,
}

impl BaseFlux {
    fn build(base: &AnisotropyModel) -> Result<Self> {
        let moll = MollifiedAnisotropy::new(base.clone(), 1.0)?;
        let table = if base.dim() == 1 {
            let values = (0..LINE_NODES)
                .map(|i| {
                    let y = -1.0 + 2.0 * i as f64 / (LINE_NODES - 1) as f64;
                    moll.base_gradient([y, 0.0])[0]
                })
                .collect();
            Table::Line { k: base.eval([1.0, 0.0]), values }
        } else {
            let step = 2.0 * INNER_RADIUS / (INNER_NODES - 1) as f64;
            let mut inner = Vec::with_capacity(INNER_NODES * INNER_NODES);
            for j in 0..INNER_NODES {
                for i in 0..INNER_NODES {
                    let y = [-INNER_RADIUS + i as f64 * step, -INNER_RADIUS + j as f64 * step];
                    inner.push(moll.base_gradient(y));
                }
            }
            let mut outer = Vec::with_capacity(THETA_NODES * S_NODES);
            for j in 0..S_NODES {
                let s = j as f64 / ((S_NODES - 1) as f64 * INNER_RADIUS);
                for i in 0..THETA_NODES {
                    let t = std::f64::consts::TAU * i as f64 / THETA_NODES as f64;
                    let e = [t.cos(), t.sin()];
                    let g = if s == 0.0 { base.grad_unchecked(e) } else { moll.base_gradient(linalg::scale(e, 1.0 / s)) };
                    outer.push(g);
                }
            }
            Table::Plane { inner, outer }
        };
        Ok(BaseFlux { base: base.clone(), table })
    }

    pub fn anisotropy(&self) -> &AnisotropyModel {
        &self.base
    }

    /// Interpolated `∇(W * φ)(y)`.
    #[inline]
    pub fn eval(&self, y: Vec2) -> Vec2 {
        match &self.table {
            Table::Line { k, values } => {
                if y[0] >= 1.0 {
                    return [*k, 0.0];
                }
                if y[0] <= -1.0 {
                    return [-*k, 0.0];
                }
                let t = (y[0] + 1.0) * 0.5 * (LINE_NODES - 1) as f64;
                let i = (t as usize).min(LINE_NODES - 2);
                let f = t - i as f64;
                [values[i] + f * (values[i + 1] - values[i]), 0.0]
            }
            Table::Plane { inner, outer } => {
                if y[0].abs() <= INNER_RADIUS && y[1].abs() <= INNER_RADIUS {
                    let scale = (INNER_NODES - 1) as f64 / (2.0 * INNER_RADIUS);
                    let tx = (y[0] + INNER_RADIUS) * scale;
                    let ty = (y[1] + INNER_RADIUS) * scale;
                    let i = (tx as usize).min(INNER_NODES - 2);
                    let j = (ty as usize).min(INNER_NODES - 2);
                    bilinear(inner, INNER_NODES, i, i + 1, j, tx - i as f64, ty - j as f64)
                } else {
                    let r = linalg::norm(y);
                    let t = y[1].atan2(y[0]).rem_euclid(std::f64::consts::TAU) * THETA_NODES as f64 / std::f64::consts::TAU;
                    let s = (INNER_RADIUS / r) * (S_NODES - 1) as f64;
                    let i = (t as usize).min(THETA_NODES - 1);
                    let j = (s as usize).min(S_NODES - 2);
                    bilinear(outer, THETA_NODES, i, (i + 1) % THETA_NODES, j, t - i as f64, s - j as f64)
                }
            }
        }
    }
}

#[inline]
fn bilinear(v: &[Vec2], stride: usize, i0: usize, i1: usize, j: usize, fx: f64, fy: f64) -> Vec2 {
    let a = v[j * stride + i0];
    let b = v[j * stride + i1];
    let c = v[(j + 1) * stride + i0];
    let d = v[(j + 1) * stride + i1];
    let mut out = [0.0; 2];
    for k in 0..2 {
        let lo = a[k] + fx * (b[k] - a[k]);
        let hi = c[k] + fx * (d[k] - c[k]);
        out[k] = lo + fy * (hi - lo);
    }
    out
}

/// Shared table for `w`, built on first use.
pub fn base_flux(w: &AnisotropyModel) -> Result<Arc<BaseFlux>> {
    static CACHE: OnceLock<Mutex<Vec<Arc<BaseFlux>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(f) = guard.iter().find(|f| &f.base == w) {
        return Ok(Arc::clone(f));
    }
    let f = Arc::new(BaseFlux::build(w)?);
    guard.push(Arc::clone(&f));
    Ok(f)
}

/// `∇W_m` through a shared base table.
#[derive(Clone, Debug)]
pub struct MollifiedFlux {
    m: f64,
    base: Arc<BaseFlux>,
}

impl MollifiedFlux {
    pub fn new(w: &AnisotropyModel, m: f64) -> Result<Self> {
        Ok(MollifiedFlux { m, base: base_flux(w)? })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    #[inline]
    pub fn eval(&self, p: Vec2) -> Vec2 {
        let g = self.base.eval(linalg::scale(p, self.m));
        let k = 2.0 / self.m;
        [g[0] + k * p[0], g[1] + k * p[1]]
    }
}
