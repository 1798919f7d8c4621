//! Speed laws `F(p, ξ)`, non-increasing in the curvature argument `ξ`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Vec2};

type SpeedFn = Arc<dyn Fn(Vec2, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SpeedLaw {
    /// `F = -ξ`
    TvFlow,
    /// `F = -sqrt(1 + |p|²) ξ`
    GraphFlow,
    /// `F = -ξ - c`
    Driven { c: f64 },
    /// `F = 0`
    Zero,
    /// Any user law with a declared bound on `|∂F/∂ξ|` for `|p| <= 1`
    /// growing at most linearly in `|p|`.
    Custom { name: String, f: SpeedFn, xi_slope: f64 },
}

impl fmt::Debug for SpeedLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpeedLaw::Custom { name, xi_slope, .. } => write!(f, "Custom({name}, slope {xi_slope})"),
            SpeedLaw::Driven { c } => write!(f, "Driven({c})"),
            other => f.write_str(other.name()),
        }
    }
}

impl SpeedLaw {
    pub fn by_name(name: &str, driving: f64) -> Result<Self> {
        match name {
            "tv_flow" => Ok(SpeedLaw::TvFlow),
            "graph_flow" => Ok(SpeedLaw::GraphFlow),
            "driven" => Ok(SpeedLaw::Driven { c: driving }),
            "zero" => Ok(SpeedLaw::Zero),
            other => Err(Error::Config(format!("unknown speed law '{other}'"))),
        }
    }

    pub fn custom(name: &str, xi_slope: f64, f: impl Fn(Vec2, f64) -> f64 + Send + Sync + 'static) -> Self {
        SpeedLaw::Custom { name: name.to_string(), f: Arc::new(f), xi_slope }
    }

    pub fn name(&self) -> &str {
        match self {
            SpeedLaw::TvFlow => "tv_flow",
            SpeedLaw::GraphFlow => "graph_flow",
            SpeedLaw::Driven { .. } => "driven",
            SpeedLaw::Zero => "zero",
            SpeedLaw::Custom { name, .. } => name,
        }
    }

    #[inline]
    pub fn eval(&self, p: Vec2, xi: f64) -> f64 {
        match self {
            SpeedLaw::TvFlow => -xi,
            SpeedLaw::GraphFlow => -(1.0 + linalg::dot(p, p)).sqrt() * xi,
            SpeedLaw::Driven { c } => -xi - c,
            SpeedLaw::Zero => 0.0,
            SpeedLaw::Custom { f, .. } => f(p, xi),
        }
    }

    /// Bound on `|∂F/∂ξ|` over `|p| <= p_max`.
    pub fn xi_slope_bound(&self, p_max: f64) -> f64 {
        match self {
            SpeedLaw::TvFlow | SpeedLaw::Driven { .. } => 1.0,
            SpeedLaw::GraphFlow => (1.0 + p_max * p_max).sqrt(),
            SpeedLaw::Zero => 0.0,
            SpeedLaw::Custom { xi_slope, .. } => xi_slope * p_max.max(1.0),
        }
    }

    /// Fraction of random triples `(p, ξ >= η)` with `F(p, ξ) <= F(p, η)`.
    pub fn sampled_ellipticity(&self, samples: usize, rng: &mut impl Rng) -> f64 {
        let mut ok = 0;
        for _ in 0..samples {
            let p = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let a: f64 = rng.gen_range(-50.0..50.0);
            let b: f64 = rng.gen_range(-50.0..50.0);
            let (xi, eta) = if a >= b { (a, b) } else { (b, a) };
            if self.eval(p, xi) <= self.eval(p, eta) + 1e-12 * (1.0 + xi.abs()) {
                ok += 1;
            }
        }
        ok as f64 / samples as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn built_in_laws_are_elliptic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for law in [SpeedLaw::TvFlow, SpeedLaw::GraphFlow, SpeedLaw::Driven { c: 0.3 }, SpeedLaw::Zero] {
            assert_eq!(law.sampled_ellipticity(1000, &mut rng), 1.0, "{}", law.name());
        }
        let bad = SpeedLaw::custom("anti", 1.0, |_, xi| xi);
        assert!(bad.sampled_ellipticity(1000, &mut rng) < 0.01);
    }

    #[test]
    fn values() {
        assert_eq!(SpeedLaw::TvFlow.eval([1.0, 0.0], 2.0), -2.0);
        assert_eq!(SpeedLaw::Driven { c: 0.5 }.eval([0.0, 0.0], 1.0), -1.5);
        assert!((SpeedLaw::GraphFlow.eval([1.0, 0.0], 1.0) + 2f64.sqrt()).abs() < 1e-15);
        assert!(SpeedLaw::by_name("nope", 0.0).is_err());
    }
}
