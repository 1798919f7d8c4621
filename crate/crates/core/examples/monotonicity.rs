//! Nested facets: the inner facet has the more negative curvature.

use facetflow::anisotropy::AnisotropyModel;
use facetflow::facet::{self, Mask, PairOfSets};
use facetflow::grid::{torus_distance, Grid};
use facetflow::resolvent::{self, ResolventConfig};
use facetflow::Result;

fn main() -> Result<()> {
    let g = Grid::new(1, 256)?;
    let w = AnisotropyModel::euclidean(1)?;
    let cert = |r: f64| {
        let minus = Mask::from_fn(g, |x| torus_distance(x, [0.5, 0.0]) > r);
        facet::support_from_smooth_pair(&PairOfSets::new(minus, Mask::empty(g))?, &w)
    };
    let (r1, r2) = (0.15, 0.3);
    let a_list = [1e-3, 5e-4, 2.5e-4];
    let rep = resolvent::monotonicity_check(&cert(r1)?, &cert(r2)?, 0.5 * (r2 - r1), &w, &a_list, &ResolventConfig::new(a_list[0]))?;
    println!("{rep:#?}");
    println!("passed at 2% tolerance: {}", rep.passed(0.02));
    Ok(())
}
