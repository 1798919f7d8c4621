//! Ordered random initial data stay ordered under the flow.

use facetflow::anisotropy::AnisotropyModel;
use facetflow::evolution::{self, EvolutionConfig};
use facetflow::grid::Grid;
use facetflow::scenario::ordered_pair;
use facetflow::speed::SpeedLaw;
use facetflow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let g = Grid::new(1, 128)?;
    let cfg = EvolutionConfig::new(&AnisotropyModel::euclidean(1)?, 16.0, SpeedLaw::TvFlow, 0.01)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..5 {
        let (u, v) = ordered_pair(g, 0.1, 0.0, &mut rng);
        let rep = evolution::comparison_harness(&u, &v, &cfg)?;
        println!("pair {k}: max crossing {:.3e} after {} steps, passed {}", rep.max_crossing, rep.steps, rep.passed);
    }
    Ok(())
}
