//! Total variation flow of a tent: the peak follows 1/4 - sqrt(2 s t).

use facetflow::anisotropy::AnisotropyModel;
use facetflow::evolution::{self, EvolutionConfig};
use facetflow::grid::{Grid, GridFunction};
use facetflow::speed::SpeedLaw;
use facetflow::Result;

fn main() -> Result<()> {
    let s = 0.5;
    let g = Grid::new(1, 256)?;
    let u0 = GridFunction::from_fn(g, |x| s * (0.5 - (x[0] - 0.5).abs()));
    let times = vec![1e-3, 2e-3, 3e-3, 4e-3];
    let cfg = EvolutionConfig::new(&AnisotropyModel::euclidean(1)?, 32.0, SpeedLaw::TvFlow, 4e-3)?.with_snapshot_times(times)?;
    let tr = evolution::evolve(&u0, &cfg)?;
    println!("dt {:.3e}, {} steps, a_m {:.3}", tr.dt, tr.steps, tr.a_m);
    for (t, u) in tr.times.iter().zip(&tr.snapshots) {
        println!("t = {t:.4}: peak {:.5}, expected {:.5}, mean {:.3e}", u.max(), 0.25 - (2.0 * s * t).sqrt(), u.mean());
    }
    let lip = evolution::lipschitz_monitor(&tr);
    println!("Lipschitz max {:.4} (bound {:.4}) passed {}", lip.max, lip.bound, lip.passed);
    Ok(())
}
