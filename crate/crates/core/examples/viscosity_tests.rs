//! Conventional and faceted viscosity tests on an evolving tent.

use facetflow::anisotropy::AnisotropyModel;
use facetflow::evolution::viscosity::{self, TestFunction, TimePart};
use facetflow::evolution::{self, EvolutionConfig};
use facetflow::facet::{self, Mask, PairOfSets};
use facetflow::grid::{Grid, GridFunction};
use facetflow::speed::SpeedLaw;
use facetflow::Result;

fn main() -> Result<()> {
    let s = 0.5;
    let g = Grid::new(1, 256)?;
    let h = g.spacing();
    let w = AnisotropyModel::euclidean(1)?;
    let law = SpeedLaw::TvFlow;
    let u0 = GridFunction::from_fn(g, |x| s * (0.5 - (x[0] - 0.5).abs()));
    let times: Vec<f64> = (1..=6).map(|k| 5e-4 * k as f64).collect();
    let cfg = EvolutionConfig::new(&w, 32.0, law.clone(), 3e-3)?.with_snapshot_times(times)?;
    let tr = evolution::evolve(&u0, &cfg)?;
    let k = 3;
    let t_hat = tr.times[k];

    // On the linear flank the tent does not move.
    let x_hat = [0.3, 0.0];
    let c = g.nearest(x_hat);
    let base = tr.snapshots[k].get(c) - s * g.point(c)[0];
    let phi = TestFunction::new(
        move |x, _| base + s * x[0] + 50.0 * (x[0] - 0.3).powi(2),
        move |x, _| [s + 100.0 * (x[0] - 0.3), 0.0],
        |_, _| [[100.0, 0.0], [0.0, 0.0]],
        |_, _| 0.0,
    );
    match viscosity::conventional_test_residual(&tr, &w, &law, &phi, x_hat, t_hat) {
        Ok(r) => println!("conventional test at x = 0.3: residual {:.3e}", r.residual),
        Err(e) => println!("conventional test not applicable: {e}"),
    }

    // At the peak the facet moves down.
    let eta = 4.0 * h;
    let half = (2.0 * t_hat / s).sqrt() + eta + 8.0 * h;
    let minus = Mask::from_fn(g, |x| (x[0] - 0.5).abs() > half);
    let cert = facet::support_from_smooth_pair(&PairOfSets::new(minus, Mask::empty(g))?, &w)?;
    let slope = (tr.snapshots[k + 1].max() - tr.snapshots[k - 1].max()) / (tr.times[k + 1] - tr.times[k - 1]);
    let time = TimePart { slope, curvature: 1e5 };
    let rep = viscosity::faceted_test_residual(&tr, &cert, &w, &law, time, [0.5, 0.0], t_hat, eta, &[1e-3, 5e-4])?;
    println!("faceted test at the peak: slope {slope:.4}, residual {:.3e}", rep.residual);
    for (d, inf, r) in rep.sweep {
        println!("    delta {d:.4}: essinf curvature {inf:.4}, residual {r:.3e}");
    }
    Ok(())
}
