//! Set neighbourhoods, pairs of sets and a support-function certificate.

use facetflow::anisotropy::AnisotropyModel;
use facetflow::facet::{self, rho_neighborhood, Mask, PairOfSets};
use facetflow::grid::Grid;
use facetflow::Result;

fn main() -> Result<()> {
    let g = Grid::new(2, 64)?;
    let h = g.spacing();
    let a = Mask::ball(g, [0.3, 0.5], 0.15).union(&Mask::ball(g, [0.7, 0.5], 0.1));
    for k in [-4.0, -1.0, 0.0, 1.0, 4.0] {
        let u = rho_neighborhood(&a, k * h);
        println!("rho = {k:>4}h: {} nodes, complement duality {}", u.count(), u.complement() == rho_neighborhood(&a.complement(), -k * h));
    }
    let plus = Mask::ball(g, [0.5, 0.5], 0.1);
    let minus = Mask::ball(g, [0.5, 0.5], 0.3).complement();
    let pair = PairOfSets::new(minus, plus)?;
    let grown = facet::pair_nbhd(&pair, 3.0 * h);
    println!("pair ordered below its 3h-neighbourhood: {}", facet::pair_leq(&pair, &grown));

    let w = AnisotropyModel::euclidean(2)?;
    let cert = facet::support_from_smooth_pair(&pair, &w)?;
    let rep = facet::admissibility_check(&cert, &w);
    println!("support function range [{:.4}, {:.4}], admissibility {:?}", cert.psi.min(), cert.psi.max(), rep);
    Ok(())
}
