//! Evaluate three anisotropies, project onto their Wulff sets and inspect the
//! ellipticity of the mollified densities.

use facetflow::anisotropy::{AnisotropyModel, MollifiedAnisotropy};
use facetflow::Result;

fn main() -> Result<()> {
    let models = [
        AnisotropyModel::euclidean(2)?,
        AnisotropyModel::elliptic(2, [[2.0, 0.5], [0.5, 1.0]])?,
        AnisotropyModel::quartic(2)?,
    ];
    let p = [0.6, -0.8];
    for w in &models {
        let z = w.project_wulff([3.0, 1.0]);
        println!("{:<10} W(p) = {:.6}  grad W(p) = [{:.4}, {:.4}]  projection of (3, 1) = [{:.4}, {:.4}] inside: {}",
            w.name(), w.eval(p), w.grad(p)?[0], w.grad(p)?[1], z[0], z[1], w.wulff_contains(z, 1e-12));
        for m in [2.0, 8.0, 32.0] {
            let wm = MollifiedAnisotropy::new(w.clone(), m)?;
            let e = wm.ellipticity();
            println!("    m = {m:>4}: a_m = {:.3}, Hessian eigenvalues in [{:.3e}, {:.3e}]", e.a_m, e.min_eigenvalue, e.max_eigenvalue);
        }
    }
    Ok(())
}
