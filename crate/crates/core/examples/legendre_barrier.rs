//! Discrete Legendre transform and the barrier family built from it.

use facetflow::anisotropy::AnisotropyModel;
use facetflow::conjugate::{self, SampledConvexFunction};
use facetflow::linalg::norm;
use facetflow::speed::SpeedLaw;
use facetflow::Result;

fn main() -> Result<()> {
    // f(p) = |p|²/2 is its own conjugate.
    let f = SampledConvexFunction::from_fn(1, [-2.0, 0.0], [2.0, 0.0], 401, false, |p| Some(0.5 * norm(p).powi(2)))?;
    let fs = conjugate::legendre_transform(&f, [-1.0, 0.0], [1.0, 0.0], 21)?;
    let err = (0..fs.len()).map(|i| (fs.get(i).unwrap() - 0.5 * norm(fs.node(i)).powi(2)).abs()).fold(0.0, f64::max);
    println!("self-conjugacy of |p|^2/2: max error {err:.2e}");

    let w = AnisotropyModel::euclidean(1)?;
    let choice = conjugate::choose_parameters(0.25, 1.0, &w)?;
    println!("delta {} k {}: A = {:.6}, q = {}, m0 = {}", choice.delta, choice.k, choice.a, choice.q, choice.m0);
    for (m, v) in &choice.lower_bound_checks {
        println!("    m = {m}: min W* over |x| >= delta is {v:.4}");
    }
    let fam = conjugate::barrier_from_parameters(&choice, &w, &SpeedLaw::TvFlow)?;
    let rep = fam.verify(2000, 20, 1.0, 1)?;
    println!(
        "barrier: gradient ratio {:.4}, operator in [{:.3e}, {:.3e}] (bound {:.3e}), hessian identity error {:.2e}",
        rep.max_gradient_ratio, rep.min_operator, rep.max_operator, rep.operator_bound, rep.max_hessian_identity_error
    );
    for x in [0.0, 0.1, 0.25, 0.5] {
        println!("    W*({x}) = {:.5}", fam.conjugate_value([x, 0.0]));
    }
    Ok(())
}
