//! Set-valued backward dynamics: preimages, basins, the offsets Sigma_k and
//! the martingale of rescaled preimage counts.

use qlattice::analysis::{backward_event, kernel_estimate, martingale_check, mean_preimage_count};
use qlattice::dynamics::{FiniteLatticeSet, QuantizedSystem};
use qlattice::geometry::Quantizer;
use qlattice::lattice::{Fragment, IntVec};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // expanding map: |det L| = 0.5, so points have two preimages on average
    let l = DMatrix::from_row_slice(2, 2, &[0.6, -0.3, 0.25, 0.7]);
    let sys = QuantizedSystem::new(l, Quantizer::roundoff(2))?;
    println!("det L = {:.3}", sys.det());
    for x in [IntVec::from([0, 0]), IntVec::from([3, -2]), IntVec::from([10, 10])] {
        let basin = sys.basin(&x, 3)?;
        let sizes: Vec<usize> = basin.iter().map(|b| b.len()).collect();
        println!("T^-1({x}) = {}, |T^-k| = {sizes:?}", basin[0]);
        let sigma = sys.sigma(&x, 3)?;
        println!("  Sigma_3 = {}", sigma[3]);
    }

    let frag = Fragment::centered(2, 101)?;
    println!("mean nu_1 = {:.4} (1/|det| = {:.4})", mean_preimage_count(&sys, &frag)?, 1.0 / sys.det().abs());
    let event = backward_event(&sys, 2, 0.5)?;
    for r in martingale_check(&sys, &frag, 2, &event)? {
        println!("{} {}: {:.4} -> {:.4}", r.experiment, r.parameter, r.target, r.value);
    }

    let a = FiniteLatticeSet::from(vec![IntVec::from([0, 0]), IntVec::from([1, 0])]);
    let k = kernel_estimate(&sys, &a, 50_000, 3)?;
    let m = k.mean_cardinality();
    println!("E #B under Delta(.|{a}) = {:.3} +- {:.3}, expected {:.3}", m.mean, m.std_error, a.len() as f64 / sys.det().abs());
    Ok(())
}
