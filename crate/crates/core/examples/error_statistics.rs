//! Quantization errors of a generic rotation look like independent uniform
//! draws from the cell.

use qlattice::analysis::{error_independence_test, error_uniformity_test, mixing_test, product_law_gap};
use qlattice::dynamics::QuantizedSystem;
use qlattice::geometry::JordanSet;
use qlattice::lattice::Fragment;
use qlattice::quasiperiodic::QuasiperiodicSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = QuantizedSystem::rotation(1.0);
    let frag = Fragment::centered(2, 256)?;

    let r = error_uniformity_test(&sys, &frag, 4, 16)?;
    println!("uniformity: p = {:.4}, max bin deviation {:.2e}", r.statistic, r.diagnostics["max_bin_deviation"]);
    let r = error_independence_test(&sys, &frag, 1, 2, 8)?;
    println!("independence of E_1, E_2: sup gap {:.2e} (threshold {:.2e})", r.statistic, r.threshold);
    println!("product law gap on 2x2 bins: {:.2e}", product_law_gap(&sys, &frag, 1, 3)?);

    // a resonant angle: L^3 is an integer matrix
    let resonant = QuantizedSystem::rotation(std::f64::consts::FRAC_PI_6);
    let r = error_independence_test(&resonant, &frag, 1, 13, 8)?;
    println!("pi/6, E_1 vs E_13: sup gap {:.3} pass={}", r.statistic, r.pass);

    let l = sys.matrix().clone();
    let a = QuasiperiodicSet::new(l.clone(), JordanSet::boxed(vec![0.0, 0.0], vec![0.3, 1.0])?)?;
    let b = QuasiperiodicSet::new(l, JordanSet::boxed(vec![0.0, 0.0], vec![1.0, 0.4])?)?;
    for r in mixing_test(&sys, &a, &b, 5, &frag)? {
        println!("mixing {}: {:.4} vs {:.4}", r.parameter, r.value, r.target);
    }
    Ok(())
}
