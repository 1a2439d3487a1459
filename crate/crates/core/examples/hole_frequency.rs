//! Hole frequency of rounded-off rotations from the preimage kernel.
//!
//! A hole is a lattice point without preimage. Its frequency equals the
//! kernel probability of the empty set starting from {0}.

use std::f64::consts::PI;

use qlattice::analysis::{hole_frequency_2d, kernel_estimate};
use qlattice::dynamics::{FiniteLatticeSet, QuantizedSystem};
use qlattice::lattice::{frequency, Fragment, IntVec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let origin = FiniteLatticeSet::singleton(IntVec::zeros(2));
    let frag = Fragment::centered(2, 301)?;
    println!("{:>8} {:>10} {:>10} {:>10}", "theta", "formula", "kernel", "scan");
    for theta in [0.1, PI / 6.0, PI / 5.0, PI / 4.0 - 0.001, 1.0, 1.4] {
        let sys = QuantizedSystem::rotation(theta);
        let k = kernel_estimate(&sys, &origin, 200_000, 11)?;
        let scan = frequency(|x| sys.preimage(x).map(|p| p.is_empty()).unwrap_or(false), &frag);
        println!(
            "{theta:>8.4} {:>10.5} {:>10.5} {:>10.5}",
            hole_frequency_2d(theta)?,
            k.probability(&FiniteLatticeSet::empty()),
            scan.value
        );
    }

    // the whole kernel row for {0}
    let sys = QuantizedSystem::rotation(1.0);
    let k = kernel_estimate(&sys, &origin, 200_000, 11)?;
    for (b, (count, p)) in &k.table {
        println!("Delta({b} | {{0}}) = {p:.4} ({count} draws)");
    }
    Ok(())
}
