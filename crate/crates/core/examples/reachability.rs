//! Which lattice points does a rounded-off rotation reach?
//!
//! Scans {-50..50}^2 for points with a nonempty preimage under the rotation
//! by pi/6, compares with 1 - (cos t + sin t - 1)^2, and writes the
//! membership map as an ASCII PGM.
//!
//! cargo run --example reachability [OUT.pgm]

use std::f64::consts::PI;

use qlattice::analysis::{hole_frequency_2d, reachability_frequency, reachability_markov};
use qlattice::dynamics::QuantizedSystem;
use qlattice::lattice::Fragment;
use qlattice::output::{render_fragment, GREY};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let theta = PI / 6.0;
    let sys = QuantizedSystem::rotation(theta);
    let frag = Fragment::cube(2, -50, 50)?;

    let est = reachability_frequency(&sys, 1, &frag)?;
    let theory = 1.0 - hole_frequency_2d(theta)?;
    println!("reachable: {} of {} = {:.6} (closed form {theory:.6})", est.hits, est.total, est.value);

    // deeper levels via the kernel-driven Markov chain
    let deep = reachability_frequency(&sys, 3, &frag)?;
    let chain = reachability_markov(&sys, 3, 20_000, 7)?;
    println!("reachable in 3 steps: {:.4} on the fragment, {:.4} from the chain", deep.value, chain[2]);

    let img = render_fragment(|x| !sys.preimage(x).map(|p| p.is_empty()).unwrap_or(true), &frag)?;
    println!("grey pixels: {}", img.count(GREY));
    let path = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("reach.pgm").display().to_string());
    img.write_pgm(path.as_ref())?;
    println!("wrote {path}");
    Ok(())
}
