//! Deviations of rounded-off rotations from the exact rotation.
//!
//! For a generic angle the normalized deviation is asymptotically Gaussian
//! and its running maximum follows the Wiener max-modulus law. At pi/6 the
//! rotation has finite order in the resonance sense and deviations stay
//! bounded.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use qlattice::analysis::{
    clt_experiment, max_deviation_experiment, neutral_build, wiener_max_modulus,
};
use qlattice::dynamics::QuantizedSystem;
use qlattice::lattice::{Fragment, IntVec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frag = Fragment::new(vec![100_000, 200_000], vec![60, 60])?;
    let oracle = wiener_max_modulus(20_000, 500, 5);
    for theta in [1.0, PI / 6.0] {
        let sys = QuantizedSystem::rotation(theta);
        let spec = neutral_build(&DMatrix::identity(2, 2), &[theta], sys.covariance())?;
        println!("theta = {theta:.4}, Phi = I/{:.1}", 1.0 / spec.phi[(0, 0)]);
        for r in clt_experiment(&sys, &spec, &frag, 400, &[0.5, 1.0, 2.0])? {
            println!("  tail {}: {:.4} vs {:.4}", r.parameter, r.value, r.target);
        }
        let out = max_deviation_experiment(&sys, &spec, &frag, 400, &oracle, 5)?;
        println!("  max-deviation KS distance {:.4}", out.reports[0].statistic);

        let t = sys.trajectory(&IntVec::from([100_000, 200_000]), 400)?;
        let d = &t.delta[400];
        println!("  |delta_400| from one start: {:.3}", (d[0] * d[0] + d[1] * d[1]).sqrt());
    }
    Ok(())
}
