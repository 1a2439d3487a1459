//! A four-dimensional neutral system: two rotation blocks in a skewed basis.

use nalgebra::DMatrix;
use qlattice::analysis::{clt_experiment, max_deviation_experiment, neutral_build, wiener_max_modulus};
use qlattice::dynamics::QuantizedSystem;
use qlattice::geometry::Quantizer;
use qlattice::lattice::Fragment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let u = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.2, -0.3, 0.1, //
        0.4, 1.1, 0.0, -0.2,
        0.1, -0.5, 0.9, 0.3,
        0.2, 0.3, -0.1, 1.2,
    ]);
    let r = Quantizer::roundoff(4);
    let psi = r.cell().covariance()?;
    let spec = neutral_build(&u, &[1.0, 2.3], &psi)?;
    println!("L =\n{:.4}", spec.l);
    println!("block scales sigma = {:?}", spec.sigma);
    println!("normal form =\n{:.4}", spec.normal_form());
    for n in [10, 100, 1000] {
        println!("|Phi_{n} - Phi| = {:.2e}", (spec.phi_partial(n)? - &spec.phi).amax());
    }

    let sys = QuantizedSystem::new(spec.l.clone(), r)?;
    let frag = Fragment::new(vec![5000, -3000, 7000, 1000], vec![8, 8, 8, 8])?;
    for rep in clt_experiment(&sys, &spec, &frag, 200, &[1.0, 2.0])? {
        println!("tail {}: {:.4} vs {:.4}", rep.parameter, rep.value, rep.target);
    }
    let oracle = wiener_max_modulus(10_000, 400, 2);
    for rep in max_deviation_experiment(&sys, &spec, &frag, 200, &oracle, 2)?.reports {
        println!("{} {}: {:.4}", rep.experiment, rep.parameter, rep.statistic);
    }
    Ok(())
}
