//! Quasiperiodic sets {x : frac(Lambda x) in G}: frequencies, algebra and
//! resonance.

use nalgebra::DMatrix;
use qlattice::cli::random_nonresonant;
use qlattice::dynamics::rotation_matrix;
use qlattice::formats::load_quasiperiodic;
use qlattice::geometry::JordanSet;
use qlattice::lattice::{standard_sweep, frequency_sweep, Fragment, IntVec};
use qlattice::quasiperiodic::{power_stack, resonance_search, PowerDirection, QuasiperiodicSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/golden_window.qp");
    let q = load_quasiperiodic(path.as_ref())?;
    let frag = Fragment::centered(2, 1000)?;
    println!("file set: {:.5} vs mes G = {}", q.frequency(&frag).value, q.theoretical_frequency());

    let (lambda, draws) = random_nonresonant(2, 2, 50, 9);
    println!("nonresonant Lambda after {draws} draws:\n{lambda:.4}");
    let g = JordanSet::boxed(vec![0.0, 0.0], vec![0.5, 0.7])?;
    let a = QuasiperiodicSet::new(lambda, g)?;
    let sweep = frequency_sweep(|x| a.member(x), &standard_sweep(2, 100)?);
    for e in &sweep.estimates {
        println!("  {:>28}: {:.5}", e.fragment.describe(), e.value);
    }

    let shifted = a.translate(&IntVec::from([3, -1]))?;
    let both = a.intersection(&shifted)?;
    println!("F(A cap (A + z)) = {:.4} vs mes {:.4}", both.frequency(&frag).value, both.theoretical_frequency());

    // [L; L^2; L^3] for the rotation by 1 is clean, for pi/6 it is not
    for theta in [1.0, std::f64::consts::FRAC_PI_6] {
        let stack = power_stack(&rotation_matrix(theta), 3, PowerDirection::Forward)?;
        println!("theta {theta:.4}: resonance {:?}", resonance_search(&stack.stacked, 6, 1e-9));
    }
    let rational = DMatrix::from_row_slice(1, 2, &[0.5, 0.25]);
    println!("rational Lambda: resonance {:?}", resonance_search(&rational, 10, 1e-9));
    Ok(())
}
