//! Averages of exp(2 pi i w.x) over lattice boxes in closed form, against
//! direct summation and the decay bound.

use qlattice::cli::direct_trig_average;
use qlattice::lattice::{trig_average, weyl_bound, Fragment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let omega = [0.5f64.sqrt(), 0.13];
    for edge in [1, 10, 100, 1000] {
        let frag = Fragment::new(vec![-17, 40], vec![edge, edge])?;
        let w = trig_average(&omega, &frag)?;
        let line = if edge <= 100 {
            format!("direct gap {:.1e}", (w - direct_trig_average(&omega, &frag)).norm())
        } else {
            String::new()
        };
        println!("edge {edge:>5}: |W| = {:.3e} <= {:.3e} {line}", w.norm(), weyl_bound(&omega, edge));
    }
    // integer frequencies average to one
    let frag = Fragment::new(vec![3, 3], vec![7, 9])?;
    println!("omega in Z^2: W = {}", trig_average(&[2.0, -1.0], &frag)?);
    Ok(())
}
