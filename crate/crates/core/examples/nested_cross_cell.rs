//! A non-cubic quantizer: the nested-cross cell.
//!
//! Loads the cell from its text file, reports its moments, and quantizes a
//! few points. The compensating quantizer of a rotation is built from the
//! same cell.

use qlattice::dynamics::QuantizedSystem;
use qlattice::formats::load_cell;
use qlattice::geometry::{Cell, Quantizer};
use qlattice::lattice::IntVec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/nested_cross.cell");
    let cell = load_cell(path.as_ref())?;
    println!("pieces: {}, measure {:.12}", cell.pieces().len(), cell.measure());
    println!("same as built-in: {}", cell.distance(&Cell::nested_cross())? < 1e-12);
    println!("mean {:?}", cell.mean());
    println!("covariance {}", cell.covariance()?);
    let (lo, hi) = cell.bounding_box();
    println!("bounding box {lo:?} .. {hi:?}");

    let r = Quantizer::new(cell);
    for u in [[0.5, 0.5], [0.05, 0.05], [0.95, 0.05], [3.2, -1.9]] {
        println!("R({u:?}) = {}", r.quantize(&u));
    }

    let sys = QuantizedSystem::new(qlattice::dynamics::rotation_matrix(1.0), r)?;
    let x = IntVec::from([4, -7]);
    println!("T{x} = {}, E = {:?}", sys.step(&x), sys.error(&x)?);
    println!("compensating step {}", sys.compensating_step(&x));
    Ok(())
}
