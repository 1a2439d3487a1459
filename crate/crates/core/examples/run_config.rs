//! Drives named experiments from a config, as the qlsim binary does.

use qlattice::cli::{execute, list_experiments, verdicts, Invocation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", list_experiments());
    let dir = std::env::temp_dir().join("qlattice-run-config");
    std::fs::create_dir_all(&dir)?;
    let config = dir.join("demo.cfg");
    std::fs::write(
        &config,
        "seed = 3\n\n[rotation-reach]\ntheta = pi/6 1\ncorner = -20 -20\nedges = 41 41\n\n\
         [cross]\nexperiment = error-uniformity\nsystem = cross.sys\nedges = 64 64\ncorner = 0 0\nbins = 8\n",
    )?;
    std::fs::copy(concat!(env!("CARGO_MANIFEST_DIR"), "/data/nested_cross.cell"), dir.join("nested_cross.cell"))?;
    std::fs::copy(concat!(env!("CARGO_MANIFEST_DIR"), "/data/rotation_1_cross.sys"), dir.join("cross.sys"))?;
    let outcome = execute(&Invocation { config: Some(config), out: Some(dir.join("out")), ..Default::default() })?;
    print!("{}", verdicts(&outcome));
    for entry in std::fs::read_dir(&outcome.out_dir)? {
        println!("wrote {}", entry?.path().display());
    }
    Ok(())
}
