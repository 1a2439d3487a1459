use nalgebra::DMatrix;
use qlattice::error::Error;
use qlattice::geometry::{Cell, CellPiece, HalfOpenBox, JordanSet, Quantizer};
use qlattice::lattice::IntVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Moments of a cell by sampling: a uniform point of `[0,1)^n` lands in one
/// piece and is moved by that piece's shift.
fn sampled_moments(cell: &Cell, samples: usize, seed: u64) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = cell.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(samples);
    for _ in 0..samples {
        let p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let owners: Vec<&CellPiece> = cell.pieces().iter().filter(|pc| pc.set.contains(&p)).collect();
        assert_eq!(owners.len(), 1);
        pts.push(p.iter().zip(owners[0].shift.as_slice()).map(|(a, &s)| a + s as f64).collect::<Vec<f64>>());
    }
    let mean: Vec<f64> = (0..n).map(|i| pts.iter().map(|p| p[i]).sum::<f64>() / samples as f64).collect();
    let mut cov = DMatrix::<f64>::zeros(n, n);
    let mut fourth = DMatrix::<f64>::zeros(n, n);
    for p in &pts {
        for i in 0..n {
            for j in 0..n {
                let v = (p[i] - mean[i]) * (p[j] - mean[j]);
                cov[(i, j)] += v;
                fourth[(i, j)] += v * v;
            }
        }
    }
    let s = samples as f64;
    cov /= s;
    // standard error of each covariance entry
    let se = DMatrix::from_fn(n, n, |i, j| ((fourth[(i, j)] / s - cov[(i, j)].powi(2)) / s).sqrt());
    (mean, cov, se)
}

fn check_moments(cell: &Cell) {
    let (mean, cov, se) = sampled_moments(cell, 1_000_000, 99);
    let exact_cov = cell.covariance().unwrap();
    for i in 0..cell.dim() {
        let sd = (exact_cov[(i, i)] / 1e6).sqrt();
        assert!((cell.mean()[i] - mean[i]).abs() < 3.0 * sd, "mean {i}");
        for j in 0..cell.dim() {
            assert!((exact_cov[(i, j)] - cov[(i, j)]).abs() < 3.0 * se[(i, j)] + 1e-12, "cov {i}{j}");
        }
    }
}

#[test]
fn nested_cross_moments_match_sampling() {
    check_moments(&Cell::nested_cross());
}

#[test]
fn shifted_and_permuted_cells_match_sampling() {
    let c = Cell::nested_cross().translate(&[0.3, -0.45]).unwrap();
    check_moments(&c);
    check_moments(&Cell::cube(3).translate(&[0.1, 0.7, -0.2]).unwrap());
}

#[test]
fn roundoff_and_cube_moments() {
    for n in 1..=4 {
        let eye = DMatrix::<f64>::identity(n, n) / 12.0;
        assert!((Cell::roundoff(n).covariance().unwrap() - &eye).amax() < 1e-12);
        assert!((Cell::cube(n).covariance().unwrap() - &eye).amax() < 1e-12);
        assert!(Cell::roundoff(n).mean().iter().all(|m| m.abs() < 1e-15));
        assert!(Cell::cube(n).mean().iter().all(|m| (m - 0.5).abs() < 1e-15));
    }
}

#[test]
fn jordan_measures() {
    let a = JordanSet::from_boxes(
        2,
        vec![
            HalfOpenBox::new(vec![0.0, 0.0], vec![0.5, 1.0]).unwrap(),
            HalfOpenBox::new(vec![0.25, 0.0], vec![0.75, 1.0]).unwrap(),
        ],
    )
    .unwrap();
    assert!((a.measure() - 0.75).abs() < 1e-15);
    let b = JordanSet::boxed(vec![0.1, 0.2], vec![0.4, 0.9]).unwrap();
    let twice = JordanSet::from_boxes(2, vec![b.boxes()[0].clone(), b.boxes()[0].clone()]).unwrap();
    assert!((twice.measure() - b.measure()).abs() < 1e-15);
    assert_eq!(JordanSet::full(3).complement().measure(), 0.0);
    assert!(a.intersection(&a.complement()).unwrap().measure() < 1e-15);
}

#[test]
fn cell_validation() {
    let n = 2;
    let dup = vec![
        CellPiece { set: JordanSet::full(n), shift: IntVec::zeros(n) },
        CellPiece { set: JordanSet::full(n), shift: IntVec::unit(n, 0) },
    ];
    assert!(matches!(Cell::new(n, dup), Err(Error::CellDoubleCoverage { .. } | Error::CellMeasure { .. })));
    let gap = vec![CellPiece { set: JordanSet::boxed(vec![0.0, 0.0], vec![0.5, 1.0]).unwrap(), shift: IntVec::zeros(n) }];
    assert!(matches!(Cell::new(n, gap), Err(Error::CellMeasure { .. } | Error::CellGap { .. })));
    assert!(matches!(JordanSet::boxed(vec![0.5], vec![1.5]), Err(Error::BoxOutsideUnitCube { .. })));
}

#[test]
fn cube_translation_splits() {
    let c = Cell::cube(2).translate(&[0.3, 0.7]).unwrap();
    let mut measures: Vec<f64> = c.pieces().iter().map(|p| p.set.measure()).collect();
    measures.sort_by(f64::total_cmp);
    let mut expected = vec![0.21, 0.49, 0.09, 0.21];
    expected.sort_by(f64::total_cmp);
    for (m, e) in measures.iter().zip(&expected) {
        assert!((m - e).abs() < 1e-12);
    }
    assert!((c.measure() - 1.0).abs() < 1e-12);
    let r = Cell::cube(2).translate(&[-0.5, -0.5]).unwrap();
    assert!(r.distance(&Cell::roundoff(2)).unwrap() < 1e-12);
    let z = Cell::nested_cross().translate(&[2.0, -1.0]).unwrap();
    for (a, b) in z.pieces().iter().zip(Cell::nested_cross().pieces()) {
        assert_eq!(a.shift, b.shift.add(&IntVec::from([2, -1])));
    }
}

#[test]
fn roundoff_quantizer_values() {
    let r = Quantizer::roundoff(2);
    assert_eq!(r.quantize(&[0.4, -0.6]), IntVec::from([0, -1]));
    assert_eq!(Quantizer::roundoff(1).quantize(&[0.5]), IntVec::from([1]));
    assert_eq!(Quantizer::roundoff(1).quantize(&[-0.5]), IntVec::from([0]));
    for z in [[3, -4], [0, 0], [-100, 7]] {
        assert_eq!(r.quantize(&[z[0] as f64, z[1] as f64]), IntVec::from(z));
    }
}

#[test]
fn quantizers_commute_with_integer_shifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for r in [Quantizer::roundoff(2), Quantizer::new(Cell::nested_cross()), Quantizer::new(Cell::cube(2))] {
        for _ in 0..10_000 {
            let u = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let z = IntVec::from([rng.random_range(-50..50), rng.random_range(-50..50)]);
            let shifted = [u[0] + z.as_slice()[0] as f64, u[1] + z.as_slice()[1] as f64];
            assert_eq!(r.quantize(&shifted), r.quantize(&u).add(&z), "{u:?} {z}");
        }
    }
}

#[test]
fn compensating_quantizers() {
    // mu = 0: compensating quantizer is the quantizer itself
    let r = Quantizer::roundoff(2);
    let l_inv = DMatrix::from_row_slice(2, 2, &[0.8, 0.6, -0.6, 0.8]);
    let rt = r.compensating(&l_inv, &[0.0, 0.0]).unwrap();
    assert!(rt.cell().distance(r.cell()).unwrap() < 1e-12);

    // cube with L = I: shift -2 mu, so R~(u) = R(u + 2 mu)
    let cube = Quantizer::new(Cell::cube(2));
    let eye = DMatrix::identity(2, 2);
    let ct = cube.compensating(&eye, &[0.5, 0.5]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let u = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        assert_eq!(ct.quantize(&u), cube.quantize(&[u[0] + 1.0, u[1] + 1.0]));
    }

    // involution: compensating twice with (L^{-1}, L) returns the original cell
    let cross = Quantizer::new(Cell::nested_cross());
    let l = l_inv.clone().try_inverse().unwrap();
    let mu = cross.cell().mean();
    let once = cross.compensating(&l_inv, &mu).unwrap();
    let twice = once.compensating(&l, &once.cell().mean()).unwrap();
    assert!(twice.cell().distance(cross.cell()).unwrap() < 1e-12);
}
