use nalgebra::DMatrix;
use qlattice::dynamics::rotation_matrix;
use qlattice::geometry::JordanSet;
use qlattice::lattice::{Fragment, IntVec};
use qlattice::quasiperiodic::{frac, power_stack, resonance_search, PowerDirection, QuasiperiodicSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

fn irrational_lambda() -> DMatrix<f64> {
    let (r2, r3, p) = (2f64.sqrt(), 3f64.sqrt(), golden());
    DMatrix::from_row_slice(2, 2, &[r2, r3 - p, p + 2.0 * r2, r3])
}

fn window(lo: [f64; 2], hi: [f64; 2]) -> JordanSet {
    JordanSet::boxed(lo.to_vec(), hi.to_vec()).unwrap()
}

fn random_points(count: usize, seed: u64) -> Vec<IntVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| IntVec::from([rng.random_range(-5000..5000), rng.random_range(-5000..5000)])).collect()
}

#[test]
fn basic_membership() {
    let q = QuasiperiodicSet::new(DMatrix::zeros(2, 2), window([0.0, 0.0], [0.1, 0.1])).unwrap();
    assert!(random_points(100, 1).iter().all(|x| q.member(x)));
    let g = QuasiperiodicSet::new(DMatrix::from_element(1, 1, golden()), JordanSet::boxed(vec![0.0], vec![0.5]).unwrap())
        .unwrap();
    assert!(!g.member(&IntVec::from([1])));
    assert!(g.member(&IntVec::from([2])));
}

#[test]
fn phases_add_modulo_one() {
    let lambda = irrational_lambda();
    let q = QuasiperiodicSet::new(lambda, window([0.2, 0.1], [0.9, 0.6])).unwrap();
    let xs = random_points(1000, 2);
    let zs = random_points(1000, 3);
    for (x, z) in xs.iter().zip(&zs) {
        let direct = q.phase(&x.add(z));
        let px = q.phase(x);
        let pz = q.phase(z);
        for i in 0..2 {
            let d = (direct[i] - frac(px[i] + pz[i])).abs();
            assert!(d < 1e-12 || (1.0 - d) < 1e-12);
        }
    }
}

#[test]
fn translation_law() {
    let q = QuasiperiodicSet::new(irrational_lambda(), window([0.2, 0.1], [0.9, 0.6])).unwrap();
    let xs = random_points(1000, 4);
    let zs = random_points(1000, 5);
    let mut agree = 0;
    for (x, z) in xs.iter().zip(&zs) {
        let moved = q.translate(z).unwrap();
        agree += (q.member(&x.add(z)) == moved.member(x)) as usize;
    }
    // points within rounding distance of the window boundary may flip
    assert!(agree >= 998, "{agree}");
}

#[test]
fn boolean_algebra_is_pointwise() {
    let lambda = irrational_lambda();
    let a = QuasiperiodicSet::new(lambda.clone(), window([0.1, 0.0], [0.6, 0.5])).unwrap();
    let b = QuasiperiodicSet::new(lambda.clone(), window([0.4, 0.3], [0.9, 1.0])).unwrap();
    let c = QuasiperiodicSet::new(DMatrix::from_row_slice(1, 2, &[golden(), 2f64.sqrt()]), JordanSet::boxed(vec![0.0], vec![0.4]).unwrap())
        .unwrap();
    let full = QuasiperiodicSet::everything(2);
    let union_c = a.union(&b).unwrap().complement();
    let inter_of_c = a.complement().intersection(&b.complement()).unwrap();
    let diff = a.difference(&b).unwrap();
    let stacked = a.stack(&c).unwrap();
    let with_full = a.stack(&full).unwrap();
    for x in random_points(1000, 6) {
        assert_eq!(union_c.member(&x), inter_of_c.member(&x));
        assert_eq!(a.complement().complement().member(&x), a.member(&x));
        assert_eq!(diff.member(&x), a.member(&x) && !b.member(&x));
        assert_eq!(stacked.member(&x), a.member(&x) && c.member(&x));
        assert_eq!(with_full.member(&x), a.member(&x));
    }
}

#[test]
fn frequencies() {
    let q = QuasiperiodicSet::new(irrational_lambda(), window([0.0, 0.0], [0.25, 1.0 / 3.0])).unwrap();
    assert!((q.theoretical_frequency() - 1.0 / 12.0).abs() < 1e-15);
    let f = q.frequency(&Fragment::new(vec![0, 0], vec![2000, 2000]).unwrap());
    assert!((f.value - 1.0 / 12.0).abs() < 0.01);
    assert_eq!(QuasiperiodicSet::everything(2).theoretical_frequency(), 1.0);
}

#[test]
fn power_stacks() {
    let l = rotation_matrix(0.7);
    let s = power_stack(&l, 1, PowerDirection::Forward).unwrap();
    assert!((s.stacked.clone() - &l).amax() < 1e-15);
    let s = power_stack(&l, 5, PowerDirection::Forward).unwrap();
    for k in 0..5 {
        assert!((s.block(k) - rotation_matrix(0.7 * (k + 1) as f64)).amax() < 1e-10);
    }
    let both = power_stack(&l, 3, PowerDirection::Both).unwrap();
    assert_eq!(both.stacked.shape(), (12, 2));
    assert_eq!(both.exponents, vec![-3, -2, -1, 1, 2, 3]);
    assert!((both.block(0) - rotation_matrix(-2.1)).amax() < 1e-10);
}

#[test]
fn resonances() {
    let half = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 2f64.sqrt(), 3f64.sqrt()]);
    assert_eq!(resonance_search(&half, 2, 1e-9), Some(vec![2, 0]));
    let ints = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 4.0]);
    assert_eq!(resonance_search(&ints, 3, 1e-9), Some(vec![1, 0]));
    assert_eq!(resonance_search(&irrational_lambda(), 50, 1e-9), None);
}
