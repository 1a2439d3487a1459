use nalgebra::DMatrix;
use proptest::prelude::*;
use qlattice::dynamics::{FiniteLatticeSet, QuantizedSystem};
use qlattice::formats::{eval_expr, parse_cell, write_cell};
use qlattice::geometry::{Cell, JordanSet, Quantizer};
use qlattice::lattice::{average, count, trig_average, Fragment, IntVec};
use qlattice::quasiperiodic::{frac, QuasiperiodicSet};

fn quantizers() -> Vec<Quantizer> {
    vec![Quantizer::roundoff(2), Quantizer::new(Cell::cube(2)), Quantizer::new(Cell::nested_cross())]
}

fn unit_box() -> impl Strategy<Value = JordanSet> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_filter_map("nonempty", |(a, b, c, d)| {
        let (lo, hi) = ([a.min(b), c.min(d)], [a.max(b), c.max(d)]);
        (hi[0] - lo[0] > 1e-3 && hi[1] - lo[1] > 1e-3)
            .then(|| JordanSet::boxed(lo.to_vec(), hi.to_vec()).unwrap())
    })
}

fn system() -> impl Strategy<Value = QuantizedSystem> {
    (0.1..3.0f64, 0.6..1.6f64, 0usize..3).prop_map(|(theta, scale, q)| {
        let l = qlattice::dynamics::rotation_matrix(theta) * scale;
        QuantizedSystem::new(l, quantizers().swap_remove(q)).unwrap()
    })
}

fn irrational_lambda() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[2f64.sqrt(), 3f64.sqrt(), 0.5 * (1.0 + 5f64.sqrt()), 7f64.sqrt()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quantize_commutes_with_integer_shifts(q in 0usize..3, u in prop::array::uniform2(-50.0..50.0f64), z in prop::array::uniform2(-100i64..100)) {
        let r = &quantizers()[q];
        let (base, hazard) = r.quantize_flagged(&u);
        prop_assume!(!hazard);
        let shifted = [u[0] + z[0] as f64, u[1] + z[1] as f64];
        prop_assert_eq!(r.quantize(&shifted), base.add(&IntVec::from(z)));
    }

    #[test]
    fn cell_is_the_zero_fibre(q in 0usize..3, u in prop::array::uniform2(-3.0..3.0f64)) {
        let r = &quantizers()[q];
        let residual: Vec<f64> = u.iter().zip(r.quantize(&u).as_slice()).map(|(a, &b)| a - b as f64).collect();
        prop_assert_eq!(r.contains(&u), r.quantize(&u) == IntVec::zeros(2));
        prop_assert!(r.contains(&residual));
    }

    #[test]
    fn errors_lie_in_the_cell(sys in system(), x in prop::array::uniform2(-10_000i64..10_000)) {
        let e = sys.error(&IntVec::from(x)).unwrap();
        prop_assert!(sys.quantizer().contains(&e));
    }

    #[test]
    fn preimages_map_back(sys in system(), x in prop::array::uniform2(-1000i64..1000)) {
        let x = IntVec::from(x);
        for y in sys.preimage(&x).unwrap().iter() {
            prop_assert_eq!(sys.step(y), x.clone());
        }
    }

    #[test]
    fn sigma_recurrence_matches_direct_preimages(sys in system(), x in prop::array::uniform2(-300i64..300)) {
        let s = sys.sigma(&IntVec::from(x), 3).unwrap();
        prop_assert_eq!(s.len(), 4);
        prop_assert_eq!(s[0].clone(), FiniteLatticeSet::singleton(IntVec::zeros(2)));
    }

    #[test]
    fn frac_is_in_unit_interval(v in -1e12..1e12f64) {
        let f = frac(v);
        prop_assert!((0.0..1.0).contains(&f));
    }

    #[test]
    fn trig_averages_are_bounded(w in prop::array::uniform2(-5.0..5.0f64), a in prop::array::uniform2(-1000i64..1000), l in prop::array::uniform2(1u64..60)) {
        let frag = Fragment::new(a.to_vec(), l.to_vec()).unwrap();
        prop_assert!(trig_average(&w, &frag).unwrap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn fragment_size_is_edge_product(a in prop::collection::vec(-100i64..100, 1..4), seed in 1u64..7) {
        let l: Vec<u64> = a.iter().enumerate().map(|(i, _)| 1 + (seed * (i as u64 + 3)) % 7).collect();
        let frag = Fragment::new(a, l.clone()).unwrap();
        prop_assert_eq!(frag.len() as u64, l.iter().product::<u64>());
        prop_assert_eq!(frag.points().count(), frag.len());
        prop_assert!(frag.points().all(|x| frag.contains(&x)));
    }

    #[test]
    fn jordan_inclusion_exclusion(a in unit_box(), b in unit_box()) {
        let lhs = a.union(&b).unwrap().measure() + a.intersection(&b).unwrap().measure();
        prop_assert!((lhs - a.measure() - b.measure()).abs() < 1e-12);
        prop_assert!((a.complement().measure() + a.measure() - 1.0).abs() < 1e-12);
        let d = a.symmetric_difference(&b).unwrap().measure();
        prop_assert!((d - (a.measure() + b.measure() - 2.0 * a.intersection(&b).unwrap().measure())).abs() < 1e-12);
    }

    #[test]
    fn averages_are_linear(c in -3.0..3.0f64, a in prop::array::uniform2(-100i64..100)) {
        let frag = Fragment::new(a.to_vec(), vec![17, 23]).unwrap();
        let f = |x: &IntVec| (x.as_slice()[0] as f64 * 0.37).sin();
        let g = |x: &IntVec| (x.as_slice()[1] % 5) as f64;
        let joint = average(|x| f(x) + c * g(x), &frag);
        prop_assert!((joint - average(f, &frag) - c * average(g, &frag)).abs() < 1e-12);
    }

    #[test]
    fn complementary_counts_add_up(g in unit_box(), a in prop::array::uniform2(-1000i64..1000)) {
        let set = QuasiperiodicSet::new(irrational_lambda(), g).unwrap();
        let comp = set.complement();
        let frag = Fragment::new(a.to_vec(), vec![30, 40]).unwrap();
        prop_assert_eq!(count(|x| set.member(x), &frag) + count(|x| comp.member(x), &frag), 1200);
        let sum = set.frequency(&frag).value + comp.frequency(&frag).value;
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frequency_counts_transport_under_translation(g in unit_box(), z in prop::array::uniform2(-500i64..500)) {
        let set = QuasiperiodicSet::new(irrational_lambda(), g).unwrap();
        let z = IntVec::from(z);
        let moved = set.translate(&z).unwrap();
        let frag = Fragment::new(vec![-20, -20], vec![40, 40]).unwrap();
        let direct = count(|x| set.member(&x.add(&z)), &frag);
        let a = count(|x| moved.member(x), &frag);
        // points within rounding of the window boundary may flip
        prop_assert!(a.abs_diff(direct) <= 2, "{a} vs {direct}");
        prop_assert_eq!(count(|x| set.member(x), &frag.translate(&z)), direct);
    }

    #[test]
    fn expressions_follow_arithmetic(a in -100.0..100.0f64, b in 0.5..100.0f64) {
        let got = eval_expr(&format!("({a})*2+({b})/4-sqrt({b})^2")).unwrap();
        prop_assert!((got - (2.0 * a + b / 4.0 - b)).abs() < 1e-9 * (1.0 + a.abs() + b));
    }

    #[test]
    fn cells_roundtrip(q in 0usize..3, u in prop::array::uniform2(-0.9..0.9f64)) {
        let cell = quantizers()[q].cell().translate(&u).unwrap();
        prop_assert_eq!(parse_cell(&write_cell(&cell)).unwrap(), cell);
    }
}
