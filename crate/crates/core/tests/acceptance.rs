//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use qlattice::analysis::rng::stream;
use qlattice::analysis::{
    backward_event, clt_experiment, error_independence_test, error_uniformity_test, frequency_preservation, hole_frequency_2d,
    kernel_estimate, martingale_check, max_deviation_experiment, mean_preimage_count, mixing_test,
    reachability_frequency, wiener_max_modulus,
};

use qlattice::cli::{direct_trig_average, execute, forward_event, random_nonresonant, Invocation};
use qlattice::dynamics::{FiniteLatticeSet, QuantizedSystem};
use qlattice::geometry::{Cell, JordanSet};
use qlattice::lattice::{trig_average, weyl_bound, Fragment, IntVec};
use qlattice::output::{render_fragment, GREY};
use qlattice::quasiperiodic::{resonance_search, QuasiperiodicSet};
use qlattice::analysis::neutral_build;
use rand::Rng;

struct Verdicts {
    failed: Vec<String>,
}

impl Verdicts {
    fn line(&mut self, name: &str, pass: bool, detail: String, took: Duration) {
        println!("{} {name}: {detail} [{:.1} s]", if pass { "PASS" } else { "FAIL" }, took.as_secs_f64());
        if !pass {
            self.failed.push(name.to_string());
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn square(lo: i64, edge: u64) -> Fragment {
    Fragment::new(vec![lo, lo], vec![edge, edge]).unwrap()
}

fn reachability(v: &mut Verdicts) {
    let sys = QuantizedSystem::rotation(PI / 6.0);
    let frag = square(-50, 101);
    let (est, took) = timed(|| reachability_frequency(&sys, 1, &frag).unwrap());
    let img = render_fragment(|x| !sys.preimage(x).unwrap().is_empty(), &frag).unwrap();
    let ratio = img.count(GREY) as f64 / frag.len() as f64;
    let pass = (est.value - 0.8659).abs() <= 1e-4 && ratio == est.value && took < Duration::from_secs(5);
    v.line(
        "1 rotation reachability",
        pass,
        format!(
            "frequency {} / {} = {:.6}, required 0.8659 +- 1e-4; theory {:.6}; image ratio {:.6}",
            est.hits,
            est.total,
            est.value,
            3f64.sqrt() / 2.0,
            ratio
        ),
        took,
    );
}

fn hole_frequency(v: &mut Verdicts) {
    let samples = 1_000_000;
    let origin = FiniteLatticeSet::singleton(IntVec::zeros(2));
    let (rows, took) = timed(|| {
        [PI / 6.0, PI / 5.0, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let target = (t.cos() + t.sin() - 1.0).powi(2);
                let k = kernel_estimate(&QuantizedSystem::rotation(t), &origin, samples, 100 + i as u64).unwrap();
                let p = k.probability(&FiniteLatticeSet::empty());
                let sigma = (target * (1.0 - target) / samples as f64).sqrt();
                (t, p, target, sigma)
            })
            .collect::<Vec<_>>()
    });
    let pass = rows.iter().all(|&(_, p, t, s)| (p - t).abs() <= 3.0 * s && (p - t).abs() <= 2e-3)
        && took < Duration::from_secs(30);
    let detail = rows
        .iter()
        .map(|(t, p, target, s)| format!("theta={t:.4}: {p:.5} vs {target:.5} ({:.2} sigma)", (p - target) / s))
        .collect::<Vec<_>>()
        .join("; ");
    v.line("2 hole frequency", pass, detail, took);
}

fn hole_supremum(v: &mut Verdicts) {
    let (h, took) = timed(|| hole_frequency_2d(PI / 4.0 - 0.001).unwrap());
    let sup = (2f64.sqrt() - 1.0).powi(2);
    v.line("3 hole supremum", (h - sup).abs() <= 0.002, format!("{h:.6} vs {sup:.6}"), took);
}

fn covariance(v: &mut Verdicts) {
    let (gap, took) = timed(|| (Cell::roundoff(2).covariance().unwrap() - DMatrix::identity(2, 2) / 12.0).amax());
    v.line("4 roundoff covariance", gap <= 1e-12, format!("max entry gap {gap:.2e}"), took);
}

fn uniformity(v: &mut Verdicts) {
    let sys = QuantizedSystem::rotation(1.0);
    let frag = square(-256, 512);
    let (rows, took) = timed(|| {
        (1..=4)
            .map(|k| {
                let r = error_uniformity_test(&sys, &frag, k, 16).unwrap();
                (k, r.statistic, r.diagnostics["max_bin_deviation"], r.degenerate)
            })
            .collect::<Vec<_>>()
    });
    let pass = rows.iter().all(|&(_, p, d, deg)| !deg && p > 0.001 && d < 0.01) && took < Duration::from_secs(60);
    let detail = rows.iter().map(|(k, p, d, _)| format!("k={k}: p={p:.4}, dev={d:.2e}")).collect::<Vec<_>>().join("; ");
    v.line("5 error uniformity", pass, detail, took);
}

fn independence(v: &mut Verdicts) {
    let frag = square(-256, 512);
    let (r, took) = timed(|| error_independence_test(&QuantizedSystem::rotation(1.0), &frag, 1, 2, 8).unwrap());
    v.line("6 error independence", r.statistic < 0.01, format!("theta=1: sup gap {:.2e}", r.statistic), took);
    let (r, took) = timed(|| error_independence_test(&QuantizedSystem::rotation(PI / 6.0), &frag, 1, 2, 8).unwrap());
    v.line(
        "6b error independence at theta=pi/6",
        r.statistic < 0.01,
        format!("sup gap {:.2e}", r.statistic),
        took,
    );
}

fn preimage_counts(v: &mut Verdicts) {
    let sys = QuantizedSystem::rotation(1.0);
    let frag = square(-150, 301);
    let ((mean, gaps), took) = timed(|| {
        let mean = mean_preimage_count(&sys, &frag).unwrap();
        let event = backward_event(&sys, 2, 0.5).unwrap();
        let gaps: Vec<f64> = (1..=3)
            .flat_map(|n| martingale_check(&sys, &frag, n, &event).unwrap())
            .map(|r| r.statistic)
            .collect();
        (mean, gaps)
    });
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    v.line(
        "7 mean preimage cardinality",
        (0.99..=1.01).contains(&mean) && worst < 0.02,
        format!("mean nu_1 {mean:.5}; worst martingale gap over N=1..3 {worst:.2e} ({} checks)", gaps.len()),
        took,
    );
}

fn kernel_mean(v: &mut Verdicts) {
    let sys = QuantizedSystem::rotation(1.0);
    let sources = [FiniteLatticeSet::singleton(IntVec::zeros(2)), FiniteLatticeSet::from(vec![IntVec::zeros(2), IntVec::unit(2, 0)])];
    let (rows, took) = timed(|| {
        sources
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let m = kernel_estimate(&sys, a, 100_000, 200 + i as u64).unwrap().mean_cardinality();
                (a.len() as f64, m.mean, m.std_error)
            })
            .collect::<Vec<_>>()
    });
    let pass = rows.iter().all(|&(t, m, s)| (m - t).abs() <= 3.0 * s);
    let detail =
        rows.iter().map(|(t, m, s)| format!("#A={t}: {m:.5} +- {s:.5}")).collect::<Vec<_>>().join("; ");
    v.line("8 kernel mean cardinality", pass, detail, took);
}

fn deviations(v: &mut Verdicts, theta: f64, label: &str, tags: (&str, &str)) {
    let sys = QuantizedSystem::rotation(theta);
    let spec = neutral_build(&DMatrix::identity(2, 2), &[theta], sys.covariance()).unwrap();
    let frag = Fragment::new(vec![100_000, 200_000], vec![100, 100]).unwrap();
    let alphas = [0.5, 1.0, 2.0];
    let (tails, took) = timed(|| clt_experiment(&sys, &spec, &frag, 400, &alphas).unwrap());
    let pass = tails.iter().all(|r| (r.value - (-r_alpha(r).powi(2) / 2.0).exp()).abs() <= 0.02)
        && took < Duration::from_secs(180);
    let detail = tails
        .iter()
        .map(|r| format!("alpha={}: {:.4} vs {:.4}", r_alpha(r), r.value, (-r_alpha(r).powi(2) / 2.0).exp()))
        .collect::<Vec<_>>()
        .join("; ");
    v.line(tags.0, pass, format!("{label}: {detail}"), took);

    let (out, took) = timed(|| {
        let oracle = wiener_max_modulus(100_000, 1000, 300);
        max_deviation_experiment(&sys, &spec, &frag, 400, &oracle, 300).unwrap()
    });
    let ks = out.reports.iter().find(|r| r.experiment == "max-deviation").unwrap().statistic;
    v.line(tags.1, ks < 0.05, format!("{label}: KS distance {ks:.4}"), took);
}

fn r_alpha(r: &qlattice::analysis::TestReport) -> f64 {
    r.parameter.rsplit("alpha=").next().unwrap().parse().unwrap()
}

fn weyl(v: &mut Verdicts) {
    let (rows, took) = timed(|| {
        (0..1000u64)
            .map(|i| {
                let mut rng = stream(400, i);
                let omega: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
                let corner: Vec<i64> = (0..2).map(|_| rng.random_range(-1000..=1000)).collect();
                let edges: Vec<u64> = (0..2).map(|_| rng.random_range(1..=60)).collect();
                let frag = Fragment::new(corner, edges).unwrap();
                let closed = trig_average(&omega, &frag).unwrap();
                let gap = (closed - direct_trig_average(&omega, &frag)).norm();
                (gap, closed.norm() <= weyl_bound(&omega, frag.min_edge()) + 1e-12)
            })
            .collect::<Vec<_>>()
    });
    let worst = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let bounded = rows.iter().all(|r| r.1);
    v.line("11 Weyl closed form", worst <= 1e-10 && bounded, format!("worst gap {worst:.2e}; bound holds: {bounded}"), took);
}

fn quasiperiodic(v: &mut Verdicts) {
    let ((value, clean), took) = timed(|| {
        let (lambda, _) = random_nonresonant(2, 2, 50, 500);
        let clean = resonance_search(&lambda, 50, 1e-9).is_none();
        let q = QuasiperiodicSet::new(lambda, JordanSet::boxed(vec![0.0, 0.0], vec![0.5, 0.7]).unwrap()).unwrap();
        (q.frequency(&square(0, 2000)).value, clean)
    });
    v.line(
        "12 quasiperiodic frequency",
        clean && (value - 0.35).abs() < 0.01,
        format!("{value:.5} vs 0.35; resonance-free at bound 50: {clean}"),
        took,
    );
}

fn preservation(v: &mut Verdicts) {
    let sys = QuantizedSystem::rotation(1.0);
    let (r, took) = timed(|| {
        let a = forward_event(&sys, 2, 0.3).unwrap();
        frequency_preservation(&sys, &a, &square(-500, 1000)).unwrap()
    });
    v.line(
        "13 frequency preservation",
        (r.value - r.target).abs() < 0.01,
        format!("F(T^-1 A) {:.5}, F(A) {:.5}", r.value, r.target),
        took,
    );
}

fn mixing(v: &mut Verdicts) {
    let sys = QuantizedSystem::rotation(1.0);
    let (rows, took) = timed(|| {
        let a = forward_event(&sys, 1, 0.3).unwrap();
        let b = forward_event(&sys, 1, 0.4).unwrap();
        mixing_test(&sys, &a, &b, 8, &square(-400, 800)).unwrap()
    });
    let late: Vec<_> = rows.iter().skip(4).collect();
    let worst = late.iter().map(|r| (r.value - 0.12).abs()).fold(0.0, f64::max);
    v.line("14 mixing", worst < 0.01, format!("worst |F - 0.12| for k=4..8: {worst:.2e}"), took);
}

fn determinism(v: &mut Verdicts) {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/acceptance.cfg");
    let ((same, files), took) = timed(|| {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for (d, threads) in dirs.iter().zip([1, 2]) {
            execute(&Invocation {
                config: Some(cfg.clone()),
                out: Some(d.path().to_path_buf()),
                threads: Some(threads),
                ..Default::default()
            })
            .unwrap();
        }
        let mut names: Vec<_> = std::fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        let same = names
            .iter()
            .all(|n| std::fs::read(dirs[0].path().join(n)).ok() == std::fs::read(dirs[1].path().join(n)).ok());
        (same, names.len())
    });
    v.line("15 determinism", same && files >= 3, format!("{files} files byte-identical: {same}"), took);
}

fn main() {
    let mut v = Verdicts { failed: vec![] };
    reachability(&mut v);
    hole_frequency(&mut v);
    hole_supremum(&mut v);
    covariance(&mut v);
    uniformity(&mut v);
    independence(&mut v);
    preimage_counts(&mut v);
    kernel_mean(&mut v);
    deviations(&mut v, PI / 6.0, "theta=pi/6", ("9 CLT tails", "10 max-deviation law"));
    weyl(&mut v);
    quasiperiodic(&mut v);
    preservation(&mut v);
    mixing(&mut v);
    determinism(&mut v);
    deviations(&mut v, 1.0, "theta=1", ("9b CLT tails at theta=1", "10b max-deviation law at theta=1"));
    if v.failed.is_empty() {
        println!("all criteria pass");
    } else {
        println!("failing: {}", v.failed.join(", "));
        std::process::exit(1);
    }
}
