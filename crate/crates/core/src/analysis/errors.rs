//! Uniformity and independence of quantization errors, mixing and frequency
//! preservation, all measured by lattice scans.
//!
//! Errors are binned through their fractional parts. Since the integer
//! translates of a cell tile space, `frac` maps the uniform law on the cell
//! to the uniform law on `[0,1)^n`, so every bin has positive expected mass
//! whatever the cell geometry.

use crate::dynamics::QuantizedSystem;
use crate::error::{Error, Result};
use crate::lattice::{map_slabs, Fragment, IntVec};
use crate::quasiperiodic::QuasiperiodicSet;
use crate::tolerances;

use super::report::TestReport;
use super::stats::chi_square_uniform;

fn bin_of(e: &[f64], bins: usize) -> usize {
    e.iter().fold(0, |acc, &v| {
        let f = v - v.floor();
        acc * bins + ((f * bins as f64) as usize).min(bins - 1)
    })
}

fn check_scan(sys: &QuantizedSystem, frag: &Fragment, bins: usize) -> Result<usize> {
    if frag.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: frag.dim() });
    }
    if bins == 0 {
        return Err(Error::InvalidInput("bins must be positive".into()));
    }
    u32::try_from(sys.dim())
        .ok()
        .and_then(|n| bins.checked_pow(n))
        .filter(|&c| c <= 1 << 24)
        .ok_or_else(|| Error::InvalidInput(format!("{bins} bins per axis is too many")))
}

/// Walks `T` from `x` and calls `f(k, E_k)` for `k = 1..=horizon`.
/// Returns the number of hazard-flagged steps.
fn for_each_error<F: FnMut(usize, &[f64])>(sys: &QuantizedSystem, x: &IntVec, horizon: usize, mut f: F) -> u64 {
    let mut y = x.clone();
    let mut hazards = 0;
    for k in 1..=horizon {
        let lx = sys.apply(&y.to_f64());
        let (t, h) = sys.quantizer().quantize_flagged(&lx);
        hazards += h as u64;
        let e: Vec<f64> = lx.iter().zip(t.as_slice()).map(|(a, &b)| a - b as f64).collect();
        f(k, &e);
        y = t;
    }
    hazards
}

struct Histogram {
    counts: Vec<u64>,
    hazards: u64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Histogram {
    fn new(cells: usize, n: usize) -> Self {
        Histogram { counts: vec![0; cells], hazards: 0, lo: vec![f64::INFINITY; n], hi: vec![f64::NEG_INFINITY; n] }
    }

    fn merge(mut self, other: Histogram) -> Histogram {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.hazards += other.hazards;
        for k in 0..self.lo.len() {
            self.lo[k] = self.lo[k].min(other.lo[k]);
            self.hi[k] = self.hi[k].max(other.hi[k]);
        }
        self
    }

    fn spread(&mut self, e: &[f64]) {
        for (k, &v) in e.iter().enumerate() {
            self.lo[k] = self.lo[k].min(v);
            self.hi[k] = self.hi[k].max(v);
        }
    }

    fn degenerate(&self) -> bool {
        self.lo.iter().zip(&self.hi).all(|(l, h)| h - l < 1e-12)
    }
}

/// Chi-square test of the pooled errors `E_1..E_horizon` over the fragment
/// against the uniform law on the cell. The maximal absolute deviation of a
/// bin frequency from `1/#bins` is reported as the `max_bin_deviation`
/// diagnostic.
pub fn error_uniformity_test(
    sys: &QuantizedSystem,
    frag: &Fragment,
    horizon: usize,
    bins: usize,
) -> Result<TestReport> {
    let cells = check_scan(sys, frag, bins)?;
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let n = sys.dim();
    let hist = map_slabs(frag, |slab| {
        let mut h = Histogram::new(cells, n);
        for x in slab.points() {
            h.hazards += for_each_error(sys, &x, horizon, |_, e| {
                h.counts[bin_of(e, bins)] += 1;
                h.spread(e);
            });
        }
        h
    })
    .into_iter()
    .reduce(Histogram::merge)
    .expect("at least one slab");
    let total: u64 = hist.counts.iter().sum();
    let (chi2, p) = chi_square_uniform(&hist.counts);
    let max_dev = hist
        .counts
        .iter()
        .map(|&c| (c as f64 / total as f64 - 1.0 / cells as f64).abs())
        .fold(0.0, f64::max);
    Ok(TestReport::new("error-uniformity", format!("horizon={horizon};bins={bins}"))
        .statistic(p)
        .degenerate(hist.degenerate())
        .above(tolerances::UNIFORMITY_P_VALUE)
        .samples(total)
        .fragment(frag.describe())
        .hazards(hist.hazards)
        .diagnostic("chi_square", chi2)
        .diagnostic("max_bin_deviation", max_dev))
}

/// Joint and marginal bin counts of `(E_j, E_k)`.
fn joint_counts(sys: &QuantizedSystem, frag: &Fragment, j: usize, k: usize, bins: usize) -> Result<(Histogram, usize)> {
    let cells = check_scan(sys, frag, bins)?;
    if j == k {
        return Err(Error::InvalidInput(format!("independence needs distinct indices, got j = k = {j}")));
    }
    if j == 0 || k == 0 {
        return Err(Error::InvalidInput("error indices start at 1".into()));
    }
    let n = sys.dim();
    let horizon = j.max(k);
    let hist = map_slabs(frag, |slab| {
        let mut h = Histogram::new(cells * cells, n);
        for x in slab.points() {
            let (mut bj, mut bk) = (0, 0);
            h.hazards += for_each_error(sys, &x, horizon, |i, e| {
                if i == j {
                    bj = bin_of(e, bins);
                    h.spread(e);
                }
                if i == k {
                    bk = bin_of(e, bins);
                }
            });
            h.counts[bj * cells + bk] += 1;
        }
        h
    })
    .into_iter()
    .reduce(Histogram::merge)
    .expect("at least one slab");
    Ok((hist, cells))
}

/// Sup-norm distance between the joint distribution function of
/// `(frac E_j, frac E_k)` and the product of its marginals, evaluated at all
/// bin corners. Passes below `4/sqrt(#frag) + 0.01`.
pub fn error_independence_test(
    sys: &QuantizedSystem,
    frag: &Fragment,
    j: usize,
    k: usize,
    bins: usize,
) -> Result<TestReport> {
    let (hist, cells) = joint_counts(sys, frag, j, k, bins)?;
    let total = frag.len() as f64;
    // prefix sums along each of the 2n bin axes give the joint distribution
    // function at every bin corner
    let axes = 2 * sys.dim();
    let mut cum: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    for d in 0..axes {
        let stride = bins.pow((axes - 1 - d) as u32);
        for idx in 0..cum.len() {
            if !(idx / stride).is_multiple_of(bins) {
                cum[idx] += cum[idx - stride];
            }
        }
    }
    let last = cells - 1;
    let mut sup: f64 = 0.0;
    for a in 0..cells {
        for b in 0..cells {
            let joint = cum[a * cells + b] / total;
            let prod = (cum[a * cells + last] / total) * (cum[last * cells + b] / total);
            sup = sup.max((joint - prod).abs());
        }
    }
    let threshold = 4.0 / total.sqrt() + tolerances::INDEPENDENCE_SLACK;
    Ok(TestReport::new("error-independence", format!("j={j};k={k};bins={bins}"))
        .statistic(sup)
        .degenerate(hist.degenerate())
        .below(threshold)
        .samples(frag.len() as u64)
        .fragment(frag.describe())
        .hazards(hist.hazards))
}

/// Largest `|F(A_1 cap A_2) - F(A_1) F(A_2)|` over events `A_1`, `A_2` that
/// fix, for each axis, the half of the unit interval containing
/// `frac(E_j)` and `frac(E_k)` respectively.
pub fn product_law_gap(sys: &QuantizedSystem, frag: &Fragment, j: usize, k: usize) -> Result<f64> {
    let (hist, cells) = joint_counts(sys, frag, j, k, 2)?;
    let total = frag.len() as f64;
    let mut row = vec![0f64; cells];
    let mut col = vec![0f64; cells];
    for a in 0..cells {
        for b in 0..cells {
            let p = hist.counts[a * cells + b] as f64 / total;
            row[a] += p;
            col[b] += p;
        }
    }
    let mut gap: f64 = 0.0;
    for a in 0..cells {
        for b in 0..cells {
            gap = gap.max((hist.counts[a * cells + b] as f64 / total - row[a] * col[b]).abs());
        }
    }
    Ok(gap)
}

/// `|F(T^{-k} A cap B) - F(A) F(B)|` for `k = 0..=k_max`, with `F(A)`, `F(B)`
/// the window measures. Entry `i` of the result is for `k = i`.
pub fn mixing_test(
    sys: &QuantizedSystem,
    a: &QuasiperiodicSet,
    b: &QuasiperiodicSet,
    k_max: usize,
    frag: &Fragment,
) -> Result<Vec<TestReport>> {
    for q in [a, b] {
        if q.dim() != sys.dim() {
            return Err(Error::DimensionMismatch { expected: sys.dim(), got: q.dim() });
        }
    }
    if frag.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: frag.dim() });
    }
    let hits = map_slabs(frag, |slab| {
        let mut counts = vec![0u64; k_max + 1];
        for x in slab.points() {
            if !b.member(&x) {
                continue;
            }
            let mut y = x;
            for (k, c) in counts.iter_mut().enumerate() {
                if k > 0 {
                    y = sys.step(&y);
                }
                *c += a.member(&y) as u64;
            }
        }
        counts
    })
    .into_iter()
    .reduce(|mut acc, c| {
        acc.iter_mut().zip(c).for_each(|(s, v)| *s += v);
        acc
    })
    .expect("at least one slab");
    let target = a.theoretical_frequency() * b.theoretical_frequency();
    let total = frag.len() as f64;
    Ok(hits
        .into_iter()
        .enumerate()
        .map(|(k, h)| {
            TestReport::new("mixing", format!("k={k}"))
                .measured(h as f64 / total, target)
                .below(tolerances::MIXING_GAP)
                .samples(frag.len() as u64)
                .fragment(frag.describe())
        })
        .collect())
}

/// `|F(T^{-1} A) - F(A)|`, both measured on the fragment; membership in
/// `T^{-1} A` is `T(x) in A`.
pub fn frequency_preservation(sys: &QuantizedSystem, a: &QuasiperiodicSet, frag: &Fragment) -> Result<TestReport> {
    if a.dim() != sys.dim() || frag.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: a.dim().min(frag.dim()) });
    }
    let (before, after) = map_slabs(frag, |slab| {
        slab.points().fold((0u64, 0u64), |(p, q), x| {
            (p + a.member(&x) as u64, q + a.member(&sys.step(&x)) as u64)
        })
    })
    .into_iter()
    .fold((0, 0), |(p, q), (s, t)| (p + s, q + t));
    let total = frag.len() as f64;
    Ok(TestReport::new("frequency-preservation", "k=1")
        .measured(after as f64 / total, before as f64 / total)
        .below(tolerances::MIXING_GAP)
        .samples(frag.len() as u64)
        .fragment(frag.describe())
        .diagnostic("window_measure", a.theoretical_frequency()))
}
