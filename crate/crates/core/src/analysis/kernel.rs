//! The preimage kernel `Delta(B|A)`, reachability frequencies, hole
//! frequencies of planar rotations and the martingale of preimage counts.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::dynamics::{FiniteLatticeSet, QuantizedSystem};
use crate::error::{Error, Result};
use crate::geometry::JordanSet;
use crate::lattice::{map_slabs, CompensatedSum, Fragment, FrequencyEstimate};
use crate::quasiperiodic::{power_stack, PowerDirection, QuasiperiodicSet};
use crate::tolerances;

use super::report::TestReport;
use super::rng::par_samples;

/// Largest source set accepted by [`kernel_estimate`].
pub const KERNEL_SOURCE_LIMIT: usize = 16;

/// Empirical distribution of `B = Z^n cap (u + L^{-1}(A + R^{-1}(0)))` for
/// `u` uniform on the compensating cell.
#[derive(Clone, Debug)]
pub struct KernelEstimate {
    pub source: FiniteLatticeSet,
    /// Outcome set to (count, probability).
    pub table: BTreeMap<FiniteLatticeSet, (u64, f64)>,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanCardinality {
    pub mean: f64,
    pub std_error: f64,
}

impl KernelEstimate {
    pub fn probability(&self, b: &FiniteLatticeSet) -> f64 {
        self.table.get(b).map_or(0.0, |e| e.1)
    }

    /// Monte Carlo standard error of the estimate of `Delta(B|A)`.
    pub fn std_error(&self, b: &FiniteLatticeSet) -> f64 {
        let p = self.probability(b);
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }

    /// `sum_B Delta(B|A) #B` with its standard error.
    pub fn mean_cardinality(&self) -> MeanCardinality {
        let (mut m1, mut m2) = (CompensatedSum::default(), CompensatedSum::default());
        for (b, &(_, p)) in &self.table {
            let c = b.len() as f64;
            m1.add(p * c);
            m2.add(p * c * c);
        }
        let mean = m1.value();
        let var = (m2.value() - mean * mean).max(0.0);
        MeanCardinality { mean, std_error: (var / self.samples as f64).sqrt() }
    }

    pub fn total_probability(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for &(_, p) in self.table.values() {
            acc.add(p);
        }
        acc.value()
    }
}

pub fn kernel_estimate(
    sys: &QuantizedSystem,
    a: &FiniteLatticeSet,
    samples: usize,
    seed: u64,
) -> Result<KernelEstimate> {
    if a.len() > KERNEL_SOURCE_LIMIT {
        return Err(Error::InvalidInput(format!(
            "kernel source has {} points, limit {KERNEL_SOURCE_LIMIT}",
            a.len()
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be positive".into()));
    }
    let outcomes = par_samples(samples, seed, |rng, _| {
        let u = sys.compensating_quantizer().sample(rng);
        sys.pullback(&u, a)
    });
    let mut counts: BTreeMap<FiniteLatticeSet, u64> = BTreeMap::new();
    for b in outcomes {
        *counts.entry(b?).or_default() += 1;
    }
    let table = counts
        .into_iter()
        .map(|(b, c)| (b, (c, c as f64 / samples as f64)))
        .collect();
    Ok(KernelEstimate { source: a.clone(), table, samples: samples as u64, seed })
}

/// Frequency `(cos theta + sin theta - 1)^2` of lattice points without
/// preimage under the rounded-off planar rotation by `theta`.
pub fn hole_frequency_2d(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::InvalidInput(format!("rotation angle {theta} is outside (0, pi/2)")));
    }
    Ok((theta.cos() + theta.sin() - 1.0).powi(2))
}

/// Fraction of fragment points reachable in `depth` iterates, i.e. with
/// `nu_depth(x) > 0`.
pub fn reachability_frequency(sys: &QuantizedSystem, depth: usize, frag: &Fragment) -> Result<FrequencyEstimate> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be positive".into()));
    }
    if frag.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: frag.dim() });
    }
    let mut hits = 0;
    for part in map_slabs(frag, |slab| -> Result<u64> {
        let mut h = 0;
        for x in slab.points() {
            let levels = sys.basin(&x, depth)?;
            h += !levels[depth - 1].is_empty() as u64;
        }
        Ok(h)
    }) {
        hits += part?;
    }
    Ok(FrequencyEstimate::from_counts(hits, frag.len() as u64, frag.clone()))
}

/// Probability that the kernel-driven chain `Sigma_0 = {0}`,
/// `Sigma_k ~ Delta(. | Sigma_{k-1})` is nonempty after `k` steps, for
/// `k = 1..=depth`.
pub fn reachability_markov(sys: &QuantizedSystem, depth: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if depth == 0 || samples == 0 {
        return Err(Error::InvalidInput("depth and samples must be positive".into()));
    }
    let origin = FiniteLatticeSet::singleton(crate::lattice::IntVec::zeros(sys.dim()));
    let paths = par_samples(samples, seed, |rng, _| -> Result<Vec<bool>> {
        let mut state = origin.clone();
        let mut alive = Vec::with_capacity(depth);
        for _ in 0..depth {
            if !state.is_empty() {
                let u = sys.compensating_quantizer().sample(rng);
                state = sys.pullback(&u, &state)?;
            }
            alive.push(!state.is_empty());
        }
        Ok(alive)
    });
    let mut counts = vec![0u64; depth];
    for p in paths {
        for (c, a) in counts.iter_mut().zip(p?) {
            *c += a as u64;
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / samples as f64).collect())
}

/// Event over the backward power stack of the given depth: the first
/// coordinate of `frac(L^{-depth} x)` lies in `[0, fraction)`.
pub fn backward_event(sys: &QuantizedSystem, depth: usize, fraction: f64) -> Result<QuasiperiodicSet> {
    let stack = power_stack(sys.matrix(), depth, PowerDirection::Backward)?;
    let m = stack.stacked.nrows();
    let mut hi = vec![1.0; m];
    hi[0] = fraction;
    QuasiperiodicSet::new(stack.stacked, JordanSet::boxed(vec![0.0; m], hi)?)
}

/// Compares fragment averages of `|det L|^{N+1} nu_{N+1} 1_A` and
/// `|det L|^N nu_N 1_A` for `A` the whole lattice and for `A = event`.
/// Each report's statistic is the relative gap.
pub fn martingale_check(
    sys: &QuantizedSystem,
    frag: &Fragment,
    depth: usize,
    event: &QuasiperiodicSet,
) -> Result<Vec<TestReport>> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be positive".into()));
    }
    if frag.dim() != sys.dim() || event.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: frag.dim() });
    }
    let det = sys.det().abs();
    // sums of nu_N, nu_{N+1} over the lattice and over the event
    let mut sums = [CompensatedSum::default(); 4];
    let mut hazards = 0u64;
    for part in map_slabs(frag, |slab| -> Result<([CompensatedSum; 4], u64)> {
        let mut s = [CompensatedSum::default(); 4];
        let mut h = 0;
        for x in slab.points() {
            let nu = sys.cardinalities(&x, depth + 1)?;
            let (a, b) = (nu[depth - 1] as f64, nu[depth] as f64);
            s[0].add(a);
            s[1].add(b);
            if event.member(&x) {
                s[2].add(a);
                s[3].add(b);
            }
            h += sys.step_flagged(&x).1 as u64;
        }
        Ok((s, h))
    }) {
        let (s, h) = part?;
        for (acc, v) in sums.iter_mut().zip(s) {
            *acc = acc.merge(v);
        }
        hazards += h;
    }
    let total = frag.len() as f64;
    let scaled = |k: usize, v: f64| det.powi(k as i32) * v / total;
    let mut out = Vec::new();
    for (label, before, after) in [("lattice", 0, 1), ("event", 2, 3)] {
        let now = scaled(depth, sums[before].value());
        let next = scaled(depth + 1, sums[after].value());
        let gap = if now > 0.0 { (next - now).abs() / now } else { f64::INFINITY };
        out.push(
            TestReport::new("martingale", format!("N={depth};A={label}"))
                .measured(next, now)
                .statistic(gap)
                .below(tolerances::MARTINGALE_GAP)
                .samples(frag.len() as u64)
                .fragment(frag.describe())
                .hazards(hazards),
        );
    }
    Ok(out)
}

/// Fragment average of `nu_1`, which should be close to `1/|det L|`.
pub fn mean_preimage_count(sys: &QuantizedSystem, frag: &Fragment) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    for part in map_slabs(frag, |slab| -> Result<CompensatedSum> {
        let mut s = CompensatedSum::default();
        for x in slab.points() {
            s.add(sys.preimage(&x)?.len() as f64);
        }
        Ok(s)
    }) {
        acc = acc.merge(part?);
    }
    Ok(acc.value() / frag.len() as f64)
}
