//! Central limit behaviour of deviations `delta_N = T_*^N x - T^N x` for
//! neutral systems, and the law of their running maximum.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::QuantizedSystem;
use crate::error::{Error, Result};
use crate::lattice::{map_slabs, Fragment};
use crate::tolerances;

use super::neutral::NeutralSpec;
use super::report::TestReport;
use super::rng::par_samples;
use super::stats::{gaussian_norm_tail, independence_distance, ks_distance, sorted};

fn check(sys: &QuantizedSystem, spec: &NeutralSpec, frag: &Fragment, steps: usize) -> Result<()> {
    if spec.dim() != sys.dim() || frag.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: spec.dim().min(frag.dim()) });
    }
    if (spec.l.clone() - sys.matrix()).amax() > tolerances::INVERSE_RESIDUAL {
        return Err(Error::InvalidInput("neutral spec and system have different matrices".into()));
    }
    if steps == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    Ok(())
}

/// `|Phi^{-1/2} delta_N| / sqrt(N)` for every start in the fragment, in
/// fragment order, and the number of hazard-flagged steps.
pub fn clt_statistics(
    sys: &QuantizedSystem,
    spec: &NeutralSpec,
    frag: &Fragment,
    steps: usize,
) -> Result<(Vec<f64>, u64)> {
    check(sys, spec, frag, steps)?;
    let n = sys.dim();
    let scale = 1.0 / (steps as f64).sqrt();
    let parts = map_slabs(frag, |slab| {
        let mut out = Vec::with_capacity(slab.len());
        let mut hazards = 0;
        for x in slab.points() {
            let mut w = sys.walker(&x);
            for _ in 0..steps {
                w.advance();
            }
            hazards += w.hazards() as u64;
            let d = w.delta();
            let norm2: f64 = (0..n)
                .map(|i| (0..n).map(|j| spec.phi_root_inv[(i, j)] * d[j]).sum::<f64>().powi(2))
                .sum();
            out.push(norm2.sqrt() * scale);
        }
        (out, hazards)
    });
    let hazards = parts.iter().map(|p| p.1).sum();
    Ok((parts.into_iter().flat_map(|p| p.0).collect(), hazards))
}

/// Tail frequencies of the normalized deviation against the Gaussian tail
/// `P(|Z| > alpha)`, `Z` standard in `R^n`.
pub fn clt_experiment(
    sys: &QuantizedSystem,
    spec: &NeutralSpec,
    frag: &Fragment,
    steps: usize,
    alphas: &[f64],
) -> Result<Vec<TestReport>> {
    let (stats, hazards) = clt_statistics(sys, spec, frag, steps)?;
    let total = stats.len() as f64;
    Ok(alphas
        .iter()
        .map(|&alpha| {
            let tail = stats.iter().filter(|&&s| s > alpha).count() as f64 / total;
            TestReport::new("clt-tail", format!("N={steps};alpha={alpha}"))
                .measured(tail, gaussian_norm_tail(alpha, spec.r))
                .below(tolerances::CLT_TAIL_GAP)
                .samples(stats.len() as u64)
                .fragment(frag.describe())
                .hazards(hazards)
        })
        .collect())
}

/// Sorted samples of `max_{t <= 1} |W_t|` for a planar standard Wiener
/// process, approximated by Gaussian random walks.
pub fn wiener_max_modulus(paths: usize, steps: usize, seed: u64) -> Vec<f64> {
    let sd = (1.0 / steps as f64).sqrt();
    sorted(par_samples(paths, seed, |rng, _| {
        let (mut x, mut y, mut m) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..steps {
            x += sd * rng.sample::<f64, _>(StandardNormal);
            y += sd * rng.sample::<f64, _>(StandardNormal);
            m = m.max(x * x + y * y);
        }
        m.sqrt()
    }))
}

/// Per-block maximal deviations and their comparison with the Wiener law.
#[derive(Clone, Debug)]
pub struct MaxDeviationOutcome {
    /// `blocks[j][s]` is `sqrt(2/N) max_k |V_j delta_k| / sigma_j` for start `s`.
    pub blocks: Vec<Vec<f64>>,
    pub reports: Vec<TestReport>,
}

/// For each start, `sqrt(2/N) max_{1<=k<=N} |V_j delta_k| / sigma_j` per
/// block `j`, compared by Kolmogorov-Smirnov distance with `oracle` (a
/// sorted Wiener max-modulus sample). With two or more blocks, the first two
/// are also checked for independence.
pub fn max_deviation_experiment(
    sys: &QuantizedSystem,
    spec: &NeutralSpec,
    frag: &Fragment,
    steps: usize,
    oracle: &[f64],
    oracle_seed: u64,
) -> Result<MaxDeviationOutcome> {
    check(sys, spec, frag, steps)?;
    if oracle.is_empty() {
        return Err(Error::InvalidInput("empty oracle sample".into()));
    }
    let r = spec.r;
    let n = sys.dim();
    let scale = (2.0 / steps as f64).sqrt();
    let parts = map_slabs(frag, |slab| {
        let mut out = Vec::with_capacity(slab.len());
        let mut hazards = 0;
        for x in slab.points() {
            let mut w = sys.walker(&x);
            let mut best = vec![0f64; r];
            for _ in 0..steps {
                let d = w.advance();
                for (j, b) in best.iter_mut().enumerate() {
                    let norm2: f64 = (2 * j..2 * j + 2)
                        .map(|i| (0..n).map(|c| spec.v[(i, c)] * d[c]).sum::<f64>().powi(2))
                        .sum();
                    *b = b.max(norm2);
                }
            }
            hazards += w.hazards() as u64;
            out.push(best.iter().zip(&spec.sigma).map(|(m, s)| scale * m.sqrt() / s).collect::<Vec<f64>>());
        }
        (out, hazards)
    });
    let hazards: u64 = parts.iter().map(|p| p.1).sum();
    let rows: Vec<Vec<f64>> = parts.into_iter().flat_map(|p| p.0).collect();
    let blocks: Vec<Vec<f64>> = (0..r).map(|j| rows.iter().map(|v| v[j]).collect()).collect();
    let mut reports = Vec::new();
    for (j, b) in blocks.iter().enumerate() {
        let ks = ks_distance(&sorted(b.clone()), oracle);
        reports.push(
            TestReport::new("max-deviation", format!("N={steps};block={}", j + 1))
                .statistic(ks)
                .below(tolerances::MAX_DEVIATION_KS)
                .samples(b.len() as u64)
                .fragment(frag.describe())
                .seed(oracle_seed)
                .hazards(hazards)
                .diagnostic("oracle_paths", oracle.len() as f64),
        );
    }
    if r >= 2 {
        let pairs: Vec<(f64, f64)> = rows.iter().map(|v| (v[0], v[1])).collect();
        reports.push(
            TestReport::new("block-independence", format!("N={steps};blocks=1,2"))
                .statistic(independence_distance(&pairs, 50))
                .below(tolerances::BLOCK_INDEPENDENCE_KS)
                .samples(pairs.len() as u64)
                .fragment(frag.describe())
                .hazards(hazards),
        );
    }
    Ok(MaxDeviationOutcome { blocks, reports })
}
