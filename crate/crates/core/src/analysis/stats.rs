//! Small statistics helpers: chi-square tails, empirical CDFs and
//! Kolmogorov-Smirnov distances.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper tail `P(X > stat)` of the chi-square law with `dof` degrees of freedom.
pub fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    ChiSquared::new(dof).map(|d| d.sf(stat)).unwrap_or(f64::NAN)
}

/// Pearson statistic and p-value of observed counts against equal cell
/// probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    (stat, chi_square_sf(stat, counts.len() as f64 - 1.0))
}

/// `P(|Z| > alpha)` for a standard Gaussian `Z` in `R^{2r}`.
pub fn gaussian_norm_tail(alpha: f64, r: usize) -> f64 {
    let h = alpha * alpha / 2.0;
    let mut term = 1.0;
    let mut sum = 0.0;
    for j in 0..r {
        if j > 0 {
            term *= h / j as f64;
        }
        sum += term;
    }
    (-h).exp() * sum
}

/// Two-sample Kolmogorov-Smirnov distance; both inputs must be sorted.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Empirical CDF of a sorted sample at `t`.
pub fn ecdf(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|&v| v <= t) as f64 / sorted.len() as f64
}

pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Sup-norm distance between the joint empirical CDF of pairs and the
/// product of the marginal empirical CDFs, on a `grid x grid` lattice of
/// marginal quantiles.
pub fn independence_distance(pairs: &[(f64, f64)], grid: usize) -> f64 {
    let n = pairs.len();
    if n == 0 {
        return 0.0;
    }
    let rank = |key: fn(&(f64, f64)) -> f64| {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| key(&pairs[i]).total_cmp(&key(&pairs[j])));
        let mut r = vec![0usize; n];
        for (pos, &i) in order.iter().enumerate() {
            r[i] = pos * grid / n;
        }
        r
    };
    let ra = rank(|p| p.0);
    let rb = rank(|p| p.1);
    let mut joint = vec![0u64; grid * grid];
    for i in 0..n {
        joint[ra[i] * grid + rb[i]] += 1;
    }
    let mut ma = vec![0u64; grid];
    let mut mb = vec![0u64; grid];
    for i in 0..n {
        ma[ra[i]] += 1;
        mb[rb[i]] += 1;
    }
    for a in 0..grid {
        for b in 0..grid {
            let mut c = joint[a * grid + b];
            if a > 0 {
                c += joint[(a - 1) * grid + b];
            }
            if b > 0 {
                c += joint[a * grid + b - 1];
            }
            if a > 0 && b > 0 {
                c -= joint[(a - 1) * grid + b - 1];
            }
            joint[a * grid + b] = c;
        }
    }
    for k in 1..grid {
        ma[k] += ma[k - 1];
        mb[k] += mb[k - 1];
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for a in 0..grid {
        for b in 0..grid {
            let prod = (ma[a] as f64 / nf) * (mb[b] as f64 / nf);
            d = d.max((joint[a * grid + b] as f64 / nf - prod).abs());
        }
    }
    d
}
