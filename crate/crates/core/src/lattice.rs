//! Integer lattice points, rectangular fragments and averages over them.
//!
//! A [`Fragment`] is the discrete parallelepiped `{x : a_k <= x_k < a_k + l_k}`.
//! Every scan over a fragment visits points in lexicographic order; parallel
//! scans split the first axis into contiguous slabs and merge partial results
//! in slab order, so counts are exact and floating sums are reproducible
//! regardless of the number of worker threads.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::tolerances;

/// A point of the integer lattice `Z^n`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct IntVec(pub SmallVec<[i64; 4]>);

impl IntVec {
    pub fn zeros(n: usize) -> Self {
        IntVec(SmallVec::from_elem(0, n))
    }

    /// The `k`-th standard basis vector of `Z^n`.
    pub fn unit(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[k] = 1;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }

    pub fn add(&self, other: &IntVec) -> IntVec {
        IntVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &IntVec) -> IntVec {
        IntVec(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> IntVec {
        IntVec(self.0.iter().map(|a| -a).collect())
    }
}

impl From<Vec<i64>> for IntVec {
    fn from(v: Vec<i64>) -> Self {
        IntVec(SmallVec::from_vec(v))
    }
}

impl From<&[i64]> for IntVec {
    fn from(v: &[i64]) -> Self {
        IntVec(SmallVec::from_slice(v))
    }
}

impl<const N: usize> From<[i64; N]> for IntVec {
    fn from(v: [i64; N]) -> Self {
        IntVec(SmallVec::from_slice(&v))
    }
}

impl fmt::Debug for IntVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for IntVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Discrete parallelepiped with corner `a` and edge lengths `ell`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    a: Vec<i64>,
    ell: Vec<u64>,
}

impl Fragment {
    pub fn new(a: Vec<i64>, ell: Vec<u64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidInput("fragment dimension must be at least 1".into()));
        }
        if a.len() != ell.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), got: ell.len() });
        }
        if let Some(k) = ell.iter().position(|&l| l == 0) {
            return Err(Error::InvalidInput(format!("fragment edge {k} is zero")));
        }
        let frag = Fragment { a, ell };
        frag.checked_len()?;
        Ok(frag)
    }

    /// Cube of edge `edge` in `n` dimensions, centered on the origin
    /// (for even edges the extra row lies on the negative side).
    pub fn centered(n: usize, edge: u64) -> Result<Self> {
        Fragment::new(vec![-((edge / 2) as i64); n], vec![edge; n])
    }

    /// Cube `{lo, ..., hi}^n`.
    pub fn cube(n: usize, lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidInput(format!("empty range {lo}..={hi}")));
        }
        Fragment::new(vec![lo; n], vec![(hi - lo + 1) as u64; n])
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn corner(&self) -> &[i64] {
        &self.a
    }

    pub fn edges(&self) -> &[u64] {
        &self.ell
    }

    pub fn min_edge(&self) -> u64 {
        self.ell.iter().copied().min().unwrap_or(0)
    }

    fn checked_len(&self) -> Result<usize> {
        self.ell
            .iter()
            .try_fold(1usize, |acc, &l| acc.checked_mul(usize::try_from(l).ok()?))
            .ok_or_else(|| Error::CountOverflow { edges: self.ell.clone() })
    }

    /// Number of lattice points; validated on construction.
    pub fn len(&self) -> usize {
        self.checked_len().expect("validated on construction")
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: &IntVec) -> bool {
        x.dim() == self.dim()
            && x.0.iter().zip(&self.a).zip(&self.ell).all(|((&xi, &ai), &li)| {
                xi >= ai && ((xi - ai) as u64) < li
            })
    }

    pub fn translate(&self, z: &IntVec) -> Fragment {
        Fragment {
            a: self.a.iter().zip(z.as_slice()).map(|(a, z)| a + z).collect(),
            ell: self.ell.clone(),
        }
    }

    /// Lattice points in lexicographic order.
    pub fn points(&self) -> FragmentPoints {
        FragmentPoints { frag: self.clone(), next: Some(IntVec::from(self.a.clone())) }
    }

    /// Splits the first axis into at most `parts` contiguous slabs, in order.
    pub fn slabs(&self, parts: usize) -> Vec<Fragment> {
        let first = self.ell[0];
        let parts = (parts.max(1) as u64).min(first);
        let base = first / parts;
        let extra = first % parts;
        let mut out = Vec::with_capacity(parts as usize);
        let mut start = self.a[0];
        for p in 0..parts {
            let len = base + u64::from(p < extra);
            let mut a = self.a.clone();
            a[0] = start;
            let mut ell = self.ell.clone();
            ell[0] = len;
            out.push(Fragment { a, ell });
            start += len as i64;
        }
        out
    }

    fn parallel_slabs(&self) -> Vec<Fragment> {
        self.slabs(4 * rayon::current_num_threads().max(1) * 8)
    }

    /// Compact description `a=(..);l=(..)` used in reports.
    pub fn describe(&self) -> String {
        let join = |v: Vec<String>| v.join(" ");
        format!(
            "corner={};edges={}",
            join(self.a.iter().map(|c| c.to_string()).collect()),
            join(self.ell.iter().map(|c| c.to_string()).collect())
        )
    }
}

/// Iterator over the points of a [`Fragment`].
pub struct FragmentPoints {
    frag: Fragment,
    next: Option<IntVec>,
}

impl Iterator for FragmentPoints {
    type Item = IntVec;

    fn next(&mut self) -> Option<IntVec> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let n = succ.dim();
        let mut k = n;
        loop {
            if k == 0 {
                self.next = None;
                break;
            }
            k -= 1;
            succ.0[k] += 1;
            if ((succ.0[k] - self.frag.a[k]) as u64) < self.frag.ell[k] {
                self.next = Some(succ);
                break;
            }
            succ.0[k] = self.frag.a[k];
        }
        Some(current)
    }
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(mut self, other: CompensatedSum) -> CompensatedSum {
        self.add(other.sum);
        self.add(other.comp);
        self
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Applies `f` to contiguous slabs of the fragment in parallel and returns
/// the results in slab order.
pub fn map_slabs<T, F>(frag: &Fragment, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&Fragment) -> T + Sync,
{
    frag.parallel_slabs().par_iter().map(&f).collect()
}

/// Average `(1/#P) sum_{x in P} f(x)` with compensated, slab-ordered summation.
pub fn average<F>(f: F, frag: &Fragment) -> f64
where
    F: Fn(&IntVec) -> f64 + Sync,
{
    let partials: Vec<CompensatedSum> = frag
        .parallel_slabs()
        .par_iter()
        .map(|slab| {
            let mut acc = CompensatedSum::default();
            for x in slab.points() {
                acc.add(f(&x));
            }
            acc
        })
        .collect();
    let total = partials.into_iter().fold(CompensatedSum::default(), CompensatedSum::merge);
    total.value() / frag.len() as f64
}

/// Relative fraction of fragment points satisfying a predicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub value: f64,
    pub hits: u64,
    pub total: u64,
    pub fragment: Fragment,
}

impl FrequencyEstimate {
    pub fn from_counts(hits: u64, total: u64, fragment: Fragment) -> Self {
        debug_assert!(hits <= total);
        FrequencyEstimate { value: hits as f64 / total as f64, hits, total, fragment }
    }
}

/// Counts fragment points satisfying `pred`, in parallel.
pub fn count<P>(pred: P, frag: &Fragment) -> u64
where
    P: Fn(&IntVec) -> bool + Sync,
{
    frag.parallel_slabs()
        .par_iter()
        .map(|slab| slab.points().filter(|x| pred(x)).count() as u64)
        .sum()
}

pub fn frequency<P>(pred: P, frag: &Fragment) -> FrequencyEstimate
where
    P: Fn(&IntVec) -> bool + Sync,
{
    let hits = count(pred, frag);
    FrequencyEstimate::from_counts(hits, frag.len() as u64, frag.clone())
}

/// Frequency estimates over a sequence of growing fragments.
#[derive(Clone, Debug)]
pub struct FrequencySweep {
    pub estimates: Vec<FrequencyEstimate>,
    /// Largest pairwise difference between estimates.
    pub spread: f64,
}

impl FrequencySweep {
    /// Spread of the last `k` estimates.
    pub fn tail_spread(&self, k: usize) -> f64 {
        let start = self.estimates.len().saturating_sub(k);
        spread(&self.estimates[start..])
    }
}

fn spread(estimates: &[FrequencyEstimate]) -> f64 {
    let (lo, hi) = estimates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.value), hi.max(e.value)));
    if estimates.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Evaluates `pred` on every fragment. Fragments are expected to have
/// nondecreasing minimal edge; the spread is a convergence diagnostic only.
pub fn frequency_sweep<P>(pred: P, fragments: &[Fragment]) -> FrequencySweep
where
    P: Fn(&IntVec) -> bool + Sync,
{
    let estimates: Vec<_> = fragments.iter().map(|f| frequency(&pred, f)).collect();
    let spread = spread(&estimates);
    FrequencySweep { estimates, spread }
}

/// Centered cubes with edges `n0`, `3 n0` and `10 n0`.
pub fn standard_sweep(n: usize, n0: u64) -> Result<Vec<Fragment>> {
    [1, 3, 10].iter().map(|m| Fragment::centered(n, n0 * m)).collect()
}

fn nearest_integer(v: f64) -> Option<f64> {
    let r = v.round();
    ((v - r).abs() < tolerances::INTEGRALITY).then_some(r)
}

/// Normalized Dirichlet kernel `sum_{j<u} e^{2 pi i v j} / u` without its phase.
fn dirichlet_ratio(u: u64, v: f64) -> f64 {
    match nearest_integer(v) {
        Some(r) => {
            if ((u - 1) as i128 * r as i128) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
        None => (PI * u as f64 * v).sin() / (u as f64 * (PI * v).sin()),
    }
}

/// Average of `x -> exp(2 pi i omega^T x)` over a fragment, in closed form.
pub fn trig_average(omega: &[f64], frag: &Fragment) -> Result<Complex64> {
    if omega.len() != frag.dim() {
        return Err(Error::DimensionMismatch { expected: frag.dim(), got: omega.len() });
    }
    let mut phase = 0.0;
    let mut magnitude = 1.0;
    for ((&w, &a), &l) in omega.iter().zip(frag.corner()).zip(frag.edges()) {
        // reduce each term mod 1 before exponentiating
        let centre = (w * a as f64).rem_euclid(1.0) + (w * (l - 1) as f64 / 2.0).rem_euclid(1.0);
        phase += centre;
        magnitude *= dirichlet_ratio(l, w);
    }
    Ok(Complex64::from_polar(magnitude, 2.0 * PI * phase.rem_euclid(1.0)))
}

/// Uniform bound on `|trig_average(omega, P)|` over fragments with all edges
/// at least `n`. Returns `f64::INFINITY` when every entry of `omega` is an
/// integer (the average is then identically 1 and no decay bound exists).
pub fn weyl_bound(omega: &[f64], n: u64) -> f64 {
    let non_integer: Vec<f64> =
        omega.iter().copied().filter(|&w| nearest_integer(w).is_none()).collect();
    if non_integer.is_empty() {
        return f64::INFINITY;
    }
    let k = non_integer.len() as i32;
    let prod: f64 = non_integer.iter().map(|&w| 1.0 / (PI * w).sin().abs()).product();
    prod / (n as f64).powi(k)
}
