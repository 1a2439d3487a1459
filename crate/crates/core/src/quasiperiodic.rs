//! Quasiperiodic sets `{x in Z^n : frac(Lambda x) in G}`, stacks of matrix
//! powers and a bounded search for integer resonances.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::JordanSet;
use crate::lattice::{frequency, Fragment, FrequencyEstimate, IntVec};
use crate::tolerances;

/// Componentwise fractional part in `[0,1)`; values within [`tolerances::SNAP`]
/// of 1 are clamped to 0.
pub fn frac(v: f64) -> f64 {
    let f = v - v.floor();
    if f >= 1.0 - tolerances::SNAP {
        0.0
    } else {
        f
    }
}

/// The set `Q_m(G, Lambda)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiperiodicSet {
    lambda: DMatrix<f64>,
    g: JordanSet,
}

impl QuasiperiodicSet {
    pub fn new(lambda: DMatrix<f64>, g: JordanSet) -> Result<Self> {
        if lambda.nrows() != g.dim() {
            return Err(Error::DimensionMismatch { expected: lambda.nrows(), got: g.dim() });
        }
        if lambda.ncols() == 0 {
            return Err(Error::InvalidInput("Lambda needs at least one column".into()));
        }
        Ok(QuasiperiodicSet { lambda, g })
    }

    /// The whole lattice `Z^n`, as `Q_1([0,1), 0)`.
    pub fn everything(n: usize) -> Self {
        QuasiperiodicSet { lambda: DMatrix::zeros(1, n), g: JordanSet::full(1) }
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn window(&self) -> &JordanSet {
        &self.g
    }

    /// `m`, the number of rows of `Lambda`.
    pub fn rows(&self) -> usize {
        self.lambda.nrows()
    }

    /// `n`, the lattice dimension.
    pub fn dim(&self) -> usize {
        self.lambda.ncols()
    }

    /// `frac(Lambda x)`. Each product is split into its rounded value and
    /// exact rounding error, and only fractional parts are summed.
    pub fn phase(&self, x: &IntVec) -> Vec<f64> {
        (0..self.rows())
            .map(|i| {
                let s: f64 = (0..self.dim())
                    .map(|j| {
                        let (a, b) = (self.lambda[(i, j)], x.0[j] as f64);
                        let p = a * b;
                        (p - p.floor()) + a.mul_add(b, -p)
                    })
                    .sum();
                frac(s)
            })
            .collect()
    }

    pub fn member(&self, x: &IntVec) -> bool {
        debug_assert_eq!(x.dim(), self.dim());
        self.g.contains(&self.phase(x))
    }

    fn same_lambda(&self, other: &Self) -> Result<()> {
        if self.lambda == other.lambda {
            Ok(())
        } else {
            Err(Error::InvalidInput("set operations need a common Lambda; use stack".into()))
        }
    }

    pub fn complement(&self) -> Self {
        QuasiperiodicSet { lambda: self.lambda.clone(), g: self.g.complement() }
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.same_lambda(other)?;
        Ok(QuasiperiodicSet { lambda: self.lambda.clone(), g: self.g.union(&other.g)? })
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.same_lambda(other)?;
        Ok(QuasiperiodicSet { lambda: self.lambda.clone(), g: self.g.intersection(&other.g)? })
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.same_lambda(other)?;
        Ok(QuasiperiodicSet { lambda: self.lambda.clone(), g: self.g.difference(&other.g)? })
    }

    /// Intersection of sets with arbitrary matrices: `Lambda` rows are
    /// concatenated and the windows multiplied.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let (m1, m2, n) = (self.rows(), other.rows(), self.dim());
        let lambda = DMatrix::from_fn(m1 + m2, n, |i, j| {
            if i < m1 {
                self.lambda[(i, j)]
            } else {
                other.lambda[(i - m1, j)]
            }
        });
        Ok(QuasiperiodicSet { lambda, g: self.g.product(&other.g) })
    }

    /// The set `Q - z`, so that `Q.translate(z).member(x) == Q.member(x + z)`.
    /// Its window is `G - frac(Lambda z)` taken modulo 1.
    pub fn translate(&self, z: &IntVec) -> Result<Self> {
        if z.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: z.dim() });
        }
        let shift: Vec<f64> = self.phase(z).iter().map(|p| -p).collect();
        Ok(QuasiperiodicSet { lambda: self.lambda.clone(), g: self.g.translate_mod1(&shift)? })
    }

    /// `mes G`, the frequency of the set when `Lambda` is nonresonant.
    pub fn theoretical_frequency(&self) -> f64 {
        self.g.measure()
    }

    pub fn frequency(&self, frag: &Fragment) -> FrequencyEstimate {
        frequency(|x| self.member(x), frag)
    }
}

/// Which powers of `L` to stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerDirection {
    /// `L, ..., L^N`.
    Forward,
    /// `L^{-N}, ..., L^{-1}`.
    Backward,
    /// `L^{-N}, ..., L^{-1}, L, ..., L^N`.
    Both,
}

/// Vertically stacked powers of a square matrix.
#[derive(Clone, Debug)]
pub struct PowerStack {
    pub base: DMatrix<f64>,
    pub exponents: Vec<i32>,
    pub stacked: DMatrix<f64>,
}

impl PowerStack {
    /// Block of the `i`-th requested power.
    pub fn block(&self, i: usize) -> DMatrix<f64> {
        let n = self.base.nrows();
        self.stacked.rows(i * n, n).into_owned()
    }
}

fn residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    (a * b - DMatrix::<f64>::identity(n, n)).amax()
}

pub fn power_stack(l: &DMatrix<f64>, depth: usize, direction: PowerDirection) -> Result<PowerStack> {
    if !l.is_square() {
        return Err(Error::InvalidInput("L must be square".into()));
    }
    if depth == 0 {
        return Err(Error::InvalidInput("power stack depth must be positive".into()));
    }
    let n = l.nrows();
    let l_inv = l.clone().try_inverse().ok_or_else(|| Error::Singular("L has no inverse".into()))?;
    let mut forward = Vec::with_capacity(depth);
    let mut backward = Vec::with_capacity(depth);
    let (mut p, mut q) = (l.clone(), l_inv.clone());
    for k in 1..=depth {
        let r = residual(&p, &q);
        if !(r < tolerances::POWER_RESIDUAL) {
            return Err(Error::Singular(format!("|L^{k} L^-{k} - I| = {r:e}")));
        }
        forward.push(p.clone());
        backward.push(q.clone());
        p = &p * l;
        q = &q * &l_inv;
    }
    let mut blocks = Vec::new();
    let mut exponents = Vec::new();
    if direction != PowerDirection::Forward {
        for k in (1..=depth).rev() {
            blocks.push(backward[k - 1].clone());
            exponents.push(-(k as i32));
        }
    }
    if direction != PowerDirection::Backward {
        for k in 1..=depth {
            blocks.push(forward[k - 1].clone());
            exponents.push(k as i32);
        }
    }
    let stacked = DMatrix::from_fn(blocks.len() * n, n, |i, j| blocks[i / n][(i % n, j)]);
    Ok(PowerStack { base: l.clone(), exponents, stacked })
}

fn is_resonance(lambda: &DMatrix<f64>, u: &[i64], tol: f64) -> bool {
    (0..lambda.ncols()).all(|j| {
        let v: f64 = (0..lambda.nrows()).map(|i| lambda[(i, j)] * u[i] as f64).sum();
        (v - v.round()).abs() < tol
    })
}

/// Values `0, 1, -1, 2, -2, ...` up to `s` in absolute value.
fn by_magnitude(s: i64) -> impl Iterator<Item = i64> + Clone {
    std::iter::once(0).chain((1..=s).flat_map(|k| [k, -k]))
}

fn shell_search(lambda: &DMatrix<f64>, s: i64, tol: f64) -> Option<Vec<i64>> {
    let m = lambda.nrows();
    let values: Vec<i64> = by_magnitude(s).collect();
    let mut idx = vec![0usize; m];
    loop {
        let u: Vec<i64> = idx.iter().map(|&i| values[i]).collect();
        let on_shell = u.iter().any(|c| c.abs() == s);
        let canonical = u.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0);
        if on_shell && canonical && is_resonance(lambda, &u, tol) {
            return Some(u);
        }
        // the first coordinate varies fastest
        let mut k = 0;
        loop {
            if k == m {
                return None;
            }
            idx[k] += 1;
            if idx[k] < values.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Searches for a nonzero `u` with `|u|_inf <= bound` and `Lambda^T u`
/// within `tol` of `Z^n`.
///
/// Exhaustive by increasing `|u|_inf` when `Lambda` has at most four rows,
/// randomized with a fixed seed above that. `None` is heuristic evidence of
/// nonresonance at this bound only.
pub fn resonance_search(lambda: &DMatrix<f64>, bound: i64, tol: f64) -> Option<Vec<i64>> {
    resonance_search_with(lambda, bound, tol, tolerances::RANDOM_RESONANCE_DRAWS, 0)
}

pub fn resonance_search_with(
    lambda: &DMatrix<f64>,
    bound: i64,
    tol: f64,
    draws: u64,
    seed: u64,
) -> Option<Vec<i64>> {
    let m = lambda.nrows();
    if m <= tolerances::EXHAUSTIVE_RESONANCE_ROWS {
        return (1..=bound).find_map(|s| shell_search(lambda, s, tol));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Vec<i64>> = None;
    for _ in 0..draws {
        let mut u: Vec<i64> = (0..m).map(|_| rng.random_range(-bound..=bound)).collect();
        let Some(&lead) = u.iter().find(|&&c| c != 0) else { continue };
        if lead < 0 {
            u.iter_mut().for_each(|c| *c = -*c);
        }
        let norm = |v: &[i64]| v.iter().map(|c| c.abs()).max().unwrap_or(0);
        if is_resonance(lambda, &u, tol) && best.as_ref().is_none_or(|b| norm(&u) < norm(b)) {
            best = Some(u);
        }
    }
    best
}
