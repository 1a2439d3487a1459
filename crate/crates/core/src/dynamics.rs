//! Quantized linear systems `T = R o L` on the integer lattice, their
//! supporting and compensating systems, quantization errors, deviations and
//! set-valued preimages.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::Quantizer;
use crate::lattice::IntVec;
use crate::tolerances;

/// A finite subset of `Z^n` in canonical (sorted, deduplicated) form.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiniteLatticeSet(Vec<IntVec>);

impl FiniteLatticeSet {
    pub fn empty() -> Self {
        FiniteLatticeSet(Vec::new())
    }

    pub fn singleton(x: IntVec) -> Self {
        FiniteLatticeSet(vec![x])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, IntVec> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[IntVec] {
        &self.0
    }

    pub fn contains(&self, x: &IntVec) -> bool {
        self.0.binary_search(x).is_ok()
    }

    pub fn translate(&self, z: &IntVec) -> Self {
        FiniteLatticeSet(self.0.iter().map(|x| x.add(z)).collect())
    }
}

impl FromIterator<IntVec> for FiniteLatticeSet {
    fn from_iter<I: IntoIterator<Item = IntVec>>(iter: I) -> Self {
        let mut v: Vec<IntVec> = iter.into_iter().collect();
        v.sort();
        v.dedup();
        FiniteLatticeSet(v)
    }
}

impl From<Vec<IntVec>> for FiniteLatticeSet {
    fn from(v: Vec<IntVec>) -> Self {
        v.into_iter().collect()
    }
}

impl fmt::Display for FiniteLatticeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for FiniteLatticeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The planar rotation matrix by angle `theta`.
pub fn rotation_matrix(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn mat_vec(rows: &[f64], n: usize, v: &[f64]) -> Vec<f64> {
    (0..n).map(|i| (0..n).map(|j| rows[i * n + j] * v[j]).sum()).collect()
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n).flat_map(|i| (0..n).map(move |j| m[(i, j)])).collect()
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// A quantized linear `(R, L)`-system.
#[derive(Clone, Debug)]
pub struct QuantizedSystem {
    n: usize,
    l: DMatrix<f64>,
    l_inv: DMatrix<f64>,
    det: f64,
    r: Quantizer,
    mu: Vec<f64>,
    psi: DMatrix<f64>,
    r_comp: Quantizer,
    l_rows: Vec<f64>,
    l_inv_rows: Vec<f64>,
}

impl QuantizedSystem {
    pub fn new(l: DMatrix<f64>, r: Quantizer) -> Result<Self> {
        if !l.is_square() {
            return Err(Error::InvalidInput(format!("L is {}x{}", l.nrows(), l.ncols())));
        }
        let l_inv = l.clone().try_inverse().ok_or_else(|| Error::Singular("L has no inverse".into()))?;
        Self::with_inverse(l, l_inv, r)
    }

    /// Builds the system from `L` and a known inverse, which is validated.
    pub fn with_inverse(l: DMatrix<f64>, l_inv: DMatrix<f64>, r: Quantizer) -> Result<Self> {
        let n = l.nrows();
        if !l.is_square() || l_inv.shape() != (n, n) {
            return Err(Error::InvalidInput("L and its inverse must be square of equal size".into()));
        }
        if r.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: r.dim() });
        }
        let residual = inf_norm(&(&l * &l_inv - DMatrix::identity(n, n)));
        if !(residual < tolerances::INVERSE_RESIDUAL) {
            return Err(Error::Singular(format!("|L L^-1 - I| = {residual:e}")));
        }
        let det = l.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Singular(format!("det L = {det}")));
        }
        let mu = r.cell().mean();
        let psi = r.cell().covariance()?;
        let r_comp = r.compensating(&l_inv, &mu)?;
        let l_rows = row_major(&l);
        let l_inv_rows = row_major(&l_inv);
        Ok(QuantizedSystem { n, l, l_inv, det, r, mu, psi, r_comp, l_rows, l_inv_rows })
    }

    /// Planar rotation by `theta` with the roundoff quantizer.
    pub fn rotation(theta: f64) -> Self {
        let l = rotation_matrix(theta);
        let l_inv = l.transpose();
        Self::with_inverse(l, l_inv, Quantizer::roundoff(2)).expect("rotations are invertible")
    }

    /// The compensating system `(R~, L^{-1})`.
    pub fn compensating(&self) -> Result<Self> {
        Self::with_inverse(self.l_inv.clone(), self.l.clone(), self.r_comp.clone())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.l_inv
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.r
    }

    pub fn compensating_quantizer(&self) -> &Quantizer {
        &self.r_comp
    }

    pub fn mean(&self) -> &[f64] {
        &self.mu
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.l_rows, self.n, v)
    }

    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.l_inv_rows, self.n, v)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, got })
        }
    }

    /// `T(x) = R(Lx)`.
    pub fn step(&self, x: &IntVec) -> IntVec {
        self.r.quantize(&self.apply(&x.to_f64()))
    }

    /// `T(x)` and whether `Lx` grazed a quantizer split plane.
    pub fn step_flagged(&self, x: &IntVec) -> (IntVec, bool) {
        self.r.quantize_flagged(&self.apply(&x.to_f64()))
    }

    /// `T^k(x)`.
    pub fn iterate(&self, x: &IntVec, k: usize) -> IntVec {
        (0..k).fold(x.clone(), |y, _| self.step(&y))
    }

    /// `T_*(v) = Lv - mu`.
    pub fn supporting_step(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v).iter().zip(&self.mu).map(|(a, m)| a - m).collect()
    }

    /// `T_*^{-1}(v) = L^{-1}(v + mu)`.
    pub fn supporting_inverse(&self, v: &[f64]) -> Vec<f64> {
        let w: Vec<f64> = v.iter().zip(&self.mu).map(|(a, m)| a + m).collect();
        self.apply_inverse(&w)
    }

    /// Quantization error `E(x) = Lx - T(x)`, checked to lie in `R^{-1}(0)`.
    pub fn error(&self, x: &IntVec) -> Result<Vec<f64>> {
        self.check_dim(x.dim())?;
        let lx = self.apply(&x.to_f64());
        let tx = self.r.quantize(&lx);
        let e: Vec<f64> = lx.iter().zip(tx.as_slice()).map(|(a, &b)| a - b as f64).collect();
        if !self.r.contains(&e) {
            return Err(Error::Consistency(format!("error {e:?} at {x} is outside the cell")));
        }
        Ok(e)
    }

    /// `T~(x) = R~(L^{-1} x)`.
    pub fn compensating_step(&self, x: &IntVec) -> IntVec {
        self.r_comp.quantize(&self.apply_inverse(&x.to_f64()))
    }

    /// Error of the compensating system, `E~(x) = L^{-1} x - T~(x)`.
    pub fn compensating_error(&self, x: &IntVec) -> Vec<f64> {
        let v = self.apply_inverse(&x.to_f64());
        let t = self.r_comp.quantize(&v);
        v.iter().zip(t.as_slice()).map(|(a, &b)| a - b as f64).collect()
    }

    /// Lattice points of `offset + L^{-1}(A + R^{-1}(0))`, i.e. all `y` with
    /// `R(L(y - offset)) in A`.
    ///
    /// Candidates are the integer hull of the transformed corners of each
    /// `a + bbox(R^{-1}(0))`, inflated by one.
    pub fn pullback(&self, offset: &[f64], a: &FiniteLatticeSet) -> Result<FiniteLatticeSet> {
        self.check_dim(offset.len())?;
        let n = self.n;
        let (lo, hi) = self.r.cell().bounding_box();
        let mut hulls = Vec::with_capacity(a.len());
        let mut candidates: u128 = 0;
        for s in a.iter() {
            self.check_dim(s.dim())?;
            let mut min = vec![f64::INFINITY; n];
            let mut max = vec![f64::NEG_INFINITY; n];
            for mask in 0..1u32 << n {
                let corner: Vec<f64> = (0..n)
                    .map(|k| s.0[k] as f64 + if mask >> k & 1 == 1 { hi[k] } else { lo[k] })
                    .collect();
                let p = self.apply_inverse(&corner);
                for k in 0..n {
                    min[k] = min[k].min(p[k] + offset[k]);
                    max[k] = max[k].max(p[k] + offset[k]);
                }
            }
            let lo_i: Vec<i64> = min.iter().map(|v| v.floor() as i64 - 1).collect();
            let hi_i: Vec<i64> = max.iter().map(|v| v.ceil() as i64 + 1).collect();
            let count = lo_i.iter().zip(&hi_i).map(|(l, h)| (h - l + 1) as u128).product::<u128>();
            candidates += count;
            if candidates > tolerances::PREIMAGE_CANDIDATES as u128 {
                return Err(Error::EnumerationGuard {
                    count: candidates,
                    limit: tolerances::PREIMAGE_CANDIDATES,
                });
            }
            hulls.push((lo_i, hi_i));
        }
        let mut out = BTreeSet::new();
        let mut y = vec![0f64; n];
        for (lo_i, hi_i) in hulls {
            let mut cur = lo_i.clone();
            'scan: loop {
                for k in 0..n {
                    y[k] = cur[k] as f64 - offset[k];
                }
                if a.contains(&self.r.quantize(&self.apply(&y))) {
                    out.insert(IntVec::from(cur.as_slice()));
                }
                let mut k = n;
                loop {
                    if k == 0 {
                        break 'scan;
                    }
                    k -= 1;
                    cur[k] += 1;
                    if cur[k] <= hi_i[k] {
                        break;
                    }
                    cur[k] = lo_i[k];
                }
            }
        }
        Ok(FiniteLatticeSet(out.into_iter().collect()))
    }

    /// `T^{-1}(x)`.
    pub fn preimage(&self, x: &IntVec) -> Result<FiniteLatticeSet> {
        self.pullback(&vec![0.0; self.n], &FiniteLatticeSet::singleton(x.clone()))
    }

    /// `T^{-1}(A)`.
    pub fn preimage_of_set(&self, a: &FiniteLatticeSet) -> Result<FiniteLatticeSet> {
        if a.is_empty() {
            return Ok(FiniteLatticeSet::empty());
        }
        self.pullback(&vec![0.0; self.n], a)
    }

    /// Basin levels `T^{-1}(x), ..., T^{-depth}(x)`.
    pub fn basin(&self, x: &IntVec, depth: usize) -> Result<Vec<FiniteLatticeSet>> {
        let mut out = Vec::with_capacity(depth);
        let mut level = FiniteLatticeSet::singleton(x.clone());
        for _ in 0..depth {
            level = self.preimage_of_set(&level)?;
            out.push(level.clone());
        }
        Ok(out)
    }

    /// Preimage cardinalities `nu_1(x), ..., nu_depth(x)`.
    pub fn cardinalities(&self, x: &IntVec, depth: usize) -> Result<Vec<usize>> {
        Ok(self.basin(x, depth)?.iter().map(FiniteLatticeSet::len).collect())
    }

    /// Offsets `Sigma_0(x), ..., Sigma_depth(x)` computed by the recurrence
    /// `Sigma_k = Z^n cap (E~_k + L^{-1}(Sigma_{k-1} + R^{-1}(0)))`, and
    /// checked against `T^{-k}(x) - T~^k(x)`.
    pub fn sigma(&self, x: &IntVec, depth: usize) -> Result<Vec<FiniteLatticeSet>> {
        self.check_dim(x.dim())?;
        let mut out = Vec::with_capacity(depth + 1);
        out.push(FiniteLatticeSet::singleton(IntVec::zeros(self.n)));
        let mut comp = x.clone();
        let mut level = FiniteLatticeSet::singleton(x.clone());
        for k in 1..=depth {
            let e = self.compensating_error(&comp);
            comp = self.compensating_step(&comp);
            let prev = out.last().expect("nonempty");
            let next = if prev.is_empty() { FiniteLatticeSet::empty() } else { self.pullback(&e, prev)? };
            level = self.preimage_of_set(&level)?;
            let direct = level.translate(&comp.neg());
            if direct != next {
                return Err(Error::Consistency(format!(
                    "Sigma_{k}({x}): recurrence {next} but direct difference {direct}"
                )));
            }
            out.push(next);
        }
        Ok(out)
    }

    /// Iterates `x` for `steps` steps, recording errors and deviations.
    pub fn trajectory(&self, x: &IntVec, steps: usize) -> Result<TrajectoryRecord> {
        self.check_dim(x.dim())?;
        if steps == 0 {
            return Err(Error::InvalidInput("trajectory needs at least one step".into()));
        }
        let n = self.n;
        let mut states = vec![x.clone()];
        let mut errors = Vec::with_capacity(steps);
        let mut delta = vec![vec![0.0; n]];
        let mut xi = vec![vec![0.0; n]];
        let mut hazards = 0;
        let mut inv_power = DMatrix::<f64>::identity(n, n);
        let mut supporting = x.to_f64();
        for k in 1..=steps {
            let prev = states.last().expect("nonempty");
            let lx = self.apply(&prev.to_f64());
            let (next, hazard) = self.r.quantize_flagged(&lx);
            hazards += hazard as usize;
            let e: Vec<f64> = lx.iter().zip(next.as_slice()).map(|(a, &b)| a - b as f64).collect();
            if !self.r.contains(&e) {
                return Err(Error::Consistency(format!("E_{k} = {e:?} is outside the cell")));
            }
            let drift: Vec<f64> = e.iter().zip(&self.mu).map(|(a, m)| a - m).collect();
            let d_prev = delta.last().expect("nonempty");
            let d: Vec<f64> = self.apply(d_prev).iter().zip(&drift).map(|(a, b)| a + b).collect();
            inv_power = &inv_power * &self.l_inv;
            let xi_prev = xi.last().expect("nonempty");
            let xi_k: Vec<f64> = (0..n)
                .map(|i| xi_prev[i] + (0..n).map(|j| inv_power[(i, j)] * drift[j]).sum::<f64>())
                .collect();
            supporting = self.supporting_step(&supporting);
            let direct: Vec<f64> = supporting.iter().zip(next.as_slice()).map(|(s, &t)| s - t as f64).collect();
            let gap = d.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = d.iter().map(|v| v.abs()).fold(1.0, f64::max);
            if gap > tolerances::RECURRENCE_RELATIVE * scale {
                return Err(Error::Consistency(format!(
                    "deviation recurrence breaks at step {k}: gap {gap:e}"
                )));
            }
            states.push(next);
            errors.push(e);
            delta.push(d);
            xi.push(xi_k);
        }
        Ok(TrajectoryRecord { x0: x.clone(), states, errors, delta, xi, hazards })
    }

    /// Light-weight deviation iterator without history.
    pub fn walker(&self, x: &IntVec) -> DeviationWalker<'_> {
        DeviationWalker { sys: self, state: x.clone(), delta: vec![0.0; self.n], steps: 0, hazards: 0 }
    }
}

/// States, errors and deviations along one trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub x0: IntVec,
    /// `T^0(x), ..., T^N(x)`.
    pub states: Vec<IntVec>,
    /// `E_1, ..., E_N`.
    pub errors: Vec<Vec<f64>>,
    /// `delta_0, ..., delta_N`.
    pub delta: Vec<Vec<f64>>,
    /// `xi_0, ..., xi_N`.
    pub xi: Vec<Vec<f64>>,
    /// Steps whose `Lx` lay within the hazard band of a split plane.
    pub hazards: usize,
}

/// Iterates `T` while tracking `delta_k = T_*^k x - T^k x` by its recurrence.
pub struct DeviationWalker<'a> {
    sys: &'a QuantizedSystem,
    state: IntVec,
    delta: Vec<f64>,
    steps: usize,
    hazards: usize,
}

impl DeviationWalker<'_> {
    /// Advances one step and returns the new deviation.
    pub fn advance(&mut self) -> &[f64] {
        let lx = self.sys.apply(&self.state.to_f64());
        let (next, hazard) = self.sys.r.quantize_flagged(&lx);
        self.hazards += hazard as usize;
        let ld = self.sys.apply(&self.delta);
        for k in 0..self.sys.n {
            self.delta[k] = ld[k] + (lx[k] - next.0[k] as f64) - self.sys.mu[k];
        }
        self.state = next;
        self.steps += 1;
        &self.delta
    }

    pub fn state(&self) -> &IntVec {
        &self.state
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn hazards(&self) -> usize {
        self.hazards
    }
}
