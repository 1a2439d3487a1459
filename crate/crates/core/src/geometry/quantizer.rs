use nalgebra::DMatrix;
use rand::Rng;

use super::cell::{compensating_offset, Cell};
use super::jordan::{locate, nearest, BoxIndex, HalfOpenBox};
use crate::error::{Error, Result};
use crate::lattice::IntVec;
use crate::tolerances;

/// A map `R: R^n -> Z^n` with `R(u + z) = R(u) + z`, determined by the cell
/// `R^{-1}(0)`.
///
/// Lookup is lower-closed: a fractional coordinate lying less than
/// [`tolerances::SNAP`] below a split plane is treated as lying on it.
#[derive(Clone, Debug)]
pub struct Quantizer {
    cell: Cell,
    boxes: Vec<HalfOpenBox>,
    owner: Vec<usize>,
    index: Option<BoxIndex>,
    planes: Vec<Vec<f64>>,
    cumulative: Vec<f64>,
}

impl Quantizer {
    pub fn new(cell: Cell) -> Quantizer {
        let mut boxes = Vec::new();
        let mut owner = Vec::new();
        for (i, p) in cell.pieces().iter().enumerate() {
            for b in p.set.boxes() {
                boxes.push(b.clone());
                owner.push(i);
            }
        }
        let n = cell.dim();
        let planes = (0..n)
            .map(|k| {
                let mut v: Vec<f64> = boxes.iter().flat_map(|b| [b.lo[k], b.hi[k]]).collect();
                v.extend([0.0, 1.0]);
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        let mut cumulative = Vec::with_capacity(boxes.len());
        let mut acc = 0.0;
        for b in &boxes {
            acc += b.volume();
            cumulative.push(acc);
        }
        let index = BoxIndex::build(&boxes);
        Quantizer { cell, boxes, owner, index, planes, cumulative }
    }

    /// The roundoff quantizer `u -> floor(u + 1/2)`.
    pub fn roundoff(n: usize) -> Quantizer {
        Quantizer::new(Cell::roundoff(n))
    }

    pub fn dim(&self) -> usize {
        self.cell.dim()
    }

    pub fn cell(&self) -> &Cell {
        &self.cell
    }

    fn lookup(&self, frac: &[f64]) -> usize {
        let b = locate(&self.boxes, self.index.as_ref(), frac)
            .or_else(|| nearest(&self.boxes, frac))
            .expect("quantizer cell has at least one box");
        self.owner[b]
    }

    /// `R(u)`.
    pub fn quantize(&self, u: &[f64]) -> IntVec {
        self.quantize_flagged(u).0
    }

    /// `R(u)` together with a flag raised when some coordinate of `u` lies
    /// within [`tolerances::HAZARD`] of a split plane.
    pub fn quantize_flagged(&self, u: &[f64]) -> (IntVec, bool) {
        let n = u.len();
        debug_assert_eq!(n, self.dim());
        let mut floor = [0i64; 8];
        let mut frac = [0f64; 8];
        let (mut fl_vec, mut fr_vec);
        let (fl, fr): (&mut [i64], &mut [f64]) = if n <= 8 {
            (&mut floor[..n], &mut frac[..n])
        } else {
            fl_vec = vec![0i64; n];
            fr_vec = vec![0f64; n];
            (&mut fl_vec[..], &mut fr_vec[..])
        };
        let mut hazard = false;
        for k in 0..n {
            let f0 = u[k].floor();
            let mut f = u[k] - f0;
            let mut i = f0 as i64;
            if !hazard {
                let planes = &self.planes[k];
                let pos = planes.partition_point(|&p| p < f);
                let near = |j: usize| planes.get(j).is_some_and(|&p| (p - f).abs() < tolerances::HAZARD);
                hazard = near(pos) || (pos > 0 && near(pos - 1));
            }
            f += tolerances::SNAP;
            if f >= 1.0 {
                f -= 1.0;
                i += 1;
            }
            fl[k] = i;
            fr[k] = f;
        }
        let piece = &self.cell.pieces()[self.lookup(fr)];
        let z = fl.iter().zip(piece.shift.as_slice()).map(|(a, s)| a - s).collect();
        (IntVec(z), hazard)
    }

    /// Membership in `R^{-1}(0)` under the same convention as [`Self::quantize`].
    pub fn contains(&self, u: &[f64]) -> bool {
        self.quantize(u).0.iter().all(|&c| c == 0)
    }

    /// Draws a point uniformly from the cell.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let total = *self.cumulative.last().expect("nonempty");
        let t = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= t).min(self.boxes.len() - 1);
        let b = &self.boxes[i];
        let shift = &self.cell.pieces()[self.owner[i]].shift;
        (0..self.dim())
            .map(|k| b.lo[k] + rng.random::<f64>() * (b.hi[k] - b.lo[k]) + shift.0[k] as f64)
            .collect()
    }

    /// Quantizer of the compensating system: `u -> R(u + (I + L^{-1}) mu)`.
    pub fn compensating(&self, l_inv: &DMatrix<f64>, mu: &[f64]) -> Result<Quantizer> {
        let n = self.dim();
        if l_inv.nrows() != n || l_inv.ncols() != n || mu.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: mu.len() });
        }
        Ok(Quantizer::new(self.cell.translate(&compensating_offset(l_inv, mu))?))
    }
}
