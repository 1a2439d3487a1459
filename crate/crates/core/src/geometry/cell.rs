//! Cells: regions whose integer translates tile space, stored as pieces of
//! the unit cube together with the integer shift that carries each piece to
//! its place in the cell.
//!
//! Region coordinates are kept as an integer part plus a fractional part in
//! `[0,1)`. Two pieces that share a split plane therefore map it to the same
//! floating value under translation, so translated cells have no slivers of
//! overlap or gap at re-split planes.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::jordan::{HalfOpenBox, JordanSet};
use crate::error::{Error, Result};
use crate::lattice::{CompensatedSum, IntVec};
use crate::tolerances;

/// A real coordinate split as `int + frac`, `frac` in `[0,1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Coord {
    int: i64,
    frac: f64,
}

impl Coord {
    pub(crate) fn split(v: f64) -> Coord {
        let fl = v.floor();
        let f = v - fl;
        if f >= 1.0 {
            Coord { int: fl as i64 + 1, frac: 0.0 }
        } else {
            Coord { int: fl as i64, frac: f }
        }
    }

    /// Coordinate `shift + c` for a piece coordinate `c` in `[0,1]`.
    pub(crate) fn from_piece(shift: i64, c: f64) -> Coord {
        if c >= 1.0 {
            Coord { int: shift + 1, frac: 0.0 }
        } else {
            Coord { int: shift, frac: c }
        }
    }

    pub(crate) fn offset(self, by: Coord) -> Coord {
        let s = self.frac + by.frac;
        if s >= 1.0 {
            Coord { int: self.int + by.int + 1, frac: ((self.frac - 1.0) + by.frac).max(0.0) }
        } else {
            Coord { int: self.int + by.int, frac: s }
        }
    }

    fn negate(self) -> Coord {
        if self.frac == 0.0 {
            Coord { int: -self.int, frac: 0.0 }
        } else {
            Coord { int: -self.int - 1, frac: 1.0 - self.frac }
        }
    }
}

/// Splits the span `[lo, hi)` at integers into `(int, frac_lo, frac_hi)` segments.
pub(crate) fn split_span(lo: Coord, hi: Coord) -> Vec<(i64, f64, f64)> {
    let (ih, fh) = if hi.frac == 0.0 { (hi.int - 1, 1.0) } else { (hi.int, hi.frac) };
    let mut out = Vec::with_capacity(2);
    if ih < lo.int {
        return out;
    }
    if ih == lo.int {
        if lo.frac < fh {
            out.push((lo.int, lo.frac, fh));
        }
        return out;
    }
    if lo.frac < 1.0 {
        out.push((lo.int, lo.frac, 1.0));
    }
    for k in lo.int + 1..ih {
        out.push((k, 0.0, 1.0));
    }
    out.push((ih, 0.0, fh));
    out
}

/// Calls `f(ints, lo, hi)` for every combination of per-axis segments.
pub(crate) fn for_each_product<F>(axes: &[Vec<(i64, f64, f64)>], mut f: F)
where
    F: FnMut(&[i64], Vec<f64>, Vec<f64>),
{
    if axes.iter().any(|a| a.is_empty()) {
        return;
    }
    let m = axes.len();
    let mut idx = vec![0usize; m];
    loop {
        let ints: Vec<i64> = (0..m).map(|k| axes[k][idx[k]].0).collect();
        let lo = (0..m).map(|k| axes[k][idx[k]].1).collect();
        let hi = (0..m).map(|k| axes[k][idx[k]].2).collect();
        f(&ints, lo, hi);
        let mut k = m;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// One piece of a cell: a subset of `[0,1)^n` and its integer shift.
#[derive(Clone, Debug, PartialEq)]
pub struct CellPiece {
    pub set: JordanSet,
    pub shift: IntVec,
}

/// A cell `V = union (piece + shift)` whose pieces partition `[0,1)^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    dim: usize,
    pieces: Vec<CellPiece>,
}

/// Quasi-random points of `[0,1)^n` from the additive recurrence with the
/// generalized golden ratio.
fn kronecker_points(n: usize, count: usize) -> impl Iterator<Item = Vec<f64>> {
    // g is the positive root of x^(n+1) = x + 1
    let mut g = 2.0_f64;
    for _ in 0..64 {
        g = (1.0 + g).powf(1.0 / (n as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=n).map(|k| (1.0 / g.powi(k as i32)).fract()).collect();
    (0..count).map(move |i| {
        alpha.iter().map(|a| (0.5 + a * (i as f64 + 1.0)).fract()).collect()
    })
}

impl Cell {
    /// Validates `pieces` as a partition of the unit cube and returns the cell.
    ///
    /// Unique coverage is checked on quasi-random points before the total
    /// measure, so coverage defects come with a witness point. Pieces sharing
    /// a shift are merged.
    pub fn new(dim: usize, pieces: Vec<CellPiece>) -> Result<Cell> {
        if dim == 0 {
            return Err(Error::InvalidInput("cell dimension must be at least 1".into()));
        }
        for p in &pieces {
            if p.set.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.set.dim() });
            }
            if p.shift.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.shift.dim() });
            }
        }
        let mut gap = None;
        for point in kronecker_points(dim, tolerances::CELL_COVERAGE_SAMPLES) {
            let hits = pieces.iter().filter(|p| p.set.contains(&point)).count();
            if hits > 1 {
                return Err(Error::CellDoubleCoverage { point });
            }
            if hits == 0 && gap.is_none() {
                gap = Some(point);
            }
        }
        let mut total = CompensatedSum::default();
        for p in &pieces {
            total.add(p.set.measure());
        }
        let measure = total.value();
        if (measure - 1.0).abs() > tolerances::CELL_MEASURE {
            return Err(Error::CellMeasure { measure, witness: gap });
        }
        if let Some(point) = gap {
            return Err(Error::CellGap { point });
        }
        Ok(Cell { dim, pieces: merge_by_shift(dim, pieces) })
    }

    /// The unit cube `[0,1)^n` as a single unshifted piece.
    pub fn cube(n: usize) -> Cell {
        Cell {
            dim: n,
            pieces: vec![CellPiece { set: JordanSet::full(n), shift: IntVec::zeros(n) }],
        }
    }

    /// The roundoff cell `[-1/2, 1/2)^n`.
    pub fn roundoff(n: usize) -> Cell {
        Cell::cube(n).translate(&vec![-0.5; n]).expect("roundoff cell is valid")
    }

    /// A planar cell built by cutting the unit square into a central cross
    /// and four corner blocks. Each corner block is again cut into a cross
    /// and four small corner squares; the cross moves to the diagonally
    /// opposite side of the square and the small squares move outward.
    pub fn nested_cross() -> Cell {
        let t = 1.0 / 3.0;
        let t2 = 2.0 / 3.0;
        let b = |x0: f64, x1: f64, y0: f64, y1: f64| HalfOpenBox { lo: vec![x0, y0], hi: vec![x1, y1] };
        let mut by_shift: BTreeMap<[i64; 2], Vec<HalfOpenBox>> = BTreeMap::new();
        by_shift.insert(
            [0, 0],
            vec![b(t, t2, 0.0, t), b(0.0, 1.0, t, t2), b(t, t2, t2, 1.0)],
        );
        // corner blocks: (x offset, y offset, direction towards the outside)
        for (cx, cy, sx, sy) in [(0.0, 0.0, -1, -1), (t2, 0.0, 1, -1), (0.0, t2, -1, 1), (t2, t2, 1, 1)] {
            let s = 1.0 / 9.0;
            let at = |i: f64, j: f64| (cx + i * s, cy + j * s);
            let (x0, y0) = at(0.0, 0.0);
            let (x1, y1) = at(1.0, 1.0);
            let (x2, y2) = at(2.0, 2.0);
            let (x3, y3) = at(3.0, 3.0);
            let cross = vec![b(x1, x2, y0, y1), b(x0, x3, y1, y2), b(x1, x2, y2, y3)];
            let corners = vec![
                b(x0, x1, y0, y1),
                b(x2, x3, y0, y1),
                b(x0, x1, y2, y3),
                b(x2, x3, y2, y3),
            ];
            by_shift.entry([-sx, -sy]).or_default().extend(cross);
            by_shift.entry([sx, sy]).or_default().extend(corners);
        }
        let pieces = by_shift
            .into_iter()
            .map(|(shift, boxes)| CellPiece {
                set: JordanSet::from_disjoint(2, boxes),
                shift: IntVec::from(shift),
            })
            .collect();
        Cell::new(2, pieces).expect("nested cross is a valid cell")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[CellPiece] {
        &self.pieces
    }

    /// Boxes of the region itself (piece boxes moved by their shifts).
    pub fn region_boxes(&self) -> impl Iterator<Item = HalfOpenBox> + '_ {
        self.pieces.iter().flat_map(|p| {
            p.set.boxes().iter().map(move |b| HalfOpenBox {
                lo: b.lo.iter().zip(p.shift.as_slice()).map(|(l, &s)| l + s as f64).collect(),
                hi: b.hi.iter().zip(p.shift.as_slice()).map(|(h, &s)| h + s as f64).collect(),
            })
        })
    }

    pub fn measure(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for p in &self.pieces {
            acc.add(p.set.measure());
        }
        acc.value()
    }

    /// Axis-aligned bounding box of the region.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for b in self.region_boxes() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(b.lo[k]);
                hi[k] = hi[k].max(b.hi[k]);
            }
        }
        (lo, hi)
    }

    /// Re-expresses region boxes, given per axis as `(lo, hi)` coordinates,
    /// in canonical piece form.
    fn from_region_spans(dim: usize, spans: Vec<Vec<(Coord, Coord)>>) -> Result<Cell> {
        let mut by_shift: BTreeMap<IntVec, Vec<HalfOpenBox>> = BTreeMap::new();
        for axes in spans {
            let segs: Vec<_> = axes.into_iter().map(|(lo, hi)| split_span(lo, hi)).collect();
            for_each_product(&segs, |ints, lo, hi| {
                by_shift.entry(IntVec::from(ints)).or_default().push(HalfOpenBox { lo, hi });
            });
        }
        let pieces = by_shift
            .into_iter()
            .map(|(shift, boxes)| CellPiece { set: JordanSet::from_disjoint(dim, boxes), shift })
            .collect();
        Cell::new(dim, pieces)
    }

    fn region_spans(&self) -> Vec<Vec<(Coord, Coord)>> {
        let mut out = Vec::new();
        for p in &self.pieces {
            for b in p.set.boxes() {
                out.push(
                    (0..self.dim)
                        .map(|k| {
                            let s = p.shift.0[k];
                            (Coord::from_piece(s, b.lo[k]), Coord::from_piece(s, b.hi[k]))
                        })
                        .collect(),
                );
            }
        }
        out
    }

    /// The cell `V + u`.
    pub fn translate(&self, u: &[f64]) -> Result<Cell> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.len() });
        }
        let by: Vec<Coord> = u.iter().map(|&v| Coord::split(v)).collect();
        let spans = self
            .region_spans()
            .into_iter()
            .map(|axes| {
                axes.into_iter()
                    .zip(&by)
                    .map(|((lo, hi), &d)| (lo.offset(d), hi.offset(d)))
                    .collect()
            })
            .collect();
        Cell::from_region_spans(self.dim, spans)
    }

    /// The cell `F V` for a signed permutation `F`: axis `k` of the input is
    /// sent to axis `perm[k]`, multiplied by `signs[k]`.
    ///
    /// Negated axes keep the lower-closed convention, so the result differs
    /// from the exact image on a null set of boundary planes.
    pub fn signed_permute(&self, perm: &[usize], signs: &[i8]) -> Result<Cell> {
        let n = self.dim;
        if perm.len() != n || signs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: perm.len().min(signs.len()) });
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
            }
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("signs must be +1 or -1".into()));
        }
        let spans = self
            .region_spans()
            .into_iter()
            .map(|axes| {
                let mut out = vec![(Coord::split(0.0), Coord::split(0.0)); n];
                for (k, (lo, hi)) in axes.into_iter().enumerate() {
                    out[perm[k]] = if signs[k] > 0 { (lo, hi) } else { (hi.negate(), lo.negate()) };
                }
                out
            })
            .collect();
        Cell::from_region_spans(n, spans)
    }

    /// Mean vector of the uniform distribution on the cell.
    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![CompensatedSum::default(); self.dim];
        for b in self.region_boxes() {
            let vol = b.volume();
            for k in 0..self.dim {
                acc[k].add(vol * 0.5 * (b.lo[k] + b.hi[k]));
            }
        }
        acc.iter().map(|a| a.value()).collect()
    }

    /// Covariance matrix of the uniform distribution on the cell, by exact
    /// per-box second moments. Fails if the result is not positive definite.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let n = self.dim;
        let mu = self.mean();
        let mut acc = vec![CompensatedSum::default(); n * n];
        for b in self.region_boxes() {
            let vol = b.volume();
            let c: Vec<f64> = (0..n).map(|k| 0.5 * (b.lo[k] + b.hi[k]) - mu[k]).collect();
            for i in 0..n {
                for j in 0..n {
                    let mut m = c[i] * c[j];
                    if i == j {
                        let w = b.hi[i] - b.lo[i];
                        m += w * w / 12.0;
                    }
                    acc[i * n + j].add(vol * m);
                }
            }
        }
        let psi = DMatrix::from_row_iterator(n, n, acc.iter().map(|a| a.value()));
        if psi.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(psi)
    }

    /// Measure of the symmetric difference between two cells with matching shifts.
    pub fn distance(&self, other: &Cell) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let empty = JordanSet::empty(self.dim);
        let lookup = |c: &Cell| -> BTreeMap<IntVec, JordanSet> {
            c.pieces.iter().map(|p| (p.shift.clone(), p.set.clone())).collect()
        };
        let (a, b) = (lookup(self), lookup(other));
        let mut total = 0.0;
        for shift in a.keys().chain(b.keys()).collect::<std::collections::BTreeSet<_>>() {
            let x = a.get(shift).unwrap_or(&empty);
            let y = b.get(shift).unwrap_or(&empty);
            total += x.symmetric_difference(y)?.measure();
        }
        Ok(total)
    }
}

fn merge_by_shift(dim: usize, pieces: Vec<CellPiece>) -> Vec<CellPiece> {
    let mut by_shift: BTreeMap<IntVec, Vec<HalfOpenBox>> = BTreeMap::new();
    for p in pieces {
        by_shift.entry(p.shift).or_default().extend(p.set.boxes().iter().cloned());
    }
    by_shift
        .into_iter()
        .map(|(shift, boxes)| CellPiece { set: JordanSet::from_disjoint(dim, boxes), shift })
        .filter(|p| !p.set.is_empty())
        .collect()
}

/// `-(I + L^{-1}) mu`, the translation taking a quantizer cell to the cell of
/// its compensating quantizer.
pub fn compensating_offset(l_inv: &DMatrix<f64>, mu: &[f64]) -> Vec<f64> {
    let mu = DVector::from_column_slice(mu);
    let v = &mu + l_inv * &mu;
    v.iter().map(|x| -x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_is_valid() {
        let c = Cell::cube(3);
        assert!(Cell::new(3, c.pieces().to_vec()).is_ok());
        assert_eq!(c.mean(), vec![0.5; 3]);
    }

    #[test]
    fn duplicate_cube_rejected() {
        let piece = |s: [i64; 2]| CellPiece { set: JordanSet::full(2), shift: IntVec::from(s) };
        let err = Cell::new(2, vec![piece([0, 0]), piece([1, 0])]).unwrap_err();
        assert!(matches!(err, Error::CellDoubleCoverage { .. }));
    }

    #[test]
    fn gap_reported_with_witness() {
        let half = CellPiece {
            set: JordanSet::boxed(vec![0.0, 0.0], vec![0.5, 1.0]).unwrap(),
            shift: IntVec::zeros(2),
        };
        match Cell::new(2, vec![half]).unwrap_err() {
            Error::CellMeasure { measure, witness } => {
                assert!((measure - 0.5).abs() < 1e-15);
                assert!(witness.unwrap()[0] >= 0.5);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn roundoff_cell_region() {
        let c = Cell::roundoff(2);
        let (lo, hi) = c.bounding_box();
        assert_eq!(lo, vec![-0.5, -0.5]);
        assert_eq!(hi, vec![0.5, 0.5]);
        assert_eq!(c.pieces().len(), 4);
        assert_eq!(c.mean(), vec![0.0, 0.0]);
    }

    #[test]
    fn translate_by_integer_moves_shifts() {
        let c = Cell::roundoff(2);
        let t = c.translate(&[2.0, -1.0]).unwrap();
        assert_eq!(t.pieces().len(), c.pieces().len());
        for (a, b) in c.pieces().iter().zip(t.pieces()) {
            assert_eq!(a.set, b.set);
            assert_eq!(b.shift, a.shift.add(&IntVec::from([2, -1])));
        }
    }

    #[test]
    fn translate_cube_measures() {
        let t = Cell::cube(2).translate(&[0.3, 0.7]).unwrap();
        let mut m: Vec<f64> = t.pieces().iter().map(|p| p.set.measure()).collect();
        m.sort_by(f64::total_cmp);
        let want = [0.09, 0.21, 0.21, 0.49];
        for (a, b) in m.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{m:?}");
        }
        assert!((t.measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn translate_shares_split_planes_exactly() {
        // the piece that wraps and the piece that does not must meet exactly
        let t = Cell::cube(1).translate(&[0.3]).unwrap();
        let ends: Vec<(f64, f64)> =
            t.pieces().iter().map(|p| (p.set.boxes()[0].lo[0], p.set.boxes()[0].hi[0])).collect();
        assert!(ends.contains(&(0.3, 1.0)));
        assert!(ends.contains(&(0.0, 0.3)));
    }

    #[test]
    fn nested_cross_is_a_cell() {
        let c = Cell::nested_cross();
        assert_eq!(c.pieces().len(), 5);
        assert!((c.measure() - 1.0).abs() < 1e-12);
        let (lo, hi) = c.bounding_box();
        assert!((lo[0] + 1.0).abs() < 1e-12 && (hi[0] - 2.0).abs() < 1e-12);
        assert!((lo[1] + 1.0).abs() < 1e-12 && (hi[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn signed_permutation_of_roundoff_is_roundoff() {
        let c = Cell::roundoff(2);
        let f = c.signed_permute(&[1, 0], &[-1, 1]).unwrap();
        assert!(f.distance(&c).unwrap() < 1e-12);
    }

    #[test]
    fn covariance_of_roundoff_and_cube() {
        for c in [Cell::roundoff(2), Cell::cube(3)] {
            let psi = c.covariance().unwrap();
            let n = c.dim();
            let eye = DMatrix::<f64>::identity(n, n) / 12.0;
            assert!((psi - eye).amax() < 1e-12);
        }
    }
}
