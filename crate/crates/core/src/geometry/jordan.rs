//! Half-open boxes and finite disjoint unions of them inside the unit cube.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances;

/// Axis-aligned half-open box `[lo_1, hi_1) x ... x [lo_m, hi_m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfOpenBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl HalfOpenBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.is_empty() {
            return Err(Error::InvalidBox("zero-dimensional box".into()));
        }
        if let Some(k) = (0..lo.len()).find(|&k| !(lo[k] < hi[k])) {
            return Err(Error::InvalidBox(format!("axis {k}: lo {} >= hi {}", lo[k], hi[k])));
        }
        Ok(HalfOpenBox { lo, hi })
    }

    pub fn unit(m: usize) -> Self {
        HalfOpenBox { lo: vec![0.0; m], hi: vec![1.0; m] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(&self.lo).zip(&self.hi).all(|((&x, &l), &h)| l <= x && x < h)
    }

    pub fn intersects(&self, other: &HalfOpenBox) -> bool {
        (0..self.dim()).all(|k| self.lo[k] < other.hi[k] && other.lo[k] < self.hi[k])
    }

    pub fn intersection(&self, other: &HalfOpenBox) -> Option<HalfOpenBox> {
        if !self.intersects(other) {
            return None;
        }
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        Some(HalfOpenBox { lo, hi })
    }

    /// `self \ other` as at most `2m` disjoint boxes.
    pub fn minus(&self, other: &HalfOpenBox) -> Vec<HalfOpenBox> {
        if !self.intersects(other) {
            return vec![self.clone()];
        }
        let mut out = Vec::new();
        let mut rest = self.clone();
        for k in 0..self.dim() {
            if rest.lo[k] < other.lo[k] {
                let mut below = rest.clone();
                below.hi[k] = other.lo[k];
                out.push(below);
                rest.lo[k] = other.lo[k];
            }
            if rest.hi[k] > other.hi[k] {
                let mut above = rest.clone();
                above.lo[k] = other.hi[k];
                out.push(above);
                rest.hi[k] = other.hi[k];
            }
        }
        out
    }

    pub fn product(&self, other: &HalfOpenBox) -> HalfOpenBox {
        HalfOpenBox {
            lo: self.lo.iter().chain(&other.lo).copied().collect(),
            hi: self.hi.iter().chain(&other.hi).copied().collect(),
        }
    }

    fn linf_distance(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(&self.lo)
            .zip(&self.hi)
            .map(|((&x, &l), &h)| (l - x).max(x - h).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Point-location structure over a fixed list of disjoint boxes.
///
/// Small lists use a flat scan; larger ones slab the first axis at every box
/// endpoint and keep, per slab, the boxes that overlap it.
#[derive(Clone, Debug, Default)]
pub struct BoxIndex {
    breaks: Vec<f64>,
    slabs: Vec<Vec<u32>>,
}

impl BoxIndex {
    pub fn build(boxes: &[HalfOpenBox]) -> Option<BoxIndex> {
        if boxes.len() <= tolerances::FLAT_SCAN_LIMIT {
            return None;
        }
        let mut breaks: Vec<f64> = boxes.iter().flat_map(|b| [b.lo[0], b.hi[0]]).collect();
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();
        let mut slabs = vec![Vec::new(); breaks.len().saturating_sub(1)];
        for (i, b) in boxes.iter().enumerate() {
            let start = breaks.partition_point(|&x| x < b.lo[0]);
            let end = breaks.partition_point(|&x| x < b.hi[0]);
            for slab in &mut slabs[start..end] {
                slab.push(i as u32);
            }
        }
        Some(BoxIndex { breaks, slabs })
    }

    fn candidates(&self, x0: f64) -> &[u32] {
        let pos = self.breaks.partition_point(|&b| b <= x0);
        if pos == 0 || pos > self.slabs.len() {
            &[]
        } else {
            &self.slabs[pos - 1]
        }
    }
}

/// Index of the first box containing `p`.
pub fn locate(boxes: &[HalfOpenBox], index: Option<&BoxIndex>, p: &[f64]) -> Option<usize> {
    match index {
        None => boxes.iter().position(|b| b.contains(p)),
        Some(ix) => ix
            .candidates(p[0])
            .iter()
            .map(|&i| i as usize)
            .find(|&i| boxes[i].contains(p)),
    }
}

/// Index of the box nearest to `p` in the sup norm.
pub fn nearest(boxes: &[HalfOpenBox], p: &[f64]) -> Option<usize> {
    boxes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.linf_distance(p).total_cmp(&b.1.linf_distance(p)))
        .map(|(i, _)| i)
}

/// A finite union of pairwise disjoint half-open boxes inside `[0,1)^m`.
#[derive(Clone, Debug)]
pub struct JordanSet {
    dim: usize,
    boxes: Vec<HalfOpenBox>,
    index: Option<BoxIndex>,
}

impl PartialEq for JordanSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.boxes == other.boxes
    }
}

impl JordanSet {
    /// Builds the canonical disjoint form of the union of `raw`.
    pub fn from_boxes(dim: usize, raw: Vec<HalfOpenBox>) -> Result<Self> {
        for (i, b) in raw.iter().enumerate() {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: b.dim() });
            }
            if let Some(k) = (0..dim).find(|&k| b.lo[k] < 0.0 || b.hi[k] > 1.0) {
                return Err(Error::BoxOutsideUnitCube {
                    index: i,
                    detail: format!("axis {k} spans [{}, {})", b.lo[k], b.hi[k]),
                });
            }
        }
        let mut disjoint: Vec<HalfOpenBox> = Vec::new();
        for b in raw {
            let mut parts = vec![b];
            for e in &disjoint {
                parts = parts.into_iter().flat_map(|p| p.minus(e)).collect();
                if parts.is_empty() {
                    break;
                }
            }
            disjoint.extend(parts);
        }
        Ok(Self::from_disjoint(dim, disjoint))
    }

    /// Wraps boxes already known to be disjoint and inside the unit cube.
    pub(crate) fn from_disjoint(dim: usize, boxes: Vec<HalfOpenBox>) -> Self {
        let boxes: Vec<_> = boxes.into_iter().filter(|b| b.volume() > 0.0).collect();
        let index = BoxIndex::build(&boxes);
        JordanSet { dim, boxes, index }
    }

    pub fn empty(dim: usize) -> Self {
        Self::from_disjoint(dim, Vec::new())
    }

    pub fn full(dim: usize) -> Self {
        Self::from_disjoint(dim, vec![HalfOpenBox::unit(dim)])
    }

    /// Single box `[lo, hi)`.
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let dim = lo.len();
        Self::from_boxes(dim, vec![HalfOpenBox::new(lo, hi)?])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[HalfOpenBox] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn measure(&self) -> f64 {
        let mut acc = crate::lattice::CompensatedSum::default();
        for b in &self.boxes {
            acc.add(b.volume());
        }
        acc.value()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        locate(&self.boxes, self.index.as_ref(), p).is_some()
    }

    fn check_dim(&self, other: &JordanSet) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    /// `self \ other`.
    pub fn difference(&self, other: &JordanSet) -> Result<JordanSet> {
        self.check_dim(other)?;
        let mut parts = self.boxes.clone();
        for e in &other.boxes {
            parts = parts.into_iter().flat_map(|p| p.minus(e)).collect();
        }
        Ok(Self::from_disjoint(self.dim, parts))
    }

    /// Complement within `[0,1)^m`.
    pub fn complement(&self) -> JordanSet {
        JordanSet::full(self.dim).difference(self).expect("same dimension")
    }

    pub fn intersection(&self, other: &JordanSet) -> Result<JordanSet> {
        self.check_dim(other)?;
        let boxes = self
            .boxes
            .iter()
            .flat_map(|a| other.boxes.iter().filter_map(move |b| a.intersection(b)))
            .collect();
        Ok(Self::from_disjoint(self.dim, boxes))
    }

    pub fn union(&self, other: &JordanSet) -> Result<JordanSet> {
        let extra = other.difference(self)?;
        let mut boxes = self.boxes.clone();
        boxes.extend(extra.boxes);
        Ok(Self::from_disjoint(self.dim, boxes))
    }

    pub fn symmetric_difference(&self, other: &JordanSet) -> Result<JordanSet> {
        self.difference(other)?.union(&other.difference(self)?)
    }

    /// Cartesian product `self x other` in `[0,1)^{m1+m2}`.
    pub fn product(&self, other: &JordanSet) -> JordanSet {
        let boxes = self
            .boxes
            .iter()
            .flat_map(|a| other.boxes.iter().map(move |b| a.product(b)))
            .collect();
        Self::from_disjoint(self.dim + other.dim, boxes)
    }

    /// The set `(self + t) mod 1`, re-expressed inside the unit cube.
    pub fn translate_mod1(&self, t: &[f64]) -> Result<JordanSet> {
        if t.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: t.len() });
        }
        let offsets: Vec<_> = t.iter().map(|&v| super::cell::Coord::split(v)).collect();
        let mut out = Vec::new();
        for b in &self.boxes {
            let axes: Vec<_> = (0..self.dim)
                .map(|k| {
                    let lo = super::cell::Coord::from_piece(0, b.lo[k]).offset(offsets[k]);
                    let hi = super::cell::Coord::from_piece(0, b.hi[k]).offset(offsets[k]);
                    super::cell::split_span(lo, hi)
                })
                .collect();
            super::cell::for_each_product(&axes, |_, lo, hi| {
                out.push(HalfOpenBox { lo, hi });
            });
        }
        Ok(Self::from_disjoint(self.dim, out))
    }
}
