//! Axis-aligned boxes in normalized canvas coordinates.
//!
//! Every coordinate lives on the unit canvas: `(0, 0)` is the top-left
//! corner, `(1, 1)` the bottom-right. Pixel annotations are divided by the
//! canvas dimensions before they reach this module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on the right and bottom canvas edges.
pub const BOX_EPS: f64 = 1e-6;

/// Default grid resolution for rasterized union areas.
pub const DEFAULT_RESOLUTION: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box coordinates must be finite")]
    NonFinite,
    #[error("box has non-positive size ({w} x {h})")]
    NonPositiveSize { w: f64, h: f64 },
    #[error("box origin ({x}, {y}) lies outside the canvas")]
    OriginOutside { x: f64, y: f64 },
    #[error("box extends past the canvas edge (right {right}, bottom {bottom})")]
    ExceedsCanvas { right: f64, bottom: f64 },
}

/// A box given by its top-left corner and size.
///
/// [`BBox::new`] enforces the canvas invariants. Deserialization does not,
/// so layouts read from untrusted text can still be inspected and reported
/// on by validation; call [`BBox::check`] before scoring such boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        let b = Self { x, y, w, h };
        b.check()?;
        Ok(b)
    }

    /// Builds a box without checking invariants.
    pub const fn new_unchecked(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn check(&self) -> Result<(), GeometryError> {
        let Self { x, y, w, h } = *self;
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(GeometryError::NonPositiveSize { w, h });
        }
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(GeometryError::OriginOutside { x, y });
        }
        if x + w > 1.0 + BOX_EPS || y + h > 1.0 + BOX_EPS {
            return Err(GeometryError::ExceedsCanvas {
                right: x + w,
                bottom: y + h,
            });
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.check().is_ok()
    }

    #[inline]
    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    #[inline]
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Area of the overlap with `other`, zero when the boxes are disjoint.
    #[inline]
    pub fn intersect_area(&self, other: &BBox) -> f64 {
        let ow = overlap_1d(self.x, self.w, other.x, other.w);
        let oh = overlap_1d(self.y, self.h, other.y, other.h);
        ow * oh
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersect_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            (inter / union).clamp(0.0, 1.0)
        }
    }

    /// True when `other` lies entirely inside `self`, up to `tol` of area.
    pub fn contains(&self, other: &BBox, tol: f64) -> bool {
        (self.intersect_area(other) - other.area()).abs() <= tol
    }
}

/// Overlap length of two intervals. When one interval spans the other the
/// inner length is returned as stored, so containment yields exact areas.
#[inline]
fn overlap_1d(a0: f64, alen: f64, b0: f64, blen: f64) -> f64 {
    let (a1, b1) = (a0 + alen, b0 + blen);
    if a0 >= b0 && a1 <= b1 {
        alen
    } else if b0 >= a0 && b1 <= a1 {
        blen
    } else {
        (a1.min(b1) - a0.max(b0)).max(0.0)
    }
}

pub fn area(b: &BBox) -> f64 {
    b.area()
}

pub fn intersect_area(a: &BBox, b: &BBox) -> f64 {
    a.intersect_area(b)
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}

pub fn center(b: &BBox) -> (f64, f64) {
    b.center()
}

/// Fraction of the union of `boxes_b` that is also covered by the union of
/// `boxes_a`, measured on a `resolution x resolution` grid of cell centers.
///
/// A cell belongs to a box when its center falls inside the half-open box.
/// A box too small to contain any cell center claims the cell holding its
/// own center, so no non-empty box vanishes from the grid.
pub fn rasterized_union_overlap(boxes_a: &[BBox], boxes_b: &[BBox], resolution: usize) -> f64 {
    if boxes_b.is_empty() {
        return 0.0;
    }
    let res = resolution.max(1);
    let mask_b = rasterize(boxes_b, res);
    let total_b = mask_b.iter().filter(|&&c| c).count();
    if total_b == 0 {
        return 0.0;
    }
    let mask_a = rasterize(boxes_a, res);
    let both = mask_a
        .iter()
        .zip(&mask_b)
        .filter(|(&a, &b)| a && b)
        .count();
    both as f64 / total_b as f64
}

fn rasterize(boxes: &[BBox], res: usize) -> Vec<bool> {
    let mut mask = vec![false; res * res];
    for b in boxes {
        let (c0, c1) = cell_span(b.x, b.right(), b.center().0, res);
        let (r0, r1) = cell_span(b.y, b.bottom(), b.center().1, res);
        for r in r0..r1 {
            mask[r * res..(r + 1) * res][c0..c1].fill(true);
        }
    }
    mask
}

/// Cells `i` whose center `(i + 0.5) / res` lies in `[lo, hi)`.
fn cell_span(lo: f64, hi: f64, mid: f64, res: usize) -> (usize, usize) {
    let n = res as f64;
    let first = (lo * n - 0.5).ceil().clamp(0.0, n) as usize;
    let end = (hi * n - 0.5).ceil().clamp(0.0, n) as usize;
    if end > first {
        (first, end)
    } else {
        let i = ((mid * n).floor().clamp(0.0, n - 1.0)) as usize;
        (i, i + 1)
    }
}
