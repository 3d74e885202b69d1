//! Exhaustive grid search over placements, used as an optimality reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{box_from_unit, unit_from_box};
use super::PolicyError;
use crate::critique::{Critic, QualityWeights, RewardWeights};
use crate::geometry::BBox;
use crate::layout::{CanvasSpec, Layout};

/// Largest number of full configurations the oracle will enumerate.
pub const ORACLE_BUDGET: u64 = 10_000_000;

/// Discretization of the squashed placement coordinates: `positions` levels
/// for `x` and `y`, `sizes` levels for `w` and `h`, at cell midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub positions: usize,
    pub sizes: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            positions: 8,
            sizes: 4,
        }
    }
}

fn level(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

fn nearest(u: f64, n: usize) -> usize {
    ((u * n as f64).floor().max(0.0) as usize).min(n - 1)
}

impl Grid {
    pub fn per_element(&self) -> u64 {
        (self.positions * self.positions * self.sizes * self.sizes) as u64
    }

    /// Box for a per-element configuration index in `0..per_element()`,
    /// ordered lexicographically by `(x, y, w, h)` level.
    pub fn element_box(&self, idx: u64) -> BBox {
        let (p, s) = (self.positions as u64, self.sizes as u64);
        let ih = idx % s;
        let iw = (idx / s) % s;
        let iy = (idx / (s * s)) % p;
        let ix = idx / (s * s * p);
        box_from_unit([
            level(ix as usize, self.positions),
            level(iy as usize, self.positions),
            level(iw as usize, self.sizes),
            level(ih as usize, self.sizes),
        ])
    }

    /// Nearest grid box to `b`.
    pub fn snap(&self, b: &BBox) -> BBox {
        let u = unit_from_box(b);
        box_from_unit([
            level(nearest(u[0], self.positions), self.positions),
            level(nearest(u[1], self.positions), self.positions),
            level(nearest(u[2], self.sizes), self.sizes),
            level(nearest(u[3], self.sizes), self.sizes),
        ])
    }

    pub fn snap_layout(&self, layout: &Layout) -> Layout {
        let mut out = layout.clone();
        for e in &mut out.elements {
            e.bbox = self.snap(&e.bbox);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub layout: Layout,
    pub reward: f64,
    pub evaluated: u64,
}

/// Scores every grid configuration of every element and returns the best.
/// Ties go to the lexicographically first configuration, element 0 being
/// the most significant digit.
pub fn grid_oracle(
    spec: &CanvasSpec,
    reference: Option<&Layout>,
    rw: &RewardWeights,
    qw: &QualityWeights,
    grid: &Grid,
) -> Result<OracleResult, PolicyError> {
    spec.validate()
        .map_err(|e| PolicyError::Config(e.to_string()))?;
    if grid.positions == 0 || grid.sizes == 0 {
        return Err(PolicyError::Config("grid levels must be positive".into()));
    }
    let per = grid.per_element();
    let n = spec.elements.len() as u32;
    let total = per
        .checked_pow(n)
        .filter(|t| *t <= ORACLE_BUDGET)
        .ok_or(PolicyError::Budget {
            per_element: per,
            elements: n as usize,
            budget: ORACLE_BUDGET,
        })?;
    let critic = Critic::new(*rw, *qw);
    if let Some(r) = reference {
        critic.score_layout(r, spec, reference)?;
    }
    let layout_of = |idx: u64| {
        let mut digits = vec![0u64; n as usize];
        let mut rest = idx;
        for d in digits.iter_mut().rev() {
            *d = rest % per;
            rest /= per;
        }
        let boxes: Vec<BBox> = digits.iter().map(|&d| grid.element_box(d)).collect();
        Layout::from_boxes(spec, &boxes)
    };
    let (best_idx, reward) = (0..total)
        .into_par_iter()
        .map(|idx| {
            let r = critic
                .score_layout(&layout_of(idx), spec, reference)
                .map(|b| b.r_total)
                .unwrap_or(f64::NEG_INFINITY);
            (idx, r)
        })
        .reduce(
            || (u64::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(OracleResult {
        layout: layout_of(best_idx),
        reward,
        evaluated: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::ElementCategory;

    #[test]
    fn snap_is_idempotent_on_grid_boxes() {
        let g = Grid::default();
        for idx in [0, 17, 511, 1023] {
            let b = g.element_box(idx);
            let s = g.snap(&b);
            assert!((s.x - b.x).abs() < 1e-12 && (s.w - b.w).abs() < 1e-12, "{b:?} {s:?}");
            assert!((s.y - b.y).abs() < 1e-12 && (s.h - b.h).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let spec = CanvasSpec::masked(100, 100, &[ElementCategory::Text; 3], vec![]).unwrap();
        let err = grid_oracle(
            &spec,
            None,
            &RewardWeights::QUALITY_FOCUSED,
            &QualityWeights::default(),
            &Grid::default(),
        );
        assert!(matches!(err, Err(PolicyError::Budget { .. })));
    }

    #[test]
    fn single_element_enumerates_every_cell() {
        let spec = CanvasSpec::masked(100, 100, &[ElementCategory::Text], vec![]).unwrap();
        let res = grid_oracle(
            &spec,
            None,
            &RewardWeights::QUALITY_FOCUSED,
            &QualityWeights::default(),
            &Grid::default(),
        )
        .unwrap();
        assert_eq!(res.evaluated, 1024);
        let (cx, cy) = res.layout.elements[0].bbox.center();
        assert!((cx - 0.5).abs() < 0.1 && (cy - 0.5).abs() < 0.1, "{cx} {cy}");
    }
}
