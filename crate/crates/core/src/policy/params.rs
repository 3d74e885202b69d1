//! Per-slot diagonal Gaussian placement policy.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::geometry::BBox;
use crate::layout::{CanvasSpec, ElementCategory, Layout};

/// Smallest and largest allowed log standard deviation.
pub const LOG_STD_MIN: f64 = -6.907_755_278_982_137; // ln 1e-3
pub const LOG_STD_MAX: f64 = -std::f64::consts::LN_2; // ln 0.5

/// Spread of initial means. A logit-normal with this scale is close to
/// uniform on the unit interval, so untrained placements cover the canvas.
pub const INIT_MEAN_SCALE: f64 = 1.7;

const MIN_SIDE: f64 = 0.01;
const SIDE_RANGE: f64 = 0.98;

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Maps squashed draws `(u_x, u_y, u_w, u_h)` in `(0, 1)` to a box that is
/// always inside the canvas.
pub fn box_from_unit(u: [f64; 4]) -> BBox {
    let w = MIN_SIDE + u[2] * SIDE_RANGE;
    let h = MIN_SIDE + u[3] * SIDE_RANGE;
    BBox::new_unchecked(u[0] * (1.0 - w), u[1] * (1.0 - h), w, h)
}

/// Inverse of [`box_from_unit`], clamped to the unit interval.
pub fn unit_from_box(b: &BBox) -> [f64; 4] {
    let uw = ((b.w - MIN_SIDE) / SIDE_RANGE).clamp(0.0, 1.0);
    let uh = ((b.h - MIN_SIDE) / SIDE_RANGE).clamp(0.0, 1.0);
    let free = |side: f64, pos: f64| {
        if 1.0 - side <= 0.0 {
            0.5
        } else {
            (pos / (1.0 - side)).clamp(0.0, 1.0)
        }
    };
    [free(b.w, b.x), free(b.h, b.y), uw, uh]
}

/// Gaussian over the four raw (pre-squash) placement coordinates of one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    /// Position of the element in its canvas.
    pub index: usize,
    pub category: ElementCategory,
    pub mean: [f64; 4],
    pub log_std: [f64; 4],
}

impl Slot {
    pub fn log_density(&self, raw: &[f64; 4]) -> f64 {
        (0..4)
            .map(|d| {
                let z = (raw[d] - self.mean[d]) * (-self.log_std[d]).exp();
                -0.5 * z * z - self.log_std[d] - 0.5 * (2.0 * PI).ln()
            })
            .sum()
    }

    pub fn mode_unit(&self) -> [f64; 4] {
        self.mean.map(sigmoid)
    }
}

/// Policy parameters. Slots are shared across canvases: elements with the
/// same index and category draw from the same slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub slots: Vec<Slot>,
}

/// Slot keys `(element index, category)` needed to cover every spec.
pub fn slot_keys(specs: &[CanvasSpec]) -> Vec<(usize, ElementCategory)> {
    let keys: BTreeSet<(usize, ElementCategory)> = specs
        .iter()
        .flat_map(|s| s.elements.iter().enumerate().map(|(i, e)| (i, e.category)))
        .collect();
    keys.into_iter().collect()
}

/// Slot index of every spec element, in element order.
pub fn element_slots(params: &PolicyParams, spec: &CanvasSpec) -> Result<Vec<usize>, PolicyError> {
    spec.elements
        .iter()
        .enumerate()
        .map(|(i, e)| {
            params
                .slot_index(i, e.category)
                .ok_or(PolicyError::MissingSlot {
                    index: i,
                    category: e.category,
                })
        })
        .collect()
}

impl PolicyParams {
    /// Means drawn from `N(0, INIT_MEAN_SCALE^2)`, spreads at their maximum.
    pub fn random_init(specs: &[CanvasSpec], rng: &mut impl Rng) -> Self {
        let slots = slot_keys(specs)
            .into_iter()
            .map(|(index, category)| Slot {
                index,
                category,
                mean: std::array::from_fn(|_| INIT_MEAN_SCALE * rng.sample::<f64, _>(StandardNormal)),
                log_std: [LOG_STD_MAX; 4],
            })
            .collect();
        Self { slots }
    }

    /// Zero means and the given log standard deviation on every dimension.
    pub fn uniform(specs: &[CanvasSpec], log_std: f64) -> Self {
        let ls = log_std.clamp(LOG_STD_MIN, LOG_STD_MAX);
        let slots = slot_keys(specs)
            .into_iter()
            .map(|(index, category)| Slot {
                index,
                category,
                mean: [0.0; 4],
                log_std: [ls; 4],
            })
            .collect();
        Self { slots }
    }

    pub fn slot_index(&self, index: usize, category: ElementCategory) -> Option<usize> {
        self.slots
            .iter()
            .position(|s| s.index == index && s.category == category)
    }

    pub fn dim(&self) -> usize {
        self.slots.len() * 8
    }

    /// Flat vector: per slot the four means then the four log spreads.
    pub fn to_flat(&self) -> Vec<f64> {
        self.slots
            .iter()
            .flat_map(|s| s.mean.iter().chain(&s.log_std).copied())
            .collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.dim(), "flat parameter length");
        for (s, chunk) in self.slots.iter_mut().zip(flat.chunks_exact(8)) {
            s.mean.copy_from_slice(&chunk[..4]);
            s.log_std.copy_from_slice(&chunk[4..]);
        }
    }

    pub fn clamp_log_std(&mut self) {
        for s in &mut self.slots {
            for v in &mut s.log_std {
                *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
            }
        }
    }

    /// Largest absolute coordinate difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_flat()
            .iter()
            .zip(other.to_flat())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Joint log-density of raw draws for the given slots.
    pub fn log_prob(&self, slots: &[usize], raw: &[[f64; 4]]) -> f64 {
        slots
            .iter()
            .zip(raw)
            .map(|(&i, r)| self.slots[i].log_density(r))
            .sum()
    }

    /// Deterministic layout placing every element at its squashed mean.
    pub fn mode_layout(&self, spec: &CanvasSpec) -> Result<Layout, PolicyError> {
        let slots = element_slots(self, spec)?;
        let boxes: Vec<BBox> = slots
            .iter()
            .map(|&i| box_from_unit(self.slots[i].mode_unit()))
            .collect();
        Ok(Layout::from_boxes(spec, &boxes))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let p: Self = serde_json::from_str(text).map_err(|e| PolicyError::Config(e.to_string()))?;
        if p
            .to_flat()
            .iter()
            .any(|v| !v.is_finite())
        {
            return Err(PolicyError::Config("parameters must be finite".into()));
        }
        Ok(p)
    }
}

/// Closed-form `KL(p || q)` between the diagonal Gaussians of two parameter
/// sets with identical slot layout, and its gradient with respect to `p`.
pub fn kl_divergence(p: &PolicyParams, q: &PolicyParams) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; p.dim()];
    for (k, (a, b)) in p.slots.iter().zip(&q.slots).enumerate() {
        for d in 0..4 {
            let var_p = (2.0 * a.log_std[d]).exp();
            let var_q = (2.0 * b.log_std[d]).exp();
            let dm = a.mean[d] - b.mean[d];
            value += b.log_std[d] - a.log_std[d] + (var_p + dm * dm) / (2.0 * var_q) - 0.5;
            grad[k * 8 + d] = dm / var_q;
            grad[k * 8 + 4 + d] = var_p / var_q - 1.0;
        }
    }
    (value, grad)
}
