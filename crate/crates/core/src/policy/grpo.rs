//! Group sampling, group-relative advantages and the clipped objective.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::params::{box_from_unit, element_slots, kl_divergence, sigmoid, PolicyParams};
use super::PolicyError;
use crate::geometry::BBox;
use crate::layout::{CanvasSpec, Layout};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrpoConfig {
    pub group_size: usize,
    pub clip_eps: f64,
    pub kl_beta: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub advantage_std_floor: f64,
    pub seed: u64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            group_size: 8,
            clip_eps: 0.2,
            kl_beta: 0.01,
            learning_rate: 0.01,
            iterations: 2000,
            advantage_std_floor: 1e-8,
            seed: 0,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let fail = |m: &str| Err(PolicyError::Config(m.to_string()));
        if self.group_size < 2 {
            return fail("group_size must be at least 2");
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return fail("clip_eps must lie in (0, 1)");
        }
        if !(self.kl_beta >= 0.0 && self.kl_beta.is_finite()) {
            return fail("kl_beta must be non-negative");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be non-negative");
        }
        if self.advantage_std_floor.is_nan() || self.advantage_std_floor < 0.0 {
            return fail("advantage_std_floor must be non-negative");
        }
        Ok(())
    }
}

/// One sampled layout with the raw draws that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub layout: Layout,
    /// Slot index per spec element.
    pub slots: Vec<usize>,
    /// Pre-squash draws per spec element.
    pub raw: Vec<[f64; 4]>,
    /// Log-density of `raw` under the sampling policy.
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    pub candidates: Vec<Candidate>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

/// Draws `g` layouts for `spec`. Rewards and advantages are left empty.
pub fn sample_group(
    params: &PolicyParams,
    spec: &CanvasSpec,
    g: usize,
    rng: &mut impl Rng,
) -> Result<GroupSample, PolicyError> {
    if g < 2 {
        return Err(PolicyError::Config("group size must be at least 2".into()));
    }
    let slots = element_slots(params, spec)?;
    let candidates = (0..g)
        .map(|_| {
            let raw: Vec<[f64; 4]> = slots
                .iter()
                .map(|&i| {
                    let s = &params.slots[i];
                    std::array::from_fn(|d| {
                        let n: f64 = rng.sample(StandardNormal);
                        s.mean[d] + s.log_std[d].exp() * n
                    })
                })
                .collect();
            let boxes: Vec<BBox> = raw.iter().map(|r| box_from_unit(r.map(sigmoid))).collect();
            Candidate {
                layout: Layout::from_boxes(spec, &boxes),
                log_prob: params.log_prob(&slots, &raw),
                slots: slots.clone(),
                raw,
            }
        })
        .collect();
    Ok(GroupSample {
        candidates,
        rewards: Vec::new(),
        advantages: Vec::new(),
    })
}

/// Standardizes rewards within a group with the population deviation. A
/// group whose deviation falls below `std_floor` yields all zeros.
pub fn normalize_advantages(rewards: &[f64], std_floor: f64) -> Vec<f64> {
    let n = rewards.len() as f64;
    if rewards.is_empty() {
        return Vec::new();
    }
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std.is_nan() || std_floor.is_nan() || std < std_floor || std == 0.0 {
        return vec![0.0; rewards.len()];
    }
    rewards.iter().map(|r| (r - mean) / std).collect()
}

/// Per-candidate clipped surrogate `min(r A, clip(r, 1-eps, 1+eps) A)`.
pub fn clipped_term(ratio: f64, adv: f64, eps: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv)
}

/// Mean clipped surrogate of one group and its gradient.
pub fn surrogate(
    params: &PolicyParams,
    old: &PolicyParams,
    group: &GroupSample,
    clip_eps: f64,
) -> (f64, Vec<f64>) {
    let g = group.candidates.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; params.dim()];
    for (c, &adv) in group.candidates.iter().zip(&group.advantages) {
        let lp = params.log_prob(&c.slots, &c.raw);
        let lp_old = old.log_prob(&c.slots, &c.raw);
        let ratio = (lp - lp_old).exp();
        let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
        let unclipped_active = ratio * adv <= clipped * adv || clipped == ratio;
        value += clipped_term(ratio, adv, clip_eps);
        if !unclipped_active || adv == 0.0 {
            continue;
        }
        let scale = adv * ratio / g;
        for (&i, r) in c.slots.iter().zip(&c.raw) {
            let s = &params.slots[i];
            for d in 0..4 {
                let inv_var = (-2.0 * s.log_std[d]).exp();
                let dz = r[d] - s.mean[d];
                grad[i * 8 + d] += scale * dz * inv_var;
                grad[i * 8 + 4 + d] += scale * (dz * dz * inv_var - 1.0);
            }
        }
    }
    (value / g, grad)
}

/// Value and gradient of the GRPO objective for a single group: the mean
/// clipped surrogate minus `kl_beta` times the divergence from `reference`.
pub fn grpo_objective(
    params: &PolicyParams,
    old: &PolicyParams,
    reference: &PolicyParams,
    group: &GroupSample,
    cfg: &GrpoConfig,
) -> (f64, Vec<f64>) {
    grpo_objective_multi(params, old, reference, std::slice::from_ref(group), cfg)
}

/// Objective averaged over several groups, with the divergence counted once.
pub fn grpo_objective_multi(
    params: &PolicyParams,
    old: &PolicyParams,
    reference: &PolicyParams,
    groups: &[GroupSample],
    cfg: &GrpoConfig,
) -> (f64, Vec<f64>) {
    let k = groups.len().max(1) as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; params.dim()];
    for group in groups {
        let (v, g) = surrogate(params, old, group, cfg.clip_eps);
        value += v / k;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b / k;
        }
    }
    if cfg.kl_beta > 0.0 {
        let (kl, kg) = kl_divergence(params, reference);
        value -= cfg.kl_beta * kl;
        for (a, b) in grad.iter_mut().zip(kg) {
            *a -= cfg.kl_beta * b;
        }
    }
    (value, grad)
}
