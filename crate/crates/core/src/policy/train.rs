//! The GRPO training loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grpo::{grpo_objective_multi, normalize_advantages, sample_group, GroupSample, GrpoConfig};
use super::optim::Adam;
use super::params::{element_slots, kl_divergence, PolicyParams};
use super::PolicyError;
use crate::critique::{Critic, QualityWeights, RewardBreakdown, RewardWeights};
use crate::layout::{CanvasSpec, Layout};

/// Means of every reward component over all candidates of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComponentMeans {
    pub format: f64,
    pub icr: f64,
    pub align: f64,
    pub dist: f64,
    pub spacing: f64,
    pub underlay: f64,
    pub quality: f64,
    pub iou: Option<f64>,
}

impl ComponentMeans {
    fn of(scores: &[RewardBreakdown]) -> Self {
        let n = scores.len().max(1) as f64;
        let mean = |f: &dyn Fn(&RewardBreakdown) -> f64| scores.iter().map(f).sum::<f64>() / n;
        let has_iou = scores.iter().any(|s| s.r_iou.is_some());
        Self {
            format: mean(&|s| s.r_format),
            icr: mean(&|s| s.s_icr),
            align: mean(&|s| s.s_align),
            dist: mean(&|s| s.s_dist),
            spacing: mean(&|s| s.s_spacing),
            underlay: mean(&|s| s.s_underlay),
            quality: mean(&|s| s.r_quality),
            iou: has_iou.then(|| mean(&|s| s.r_iou.unwrap_or(0.0))),
        }
    }
}

/// One line of the training log. Iteration `k` reports groups sampled from
/// the parameters after `k` updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub iteration: usize,
    pub mean_reward: f64,
    pub components: ComponentMeans,
    pub kl: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    /// Frozen snapshot the divergence penalty pulls toward.
    pub reference: PolicyParams,
    /// `iterations + 1` records; the last one follows the final update.
    pub log: Vec<TrainRecord>,
    /// Scored groups of the final evaluation, one per suite canvas.
    pub final_groups: Vec<GroupSample>,
}

impl TrainOutcome {
    pub fn log_jsonl(&self) -> String {
        self.log
            .iter()
            .map(|r| serde_json::to_string(r).expect("records always serialize") + "\n")
            .collect()
    }

    /// Highest-reward candidate of the final group for canvas `i`.
    pub fn best_of_group(&self, i: usize) -> Option<(&Layout, f64)> {
        let g = self.final_groups.get(i)?;
        let mut best: Option<(usize, f64)> = None;
        for (k, &r) in g.rewards.iter().enumerate() {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((k, r));
            }
        }
        best.map(|(k, r)| (&g.candidates[k].layout, r))
    }
}

/// Trains from a seeded random initialization.
pub fn train(
    suite: &[CanvasSpec],
    references: Option<&[Layout]>,
    cfg: &GrpoConfig,
    rw: &RewardWeights,
    qw: &QualityWeights,
) -> Result<TrainOutcome, PolicyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = PolicyParams::random_init(suite, &mut rng);
    train_from(init, suite, references, cfg, rw, qw, &mut rng)
}

fn score_groups(
    params: &PolicyParams,
    suite: &[CanvasSpec],
    references: Option<&[Layout]>,
    critic: &Critic,
    cfg: &GrpoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<GroupSample>, Vec<RewardBreakdown>), PolicyError> {
    let mut groups = Vec::with_capacity(suite.len());
    let mut all = Vec::new();
    for (i, spec) in suite.iter().enumerate() {
        let mut group = sample_group(params, spec, cfg.group_size, rng)?;
        let reference = references.map(|r| &r[i]);
        let scores: Vec<RewardBreakdown> = group
            .candidates
            .par_iter()
            .map(|c| critic.score_layout(&c.layout, spec, reference))
            .collect::<Result<_, _>>()?;
        group.rewards = scores.iter().map(|s| s.r_total).collect();
        group.advantages = normalize_advantages(&group.rewards, cfg.advantage_std_floor);
        all.extend(scores);
        groups.push(group);
    }
    Ok((groups, all))
}

/// Trains starting from `init`, which also becomes the divergence reference.
pub fn train_from(
    init: PolicyParams,
    suite: &[CanvasSpec],
    references: Option<&[Layout]>,
    cfg: &GrpoConfig,
    rw: &RewardWeights,
    qw: &QualityWeights,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome, PolicyError> {
    cfg.validate()?;
    rw.validate()?;
    qw.validate()?;
    if suite.is_empty() {
        return Err(PolicyError::EmptySuite);
    }
    if let Some(refs) = references {
        if refs.len() != suite.len() {
            return Err(PolicyError::Config(format!(
                "{} references for {} canvases",
                refs.len(),
                suite.len()
            )));
        }
    }
    for spec in suite {
        spec.validate()
            .map_err(|e| PolicyError::Config(e.to_string()))?;
        element_slots(&init, spec)?;
    }
    let critic = Critic::new(*rw, *qw);
    let reference = init.clone();
    let mut params = init;
    let mut flat = params.to_flat();
    let mut opt = Adam::new(flat.len(), cfg.learning_rate);
    let mut log = Vec::with_capacity(cfg.iterations + 1);

    let mut it = 0;
    loop {
        let (groups, scores) = score_groups(&params, suite, references, &critic, cfg, rng)?;
        let mean_reward = scores.iter().map(|s| s.r_total).sum::<f64>() / scores.len() as f64;
        if !mean_reward.is_finite() {
            return Err(PolicyError::Diverged { iteration: it });
        }
        log.push(TrainRecord {
            iteration: it,
            mean_reward,
            components: ComponentMeans::of(&scores),
            kl: kl_divergence(&params, &reference).0,
        });
        if it == cfg.iterations {
            return Ok(TrainOutcome {
                params,
                reference,
                log,
                final_groups: groups,
            });
        }
        let old = params.clone();
        let (_, grad) = grpo_objective_multi(&params, &old, &reference, &groups, cfg);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(PolicyError::Diverged { iteration: it });
        }
        opt.ascend(&mut flat, &grad);
        params.set_flat(&flat);
        params.clamp_log_std();
        flat = params.to_flat();
        it += 1;
    }
}
