//! Trains every reward preset on one suite and compares the structure of
//! the resulting layouts.

use std::fmt::Write;

use anyhow::{Context, Result};
use layout_critic::critique::{Critic, QualityWeights, RewardWeights};
use layout_critic::layout::{CanvasSpec, Layout};
use layout_critic::policy::{train, GrpoConfig};
use rayon::prelude::*;
use serde::Serialize;

/// Medians over seeds of each structural sub-score, for one preset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub preset: String,
    pub weights: RewardWeights,
    pub collision: f64,
    pub alignment: f64,
    pub spacing: f64,
    pub distribution: f64,
    /// Final mean group reward under the preset's own weights.
    pub reward: f64,
}

impl AblationRow {
    pub fn structural(&self) -> [f64; 4] {
        [self.collision, self.alignment, self.spacing, self.distribution]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct RunScores {
    collision: f64,
    alignment: f64,
    spacing: f64,
    distribution: f64,
    reward: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => values[n / 2],
        _ => 0.5 * (values[n / 2 - 1] + values[n / 2]),
    }
}

fn run_one(
    specs: &[CanvasSpec],
    refs: &[Layout],
    cfg: &GrpoConfig,
    rw: &RewardWeights,
    qw: &QualityWeights,
) -> Result<RunScores> {
    let outcome = train(specs, Some(refs), cfg, rw, qw)?;
    let critic = Critic::new(*rw, *qw);
    let n = specs.len() as f64;
    let mut s = RunScores {
        collision: 0.0,
        alignment: 0.0,
        spacing: 0.0,
        distribution: 0.0,
        reward: outcome.log.last().map_or(f64::NAN, |r| r.mean_reward),
    };
    for (spec, reference) in specs.iter().zip(refs) {
        let mode = outcome.params.mode_layout(spec)?;
        let b = critic.score_layout(&mode, spec, Some(reference))?;
        s.collision += b.s_icr / n;
        s.alignment += b.s_align / n;
        s.spacing += b.s_spacing / n;
        s.distribution += b.s_dist / n;
    }
    Ok(s)
}

/// Trains each of the four presets once per seed, scoring the mode layout of
/// every canvas. Rows come back in preset order.
pub fn run_ablation(
    specs: &[CanvasSpec],
    refs: &[Layout],
    base: &GrpoConfig,
    qw: &QualityWeights,
    seeds: &[u64],
) -> Result<Vec<AblationRow>> {
    anyhow::ensure!(!seeds.is_empty(), "at least one seed is required");
    anyhow::ensure!(!specs.is_empty(), "the suite is empty");
    anyhow::ensure!(specs.len() == refs.len(), "every canvas needs a reference layout");
    let jobs: Vec<(usize, u64)> = (0..RewardWeights::PRESETS.len())
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let runs: Vec<RunScores> = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let (name, rw) = RewardWeights::PRESETS[p];
            let cfg = GrpoConfig { seed, ..*base };
            run_one(specs, refs, &cfg, &rw, qw)
                .with_context(|| format!("training {name} with seed {seed}"))
        })
        .collect::<Result<_>>()?;
    let per = seeds.len();
    Ok(RewardWeights::PRESETS
        .iter()
        .zip(runs.chunks(per))
        .map(|(&(name, weights), chunk)| {
            let pick = |f: fn(&RunScores) -> f64| median(&mut chunk.iter().map(f).collect::<Vec<_>>());
            AblationRow {
                preset: name.to_string(),
                weights,
                collision: pick(|r| r.collision),
                alignment: pick(|r| r.alignment),
                spacing: pick(|r| r.spacing),
                distribution: pick(|r| r.distribution),
                reward: pick(|r| r.reward),
            }
        })
        .collect())
}

const COLUMNS: [&str; 9] = [
    "preset",
    "lambda_f",
    "lambda_q",
    "lambda_u",
    "collision",
    "alignment",
    "spacing",
    "distribution",
    "reward",
];

pub fn to_table(rows: &[AblationRow]) -> String {
    let mut out = format!(
        "{:<16} {:>8} {:>8} {:>8} {:>9} {:>9} {:>9} {:>12} {:>8}\n",
        COLUMNS[0], COLUMNS[1], COLUMNS[2], COLUMNS[3], COLUMNS[4], COLUMNS[5], COLUMNS[6], COLUMNS[7], COLUMNS[8]
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<16} {:>8.2} {:>8.2} {:>8.2} {:>9.4} {:>9.4} {:>9.4} {:>12.4} {:>8.4}",
            r.preset,
            r.weights.format,
            r.weights.quality,
            r.weights.iou,
            r.collision,
            r.alignment,
            r.spacing,
            r.distribution,
            r.reward
        );
    }
    out
}

pub fn to_csv(rows: &[AblationRow]) -> String {
    let mut out = COLUMNS.join(",") + "\n";
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.preset,
            r.weights.format,
            r.weights.quality,
            r.weights.iou,
            r.collision,
            r.alignment,
            r.spacing,
            r.distribution,
            r.reward
        );
    }
    out
}
