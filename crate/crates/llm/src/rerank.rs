use std::time::Duration;

use layout_critic::critique::{hybrid_reward, QualityWeights, RewardBreakdown, RewardWeights};
use layout_critic::layout::{parse_dual_output, CanvasSpec, DualLevelOutput, Layout};
use serde::Serialize;

use crate::LlmError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCandidate {
    pub raw: String,
    pub parsed: DualLevelOutput,
    pub reward: RewardBreakdown,
    pub latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RerankResult {
    pub candidates: Vec<ScoredCandidate>,
    pub winner: usize,
}

impl RerankResult {
    pub fn winner(&self) -> &ScoredCandidate {
        &self.candidates[self.winner]
    }

    pub fn winner_layout(&self) -> Option<&Layout> {
        self.winner().parsed.layout.as_ref()
    }

    pub fn set_latencies(&mut self, latencies: &[Duration]) {
        for (c, l) in self.candidates.iter_mut().zip(latencies) {
            c.latency_ms = Some(l.as_secs_f64() * 1e3);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rerank results always serialize")
    }
}

/// Parses and scores every candidate, picking the highest total reward.
/// Ties go to the lowest index.
pub fn rerank(
    spec: &CanvasSpec,
    reference: Option<&Layout>,
    candidates: &[String],
    rw: &RewardWeights,
    qw: &QualityWeights,
) -> Result<RerankResult, LlmError> {
    if candidates.is_empty() {
        return Err(LlmError::Config("no candidates to rerank".into()));
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for raw in candidates {
        let parsed = parse_dual_output(raw, spec);
        let reward = hybrid_reward(&parsed, spec, reference, rw, qw)?;
        scored.push(ScoredCandidate {
            raw: raw.clone(),
            parsed,
            reward,
            latency_ms: None,
        });
    }
    let mut winner = 0;
    for (i, c) in scored.iter().enumerate() {
        if c.reward.r_total > scored[winner].reward.r_total {
            winner = i;
        }
    }
    Ok(RerankResult {
        candidates: scored,
        winner,
    })
}
