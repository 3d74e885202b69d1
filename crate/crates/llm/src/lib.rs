//! Best-of-N layout generation against chat-completion HTTP endpoints.
//!
//! [`build_prompt`] turns a canvas into instructions for a dual-level
//! response, [`sample_candidates`] collects responses, and [`rerank`] scores
//! them with the hybrid reward and keeps the best.

use layout_critic::critique::{CritiqueError, QualityWeights, RewardWeights};
use layout_critic::layout::{CanvasSpec, Layout};
use thiserror::Error;

mod client;
mod prompt;
mod rerank;

pub use client::{sample_candidates, sample_with_latency, EndpointConfig, Sample, DEFAULT_KEY_VAR};
pub use prompt::build_prompt;
pub use rerank::{rerank, RerankResult, ScoredCandidate};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("every request failed; last error: {0}")]
    Unreachable(String),
    #[error(transparent)]
    Critique(#[from] CritiqueError),
}

/// Prompts the endpoint `n` times and reranks the responses.
pub fn best_of_n(
    cfg: &EndpointConfig,
    spec: &CanvasSpec,
    reference: Option<&Layout>,
    n: usize,
    rw: &RewardWeights,
    qw: &QualityWeights,
) -> Result<RerankResult, LlmError> {
    let samples = sample_with_latency(cfg, &build_prompt(spec), n)?;
    let texts: Vec<String> = samples.iter().map(|s| s.text.clone()).collect();
    let mut result = rerank(spec, reference, &texts, rw, qw)?;
    let latencies: Vec<_> = samples.iter().map(|s| s.latency).collect();
    result.set_latencies(&latencies);
    Ok(result)
}
