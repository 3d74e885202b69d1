//! Group-relative policy optimization of a parametric placement policy.
//!
//! Each element slot owns a diagonal Gaussian over four raw coordinates.
//! Draws are squashed by the logistic function and mapped to a box, so every
//! sample is a valid layout. Ratios and divergences are computed on the raw
//! draws, where densities are exact.

use thiserror::Error;

use crate::critique::CritiqueError;
use crate::layout::ElementCategory;

mod grpo;
mod optim;
mod oracle;
mod params;
mod train;

pub use grpo::{
    clipped_term, grpo_objective, grpo_objective_multi, normalize_advantages, sample_group,
    surrogate, Candidate, GroupSample, GrpoConfig,
};
pub use optim::Adam;
pub use oracle::{grid_oracle, Grid, OracleResult, ORACLE_BUDGET};
pub use params::{
    box_from_unit, element_slots, kl_divergence, sigmoid, slot_keys, unit_from_box, PolicyParams,
    Slot, INIT_MEAN_SCALE, LOG_STD_MAX, LOG_STD_MIN,
};
pub use train::{train, train_from, ComponentMeans, TrainOutcome, TrainRecord};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("policy has no slot for element {index} ({category})")]
    MissingSlot { index: usize, category: ElementCategory },
    #[error("training diverged at iteration {iteration}: non-finite reward or gradient")]
    Diverged { iteration: usize },
    #[error("suite is empty")]
    EmptySuite,
    #[error("grid search needs {per_element}^{elements} configurations, above the budget of {budget}")]
    Budget {
        per_element: u64,
        elements: usize,
        budget: u64,
    },
    #[error(transparent)]
    Critique(#[from] CritiqueError),
}
