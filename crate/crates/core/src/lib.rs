//! Spatial critique and group-relative policy optimization for
//! content-aware graphic layouts.
//!
//! A canvas is described by a [`layout::CanvasSpec`]: pixel dimensions,
//! typed elements whose geometry is masked, and salient regions to avoid.
//! Candidate layouts are scored by the hybrid reward in [`critique`],
//! evaluated with the benchmark metrics in [`metrics`], and optimized with
//! the GRPO trainer in [`policy`]. [`data`] reads annotation files and
//! generates synthetic canvases; [`render`] draws layouts as SVG.

pub mod critique;
pub mod data;
pub mod geometry;
pub mod layout;
pub mod metrics;
pub mod policy;
pub mod render;

pub use critique::{Critic, QualityWeights, RewardBreakdown, RewardWeights};
pub use geometry::BBox;
pub use layout::{CanvasSpec, DualLevelOutput, ElementCategory, Layout, ParseStatus};
pub use policy::{GrpoConfig, PolicyParams};
pub use render::{render_svg, RenderStyle};
