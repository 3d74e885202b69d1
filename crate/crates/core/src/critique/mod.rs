//! Multi-objective spatial critique: format, layout quality and reference
//! IoU rewards, combined into one hybrid scalar.

pub mod terms;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;
use crate::layout::{CanvasSpec, DualLevelOutput, ElementCategory, Layout, ParseStatus};

pub use terms::{
    alignment_score, distribution_score, inverse_collision, spacing_consistency,
    underlay_text_score, QualityTerm, TermContext, TermRegistry,
};

#[derive(Debug, Error, PartialEq)]
pub enum CritiqueError {
    #[error("layouts are not comparable: {0}")]
    NotComparable(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

/// Which category pairs may overlap on purpose. Anything not listed is an
/// unintended collision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityMatrix {
    intended: BTreeSet<(ElementCategory, ElementCategory)>,
    /// Underlays may sit on salient regions.
    pub underlay_over_saliency: bool,
}

impl Default for CompatibilityMatrix {
    fn default() -> Self {
        let mut m = Self {
            intended: BTreeSet::new(),
            underlay_over_saliency: true,
        };
        m.allow(ElementCategory::Underlay, ElementCategory::Text);
        m
    }
}

impl CompatibilityMatrix {
    /// No intended overlaps at all.
    pub fn strict() -> Self {
        Self {
            intended: BTreeSet::new(),
            underlay_over_saliency: false,
        }
    }

    pub fn allow(&mut self, a: ElementCategory, b: ElementCategory) {
        self.intended.insert(ordered(a, b));
    }

    pub fn intended_overlap(&self, a: ElementCategory, b: ElementCategory) -> bool {
        self.intended.contains(&ordered(a, b))
    }

    pub fn must_avoid_saliency(&self, c: ElementCategory) -> bool {
        !(self.underlay_over_saliency && c == ElementCategory::Underlay)
    }
}

fn ordered(a: ElementCategory, b: ElementCategory) -> (ElementCategory, ElementCategory) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Sub-weights of the quality reward and the centering balance `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityWeights {
    pub icr: f64,
    pub align: f64,
    pub dist: f64,
    pub spacing: f64,
    pub underlay: f64,
    pub alpha: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        Self {
            icr: 0.2,
            align: 0.2,
            dist: 0.2,
            spacing: 0.2,
            underlay: 0.2,
            alpha: 0.5,
        }
    }
}

impl QualityWeights {
    pub fn validate(&self) -> Result<(), CritiqueError> {
        let ws = [self.icr, self.align, self.dist, self.spacing, self.underlay];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(CritiqueError::InvalidWeights(
                "quality weights must be non-negative".into(),
            ));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CritiqueError::InvalidWeights(format!(
                "quality weights sum to {sum}, expected 1"
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(CritiqueError::InvalidWeights(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Weight for a registry term name; unknown terms weigh nothing.
    pub fn weight(&self, term: &str) -> f64 {
        match term {
            "icr" => self.icr,
            "align" => self.align,
            "dist" => self.dist,
            "spacing" => self.spacing,
            "underlay" => self.underlay,
            _ => 0.0,
        }
    }
}

/// Mixing weights of the hybrid reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub format: f64,
    pub quality: f64,
    pub iou: f64,
}

impl RewardWeights {
    pub const FORMAT_FOCUSED: Self = Self::new(0.5, 0.4, 0.1);
    pub const QUALITY_FOCUSED: Self = Self::new(0.1, 0.8, 0.1);
    pub const IOU_FOCUSED: Self = Self::new(0.1, 0.1, 0.8);
    pub const BALANCED_HYBRID: Self = Self::new(0.1, 0.45, 0.45);

    /// The four ablation presets in reporting order.
    pub const PRESETS: [(&'static str, Self); 4] = [
        ("format_focused", Self::FORMAT_FOCUSED),
        ("quality_focused", Self::QUALITY_FOCUSED),
        ("iou_focused", Self::IOU_FOCUSED),
        ("balanced_hybrid", Self::BALANCED_HYBRID),
    ];

    pub const fn new(format: f64, quality: f64, iou: f64) -> Self {
        Self {
            format,
            quality,
            iou,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        Self::PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, w)| *w)
    }

    pub fn validate(&self) -> Result<(), CritiqueError> {
        let ws = [self.format, self.quality, self.iou];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(CritiqueError::InvalidWeights(
                "reward weights must be non-negative".into(),
            ));
        }
        if ws.iter().all(|w| *w == 0.0) {
            return Err(CritiqueError::InvalidWeights(
                "at least one reward weight must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Weights actually applied: without a reference the IoU weight moves
    /// onto quality.
    pub fn effective(&self, has_reference: bool) -> Self {
        if has_reference {
            *self
        } else {
            Self::new(self.format, self.quality + self.iou, 0.0)
        }
    }
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self::BALANCED_HYBRID
    }
}

impl FromStr for RewardWeights {
    type Err = CritiqueError;

    /// A preset name or three comma-separated numbers `f,q,u`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(w) = Self::preset(s.trim()) {
            return Ok(w);
        }
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || {
            CritiqueError::InvalidWeights(format!(
                "expected a preset name or 'f,q,u', got '{s}'"
            ))
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let w = Self::new(nums[0], nums[1], nums[2]);
        w.validate()?;
        Ok(w)
    }
}

impl fmt::Display for RewardWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.format, self.quality, self.iou)
    }
}

/// All reward components for one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    #[serde(rename = "format")]
    pub r_format: f64,
    #[serde(rename = "icr")]
    pub s_icr: f64,
    #[serde(rename = "align")]
    pub s_align: f64,
    #[serde(rename = "dist")]
    pub s_dist: f64,
    #[serde(rename = "spacing")]
    pub s_spacing: f64,
    #[serde(rename = "underlay")]
    pub s_underlay: f64,
    #[serde(rename = "quality")]
    pub r_quality: f64,
    #[serde(rename = "iou")]
    pub r_iou: Option<f64>,
    #[serde(rename = "total")]
    pub r_total: f64,
}

impl RewardBreakdown {
    /// Every component in the order of the JSON keys; a missing IoU reads 0.
    pub fn components(&self) -> [f64; 9] {
        [
            self.r_format,
            self.s_icr,
            self.s_align,
            self.s_dist,
            self.s_spacing,
            self.s_underlay,
            self.r_quality,
            self.r_iou.unwrap_or(0.0),
            self.r_total,
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("breakdowns always serialize")
    }
}

pub fn format_reward(out: &DualLevelOutput) -> f64 {
    match out.status {
        ParseStatus::MissingBlock => 0.1,
        ParseStatus::BadJson => 0.2,
        ParseStatus::SchemaMismatch => 0.5,
        ParseStatus::Valid => 1.0,
    }
}

/// Mean IoU over reference elements after greedy matching within each
/// category: highest IoU first, ties to the smaller predicted id, then the
/// smaller reference id.
pub fn iou_reward(layout: &Layout, reference: &Layout) -> Result<f64, CritiqueError> {
    if layout.category_counts() != reference.category_counts() {
        return Err(CritiqueError::NotComparable(
            "per-category element counts differ".into(),
        ));
    }
    if reference.is_empty() {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for category in ElementCategory::ALL {
        let preds: Vec<_> = layout.of_category(category).collect();
        let refs: Vec<_> = reference.of_category(category).collect();
        let mut pairs = Vec::with_capacity(preds.len() * refs.len());
        for p in &preds {
            for r in &refs {
                pairs.push((p.bbox.iou(&r.bbox), p.id, r.id));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_p = BTreeSet::new();
        let mut used_r = BTreeSet::new();
        for (iou, p, r) in pairs {
            if used_p.contains(&p) || used_r.contains(&r) {
                continue;
            }
            used_p.insert(p);
            used_r.insert(r);
            total += iou;
        }
    }
    Ok((total / reference.len() as f64).clamp(0.0, 1.0))
}

/// Sub-scores of the quality reward.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QualityScores {
    pub icr: f64,
    pub align: f64,
    pub dist: f64,
    pub spacing: f64,
    pub underlay: f64,
}

impl QualityScores {
    pub fn weighted(&self, qw: &QualityWeights) -> f64 {
        (qw.icr * self.icr
            + qw.align * self.align
            + qw.dist * self.dist
            + qw.spacing * self.spacing
            + qw.underlay * self.underlay)
            .clamp(0.0, 1.0)
    }
}

pub fn quality_scores(
    layout: &Layout,
    saliency: &[BBox],
    alpha: f64,
    compat: &CompatibilityMatrix,
) -> QualityScores {
    QualityScores {
        icr: inverse_collision(layout, saliency, compat),
        align: alignment_score(layout, alpha),
        dist: distribution_score(layout),
        spacing: spacing_consistency(layout),
        underlay: underlay_text_score(layout),
    }
}

/// Weighted quality reward with its sub-scores.
pub fn quality_reward(
    layout: &Layout,
    saliency: &[BBox],
    qw: &QualityWeights,
    compat: &CompatibilityMatrix,
) -> (f64, QualityScores) {
    let s = quality_scores(layout, saliency, qw.alpha, compat);
    (s.weighted(qw), s)
}

/// Quality reward driven by an arbitrary term registry. Terms are weighted
/// by [`QualityWeights::weight`]; the five built-in names fill the scores.
pub fn quality_reward_with(
    registry: &TermRegistry,
    layout: &Layout,
    saliency: &[BBox],
    qw: &QualityWeights,
    compat: &CompatibilityMatrix,
) -> (f64, QualityScores) {
    let ctx = TermContext {
        layout,
        saliency,
        compat,
        alpha: qw.alpha,
    };
    let scores = registry.score_all(&ctx);
    let total = scores
        .iter()
        .map(|(name, s)| qw.weight(name) * s)
        .sum::<f64>()
        .clamp(0.0, 1.0);
    let get = |k: &str| scores.get(k).copied().unwrap_or(0.0);
    let s = QualityScores {
        icr: get("icr"),
        align: get("align"),
        dist: get("dist"),
        spacing: get("spacing"),
        underlay: get("underlay"),
    };
    (total, s)
}

/// Everything needed to score candidates for one canvas.
#[derive(Debug, Clone)]
pub struct Critic {
    pub rewards: RewardWeights,
    pub quality: QualityWeights,
    pub compat: CompatibilityMatrix,
}

impl Critic {
    pub fn new(rewards: RewardWeights, quality: QualityWeights) -> Self {
        Self {
            rewards,
            quality,
            compat: CompatibilityMatrix::default(),
        }
    }

    pub fn score(
        &self,
        out: &DualLevelOutput,
        spec: &CanvasSpec,
        reference: Option<&Layout>,
    ) -> Result<RewardBreakdown, CritiqueError> {
        hybrid_reward_with(out, spec, reference, &self.rewards, &self.quality, &self.compat)
    }

    /// Scores a layout already known to match the canvas spec.
    pub fn score_layout(
        &self,
        layout: &Layout,
        spec: &CanvasSpec,
        reference: Option<&Layout>,
    ) -> Result<RewardBreakdown, CritiqueError> {
        let (quality, s) = quality_reward(layout, &spec.saliency, &self.quality, &self.compat);
        combine(1.0, quality, s, Some(layout), reference, &self.rewards)
    }
}

/// Hybrid reward with the default compatibility matrix.
pub fn hybrid_reward(
    out: &DualLevelOutput,
    spec: &CanvasSpec,
    reference: Option<&Layout>,
    rw: &RewardWeights,
    qw: &QualityWeights,
) -> Result<RewardBreakdown, CritiqueError> {
    hybrid_reward_with(out, spec, reference, rw, qw, &CompatibilityMatrix::default())
}

/// Unparsable outputs earn only format credit; the only error is a
/// reference that cannot be compared with the canvas spec's elements.
pub fn hybrid_reward_with(
    out: &DualLevelOutput,
    spec: &CanvasSpec,
    reference: Option<&Layout>,
    rw: &RewardWeights,
    qw: &QualityWeights,
    compat: &CompatibilityMatrix,
) -> Result<RewardBreakdown, CritiqueError> {
    if let Some(r) = reference {
        if r.category_counts() != spec.category_counts() {
            return Err(CritiqueError::NotComparable(
                "reference categories do not match the canvas spec".into(),
            ));
        }
    }
    let r_format = format_reward(out);
    match (&out.status, &out.layout) {
        (ParseStatus::Valid, Some(layout)) => {
            let (quality, s) = quality_reward(layout, &spec.saliency, qw, compat);
            combine(r_format, quality, s, Some(layout), reference, rw)
        }
        _ => combine(r_format, 0.0, QualityScores::default(), None, reference, rw),
    }
}

fn combine(
    r_format: f64,
    r_quality: f64,
    s: QualityScores,
    layout: Option<&Layout>,
    reference: Option<&Layout>,
    rw: &RewardWeights,
) -> Result<RewardBreakdown, CritiqueError> {
    let r_iou = match (layout, reference) {
        (Some(l), Some(r)) => Some(iou_reward(l, r)?),
        (None, Some(_)) => Some(0.0),
        (_, None) => None,
    };
    let eff = rw.effective(reference.is_some());
    let r_total = (eff.format * r_format + eff.quality * r_quality + eff.iou * r_iou.unwrap_or(0.0))
        .clamp(0.0, 1.0);
    Ok(RewardBreakdown {
        r_format,
        s_icr: s.icr,
        s_align: s.align,
        s_dist: s.dist,
        s_spacing: s.spacing,
        s_underlay: s.underlay,
        r_quality,
        r_iou,
        r_total,
    })
}
