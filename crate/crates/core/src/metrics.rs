//! Benchmark metrics: overlay (lower is better), underlay effectiveness
//! (higher is better) and occlusion of salient regions (lower is better).

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rasterized_union_overlap, BBox, DEFAULT_RESOLUTION};
use crate::layout::{ElementCategory, Layout};

/// Area slack when testing full containment.
pub const CONTAIN_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("cannot evaluate an empty batch")]
    EmptyBatch,
    #[error("unknown metric '{0}'")]
    UnknownMetric(String),
}

/// Mean pairwise IoU among non-underlay elements.
pub fn overlay(layout: &Layout) -> f64 {
    let fg: Vec<&BBox> = layout
        .elements
        .iter()
        .filter(|e| e.category != ElementCategory::Underlay)
        .map(|e| &e.bbox)
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in fg.iter().enumerate() {
        for b in &fg[i + 1..] {
            total += a.iou(b);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

/// Underlay effectiveness for one layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnderlayEffect {
    pub value: f64,
    /// No underlays were present; `value` is 1.0 by convention.
    pub vacuous: bool,
}

/// Fraction of underlays that fully contain at least one non-underlay element.
pub fn underlay_effectiveness(layout: &Layout) -> UnderlayEffect {
    let underlays: Vec<&BBox> = layout
        .of_category(ElementCategory::Underlay)
        .map(|e| &e.bbox)
        .collect();
    if underlays.is_empty() {
        return UnderlayEffect {
            value: 1.0,
            vacuous: true,
        };
    }
    let effective = underlays
        .iter()
        .filter(|u| {
            layout
                .elements
                .iter()
                .filter(|e| e.category != ElementCategory::Underlay)
                .any(|e| u.contains(&e.bbox, CONTAIN_TOL))
        })
        .count();
    UnderlayEffect {
        value: effective as f64 / underlays.len() as f64,
        vacuous: false,
    }
}

/// Fraction of the salient area covered by any element.
pub fn occlusion(layout: &Layout, saliency: &[BBox], resolution: usize) -> f64 {
    rasterized_union_overlap(&layout.boxes(), saliency, resolution)
}

/// A named per-layout metric, selectable at runtime.
pub trait LayoutMetric: Send + Sync {
    fn name(&self) -> &'static str;
    fn lower_is_better(&self) -> bool;
    fn measure(&self, layout: &Layout, saliency: &[BBox]) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct Overlay;

impl LayoutMetric for Overlay {
    fn name(&self) -> &'static str {
        "ove"
    }
    fn lower_is_better(&self) -> bool {
        true
    }
    fn measure(&self, layout: &Layout, _: &[BBox]) -> f64 {
        overlay(layout)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UnderlayEffectiveness;

impl LayoutMetric for UnderlayEffectiveness {
    fn name(&self) -> &'static str {
        "und"
    }
    fn lower_is_better(&self) -> bool {
        false
    }
    fn measure(&self, layout: &Layout, _: &[BBox]) -> f64 {
        underlay_effectiveness(layout).value
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Occlusion {
    pub resolution: usize,
}

impl Default for Occlusion {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

impl LayoutMetric for Occlusion {
    fn name(&self) -> &'static str {
        "occ"
    }
    fn lower_is_better(&self) -> bool {
        true
    }
    fn measure(&self, layout: &Layout, saliency: &[BBox]) -> f64 {
        occlusion(layout, saliency, self.resolution)
    }
}

#[derive(Clone)]
pub struct MetricRegistry {
    metrics: Vec<Arc<dyn LayoutMetric>>,
}

impl Default for MetricRegistry {
    fn default() -> Self {
        Self::with_resolution(DEFAULT_RESOLUTION)
    }
}

impl MetricRegistry {
    pub fn with_resolution(resolution: usize) -> Self {
        Self {
            metrics: vec![
                Arc::new(Overlay),
                Arc::new(UnderlayEffectiveness),
                Arc::new(Occlusion { resolution }),
            ],
        }
    }

    pub fn register(&mut self, metric: Arc<dyn LayoutMetric>) {
        match self.metrics.iter().position(|m| m.name() == metric.name()) {
            Some(i) => self.metrics[i] = metric,
            None => self.metrics.push(metric),
        }
    }

    pub fn get(&self, name: &str) -> Result<&Arc<dyn LayoutMetric>, MetricsError> {
        self.metrics
            .iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| MetricsError::UnknownMetric(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.metrics.iter().map(|m| m.name()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutMetrics {
    pub ove: f64,
    pub und: f64,
    pub und_vacuous: bool,
    pub occ: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub resolution: usize,
    pub keep_per_layout: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            keep_per_layout: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ove: f64,
    /// Mean over layouts that contain underlays; 1.0 when none do.
    pub und: f64,
    pub und_vacuous: bool,
    pub occ: f64,
    pub n_layouts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_layout: Option<Vec<LayoutMetrics>>,
}

pub fn evaluate_layout(layout: &Layout, saliency: &[BBox], resolution: usize) -> LayoutMetrics {
    let und = underlay_effectiveness(layout);
    LayoutMetrics {
        ove: overlay(layout),
        und: und.value,
        und_vacuous: und.vacuous,
        occ: occlusion(layout, saliency, resolution),
    }
}

pub fn evaluate_batch(
    batch: &[(Layout, Vec<BBox>)],
    opts: &EvalOptions,
) -> Result<MetricsReport, MetricsError> {
    if batch.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let per: Vec<LayoutMetrics> = batch
        .par_iter()
        .map(|(l, s)| evaluate_layout(l, s, opts.resolution))
        .collect();
    let n = per.len() as f64;
    let ove = per.iter().map(|m| m.ove).sum::<f64>() / n;
    let occ = per.iter().map(|m| m.occ).sum::<f64>() / n;
    let with_underlays: Vec<f64> = per
        .iter()
        .filter(|m| !m.und_vacuous)
        .map(|m| m.und)
        .collect();
    let (und, und_vacuous) = if with_underlays.is_empty() {
        (1.0, true)
    } else {
        (
            with_underlays.iter().sum::<f64>() / with_underlays.len() as f64,
            false,
        )
    };
    Ok(MetricsReport {
        ove,
        und,
        und_vacuous,
        occ,
        n_layouts: per.len(),
        per_layout: opts.keep_per_layout.then_some(per),
    })
}

impl MetricsReport {
    /// Per-layout CSV with a fixed column order.
    pub fn to_csv(&self, ids: &[String]) -> String {
        let mut out = String::from("layout_id,ove,und,occ\n");
        if let Some(per) = &self.per_layout {
            for (i, m) in per.iter().enumerate() {
                let id = ids.get(i).cloned().unwrap_or_else(|| i.to_string());
                out.push_str(&format!("{id},{:.6},{:.6},{:.6}\n", m.ove, m.und, m.occ));
            }
        }
        out
    }

    /// Aggregate JSON without the per-layout rows.
    pub fn aggregate_json(&self) -> String {
        let mut agg = self.clone();
        agg.per_layout = None;
        serde_json::to_string_pretty(&agg).expect("reports always serialize")
    }
}
