//! The five layout-quality sub-metrics, each available as a free function and
//! as a named [`QualityTerm`] in a [`TermRegistry`].

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::sync::Arc;

use crate::geometry::BBox;
use crate::layout::{ElementCategory, Layout};

use super::CompatibilityMatrix;

/// Everything a quality term may look at.
#[derive(Debug, Clone, Copy)]
pub struct TermContext<'a> {
    pub layout: &'a Layout,
    pub saliency: &'a [BBox],
    pub compat: &'a CompatibilityMatrix,
    pub alpha: f64,
}

pub trait QualityTerm: Send + Sync {
    /// Registry key, also the breakdown field name.
    fn name(&self) -> &'static str;

    /// Score in `[0, 1]`, higher is better.
    fn score(&self, ctx: &TermContext<'_>) -> f64;
}

/// Mean of `1 - IoU` over incompatible pairs: element pairs the matrix does
/// not flag as intended overlaps, and every non-underlay element against
/// every salient region. Vacuously `1.0` when there are no such pairs.
pub fn inverse_collision(layout: &Layout, saliency: &[BBox], compat: &CompatibilityMatrix) -> f64 {
    let els = &layout.elements;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in els.iter().enumerate() {
        for b in &els[i + 1..] {
            if !compat.intended_overlap(a.category, b.category) {
                total += 1.0 - a.bbox.iou(&b.bbox);
                pairs += 1;
            }
        }
        if compat.must_avoid_saliency(a.category) {
            for s in saliency {
                total += 1.0 - a.bbox.iou(s);
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        1.0
    } else {
        (total / pairs as f64).clamp(0.0, 1.0)
    }
}

fn centers(layout: &Layout) -> Vec<(f64, f64)> {
    layout.elements.iter().map(|e| e.bbox.center()).collect()
}

fn population_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
}

/// Blend of canvas centering and mutual alignment of element centers,
/// weighted by `alpha` toward centering.
pub fn alignment_score(layout: &Layout, alpha: f64) -> f64 {
    let cs = centers(layout);
    if cs.is_empty() {
        return 1.0;
    }
    let n = cs.len() as f64;
    let mean_dist = cs
        .iter()
        .map(|&(x, y)| ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    let to_canvas = 1.0 - mean_dist / SQRT_2;
    let var_x = population_variance(cs.iter().map(|c| c.0));
    let var_y = population_variance(cs.iter().map(|c| c.1));
    let mutual = (1.0 - (var_x + var_y) / 2.0).clamp(0.0, 1.0);
    (alpha * to_canvas + (1.0 - alpha) * mutual).clamp(0.0, 1.0)
}

/// Grid cell (column, row) of a point on the 3x3 canvas partition.
pub fn grid_cell(x: f64, y: f64) -> (usize, usize) {
    let cell = |v: f64| ((3.0 * v).floor().max(0.0) as usize).min(2);
    (cell(x), cell(y))
}

/// Mean of spread variance and 3x3 grid coverage of element centers.
pub fn distribution_score(layout: &Layout) -> f64 {
    let cs = centers(layout);
    if cs.is_empty() {
        return 0.0;
    }
    let n = cs.len() as f64;
    let mx = cs.iter().map(|c| c.0).sum::<f64>() / n;
    let my = cs.iter().map(|c| c.1).sum::<f64>() / n;
    let spread = cs
        .iter()
        .map(|&(x, y)| (x - mx).powi(2) + (y - my).powi(2))
        .sum::<f64>()
        / n
        / 2.0;
    let mut occupied = [[false; 3]; 3];
    for &(x, y) in &cs {
        let (c, r) = grid_cell(x, y);
        occupied[r][c] = true;
    }
    let coverage = occupied.iter().flatten().filter(|&&o| o).count() as f64 / 9.0;
    ((spread + coverage) / 2.0).clamp(0.0, 1.0)
}

/// Uniformity of the gaps between vertically adjacent element centers.
pub fn spacing_consistency(layout: &Layout) -> f64 {
    let mut ys: Vec<(f64, usize)> = layout
        .elements
        .iter()
        .map(|e| (e.bbox.center().1, e.id))
        .collect();
    if ys.len() < 3 {
        return 1.0;
    }
    ys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let gaps: Vec<f64> = ys.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    if mean <= 1e-12 {
        return 1.0;
    }
    let var = population_variance(gaps.iter().copied());
    (1.0 - var / (mean * mean)).clamp(0.0, 1.0)
}

/// Per underlay: the contained fraction of its single overlapping text, or
/// zero when no text or several texts overlap it. Averaged over underlays,
/// vacuously `1.0` without any.
pub fn underlay_text_score(layout: &Layout) -> f64 {
    let texts: Vec<&BBox> = layout
        .of_category(ElementCategory::Text)
        .map(|e| &e.bbox)
        .collect();
    let scores: Vec<f64> = layout
        .of_category(ElementCategory::Underlay)
        .map(|u| {
            let mut hits = texts
                .iter()
                .map(|t| (t, t.intersect_area(&u.bbox)))
                .filter(|(_, a)| *a > 0.0);
            match (hits.next(), hits.next()) {
                (Some((t, _)), None) if u.bbox.contains(t, 0.0) => 1.0,
                (Some((t, inter)), None) => (inter / t.area()).clamp(0.0, 1.0),
                _ => 0.0,
            }
        })
        .collect();
    if scores.is_empty() {
        1.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

macro_rules! term {
    ($ty:ident, $name:literal, |$ctx:ident| $body:expr) => {
        #[derive(Debug, Default, Clone, Copy)]
        pub struct $ty;

        impl QualityTerm for $ty {
            fn name(&self) -> &'static str {
                $name
            }

            fn score(&self, $ctx: &TermContext<'_>) -> f64 {
                $body
            }
        }
    };
}

term!(InverseCollision, "icr", |ctx| inverse_collision(ctx.layout, ctx.saliency, ctx.compat));
term!(Alignment, "align", |ctx| alignment_score(ctx.layout, ctx.alpha));
term!(Distribution, "dist", |ctx| distribution_score(ctx.layout));
term!(Spacing, "spacing", |ctx| spacing_consistency(ctx.layout));
term!(UnderlayText, "underlay", |ctx| underlay_text_score(ctx.layout));

/// Quality terms keyed by name, iterated in registration order.
#[derive(Clone)]
pub struct TermRegistry {
    terms: Vec<Arc<dyn QualityTerm>>,
}

impl std::fmt::Debug for TermRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl Default for TermRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(InverseCollision));
        reg.register(Arc::new(Alignment));
        reg.register(Arc::new(Distribution));
        reg.register(Arc::new(Spacing));
        reg.register(Arc::new(UnderlayText));
        reg
    }
}

impl TermRegistry {
    pub fn empty() -> Self {
        Self { terms: Vec::new() }
    }

    /// Adds a term, replacing any existing one of the same name.
    pub fn register(&mut self, term: Arc<dyn QualityTerm>) {
        match self.terms.iter().position(|t| t.name() == term.name()) {
            Some(i) => self.terms[i] = term,
            None => self.terms.push(term),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn QualityTerm>> {
        self.terms.iter().find(|t| t.name() == name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.terms.iter().map(|t| t.name()).collect()
    }

    pub fn score_all(&self, ctx: &TermContext<'_>) -> BTreeMap<&'static str, f64> {
        self.terms.iter().map(|t| (t.name(), t.score(ctx))).collect()
    }
}
