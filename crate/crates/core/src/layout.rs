//! Canvas environments, concrete layouts and the `<design>/<layout>` output
//! format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::{BBox, GeometryError};

/// Literal placed in the environment JSON where geometry is to be predicted.
pub const MASK_TOKEN: &str = "[MASK]";

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("invalid environment JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("canvas must have positive pixel dimensions")]
    EmptyCanvas,
    #[error("canvas has no elements")]
    NoElements,
    #[error("element ids must be dense 0..{n}, found {found:?}")]
    SparseIds { n: usize, found: Vec<usize> },
    #[error("saliency box {index}: {source}")]
    Saliency {
        index: usize,
        #[source]
        source: GeometryError,
    },
    #[error("element {id}: {source}")]
    Element {
        id: usize,
        #[source]
        source: GeometryError,
    },
    #[error("unknown element category '{0}'")]
    UnknownCategory(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementCategory {
    Text,
    Logo,
    Underlay,
    Embellishment,
}

impl ElementCategory {
    pub const ALL: [ElementCategory; 4] = [
        ElementCategory::Text,
        ElementCategory::Logo,
        ElementCategory::Underlay,
        ElementCategory::Embellishment,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Text => "text",
            Self::Logo => "logo",
            Self::Underlay => "underlay",
            Self::Embellishment => "embellishment",
        }
    }
}

impl fmt::Display for ElementCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElementCategory {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| LayoutError::UnknownCategory(s.to_string()))
    }
}

/// Geometry of an environment element: hidden behind the mask token, or given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Masked,
    Known(BBox),
}

impl Serialize for Geometry {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Geometry::Masked => serializer.serialize_str(MASK_TOKEN),
            Geometry::Known(b) => b.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Geometry {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match Value::deserialize(deserializer)? {
            Value::String(s) if s == MASK_TOKEN => Ok(Geometry::Masked),
            v @ Value::Object(_) => BBox::deserialize(v)
                .map(Geometry::Known)
                .map_err(de::Error::custom),
            other => Err(de::Error::custom(format!(
                "geometry must be \"{MASK_TOKEN}\" or a box, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub id: usize,
    pub category: ElementCategory,
    pub geometry: Geometry,
}

/// The environment handed to a layout policy: canvas, typed elements and
/// salient regions to keep clear.
#[derive(Debug, Clone, PartialEq)]
pub struct CanvasSpec {
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub elements: Vec<ElementSpec>,
    pub saliency: Vec<BBox>,
}

#[derive(Serialize, Deserialize)]
struct CanvasDims {
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentDoc {
    canvas: CanvasDims,
    elements: Vec<ElementSpec>,
    saliency: Vec<BBox>,
}

impl CanvasSpec {
    /// Builds a spec whose elements are all masked, with ids in list order.
    pub fn masked(
        canvas_width: u32,
        canvas_height: u32,
        categories: &[ElementCategory],
        saliency: Vec<BBox>,
    ) -> Result<Self, LayoutError> {
        let elements = categories
            .iter()
            .enumerate()
            .map(|(id, &category)| ElementSpec {
                id,
                category,
                geometry: Geometry::Masked,
            })
            .collect();
        let spec = Self {
            canvas_width,
            canvas_height,
            elements,
            saliency,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        if self.canvas_width == 0 || self.canvas_height == 0 {
            return Err(LayoutError::EmptyCanvas);
        }
        if self.elements.is_empty() {
            return Err(LayoutError::NoElements);
        }
        let mut ids: Vec<usize> = self.elements.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        if ids.iter().enumerate().any(|(i, &id)| i != id) {
            return Err(LayoutError::SparseIds {
                n: self.elements.len(),
                found: ids,
            });
        }
        for e in &self.elements {
            if let Geometry::Known(b) = e.geometry {
                b.check()
                    .map_err(|source| LayoutError::Element { id: e.id, source })?;
            }
        }
        for (index, s) in self.saliency.iter().enumerate() {
            s.check()
                .map_err(|source| LayoutError::Saliency { index, source })?;
        }
        Ok(())
    }

    pub fn categories(&self) -> Vec<ElementCategory> {
        self.elements.iter().map(|e| e.category).collect()
    }

    pub fn category_counts(&self) -> BTreeMap<ElementCategory, usize> {
        count_categories(self.elements.iter().map(|e| e.category))
    }

    /// Copy of this spec with every element geometry masked.
    pub fn masked_copy(&self) -> Self {
        let mut spec = self.clone();
        for e in &mut spec.elements {
            e.geometry = Geometry::Masked;
        }
        spec
    }

    pub fn to_json(&self) -> String {
        serialize_spec(self)
    }

    pub fn from_json(text: &str) -> Result<Self, LayoutError> {
        let doc: EnvironmentDoc = serde_json::from_str(text)?;
        let spec = Self {
            canvas_width: doc.canvas.width,
            canvas_height: doc.canvas.height,
            elements: doc.elements,
            saliency: doc.saliency,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Canonical environment document, pretty-printed with a fixed key order.
pub fn serialize_spec(spec: &CanvasSpec) -> String {
    let doc = EnvironmentDoc {
        canvas: CanvasDims {
            width: spec.canvas_width,
            height: spec.canvas_height,
        },
        elements: spec.elements.clone(),
        saliency: spec.saliency.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("environment documents always serialize")
}

fn count_categories(it: impl Iterator<Item = ElementCategory>) -> BTreeMap<ElementCategory, usize> {
    let mut counts = BTreeMap::new();
    for c in it {
        *counts.entry(c).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutElement {
    pub id: usize,
    pub category: ElementCategory,
    pub bbox: BBox,
}

/// A concrete box for every element of a canvas, ordered by id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Layout {
    pub elements: Vec<LayoutElement>,
}

#[derive(Serialize, Deserialize)]
struct WireElement {
    category: ElementCategory,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct WireLayout {
    elements: Vec<WireElement>,
}

impl Layout {
    pub fn new(elements: Vec<LayoutElement>) -> Self {
        let mut elements = elements;
        elements.sort_by_key(|e| e.id);
        Self { elements }
    }

    /// Pairs boxes with the canvas spec's elements in id order.
    pub fn from_boxes(spec: &CanvasSpec, boxes: &[BBox]) -> Self {
        let elements = spec
            .elements
            .iter()
            .zip(boxes)
            .map(|(e, &bbox)| LayoutElement {
                id: e.id,
                category: e.category,
                bbox,
            })
            .collect();
        Self::new(elements)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn boxes(&self) -> Vec<BBox> {
        self.elements.iter().map(|e| e.bbox).collect()
    }

    pub fn of_category(&self, category: ElementCategory) -> impl Iterator<Item = &LayoutElement> {
        self.elements.iter().filter(move |e| e.category == category)
    }

    pub fn category_counts(&self) -> BTreeMap<ElementCategory, usize> {
        count_categories(self.elements.iter().map(|e| e.category))
    }

    /// The `<layout>` block body: categories and boxes, ids implied by order.
    pub fn to_layout_json(&self) -> String {
        let wire = WireLayout {
            elements: self
                .elements
                .iter()
                .map(|e| WireElement {
                    category: e.category,
                    x: e.bbox.x,
                    y: e.bbox.y,
                    w: e.bbox.w,
                    h: e.bbox.h,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&wire).expect("layouts always serialize")
    }

    /// Parses a `<layout>` body and assigns ids against `spec`; the
    /// counterpart of [`Layout::to_layout_json`].
    pub fn from_layout_json(text: &str, spec: &CanvasSpec) -> Result<Self, String> {
        let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match_to_spec(&value, spec)
    }

    /// Renders a dual-level response carrying this layout.
    pub fn to_dual_output(&self, design_trace: &str) -> String {
        format!(
            "<design>\n{design_trace}\n</design>\n<layout>\n{}\n</layout>",
            self.to_layout_json()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParseStatus {
    MissingBlock,
    BadJson,
    SchemaMismatch,
    Valid,
}

/// A parsed model response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualLevelOutput {
    pub design_trace: String,
    pub layout: Option<Layout>,
    pub status: ParseStatus,
    /// Why the response failed to parse, empty when valid.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl DualLevelOutput {
    /// Wraps a layout known to match its spec.
    pub fn valid(layout: Layout) -> Self {
        Self {
            design_trace: String::new(),
            layout: Some(layout),
            status: ParseStatus::Valid,
            detail: String::new(),
        }
    }

    fn failed(status: ParseStatus, design_trace: String, detail: impl Into<String>) -> Self {
        Self {
            design_trace,
            layout: None,
            status,
            detail: detail.into(),
        }
    }
}

fn block<'a>(raw: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = raw.find(&open)? + open.len();
    let len = raw[start..].find(&close)?;
    Some(&raw[start..start + len])
}

/// Classifies arbitrary model text into one of the four parse levels.
pub fn parse_dual_output(raw: &str, spec: &CanvasSpec) -> DualLevelOutput {
    let design = block(raw, "design");
    let body = block(raw, "layout");
    let (design, body) = match (design, body) {
        (Some(d), Some(l)) => (d.trim().to_string(), l),
        (d, _) => {
            let trace = d.map(|d| d.trim().to_string()).unwrap_or_default();
            return DualLevelOutput::failed(ParseStatus::MissingBlock, trace, "missing block");
        }
    };
    let value: Value = match serde_json::from_str(body.trim()) {
        Ok(v) => v,
        Err(e) => return DualLevelOutput::failed(ParseStatus::BadJson, design, e.to_string()),
    };
    match match_to_spec(&value, spec) {
        Ok(layout) => DualLevelOutput {
            design_trace: design,
            layout: Some(layout),
            status: ParseStatus::Valid,
            detail: String::new(),
        },
        Err(why) => DualLevelOutput::failed(ParseStatus::SchemaMismatch, design, why),
    }
}

/// Checks a parsed `<layout>` body against the canvas spec and assigns ids: the
/// k-th entry of a category takes the id of the canvas spec's k-th element of that
/// category.
fn match_to_spec(value: &Value, spec: &CanvasSpec) -> Result<Layout, String> {
    let wire: WireLayout =
        serde_json::from_value(value.clone()).map_err(|e| format!("layout schema: {e}"))?;
    let found = count_categories(wire.elements.iter().map(|e| e.category));
    let expected = spec.category_counts();
    if found != expected {
        return Err(format!(
            "element counts {} do not match spec {}",
            describe_counts(&found),
            describe_counts(&expected)
        ));
    }
    let mut ids_by_category: BTreeMap<ElementCategory, std::vec::IntoIter<usize>> = BTreeMap::new();
    for c in ElementCategory::ALL {
        let ids: Vec<usize> = spec
            .elements
            .iter()
            .filter(|e| e.category == c)
            .map(|e| e.id)
            .collect();
        ids_by_category.insert(c, ids.into_iter());
    }
    let mut elements = Vec::with_capacity(wire.elements.len());
    for (pos, w) in wire.elements.iter().enumerate() {
        let bbox = BBox::new(w.x, w.y, w.w, w.h)
            .map_err(|e| format!("entry {pos} ({}): {e}", w.category))?;
        let id = ids_by_category
            .get_mut(&w.category)
            .and_then(Iterator::next)
            .expect("counts already matched");
        elements.push(LayoutElement {
            id,
            category: w.category,
            bbox,
        });
    }
    Ok(Layout::new(elements))
}

fn describe_counts(counts: &BTreeMap<ElementCategory, usize>) -> String {
    let parts: Vec<String> = counts.iter().map(|(c, n)| format!("{c}={n}")).collect();
    format!("{{{}}}", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub ok: bool,
    pub violations: Vec<String>,
}

/// Checks per-category counts against the canvas spec and every box against the
/// canvas invariants.
pub fn validate_layout(layout: &Layout, spec: &CanvasSpec) -> Validation {
    let mut violations = Vec::new();
    let found = layout.category_counts();
    for c in ElementCategory::ALL {
        let want = spec.category_counts().get(&c).copied().unwrap_or(0);
        let have = found.get(&c).copied().unwrap_or(0);
        if want != have {
            violations.push(format!("category {c}: expected {want}, found {have}"));
        }
    }
    for e in &layout.elements {
        match e.bbox.check() {
            Ok(()) => {}
            Err(GeometryError::ExceedsCanvas { .. }) => {
                violations.push(format!("element {} exceeds canvas", e.id))
            }
            Err(err) => violations.push(format!("element {}: {err}", e.id)),
        }
    }
    Validation {
        ok: violations.is_empty(),
        violations,
    }
}
