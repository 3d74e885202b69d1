//! Canonical JSONL annotation records: one canvas per line with pixel boxes.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::geometry::{BBox, BOX_EPS};
use crate::layout::{CanvasSpec, ElementCategory, ElementSpec, Geometry, Layout, LayoutElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanvasSize {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedElement {
    pub category: ElementCategory,
    pub bbox_px: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyBox {
    pub bbox_px: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub id: String,
    pub canvas: CanvasSize,
    pub split: Split,
    pub elements: Vec<AnnotatedElement>,
    pub saliency: Vec<SaliencyBox>,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<(), String> {
        let CanvasSize { width, height } = self.canvas;
        if width == 0 || height == 0 {
            return Err("canvas has zero size".into());
        }
        if self.elements.is_empty() {
            return Err("record has no elements".into());
        }
        let (w, h) = (width as f64, height as f64);
        let check = |what: String, [x, y, bw, bh]: [f64; 4]| -> Result<(), String> {
            if ![x, y, bw, bh].iter().all(|v| v.is_finite()) {
                return Err(format!("{what} has non-finite coordinates"));
            }
            if bw <= 0.0 || bh <= 0.0 {
                return Err(format!("{what} has non-positive size"));
            }
            if x < 0.0 || y < 0.0 || x + bw > w * (1.0 + BOX_EPS) || y + bh > h * (1.0 + BOX_EPS) {
                return Err(format!("{what} exceeds the {width}x{height} canvas"));
            }
            Ok(())
        };
        for (i, e) in self.elements.iter().enumerate() {
            check(format!("element {i}"), e.bbox_px)?;
        }
        for (i, s) in self.saliency.iter().enumerate() {
            check(format!("saliency box {i}"), s.bbox_px)?;
        }
        Ok(())
    }

    /// Builds a record from a spec and a layout in normalized coordinates.
    pub fn from_layout(id: impl Into<String>, split: Split, spec: &CanvasSpec, layout: &Layout) -> Self {
        let (w, h) = (spec.canvas_width as f64, spec.canvas_height as f64);
        let px = |b: &BBox| [b.x * w, b.y * h, b.w * w, b.h * h];
        Self {
            id: id.into(),
            canvas: CanvasSize {
                width: spec.canvas_width,
                height: spec.canvas_height,
            },
            split,
            elements: layout
                .elements
                .iter()
                .map(|e| AnnotatedElement {
                    category: e.category,
                    bbox_px: px(&e.bbox),
                })
                .collect(),
            saliency: spec.saliency.iter().map(|s| SaliencyBox { bbox_px: px(s) }).collect(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

fn normalize([x, y, w, h]: [f64; 4], cw: f64, ch: f64) -> BBox {
    BBox::new_unchecked(x / cw, y / ch, w / cw, h / ch)
}

/// Splits a record into the masked environment and its reference layout.
pub fn to_canvas_spec(rec: &AnnotationRecord) -> Result<(CanvasSpec, Layout), DataError> {
    rec.validate().map_err(|reason| DataError::Invalid {
        id: rec.id.clone(),
        reason,
    })?;
    let (cw, ch) = (rec.canvas.width as f64, rec.canvas.height as f64);
    let elements = rec
        .elements
        .iter()
        .enumerate()
        .map(|(id, e)| ElementSpec {
            id,
            category: e.category,
            geometry: Geometry::Masked,
        })
        .collect();
    let saliency = rec
        .saliency
        .iter()
        .map(|s| normalize(s.bbox_px, cw, ch))
        .collect();
    let spec = CanvasSpec {
        canvas_width: rec.canvas.width,
        canvas_height: rec.canvas.height,
        elements,
        saliency,
    };
    let layout = Layout::new(
        rec.elements
            .iter()
            .enumerate()
            .map(|(id, e)| LayoutElement {
                id,
                category: e.category,
                bbox: normalize(e.bbox_px, cw, ch),
            })
            .collect(),
    );
    spec.validate().map_err(|e| DataError::Invalid {
        id: rec.id.clone(),
        reason: e.to_string(),
    })?;
    Ok((spec, layout))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub records: Vec<AnnotationRecord>,
    pub skipped: Vec<SkippedLine>,
}

/// Reads records from JSONL. Blank lines are ignored. Malformed lines are
/// skipped and reported, or abort the read when `strict` is set.
pub fn read_annotations(reader: impl BufRead, strict: bool) -> Result<LoadReport, DataError> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<AnnotationRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate().map(|_| r));
        match parsed {
            Ok(r) => records.push(r),
            Err(reason) if strict => return Err(DataError::Line { line: line_no, reason }),
            Err(reason) => skipped.push(SkippedLine { line: line_no, reason }),
        }
    }
    if records.is_empty() {
        return Err(DataError::NoRecords);
    }
    Ok(LoadReport { records, skipped })
}

pub fn load_annotations(path: impl AsRef<Path>, strict: bool) -> Result<LoadReport, DataError> {
    let file = File::open(path.as_ref()).map_err(|source| DataError::Open {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    read_annotations(BufReader::new(file), strict)
}

pub fn write_annotations(mut writer: impl Write, records: &[AnnotationRecord]) -> io::Result<()> {
    for r in records {
        writeln!(writer, "{}", r.to_json_line())?;
    }
    Ok(())
}
