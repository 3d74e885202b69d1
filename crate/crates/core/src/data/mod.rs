//! Annotation ingestion and synthetic canvas generation.

use std::io;

use thiserror::Error;

mod annotations;
mod synth;

pub use annotations::{
    load_annotations, read_annotations, to_canvas_spec, write_annotations, AnnotatedElement,
    AnnotationRecord, CanvasSize, LoadReport, SaliencyBox, SkippedLine, Split,
};
pub use synth::{
    bundled_suite, generate_synthetic, suite_records, DesignedGenerator, GeneratorRegistry,
    LayoutGenerator, RandomGenerator, SynthConfig, SynthMode, BUNDLED_SEED,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Open { path: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("record {id}: {reason}")]
    Invalid { id: String, reason: String },
    #[error("no valid records")]
    NoRecords,
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
}
