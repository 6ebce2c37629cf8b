use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("geometry mismatch: {left} vs {right}")]
    GeometryMismatch { left: String, right: String },

    #[error("invalid label map: {0}")]
    InvalidLabelMap(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("NIfTI format error: {0}")]
    Format(String),

    #[error("unsupported volume shape: {0}")]
    UnsupportedShape(String),

    #[error("non-integer label value {value} at voxel {index}")]
    LabelDomain { index: usize, value: f64 },

    #[error("distance undefined: mask `{0}` is empty")]
    EmptyMask(&'static str),

    #[error("team `{0}` has no records")]
    MissingTeam(String),

    #[error("expected {expected} ranks, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("inconsistent coverage: {}", .0.join("; "))]
    Coverage(Vec<String>),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("window {window} exceeds sample size {n}")]
    Window { window: usize, n: usize },

    #[error("could not place lesion {lesion} after {attempts} attempts")]
    Placement { lesion: usize, attempts: usize },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
