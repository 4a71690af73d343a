use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("column `{name}` has {actual} rows, frame has {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        actual: usize,
    },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("column `{0}` does not hold geometries")]
    NotGeometry(String),
    #[error("frame has no active geometry column")]
    NoGeometry,
    #[error("invalid GeoJSON: {0}")]
    GeoJson(String),
    #[error("unsupported CRS transformation from {from} to {to}")]
    Crs { from: String, to: String },
}
