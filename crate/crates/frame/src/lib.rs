//! A small columnar data frame with an optional active geometry column.
//!
//! `Frame` plays the role of both a plain tabular frame and a geospatial
//! frame: when an active geometry column is set, the frame behaves like a
//! GeoDataFrame (CRS, bounds, geometry types), otherwise it is a plain
//! DataFrame. Rows are addressed positionally.

mod column;
mod error;
mod frame;
pub mod geojson;
pub mod geometry;

pub use column::{format_float, Column, ColumnData, DType, Scalar};
pub use error::FrameError;
pub use frame::Frame;
pub use geometry::Crs;

/// Re-exported so downstream crates agree on the geometry types.
pub use geo;

pub type Geometry = geo::Geometry<f64>;

pub type Result<T, E = FrameError> = std::result::Result<T, E>;
