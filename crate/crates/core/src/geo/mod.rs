//! Coordinates, point-cloud ingestion and the voxel occupancy index.

mod cloud;
mod coords;
mod grid;

use std::path::PathBuf;

use thiserror::Error;

pub use cloud::{load_point_cloud, parse_point_cloud, write_xyz, CloudFormat, PointCloud, DEFAULT_SOURCE_RESOLUTION};
pub use coords::{to_geo, to_local, GeoPoint, LocalPoint, MAX_LOCAL_EXTENT_M, WGS84_A, WGS84_F};
pub use grid::{build_occupancy, Aabb, OccupancyGrid, VoxelKey, DEFAULT_VOXEL_SIZE};

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
}
