//! Deep-indoor propagation analysis from LIDAR tunnel geometry.
//!
//! The pipeline reconstructs measurement positions along surveyed corridors
//! ([`positioning`]), derives geometric features against a voxelized point
//! cloud ([`geo`], [`features`]), predicts received power with the 3GPP
//! outdoor-to-indoor decomposition ([`pathloss`]) and compares regression
//! models and indoor-loss variants ([`stats`]). [`synth`] builds box-tunnel
//! scenes with closed-form ground truth.

pub mod features;
pub mod geo;
pub mod pathloss;
pub mod positioning;
pub mod stats;
pub mod synth;

pub use geo::{GeoPoint, LocalPoint, OccupancyGrid, PointCloud};
