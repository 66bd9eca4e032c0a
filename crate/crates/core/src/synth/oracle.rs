//! Closed-form feature values for box-tunnel scenes.
//!
//! Free space is the union of the layout's boxes; solid is everything else
//! below the terrain surface and inside the footprint.

use super::TunnelLayout;
use crate::features::{angles_to_tx, corridor_avg_distance, CorridorOpening, FeatureError, FeatureField, FeatureVector};
use crate::geo::LocalPoint;

/// Sorted, merged parameter intervals where the ray is inside some box.
fn free_intervals(layout: &TunnelLayout, origin: LocalPoint, dir: LocalPoint) -> Vec<(f64, f64)> {
    let mut iv: Vec<(f64, f64)> = layout.boxes().iter().filter_map(|b| b.ray_interval(origin, dir)).collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

/// Distance along `dir` at which the ray leaves free space, if `origin` is
/// in free space.
pub fn exit_distance(layout: &TunnelLayout, origin: LocalPoint, dir: LocalPoint) -> Option<f64> {
    free_intervals(layout, origin, dir).into_iter().find(|&(a, b)| a <= 0.0 && b >= 0.0).map(|(_, b)| b)
}

/// Distance along `dir` to the terrain surface, if the ray reaches it
/// inside the footprint. Zero when `origin` is at or above the terrain.
pub fn terrain_distance(layout: &TunnelLayout, origin: LocalPoint, dir: LocalPoint) -> Option<f64> {
    let gap = layout.terrain_height(origin.east, origin.north) - origin.up;
    if gap <= 0.0 {
        return Some(0.0);
    }
    let [se, sn] = layout.terrain_slope;
    let closing = dir.up - se * dir.east - sn * dir.north;
    if closing <= 0.0 {
        return None;
    }
    let t = gap / closing;
    layout.footprint().contains_horizontal(origin + dir * t).then_some(t)
}

/// Solid length along the ray between `origin` and the terrain surface.
pub fn solid_length(layout: &TunnelLayout, origin: LocalPoint, dir: LocalPoint) -> Option<f64> {
    let t_top = terrain_distance(layout, origin, dir)?;
    let free: f64 = free_intervals(layout, origin, dir)
        .into_iter()
        .map(|(a, b)| (b.min(t_top) - a.max(0.0)).max(0.0))
        .sum();
    Some((t_top - free).max(0.0))
}

/// Analytic ray-derived features of a receiver at `rx` with the antenna
/// at `tx`, following the same conventions as the voxel implementation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticFeatures {
    pub d_in_2d: Option<f64>,
    pub d_in_3d: Option<f64>,
    pub d_pen_2d: Option<f64>,
    pub d_pen_3d: Option<f64>,
    pub depth: Option<f64>,
}

pub fn analytic_features(layout: &TunnelLayout, rx: LocalPoint, tx: LocalPoint) -> AnalyticFeatures {
    let delta = tx - rx;
    let d3d = delta.norm();
    let d2d = delta.horizontal_norm();
    let dir3 = delta.normalized();
    let dir2 = LocalPoint::new(delta.east, delta.north, 0.0).normalized();
    let d_in_3d = dir3.and_then(|d| exit_distance(layout, rx, d)).filter(|t| *t <= d3d);
    let d_in_2d = dir2.and_then(|d| exit_distance(layout, rx, d)).filter(|t| *t <= d2d);
    let d_pen_3d = dir3.and_then(|d| solid_length(layout, rx, d));
    let cos_theta = if d3d > 0.0 { d2d / d3d } else { 0.0 };
    let d_pen_2d = d_pen_3d.map(|p| p * cos_theta);
    let depth = terrain_distance(layout, rx, LocalPoint::new(0.0, 0.0, 1.0));
    AnalyticFeatures { d_in_2d, d_in_3d, d_pen_2d, d_pen_3d, depth }
}

/// Full analytic feature vector; corridor distance uses `openings`.
pub fn analytic_feature_vector(
    layout: &TunnelLayout,
    rx: LocalPoint,
    tx: LocalPoint,
    openings: &[CorridorOpening],
) -> Result<FeatureVector, FeatureError> {
    let (azimuth_phi, elevation_theta) = angles_to_tx(rx, tx)?;
    let a = analytic_features(layout, rx, tx);
    let delta = tx - rx;
    let mut missing = Vec::new();
    let mut note = |field: FeatureField, v: Option<f64>, err: FeatureError| {
        if v.is_none() {
            missing.push((field, err));
        }
        v
    };
    let d_in_2d = note(FeatureField::DIn2d, a.d_in_2d, FeatureError::NoBoundary);
    let d_in_3d = note(FeatureField::DIn3d, a.d_in_3d, FeatureError::NoBoundary);
    let d_pen_2d = note(FeatureField::DPen2d, a.d_pen_2d, FeatureError::NoTerrainExit);
    let d_pen_3d = note(FeatureField::DPen3d, a.d_pen_3d, FeatureError::NoTerrainExit);
    let depth = note(FeatureField::Depth, a.depth, FeatureError::NoTerrainExit);
    let d_cor_avg = match corridor_avg_distance(rx, openings) {
        Ok(v) => Some(v),
        Err(e) => {
            missing.push((FeatureField::DCorAvg, e));
            None
        }
    };
    Ok(FeatureVector {
        d2d: delta.horizontal_norm(),
        d3d: delta.norm(),
        azimuth_phi,
        elevation_theta,
        d_in_2d,
        d_in_3d,
        d_pen_2d,
        d_pen_3d,
        depth,
        d_cor_avg,
        missing,
    })
}
