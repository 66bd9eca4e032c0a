//! Side-corridor openings along a main tunnel and the average distance to
//! the nearest one.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ray::ray_march;
use super::FeatureError;
use crate::geo::{LocalPoint, OccupancyGrid};

/// Where a side corridor meets the main tunnel, outlined by sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorOpening {
    pub opening_id: String,
    pub boundary_samples: Vec<LocalPoint>,
}

impl CorridorOpening {
    pub fn new(opening_id: impl Into<String>, boundary_samples: Vec<LocalPoint>) -> Result<Self, FeatureError> {
        let opening_id = opening_id.into();
        if boundary_samples.len() < 2 {
            return Err(FeatureError::InvalidParameter(format!(
                "opening '{opening_id}' needs at least 2 boundary samples"
            )));
        }
        if boundary_samples.iter().any(|p| !p.is_finite()) {
            return Err(FeatureError::InvalidParameter(format!("opening '{opening_id}' has a non-finite sample")));
        }
        Ok(CorridorOpening { opening_id, boundary_samples })
    }

    pub fn centroid(&self) -> LocalPoint {
        let sum = self.boundary_samples.iter().fold(LocalPoint::ORIGIN, |acc, p| acc + *p);
        sum * (1.0 / self.boundary_samples.len() as f64)
    }
}

/// Pick the opening whose closest sample is nearest to `rx`, then average the
/// distances from `rx` to all of that opening's samples.
pub fn corridor_avg_distance(rx: LocalPoint, openings: &[CorridorOpening]) -> Result<f64, FeatureError> {
    let mut best: Option<(f64, &CorridorOpening)> = None;
    for o in openings {
        let nearest = o.boundary_samples.iter().map(|s| rx.distance(*s)).fold(f64::INFINITY, f64::min);
        if best.is_none_or(|(d, _)| nearest < d) {
            best = Some((nearest, o));
        }
    }
    let (_, opening) = best.ok_or(FeatureError::MissingAnnotation)?;
    let n = opening.boundary_samples.len() as f64;
    Ok(opening.boundary_samples.iter().map(|s| rx.distance(*s)).sum::<f64>() / n)
}

#[derive(Serialize, Deserialize)]
struct OpeningRecord {
    opening_id: String,
    boundary_samples: Vec<[f64; 3]>,
}

pub fn read_openings_json<R: Read>(reader: R) -> Result<Vec<CorridorOpening>, FeatureError> {
    let records: Vec<OpeningRecord> =
        serde_json::from_reader(reader).map_err(|e| FeatureError::InvalidParameter(format!("openings JSON: {e}")))?;
    records
        .into_iter()
        .map(|r| CorridorOpening::new(r.opening_id, r.boundary_samples.into_iter().map(LocalPoint::from_array).collect()))
        .collect()
}

pub fn write_openings_json<W: Write>(openings: &[CorridorOpening], out: W) -> serde_json::Result<()> {
    let records: Vec<OpeningRecord> = openings
        .iter()
        .map(|o| OpeningRecord {
            opening_id: o.opening_id.clone(),
            boundary_samples: o.boundary_samples.iter().map(|p| p.to_array()).collect(),
        })
        .collect();
    serde_json::to_writer_pretty(out, &records)
}

/// Straight line segment in the local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: LocalPoint,
    pub end: LocalPoint,
}

impl Segment {
    pub fn new(start: LocalPoint, end: LocalPoint) -> Self {
        Segment { start, end }
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn at(&self, s: f64) -> LocalPoint {
        let len = self.length();
        self.start + (self.end - self.start) * (s / len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Minimum gap width that counts as an opening (doorway scale).
    pub gap_threshold: f64,
    /// How far sideways to look for the wall.
    pub lateral_range: f64,
    /// A cross-section is open when its wall lies this much further out than
    /// the side's median wall distance.
    pub wall_margin: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams { gap_threshold: 1.0, lateral_range: 20.0, wall_margin: 1.0 }
    }
}

/// Scan cross-sections of the main tunnel and report gaps in either side
/// wall.
///
/// `main_axis` should run along the tunnel centreline at a height between
/// floor and ceiling. Each opening is outlined by its two jambs at floor and
/// ceiling height, or at axis height when no floor/ceiling is found.
pub fn detect_corridor_openings(
    grid: &OccupancyGrid,
    main_axis: &Segment,
    scan_spacing: f64,
    params: &DetectionParams,
) -> Result<Vec<CorridorOpening>, FeatureError> {
    if !(scan_spacing > 0.0) {
        return Err(FeatureError::InvalidParameter(format!("scan spacing must be positive, got {scan_spacing}")));
    }
    let bounds = grid.bounds().ok_or_else(|| FeatureError::OutOfBounds("grid is empty".into()))?;
    if !bounds.contains(main_axis.start) || !bounds.contains(main_axis.end) {
        return Err(FeatureError::OutOfBounds("main axis leaves the grid bounds".into()));
    }
    let along = main_axis.end - main_axis.start;
    let heading = LocalPoint::new(along.east, along.north, 0.0)
        .normalized()
        .ok_or_else(|| FeatureError::DegenerateGeometry("main axis has no horizontal extent".into()))?;
    let left = LocalPoint::new(-heading.north, heading.east, 0.0);
    let length = main_axis.length();
    let step = grid.voxel_size() / 2.0;
    let stations: Vec<f64> = (0..=(length / scan_spacing).floor() as usize).map(|k| k as f64 * scan_spacing).collect();

    let mut openings = Vec::new();
    for (side_name, normal) in [("L", left), ("R", -left)] {
        let walls: Vec<Option<f64>> = stations
            .iter()
            .map(|&s| {
                ray_march(grid, main_axis.at(s), normal, step, params.lateral_range).map(|t| t.first_boundary())
            })
            .collect::<Result<_, _>>()?;
        let mut found: Vec<f64> = walls.iter().flatten().copied().collect();
        if found.is_empty() {
            continue;
        }
        found.sort_by(f64::total_cmp);
        let wall = found[found.len() / 2];
        let open: Vec<bool> = walls.iter().map(|w| w.is_none_or(|d| d > wall + params.wall_margin)).collect();

        let mut k = 0;
        while k < stations.len() {
            if !open[k] {
                k += 1;
                continue;
            }
            let first = k;
            while k < stations.len() && open[k] {
                k += 1;
            }
            let last = k - 1;
            let lo = (stations[first] - scan_spacing / 2.0).max(0.0);
            let hi = (stations[last] + scan_spacing / 2.0).min(length);
            if hi - lo < params.gap_threshold {
                continue;
            }
            let mut samples = Vec::with_capacity(4);
            for edge in [lo, hi] {
                let centre = main_axis.at(edge);
                let jamb = centre + normal * wall;
                let vertical = |dir: f64| {
                    ray_march(grid, centre, LocalPoint::new(0.0, 0.0, dir), step, params.lateral_range)
                        .ok()
                        .and_then(|t| t.first_boundary())
                };
                match (vertical(-1.0), vertical(1.0)) {
                    (Some(down), Some(up)) => {
                        samples.push(jamb - LocalPoint::new(0.0, 0.0, down));
                        samples.push(jamb + LocalPoint::new(0.0, 0.0, up));
                    }
                    _ => samples.push(jamb),
                }
            }
            let id = format!("{side_name}@{:.2}", 0.5 * (lo + hi));
            openings.push(CorridorOpening::new(id, samples)?);
        }
    }
    openings.sort_by(|a, b| a.opening_id.cmp(&b.opening_id));
    Ok(openings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_opening(id: &str, centre: LocalPoint, side: f64) -> CorridorOpening {
        let h = side / 2.0;
        CorridorOpening::new(
            id,
            vec![
                centre + LocalPoint::new(-h, 0.0, -h),
                centre + LocalPoint::new(h, 0.0, -h),
                centre + LocalPoint::new(h, 0.0, h),
                centre + LocalPoint::new(-h, 0.0, h),
            ],
        )
        .unwrap()
    }

    #[test]
    fn centroid_of_square_opening() {
        let c = LocalPoint::new(3.0, 4.0, -5.0);
        let d = corridor_avg_distance(c, &[square_opening("sq", c, 2.0)]).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn equidistant_samples() {
        let rx = LocalPoint::ORIGIN;
        let o = CorridorOpening::new(
            "ring",
            (0..8).map(|k| {
                let a = k as f64 * std::f64::consts::FRAC_PI_4;
                LocalPoint::new(5.0 * a.cos(), 5.0 * a.sin(), 0.0)
            }).collect(),
        )
        .unwrap();
        assert!((corridor_avg_distance(rx, &[o]).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_opening_is_averaged() {
        let near = square_opening("near", LocalPoint::new(4.0, 0.0, 0.0), 2.0);
        let far = square_opening("far", LocalPoint::new(-30.0, 0.0, 0.0), 2.0);
        let rx = LocalPoint::ORIGIN;
        let got = corridor_avg_distance(rx, &[far.clone(), near.clone()]).unwrap();
        assert_eq!(got, corridor_avg_distance(rx, &[near]).unwrap());
    }

    #[test]
    fn empty_annotations() {
        assert!(matches!(corridor_avg_distance(LocalPoint::ORIGIN, &[]), Err(FeatureError::MissingAnnotation)));
        assert!(CorridorOpening::new("one", vec![LocalPoint::ORIGIN]).is_err());
    }

    #[test]
    fn openings_json_round_trip() {
        let os = vec![square_opening("a", LocalPoint::new(1.5, 2.0, -3.0), 2.0)];
        let mut buf = Vec::new();
        write_openings_json(&os, &mut buf).unwrap();
        assert_eq!(read_openings_json(buf.as_slice()).unwrap(), os);
        let text = r#"[{"opening_id": "x", "boundary_samples": [[0, 0, 0], [1, 0, 0]]}]"#;
        assert_eq!(read_openings_json(text.as_bytes()).unwrap()[0].boundary_samples.len(), 2);
    }
}
