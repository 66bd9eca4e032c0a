//! Engineered propagation features for each measurement point.
//!
//! Distances and angles toward the eNB, the indoor distance and the
//! penetration distance along the receiver-transmitter ray (planar and
//! spatial variants), the vertical depth below the terrain, and the average
//! distance to the nearest side-corridor opening.

mod corridor;
mod ray;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoError, GeoPoint, LocalPoint, OccupancyGrid};
use crate::pathloss::TransmitterConfig;
use crate::positioning::MeasurementPoint;

pub use corridor::{
    corridor_avg_distance, detect_corridor_openings, read_openings_json, write_openings_json, CorridorOpening,
    DetectionParams, Segment,
};
pub use ray::{
    indoor_depth, indoor_distance, penetration_distance, ray_march, Crossing, RayMode, RayParams, RayTrace, Transition,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FeatureError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
    #[error("no boundary found toward the transmitter")]
    NoBoundary,
    #[error("ray does not leave the terrain within range")]
    NoTerrainExit,
    #[error("no corridor openings annotated")]
    MissingAnnotation,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("geodesy: {0}")]
    Geo(String),
}

impl From<GeoError> for FeatureError {
    fn from(e: GeoError) -> Self {
        FeatureError::Geo(e.to_string())
    }
}

/// Names of the regressors a [`FeatureVector`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureField {
    D2d,
    D3d,
    AzimuthPhi,
    ElevationTheta,
    DIn2d,
    DIn3d,
    DPen2d,
    DPen3d,
    Depth,
    DCorAvg,
}

impl FeatureField {
    pub const ALL: [FeatureField; 10] = [
        FeatureField::D2d,
        FeatureField::D3d,
        FeatureField::AzimuthPhi,
        FeatureField::ElevationTheta,
        FeatureField::DIn2d,
        FeatureField::DIn3d,
        FeatureField::DPen2d,
        FeatureField::DPen3d,
        FeatureField::Depth,
        FeatureField::DCorAvg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureField::D2d => "d2d",
            FeatureField::D3d => "d3d",
            FeatureField::AzimuthPhi => "azimuth_phi",
            FeatureField::ElevationTheta => "elevation_theta",
            FeatureField::DIn2d => "d_in_2d",
            FeatureField::DIn3d => "d_in_3d",
            FeatureField::DPen2d => "d_pen_2d",
            FeatureField::DPen3d => "d_pen_3d",
            FeatureField::Depth => "depth",
            FeatureField::DCorAvg => "d_cor_avg",
        }
    }
}

impl fmt::Display for FeatureField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureField::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown feature '{s}'"))
    }
}

/// Features of one measurement point. Ray-derived values are `None` when
/// the geometry did not yield them; the reason is kept in `missing`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    pub d2d: f64,
    pub d3d: f64,
    /// Degrees clockwise from north, in [0, 360).
    pub azimuth_phi: f64,
    /// Degrees above the horizontal, in [-90, 90].
    pub elevation_theta: f64,
    pub d_in_2d: Option<f64>,
    pub d_in_3d: Option<f64>,
    pub d_pen_2d: Option<f64>,
    pub d_pen_3d: Option<f64>,
    pub depth: Option<f64>,
    pub d_cor_avg: Option<f64>,
    pub missing: Vec<(FeatureField, FeatureError)>,
}

impl FeatureVector {
    pub fn get(&self, field: FeatureField) -> Option<f64> {
        match field {
            FeatureField::D2d => Some(self.d2d),
            FeatureField::D3d => Some(self.d3d),
            FeatureField::AzimuthPhi => Some(self.azimuth_phi),
            FeatureField::ElevationTheta => Some(self.elevation_theta),
            FeatureField::DIn2d => self.d_in_2d,
            FeatureField::DIn3d => self.d_in_3d,
            FeatureField::DPen2d => self.d_pen_2d,
            FeatureField::DPen3d => self.d_pen_3d,
            FeatureField::Depth => self.depth,
            FeatureField::DCorAvg => self.d_cor_avg,
        }
    }
}

/// Azimuth (clockwise from north) and elevation of `tx` seen from `rx`, in
/// degrees.
pub fn angles_to_tx(rx: LocalPoint, tx: LocalPoint) -> Result<(f64, f64), FeatureError> {
    let d = tx - rx;
    if d.norm() == 0.0 {
        return Err(FeatureError::DegenerateGeometry("receiver and transmitter coincide".into()));
    }
    let mut phi = d.east.atan2(d.north).to_degrees();
    if phi < 0.0 {
        phi += 360.0;
    }
    if phi >= 360.0 {
        phi = 0.0;
    }
    let theta = d.up.atan2(d.horizontal_norm()).to_degrees();
    Ok((phi, theta))
}

/// Everything feature extraction needs besides the points themselves.
pub struct FeatureContext<'a> {
    pub tx: LocalPoint,
    pub grid: &'a OccupancyGrid,
    pub openings: &'a [CorridorOpening],
    pub ray: RayParams,
}

impl<'a> FeatureContext<'a> {
    pub fn new(
        tx: &TransmitterConfig,
        origin: &GeoPoint,
        grid: &'a OccupancyGrid,
        openings: &'a [CorridorOpening],
    ) -> Result<Self, FeatureError> {
        Ok(FeatureContext { tx: tx.antenna_local(origin)?, grid, openings, ray: RayParams::default() })
    }

    /// All features of a receiver at `rx`.
    pub fn features_at(&self, rx: LocalPoint) -> Result<FeatureVector, FeatureError> {
        let (azimuth_phi, elevation_theta) = angles_to_tx(rx, self.tx)?;
        let delta = self.tx - rx;
        let mut fv = FeatureVector { d2d: delta.horizontal_norm(), d3d: delta.norm(), azimuth_phi, elevation_theta, ..Default::default() };
        let mut record = |field: FeatureField, r: Result<f64, FeatureError>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                fv.missing.push((field, e));
                None
            }
        };
        let (grid, tx, p) = (self.grid, self.tx, &self.ray);
        let d_in_2d = record(FeatureField::DIn2d, indoor_distance(rx, tx, grid, RayMode::Planar, p));
        let d_in_3d = record(FeatureField::DIn3d, indoor_distance(rx, tx, grid, RayMode::Spatial, p));
        let d_pen_2d = record(FeatureField::DPen2d, penetration_distance(rx, tx, grid, RayMode::Planar, p));
        let d_pen_3d = record(FeatureField::DPen3d, penetration_distance(rx, tx, grid, RayMode::Spatial, p));
        let depth = record(FeatureField::Depth, indoor_depth(rx, grid, p));
        let d_cor_avg = record(FeatureField::DCorAvg, corridor_avg_distance(rx, self.openings));
        fv.d_in_2d = d_in_2d;
        fv.d_in_3d = d_in_3d;
        fv.d_pen_2d = d_pen_2d;
        fv.d_pen_3d = d_pen_3d;
        fv.depth = depth;
        fv.d_cor_avg = d_cor_avg;
        Ok(fv)
    }
}

/// Features of one measurement point, or why none could be computed.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub session_id: String,
    pub index: usize,
    pub rsrp_dbm: f64,
    pub features: Result<FeatureVector, FeatureError>,
}

/// One row per point, in input order. Points are processed in parallel;
/// the output does not depend on scheduling.
pub fn extract_features(points: &[MeasurementPoint], ctx: &FeatureContext<'_>) -> Vec<FeatureRow> {
    points
        .par_iter()
        .map(|p| FeatureRow {
            session_id: p.session_id.clone(),
            index: p.index,
            rsrp_dbm: p.rsrp_dbm,
            features: ctx.features_at(p.position),
        })
        .collect()
}

pub const FEATURE_CSV_PREFIX: [&str; 3] = ["session_id", "index", "rsrp_dbm"];

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

/// Features CSV: identifiers, RSRP, one column per feature (`NA` when
/// missing) and a `notes` column naming what failed.
pub fn write_features_csv<W: Write>(rows: &[FeatureRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FEATURE_CSV_PREFIX.to_vec();
    header.extend(FeatureField::ALL.iter().map(|f| f.name()));
    header.push("notes");
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.session_id.clone(), r.index.to_string(), format!("{:.6}", r.rsrp_dbm)];
        match &r.features {
            Ok(fv) => {
                rec.extend(FeatureField::ALL.iter().map(|f| fmt_opt(fv.get(*f))));
                let notes: Vec<String> = fv.missing.iter().map(|(f, e)| format!("{f}: {e}")).collect();
                rec.push(notes.join("; "));
            }
            Err(e) => {
                rec.extend(FeatureField::ALL.iter().map(|_| "NA".to_string()));
                rec.push(e.to_string());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A parsed features CSV row: RSRP and whatever features were present.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub session_id: String,
    pub index: usize,
    pub rsrp_dbm: f64,
    pub features: Option<FeatureVector>,
}

pub fn read_features_csv<R: std::io::Read>(input: R) -> Result<Vec<FeatureRecord>, String> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| format!("missing column '{name}'"));
    let id_col = col("session_id")?;
    let idx_col = col("index")?;
    let rsrp_col = col("rsrp_dbm")?;
    let field_cols: Vec<(FeatureField, usize)> =
        FeatureField::ALL.iter().map(|f| col(f.name()).map(|c| (*f, c))).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let num = |c: usize| -> Result<Option<f64>, String> {
            match rec.get(c).unwrap_or("NA") {
                "NA" | "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| format!("bad number '{s}'")),
            }
        };
        let mut values = std::collections::HashMap::new();
        for (f, c) in &field_cols {
            values.insert(*f, num(*c)?);
        }
        let features = match (values[&FeatureField::D2d], values[&FeatureField::D3d]) {
            (Some(d2d), Some(d3d)) => Some(FeatureVector {
                d2d,
                d3d,
                azimuth_phi: values[&FeatureField::AzimuthPhi].unwrap_or(f64::NAN),
                elevation_theta: values[&FeatureField::ElevationTheta].unwrap_or(f64::NAN),
                d_in_2d: values[&FeatureField::DIn2d],
                d_in_3d: values[&FeatureField::DIn3d],
                d_pen_2d: values[&FeatureField::DPen2d],
                d_pen_3d: values[&FeatureField::DPen3d],
                depth: values[&FeatureField::Depth],
                d_cor_avg: values[&FeatureField::DCorAvg],
                missing: Vec::new(),
            }),
            _ => None,
        };
        out.push(FeatureRecord {
            session_id: rec.get(id_col).unwrap_or("").to_string(),
            index: rec.get(idx_col).unwrap_or("").parse().map_err(|_| "bad index".to_string())?,
            rsrp_dbm: num(rsrp_col)?.ok_or("missing rsrp_dbm")?,
            features,
        });
    }
    Ok(out)
}
