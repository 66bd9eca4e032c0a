use serde::{Deserialize, Serialize};

use super::oracle::analytic_feature_vector;
use super::{SynthError, TunnelLayout};
use crate::features::{CorridorOpening, FeatureVector};
use crate::geo::LocalPoint;
use crate::pathloss::{predict_rsrp, IndoorLossModel, PathLossModel, ShadowingSampler, TransmitterConfig};
use crate::positioning::{interpolate_all, MeasurementPoint, MeasurementSession, Observation};

/// How RSRP is generated from the analytic features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truth {
    /// Link budget minus basic, through-wall and (optionally) indoor loss.
    LinkBudget {
        variant: IndoorLossModel,
        #[serde(default)]
        model: PathLossModel,
    },
    /// RSRP = intercept + slope · d3d.
    DistanceOnly { intercept_dbm: f64, slope_db_per_m: f64 },
}

impl Truth {
    pub fn distance_only() -> Self {
        Truth::DistanceOnly { intercept_dbm: -60.0, slope_db_per_m: -0.2 }
    }

    pub fn link_budget(variant: IndoorLossModel) -> Self {
        Truth::LinkBudget { variant, model: PathLossModel::default() }
    }

    fn rsrp(&self, cfg: &TransmitterConfig, fv: &FeatureVector) -> Result<f64, SynthError> {
        match self {
            Truth::DistanceOnly { intercept_dbm, slope_db_per_m } => Ok(intercept_dbm + slope_db_per_m * fv.d3d),
            Truth::LinkBudget { variant, model } => {
                let c = model
                    .predict_total_loss(cfg, fv, *variant)
                    .map_err(|e| SynthError::Config(format!("truth model cannot be evaluated: {e}")))?;
                Ok(predict_rsrp(cfg, &c))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignParams {
    /// Distance between consecutive measurement points.
    pub point_spacing: f64,
    /// Receiver height above the tunnel floor.
    pub sensor_height: f64,
    /// Sessions start and stop this far from end walls.
    pub wall_clearance: f64,
}

impl Default for CampaignParams {
    fn default() -> Self {
        CampaignParams { point_spacing: 1.5, sensor_height: 1.0, wall_clearance: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub sessions: Vec<MeasurementSession>,
    /// Interpolated points, in session order.
    pub points: Vec<MeasurementPoint>,
    /// Analytic features of each point.
    pub truth_features: Vec<FeatureVector>,
    pub openings: Vec<CorridorOpening>,
}

fn session_line(
    layout: &TunnelLayout,
    id: String,
    a: LocalPoint,
    b: LocalPoint,
    spacing: f64,
) -> Result<MeasurementSession, SynthError> {
    let count = ((a.distance(b) / spacing).floor() as usize + 1).max(2);
    Ok(MeasurementSession {
        session_id: id,
        start: layout.geo(a)?,
        end: layout.geo(b)?,
        point_count: count,
        observations: vec![Observation::new(-100.0); count],
    })
}

/// Sessions along the main tunnel and down each side corridor, with RSRP
/// drawn from `truth` plus zero-mean normal noise of `sigma_db`.
pub fn generate_campaign(
    layout: &TunnelLayout,
    cfg: &TransmitterConfig,
    truth: Truth,
    sigma_db: f64,
    seed: u64,
    params: &CampaignParams,
) -> Result<Campaign, SynthError> {
    layout.validate()?;
    cfg.validate().map_err(|e| SynthError::Config(e.to_string()))?;
    if !(params.point_spacing > 0.0) || !(params.sensor_height > 0.0) || params.sensor_height >= layout.cross_section.height {
        return Err(SynthError::InvalidParameter("point spacing must be positive and the sensor inside the tunnel".into()));
    }
    let mut noise = ShadowingSampler::new(sigma_db, seed).map_err(|e| SynthError::InvalidParameter(e.to_string()))?;
    let up = layout.floor_elevation() + params.sensor_height;
    let len = layout.axis_length();
    let clear = params.wall_clearance;
    if len <= 2.0 * clear {
        return Err(SynthError::InvalidParameter("main tunnel shorter than twice the wall clearance".into()));
    }

    let mut sessions = vec![session_line(
        layout,
        "main".into(),
        layout.axis_point(clear, 0.0, up),
        layout.axis_point(len - clear, 0.0, up),
        params.point_spacing,
    )?];
    let w = layout.cross_section.width / 2.0;
    for (i, c) in layout.side_corridors.iter().enumerate() {
        let sign = TunnelLayout::side_sign(c.side);
        if c.length <= 2.0 * clear {
            continue;
        }
        sessions.push(session_line(
            layout,
            format!("corridor-{i}"),
            layout.axis_point(c.station, sign * (w + clear), up),
            layout.axis_point(c.station, sign * (w + c.length - clear), up),
            params.point_spacing,
        )?);
    }

    let openings = layout.ground_truth_openings();
    let tx = cfg.antenna_local(&layout.origin)?;
    let mut points = interpolate_all(&sessions, &layout.origin).map_err(|e| SynthError::Config(e.to_string()))?;
    let truth_features = points
        .iter()
        .map(|p| analytic_feature_vector(layout, p.position, tx, &openings).map_err(|e| SynthError::Config(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;

    let mut k = 0;
    for s in &mut sessions {
        for obs in &mut s.observations {
            let rsrp = truth.rsrp(cfg, &truth_features[k])? + noise.draw();
            obs.rsrp_dbm = (rsrp * 1e6).round() / 1e6;
            points[k].rsrp_dbm = obs.rsrp_dbm;
            k += 1;
        }
        s.validate().map_err(|e| SynthError::Config(e.to_string()))?;
    }
    Ok(Campaign { sessions, points, truth_features, openings })
}
