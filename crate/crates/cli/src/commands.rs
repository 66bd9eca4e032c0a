use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use tunnelprop_core::features::{
    detect_corridor_openings, extract_features, read_features_csv, read_openings_json, write_features_csv,
    write_openings_json, CorridorOpening, DetectionParams, FeatureContext, FeatureRow, FeatureVector, Segment,
};
use tunnelprop_core::geo::{build_occupancy, load_point_cloud, to_geo, write_xyz, Aabb, CloudFormat, GeoError, GeoPoint, LocalPoint, OccupancyGrid};
use tunnelprop_core::pathloss::{PathLossModel, TransmitterConfig};
use tunnelprop_core::positioning::{interpolate_all, load_sessions, summarize, write_sessions_csv, MeasurementPoint, MeasurementSession, PositioningError};
use tunnelprop_core::stats::{
    best_by_r_squared, compare_models, mae_box_plot_svg, mae_by_variant, write_mae_csv, write_model_csv,
    EvaluationReport, ModelSpec,
};
use tunnelprop_core::synth::{generate_campaign, generate_cloud, CampaignParams, SynthError, Truth, TunnelLayout};

use crate::config::{ConfigFile, RunConfig, TruthKind};
use crate::CliError;

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    let p = p.as_deref().ok_or_else(|| CliError::MissingInput(format!("{flag} is required")))?;
    if !p.exists() {
        return Err(CliError::MissingInput(format!("{} does not exist", p.display())));
    }
    Ok(p)
}

fn geo_err(e: GeoError) -> CliError {
    match e {
        GeoError::Io { .. } => CliError::MissingInput(e.to_string()),
        e => CliError::Validation(e.to_string()),
    }
}

fn positioning_err(e: PositioningError) -> CliError {
    match e {
        PositioningError::Io { .. } => CliError::MissingInput(e.to_string()),
        e => CliError::Validation(e.to_string()),
    }
}

fn out_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Output(format!("cannot write {}: {e}", path.display()))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| out_err(&path, e))?;
    Ok((path, BufWriter::new(f)))
}

fn load_measurements(cfg: &RunConfig) -> Result<(Vec<MeasurementSession>, GeoPoint, Vec<MeasurementPoint>), CliError> {
    let path = require(&cfg.sessions, "--sessions")?;
    if let Some(obs) = &cfg.observations {
        require(&Some(obs.clone()), "--observations")?;
    }
    let sessions = load_sessions(path, cfg.observations.as_deref()).map_err(positioning_err)?;
    let origin = cfg.origin.unwrap_or(sessions[0].start);
    let points = interpolate_all(&sessions, &origin).map_err(positioning_err)?;
    Ok((sessions, origin, points))
}

fn load_grid(cfg: &RunConfig, origin: &GeoPoint) -> Result<(usize, OccupancyGrid), CliError> {
    let path = require(&cfg.cloud, "--cloud")?;
    let cloud = load_point_cloud(path, CloudFormat::from_path(path), origin).map_err(geo_err)?;
    let grid = build_occupancy(&cloud, cfg.voxel_size).map_err(geo_err)?;
    Ok((cloud.len(), grid))
}

fn load_tx(cfg: &RunConfig) -> Result<TransmitterConfig, CliError> {
    let path = require(&cfg.tx_config, "--tx-config")?;
    TransmitterConfig::load(path).map_err(|e| CliError::Validation(e.to_string()))
}

fn load_openings(cfg: &RunConfig, grid: &OccupancyGrid) -> Result<(Vec<CorridorOpening>, bool), CliError> {
    if cfg.openings.is_some() {
        let path = require(&cfg.openings, "--openings")?;
        let f = File::open(path).map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
        let openings = read_openings_json(f).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        return Ok((openings, false));
    }
    match cfg.main_axis {
        Some([a, b]) => {
            let axis = Segment::new(LocalPoint::from_array(a), LocalPoint::from_array(b));
            let found = detect_corridor_openings(grid, &axis, cfg.voxel_size, &DetectionParams::default())
                .map_err(|e| CliError::Validation(format!("corridor detection: {e}")))?;
            Ok((found, true))
        }
        None => Ok((Vec::new(), false)),
    }
}

pub struct IngestSummary {
    pub cloud_points: usize,
    pub voxels: usize,
    pub bounds: Option<Aabb>,
    pub sessions: usize,
    pub points: usize,
    pub origin: GeoPoint,
}

impl fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "origin: {}", self.origin)?;
        writeln!(f, "cloud points: {}", self.cloud_points)?;
        writeln!(f, "occupied voxels: {}", self.voxels)?;
        if let Some(b) = self.bounds {
            writeln!(
                f,
                "bounds: east {:.2}..{:.2}, north {:.2}..{:.2}, up {:.2}..{:.2}",
                b.min.east, b.max.east, b.min.north, b.max.north, b.min.up, b.max.up
            )?;
        }
        writeln!(f, "sessions: {}", self.sessions)?;
        writeln!(f, "measurement points: {}", self.points)
    }
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestSummary, CliError> {
    let (sessions, origin, _) = load_measurements(cfg)?;
    let (cloud_points, grid) = load_grid(cfg, &origin)?;
    let summary = summarize(&sessions);
    Ok(IngestSummary {
        cloud_points,
        voxels: grid.len(),
        bounds: grid.bounds(),
        sessions: summary.sessions,
        points: summary.points,
        origin,
    })
}

pub struct PositionsOutput {
    pub path: PathBuf,
    pub points: usize,
}

impl fmt::Display for PositionsOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "wrote {} positions to {}", self.points, self.path.display())
    }
}

pub fn cmd_positions(cfg: &RunConfig) -> Result<PositionsOutput, CliError> {
    let (_, origin, points) = load_measurements(cfg)?;
    let (path, w) = create(&cfg.out, "positions.csv")?;
    let mut w = csv::Writer::from_writer(w);
    let header = ["session_id", "index", "east", "north", "up", "latitude", "longitude", "altitude", "rsrp_dbm"];
    w.write_record(header).map_err(|e| out_err(&path, e))?;
    for p in &points {
        let g = to_geo(&p.position, &origin).map_err(geo_err)?;
        w.write_record([
            p.session_id.clone(),
            p.index.to_string(),
            format!("{:.6}", p.position.east),
            format!("{:.6}", p.position.north),
            format!("{:.6}", p.position.up),
            format!("{:.9}", g.latitude),
            format!("{:.9}", g.longitude),
            format!("{:.6}", g.altitude),
            format!("{:.6}", p.rsrp_dbm),
        ])
        .map_err(|e| out_err(&path, e))?;
    }
    w.flush().map_err(|e| out_err(&path, e))?;
    Ok(PositionsOutput { path, points: points.len() })
}

pub struct FeaturesOutput {
    pub path: PathBuf,
    pub rows: Vec<FeatureRow>,
    pub detected_openings: Option<PathBuf>,
}

impl fmt::Display for FeaturesOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed = self.rows.iter().filter(|r| r.features.is_err()).count();
        let partial = self.rows.iter().filter(|r| r.features.as_ref().is_ok_and(|fv| !fv.missing.is_empty())).count();
        writeln!(f, "wrote {} feature rows to {}", self.rows.len(), self.path.display())?;
        writeln!(f, "rows with missing features: {partial}; rows without features: {failed}")?;
        if let Some(p) = &self.detected_openings {
            writeln!(f, "detected openings written to {}", p.display())?;
        }
        Ok(())
    }
}

fn compute_features(cfg: &RunConfig) -> Result<(Vec<FeatureRow>, Option<PathBuf>), CliError> {
    let (_, origin, points) = load_measurements(cfg)?;
    let tx = load_tx(cfg)?;
    let (_, grid) = load_grid(cfg, &origin)?;
    let (openings, detected) = load_openings(cfg, &grid)?;
    let detected_path = if detected {
        let (path, w) = create(&cfg.out, "openings.json")?;
        write_openings_json(&openings, w).map_err(|e| out_err(&path, e))?;
        Some(path)
    } else {
        None
    };
    let ctx = FeatureContext::new(&tx, &origin, &grid, &openings).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok((extract_features(&points, &ctx), detected_path))
}

pub fn cmd_features(cfg: &RunConfig) -> Result<FeaturesOutput, CliError> {
    let (rows, detected_openings) = compute_features(cfg)?;
    let (path, w) = create(&cfg.out, "features.csv")?;
    write_features_csv(&rows, w).map_err(|e| out_err(&path, e))?;
    Ok(FeaturesOutput { path, rows, detected_openings })
}

pub struct EvaluateOutput {
    pub report: EvaluationReport,
    pub points_used: usize,
    pub models_csv: PathBuf,
    pub mae_csv: PathBuf,
    pub svg: PathBuf,
}

impl fmt::Display for EvaluateOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "points: {}", self.points_used)?;
        writeln!(f, "{:<6} {:>10} {:>16} {:>14}", "model", "R2", "log-likelihood", "residual MSE")?;
        for r in &self.report.models {
            match &r.result {
                Ok(s) => writeln!(f, "{:<6} {:>10.4} {:>16.2} {:>14.3}", r.id, s.r_squared, s.log_likelihood, s.residual_mse)?,
                Err(e) => writeln!(f, "{:<6} NA ({e})", r.id)?,
            }
        }
        if let Some(best) = best_by_r_squared(&self.report.models) {
            writeln!(f, "highest R2: {best}")?;
        }
        writeln!(f, "{:<12} {:>8} {:>8} {:>8} {:>8}", "variant", "MAE", "q1", "median", "q3")?;
        for v in &self.report.variants {
            match &v.result {
                Ok(s) => writeln!(f, "{:<12} {:>8.3} {:>8.3} {:>8.3} {:>8.3}", v.variant.label(), s.mae_db, s.q1, s.median, s.q3)?,
                Err(e) => writeln!(f, "{:<12} NA ({e})", v.variant.label())?,
            }
        }
        writeln!(f, "wrote {}, {}, {}", self.models_csv.display(), self.mae_csv.display(), self.svg.display())
    }
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvaluateOutput, CliError> {
    let tx = load_tx(cfg)?;
    let (features, rsrp): (Vec<FeatureVector>, Vec<f64>) = match &cfg.features {
        Some(_) => {
            let path = require(&cfg.features, "--features")?;
            let f = File::open(path).map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
            read_features_csv(f)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
                .into_iter()
                .filter_map(|r| r.features.map(|fv| (fv, r.rsrp_dbm)))
                .unzip()
        }
        None => compute_features(cfg)?
            .0
            .into_iter()
            .filter_map(|r| r.features.ok().map(|fv| (fv, r.rsrp_dbm)))
            .unzip(),
    };
    let mut specs = ModelSpec::builtin();
    for m in &cfg.models {
        specs.push(ModelSpec::parse(m).map_err(|e| CliError::Validation(e.to_string()))?);
    }
    let max_p = specs.iter().map(|s| s.regressors.len() + usize::from(s.include_intercept)).max().unwrap_or(1);
    if features.len() <= max_p {
        return Err(CliError::Numerical(format!(
            "{} usable points cannot support models with {max_p} parameters",
            features.len()
        )));
    }
    let models = compare_models(&specs, &features, &rsrp, cfg.mse_convention);
    let variants = mae_by_variant(&tx, &PathLossModel::default(), &features, &rsrp, &cfg.in_models);

    let (models_csv, w) = create(&cfg.out, "models.csv")?;
    write_model_csv(&models, w).map_err(|e| out_err(&models_csv, e))?;
    let (mae_csv, w) = create(&cfg.out, "mae.csv")?;
    write_mae_csv(&variants, w).map_err(|e| out_err(&mae_csv, e))?;
    let svg = cfg.out.join("mae.svg");
    fs::write(&svg, mae_box_plot_svg(&variants)).map_err(|e| out_err(&svg, e))?;
    Ok(EvaluateOutput { report: EvaluationReport { models, variants }, points_used: features.len(), models_csv, mae_csv, svg })
}

pub struct SynthOutput {
    pub dir: PathBuf,
    pub cloud_points: usize,
    pub sessions: usize,
    pub points: usize,
}

impl fmt::Display for SynthOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "wrote {} cloud points, {} sessions, {} measurement points to {}",
            self.cloud_points,
            self.sessions,
            self.points,
            self.dir.display()
        )?;
        writeln!(f, "run the pipeline with --config {}", self.dir.join("config.toml").display())
    }
}

fn synth_err(e: SynthError) -> CliError {
    match e {
        SynthError::Layout { .. } => CliError::Validation(e.to_string()),
        e => CliError::Validation(e.to_string()),
    }
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthOutput, CliError> {
    let layout = TunnelLayout::load(require(&cfg.layout, "--layout")?).map_err(synth_err)?;
    let tx = match &cfg.tx_config {
        Some(_) => load_tx(cfg)?,
        None => match layout.transmitter_ground() {
            Some(g) => TransmitterConfig::campaign_defaults(g.map_err(synth_err)?),
            None => return Err(CliError::MissingInput("--tx-config is required when the layout has no transmitter".into())),
        },
    };
    let truth = match cfg.truth {
        TruthKind::DistanceOnly => Truth::distance_only(),
        TruthKind::LinkBudget => Truth::link_budget(cfg.in_models.first().copied().unwrap_or_default()),
    };
    let cloud = generate_cloud(&layout, cfg.spacing, cfg.seed).map_err(synth_err)?;
    let campaign =
        generate_campaign(&layout, &tx, truth, cfg.sigma, cfg.seed, &CampaignParams::default()).map_err(synth_err)?;

    let dir = &cfg.out;
    let (path, w) = create(dir, "cloud.xyz")?;
    write_xyz(&cloud, w).map_err(|e| out_err(&path, e))?;
    let (spath, sw) = create(dir, "sessions.csv")?;
    let (_, ow) = create(dir, "observations.csv")?;
    write_sessions_csv(&campaign.sessions, sw, ow).map_err(|e| out_err(&spath, e))?;
    let (path, w) = create(dir, "openings.json")?;
    write_openings_json(&campaign.openings, w).map_err(|e| out_err(&path, e))?;
    let path = dir.join("tx.toml");
    fs::write(&path, tx.to_toml_string()).map_err(|e| out_err(&path, e))?;
    let path = dir.join("layout.json");
    fs::write(&path, layout.to_json_string()).map_err(|e| out_err(&path, e))?;

    let truth_rows: Vec<FeatureRow> = campaign
        .points
        .iter()
        .zip(&campaign.truth_features)
        .map(|(p, fv)| FeatureRow { session_id: p.session_id.clone(), index: p.index, rsrp_dbm: p.rsrp_dbm, features: Ok(fv.clone()) })
        .collect();
    let (path, w) = create(dir, "truth_features.csv")?;
    write_features_csv(&truth_rows, w).map_err(|e| out_err(&path, e))?;

    let run = ConfigFile {
        origin: Some(layout.origin),
        cloud: Some("cloud.xyz".into()),
        sessions: Some("sessions.csv".into()),
        observations: Some("observations.csv".into()),
        openings: Some("openings.json".into()),
        tx_config: Some("tx.toml".into()),
        voxel_size: Some(cfg.voxel_size),
        seed: Some(cfg.seed),
        ..Default::default()
    };
    let path = dir.join("config.toml");
    fs::write(&path, toml::to_string(&run).map_err(|e| out_err(&path, e))?).map_err(|e| out_err(&path, e))?;

    Ok(SynthOutput {
        dir: dir.clone(),
        cloud_points: cloud.len(),
        sessions: campaign.sessions.len(),
        points: campaign.points.len(),
    })
}
