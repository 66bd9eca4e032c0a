use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tunnelprop_core::geo::{GeoPoint, DEFAULT_VOXEL_SIZE};
use tunnelprop_core::pathloss::IndoorLossModel;
use tunnelprop_core::stats::MseConvention;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "tunnelprop", version, about = "Deep-indoor NB-IoT propagation analysis from LIDAR tunnel scans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the point cloud and sessions and print a summary.
    Ingest(CommonArgs),
    /// Interpolate measurement positions and write positions.csv.
    Positions(CommonArgs),
    /// Compute per-point features and write features.csv.
    Features(CommonArgs),
    /// Fit the regression models and score the indoor-loss variants.
    Evaluate(CommonArgs),
    /// Generate a synthetic scene and measurement campaign.
    Synth(CommonArgs),
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Ingest(a) | Command::Positions(a) | Command::Features(a) | Command::Evaluate(a) | Command::Synth(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthKind {
    DistanceOnly,
    LinkBudget,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Point cloud (.xyz or .ply, ASCII).
    #[arg(long)]
    pub cloud: Option<PathBuf>,
    /// Sessions CSV or JSON.
    #[arg(long)]
    pub sessions: Option<PathBuf>,
    /// Observations CSV (defaults to observations.csv next to the sessions).
    #[arg(long)]
    pub observations: Option<PathBuf>,
    /// Corridor openings JSON.
    #[arg(long)]
    pub openings: Option<PathBuf>,
    /// Transmitter configuration (.toml or .json).
    #[arg(long)]
    pub tx_config: Option<PathBuf>,
    #[arg(long)]
    pub voxel_size: Option<f64>,
    /// Indoor-loss variants (none, din2d, din3d, dpen2d, dpen3d); repeatable.
    #[arg(long, value_delimiter = ',')]
    pub in_model: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = ["df", "ml"])]
    pub mse_convention: Option<String>,
    /// Local frame origin as `lat,lon,alt`.
    #[arg(long)]
    pub origin: Option<String>,
    /// Precomputed features CSV for `evaluate`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Extra regression models as `ID=field+field`; repeatable.
    #[arg(long = "model")]
    pub models: Vec<String>,
    /// Main tunnel axis `e,n,u,e,n,u` for corridor detection when no
    /// openings file is given.
    #[arg(long)]
    pub main_axis: Option<String>,
    /// Tunnel layout JSON for `synth`.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Surface sample spacing for `synth`, metres.
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long, value_enum)]
    pub truth: Option<TruthKind>,
    /// Shadowing standard deviation for `synth`, dB.
    #[arg(long)]
    pub sigma: Option<f64>,
}

/// Run configuration file. Relative paths are resolved against the file's
/// directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub origin: Option<GeoPoint>,
    pub cloud: Option<PathBuf>,
    pub sessions: Option<PathBuf>,
    pub observations: Option<PathBuf>,
    pub openings: Option<PathBuf>,
    pub tx_config: Option<PathBuf>,
    pub voxel_size: Option<f64>,
    pub in_model: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mse_convention: Option<String>,
    pub features: Option<PathBuf>,
    pub models: Vec<String>,
    pub main_axis: Option<[[f64; 3]; 2]>,
    pub layout: Option<PathBuf>,
    pub spacing: Option<f64>,
    pub truth: Option<TruthKind>,
    pub sigma: Option<f64>,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub origin: Option<GeoPoint>,
    pub cloud: Option<PathBuf>,
    pub sessions: Option<PathBuf>,
    pub observations: Option<PathBuf>,
    pub openings: Option<PathBuf>,
    pub tx_config: Option<PathBuf>,
    pub voxel_size: f64,
    pub in_models: Vec<IndoorLossModel>,
    pub out: PathBuf,
    pub seed: u64,
    pub mse_convention: MseConvention,
    pub features: Option<PathBuf>,
    pub models: Vec<String>,
    pub main_axis: Option<[[f64; 3]; 2]>,
    pub layout: Option<PathBuf>,
    pub spacing: f64,
    pub truth: TruthKind,
    pub sigma: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            origin: None,
            cloud: None,
            sessions: None,
            observations: None,
            openings: None,
            tx_config: None,
            voxel_size: DEFAULT_VOXEL_SIZE,
            in_models: IndoorLossModel::ALL.to_vec(),
            out: PathBuf::from("out"),
            seed: 0,
            mse_convention: MseConvention::DegreesOfFreedom,
            features: None,
            models: Vec::new(),
            main_axis: None,
            layout: None,
            spacing: 0.1,
            truth: TruthKind::DistanceOnly,
            sigma: tunnelprop_core::pathloss::DEFAULT_SIGMA_P_DB,
        }
    }
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn parse_origin(s: &str) -> Result<GeoPoint, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| validation(format!("--origin expects lat,lon,alt, got '{s}'")))?;
    match v.as_slice() {
        [lat, lon, alt] => GeoPoint::new(*lat, *lon, *alt).map_err(|e| validation(e.to_string())),
        _ => Err(validation(format!("--origin expects lat,lon,alt, got '{s}'"))),
    }
}

fn parse_axis(s: &str) -> Result<[[f64; 3]; 2], CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| validation(format!("--main-axis expects e,n,u,e,n,u, got '{s}'")))?;
    match v.as_slice() {
        [a, b, c, d, e, f] => Ok([[*a, *b, *c], [*d, *e, *f]]),
        _ => Err(validation(format!("--main-axis expects e,n,u,e,n,u, got '{s}'"))),
    }
}

fn parse_models(names: &[String]) -> Result<Vec<IndoorLossModel>, CliError> {
    let mut out = Vec::new();
    for n in names {
        let m: IndoorLossModel = n.parse().map_err(validation)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

impl RunConfig {
    /// Merge the optional config file with command-line flags.
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
                let file: ConfigFile =
                    toml::from_str(&text).map_err(|e| validation(format!("{}: {e}", path.display())))?;
                (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (ConfigFile::default(), PathBuf::new()),
        };
        let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });

        let mut cfg = RunConfig::default();
        cfg.origin = match &args.origin {
            Some(s) => Some(parse_origin(s)?),
            None => file.origin,
        };
        cfg.cloud = args.cloud.clone().or(rel(file.cloud));
        cfg.sessions = args.sessions.clone().or(rel(file.sessions));
        cfg.observations = args.observations.clone().or(rel(file.observations));
        cfg.openings = args.openings.clone().or(rel(file.openings));
        cfg.tx_config = args.tx_config.clone().or(rel(file.tx_config));
        cfg.features = args.features.clone().or(rel(file.features));
        cfg.layout = args.layout.clone().or(rel(file.layout));
        if let Some(out) = args.out.clone().or(rel(file.out)) {
            cfg.out = out;
        }
        if let Some(v) = args.voxel_size.or(file.voxel_size) {
            if !(v > 0.0) || !v.is_finite() {
                return Err(validation(format!("voxel size must be positive, got {v}")));
            }
            cfg.voxel_size = v;
        }
        let in_models = if args.in_model.is_empty() { &file.in_model } else { &args.in_model };
        if !in_models.is_empty() {
            cfg.in_models = parse_models(in_models)?;
        }
        if let Some(seed) = args.seed.or(file.seed) {
            cfg.seed = seed;
        }
        if let Some(c) = args.mse_convention.as_ref().or(file.mse_convention.as_ref()) {
            cfg.mse_convention = c.parse().map_err(validation)?;
        }
        cfg.models = if args.models.is_empty() { file.models } else { args.models.clone() };
        cfg.main_axis = match &args.main_axis {
            Some(s) => Some(parse_axis(s)?),
            None => file.main_axis,
        };
        if let Some(s) = args.spacing.or(file.spacing) {
            cfg.spacing = s;
        }
        if let Some(t) = args.truth.or(file.truth) {
            cfg.truth = t;
        }
        if let Some(s) = args.sigma.or(file.sigma) {
            cfg.sigma = s;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "cloud = \"scan.xyz\"\nvoxel_size = 0.5\nseed = 3\nin_model = [\"none\", \"din2d\"]\n\n[origin]\nlatitude = 55.0\nlongitude = 12.0\naltitude = 10.0\n",
        )
        .unwrap();
        let args = CommonArgs { config: Some(path), voxel_size: Some(0.25), ..Default::default() };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.voxel_size, 0.25);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.cloud, Some(dir.path().join("scan.xyz")));
        assert_eq!(cfg.in_models, [IndoorLossModel::None, IndoorLossModel::DIn2d]);
        assert_eq!(cfg.origin.unwrap().altitude, 10.0);
    }

    #[test]
    fn bad_values_are_validation_errors() {
        let args = CommonArgs { origin: Some("55,12".into()), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Validation(_))));
        let args = CommonArgs { in_model: vec!["bogus".into()], ..Default::default() };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Validation(_))));
        let args = CommonArgs { voxel_size: Some(-1.0), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Validation(_))));
    }

    #[test]
    fn axis_parses() {
        assert_eq!(parse_axis("0,0,-5,30,0,-5").unwrap(), [[0.0, 0.0, -5.0], [30.0, 0.0, -5.0]]);
        assert!(parse_axis("1,2,3").is_err());
    }
}
