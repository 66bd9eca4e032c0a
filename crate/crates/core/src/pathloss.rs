//! Outdoor-to-indoor path loss and the downlink link budget.
//!
//! Total loss is the sum of a basic outdoor term (3GPP TR 38.901 UMa or UMi
//! street canyon), a frequency-dependent building penetration term, and an
//! indoor term of 0.5 dB per metre of the selected indoor feature. Shadowing
//! is a zero-mean normal in dB and only enters through explicit sampling.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureField, FeatureVector};
use crate::geo::{to_local, GeoError, GeoPoint, LocalPoint};

/// Speed of light as used by TR 38.901 breakpoint distances.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
/// Resource elements per NB-IoT carrier (12 subcarriers in 180 kHz).
pub const NB_IOT_SUBCARRIERS: u32 = 12;
/// Indoor loss slope in dB per metre.
pub const INDOOR_LOSS_DB_PER_M: f64 = 0.5;
pub const DEFAULT_SIGMA_P_DB: f64 = 7.0;
pub const DEFAULT_UE_HEIGHT_M: f64 = 1.5;

#[derive(Debug, Error)]
pub enum PathLossError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("outside model validity: {0}")]
    ModelValidity(String),
    #[error("feature '{0}' is missing")]
    FeatureMissing(FeatureField),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

fn default_height() -> f64 {
    30.0
}

/// eNB and link parameters of the measurement campaign.
///
/// `position.altitude` is the ground elevation at the mast; the antenna sits
/// `height_above_ground` above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitterConfig {
    pub position: GeoPoint,
    #[serde(default = "default_height")]
    pub height_above_ground: f64,
    /// Carrier frequency in Hz.
    pub frequency: f64,
    /// Carrier bandwidth in Hz.
    pub bandwidth: f64,
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub noise_figure_tx_db: f64,
    pub noise_figure_rx_db: f64,
}

impl TransmitterConfig {
    /// Campaign parameters: 820.5 MHz, 180 kHz, 46 dBm, 5/5.8 dBi, NF 5/3 dB,
    /// antenna 30 m above ground.
    pub fn campaign_defaults(position: GeoPoint) -> Self {
        TransmitterConfig {
            position,
            height_above_ground: 30.0,
            frequency: 820.5e6,
            bandwidth: 180e3,
            tx_power_dbm: 46.0,
            tx_gain_dbi: 5.0,
            rx_gain_dbi: 5.8,
            noise_figure_tx_db: 5.0,
            noise_figure_rx_db: 3.0,
        }
    }

    pub fn validate(&self) -> Result<(), PathLossError> {
        self.position.validate()?;
        if !(0.5e9..=100e9).contains(&self.frequency) {
            return Err(PathLossError::InvalidConfig(format!(
                "frequency {} Hz outside the 0.5-100 GHz model range",
                self.frequency
            )));
        }
        if !self.tx_power_dbm.is_finite() || !self.tx_gain_dbi.is_finite() || !self.rx_gain_dbi.is_finite() {
            return Err(PathLossError::InvalidConfig("power and gains must be finite".into()));
        }
        if !(self.height_above_ground > 0.0) || !(self.bandwidth > 0.0) {
            return Err(PathLossError::InvalidConfig("height and bandwidth must be positive".into()));
        }
        Ok(())
    }

    pub fn frequency_ghz(&self) -> f64 {
        self.frequency / 1e9
    }

    /// Antenna phase centre in the local frame of `origin`.
    pub fn antenna_local(&self, origin: &GeoPoint) -> Result<LocalPoint, GeoError> {
        let ground = to_local(&self.position, origin)?;
        Ok(ground + LocalPoint::new(0.0, 0.0, self.height_above_ground))
    }

    pub fn from_toml_str(s: &str) -> Result<Self, PathLossError> {
        let cfg: TransmitterConfig = toml_de(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self, PathLossError> {
        let cfg: TransmitterConfig =
            serde_json::from_str(s).map_err(|e| PathLossError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load `.json` or `.toml` by extension.
    pub fn load(path: &Path) -> Result<Self, PathLossError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PathLossError::InvalidConfig(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml_ser(self)
    }
}

fn toml_de(s: &str) -> Result<TransmitterConfig, PathLossError> {
    toml::from_str(s).map_err(|e| PathLossError::InvalidConfig(e.to_string()))
}

fn toml_ser(cfg: &TransmitterConfig) -> String {
    toml::to_string(cfg).expect("transmitter config serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Urban macro.
    #[default]
    Uma,
    /// Urban micro, street canyon.
    Umi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkCondition {
    Los,
    #[default]
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaterialProfile {
    #[default]
    LowLoss,
    HighLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidityMode {
    #[default]
    Strict,
    /// Clamp distance and UE height into the validity range.
    Clamp,
}

macro_rules! kebab_from_str {
    ($ty:ty, $($name:literal => $variant:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(format!("unknown value '{other}'")),
                }
            }
        }
    };
}

kebab_from_str!(Scenario, "uma" => Scenario::Uma, "umi" => Scenario::Umi);
kebab_from_str!(LinkCondition, "los" => LinkCondition::Los, "nlos" => LinkCondition::Nlos);
kebab_from_str!(MaterialProfile, "low-loss" => MaterialProfile::LowLoss, "low_loss" => MaterialProfile::LowLoss,
    "high-loss" => MaterialProfile::HighLoss, "high_loss" => MaterialProfile::HighLoss);

/// Which feature drives the indoor loss term, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum IndoorLossModel {
    #[default]
    None,
    DIn2d,
    DIn3d,
    DPen2d,
    DPen3d,
}

impl IndoorLossModel {
    pub const ALL: [IndoorLossModel; 5] = [
        IndoorLossModel::None,
        IndoorLossModel::DIn2d,
        IndoorLossModel::DIn3d,
        IndoorLossModel::DPen2d,
        IndoorLossModel::DPen3d,
    ];

    pub fn feature(self) -> Option<FeatureField> {
        match self {
            IndoorLossModel::None => None,
            IndoorLossModel::DIn2d => Some(FeatureField::DIn2d),
            IndoorLossModel::DIn3d => Some(FeatureField::DIn3d),
            IndoorLossModel::DPen2d => Some(FeatureField::DPen2d),
            IndoorLossModel::DPen3d => Some(FeatureField::DPen3d),
        }
    }

    pub fn label(self) -> &'static str {
        match self.feature() {
            None => "none",
            Some(f) => f.name(),
        }
    }
}

impl fmt::Display for IndoorLossModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for IndoorLossModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "").as_str() {
            "none" => Ok(IndoorLossModel::None),
            "din2d" => Ok(IndoorLossModel::DIn2d),
            "din3d" => Ok(IndoorLossModel::DIn3d),
            "dpen2d" => Ok(IndoorLossModel::DPen2d),
            "dpen3d" => Ok(IndoorLossModel::DPen3d),
            _ => Err(format!("unknown indoor loss model '{s}' (none, din2d, din3d, dpen2d, dpen3d)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossComponents {
    pub pl_b_db: f64,
    pub pl_tw_db: f64,
    pub pl_in_db: f64,
    pub sigma_p_db: f64,
    /// Deterministic total; shadowing excluded.
    pub total_db: f64,
}

impl PathLossComponents {
    pub fn new(pl_b_db: f64, pl_tw_db: f64, pl_in_db: f64, sigma_p_db: f64) -> Self {
        PathLossComponents { pl_b_db, pl_tw_db, pl_in_db, sigma_p_db, total_db: pl_b_db + pl_tw_db + pl_in_db }
    }
}

/// Indoor loss for `d` metres of indoor path.
pub fn pl_in(d: f64) -> Result<f64, PathLossError> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(PathLossError::InvalidInput(format!("indoor distance must be a finite non-negative value, got {d}")));
    }
    Ok(INDOOR_LOSS_DB_PER_M * d)
}

/// Everything except the transmitter that shapes a loss prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLossModel {
    pub scenario: Scenario,
    pub condition: LinkCondition,
    pub ue_height: f64,
    pub material: MaterialProfile,
    pub validity: ValidityMode,
    pub sigma_p_db: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        PathLossModel {
            scenario: Scenario::Uma,
            condition: LinkCondition::Nlos,
            ue_height: DEFAULT_UE_HEIGHT_M,
            material: MaterialProfile::LowLoss,
            validity: ValidityMode::Strict,
            sigma_p_db: DEFAULT_SIGMA_P_DB,
        }
    }
}

impl PathLossModel {
    pub fn basic(&self, cfg: &TransmitterConfig, d3d: f64) -> Result<f64, PathLossError> {
        basic_loss(cfg, d3d, self.ue_height, self.condition, self.scenario, self.validity)
    }

    /// Predict the loss decomposition at one measurement point.
    pub fn predict_total_loss(
        &self,
        cfg: &TransmitterConfig,
        fv: &FeatureVector,
        in_model: IndoorLossModel,
    ) -> Result<PathLossComponents, PathLossError> {
        let indoor = match in_model.feature() {
            None => 0.0,
            Some(field) => pl_in(fv.get(field).ok_or(PathLossError::FeatureMissing(field))?)?,
        };
        let pl_b = self.basic(cfg, fv.d3d)?;
        Ok(PathLossComponents::new(pl_b, pl_tw(cfg, self.material), indoor, self.sigma_p_db))
    }
}

/// Basic outdoor loss, TR 38.901 UMa, strict validity.
pub fn pl_basic(cfg: &TransmitterConfig, d3d: f64, rx_height: f64, condition: LinkCondition) -> Result<f64, PathLossError> {
    basic_loss(cfg, d3d, rx_height, condition, Scenario::Uma, ValidityMode::Strict)
}

struct ScenarioCoefficients {
    los_intercept: f64,
    los_near_slope: f64,
    los_far_breakpoint_coeff: f64,
    nlos_intercept: f64,
    nlos_slope: f64,
    nlos_freq_coeff: f64,
    nlos_ut_coeff: f64,
}

const UMA: ScenarioCoefficients = ScenarioCoefficients {
    los_intercept: 28.0,
    los_near_slope: 22.0,
    los_far_breakpoint_coeff: 9.0,
    nlos_intercept: 13.54,
    nlos_slope: 39.08,
    nlos_freq_coeff: 20.0,
    nlos_ut_coeff: 0.6,
};

const UMI: ScenarioCoefficients = ScenarioCoefficients {
    los_intercept: 32.4,
    los_near_slope: 21.0,
    los_far_breakpoint_coeff: 9.5,
    nlos_intercept: 22.4,
    nlos_slope: 35.3,
    nlos_freq_coeff: 21.3,
    nlos_ut_coeff: 0.3,
};

const MIN_D2D: f64 = 10.0;
const MAX_D2D: f64 = 5000.0;
const UT_HEIGHT_RANGE: (f64, f64) = (1.5, 22.5);
/// Effective environment height; TR 38.901 uses 1 m for UT heights below 13 m.
const ENVIRONMENT_HEIGHT: f64 = 1.0;

pub fn basic_loss(
    cfg: &TransmitterConfig,
    d3d: f64,
    rx_height: f64,
    condition: LinkCondition,
    scenario: Scenario,
    validity: ValidityMode,
) -> Result<f64, PathLossError> {
    if !d3d.is_finite() || !rx_height.is_finite() {
        return Err(PathLossError::InvalidInput("distance and UE height must be finite".into()));
    }
    let c = match scenario {
        Scenario::Uma => &UMA,
        Scenario::Umi => &UMI,
    };
    let h_bs = cfg.height_above_ground;
    let mut h_ut = rx_height;
    if !(UT_HEIGHT_RANGE.0..=UT_HEIGHT_RANGE.1).contains(&h_ut) {
        match validity {
            ValidityMode::Strict => {
                return Err(PathLossError::ModelValidity(format!("UE height {h_ut} m outside 1.5-22.5 m")))
            }
            ValidityMode::Clamp => h_ut = h_ut.clamp(UT_HEIGHT_RANGE.0, UT_HEIGHT_RANGE.1),
        }
    }
    let dh = h_bs - h_ut;
    let mut d2d = (d3d * d3d - dh * dh).max(0.0).sqrt();
    if !(MIN_D2D..=MAX_D2D).contains(&d2d) || d3d < dh.abs() {
        match validity {
            ValidityMode::Strict => {
                return Err(PathLossError::ModelValidity(format!(
                    "2D distance {d2d:.2} m (3D {d3d:.2} m) outside 10-5000 m"
                )))
            }
            ValidityMode::Clamp => d2d = d2d.clamp(MIN_D2D, MAX_D2D),
        }
    }
    let d3d = d2d.hypot(dh);
    let fc = cfg.frequency_ghz();

    let breakpoint = 4.0 * (h_bs - ENVIRONMENT_HEIGHT) * (h_ut - ENVIRONMENT_HEIGHT) * cfg.frequency / SPEED_OF_LIGHT;
    let los = if d2d <= breakpoint {
        c.los_intercept + c.los_near_slope * d3d.log10() + 20.0 * fc.log10()
    } else {
        c.los_intercept + 40.0 * d3d.log10() + 20.0 * fc.log10()
            - c.los_far_breakpoint_coeff * (breakpoint * breakpoint + dh * dh).log10()
    };
    Ok(match condition {
        LinkCondition::Los => los,
        LinkCondition::Nlos => {
            let nlos = c.nlos_intercept + c.nlos_slope * d3d.log10() + c.nlos_freq_coeff * fc.log10()
                - c.nlos_ut_coeff * (h_ut - 1.5);
            los.max(nlos)
        }
    })
}

/// Building penetration loss of the low/high-loss composite walls.
pub fn pl_tw(cfg: &TransmitterConfig, material_profile: MaterialProfile) -> f64 {
    let f = cfg.frequency_ghz();
    let glass = 2.0 + 0.2 * f;
    let irr_glass = 23.0 + 0.3 * f;
    let concrete = 5.0 + 4.0 * f;
    let lin = |db: f64| 10f64.powf(-db / 10.0);
    let mix = match material_profile {
        MaterialProfile::LowLoss => 0.3 * lin(glass) + 0.7 * lin(concrete),
        MaterialProfile::HighLoss => 0.7 * lin(irr_glass) + 0.3 * lin(concrete),
    };
    5.0 - 10.0 * mix.log10()
}

/// Predicted RSRP (per resource element) for a loss decomposition.
pub fn predict_rsrp(cfg: &TransmitterConfig, components: &PathLossComponents) -> f64 {
    cfg.tx_power_dbm - 10.0 * f64::from(NB_IOT_SUBCARRIERS).log10() + cfg.tx_gain_dbi + cfg.rx_gain_dbi
        - components.total_db
}

/// Seeded zero-mean normal draws in dB.
#[derive(Debug, Clone)]
pub struct ShadowingSampler {
    normal: Normal<f64>,
    rng: ChaCha8Rng,
}

impl ShadowingSampler {
    pub fn new(sigma_p_db: f64, seed: u64) -> Result<Self, PathLossError> {
        if !(sigma_p_db >= 0.0) || !sigma_p_db.is_finite() {
            return Err(PathLossError::InvalidInput(format!("sigma_p must be non-negative, got {sigma_p_db}")));
        }
        let normal = Normal::new(0.0, sigma_p_db).map_err(|e| PathLossError::InvalidInput(e.to_string()))?;
        Ok(ShadowingSampler { normal, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn draw(&mut self) -> f64 {
        self.normal.sample(&mut self.rng)
    }
}

pub fn sample_shadowing(sigma_p_db: f64, seed: u64) -> Result<f64, PathLossError> {
    Ok(ShadowingSampler::new(sigma_p_db, seed)?.draw())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TransmitterConfig {
        TransmitterConfig::campaign_defaults(GeoPoint::new(55.7858, 12.5213, 30.0).unwrap())
    }

    fn features(d_in_2d: Option<f64>, d_pen_3d: Option<f64>) -> FeatureVector {
        FeatureVector { d2d: 300.0, d3d: 302.0, d_in_2d, d_pen_3d, ..FeatureVector::default() }
    }

    #[test]
    fn indoor_loss_is_half_a_db_per_metre() {
        assert_eq!(pl_in(10.0).unwrap(), 5.0);
        assert_eq!(pl_in(0.0).unwrap(), 0.0);
        assert!((pl_in(24.6).unwrap() - 12.3).abs() < 1e-12);
        assert!(matches!(pl_in(-1.0), Err(PathLossError::InvalidInput(_))));
        assert!(pl_in(f64::NAN).is_err());
    }

    #[test]
    fn uma_nlos_matches_hand_evaluation() {
        // Hand evaluation at 820.5 MHz, 500 m, h_BS 30 m, h_UT 1.5 m:
        //   d'_BP = 4 * 29 * 0.5 * 820.5e6 / 3e8 = 158.63 m, so the far LOS branch applies.
        //   PL_LOS = 28 + 40 lg 500 + 20 lg 0.8205 - 9 lg(158.63^2 + 28.5^2) = 94.5094
        //   PL'_NLOS = 13.54 + 39.08 lg 500 + 20 lg 0.8205 = 117.2977
        let pl = pl_basic(&cfg(), 500.0, 1.5, LinkCondition::Nlos).unwrap();
        assert!((pl - 117.2977).abs() < 0.01, "{pl}");
        let los = pl_basic(&cfg(), 500.0, 1.5, LinkCondition::Los).unwrap();
        assert!((los - 94.5094).abs() < 0.01, "{los}");
    }

    #[test]
    fn doubling_distance_adds_the_log_slope() {
        let a = pl_basic(&cfg(), 800.0, 1.5, LinkCondition::Nlos).unwrap();
        let b = pl_basic(&cfg(), 1600.0, 1.5, LinkCondition::Nlos).unwrap();
        assert!((b - a - 39.08 * 2f64.log10()).abs() < 0.01);
        let a = pl_basic(&cfg(), 800.0, 1.5, LinkCondition::Los).unwrap();
        let b = pl_basic(&cfg(), 1600.0, 1.5, LinkCondition::Los).unwrap();
        // Far LOS branch: 40 dB/decade in d3D.
        assert!((b - a - 40.0 * 2f64.log10()).abs() < 0.01);
    }

    #[test]
    fn short_range_is_outside_validity() {
        assert!(matches!(pl_basic(&cfg(), 30.0, 1.5, LinkCondition::Nlos), Err(PathLossError::ModelValidity(_))));
        let clamped = basic_loss(&cfg(), 30.0, 1.5, LinkCondition::Nlos, Scenario::Uma, ValidityMode::Clamp).unwrap();
        let at_min = pl_basic(&cfg(), 10f64.hypot(28.5), 1.5, LinkCondition::Nlos).unwrap();
        assert!((clamped - at_min).abs() < 1e-9);
        assert!(pl_basic(&cfg(), 500.0, -5.0, LinkCondition::Nlos).is_err());
    }

    #[test]
    fn los_branches_meet_at_breakpoint() {
        let c = cfg();
        let dh: f64 = 28.5;
        let bp = 4.0 * 29.0 * 0.5 * c.frequency / SPEED_OF_LIGHT;
        let below = pl_basic(&c, (bp - 1e-6).hypot(dh), 1.5, LinkCondition::Los).unwrap();
        let above = pl_basic(&c, (bp + 1e-6).hypot(dh), 1.5, LinkCondition::Los).unwrap();
        assert!((below - above).abs() < 1e-6);
    }

    #[test]
    fn umi_is_selectable() {
        let c = cfg();
        let uma = basic_loss(&c, 500.0, 1.5, LinkCondition::Nlos, Scenario::Uma, ValidityMode::Strict).unwrap();
        let umi = basic_loss(&c, 500.0, 1.5, LinkCondition::Nlos, Scenario::Umi, ValidityMode::Strict).unwrap();
        // 35.3 lg 500 + 22.4 + 21.3 lg 0.8205 = 115.8435
        assert!((umi - 115.8435).abs() < 0.01, "{umi}");
        assert_ne!(uma, umi);
    }

    #[test]
    fn penetration_loss_low_loss_hand_value() {
        // L_glass = 2.1641, L_concrete = 8.282 at 0.8205 GHz
        // 5 - 10 lg(0.3 * 10^-0.21641 + 0.7 * 10^-0.8282) = 10.4327
        let v = pl_tw(&cfg(), MaterialProfile::LowLoss);
        assert!((v - 10.4327).abs() < 0.01, "{v}");
        assert_eq!(v, pl_tw(&cfg(), MaterialProfile::LowLoss));
    }

    #[test]
    fn high_loss_dominates_low_loss() {
        let mut c = cfg();
        for i in 0..=200 {
            c.frequency = 0.5e9 + i as f64 * (99.5e9 / 200.0);
            assert!(pl_tw(&c, MaterialProfile::HighLoss) >= pl_tw(&c, MaterialProfile::LowLoss));
        }
    }

    #[test]
    fn decomposition_by_variant() {
        let model = PathLossModel::default();
        let fv = features(Some(10.0), Some(7.5));
        let none = model.predict_total_loss(&cfg(), &fv, IndoorLossModel::None).unwrap();
        assert_eq!(none.pl_in_db, 0.0);
        assert_eq!(none.total_db, none.pl_b_db + none.pl_tw_db);
        let din = model.predict_total_loss(&cfg(), &fv, IndoorLossModel::DIn2d).unwrap();
        assert_eq!(din.pl_in_db, 5.0);
        let pen = model.predict_total_loss(&cfg(), &fv, IndoorLossModel::DPen3d).unwrap();
        assert!((pen.total_db - (none.total_db + 0.5 * 7.5)).abs() < 1e-12);
        assert!(matches!(
            model.predict_total_loss(&cfg(), &fv, IndoorLossModel::DIn3d),
            Err(PathLossError::FeatureMissing(FeatureField::DIn3d))
        ));
    }

    #[test]
    fn link_budget_arithmetic() {
        let c = cfg();
        let zero = PathLossComponents::new(0.0, 0.0, 0.0, 0.0);
        let rsrp = predict_rsrp(&c, &zero);
        assert!((rsrp - (46.0 - 10.0 * 12f64.log10() + 5.0 + 5.8)).abs() < 1e-9);
        assert!((rsrp - 46.01).abs() < 0.005);
        let lossy = PathLossComponents::new(10.0, 0.0, 0.0, 0.0);
        assert!((rsrp - predict_rsrp(&c, &lossy) - 10.0).abs() < 1e-12);
        let mut hot = c.clone();
        hot.rx_gain_dbi += 3.0;
        assert!((predict_rsrp(&hot, &zero) - rsrp - 3.0).abs() < 1e-12);
    }

    #[test]
    fn shadowing_draws() {
        assert_eq!(sample_shadowing(0.0, 7).unwrap(), 0.0);
        assert_eq!(sample_shadowing(8.0, 42).unwrap(), sample_shadowing(8.0, 42).unwrap());
        assert!(matches!(sample_shadowing(-1.0, 1), Err(PathLossError::InvalidInput(_))));
    }

    #[test]
    fn shadowing_statistics_at_sigma_8() {
        let mut s = ShadowingSampler::new(8.0, 2024).unwrap();
        let n = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let x = s.draw();
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let sd = (sq / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((7.9..=8.1).contains(&sd), "sd {sd}");
    }

    #[test]
    fn config_file_round_trip() {
        let c = cfg();
        assert_eq!(TransmitterConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(TransmitterConfig::from_json_str(&json).unwrap(), c);
        let mut bad = c.clone();
        bad.frequency = 100e6;
        assert!(matches!(bad.validate(), Err(PathLossError::InvalidConfig(_))));
    }

    #[test]
    fn variant_names_parse() {
        for v in IndoorLossModel::ALL {
            assert_eq!(v.label().parse::<IndoorLossModel>().unwrap(), v);
        }
        assert_eq!("dpen3d".parse::<IndoorLossModel>().unwrap(), IndoorLossModel::DPen3d);
        assert!("d_out".parse::<IndoorLossModel>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn indoor_loss_exact(d in 0.0f64..1e4) {
                prop_assert_eq!(pl_in(d).unwrap() - 0.5 * d, 0.0);
            }

            #[test]
            fn basic_loss_non_decreasing(a in 40.0f64..4900.0, b in 40.0f64..4900.0, los in any::<bool>()) {
                let cond = if los { LinkCondition::Los } else { LinkCondition::Nlos };
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let c = cfg();
                prop_assert!(pl_basic(&c, lo, 1.5, cond).unwrap() <= pl_basic(&c, hi, 1.5, cond).unwrap() + 1e-9);
            }

            #[test]
            fn total_is_sum_of_terms(b in 0.0f64..200.0, t in 0.0f64..40.0, i in 0.0f64..100.0) {
                let c = PathLossComponents::new(b, t, i, 7.0);
                prop_assert_eq!(c.total_db, b + t + i);
            }
        }
    }
}
