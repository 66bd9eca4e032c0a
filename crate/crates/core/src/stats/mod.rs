//! Regression model comparison and MAE evaluation of indoor-loss variants.

mod ols;
mod svg;

use std::io::Write;

use thiserror::Error;

use crate::features::{FeatureField, FeatureVector};
use crate::pathloss::{predict_rsrp, IndoorLossModel, PathLossModel, TransmitterConfig};

pub use ols::{fit_ols, gaussian_log_likelihood, DesignMatrix, MseConvention, RegressionFit};
pub use svg::mae_box_plot_svg;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("need more observations than parameters (n = {n}, p = {p})")]
    InsufficientData { n: usize, p: usize },
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),
    #[error("log-likelihood is unbounded for a zero residual sum of squares")]
    DegenerateLikelihood,
    #[error("non-finite value in regression data")]
    NonFinite,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("feature '{0}' is missing where it is needed")]
    FeatureMissing(FeatureField),
    #[error("prediction failed: {0}")]
    Prediction(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub id: String,
    pub regressors: Vec<FeatureField>,
    pub include_intercept: bool,
}

impl ModelSpec {
    pub fn new(id: impl Into<String>, regressors: Vec<FeatureField>, include_intercept: bool) -> Result<Self, StatsError> {
        let id = id.into();
        if regressors.is_empty() {
            return Err(StatsError::InvalidSpec(format!("model '{id}' has no regressors")));
        }
        Ok(ModelSpec { id, regressors, include_intercept })
    }

    /// Parse `ID=field+field`, e.g. `M8=d3d+depth`. Always with intercept.
    pub fn parse(s: &str) -> Result<Self, StatsError> {
        let (id, rhs) = s.split_once('=').ok_or_else(|| StatsError::InvalidSpec(format!("expected ID=field+..., got '{s}'")))?;
        let regressors = rhs
            .split('+')
            .map(|f| f.trim().parse::<FeatureField>().map_err(StatsError::InvalidSpec))
            .collect::<Result<_, _>>()?;
        ModelSpec::new(id.trim(), regressors, true)
    }

    /// The seven comparison models M1 to M7.
    pub fn builtin() -> Vec<ModelSpec> {
        use FeatureField::*;
        [
            ("M1", vec![D3d]),
            ("M2", vec![DIn2d]),
            ("M3", vec![DPen3d]),
            ("M4", vec![DPen3d, DIn2d]),
            ("M5", vec![DCorAvg]),
            ("M6", vec![DPen3d, DIn2d, DCorAvg]),
            ("M7", vec![AzimuthPhi, ElevationTheta]),
        ]
        .into_iter()
        .map(|(id, r)| ModelSpec { id: id.into(), regressors: r, include_intercept: true })
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelStats {
    /// Regressor coefficients in spec order, then the intercept if any.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    /// `+inf` when the fit is exact.
    pub log_likelihood: f64,
    pub residual_mse: f64,
    pub n: usize,
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRow {
    pub id: String,
    pub result: Result<ModelStats, StatsError>,
}

/// Fit one model. Points lacking any of its regressors are left out.
pub fn fit_model(spec: &ModelSpec, features: &[FeatureVector], rsrp: &[f64], convention: MseConvention) -> Result<ModelStats, StatsError> {
    if features.len() != rsrp.len() {
        return Err(StatsError::LengthMismatch(format!("{} feature rows, {} RSRP values", features.len(), rsrp.len())));
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (fv, r) in features.iter().zip(rsrp) {
        let vals: Option<Vec<f64>> = spec.regressors.iter().map(|f| fv.get(*f)).collect();
        if let Some(mut vals) = vals {
            if spec.include_intercept {
                vals.push(1.0);
            }
            rows.push(vals);
            y.push(*r);
        }
    }
    if rows.is_empty() {
        let missing = spec.regressors.iter().find(|f| features.iter().all(|fv| fv.get(**f).is_none()));
        return Err(match missing {
            Some(f) => StatsError::FeatureMissing(*f),
            None => StatsError::InsufficientData { n: 0, p: spec.regressors.len() + usize::from(spec.include_intercept) },
        });
    }
    let x = DesignMatrix::from_rows(&rows)?;
    let fit = fit_ols(&x, &y)?;
    let log_likelihood = match fit.log_likelihood() {
        Ok(ll) => ll,
        Err(StatsError::DegenerateLikelihood) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(ModelStats {
        r_squared: fit.r_squared()?,
        log_likelihood,
        residual_mse: fit.residual_mse(convention),
        n: fit.n,
        p: fit.p,
        coefficients: fit.coefficients,
    })
}

/// One row per spec, in input order; fit failures are kept as error rows.
pub fn compare_models(specs: &[ModelSpec], features: &[FeatureVector], rsrp: &[f64], convention: MseConvention) -> Vec<ModelRow> {
    specs
        .iter()
        .map(|s| ModelRow { id: s.id.clone(), result: fit_model(s, features, rsrp, convention) })
        .collect()
}

/// Id of the successful row with the highest R².
pub fn best_by_r_squared(rows: &[ModelRow]) -> Option<&str> {
    rows.iter()
        .filter_map(|r| r.result.as_ref().ok().map(|s| (r.id.as_str(), s.r_squared)))
        .fold(None, |best: Option<(&str, f64)>, (id, r2)| match best {
            Some((_, b)) if b >= r2 => best,
            _ => Some((id, r2)),
        })
        .map(|(id, _)| id)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaeSummary {
    pub mae_db: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl MaeSummary {
    pub fn from_errors(abs_errors: &[f64]) -> Option<Self> {
        if abs_errors.is_empty() {
            return None;
        }
        let mut s = abs_errors.to_vec();
        s.sort_by(f64::total_cmp);
        Some(MaeSummary {
            mae_db: s.iter().sum::<f64>() / s.len() as f64,
            q1: quantile_sorted(&s, 0.25),
            median: quantile_sorted(&s, 0.5),
            q3: quantile_sorted(&s, 0.75),
            min: s[0],
            max: s[s.len() - 1],
            n: s.len(),
        })
    }
}

/// Linear interpolation between order statistics at position q·(n−1).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRow {
    pub variant: IndoorLossModel,
    pub result: Result<MaeSummary, StatsError>,
}

/// Mean absolute RSRP prediction error of each indoor-loss variant, with
/// shadowing excluded from the prediction. A variant whose feature is
/// missing at any point is reported as an error row.
pub fn mae_by_variant(
    cfg: &TransmitterConfig,
    model: &PathLossModel,
    features: &[FeatureVector],
    rsrp: &[f64],
    variants: &[IndoorLossModel],
) -> Vec<VariantRow> {
    variants
        .iter()
        .map(|&variant| {
            let result = (|| {
                if features.len() != rsrp.len() {
                    return Err(StatsError::LengthMismatch(format!("{} feature rows, {} RSRP values", features.len(), rsrp.len())));
                }
                let errors = features
                    .iter()
                    .zip(rsrp)
                    .map(|(fv, obs)| {
                        let c = model.predict_total_loss(cfg, fv, variant).map_err(|e| match e {
                            crate::pathloss::PathLossError::FeatureMissing(f) => StatsError::FeatureMissing(f),
                            e => StatsError::Prediction(e.to_string()),
                        })?;
                        Ok((predict_rsrp(cfg, &c) - obs).abs())
                    })
                    .collect::<Result<Vec<f64>, StatsError>>()?;
                MaeSummary::from_errors(&errors).ok_or(StatsError::InsufficientData { n: 0, p: 0 })
            })();
            VariantRow { variant, result }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub models: Vec<ModelRow>,
    pub variants: Vec<VariantRow>,
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:.6}")
    }
}

pub const MODEL_CSV_HEADER: [&str; 4] = ["id", "r2", "log_likelihood", "residual_mse"];
pub const MAE_CSV_HEADER: [&str; 5] = ["variant", "mae_db", "q1", "median", "q3"];

/// Failed rows carry `NA` in every statistic column.
pub fn write_model_csv<W: Write>(rows: &[ModelRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MODEL_CSV_HEADER)?;
    for r in rows {
        match &r.result {
            Ok(s) => w.write_record([r.id.clone(), fmt_num(s.r_squared), fmt_num(s.log_likelihood), fmt_num(s.residual_mse)])?,
            Err(_) => w.write_record([r.id.as_str(), "NA", "NA", "NA"])?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_mae_csv<W: Write>(rows: &[VariantRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MAE_CSV_HEADER)?;
    for r in rows {
        let label = r.variant.label();
        match &r.result {
            Ok(s) => w.write_record([label.to_string(), fmt_num(s.mae_db), fmt_num(s.q1), fmt_num(s.median), fmt_num(s.q3)])?,
            Err(_) => w.write_record([label, "NA", "NA", "NA", "NA"])?,
        }
    }
    w.flush()?;
    Ok(())
}
