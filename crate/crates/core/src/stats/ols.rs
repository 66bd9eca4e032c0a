use super::StatsError;

/// Dense n×p design matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self, StatsError> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(StatsError::LengthMismatch("design columns differ in length".into()));
        }
        Ok(DesignMatrix { n, p, data: columns.concat() })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, StatsError> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(StatsError::LengthMismatch("design rows differ in length".into()));
        }
        let mut data = vec![0.0; n * p];
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                data[j * n + i] = *v;
            }
        }
        Ok(DesignMatrix { n, p, data })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, b) in beta.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(self.column(j)) {
                *o += b * x;
            }
        }
        out
    }
}

/// Which denominator residual MSE uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MseConvention {
    /// RSS / (n - p)
    #[default]
    DegreesOfFreedom,
    /// RSS / n
    MaximumLikelihood,
}

impl std::str::FromStr for MseConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "df" => Ok(MseConvention::DegreesOfFreedom),
            "ml" => Ok(MseConvention::MaximumLikelihood),
            _ => Err(format!("unknown MSE convention '{s}' (df, ml)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    /// Total sum of squares about the mean of y.
    pub tss: f64,
    pub n: usize,
    pub p: usize,
}

impl RegressionFit {
    pub fn r_squared(&self) -> Result<f64, StatsError> {
        if self.tss == 0.0 {
            return Err(StatsError::UndefinedStatistic("R² of a constant response".into()));
        }
        Ok(1.0 - self.rss / self.tss)
    }

    /// Gaussian log-likelihood at the maximum-likelihood variance RSS/n.
    pub fn log_likelihood(&self) -> Result<f64, StatsError> {
        if self.rss <= 0.0 {
            return Err(StatsError::DegenerateLikelihood);
        }
        Ok(gaussian_log_likelihood(self.n, self.rss))
    }

    pub fn residual_mse(&self, convention: MseConvention) -> f64 {
        match convention {
            MseConvention::DegreesOfFreedom => self.rss / (self.n - self.p) as f64,
            MseConvention::MaximumLikelihood => self.rss / self.n as f64,
        }
    }
}

pub fn gaussian_log_likelihood(n: usize, rss: f64) -> f64 {
    let n = n as f64;
    -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (rss / n).ln() + 1.0)
}

const RANK_TOL: f64 = 1e-10;

/// Least-squares fit of `y` on the columns of `x` via Householder QR.
pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<RegressionFit, StatsError> {
    let (n, p) = (x.n, x.p);
    if y.len() != n {
        return Err(StatsError::LengthMismatch(format!("{n} design rows but {} responses", y.len())));
    }
    if p == 0 || n <= p {
        return Err(StatsError::InsufficientData { n, p });
    }
    if x.data.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let scale = (0..p).map(|j| norm(x.column(j))).fold(0.0, f64::max);
    let mut a = x.data.clone();
    let mut qty = y.to_vec();
    let mut v = vec![0.0; n];
    for k in 0..p {
        let col = &a[k * n + k..(k + 1) * n];
        let alpha = norm(col);
        if alpha <= RANK_TOL * scale {
            return Err(StatsError::SingularDesign);
        }
        let alpha = if col[0] > 0.0 { -alpha } else { alpha };
        let m = n - k;
        v[..m].copy_from_slice(col);
        v[0] -= alpha;
        let vnorm2: f64 = v[..m].iter().map(|t| t * t).sum();
        let reflect = |target: &mut [f64]| {
            let s = 2.0 * dot(&v[..m], target) / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v[..m]) {
                *t -= s * vi;
            }
        };
        a[k * n + k] = alpha;
        for t in &mut a[k * n + k + 1..(k + 1) * n] {
            *t = 0.0;
        }
        for j in k + 1..p {
            reflect(&mut a[j * n + k..(j + 1) * n]);
        }
        reflect(&mut qty[k..]);
    }
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for j in i + 1..p {
            s -= a[j * n + i] * beta[j];
        }
        beta[i] = s / a[i * n + i];
    }
    let fitted = x.mul_vec(&beta);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(o, f)| o - f).collect();
    let rss = residuals.iter().map(|r| r * r).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss = y.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(RegressionFit { coefficients: beta, residuals, rss, tss, n, p })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    // Scaled to avoid overflow on large columns.
    let m = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * a.iter().map(|v| (v / m).powi(2)).sum::<f64>().sqrt()
}
