//! Kernel estimators of the regression operator m, the conditional variance
//! U, the observation probability pi, and the fourth-moment operator omega,
//! in complete, simplified (observed-only) and imputed flavors.

use serde::{Deserialize, Serialize};

use crate::error::{FvolError, Result};
use crate::fda::{Curve, FdaDataset};
use crate::kernel::Kernel;
use crate::semimetric::{distance_matrix, distances_to, SemiMetric, SemiMetricSpec};

/// Floor under fitted variances when standardizing residuals for omega.
pub const U_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMode {
    Complete,
    Simplified,
    Imputed,
}

impl std::str::FromStr for EstimatorMode {
    type Err = FvolError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "complete" => Ok(EstimatorMode::Complete),
            "simplified" => Ok(EstimatorMode::Simplified),
            "imputed" => Ok(EstimatorMode::Imputed),
            other => Err(FvolError::InvalidParameter(format!(
                "unknown mode `{other}`"
            ))),
        }
    }
}

impl EstimatorMode {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorMode::Complete => "complete",
            EstimatorMode::Simplified => "simplified",
            EstimatorMode::Imputed => "imputed",
        }
    }
}

/// Kernels, semi-metrics and bandwidths for the four estimation stages
/// (m, U, omega, pi).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kernel_k: Kernel,
    pub kernel_w: Kernel,
    pub kernel_h: Kernel,
    pub kernel_htilde: Kernel,
    pub sm1: SemiMetricSpec,
    pub sm2: SemiMetricSpec,
    pub sm3: SemiMetricSpec,
    pub sm4: SemiMetricSpec,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    /// Bandwidth of the observed-case pilot regression that fills missing
    /// responses in imputed mode; falls back to `h1` when unset.
    #[serde(default)]
    pub pilot_h1: Option<f64>,
    /// Bandwidth of the observed-case pilot variance fit that fills missing
    /// squared residuals in imputed mode; falls back to `h2` when unset.
    #[serde(default)]
    pub pilot_h2: Option<f64>,
}

impl EstimatorConfig {
    /// Quadratic kernels and a shared semi-metric across all stages.
    pub fn with_bandwidths(sm: SemiMetricSpec, h1: f64, h2: f64, h3: f64, h4: f64) -> Result<Self> {
        let cfg = Self {
            kernel_k: Kernel::Quadratic,
            kernel_w: Kernel::Quadratic,
            kernel_h: Kernel::Quadratic,
            kernel_htilde: Kernel::Quadratic,
            sm1: sm.clone(),
            sm2: sm.clone(),
            sm3: sm.clone(),
            sm4: sm,
            h1,
            h2,
            h3,
            h4,
            pilot_h1: None,
            pilot_h2: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, h) in [
            ("h1", self.h1),
            ("h2", self.h2),
            ("h3", self.h3),
            ("h4", self.h4),
        ] {
            if !(h > 0.0) {
                return Err(FvolError::InvalidParameter(format!(
                    "bandwidth {name} must be positive, got {h}"
                )));
            }
        }
        for (name, h) in [("pilot_h1", self.pilot_h1), ("pilot_h2", self.pilot_h2)] {
            if let Some(h) = h {
                if !(h > 0.0) {
                    return Err(FvolError::InvalidParameter(format!(
                        "bandwidth {name} must be positive, got {h}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Result of a regression stage over the training sample.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub mode: EstimatorMode,
    /// Fitted regression values at every training point.
    pub fitted: Vec<f64>,
    /// Imputed responses (equal to Y wherever delta = 1); imputed mode only.
    pub imputed_y: Option<Vec<f64>>,
}

/// Per-training-point quantities needed by the omega stage.
#[derive(Debug, Clone)]
pub struct StageFits {
    /// Working responses: Y (simplified) or the imputed Y-hat.
    pub responses: Vec<f64>,
    /// Fitted regression values m(X_t) of the matching mode.
    pub m_fit: Vec<f64>,
    /// Fitted variances U(X_t) of the matching mode.
    pub u_fit: Vec<f64>,
}

/// Shared core of every estimator: a kernel-weighted average of `targets`
/// over points passing `mask`, optionally excluding one index (leave-one-out).
pub fn kernel_weighted_mean(
    dists: &[f64],
    targets: &[f64],
    kernel: Kernel,
    h: f64,
    mask: Option<&[bool]>,
    exclude: Option<usize>,
) -> Result<f64> {
    debug_assert_eq!(dists.len(), targets.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for t in 0..dists.len() {
        if exclude == Some(t) {
            continue;
        }
        if let Some(m) = mask {
            if !m[t] {
                continue;
            }
        }
        let w = kernel.eval(dists[t] / h);
        if w > 0.0 {
            num += w * targets[t];
            den += w;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(FvolError::NoNeighbors { context: None })
    }
}

fn deltas(data: &FdaDataset) -> Vec<bool> {
    data.observations().iter().map(|o| o.delta()).collect()
}

fn responses(data: &FdaDataset) -> Vec<f64> {
    data.observations()
        .iter()
        .map(|o| o.y().unwrap_or(0.0))
        .collect()
}

/// Regression operator estimate at `x` (complete or simplified mode).
pub fn estimate_m(
    x: &Curve,
    data: &FdaDataset,
    cfg: &EstimatorConfig,
    mode: EstimatorMode,
) -> Result<f64> {
    cfg.validate()?;
    let sm = SemiMetric::resolve(&cfg.sm1, data)?;
    let dists = distances_to(x, data, &sm)?;
    let y = responses(data);
    match mode {
        EstimatorMode::Complete => {
            if !data.is_complete() {
                return Err(FvolError::CompleteModeOnIncompleteData);
            }
            kernel_weighted_mean(&dists, &y, cfg.kernel_k, cfg.h1, None, None)
        }
        EstimatorMode::Simplified => {
            let d = deltas(data);
            kernel_weighted_mean(&dists, &y, cfg.kernel_k, cfg.h1, Some(&d), None)
        }
        EstimatorMode::Imputed => {
            let fit = impute_responses(data, cfg)?;
            kernel_weighted_mean(
                &dists,
                fit.imputed_y.as_ref().unwrap(),
                cfg.kernel_k,
                cfg.h1,
                None,
                None,
            )
        }
    }
}

/// Fill missing responses with the simplified regression estimate.
pub fn impute_responses(data: &FdaDataset, cfg: &EstimatorConfig) -> Result<RegressionFit> {
    cfg.validate()?;
    let sm = SemiMetric::resolve(&cfg.sm1, data)?;
    let d1 = distance_matrix(data, &sm)?;
    let y = responses(data);
    let delta = deltas(data);
    let n = data.len();
    let mut fitted = Vec::with_capacity(n);
    for t in 0..n {
        let m = kernel_weighted_mean(d1.row(t), &y, cfg.kernel_k, cfg.h1, Some(&delta), None)
            .map_err(|_| FvolError::NoNeighbors {
                context: Some(format!("imputing observation {t}")),
            })?;
        fitted.push(m);
    }
    let imputed_y: Vec<f64> = (0..n)
        .map(|t| if delta[t] { y[t] } else { fitted[t] })
        .collect();
    Ok(RegressionFit {
        mode: EstimatorMode::Imputed,
        fitted,
        imputed_y: Some(imputed_y),
    })
}

/// Imputed regression estimate at `x`: Y-hat weighted over all points.
pub fn estimate_m_imputed(x: &Curve, data: &FdaDataset, cfg: &EstimatorConfig) -> Result<f64> {
    estimate_m(x, data, cfg, EstimatorMode::Imputed)
}

/// Squared residuals at observed points; `None` where delta = 0.
pub fn residuals_squared(data: &FdaDataset, fit: &RegressionFit) -> Result<Vec<Option<f64>>> {
    if fit.fitted.len() != data.len() {
        return Err(FvolError::MissingFittedValue {
            index: fit.fitted.len(),
        });
    }
    Ok(data
        .observations()
        .iter()
        .enumerate()
        .map(|(t, o)| o.y().map(|y| (y - fit.fitted[t]).powi(2)))
        .collect())
}

/// Fill missing squared residuals with the simplified variance estimate.
pub fn impute_residuals(
    data: &FdaDataset,
    r: &[Option<f64>],
    cfg: &EstimatorConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if r.len() != data.len() {
        return Err(FvolError::MismatchedLength {
            expected: data.len(),
            got: r.len(),
        });
    }
    let sm = SemiMetric::resolve(&cfg.sm2, data)?;
    let d2 = distance_matrix(data, &sm)?;
    let delta = deltas(data);
    let r_vals: Vec<f64> = r.iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut out = Vec::with_capacity(data.len());
    for t in 0..data.len() {
        if delta[t] {
            out.push(r[t].ok_or(FvolError::MissingFittedValue { index: t })?);
        } else {
            let u = kernel_weighted_mean(d2.row(t), &r_vals, cfg.kernel_w, cfg.h2, Some(&delta), None)
                .map_err(|_| FvolError::NoNeighbors {
                    context: Some(format!("imputing residual {t}")),
                })?;
            out.push(u);
        }
    }
    Ok(out)
}

/// Conditional variance estimate at `x` in the requested mode.
#[allow(non_snake_case)]
pub fn estimate_U(
    x: &Curve,
    data: &FdaDataset,
    cfg: &EstimatorConfig,
    mode: EstimatorMode,
) -> Result<f64> {
    cfg.validate()?;
    let sm2 = SemiMetric::resolve(&cfg.sm2, data)?;
    let dists2 = distances_to(x, data, &sm2)?;
    let delta = deltas(data);
    let y = responses(data);
    match mode {
        EstimatorMode::Complete => {
            if !data.is_complete() {
                return Err(FvolError::CompleteModeOnIncompleteData);
            }
            let sm1 = SemiMetric::resolve(&cfg.sm1, data)?;
            let d1 = distance_matrix(data, &sm1)?;
            let mut targets = Vec::with_capacity(data.len());
            for t in 0..data.len() {
                let m = kernel_weighted_mean(d1.row(t), &y, cfg.kernel_k, cfg.h1, None, None)?;
                targets.push((y[t] - m).powi(2));
            }
            kernel_weighted_mean(&dists2, &targets, cfg.kernel_w, cfg.h2, None, None)
        }
        EstimatorMode::Simplified => {
            let sm1 = SemiMetric::resolve(&cfg.sm1, data)?;
            let d1 = distance_matrix(data, &sm1)?;
            let mut targets = vec![0.0; data.len()];
            for t in 0..data.len() {
                if delta[t] {
                    let m = kernel_weighted_mean(
                        d1.row(t),
                        &y,
                        cfg.kernel_k,
                        cfg.h1,
                        Some(&delta),
                        None,
                    )?;
                    targets[t] = (y[t] - m).powi(2);
                }
            }
            kernel_weighted_mean(&dists2, &targets, cfg.kernel_w, cfg.h2, Some(&delta), None)
        }
        EstimatorMode::Imputed => {
            let fit = impute_responses(data, cfg)?;
            let r = residuals_squared(
                data,
                &RegressionFit {
                    mode: EstimatorMode::Simplified,
                    fitted: fit.fitted.clone(),
                    imputed_y: None,
                },
            )?;
            let r_hat = impute_residuals(data, &r, cfg)?;
            kernel_weighted_mean(&dists2, &r_hat, cfg.kernel_w, cfg.h2, None, None)
        }
    }
}

/// Observation-probability estimate at `x`: kernel-weighted fraction of
/// delta = 1, bounded in [0,1] by construction.
pub fn estimate_pi(x: &Curve, data: &FdaDataset, cfg: &EstimatorConfig) -> Result<f64> {
    cfg.validate()?;
    let sm = SemiMetric::resolve(&cfg.sm4, data)?;
    let dists = distances_to(x, data, &sm)?;
    let targets: Vec<f64> = data
        .observations()
        .iter()
        .map(|o| if o.delta() { 1.0 } else { 0.0 })
        .collect();
    kernel_weighted_mean(&dists, &targets, cfg.kernel_htilde, cfg.h4, None, None)
}

/// Fourth-moment operator estimate at `x`: kernel-weighted average of
/// `(eps^2 - 1)^2` with standardized residuals from `fits`.
///
/// Simplified mode sums observed points only; imputed mode sums all points
/// with the imputed responses and fits. Points whose fitted variance sits
/// below the floor have no defined standardized residual and are skipped;
/// it is an error if no usable point remains in the window.
pub fn estimate_omega(
    x: &Curve,
    data: &FdaDataset,
    cfg: &EstimatorConfig,
    mode: EstimatorMode,
    fits: &StageFits,
) -> Result<f64> {
    cfg.validate()?;
    let n = data.len();
    if fits.responses.len() != n || fits.m_fit.len() != n || fits.u_fit.len() != n {
        return Err(FvolError::MismatchedLength {
            expected: n,
            got: fits.m_fit.len(),
        });
    }
    let sm = SemiMetric::resolve(&cfg.sm3, data)?;
    let dists = distances_to(x, data, &sm)?;
    let delta = deltas(data);
    let simplified_mask = !matches!(mode, EstimatorMode::Imputed);

    let mut num = 0.0;
    let mut den = 0.0;
    let mut degenerate = None;
    for t in 0..n {
        if simplified_mask && !delta[t] {
            continue;
        }
        let w = cfg.kernel_h.eval(dists[t] / cfg.h3);
        if w <= 0.0 {
            continue;
        }
        if fits.u_fit[t] < U_FLOOR {
            degenerate.get_or_insert(t);
            continue;
        }
        let eps = (fits.responses[t] - fits.m_fit[t]) / fits.u_fit[t].sqrt();
        num += w * (eps * eps - 1.0).powi(2);
        den += w;
    }
    if den > 0.0 {
        Ok(num / den)
    } else if let Some(index) = degenerate {
        Err(FvolError::DegenerateVarianceAtObservation {
            index,
            floor: U_FLOOR,
        })
    } else {
        Err(FvolError::NoNeighbors { context: None })
    }
}
