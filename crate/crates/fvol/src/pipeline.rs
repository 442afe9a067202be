//! Realized-volatility workflow for intraday price data: CSV ingestion and
//! calendar alignment, realized volatility, missing-at-random injection, and
//! the per-day estimation report.

use std::collections::BTreeMap;
use std::io::Read;
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bandwidth::{
    candidate_grid_with, cv_select_h1, cv_select_h2, cv_select_h3, cv_select_h4,
    select_bandwidths, CvOptions,
};
use crate::error::{FvolError, Result};
use crate::estimator::{EstimatorConfig, EstimatorMode};
use crate::fda::{log_returns, Curve, FdaDataset, FdaObservation, Grid};
use crate::model::{EvalOptions, FittedModel};
use crate::semimetric::{distance_matrix, SemiMetric, SemiMetricSpec};
use crate::simulation::mar_probability;
use crate::stats::{mean, quantile};

/// Number of functional principal components for the finance semi-metric.
pub const FINANCE_PCA_COMPONENTS: usize = 4;

/// Calendar-aligned responses and intraday return curves.
#[derive(Debug, Clone)]
pub struct AlignedFinanceData {
    pub dates: Vec<NaiveDate>,
    /// Daily percent log returns (the responses).
    pub daily_returns: Vec<f64>,
    /// Hourly percent log-return curves on a shared grid.
    pub intraday_curves: Vec<Curve>,
    /// Raw per-day hourly returns backing realized volatility.
    pub intraday_raw: Vec<Vec<f64>>,
    /// Days present in the inputs but excluded by alignment or completeness.
    pub dropped_days: usize,
}

impl AlignedFinanceData {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Dataset with responses masked by `delta`.
    pub fn to_dataset(&self, delta: &[bool]) -> Result<FdaDataset> {
        if delta.len() != self.len() {
            return Err(FvolError::MismatchedLength {
                expected: self.len(),
                got: delta.len(),
            });
        }
        FdaDataset::new(
            self.intraday_curves
                .iter()
                .zip(self.daily_returns.iter().zip(delta))
                .map(|(x, (&y, &d))| {
                    if d {
                        FdaObservation::observed(x.clone(), y)
                    } else {
                        Ok(FdaObservation::missing(x.clone()))
                    }
                })
                .collect::<Result<_>>()?,
        )
    }
}

fn schema_error(file: &str, line: usize, message: impl Into<String>) -> FvolError {
    FvolError::SchemaError {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .ok()
}

/// Parse, group and align the hourly and daily CSVs.
///
/// Hourly schema `timestamp,price` (ISO-8601); daily schema `date,close`.
/// A day survives when it has the full complement of hourly prices (the
/// modal per-day count), a close, and a previous close for the daily return;
/// everything else is dropped and counted.
pub fn ingest_intraday(hourly: impl Read, daily: impl Read) -> Result<AlignedFinanceData> {
    // hourly prices grouped per calendar day
    let mut rdr = csv::Reader::from_reader(hourly);
    {
        let headers = rdr.headers()?;
        if headers.len() < 2 || &headers[0] != "timestamp" || &headers[1] != "price" {
            return Err(schema_error("hourly", 1, "expected header `timestamp,price`"));
        }
    }
    let mut by_day: BTreeMap<NaiveDate, Vec<(NaiveDateTime, Option<f64>)>> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let ts = parse_timestamp(record.get(0).unwrap_or("")).ok_or_else(|| {
            schema_error("hourly", line, format!("bad timestamp `{}`", &record[0]))
        })?;
        let raw = record.get(1).unwrap_or("").trim();
        let price = if raw.is_empty() {
            None // missing reading: drops the whole day below
        } else {
            let p: f64 = raw
                .parse()
                .map_err(|_| schema_error("hourly", line, format!("bad price `{raw}`")))?;
            if !(p > 0.0) {
                return Err(FvolError::NonPositivePrice { index: line });
            }
            Some(p)
        };
        by_day.entry(ts.date()).or_default().push((ts, price));
    }

    // daily closes
    let mut rdr = csv::Reader::from_reader(daily);
    {
        let headers = rdr.headers()?;
        if headers.len() < 2 || &headers[0] != "date" || &headers[1] != "close" {
            return Err(schema_error("daily", 1, "expected header `date,close`"));
        }
    }
    let mut closes: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let date = NaiveDate::parse_from_str(record.get(0).unwrap_or(""), "%Y-%m-%d")
            .map_err(|_| schema_error("daily", line, format!("bad date `{}`", &record[0])))?;
        let close: f64 = record
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| schema_error("daily", line, format!("bad close `{}`", &record[1])))?;
        if !(close > 0.0) {
            return Err(FvolError::NonPositivePrice { index: line });
        }
        closes.insert(date, close);
    }

    // completeness: keep days carrying the modal number of hourly prices
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for prices in by_day.values() {
        let complete = prices.iter().filter(|(_, p)| p.is_some()).count();
        if complete == prices.len() {
            *counts.entry(complete).or_default() += 1;
        }
    }
    let expected = counts
        .iter()
        .max_by_key(|(_, &c)| c)
        .map(|(&n, _)| n)
        .ok_or(FvolError::NoOverlappingDates)?;
    if expected < 2 {
        return Err(schema_error("hourly", 1, "need >= 2 prices per day"));
    }

    let total_days = by_day.len();
    let mut dates = Vec::new();
    let mut daily_returns = Vec::new();
    let mut raw = Vec::new();
    let mut prev_close: Option<(NaiveDate, f64)> = None;
    for (date, mut prices) in by_day {
        let close = closes.get(&date).copied();
        let complete = prices.iter().all(|(_, p)| p.is_some()) && prices.len() == expected;
        let y = match (close, prev_close) {
            (Some(c), Some((_, p))) => Some(100.0 * (c / p).ln()),
            _ => None,
        };
        if let Some(c) = close {
            prev_close = Some((date, c));
        }
        let (Some(y), true) = (y, complete) else {
            continue;
        };
        prices.sort_by_key(|(ts, _)| *ts);
        let series: Vec<f64> = prices.iter().map(|(_, p)| p.unwrap()).collect();
        raw.push(log_returns(&series)?);
        daily_returns.push(y);
        dates.push(date);
    }
    if dates.is_empty() {
        return Err(FvolError::NoOverlappingDates);
    }

    let n_ret = raw[0].len();
    let grid = Arc::new(Grid::uniform(1.0, n_ret as f64, n_ret)?);
    let intraday_curves = raw
        .iter()
        .map(|r| Curve::new(grid.clone(), r.clone()))
        .collect::<Result<_>>()?;

    Ok(AlignedFinanceData {
        dropped_days: total_days - dates.len(),
        dates,
        daily_returns,
        intraday_curves,
        intraday_raw: raw,
    })
}

/// Realized volatility of one day: the sum of squared hourly returns.
pub fn realized_vol(hourly_returns: &[f64]) -> Result<f64> {
    if hourly_returns.is_empty() {
        return Err(FvolError::EmptySeries);
    }
    Ok(hourly_returns.iter().map(|r| r * r).sum())
}

/// Missing-at-random flags with observation probability
/// expit(2 zeta Int x^2), coupled across zeta values through shared uniform
/// draws: a larger zeta can only observe more days on the same rng stream.
pub fn inject_mar_finance(
    data: &AlignedFinanceData,
    zeta: f64,
    rng: &mut impl Rng,
) -> Result<Vec<bool>> {
    if !(zeta > 0.0) {
        return Err(FvolError::InvalidParameter(format!(
            "zeta must be positive, got {zeta}"
        )));
    }
    Ok(data
        .intraday_curves
        .iter()
        .map(|x| rng.gen::<f64>() < mar_probability(x, zeta))
        .collect())
}

/// Quartiles and mean of the daily squared errors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeQuartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mean: f64,
}

pub fn se_quartiles(se: &[f64]) -> Result<SeQuartiles> {
    if se.is_empty() {
        return Err(FvolError::EmptySeries);
    }
    Ok(SeQuartiles {
        q1: quantile(se, 0.25),
        median: quantile(se, 0.5),
        q3: quantile(se, 0.75),
        mean: mean(se),
    })
}

/// One day of the pipeline report.
#[derive(Debug, Clone, Serialize)]
pub struct DayResult {
    pub date: NaiveDate,
    pub sqrt_estimate: f64,
    pub sqrt_rv: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub covered: bool,
}

/// Per-day volatility results with the aggregate error and coverage summary.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub mode: EstimatorMode,
    pub days: Vec<DayResult>,
    pub se: SeQuartiles,
    pub mse: f64,
    pub coverage: f64,
    pub mean_ci_length: f64,
    /// The estimation configuration actually used (echoes CV selections).
    pub config: EstimatorConfig,
}

fn finance_template() -> EstimatorConfig {
    EstimatorConfig::with_bandwidths(
        SemiMetricSpec::Pca {
            k: FINANCE_PCA_COMPONENTS,
        },
        1.0,
        1.0,
        1.0,
        1.0,
    )
    .expect("static configuration is valid")
}

fn auto_config(dataset: &FdaDataset, mode: EstimatorMode) -> Result<EstimatorConfig> {
    let template = finance_template();
    let opts = CvOptions {
        pad_to_global: true,
        ..CvOptions::default()
    };
    let mut cfg = template.clone();
    match mode {
        EstimatorMode::Imputed => {
            let sel = select_bandwidths(dataset, &template, &opts)?;
            sel.imputed.apply(&mut cfg);
        }
        _ => {
            let sm = SemiMetric::resolve(&template.sm1, dataset)?;
            let dist = distance_matrix(dataset, &sm)?;
            let grid = candidate_grid_with(&dist, &opts)?;
            cfg.h1 = cv_select_h1(dataset, &cfg, &grid, EstimatorMode::Simplified)?;
            cfg.h2 = cv_select_h2(dataset, &cfg, &grid, EstimatorMode::Simplified)?;
            cfg.h3 = cv_select_h3(dataset, &cfg, &grid, EstimatorMode::Simplified)?;
            cfg.h4 = cv_select_h4(dataset, &cfg, &grid)?;
        }
    }
    Ok(cfg)
}

/// Run the volatility workflow: fit in the requested mode (bandwidths by CV
/// when `cfg` is `None`), estimate each day's volatility with its CI, and
/// score against realized volatility.
pub fn run_pipeline(
    data: &AlignedFinanceData,
    delta: &[bool],
    mode: EstimatorMode,
    cfg: Option<&EstimatorConfig>,
    level: f64,
) -> Result<PipelineReport> {
    let dataset = data.to_dataset(delta)?;
    let cfg = match cfg {
        Some(c) => c.clone(),
        None => auto_config(&dataset, mode)?,
    };
    let model = FittedModel::fit(&dataset, &cfg, mode)?;
    let opts = EvalOptions { knn_floor: Some(5) };

    let days: Vec<DayResult> = (0..data.len())
        .into_par_iter()
        .map(|t| -> Result<DayResult> {
            let rv = realized_vol(&data.intraday_raw[t])?;
            let est = model.estimate_vol_with(&data.intraday_curves[t], level, &opts)?;
            let sqrt_est = est.u_hat.max(0.0).sqrt();
            let sqrt_rv = rv.sqrt();
            Ok(DayResult {
                date: data.dates[t],
                sqrt_estimate: sqrt_est,
                sqrt_rv,
                se: (sqrt_est - sqrt_rv).powi(2),
                ci_low: est.ci_low,
                ci_high: est.ci_high,
                covered: est.ci_low <= rv && rv <= est.ci_high,
            })
        })
        .collect::<Result<_>>()?;

    let se_values: Vec<f64> = days.iter().map(|d| d.se).collect();
    let se = se_quartiles(&se_values)?;
    let coverage = days.iter().filter(|d| d.covered).count() as f64 / days.len() as f64;
    let mean_ci_length = mean(&days.iter().map(|d| d.ci_high - d.ci_low).collect::<Vec<_>>());
    Ok(PipelineReport {
        mode,
        mse: se.mean,
        days,
        se,
        coverage,
        mean_ci_length,
        config: cfg,
    })
}
