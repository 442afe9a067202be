//! Monte-Carlo study harness: curve generator, true operators, four error
//! models, the missing-at-random mechanism, replication runner and the
//! MISE / coverage summaries.

use std::io::Write;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{
    candidate_grid_with, cv_select_h1, cv_select_h2, cv_select_h3, cv_select_h4, cv_select_k2,
    select_bandwidths, CvOptions, KnnCvOptions, StageBandwidths,
};
use crate::error::{FvolError, Result};
use crate::estimator::{EstimatorConfig, EstimatorMode};
use crate::fda::{Curve, FdaDataset, FdaObservation, Grid};
use crate::model::{EvalOptions, FittedModel};
use crate::semimetric::{distance_matrix, SemiMetric, SemiMetricSpec};
use crate::stats::{mean, quantile};

/// Innovation models for the regression errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorModel {
    /// i.i.d. standard Gaussian.
    Model1,
    /// AR(1) with coefficient 0.5 and Gaussian innovations.
    Model2,
    /// AR(1) with coefficient -0.25 and Gaussian innovations.
    Model3,
    /// AR(1) with coefficient 0.5 and Rademacher (+/-1) innovations.
    Model4,
}

impl ErrorModel {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(ErrorModel::Model1),
            2 => Ok(ErrorModel::Model2),
            3 => Ok(ErrorModel::Model3),
            4 => Ok(ErrorModel::Model4),
            other => Err(FvolError::InvalidParameter(format!(
                "error model must be 1..4, got {other}"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            ErrorModel::Model1 => 1,
            ErrorModel::Model2 => 2,
            ErrorModel::Model3 => 3,
            ErrorModel::Model4 => 4,
        }
    }

    fn ar_coefficient(self) -> f64 {
        match self {
            ErrorModel::Model1 => 0.0,
            ErrorModel::Model2 | ErrorModel::Model4 => 0.5,
            ErrorModel::Model3 => -0.25,
        }
    }
}

/// Full description of one Monte-Carlo study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Training sample size per replication.
    pub n: usize,
    /// Number of equally spaced curve sampling points on [-1, 1].
    pub grid_size: usize,
    pub error_model: ErrorModel,
    /// Missingness strength: observation probability expit(2 eta Int x^2).
    pub eta: f64,
    /// Number of replications (B).
    pub replications: usize,
    /// Number of fresh evaluation curves (J).
    pub eval_points: usize,
    pub seed: u64,
    /// Two-sided CI miscoverage level.
    pub level: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 300,
            grid_size: 100,
            error_model: ErrorModel::Model1,
            eta: 0.2,
            replications: 500,
            eval_points: 100,
            seed: 0,
            level: 0.05,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(FvolError::InvalidParameter(format!(
                "sample size must be >= 10, got {}",
                self.n
            )));
        }
        if self.replications < 1 || self.eval_points < 1 {
            return Err(FvolError::InvalidParameter(
                "need at least one replication and one evaluation point".into(),
            ));
        }
        if !(self.eta > 0.0) {
            return Err(FvolError::InvalidParameter(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(FvolError::InvalidParameter(format!(
                "level must lie in (0,1), got {}",
                self.level
            )));
        }
        if self.grid_size < 3 {
            return Err(FvolError::InvalidParameter(
                "grid_size must be >= 3".into(),
            ));
        }
        Ok(())
    }
}

/// Random curves X(l) = A(2 - cos(pi l w)) + (1 - A) cos(pi l w) with
/// w ~ N(0,1) and A ~ Bernoulli(1/2), sampled on a uniform grid over [-1, 1].
pub fn gen_curves(count: usize, grid_size: usize, rng: &mut impl Rng) -> Result<Vec<Curve>> {
    if count == 0 {
        return Err(FvolError::InvalidParameter(
            "need at least one curve".into(),
        ));
    }
    let grid = Arc::new(Grid::uniform(-1.0, 1.0, grid_size)?);
    (0..count)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            let a = rng.gen_bool(0.5);
            Curve::from_fn(grid.clone(), |l| {
                let c = (std::f64::consts::PI * l * w).cos();
                if a {
                    2.0 - c
                } else {
                    c
                }
            })
        })
        .collect()
}

/// True regression operator: the integral of l * x(l).
pub fn true_m(x: &Curve) -> f64 {
    x.grid()
        .quad_weights()
        .iter()
        .zip(x.grid().points().iter().zip(x.values()))
        .map(|(w, (l, v))| w * l * v)
        .sum()
}

/// True variance operator: the integral of |l| * x(l)^2.
#[allow(non_snake_case)]
pub fn true_U(x: &Curve) -> f64 {
    x.grid()
        .quad_weights()
        .iter()
        .zip(x.grid().points().iter().zip(x.values()))
        .map(|(w, (l, v))| w * l.abs() * v * v)
        .sum()
}

/// Error sequence for the requested model. AR recursions start from the
/// stationary marginal (Models 2-3) or from zero with a 50-step burn-in
/// (Model 4, whose stationary law has no closed form).
pub fn gen_errors(n: usize, model: ErrorModel, rng: &mut impl Rng) -> Vec<f64> {
    match model {
        ErrorModel::Model1 => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        ErrorModel::Model2 | ErrorModel::Model3 => {
            let phi = model.ar_coefficient();
            let sd0 = (1.0 / (1.0 - phi * phi)).sqrt();
            let mut e: f64 = rng.sample::<f64, _>(StandardNormal) * sd0;
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(e);
                e = phi * e + rng.sample::<f64, _>(StandardNormal);
            }
            out
        }
        ErrorModel::Model4 => {
            let phi = model.ar_coefficient();
            let mut e = 0.0;
            for _ in 0..50 {
                let xi = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                e = phi * e + xi;
            }
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(e);
                let xi = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                e = phi * e + xi;
            }
            out
        }
    }
}

fn expit(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Observation probability pi(x) = expit(2 eta Int x^2).
pub fn mar_probability(x: &Curve, eta: f64) -> f64 {
    let sq: f64 = x
        .grid()
        .quad_weights()
        .iter()
        .zip(x.values())
        .map(|(w, v)| w * v * v)
        .sum();
    expit(2.0 * eta * sq)
}

/// Missing-at-random flags delta_t ~ Bernoulli(pi(X_t)); also returns the
/// true probabilities for diagnostics.
pub fn apply_mar(curves: &[Curve], eta: f64, rng: &mut impl Rng) -> (Vec<bool>, Vec<f64>) {
    let pi: Vec<f64> = curves.iter().map(|x| mar_probability(x, eta)).collect();
    let delta = pi.iter().map(|&p| rng.gen_bool(p)).collect();
    (delta, pi)
}

/// One confidence-interval evaluation at one grid point.
#[derive(Debug, Clone, Copy)]
pub struct CiRecord {
    pub covered: bool,
    pub length: f64,
}

/// Per-replication results, indexed complete / simplified / imputed.
#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    pub mse: [f64; 3],
    pub ci: [Vec<CiRecord>; 3],
}

pub const ESTIMATOR_ORDER: [EstimatorMode; 3] = [
    EstimatorMode::Complete,
    EstimatorMode::Simplified,
    EstimatorMode::Imputed,
];

fn sim_estimator_template() -> EstimatorConfig {
    EstimatorConfig::with_bandwidths(SemiMetricSpec::default(), 1.0, 1.0, 1.0, 1.0)
        .expect("static configuration is valid")
}

fn with_bandwidths(template: &EstimatorConfig, bw: StageBandwidths) -> EstimatorConfig {
    let mut cfg = template.clone();
    bw.apply(&mut cfg);
    cfg
}

/// One Monte-Carlo replication: fresh training sample, CV bandwidths, and
/// MSE / CI records over the shared evaluation grid.
pub fn run_replication(
    cfg: &SimConfig,
    eval_grid: &[Curve],
    b: usize,
) -> Result<ReplicationOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(b as u64 + 1);

    let curves = gen_curves(cfg.n, cfg.grid_size, &mut rng)?;
    let errors = gen_errors(cfg.n, cfg.error_model, &mut rng);
    let (delta, _) = apply_mar(&curves, cfg.eta, &mut rng);

    let responses: Vec<f64> = curves
        .iter()
        .zip(&errors)
        .map(|(x, e)| true_m(x) + true_U(x).sqrt() * e)
        .collect();

    let complete = FdaDataset::new(
        curves
            .iter()
            .zip(&responses)
            .map(|(x, &y)| FdaObservation::observed(x.clone(), y))
            .collect::<Result<_>>()?,
    )?;
    let incomplete = FdaDataset::new(
        curves
            .iter()
            .zip(responses.iter().zip(&delta))
            .map(|(x, (&y, &d))| {
                if d {
                    FdaObservation::observed(x.clone(), y)
                } else {
                    Ok(FdaObservation::missing(x.clone()))
                }
            })
            .collect::<Result<_>>()?,
    )?;

    let template = sim_estimator_template();
    // the derivative distances of the DGP are heavy-tailed; pad the grid so
    // isolated curves always leave a feasible candidate
    let cv_opts = CvOptions {
        pad_to_global: true,
        ..CvOptions::default()
    };
    let sel = select_bandwidths(&incomplete, &template, &cv_opts)?;

    // complete-data benchmark: same cascade, no missingness
    let sm = SemiMetric::resolve(&template.sm1, &complete)?;
    let dist = distance_matrix(&complete, &sm)?;
    let grid = candidate_grid_with(&dist, &cv_opts)?;
    let mut ccfg = template.clone();
    ccfg.h1 = cv_select_h1(&complete, &ccfg, &grid, EstimatorMode::Simplified)?;
    ccfg.h2 = cv_select_h2(&complete, &ccfg, &grid, EstimatorMode::Simplified)?;
    ccfg.h3 = cv_select_h3(&complete, &ccfg, &grid, EstimatorMode::Simplified)?;
    ccfg.h4 = cv_select_h4(&complete, &ccfg, &grid)?;

    let scfg = with_bandwidths(&template, sel.simplified);
    let icfg = with_bandwidths(&template, sel.imputed);

    // the variance stage evaluates with a locally adaptive radius: the
    // CV-selected neighbor count per estimator flavor floors the bandwidth
    let knn_opts = KnnCvOptions::default();
    let eval_opts = [
        EvalOptions {
            knn_floor: Some(cv_select_k2(
                &complete,
                &ccfg,
                EstimatorMode::Complete,
                &knn_opts,
            )?),
        },
        EvalOptions {
            knn_floor: Some(cv_select_k2(
                &incomplete,
                &scfg,
                EstimatorMode::Simplified,
                &knn_opts,
            )?),
        },
        EvalOptions {
            knn_floor: Some(cv_select_k2(
                &incomplete,
                &icfg,
                EstimatorMode::Imputed,
                &knn_opts,
            )?),
        },
    ];

    let models = [
        FittedModel::fit(&complete, &ccfg, EstimatorMode::Complete)?,
        FittedModel::fit(&incomplete, &scfg, EstimatorMode::Simplified)?,
        FittedModel::fit(&incomplete, &icfg, EstimatorMode::Imputed)?,
    ];

    let j = eval_grid.len() as f64;
    let mut mse = [0.0; 3];
    let mut ci: [Vec<CiRecord>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for x in eval_grid {
        let u_true = true_U(x);
        for (k, model) in models.iter().enumerate() {
            let est = model.estimate_vol_with(x, cfg.level, &eval_opts[k])?;
            mse[k] += (est.u_hat - u_true).powi(2) / j;
            ci[k].push(CiRecord {
                covered: est.ci_low <= u_true && u_true <= est.ci_high,
                length: est.ci_high - est.ci_low,
            });
        }
    }
    Ok(ReplicationOutcome { mse, ci })
}

/// Location summary of the replication-wise MSEs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MiseSummary {
    pub mise: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

pub fn mise_report(mse_records: &[f64]) -> Result<MiseSummary> {
    if mse_records.is_empty() {
        return Err(FvolError::EmptyRecords);
    }
    Ok(MiseSummary {
        mise: mean(mse_records),
        q1: quantile(mse_records, 0.25),
        median: quantile(mse_records, 0.5),
        q3: quantile(mse_records, 0.75),
    })
}

/// Relative MISE improvement of the imputed estimator, in percent.
pub fn efficiency(mise_simp: f64, mise_npi: f64) -> Result<f64> {
    if mise_simp == 0.0 {
        return Err(FvolError::ZeroDenominator("efficiency"));
    }
    Ok((mise_simp - mise_npi) / mise_simp * 100.0)
}

/// Coverage rate, mean CI length, and their ratio in percent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoverageSummary {
    pub coverage: f64,
    pub mean_length: f64,
    pub efficiency: f64,
}

pub fn coverage_report(records: &[CiRecord]) -> Result<CoverageSummary> {
    if records.is_empty() {
        return Err(FvolError::EmptyRecords);
    }
    let coverage =
        records.iter().filter(|r| r.covered).count() as f64 / records.len() as f64;
    let mean_length = mean(&records.iter().map(|r| r.length).collect::<Vec<_>>());
    if mean_length == 0.0 {
        return Err(FvolError::ZeroDenominator("coverage efficiency"));
    }
    Ok(CoverageSummary {
        coverage,
        mean_length,
        efficiency: coverage / mean_length * 100.0,
    })
}

/// Study results for one estimator flavor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimatorReport {
    pub estimator: EstimatorMode,
    pub mse: MiseSummary,
    /// MISE improvement over the simplified estimator (imputed flavor only).
    pub efficiency: Option<f64>,
    pub ci: CoverageSummary,
}

/// Aggregated Monte-Carlo study results.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub estimators: [EstimatorReport; 3],
}

impl SimReport {
    pub fn estimator(&self, mode: EstimatorMode) -> &EstimatorReport {
        self.estimators
            .iter()
            .find(|e| e.estimator == mode)
            .expect("all three modes present")
    }
}

/// Full study: a fixed evaluation grid, then independent replications
/// aggregated into a [`SimReport`]. Bit-identical for a given config
/// regardless of the number of worker threads.
pub fn run_study(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    let eval_grid = gen_curves(cfg.eval_points, cfg.grid_size, &mut rng)?;

    let outcomes: Vec<ReplicationOutcome> = (0..cfg.replications)
        .into_par_iter()
        .map(|b| run_replication(cfg, &eval_grid, b))
        .collect::<Result<_>>()?;

    let mise: Vec<MiseSummary> = (0..3)
        .map(|k| mise_report(&outcomes.iter().map(|o| o.mse[k]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let cov: Vec<CoverageSummary> = (0..3)
        .map(|k| {
            let all: Vec<CiRecord> = outcomes.iter().flat_map(|o| o.ci[k].clone()).collect();
            coverage_report(&all)
        })
        .collect::<Result<_>>()?;
    let eff = efficiency(mise[1].mise, mise[2].mise)?;

    let estimators = [0, 1, 2].map(|k| EstimatorReport {
        estimator: ESTIMATOR_ORDER[k],
        mse: mise[k],
        efficiency: if k == 2 { Some(eff) } else { None },
        ci: cov[k],
    });
    Ok(SimReport {
        config: cfg.clone(),
        estimators,
    })
}

/// Tidy CSV dump of the report: one row per (estimator, metric).
pub fn write_report_csv<W: Write>(report: &SimReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "eta", "n", "estimator", "metric", "value"])?;
    let cfg = &report.config;
    let base = [
        cfg.error_model.index().to_string(),
        cfg.eta.to_string(),
        cfg.n.to_string(),
    ];
    for est in &report.estimators {
        let name = est.estimator.name();
        let mut metrics: Vec<(&str, f64)> = vec![
            ("mise", est.mse.mise),
            ("mse_q1", est.mse.q1),
            ("mse_median", est.mse.median),
            ("mse_q3", est.mse.q3),
            ("coverage", est.ci.coverage),
            ("mean_ci_length", est.ci.mean_length),
            ("coverage_efficiency", est.ci.efficiency),
        ];
        if let Some(e) = est.efficiency {
            metrics.push(("efficiency", e));
        }
        for (metric, value) in metrics {
            let mut row = base.to_vec();
            row.push(name.to_string());
            row.push(metric.to_string());
            row.push(format!("{value}"));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(FvolError::Io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::lag1_autocorr;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn curves_respect_dgp_support() {
        let mut r = rng(1);
        let curves = gen_curves(200, 100, &mut r).unwrap();
        for c in &curves {
            assert_eq!(c.grid().span(), (-1.0, 1.0));
            assert!(c.values().iter().all(|&v| (-1.0..=3.0).contains(&v)));
        }
    }

    #[test]
    fn mixture_weight_is_balanced() {
        let mut r = rng(2);
        let curves = gen_curves(10_000, 20, &mut r).unwrap();
        // curves with A = 1 have values >= 1 everywhere
        let frac_a1 = curves
            .iter()
            .filter(|c| c.values().iter().all(|&v| v >= 1.0 - 1e-12))
            .count() as f64
            / 10_000.0;
        assert!((frac_a1 - 0.5).abs() < 0.02, "A=1 fraction {frac_a1}");
    }

    #[test]
    fn true_operators_analytic_values() {
        let g = Arc::new(Grid::uniform(-1.0, 1.0, 200).unwrap());
        let ident = Curve::from_fn(g.clone(), |l| l).unwrap();
        assert!((true_m(&ident) - 2.0 / 3.0).abs() < 1e-3);
        let one = Curve::from_fn(g, |_| 1.0).unwrap();
        assert!((true_U(&one) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn dgp_regression_operator_is_null() {
        let mut r = rng(3);
        for c in gen_curves(300, 100, &mut r).unwrap() {
            assert!(true_m(&c).abs() <= 0.05, "true_m {}", true_m(&c));
        }
    }

    #[test]
    fn model1_moments() {
        let e = gen_errors(100_000, ErrorModel::Model1, &mut rng(4));
        let m = mean(&e);
        let v = e.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (e.len() - 1) as f64;
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((v - 1.0).abs() < 0.02, "variance {v}");
    }

    #[test]
    fn ar_models_match_theory() {
        let e2 = gen_errors(100_000, ErrorModel::Model2, &mut rng(5));
        assert!((lag1_autocorr(&e2) - 0.5).abs() < 0.02);
        let e3 = gen_errors(100_000, ErrorModel::Model3, &mut rng(6));
        assert!((lag1_autocorr(&e3) + 0.25).abs() < 0.02);
        let e4 = gen_errors(100_000, ErrorModel::Model4, &mut rng(7));
        assert!((lag1_autocorr(&e4) - 0.5).abs() < 0.02);
    }

    #[test]
    fn model4_innovations_have_unit_magnitude() {
        // e_t - 0.5 e_{t-1} must be exactly +/-1 after the burn-in
        let e = gen_errors(1000, ErrorModel::Model4, &mut rng(8));
        for t in 1..e.len() {
            let xi = e[t] - 0.5 * e[t - 1];
            assert!((xi.abs() - 1.0).abs() < 1e-9, "innovation {xi}");
        }
    }

    #[test]
    fn mar_probability_examples() {
        let g = Arc::new(Grid::uniform(-1.0, 1.0, 100).unwrap());
        let zero = Curve::from_fn(g.clone(), |_| 0.0).unwrap();
        assert_eq!(mar_probability(&zero, 0.2), 0.5);
        let one = Curve::from_fn(g, |_| 1.0).unwrap();
        assert!((mar_probability(&one, 0.2) - 0.689974).abs() < 1e-5);
    }

    #[test]
    fn mar_rates_match_study_design() {
        let mut r = rng(9);
        let curves = gen_curves(10_000, 50, &mut r).unwrap();
        let (d_low, _) = apply_mar(&curves, 0.8, &mut r);
        let missing_low = 1.0 - d_low.iter().filter(|&&d| d).count() as f64 / 10_000.0;
        assert!(
            (0.06..=0.14).contains(&missing_low),
            "missing rate {missing_low} at eta=0.8"
        );
        let (d_high, _) = apply_mar(&curves, 0.2, &mut r);
        let missing_high = 1.0 - d_high.iter().filter(|&&d| d).count() as f64 / 10_000.0;
        assert!(missing_high > missing_low, "eta=0.2 should lose more data");
    }

    #[test]
    fn efficiency_reference_values() {
        assert!((efficiency(0.67, 0.54).unwrap() - 19.40).abs() < 0.01);
        assert!((efficiency(1.00, 0.80).unwrap() - 20.0).abs() < 1e-12);
        assert!((efficiency(0.87, 0.66).unwrap() - 24.13).abs() < 0.01);
        assert!(matches!(
            efficiency(0.0, 0.5),
            Err(FvolError::ZeroDenominator(_))
        ));
    }

    #[test]
    fn mise_summary_values() {
        let s = mise_report(&[0.5, 1.5]).unwrap();
        assert_eq!(s.mise, 1.0);
        assert!(s.q1 <= s.median && s.median <= s.q3);
        assert!(matches!(mise_report(&[]), Err(FvolError::EmptyRecords)));
    }

    #[test]
    fn coverage_summary_values() {
        let all_hits = vec![
            CiRecord {
                covered: true,
                length: 2.0
            };
            10
        ];
        let s = coverage_report(&all_hits).unwrap();
        assert_eq!(s.coverage, 1.0);
        assert_eq!(s.mean_length, 2.0);
        assert_eq!(s.efficiency, 50.0);

        // 24 of 25 hits at length 0.08 -> coverage 0.96, efficiency 1200
        let mut recs = vec![
            CiRecord {
                covered: true,
                length: 0.08
            };
            24
        ];
        recs.push(CiRecord {
            covered: false,
            length: 0.08,
        });
        let s = coverage_report(&recs).unwrap();
        assert!((s.coverage - 0.96).abs() < 1e-12);
        assert!((s.efficiency - 1200.0).abs() < 1e-9);

        assert!(matches!(coverage_report(&[]), Err(FvolError::EmptyRecords)));
    }

    fn small_cfg() -> SimConfig {
        SimConfig {
            n: 60,
            grid_size: 30,
            error_model: ErrorModel::Model1,
            eta: 0.2,
            replications: 3,
            eval_points: 5,
            seed: 42,
            level: 0.05,
        }
    }

    #[test]
    fn replication_is_deterministic() {
        let cfg = small_cfg();
        let mut r = rng(cfg.seed);
        let eval = gen_curves(cfg.eval_points, cfg.grid_size, &mut r).unwrap();
        let a = run_replication(&cfg, &eval, 1).unwrap();
        let b = run_replication(&cfg, &eval, 1).unwrap();
        assert_eq!(a.mse, b.mse);
        let c = run_replication(&cfg, &eval, 2).unwrap();
        assert_ne!(a.mse, c.mse);
        for k in 0..3 {
            assert!(a.mse[k] >= 0.0);
            assert!(a.ci[k].iter().all(|r| r.length >= 0.0));
        }
    }

    #[test]
    fn study_is_thread_count_invariant() {
        let cfg = small_cfg();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_study(&cfg).unwrap())
        };
        let r1 = run(1);
        let r4 = run(4);
        for (a, b) in r1.estimators.iter().zip(&r4.estimators) {
            assert_eq!(a.mse.mise.to_bits(), b.mse.mise.to_bits());
            assert_eq!(a.ci.coverage.to_bits(), b.ci.coverage.to_bits());
        }
        assert!(r1.estimator(EstimatorMode::Imputed).efficiency.is_some());
    }

    #[test]
    fn csv_report_schema() {
        let cfg = small_cfg();
        let report = run_study(&cfg).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "model,eta,n,estimator,metric,value"
        );
        // 7 metrics for complete + simplified, 8 for imputed
        assert_eq!(lines.count(), 7 + 7 + 8);
    }
}
