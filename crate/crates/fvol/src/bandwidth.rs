//! Leave-one-out cross-validation bandwidth selection for the four
//! estimation stages, in simplified and imputed flavors, with a data-driven
//! candidate grid built from distance quantiles.

use crate::error::{FvolError, Result};
use crate::estimator::{kernel_weighted_mean, EstimatorConfig, EstimatorMode, U_FLOOR};
use crate::fda::FdaDataset;
use crate::kernel::Kernel;
use crate::semimetric::{distance_matrix, DistanceMatrix, SemiMetric, SemiMetricSpec};
use crate::stats::quantile_sorted;

/// Strictly increasing positive bandwidth candidates, plus an optional
/// last-resort bandwidth used only when every candidate is infeasible.
#[derive(Debug, Clone)]
pub struct BandwidthGrid {
    candidates: Vec<f64>,
    fallback: Option<f64>,
}

impl BandwidthGrid {
    pub fn new(mut candidates: Vec<f64>) -> Result<Self> {
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        candidates.dedup();
        if candidates.is_empty() || candidates.iter().any(|&c| !(c > 0.0)) {
            return Err(FvolError::InvalidParameter(
                "bandwidth grid must be nonempty with positive candidates".into(),
            ));
        }
        Ok(Self {
            candidates,
            fallback: None,
        })
    }

    pub fn with_fallback(mut self, fallback: f64) -> Result<Self> {
        if !(fallback > 0.0) {
            return Err(FvolError::InvalidParameter(
                "fallback bandwidth must be positive".into(),
            ));
        }
        self.fallback = Some(fallback);
        Ok(self)
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn fallback(&self) -> Option<f64> {
        self.fallback
    }
}

/// Candidate-grid and search options for the CV cascade.
#[derive(Debug, Clone, Copy)]
pub struct CvOptions {
    pub n_candidates: usize,
    pub q_min: f64,
    pub q_max: f64,
    /// Register a fallback bandwidth just above the largest pairwise
    /// distance, used only when every regular candidate leaves some scored
    /// point without neighbors; guards against samples whose outliers sit
    /// beyond the q_max quantile without letting a globally smoothed fit
    /// compete in the CV race.
    pub pad_to_global: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            n_candidates: 15,
            q_min: 0.05,
            q_max: 0.5,
            pad_to_global: false,
        }
    }
}

/// Bandwidths at evenly spaced quantiles of the positive pairwise distances.
pub fn candidate_grid(
    dist: &DistanceMatrix,
    n_candidates: usize,
    q_min: f64,
    q_max: f64,
) -> Result<BandwidthGrid> {
    if n_candidates == 0 || !(0.0 < q_min && q_min < q_max && q_max <= 1.0) {
        return Err(FvolError::InvalidParameter(
            "need n_candidates >= 1 and 0 < q_min < q_max <= 1".into(),
        ));
    }
    let mut pos = dist.positive_offdiag();
    if pos.is_empty() {
        return Err(FvolError::AllDistancesZero);
    }
    pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let candidates: Vec<f64> = (0..n_candidates)
        .map(|i| {
            let q = if n_candidates == 1 {
                q_min
            } else {
                q_min + (q_max - q_min) * i as f64 / (n_candidates - 1) as f64
            };
            quantile_sorted(&pos, q)
        })
        .collect();
    BandwidthGrid::new(candidates)
}

/// [`candidate_grid`] driven by [`CvOptions`], including the global fallback.
pub fn candidate_grid_with(dist: &DistanceMatrix, opts: &CvOptions) -> Result<BandwidthGrid> {
    let grid = candidate_grid(dist, opts.n_candidates, opts.q_min, opts.q_max)?;
    if !opts.pad_to_global {
        return Ok(grid);
    }
    let max = dist
        .positive_offdiag()
        .into_iter()
        .fold(0.0_f64, f64::max);
    grid.with_fallback(max * (1.0 + 1e-6))
}

/// One leave-one-out CV pass: smallest candidate minimizing the criterion.
///
/// `basis`/`basis_mask` define the estimator's own sums; `(score_idx,
/// targets)` the points and values the criterion is scored against. Scored
/// points with no neighbor inside a candidate window fall back to their
/// nearest neighbor, so every candidate is scored over the same set and a
/// few isolated curves cannot veto the whole grid.
fn cv_argmin(
    grid: &BandwidthGrid,
    dist: &DistanceMatrix,
    basis: &[f64],
    basis_mask: Option<&[bool]>,
    score_idx: &[usize],
    targets: &[f64],
    kernel: Kernel,
) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    'candidates: for &h in grid.candidates() {
        let mut crit = 0.0;
        for &t in score_idx {
            match loo_prediction(dist.row(t), basis, kernel, h, basis_mask, t) {
                Ok(est) => crit += (targets[t] - est).powi(2),
                Err(_) => continue 'candidates, // no usable neighbor at all
            }
        }
        match best {
            Some((_, best_crit)) if crit >= best_crit => {}
            _ => best = Some((h, crit)),
        }
    }
    best.map(|(h, _)| h).ok_or(FvolError::NoFeasibleCandidate)
}

/// Leave-one-out kernel prediction at a scored point, widening the window to
/// the nearest usable neighbor when `h` reaches none.
fn loo_prediction(
    dists: &[f64],
    basis: &[f64],
    kernel: Kernel,
    h: f64,
    basis_mask: Option<&[bool]>,
    t: usize,
) -> Result<f64> {
    match kernel_weighted_mean(dists, basis, kernel, h, basis_mask, Some(t)) {
        Ok(v) => Ok(v),
        Err(FvolError::NoNeighbors { .. }) => {
            let nearest = dists
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != t && basis_mask.map_or(true, |m| m[s]))
                .map(|(_, &d)| d)
                .fold(f64::INFINITY, f64::min);
            if !nearest.is_finite() {
                return Err(FvolError::NoNeighbors { context: None });
            }
            let h_eff = (nearest * (1.0 + 1e-9)).max(f64::MIN_POSITIVE);
            kernel_weighted_mean(dists, basis, kernel, h_eff, basis_mask, Some(t))
        }
        Err(e) => Err(e),
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

fn observed_idx(delta: &[bool]) -> Vec<usize> {
    delta
        .iter()
        .enumerate()
        .filter_map(|(t, &d)| if d { Some(t) } else { None })
        .collect()
}

fn all_idx(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Kernel-weighted mean that widens `h` to reach the nearest point passing
/// `mask` when the window is empty. Used only when imputing, where every
/// point must receive a value.
pub(crate) fn kwm_widening(
    dists: &[f64],
    targets: &[f64],
    kernel: Kernel,
    h: f64,
    mask: &[bool],
) -> Result<f64> {
    match kernel_weighted_mean(dists, targets, kernel, h, Some(mask), None) {
        Ok(v) => Ok(v),
        Err(FvolError::NoNeighbors { .. }) => {
            let nearest = dists
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(&d, _)| d)
                .fold(f64::INFINITY, f64::min);
            if !nearest.is_finite() {
                return Err(FvolError::NoNeighbors { context: None });
            }
            let h_eff = (nearest * (1.0 + 1e-9)).max(f64::MIN_POSITIVE);
            kernel_weighted_mean(dists, targets, kernel, h_eff, Some(mask), None)
        }
        Err(e) => Err(e),
    }
}

/// Full-sample simplified regression fit at every training point.
fn m0_fit(
    d1: &DistanceMatrix,
    y: &[f64],
    delta: &[bool],
    kernel: Kernel,
    h1: f64,
    require_all: bool,
) -> Result<Vec<f64>> {
    let n = d1.n();
    let mut out = vec![f64::NAN; n];
    for t in 0..n {
        if require_all {
            out[t] = kwm_widening(d1.row(t), y, kernel, h1, delta).map_err(|_| {
                FvolError::NoNeighbors {
                    context: Some(format!("regression fit at observation {t}")),
                }
            })?;
        } else {
            match kernel_weighted_mean(d1.row(t), y, kernel, h1, Some(delta), None) {
                Ok(m) => out[t] = m,
                Err(e) if delta[t] => return Err(e),
                Err(_) => {}
            }
        }
    }
    Ok(out)
}

/// Bandwidth for the regression stage, Eq-(18)-style leave-one-out CV.
pub fn cv_select_h1(
    data: &FdaDataset,
    cfg: &EstimatorConfig,
    grid: &BandwidthGrid,
    mode: EstimatorMode,
) -> Result<f64> {
    let delta = deltas(data);
    let y = responses(data);
    let sm = SemiMetric::resolve(&cfg.sm1, data)?;
    let d1 = distance_matrix(data, &sm)?;
    match mode {
        EstimatorMode::Imputed => {
            let ph1 = cfg.pilot_h1.unwrap_or(cfg.h1);
            let m0 = m0_fit(&d1, &y, &delta, cfg.kernel_k, ph1, true)?;
            let y_hat: Vec<f64> = (0..data.len())
                .map(|t| if delta[t] { y[t] } else { m0[t] })
                .collect();
            cv_argmin(
                grid,
                &d1,
                &y_hat,
                None,
                &all_idx(data.len()),
                &y_hat,
                cfg.kernel_k,
            )
        }
        _ => cv_argmin(
            grid,
            &d1,
            &y,
            Some(&delta),
            &observed_idx(&delta),
            &y,
            cfg.kernel_k,
        ),
    }
}

/// Bandwidth for the variance stage; `cfg.h1` must already be selected.
pub fn cv_select_h2(
    data: &FdaDataset,
    cfg: &EstimatorConfig,
    grid: &BandwidthGrid,
    mode: EstimatorMode,
) -> Result<f64> {
    let delta = deltas(data);
    let y = responses(data);
    let sm1 = SemiMetric::resolve(&cfg.sm1, data)?;
    let d1 = distance_matrix(data, &sm1)?;
    let sm2 = SemiMetric::resolve(&cfg.sm2, data)?;
    let d2 = distance_matrix(data, &sm2)?;
    match mode {
        EstimatorMode::Imputed => {
            let r_hat = imputed_residuals(&d1, &d2, &y, &delta, cfg)?;
            cv_argmin(
                grid,
                &d2,
                &r_hat,
                None,
                &all_idx(data.len()),
                &r_hat,
                cfg.kernel_w,
            )
        }
        _ => {
            let m0 = m0_fit(&d1, &y, &delta, cfg.kernel_k, cfg.h1, false)?;
            let r: Vec<f64> = (0..data.len())
                .map(|t| if delta[t] { (y[t] - m0[t]).powi(2) } else { 0.0 })
                .collect();
            cv_argmin(
                grid,
                &d2,
                &r,
                Some(&delta),
                &observed_idx(&delta),
                &r,
                cfg.kernel_w,
            )
        }
    }
}

/// Residuals of the simplified fit with missing ones imputed.
fn imputed_residuals(
    d1: &DistanceMatrix,
    d2: &DistanceMatrix,
    y: &[f64],
    delta: &[bool],
    cfg: &EstimatorConfig,
) -> Result<Vec<f64>> {
    let n = d1.n();
    let ph1 = cfg.pilot_h1.unwrap_or(cfg.h1);
    let ph2 = cfg.pilot_h2.unwrap_or(cfg.h2);
    let m0 = m0_fit(d1, y, delta, cfg.kernel_k, ph1, true)?;
    let r0: Vec<f64> = (0..n)
        .map(|t| if delta[t] { (y[t] - m0[t]).powi(2) } else { 0.0 })
        .collect();
    let mut r_hat = vec![0.0; n];
    for t in 0..n {
        r_hat[t] = if delta[t] {
            r0[t]
        } else {
            kwm_widening(d2.row(t), &r0, cfg.kernel_w, ph2, delta).map_err(|_| {
                FvolError::NoNeighbors {
                    context: Some(format!("imputing residual {t}")),
                }
            })?
        };
    }
    Ok(r_hat)
}

/// Options for the locally adaptive variance-stage bandwidth: the number of
/// nearest neighbors whose radius sets the kernel window at each point.
#[derive(Debug, Clone, Copy)]
pub struct KnnCvOptions {
    pub k_min: usize,
    pub k_step: usize,
    /// Largest neighbor count in the candidate grid; `None` caps at half the
    /// sample size.
    pub k_max: Option<usize>,
    /// Select the smoothest candidate whose leave-one-out score is within one
    /// standard error of the minimum, instead of the raw minimizer. Squared
    /// residuals are heavy-tailed, so the CV curve is statistically flat over
    /// a wide range; the raw minimizer then undersmooths.
    pub one_se: bool,
}

impl Default for KnnCvOptions {
    fn default() -> Self {
        Self {
            k_min: 10,
            k_step: 10,
            k_max: None,
            one_se: true,
        }
    }
}

/// Neighbor count for the locally adaptive variance stage, by leave-one-out
/// CV of the mode's variance estimator with a k-nearest-neighbor radius.
pub fn cv_select_k2(
    data: &FdaDataset,
    cfg: &EstimatorConfig,
    mode: EstimatorMode,
    opts: &KnnCvOptions,
) -> Result<usize> {
    let n = data.len();
    let delta = deltas(data);
    let y = responses(data);
    let sm1 = SemiMetric::resolve(&cfg.sm1, data)?;
    let d1 = distance_matrix(data, &sm1)?;
    let sm2 = SemiMetric::resolve(&cfg.sm2, data)?;
    let d2 = distance_matrix(data, &sm2)?;

    // targets and neighbor mask per estimator flavor
    let (targets, mask): (Vec<f64>, Option<&[bool]>) = match mode {
        EstimatorMode::Imputed => (imputed_residuals(&d1, &d2, &y, &delta, cfg)?, None),
        EstimatorMode::Simplified => {
            let m0 = m0_fit(&d1, &y, &delta, cfg.kernel_k, cfg.h1, false)?;
            let r: Vec<f64> = (0..n)
                .map(|t| if delta[t] { (y[t] - m0[t]).powi(2) } else { 0.0 })
                .collect();
            (r, Some(delta.as_slice()))
        }
        EstimatorMode::Complete => {
            let mut r = vec![0.0; n];
            for t in 0..n {
                let m = kernel_weighted_mean(d1.row(t), &y, cfg.kernel_k, cfg.h1, None, None)?;
                r[t] = (y[t] - m).powi(2);
            }
            (r, None)
        }
    };
    let scored: Vec<usize> = match mode {
        EstimatorMode::Simplified => observed_idx(&delta),
        _ => all_idx(n),
    };

    // sorted neighbor distances per scored point, excluding the point itself
    let sorted: Vec<Vec<f64>> = scored
        .iter()
        .map(|&t| {
            let mut ds: Vec<f64> = (0..n)
                .filter(|&s| s != t && mask.is_none_or(|m| m[s]))
                .map(|s| d2.row(t)[s])
                .collect();
            ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ds
        })
        .collect();
    let max_neighbors = sorted.iter().map(Vec::len).min().unwrap_or(0);
    let cap = opts.k_max.unwrap_or(n / 2).min(max_neighbors);
    if opts.k_min == 0 || opts.k_step == 0 || opts.k_min > cap {
        return Err(FvolError::InvalidParameter(format!(
            "neighbor-count grid is empty (k_min {}, step {}, cap {cap})",
            opts.k_min, opts.k_step
        )));
    }

    let mut stats: Vec<(usize, f64, f64)> = Vec::new(); // (k, mean, standard error)
    let mut k = opts.k_min;
    while k <= cap {
        let mut errs: Vec<f64> = Vec::with_capacity(scored.len());
        for (i, &t) in scored.iter().enumerate() {
            let h = sorted[i][k - 1] * (1.0 + 1e-9) + f64::MIN_POSITIVE;
            let u = kernel_weighted_mean(d2.row(t), &targets, cfg.kernel_w, h, mask, Some(t))?;
            errs.push((targets[t] - u).powi(2));
        }
        let m = errs.iter().sum::<f64>() / errs.len() as f64;
        let se = if errs.len() > 1 {
            let var = errs.iter().map(|e| (e - m).powi(2)).sum::<f64>()
                / (errs.len() as f64 - 1.0);
            (var / errs.len() as f64).sqrt()
        } else {
            0.0
        };
        stats.push((k, m, se));
        k += opts.k_step;
    }
    let &(k_min_cv, m_min, se_min) = stats
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("grid verified nonempty");
    if !opts.one_se {
        return Ok(k_min_cv);
    }
    Ok(stats
        .iter()
        .rev()
        .find(|&&(_, m, _)| m <= m_min + se_min)
        .map(|&(k, _, _)| k)
        .unwrap_or(k_min_cv))
}

/// Bandwidth for the fourth-moment stage; `cfg.h1` and `cfg.h2` fixed.
pub fn cv_select_h3(
    data: &FdaDataset,
    cfg: &EstimatorConfig,
    grid: &BandwidthGrid,
    mode: EstimatorMode,
) -> Result<f64> {
    let delta = deltas(data);
    let y = responses(data);
    let n = data.len();
    let sm1 = SemiMetric::resolve(&cfg.sm1, data)?;
    let d1 = distance_matrix(data, &sm1)?;
    let sm2 = SemiMetric::resolve(&cfg.sm2, data)?;
    let d2 = distance_matrix(data, &sm2)?;
    let sm3 = SemiMetric::resolve(&cfg.sm3, data)?;
    let d3 = distance_matrix(data, &sm3)?;

    // points with a degenerate pilot variance (isolated curves whose fit
    // interpolates exactly) carry no standardized residual and are skipped
    let (targets, mask, idx): (Vec<f64>, Option<Vec<bool>>, Vec<usize>) = match mode {
        EstimatorMode::Imputed => {
            let ph1 = cfg.pilot_h1.unwrap_or(cfg.h1);
            let m0 = m0_fit(&d1, &y, &delta, cfg.kernel_k, ph1, true)?;
            let y_hat: Vec<f64> = (0..n)
                .map(|t| if delta[t] { y[t] } else { m0[t] })
                .collect();
            let r_hat = imputed_residuals(&d1, &d2, &y, &delta, cfg)?;
            let mut targets = vec![0.0; n];
            let mut usable = vec![false; n];
            for t in 0..n {
                let m1 = kernel_weighted_mean(d1.row(t), &y_hat, cfg.kernel_k, cfg.h1, None, None)?;
                let u1 = kernel_weighted_mean(d2.row(t), &r_hat, cfg.kernel_w, cfg.h2, None, None)?;
                if u1 < U_FLOOR {
                    continue;
                }
                let eps = (y_hat[t] - m1) / u1.sqrt();
                targets[t] = (eps * eps - 1.0).powi(2);
                usable[t] = true;
            }
            let idx = observed_idx(&usable);
            (targets, Some(usable), idx)
        }
        _ => {
            let m0 = m0_fit(&d1, &y, &delta, cfg.kernel_k, cfg.h1, false)?;
            let r: Vec<f64> = (0..n)
                .map(|t| if delta[t] { (y[t] - m0[t]).powi(2) } else { 0.0 })
                .collect();
            let mut targets = vec![0.0; n];
            let mut usable = vec![false; n];
            for t in 0..n {
                if !delta[t] {
                    continue;
                }
                let u0 =
                    kernel_weighted_mean(d2.row(t), &r, cfg.kernel_w, cfg.h2, Some(&delta), None)?;
                if u0 < U_FLOOR {
                    continue;
                }
                let eps = (y[t] - m0[t]) / u0.sqrt();
                targets[t] = (eps * eps - 1.0).powi(2);
                usable[t] = true;
            }
            let idx = observed_idx(&usable);
            (targets, Some(usable), idx)
        }
    };
    if idx.is_empty() {
        return Err(FvolError::NoFeasibleCandidate);
    }
    cv_argmin(grid, &d3, &targets, mask.as_deref(), &idx, &targets, cfg.kernel_h)
}

/// Bandwidth for the observation-probability stage (Brier-type criterion
/// over every observation).
pub fn cv_select_h4(data: &FdaDataset, cfg: &EstimatorConfig, grid: &BandwidthGrid) -> Result<f64> {
    let delta = deltas(data);
    let sm = SemiMetric::resolve(&cfg.sm4, data)?;
    let d4 = distance_matrix(data, &sm)?;
    let targets: Vec<f64> = delta.iter().map(|&d| if d { 1.0 } else { 0.0 }).collect();
    cv_argmin(
        grid,
        &d4,
        &targets,
        None,
        &all_idx(data.len()),
        &targets,
        cfg.kernel_htilde,
    )
}

/// Bandwidths for one estimator flavor.
#[derive(Debug, Clone, Copy)]
pub struct StageBandwidths {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    /// Pilot bandwidths used to impute missing responses/residuals in
    /// imputed mode; `None` for the simplified flavor.
    pub pilot_h1: Option<f64>,
    pub pilot_h2: Option<f64>,
}

impl StageBandwidths {
    pub fn apply(&self, cfg: &mut EstimatorConfig) {
        cfg.h1 = self.h1;
        cfg.h2 = self.h2;
        cfg.h3 = self.h3;
        cfg.h4 = self.h4;
        cfg.pilot_h1 = self.pilot_h1;
        cfg.pilot_h2 = self.pilot_h2;
    }
}

/// CV-selected bandwidths for both flavors (h4 is shared).
#[derive(Debug, Clone, Copy)]
pub struct SelectedBandwidths {
    pub simplified: StageBandwidths,
    pub imputed: StageBandwidths,
}

/// The full CV cascade: simplified h1..h3 and h4, then imputed h1..h3 on the
/// sample imputed with the simplified bandwidths.
pub fn select_bandwidths(
    data: &FdaDataset,
    cfg_template: &EstimatorConfig,
    opts: &CvOptions,
) -> Result<SelectedBandwidths> {
    let mut cfg = cfg_template.clone();

    let sm1 = SemiMetric::resolve(&cfg.sm1, data)?;
    let d1 = distance_matrix(data, &sm1)?;
    let g1 = candidate_grid_with(&d1, opts)?;
    let same_2 = cfg.sm2 == cfg.sm1;
    let same_3 = cfg.sm3 == cfg.sm1;
    let same_4 = cfg.sm4 == cfg.sm1;
    let grid_for = |spec: &SemiMetricSpec, same: bool| -> Result<BandwidthGrid> {
        if same {
            Ok(g1.clone())
        } else {
            let sm = SemiMetric::resolve(spec, data)?;
            let d = distance_matrix(data, &sm)?;
            candidate_grid_with(&d, opts)
        }
    };
    let g2 = grid_for(&cfg.sm2, same_2)?;
    let g3 = grid_for(&cfg.sm3, same_3)?;
    let g4 = grid_for(&cfg.sm4, same_4)?;

    // simplified cascade
    cfg.h1 = cv_select_h1(data, &cfg, &g1, EstimatorMode::Simplified)?;
    cfg.h2 = cv_select_h2(data, &cfg, &g2, EstimatorMode::Simplified)?;
    cfg.h3 = cv_select_h3(data, &cfg, &g3, EstimatorMode::Simplified)?;
    cfg.h4 = cv_select_h4(data, &cfg, &g4)?;
    let simplified = StageBandwidths {
        h1: cfg.h1,
        h2: cfg.h2,
        h3: cfg.h3,
        h4: cfg.h4,
        pilot_h1: None,
        pilot_h2: None,
    };

    // imputed cascade: the pilots that fill missing responses/residuals stay
    // pinned at the simplified selections while the final bandwidths vary
    let mut icfg = cfg.clone();
    icfg.pilot_h1 = Some(cfg.h1);
    icfg.pilot_h2 = Some(cfg.h2);
    icfg.h1 = cv_select_h1(data, &icfg, &g1, EstimatorMode::Imputed)?;
    icfg.h2 = cv_select_h2(data, &icfg, &g2, EstimatorMode::Imputed)?;
    icfg.h3 = cv_select_h3(data, &icfg, &g3, EstimatorMode::Imputed)?;
    let imputed = StageBandwidths {
        h1: icfg.h1,
        h2: icfg.h2,
        h3: icfg.h3,
        h4: cfg.h4,
        pilot_h1: icfg.pilot_h1,
        pilot_h2: icfg.pilot_h2,
    };

    Ok(SelectedBandwidths {
        simplified,
        imputed,
    })
}
