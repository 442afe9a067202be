//! Semi-metrics between curves: plain L2, derivative-based L2, and the
//! functional-PCA projection distance, plus cached pairwise distance matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{FvolError, Result};
use crate::fda::{finite_diff_derivative, inner_product, Curve, FdaDataset, Grid};

/// Declarative choice of semi-metric, resolvable against a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SemiMetricSpec {
    L2,
    DerivL2 { order: usize },
    Pca { k: usize },
}

impl Default for SemiMetricSpec {
    fn default() -> Self {
        SemiMetricSpec::DerivL2 { order: 1 }
    }
}

/// Top-k eigenpairs of the quadrature-weighted empirical covariance operator.
#[derive(Debug, Clone)]
pub struct PcaBasis {
    grid: Arc<Grid>,
    eigenfunctions: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

impl PcaBasis {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[Vec<f64>] {
        &self.eigenfunctions
    }

    pub fn k(&self) -> usize {
        self.eigenfunctions.len()
    }

    /// Projection scores of a curve onto the basis.
    pub fn scores(&self, x: &Curve) -> Result<Vec<f64>> {
        if x.grid().as_ref() != self.grid.as_ref() {
            return Err(FvolError::MismatchedGrid);
        }
        self.eigenfunctions
            .iter()
            .map(|phi| inner_product(x.values(), phi, &self.grid))
            .collect()
    }
}

/// Fit the top-k eigenpairs of the empirical covariance of centered curves.
///
/// The eigenproblem is solved on the quadrature-weighted covariance matrix so
/// the eigenfunctions come out L2-orthonormal on the grid, not merely
/// coordinate-orthonormal. Each eigenfunction's sign is fixed so its
/// largest-magnitude coordinate is positive.
pub fn pca_fit(data: &FdaDataset, k: usize) -> Result<PcaBasis> {
    if data.is_empty() {
        return Err(FvolError::EmptyDataset);
    }
    let grid = data.grid().clone();
    let p = grid.len();
    if k < 1 || k > p {
        return Err(FvolError::KTooLarge { k, max: p });
    }
    let n = data.len();

    let mut mean = vec![0.0; p];
    for c in data.curves() {
        for (m, v) in mean.iter_mut().zip(c.values()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = DMatrix::<f64>::zeros(p, p);
    for c in data.curves() {
        let d: Vec<f64> = c.values().iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..p {
            for j in i..p {
                cov[(i, j)] += d[i] * d[j];
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            let v = cov[(i, j)] / n as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    // Weighted problem: B = D^{1/2} C D^{1/2}, eigenfunction = D^{-1/2} v.
    let sqrt_w: Vec<f64> = grid.quad_weights().iter().map(|w| w.sqrt()).collect();
    for i in 0..p {
        for j in 0..p {
            cov[(i, j)] *= sqrt_w[i] * sqrt_w[j];
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
    });

    let mut eigenfunctions = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut phi: Vec<f64> = (0..p)
            .map(|i| eig.eigenvectors[(i, idx)] / sqrt_w[i])
            .collect();
        let (mut max_abs, mut max_val) = (0.0_f64, 0.0_f64);
        for &v in &phi {
            if v.abs() > max_abs {
                max_abs = v.abs();
                max_val = v;
            }
        }
        if max_val < 0.0 {
            for v in &mut phi {
                *v = -*v;
            }
        }
        eigenfunctions.push(phi);
        eigenvalues.push(eig.eigenvalues[idx]);
    }

    Ok(PcaBasis {
        grid,
        eigenfunctions,
        eigenvalues,
    })
}

/// L2 distance between derivatives of the given order (order 0 is plain L2).
pub fn semimetric_l2_deriv(x: &Curve, y: &Curve, order: usize) -> Result<f64> {
    if !x.same_grid(y) {
        return Err(FvolError::MismatchedGrid);
    }
    let dx = finite_diff_derivative(x, order)?;
    let dy = finite_diff_derivative(y, order)?;
    let diff: Vec<f64> = dx
        .values()
        .iter()
        .zip(dy.values())
        .map(|(a, b)| a - b)
        .collect();
    Ok(inner_product(&diff, &diff, x.grid())?.max(0.0).sqrt())
}

/// Euclidean norm of the score differences under a fitted PCA basis.
pub fn semimetric_pca(x: &Curve, y: &Curve, basis: &PcaBasis) -> Result<f64> {
    let sx = basis.scores(x)?;
    let sy = basis.scores(y)?;
    Ok(sx
        .iter()
        .zip(&sy)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// A spec resolved against a dataset; PCA is fitted exactly once.
#[derive(Debug, Clone)]
pub enum SemiMetric {
    DerivL2 { order: usize },
    Pca(PcaBasis),
}

impl SemiMetric {
    pub fn resolve(spec: &SemiMetricSpec, data: &FdaDataset) -> Result<Self> {
        match spec {
            SemiMetricSpec::L2 => Ok(SemiMetric::DerivL2 { order: 0 }),
            SemiMetricSpec::DerivL2 { order } => Ok(SemiMetric::DerivL2 { order: *order }),
            SemiMetricSpec::Pca { k } => Ok(SemiMetric::Pca(pca_fit(data, *k)?)),
        }
    }

    /// Per-curve representation under which distances are plain L2/Euclidean.
    pub fn prepare(&self, x: &Curve) -> Result<Prepared> {
        match self {
            SemiMetric::DerivL2 { order } => {
                let d = finite_diff_derivative(x, *order)?;
                Ok(Prepared::OnGrid(d.values().to_vec()))
            }
            SemiMetric::Pca(basis) => Ok(Prepared::Scores(basis.scores(x)?)),
        }
    }

    pub fn distance(&self, x: &Curve, y: &Curve) -> Result<f64> {
        match self {
            SemiMetric::DerivL2 { order } => semimetric_l2_deriv(x, y, *order),
            SemiMetric::Pca(basis) => semimetric_pca(x, y, basis),
        }
    }

    pub fn dist_prepared(&self, a: &Prepared, b: &Prepared, grid: &Grid) -> f64 {
        match (a, b) {
            (Prepared::OnGrid(u), Prepared::OnGrid(v)) => {
                let diff: Vec<f64> = u.iter().zip(v).map(|(x, y)| x - y).collect();
                inner_product(&diff, &diff, grid)
                    .expect("prepared values live on the shared grid")
                    .max(0.0)
                    .sqrt()
            }
            (Prepared::Scores(u), Prepared::Scores(v)) => u
                .iter()
                .zip(v)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            _ => unreachable!("prepared representations come from the same semi-metric"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Prepared {
    OnGrid(Vec<f64>),
    Scores(Vec<f64>),
}

/// Symmetric pairwise distances, cached for the estimators and CV.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Build from a dense row-major buffer of length `n * n`.
    pub fn from_raw(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Strictly positive off-diagonal entries.
    pub fn positive_offdiag(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let d = self.get(i, j);
                if d > 0.0 {
                    out.push(d);
                }
            }
        }
        out
    }
}

/// Pairwise distances for a dataset under a resolved semi-metric.
pub fn distance_matrix(data: &FdaDataset, sm: &SemiMetric) -> Result<DistanceMatrix> {
    let n = data.len();
    let grid = data.grid();
    let prepared: Vec<Prepared> = data
        .curves()
        .map(|c| sm.prepare(c))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sm.dist_prepared(&prepared[i], &prepared[j], grid);
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data: out })
}

/// Distances from an external point to every curve of the dataset.
pub fn distances_to(x: &Curve, data: &FdaDataset, sm: &SemiMetric) -> Result<Vec<f64>> {
    let px = sm.prepare(x)?;
    let grid = data.grid();
    data.curves()
        .map(|c| Ok(sm.dist_prepared(&px, &sm.prepare(c)?, grid)))
        .collect()
}
