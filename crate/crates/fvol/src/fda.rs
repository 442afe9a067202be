//! Grids, curves, datasets, quadrature and finite differences.
//!
//! Everything downstream (semi-metrics, estimators, the simulation and the
//! finance pipeline) consumes these types. Curves in a dataset share one
//! [`Grid`]; the grid owns the quadrature weights.

use std::sync::Arc;

use crate::error::{FvolError, Result};

/// Strictly increasing abscissae shared by a set of curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    uniform: bool,
    /// Composite trapezoid weights for the grid span.
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(FvolError::GridTooShort {
                need: 2,
                have: points.len(),
            });
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) || points.iter().any(|p| !p.is_finite()) {
            return Err(FvolError::InvalidParameter(
                "grid points must be finite and strictly increasing".into(),
            ));
        }
        let spacings: Vec<f64> = points.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
        let uniform = spacings
            .iter()
            .all(|s| (s - mean).abs() <= 1e-9 * mean.abs().max(1.0));

        let n = points.len();
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let h = points[i + 1] - points[i];
            weights[i] += 0.5 * h;
            weights[i + 1] += 0.5 * h;
        }
        Ok(Self {
            points,
            uniform,
            weights,
        })
    }

    /// Uniform grid with `n` points over `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(FvolError::InvalidParameter(format!(
                "uniform grid needs n >= 2 and b > a, got n={n}, a={a}, b={b}"
            )));
        }
        let step = (b - a) / (n - 1) as f64;
        Self::new((0..n).map(|i| a + step * i as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Trapezoid quadrature weights.
    pub fn quad_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn span(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().unwrap())
    }
}

/// A functional observation sampled on a shared grid.
#[derive(Debug, Clone)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FvolError::MismatchedLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FvolError::InvalidParameter(
                "curve values must be finite".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    /// Curve from a closure evaluated at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&p| f(p)).collect();
        Curve::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_grid(&self, other: &Curve) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    /// Quadrature integral of the curve itself.
    pub fn integrate(&self) -> f64 {
        trapezoid_integrate(&self.values, &self.grid).expect("lengths match by construction")
    }
}

/// One time point: a curve, an optional response, and the missingness flag.
#[derive(Debug, Clone)]
pub struct FdaObservation {
    pub x: Curve,
    y: Option<f64>,
    delta: bool,
}

impl FdaObservation {
    pub fn observed(x: Curve, y: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(FvolError::InvalidParameter(
                "observed response must be finite".into(),
            ));
        }
        Ok(Self {
            x,
            y: Some(y),
            delta: true,
        })
    }

    pub fn missing(x: Curve) -> Self {
        Self {
            x,
            y: None,
            delta: false,
        }
    }

    pub fn y(&self) -> Option<f64> {
        self.y
    }

    pub fn delta(&self) -> bool {
        self.delta
    }
}

/// Time-ordered observations on one shared grid.
#[derive(Debug, Clone)]
pub struct FdaDataset {
    observations: Vec<FdaObservation>,
    grid: Arc<Grid>,
}

impl FdaDataset {
    pub fn new(observations: Vec<FdaObservation>) -> Result<Self> {
        let first = observations.first().ok_or(FvolError::EmptyDataset)?;
        let grid = first.x.grid().clone();
        for obs in &observations {
            if !obs.x.same_grid(&first.x) {
                return Err(FvolError::MismatchedGrid);
            }
        }
        Ok(Self { observations, grid })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn observations(&self) -> &[FdaObservation] {
        &self.observations
    }

    pub fn curves(&self) -> impl Iterator<Item = &Curve> {
        self.observations.iter().map(|o| &o.x)
    }

    pub fn n_observed(&self) -> usize {
        self.observations.iter().filter(|o| o.delta).count()
    }

    pub fn is_complete(&self) -> bool {
        self.n_observed() == self.len()
    }
}

/// Composite trapezoid rule over the grid span.
pub fn trapezoid_integrate(values: &[f64], grid: &Grid) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(FvolError::MismatchedLength {
            expected: grid.len(),
            got: values.len(),
        });
    }
    Ok(grid
        .quad_weights()
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum())
}

/// Quadrature inner product of two value sequences on `grid`.
pub fn inner_product(a: &[f64], b: &[f64], grid: &Grid) -> Result<f64> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(FvolError::MismatchedLength {
            expected: grid.len(),
            got: a.len().min(b.len()),
        });
    }
    Ok(grid
        .quad_weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x * y)
        .sum())
}

/// Numerical derivative of the given order on a uniform grid.
///
/// Central differences at interior points, second-order one-sided stencils at
/// the two endpoints, applied `order` times.
pub fn finite_diff_derivative(curve: &Curve, order: usize) -> Result<Curve> {
    if order == 0 {
        return Ok(curve.clone());
    }
    let grid = curve.grid();
    if !grid.is_uniform() {
        return Err(FvolError::NonUniformGrid);
    }
    let n = grid.len();
    if n <= order + 1 {
        return Err(FvolError::GridTooShort {
            need: order + 1,
            have: n,
        });
    }
    let h = (grid.points()[n - 1] - grid.points()[0]) / (n - 1) as f64;
    let mut v = curve.values().to_vec();
    for _ in 0..order {
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        }
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        v = d;
    }
    Curve::new(grid.clone(), v)
}

/// Percent log returns: element t is `100 * ln(p[t+1] / p[t])`.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(FvolError::TooShort { need: 2 });
    }
    if let Some(index) = prices.iter().position(|&p| !(p > 0.0)) {
        return Err(FvolError::NonPositivePrice { index });
    }
    Ok(prices
        .windows(2)
        .map(|w| 100.0 * (w[1] / w[0]).ln())
        .collect())
}
