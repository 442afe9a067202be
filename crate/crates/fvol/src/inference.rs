//! Plug-in components for the asymptotic confidence intervals: the empirical
//! small-ball CDF, the tau ratio, the kernel moment constants, and the CI
//! constructors for the simplified and imputed variance estimators.

use crate::error::{FvolError, Result};
use crate::kernel::Kernel;

/// Sorted distances from an anchor curve to the sample, with the variance
/// bandwidth they are measured against.
#[derive(Debug, Clone)]
pub struct SmallBallProfile {
    distances: Vec<f64>,
    h2: f64,
}

impl SmallBallProfile {
    pub fn new(mut distances: Vec<f64>, h2: f64) -> Result<Self> {
        if !(h2 > 0.0) {
            return Err(FvolError::InvalidParameter(format!(
                "profile bandwidth must be positive, got {h2}"
            )));
        }
        if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(FvolError::InvalidParameter(
                "distances must be finite and nonnegative".into(),
            ));
        }
        distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { distances, h2 })
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    pub fn n(&self) -> usize {
        self.distances.len()
    }

    /// Number of sample points within distance `u` of the anchor.
    pub fn count_within(&self, u: f64) -> usize {
        self.distances.partition_point(|&d| d <= u)
    }
}

/// Which denominator the tau ratio uses.
///
/// `BandwidthRatio` is `F(u*h2) / F(h2)`, the form consistent with the limit
/// definition and with `tau(1) = 1`. `Printed` divides by `F(u)` instead and
/// exists only for comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauForm {
    #[default]
    BandwidthRatio,
    Printed,
}

/// Empirical small-ball CDF: fraction of distances at most `u`.
pub fn empirical_small_ball(profile: &SmallBallProfile, u: f64) -> f64 {
    if profile.n() == 0 {
        return 0.0;
    }
    profile.count_within(u) as f64 / profile.n() as f64
}

/// Small-ball concentration ratio at scale `u` in [0,1].
pub fn tau_hat(profile: &SmallBallProfile, u: f64) -> Result<f64> {
    tau_hat_with(profile, u, TauForm::default())
}

pub fn tau_hat_with(profile: &SmallBallProfile, u: f64, form: TauForm) -> Result<f64> {
    let denom = match form {
        TauForm::BandwidthRatio => empirical_small_ball(profile, profile.h2),
        TauForm::Printed => empirical_small_ball(profile, u),
    };
    if denom <= 0.0 {
        return Err(FvolError::EmptyBall);
    }
    Ok(empirical_small_ball(profile, u * profile.h2) / denom)
}

/// Plug-in kernel moment `M_j = W^j(1) - integral of (W^j)' * tau over [0,1]`.
///
/// `tau` is piecewise constant, so the integral is computed exactly over the
/// step partition: the antiderivative of `(W^j)'` is `W^j` itself.
pub fn m_hat_moment(kernel_w: Kernel, j: u8, profile: &SmallBallProfile) -> Result<f64> {
    let f_h2 = empirical_small_ball(profile, profile.h2);
    if f_h2 <= 0.0 {
        return Err(FvolError::EmptyBall);
    }
    let wj = |u: f64| kernel_w.eval(u).powi(j as i32);

    // Step knots of tau in (0,1): normalized distances d/h2.
    let mut knots: Vec<f64> = profile
        .distances
        .iter()
        .map(|d| d / profile.h2)
        .filter(|&u| u > 0.0 && u < 1.0)
        .collect();
    knots.dedup();
    knots.push(1.0);

    let mut integral = 0.0;
    let mut a = 0.0;
    for &b in &knots {
        if b <= a {
            continue;
        }
        // tau is right-continuous: constant on [a, b) at its value in a
        let tau = empirical_small_ball(profile, a * profile.h2) / f_h2;
        integral += tau * (wj(b) - wj(a));
        a = b;
    }
    Ok(wj(1.0) - integral)
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// absolute error below 1.2e-9).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) {
        return Err(FvolError::InvalidParameter(format!(
            "quantile level must be in (0,1), got {p}"
        )));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    Ok(x)
}

/// Upper `nu/2` quantile of the standard normal.
pub fn upper_quantile(nu: f64) -> Result<f64> {
    if !(0.0 < nu && nu < 1.0) {
        return Err(FvolError::InvalidParameter(format!(
            "CI level must be in (0,1), got {nu}"
        )));
    }
    normal_quantile(1.0 - nu / 2.0)
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) {
        return Err(FvolError::NonPositivePlugin { name, value });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ci_common(
    u_hat: f64,
    omega_hat: f64,
    pi_hat: f64,
    m1_hat: f64,
    m2_hat: f64,
    f_hat: f64,
    n: usize,
    nu: f64,
    imputed: bool,
) -> Result<(f64, f64)> {
    check_positive("omega_hat", omega_hat)?;
    check_positive("pi_hat", pi_hat)?;
    check_positive("m1_hat", m1_hat)?;
    check_positive("m2_hat", m2_hat)?;
    check_positive("f_hat", f_hat)?;
    if n == 0 {
        return Err(FvolError::NonPositivePlugin {
            name: "n",
            value: 0.0,
        });
    }
    let q = upper_quantile(nu)?;
    let n_ball = n as f64 * f_hat;
    let variance_ratio = if imputed {
        omega_hat * pi_hat / n_ball
    } else {
        omega_hat / (n_ball * pi_hat)
    };
    let half_rel = q * (m2_hat.sqrt() / m1_hat) * variance_ratio.sqrt();
    // Lower bounds below zero are reported as-is.
    Ok((u_hat * (1.0 - half_rel), u_hat * (1.0 + half_rel)))
}

/// Confidence interval around the simplified variance estimate.
#[allow(clippy::too_many_arguments)]
pub fn ci_simplified(
    u_hat: f64,
    omega_hat: f64,
    pi_hat: f64,
    m1_hat: f64,
    m2_hat: f64,
    f_hat: f64,
    n: usize,
    nu: f64,
) -> Result<(f64, f64)> {
    ci_common(u_hat, omega_hat, pi_hat, m1_hat, m2_hat, f_hat, n, nu, false)
}

/// Confidence interval around the imputed variance estimate.
#[allow(clippy::too_many_arguments)]
pub fn ci_imputed(
    u_hat: f64,
    omega_hat: f64,
    pi_hat: f64,
    m1_hat: f64,
    m2_hat: f64,
    f_hat: f64,
    n: usize,
    nu: f64,
) -> Result<(f64, f64)> {
    ci_common(u_hat, omega_hat, pi_hat, m1_hat, m2_hat, f_hat, n, nu, true)
}
