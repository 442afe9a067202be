//! Nonparametric imputation of missing responses and residuals: the building
//! block behind the imputed regression and volatility estimators.
//!
//! Run with: cargo run --example imputation

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fvol::estimator::{
    impute_residuals, impute_responses, residuals_squared, EstimatorConfig, EstimatorMode,
    RegressionFit,
};
use fvol::fda::{FdaDataset, FdaObservation};
use fvol::semimetric::SemiMetricSpec;
use fvol::simulation::{apply_mar, gen_curves, gen_errors, true_U, true_m, ErrorModel};

fn main() -> fvol::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let curves = gen_curves(80, 100, &mut rng)?;
    let errors = gen_errors(80, ErrorModel::Model1, &mut rng);
    let (delta, _) = apply_mar(&curves, 0.2, &mut rng);
    let truth: Vec<f64> = curves
        .iter()
        .zip(&errors)
        .map(|(x, &e)| true_m(x) + true_U(x).sqrt() * e)
        .collect();
    let data = FdaDataset::new(
        curves
            .iter()
            .zip(truth.iter().zip(&delta))
            .map(|(x, (&y, &d))| {
                if d {
                    FdaObservation::observed(x.clone(), y)
                } else {
                    Ok(FdaObservation::missing(x.clone()))
                }
            })
            .collect::<fvol::Result<_>>()?,
    )?;

    // generous bandwidths: imputation must reach a neighbor for every
    // missing point, including curves far out in the derivative metric
    let cfg = EstimatorConfig::with_bandwidths(SemiMetricSpec::default(), 6.0, 6.0, 6.0, 6.0)?;

    // fill missing responses with the observed-case regression fit
    let fit = impute_responses(&data, &cfg)?;
    let y_hat = fit.imputed_y.as_ref().unwrap();
    println!("imputed responses at the missing time points:");
    for (t, obs) in data.observations().iter().enumerate() {
        if !obs.delta() {
            println!(
                "  t = {t:>2}: imputed {:>7.3}   (unobserved actual {:>7.3})",
                y_hat[t], truth[t]
            );
        }
    }

    // same idea one level up: squared residuals for the variance stage
    let r = residuals_squared(
        &data,
        &RegressionFit {
            mode: EstimatorMode::Simplified,
            fitted: fit.fitted.clone(),
            imputed_y: None,
        },
    )?;
    let r_hat = impute_residuals(&data, &r, &cfg)?;
    let n_filled = r.iter().filter(|v| v.is_none()).count();
    println!("\nimputed {n_filled} missing squared residuals; first few:");
    for (t, orig) in r.iter().enumerate().filter(|(_, v)| v.is_none()).take(5) {
        let _ = orig;
        println!("  t = {t:>2}: r_hat = {:.4}", r_hat[t]);
    }
    Ok(())
}
