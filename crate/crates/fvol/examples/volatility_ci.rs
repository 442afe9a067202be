//! Estimate the conditional volatility of a response given a curve, with a
//! plug-in confidence interval, under missing-at-random responses.
//!
//! Run with: cargo run --example volatility_ci

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fvol::bandwidth::{select_bandwidths, CvOptions};
use fvol::estimator::{EstimatorConfig, EstimatorMode};
use fvol::fda::{FdaDataset, FdaObservation};
use fvol::model::FittedModel;
use fvol::semimetric::SemiMetricSpec;
use fvol::simulation::{apply_mar, gen_curves, gen_errors, true_U, true_m, ErrorModel};

fn main() -> fvol::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 200;

    // heteroscedastic sample Y = m(X) + sqrt(U(X)) * eps with ~30% missing
    let curves = gen_curves(n, 100, &mut rng)?;
    let errors = gen_errors(n, ErrorModel::Model1, &mut rng);
    let (delta, _) = apply_mar(&curves, 0.2, &mut rng);
    let data = FdaDataset::new(
        curves
            .iter()
            .zip(errors.iter().zip(&delta))
            .map(|(x, (&e, &d))| {
                let y = true_m(x) + true_U(x).sqrt() * e;
                if d {
                    FdaObservation::observed(x.clone(), y)
                } else {
                    Ok(FdaObservation::missing(x.clone()))
                }
            })
            .collect::<fvol::Result<_>>()?,
    )?;
    println!(
        "sample: n = {}, observed = {} ({:.0}% missing)",
        data.len(),
        data.n_observed(),
        100.0 * (1.0 - data.n_observed() as f64 / data.len() as f64)
    );

    let template = EstimatorConfig::with_bandwidths(SemiMetricSpec::default(), 1.0, 1.0, 1.0, 1.0)?;
    let sel = select_bandwidths(
        &data,
        &template,
        &CvOptions {
            pad_to_global: true,
            ..CvOptions::default()
        },
    )?;
    let x_new = &gen_curves(1, 100, &mut rng)?[0];
    println!("true U(x*) = {:.4}\n", true_U(x_new));

    for (mode, bw) in [
        (EstimatorMode::Simplified, sel.simplified),
        (EstimatorMode::Imputed, sel.imputed),
    ] {
        let mut cfg = template.clone();
        bw.apply(&mut cfg);
        let model = FittedModel::fit(&data, &cfg, mode)?;
        let est = model.estimate_vol(x_new, 0.05)?;
        println!(
            "{:<10}  U = {:.4}  95% CI [{:.4}, {:.4}]  (pi = {:.3}, omega = {:.3})",
            mode.name(),
            est.u_hat,
            est.ci_low,
            est.ci_high,
            est.components.pi_hat,
            est.components.omega_hat,
        );
    }
    Ok(())
}
