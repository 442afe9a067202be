//! Leave-one-out cross-validated bandwidths for all four estimation stages,
//! in the simplified and imputed flavors.
//!
//! Run with: cargo run --example bandwidth_selection

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fvol::bandwidth::{candidate_grid_with, select_bandwidths, CvOptions};
use fvol::estimator::EstimatorConfig;
use fvol::fda::{FdaDataset, FdaObservation};
use fvol::semimetric::{distance_matrix, SemiMetric, SemiMetricSpec};
use fvol::simulation::{apply_mar, gen_curves, gen_errors, true_U, true_m, ErrorModel};

fn main() -> fvol::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let curves = gen_curves(120, 100, &mut rng)?;
    let errors = gen_errors(120, ErrorModel::Model1, &mut rng);
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

    let template =
        EstimatorConfig::with_bandwidths(SemiMetricSpec::default(), 1.0, 1.0, 1.0, 1.0)?;
    let opts = CvOptions {
        pad_to_global: true,
        ..CvOptions::default()
    };

    let sm = SemiMetric::resolve(&template.sm1, &data)?;
    let dist = distance_matrix(&data, &sm)?;
    let grid = candidate_grid_with(&dist, &opts)?;
    println!("candidate grid ({} bandwidths):", grid.candidates().len());
    for h in grid.candidates() {
        println!("  {h:.4}");
    }

    let sel = select_bandwidths(&data, &template, &opts)?;
    println!("\nselected (simplified): h1={:.4} h2={:.4} h3={:.4} h4={:.4}",
        sel.simplified.h1, sel.simplified.h2, sel.simplified.h3, sel.simplified.h4);
    println!("selected (imputed):    h1={:.4} h2={:.4} h3={:.4} h4={:.4}",
        sel.imputed.h1, sel.imputed.h2, sel.imputed.h3, sel.imputed.h4);
    Ok(())
}
