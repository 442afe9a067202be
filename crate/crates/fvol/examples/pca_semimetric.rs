//! Functional-PCA semi-metric: fit the covariance eigenbasis of a curve
//! sample and compare curves through their leading projection scores.
//!
//! Run with: cargo run --example pca_semimetric

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fvol::fda::{FdaDataset, FdaObservation};
use fvol::semimetric::{pca_fit, semimetric_pca, SemiMetric, SemiMetricSpec};
use fvol::simulation::gen_curves;

fn main() -> fvol::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let curves = gen_curves(150, 100, &mut rng)?;
    let data = FdaDataset::new(
        curves
            .iter()
            .map(|c| FdaObservation::missing(c.clone()))
            .collect(),
    )?;

    let basis = pca_fit(&data, 4)?;
    println!("leading eigenvalues of the covariance operator:");
    let total: f64 = basis.eigenvalues().iter().sum();
    let mut cumulative = 0.0;
    for (i, ev) in basis.eigenvalues().iter().enumerate() {
        cumulative += ev / total;
        println!("  lambda_{} = {:.4}  (cumulative share {:.1}%)", i + 1, ev, 100.0 * cumulative);
    }

    let a = &curves[0];
    let b = &curves[1];
    println!("\nscores of curve 0: {:?}", basis.scores(a)?);
    println!("scores of curve 1: {:?}", basis.scores(b)?);
    println!("PCA distance d(0,1) = {:.4}", semimetric_pca(a, b, &basis)?);

    // the same distance through the declarative spec
    let sm = SemiMetric::resolve(&SemiMetricSpec::Pca { k: 4 }, &data)?;
    println!("via resolved spec     = {:.4}", sm.distance(a, b)?);
    Ok(())
}
