//! A small Monte-Carlo study comparing the complete, simplified and imputed
//! volatility estimators: MISE, efficiency gain, CI coverage.
//!
//! Run with: cargo run --release --example simulation_study

use fvol::simulation::{run_study, ErrorModel, SimConfig};

fn main() -> fvol::Result<()> {
    let cfg = SimConfig {
        n: 150,
        grid_size: 100,
        error_model: ErrorModel::Model2,
        eta: 0.2,
        replications: 20,
        eval_points: 25,
        seed: 42,
        level: 0.05,
    };
    println!(
        "model {} | n = {} | eta = {} | {} replications x {} evaluation curves\n",
        cfg.error_model.index(),
        cfg.n,
        cfg.eta,
        cfg.replications,
        cfg.eval_points
    );

    let report = run_study(&cfg)?;
    println!(
        "{:<11} {:>8} {:>8} {:>8} {:>8} {:>9} {:>8}",
        "estimator", "MISE", "Q1", "median", "Q3", "coverage", "length"
    );
    for est in &report.estimators {
        println!(
            "{:<11} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>9.3} {:>8.4}",
            est.estimator.name(),
            est.mse.mise,
            est.mse.q1,
            est.mse.median,
            est.mse.q3,
            est.ci.coverage,
            est.ci.mean_length,
        );
    }
    if let Some(eff) = report.estimators[2].efficiency {
        println!("\nimputed vs simplified efficiency: {eff:.2}%");
    }
    Ok(())
}
