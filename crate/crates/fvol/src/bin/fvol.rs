//! Thin command-line front end over the library: simulation studies, data
//! ingestion, volatility estimation with CIs, realized volatility, and the
//! finance pipeline report.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fvol::config::AppConfig;
use fvol::error::Result;
use fvol::estimator::EstimatorMode;
use fvol::io::{
    read_dataset, report_header, write_comment_header, write_curves_csv, write_estimates_csv,
    write_grid, write_responses_csv,
};
use fvol::model::FittedModel;
use fvol::pipeline::{ingest_intraday, inject_mar_finance, realized_vol, run_pipeline};
use fvol::simulation::{run_study, write_report_csv, ErrorModel, SimConfig};

#[derive(Parser)]
#[command(name = "fvol", version, about = "Functional volatility estimation with missing responses")]
struct Cli {
    /// RNG seed (overrides the config file)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = automatic)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Two-sided CI miscoverage level
    #[arg(long, global = true)]
    level: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FinanceInputs {
    /// Hourly price CSV (`timestamp,price`)
    #[arg(long)]
    hourly: PathBuf,
    /// Daily close CSV (`date,close`)
    #[arg(long)]
    daily: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo study and write the tidy metric CSV
    Simulate {
        /// Error model 1..4
        #[arg(long, default_value_t = 1)]
        model: u8,
        #[arg(long, default_value_t = 300)]
        n: usize,
        /// Missingness strength
        #[arg(long, default_value_t = 0.2)]
        eta: f64,
        /// Replications
        #[arg(long = "B", default_value_t = 500)]
        replications: usize,
        /// Evaluation curves
        #[arg(long = "J", default_value_t = 100)]
        eval_points: usize,
        #[arg(long, default_value_t = 100)]
        grid_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Align intraday and daily CSVs into the dataset file format
    Ingest {
        #[command(flatten)]
        inputs: FinanceInputs,
        /// Missingness strength; omit to keep every response observed
        #[arg(long)]
        zeta: Option<f64>,
        /// Output directory for curves.csv, grid.txt, responses.csv
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Estimate volatility with CIs at every curve of a dataset
    Estimate {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        #[arg(long, default_value = "simplified")]
        mode: EstimatorMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-day realized volatility of an intraday price file
    Rv {
        #[command(flatten)]
        inputs: FinanceInputs,
        #[arg(long)]
        out: PathBuf,
    },
    /// End-to-end finance pipeline report (estimates vs realized volatility)
    Report {
        #[command(flatten)]
        inputs: FinanceInputs,
        /// Missingness strength; omit to keep every response observed
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long, default_value = "imputed")]
        mode: EstimatorMode,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<AppConfig> {
    let mut cfg = match &cli.config {
        Some(path) => AppConfig::from_toml_str(&std::fs::read_to_string(path)?)?,
        None => AppConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(level) = cli.level {
        cfg.level = level;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let app = load_config(&cli)?;
    if app.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(app.threads)
            .build_global()
            .map_err(|e| fvol::FvolError::InvalidParameter(e.to_string()))?;
    }

    match cli.command {
        Command::Simulate {
            model,
            n,
            eta,
            replications,
            eval_points,
            grid_size,
            out,
        } => {
            let cfg = SimConfig {
                n,
                grid_size,
                error_model: ErrorModel::from_index(model)?,
                eta,
                replications,
                eval_points,
                seed: app.seed,
                level: app.level,
            };
            let report = run_study(&cfg)?;
            write_report_csv(&report, File::create(&out)?)?;
            for est in &report.estimators {
                println!(
                    "{:<10} MISE {:.4}  coverage {:.3}  mean CI length {:.4}",
                    est.estimator.name(),
                    est.mse.mise,
                    est.ci.coverage,
                    est.ci.mean_length
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Ingest {
            inputs,
            zeta,
            out_dir,
        } => {
            let data = ingest_intraday(File::open(&inputs.hourly)?, File::open(&inputs.daily)?)?;
            let delta = match zeta {
                Some(z) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(app.seed);
                    inject_mar_finance(&data, z, &mut rng)?
                }
                None => vec![true; data.len()],
            };
            let dataset = data.to_dataset(&delta)?;
            let ids: Vec<String> = data.dates.iter().map(|d| d.to_string()).collect();
            std::fs::create_dir_all(&out_dir)?;
            let curves: Vec<_> = dataset.curves().cloned().collect();
            write_curves_csv(File::create(out_dir.join("curves.csv"))?, &ids, &curves)?;
            write_grid(File::create(out_dir.join("grid.txt"))?, dataset.grid())?;
            write_responses_csv(
                File::create(out_dir.join("responses.csv"))?,
                &ids,
                &dataset,
            )?;
            println!(
                "aligned {} days ({} dropped), observed {} of {}",
                data.len(),
                data.dropped_days,
                dataset.n_observed(),
                dataset.len()
            );
        }
        Command::Estimate {
            curves,
            grid,
            responses,
            mode,
            out,
        } => {
            let (ids, dataset) = read_dataset(
                File::open(&curves)?,
                File::open(&grid)?,
                File::open(&responses)?,
            )?;
            let cfg = app.estimator_config(&dataset, mode)?;
            let model = FittedModel::fit(&dataset, &cfg, mode)?;
            let estimates = dataset
                .curves()
                .map(|x| model.estimate_vol(x, app.level))
                .collect::<Result<Vec<_>>>()?;
            let header = report_header(
                &cfg,
                &[format!("mode: {}", mode.name()), format!("level: {}", app.level)],
            );
            write_estimates_csv(File::create(&out)?, &header, &ids, &estimates)?;
            println!("wrote {} estimates to {}", estimates.len(), out.display());
        }
        Command::Rv { inputs, out } => {
            let data = ingest_intraday(File::open(&inputs.hourly)?, File::open(&inputs.daily)?)?;
            let mut f = File::create(&out)?;
            writeln!(f, "date,rv")?;
            for (date, day) in data.dates.iter().zip(&data.intraday_raw) {
                writeln!(f, "{date},{}", realized_vol(day)?)?;
            }
            println!("wrote {} days to {}", data.len(), out.display());
        }
        Command::Report {
            inputs,
            zeta,
            mode,
            out,
        } => {
            let data = ingest_intraday(File::open(&inputs.hourly)?, File::open(&inputs.daily)?)?;
            let delta = match zeta {
                Some(z) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(app.seed);
                    inject_mar_finance(&data, z, &mut rng)?
                }
                None => vec![true; data.len()],
            };
            let report = run_pipeline(&data, &delta, mode, None, app.level)?;
            let mut f = File::create(&out)?;
            let mut header = report_header(
                &report.config,
                &[
                    format!("mode: {}", mode.name()),
                    format!("level: {}", app.level),
                    format!("days: {} (dropped {})", data.len(), data.dropped_days),
                ],
            );
            header.push(format!(
                "aggregates: mse={:.6} se_q1={:.6} se_median={:.6} se_q3={:.6} coverage={:.4} mean_ci_length={:.6}",
                report.mse,
                report.se.q1,
                report.se.median,
                report.se.q3,
                report.coverage,
                report.mean_ci_length
            ));
            write_comment_header(&mut f, &header)?;
            writeln!(f, "date,sqrt_estimate,sqrt_rv,se,ci_low,ci_high,covered")?;
            for d in &report.days {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{}",
                    d.date, d.sqrt_estimate, d.sqrt_rv, d.se, d.ci_low, d.ci_high, d.covered as u8
                )?;
            }
            println!(
                "{} days: mse {:.4}, coverage {:.3} -> {}",
                report.days.len(),
                report.mse,
                report.coverage,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
