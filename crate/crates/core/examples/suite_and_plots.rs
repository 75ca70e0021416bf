//! Runs a small multi-seed suite to disk, then renders its SVG panels.
//!
//! ```text
//! cargo run --release --example suite_and_plots -- /tmp/bcd-runs
//! ```

use std::path::PathBuf;

use latent_bcd::experiment::{run_suite, ExperimentConfig, Scenario};
use latent_bcd::plot::plot_scenario;

fn main() -> latent_bcd::Result<()> {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("bcd-runs"));
    let config = ExperimentConfig {
        steps: 500,
        seeds: (0..5).collect(),
        ..ExperimentConfig::preset(Scenario::Finding1)
    };
    let dir = root.join(config.scenario.name());
    let suite = run_suite(&config, Some(&dir))?;
    for s in &suite.seeds {
        println!("seed {} {}", s.seed, if s.resumed { "reloaded" } else { "trained" });
    }
    for series in plot_scenario(&dir, &["eshd", "auroc", "mse_L", "kl"], &dir.join("plots"))? {
        let last = series.len() - 1;
        println!("{:<16} final median {:.4} iqr [{:.4}, {:.4}]", series.name, series.y_median[last], series.y_q1[last], series.y_q3[last]);
    }
    println!("plots in {}", dir.join("plots").display());
    Ok(())
}
