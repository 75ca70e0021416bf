//! Retrains from scratch with growing interventional budgets on top of the
//! same 300 observational rows.
//!
//! ```text
//! cargo run --release --example intervention_sweep
//! ```

use latent_bcd::experiment::{sweep_interventional, ExperimentConfig, Scenario};

fn main() -> latent_bcd::Result<()> {
    let config = ExperimentConfig {
        steps: 2000,
        ..ExperimentConfig::preset(Scenario::Finding4Uniform)
    };
    let budgets = [0, 300, 1100, 3300];
    for run in sweep_interventional(&config, 0, &budgets)? {
        let f = run.final_metrics().expect("trajectory is never empty");
        println!(
            "n_int {:>4}: eshd {:.3} auroc {:.3} mse_L {:.5} ({:.1}s)",
            run.config.n_int, f.eshd, f.auroc, f.mse_l, run.seconds
        );
    }
    Ok(())
}
