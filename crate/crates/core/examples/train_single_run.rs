//! Trains one seed of a scenario and prints its metric trajectory.
//!
//! ```text
//! cargo run --release --example train_single_run -- finding1 1000
//! ```

use latent_bcd::experiment::{run_training, ExperimentConfig, Scenario};

fn main() -> latent_bcd::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: Scenario = args.next().as_deref().unwrap_or("finding1").parse()?;
    let steps = args.next().map_or(1000, |s| s.parse().expect("steps must be an integer"));
    let config = ExperimentConfig {
        steps,
        eval_every: (steps / 10).max(1),
        ..ExperimentConfig::preset(scenario)
    };
    let run = run_training(&config, 0)?;
    println!("{:>6} {:>8} {:>7} {:>10} {:>12} {:>10}", "step", "eshd", "auroc", "mse_L", "kl", "mse_X");
    for r in &run.trajectory {
        println!(
            "{:>6} {:>8.3} {:>7.3} {:>10.5} {:>12.5} {:>10.5}",
            r.step, r.eshd, r.auroc, r.mse_l, r.kl_true_learned, r.mse_x
        );
    }
    println!("{:?} in {:.1}s", run.outcome, run.seconds);
    Ok(())
}
