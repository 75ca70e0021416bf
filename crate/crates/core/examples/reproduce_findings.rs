//! Runs a scenario suite at full scale and prints the final medians.
//!
//! ```text
//! cargo run --release --example reproduce_findings -- finding1 [steps] [seeds]
//! ```

use latent_bcd::experiment::{run_suite, ExperimentConfig, Scenario, SUMMARY_METRICS};

fn main() -> latent_bcd::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: Scenario = args.next().as_deref().unwrap_or("finding1").parse()?;
    let mut config = ExperimentConfig::preset(scenario);
    if let Some(steps) = args.next() {
        config.steps = steps.parse().expect("steps must be an integer");
    }
    if let Some(n) = args.next() {
        config.seeds = (0..n.parse().expect("seed count must be an integer")).collect();
    }
    let clock = std::time::Instant::now();
    let suite = run_suite(&config, None)?;
    println!("{scenario}: {} seeds x {} steps in {:.1?}", config.seeds.len(), config.steps, clock.elapsed());
    for m in SUMMARY_METRICS {
        if let Some(s) = suite.final_spread(m) {
            println!("  {m:>16}  median {:>10.4}  iqr [{:.4}, {:.4}]", s.median, s.q1, s.q3);
        }
    }
    for s in &suite.seeds {
        if let Ok(run) = &s.result {
            if let Some(f) = run.final_metrics() {
                println!("  seed {:>2}: eshd {:.3} auroc {:.3} mse_L {:.4} kl {:.4} {:?}", s.seed, f.eshd, f.auroc, f.mse_l, f.kl_true_learned, run.outcome);
            }
        }
    }
    Ok(())
}
