//! Checks the exact gradient against central finite differences and takes a
//! few Adam steps on a fixed batch.

use latent_bcd::gradient::{grad_total_loss, optimizer_step, Adam, GradCheckProblem, ParamLayout, GRAD_TOLERANCE};

fn main() -> latent_bcd::Result<()> {
    let problem = GradCheckProblem::random(3, 4, 0)?;
    for supervised in [false, true] {
        for h in [1e-3, 1e-5] {
            let r = problem.check(supervised, h)?;
            println!(
                "supervised={supervised:<5} h={h:e}: max_rel_err {:.2e} at {} ({})",
                r.max_rel_err,
                r.worst,
                if r.max_rel_err < GRAD_TOLERANCE { "ok" } else { "above tolerance" }
            );
        }
    }

    let mut params = problem.params.clone();
    let inputs = problem.inputs(true);
    let mut adam = Adam::new(0.01, ParamLayout::of(&params).len())?;
    for step in 0..=200 {
        let (loss, grad) = grad_total_loss(&params, &inputs)?;
        if step % 50 == 0 {
            println!("step {step:>3}: mse_x {:.5} kl {:.5}", loss.mse_x, loss.kl_joint);
        }
        optimizer_step(&mut params, &grad, &mut adam)?;
    }
    Ok(())
}
