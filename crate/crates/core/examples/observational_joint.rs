//! Compares the closed-form observational joint of a random SCM with the
//! empirical covariance of ancestral samples, observational and under a
//! do-intervention.

use latent_bcd::graph_scm::GroundTruthScm;
use latent_bcd::sampler::{
    ancestral_sample, empirical_covariance, mutate_for_intervention, observational_joint, InterventionSpec, ValueMode,
};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> latent_bcd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let scm = GroundTruthScm::generate(4, 6, 1.0, 0.5, &mut rng)?;
    let w = scm.w_gt();
    let joint = observational_joint(&w, scm.sigma_gt)?;

    let n = 50_000;
    let obs = InterventionSpec::observational();
    let mut z = DMatrix::zeros(n, 4);
    for r in 0..n {
        z.row_mut(r).copy_from_slice(ancestral_sample(&w, scm.sigma_gt, &obs, &mut rng)?.as_slice());
    }
    let emp = empirical_covariance(&z);
    println!("closed form:{}", joint.cov);
    println!("empirical:{}", emp);
    println!("relative Frobenius error {:.4}", (&emp - &joint.cov).norm() / joint.cov.norm());

    let target = 0;
    let spec = InterventionSpec::new(vec![target], ValueMode::Fixed { value: 3.0 })?;
    let cut = mutate_for_intervention(&w, &spec.targets)?;
    let z = ancestral_sample(&w, scm.sigma_gt, &spec, &mut rng)?;
    println!("do(z{target} = 3): sample {:?}", z.as_slice());
    println!("incoming weights of z{target} after mutation: {:?}", cut.matrix().column(target).as_slice());
    Ok(())
}
