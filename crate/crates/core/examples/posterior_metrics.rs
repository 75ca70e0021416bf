//! Evaluates the posterior metrics on three hand-built posteriors: one
//! collapsed on the truth, one on the empty graph, and one dispersed.

use latent_bcd::graph_scm::{pack_free_entries, EdgeMatrix, FreeMask, GroundTruthScm};
use latent_bcd::metrics::{
    edge_auroc, expected_shd, kl_true_learned, mse_edge_matrix, BinaryGraph, EDGE_THRESHOLD, METRIC_SAMPLES,
};
use latent_bcd::posterior::PosteriorParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> latent_bcd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scm = GroundTruthScm::generate(6, 10, 2.0, 0.1, &mut rng)?;
    let g_gt = BinaryGraph::from_weighted(&scm.w_gt(), EDGE_THRESHOLD);
    let mask = FreeMask::full(6);
    let truth = pack_free_entries(&scm.l_gt, &mask)?;
    let n = truth.len();

    let posteriors = [
        ("collapsed on truth", truth.clone(), -20.0),
        ("collapsed on empty", vec![0.0; n], -20.0),
        ("dispersed around truth", truth, 0.5f64.ln()),
    ];
    for (name, mu, log_scale) in posteriors {
        let p = PosteriorParams::new(mask.clone(), EdgeMatrix::zeros(6), mu, vec![log_scale; n], 0.1f64.ln(), scm.proj.clone())?;
        println!(
            "{name:<24} eshd {:>6.3}  auroc {:.3}  mse_L {:.4}  kl {:.4}",
            expected_shd(&p, &scm.perm, &g_gt, METRIC_SAMPLES, EDGE_THRESHOLD, &mut rng)?,
            edge_auroc(&p, &scm.perm, &g_gt, METRIC_SAMPLES, EDGE_THRESHOLD, &mut rng)?,
            mse_edge_matrix(&p, &scm.l_gt, METRIC_SAMPLES, &mut rng)?,
            kl_true_learned(&p, &scm.perm, &scm, METRIC_SAMPLES, &mut rng)?,
        );
    }
    Ok(())
}
