//! Posterior evaluation metrics: expected SHD, edge AUROC, MSE of the edge
//! matrix, and `KL(true ‖ learned)` between observational joints.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BcdError, Result};
use crate::graph_scm::{EdgeMatrix, GroundTruthScm, Permutation, WeightedAdjacency};
use crate::objective::{gaussian_kl, mse_loss};
use crate::posterior::{forward, sample_posterior, PosteriorParams, PosteriorSample};
use crate::sampler::{observational_joint, Dataset};

/// `|w| > EDGE_THRESHOLD` counts as an edge.
pub const EDGE_THRESHOLD: f64 = 0.3;
/// Posterior samples per metric evaluation.
pub const METRIC_SAMPLES: usize = 64;

/// Directed graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGraph {
    d: usize,
    adj: Vec<bool>,
}

impl BinaryGraph {
    pub fn empty(d: usize) -> Self {
        BinaryGraph {
            d,
            adj: vec![false; d * d],
        }
    }

    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(d);
        for &(i, j) in edges {
            if i >= d || j >= d || i == j {
                return Err(BcdError::arg(format!("invalid edge {i}->{j} for d={d}")));
            }
            g.adj[i * d + j] = true;
        }
        Ok(g)
    }

    /// Support of `|W| > tau`.
    pub fn from_weighted(w: &WeightedAdjacency, tau: f64) -> Self {
        let d = w.d();
        let m = w.matrix();
        let mut g = Self::empty(d);
        for i in 0..d {
            for j in 0..d {
                g.adj[i * d + j] = i != j && m[(i, j)].abs() > tau;
            }
        }
        g
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.d + j]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|e| **e).count()
    }
}

/// Structural Hamming distance: one per unordered pair whose edge state
/// differs, so a reversal costs 1.
pub fn shd(g1: &BinaryGraph, g2: &BinaryGraph) -> Result<usize> {
    if g1.d != g2.d {
        return Err(BcdError::dim(format!("shd between d={} and d={}", g1.d, g2.d)));
    }
    let mut dist = 0;
    for i in 0..g1.d {
        for j in (i + 1)..g1.d {
            let a = (g1.has_edge(i, j), g1.has_edge(j, i));
            let b = (g2.has_edge(i, j), g2.has_edge(j, i));
            if a != b {
                dist += 1;
            }
        }
    }
    Ok(dist)
}

/// Rank-statistic AUROC with ties counted half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(BcdError::dim("scores and labels differ in length"));
    }
    let positives: Vec<f64> = scores.iter().zip(labels).filter(|(_, l)| **l).map(|(s, _)| *s).collect();
    let negatives: Vec<f64> = scores.iter().zip(labels).filter(|(_, l)| !**l).map(|(s, _)| *s).collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(BcdError::arg("AUROC needs at least one positive and one negative label"));
    }
    let mut wins = 0.0;
    for p in &positives {
        for n in &negatives {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (positives.len() * negatives.len()) as f64)
}

fn draw_samples<R: Rng + ?Sized>(params: &PosteriorParams, n_samples: usize, rng: &mut R) -> Result<Vec<PosteriorSample>> {
    if n_samples == 0 {
        return Err(BcdError::arg("need at least one posterior sample"));
    }
    Ok((0..n_samples).map(|_| sample_posterior(params, rng)).collect())
}

pub fn expected_shd_of(samples: &[PosteriorSample], perm: &Permutation, g_gt: &BinaryGraph, tau: f64) -> Result<f64> {
    let mut total = 0usize;
    for s in samples {
        total += shd(&BinaryGraph::from_weighted(&s.w_hat(perm)?, tau), g_gt)?;
    }
    Ok(total as f64 / samples.len() as f64)
}

pub fn expected_shd<R: Rng + ?Sized>(
    params: &PosteriorParams,
    perm: &Permutation,
    g_gt: &BinaryGraph,
    n_samples: usize,
    tau: f64,
    rng: &mut R,
) -> Result<f64> {
    expected_shd_of(&draw_samples(params, n_samples, rng)?, perm, g_gt, tau)
}

/// Scores every ordered off-diagonal pair by how often it is an edge across samples.
pub fn edge_auroc_of(samples: &[PosteriorSample], perm: &Permutation, g_gt: &BinaryGraph, tau: f64) -> Result<f64> {
    let d = g_gt.d();
    let mut counts = vec![0usize; d * d];
    for s in samples {
        let g = BinaryGraph::from_weighted(&s.w_hat(perm)?, tau);
        if g.d() != d {
            return Err(BcdError::dim("posterior and ground truth disagree on d"));
        }
        for (c, e) in counts.iter_mut().zip(&g.adj) {
            *c += usize::from(*e);
        }
    }
    let mut scores = Vec::with_capacity(d * d);
    let mut labels = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                scores.push(counts[i * d + j] as f64 / samples.len() as f64);
                labels.push(g_gt.has_edge(i, j));
            }
        }
    }
    auroc(&scores, &labels)
}

pub fn edge_auroc<R: Rng + ?Sized>(
    params: &PosteriorParams,
    perm: &Permutation,
    g_gt: &BinaryGraph,
    n_samples: usize,
    tau: f64,
    rng: &mut R,
) -> Result<f64> {
    edge_auroc_of(&draw_samples(params, n_samples, rng)?, perm, g_gt, tau)
}

/// Mean over samples of the MSE over all below-diagonal entries.
pub fn mse_edge_matrix_of(samples: &[PosteriorSample], l_gt: &EdgeMatrix) -> Result<f64> {
    let truth = l_gt.below_diagonal();
    if truth.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for s in samples {
        if s.l_hat.d() != l_gt.d() {
            return Err(BcdError::dim("posterior and ground truth disagree on d"));
        }
        let est = s.l_hat.below_diagonal();
        total += est.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / truth.len() as f64;
    }
    Ok(total / samples.len() as f64)
}

pub fn mse_edge_matrix<R: Rng + ?Sized>(
    params: &PosteriorParams,
    l_gt: &EdgeMatrix,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    mse_edge_matrix_of(&draw_samples(params, n_samples, rng)?, l_gt)
}

/// Mean over samples of `KL(p_true ‖ q_sample)`; ground truth first.
pub fn kl_true_learned_of(samples: &[PosteriorSample], perm: &Permutation, scm: &GroundTruthScm) -> Result<f64> {
    let truth = observational_joint(&scm.w_gt(), scm.sigma_gt)?;
    let mut total = 0.0;
    for s in samples {
        let learned = observational_joint(&s.w_hat(perm)?, s.sigma_hat)?;
        total += gaussian_kl(&truth, &learned)?;
    }
    Ok(total / samples.len() as f64)
}

pub fn kl_true_learned<R: Rng + ?Sized>(
    params: &PosteriorParams,
    perm: &Permutation,
    scm: &GroundTruthScm,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    kl_true_learned_of(&draw_samples(params, n_samples, rng)?, perm, scm)
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: usize,
    pub eshd: f64,
    pub auroc: f64,
    #[serde(rename = "mse_L")]
    pub mse_l: f64,
    pub kl_true_learned: f64,
    #[serde(rename = "mse_X")]
    pub mse_x: f64,
}

pub const METRICS_HEADER: [&str; 6] = ["step", "eshd", "auroc", "mse_L", "kl_true_learned", "mse_X"];

impl MetricsRecord {
    pub fn is_finite(&self) -> bool {
        [self.eshd, self.auroc, self.mse_l, self.kl_true_learned, self.mse_x]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Value of a metric by its column name.
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "step" => Some(self.step as f64),
            "eshd" => Some(self.eshd),
            "auroc" => Some(self.auroc),
            "mse_L" => Some(self.mse_l),
            "kl_true_learned" => Some(self.kl_true_learned),
            "mse_X" => Some(self.mse_x),
            _ => None,
        }
    }
}

/// All metrics on one shared set of `n_samples` posterior draws, plus the
/// reconstruction MSE of one forward pass over the dataset.
pub fn evaluate<R: Rng + ?Sized>(
    step: usize,
    params: &PosteriorParams,
    scm: &GroundTruthScm,
    data: &Dataset,
    n_samples: usize,
    tau: f64,
    rng: &mut R,
) -> Result<MetricsRecord> {
    let samples = draw_samples(params, n_samples, rng)?;
    let g_gt = BinaryGraph::from_weighted(&scm.w_gt(), tau);
    let (pass, _) = forward(params, &scm.perm, &data.labels, rng)?;
    Ok(MetricsRecord {
        step,
        eshd: expected_shd_of(&samples, &scm.perm, &g_gt, tau)?,
        auroc: edge_auroc_of(&samples, &scm.perm, &g_gt, tau)?,
        mse_l: mse_edge_matrix_of(&samples, &scm.l_gt)?,
        kl_true_learned: kl_true_learned_of(&samples, &scm.perm, scm)?,
        mse_x: mse_loss(&data.x, &pass.x_hat)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_scm::{pack_free_entries, FreeMask};
    use crate::posterior::init_posterior;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_graph(d: usize, rng: &mut ChaCha8Rng) -> BinaryGraph {
        let mut g = BinaryGraph::empty(d);
        for i in 0..d {
            for j in 0..d {
                g.adj[i * d + j] = i != j && rng.random::<f64>() < 0.3;
            }
        }
        g
    }

    /// Enumerates the four possible states of every unordered pair.
    fn shd_oracle(a: &BinaryGraph, b: &BinaryGraph) -> usize {
        let state = |g: &BinaryGraph, i: usize, j: usize| -> u8 {
            match (g.has_edge(i, j), g.has_edge(j, i)) {
                (false, false) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (true, true) => 3,
            }
        };
        let mut n = 0;
        for i in 0..a.d() {
            for j in 0..a.d() {
                if i < j && state(a, i, j) != state(b, i, j) {
                    n += 1;
                }
            }
        }
        n
    }

    fn scm(seed: u64) -> GroundTruthScm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GroundTruthScm::generate(6, 10, 2.0, 0.1, &mut rng).unwrap()
    }

    fn collapsed_on(scm: &GroundTruthScm, l: &EdgeMatrix, sigma: f64) -> PosteriorParams {
        let mask = FreeMask::full(scm.d());
        let mu = pack_free_entries(l, &mask).unwrap();
        let n = mu.len();
        PosteriorParams::new(mask, EdgeMatrix::zeros(scm.d()), mu, vec![-40.0; n], sigma.ln(), scm.proj.clone()).unwrap()
    }

    #[test]
    fn shd_conventions() {
        let a = BinaryGraph::from_edges(3, &[(0, 1)]).unwrap();
        let b = BinaryGraph::from_edges(3, &[(1, 0)]).unwrap();
        assert_eq!(shd(&a, &a).unwrap(), 0);
        assert_eq!(shd(&a, &b).unwrap(), 1);
        assert_eq!(shd(&a, &BinaryGraph::empty(3)).unwrap(), 1);
        assert!(shd(&a, &BinaryGraph::empty(4)).is_err());
        assert!(BinaryGraph::from_edges(3, &[(1, 1)]).is_err());
    }

    #[test]
    fn shd_matches_enumeration_and_is_a_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let a = random_graph(4, &mut rng);
            let b = random_graph(4, &mut rng);
            let c = random_graph(4, &mut rng);
            let ab = shd(&a, &b).unwrap();
            assert_eq!(ab, shd_oracle(&a, &b));
            assert_eq!(ab, shd(&b, &a).unwrap());
            assert!(shd(&a, &c).unwrap() <= ab + shd(&b, &c).unwrap());
        }
    }

    #[test]
    fn auroc_edge_cases() {
        assert_eq!(auroc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.1, 0.9], &[true, false]).unwrap(), 0.0);
        assert_eq!(auroc(&[0.0, 0.0, 0.0], &[true, false, false]).unwrap(), 0.5);
        assert!(auroc(&[0.1, 0.2], &[true, true]).is_err());
        assert!(auroc(&[0.1], &[true, false]).is_err());
    }

    #[test]
    fn random_scores_average_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 1000;
        let mut total = 0.0;
        for _ in 0..trials {
            let labels: Vec<bool> = (0..30).map(|k| k % 3 == 0).collect();
            let scores: Vec<f64> = (0..30).map(|_| rng.random()).collect();
            total += auroc(&scores, &labels).unwrap();
        }
        assert!((total / trials as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn collapsed_on_truth_is_perfect() {
        let scm = scm(3);
        let params = collapsed_on(&scm, &scm.l_gt, scm.sigma_gt);
        let g = BinaryGraph::from_weighted(&scm.w_gt(), EDGE_THRESHOLD);
        assert_eq!(g.edge_count(), scm.l_gt.edge_count());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(expected_shd(&params, &scm.perm, &g, 64, EDGE_THRESHOLD, &mut rng).unwrap(), 0.0);
        assert_eq!(edge_auroc(&params, &scm.perm, &g, 64, EDGE_THRESHOLD, &mut rng).unwrap(), 1.0);
        assert!(mse_edge_matrix(&params, &scm.l_gt, 64, &mut rng).unwrap() < 1e-20);
        assert!(kl_true_learned(&params, &scm.perm, &scm, 64, &mut rng).unwrap().abs() < 1e-9);
    }

    #[test]
    fn collapsed_on_empty_graph() {
        let scm = scm(5);
        let params = collapsed_on(&scm, &EdgeMatrix::zeros(6), scm.sigma_gt);
        let g = BinaryGraph::from_weighted(&scm.w_gt(), EDGE_THRESHOLD);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let eshd = expected_shd(&params, &scm.perm, &g, 64, EDGE_THRESHOLD, &mut rng).unwrap();
        assert_eq!(eshd, g.edge_count() as f64);
        assert_eq!(edge_auroc(&params, &scm.perm, &g, 64, EDGE_THRESHOLD, &mut rng).unwrap(), 0.5);
    }

    #[test]
    fn unit_offset_has_unit_mse() {
        let scm = scm(7);
        let shifted = add_below(&scm.l_gt, 1.0);
        let params = collapsed_on(&scm, &shifted, scm.sigma_gt);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mse = mse_edge_matrix(&params, &scm.l_gt, 64, &mut rng).unwrap();
        assert!((mse - 1.0).abs() < 1e-12);
    }

    fn add_below(l: &EdgeMatrix, delta: f64) -> EdgeMatrix {
        let d = l.d();
        let mut m = l.matrix().clone();
        for i in 0..d {
            for j in 0..i {
                m[(i, j)] += delta;
            }
        }
        EdgeMatrix::new(m).unwrap()
    }

    #[test]
    fn dispersed_mse_decomposes_into_bias_and_variance() {
        let scm = scm(9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut params = init_posterior(FreeMask::full(6), EdgeMatrix::zeros(6), 6, 10, &mut rng).unwrap();
        params.log_scale_l = (0..15).map(|k| (0.05 + 0.02 * k as f64).ln()).collect();
        let mse = mse_edge_matrix(&params, &scm.l_gt, 10_000, &mut rng).unwrap();
        let truth = scm.l_gt.below_diagonal();
        let bias: f64 = params.mu_l.iter().zip(&truth).map(|(m, t)| (m - t).powi(2)).sum::<f64>() / 15.0;
        let var: f64 = params.log_scale_l.iter().map(|s| (2.0 * s).exp()).sum::<f64>() / 15.0;
        assert!((mse - (bias + var)).abs() < 0.01 * (bias + var), "{mse} vs {}", bias + var);
    }

    #[test]
    fn dispersed_metrics_are_reproducible() {
        let scm = scm(11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut params = init_posterior(FreeMask::full(6), EdgeMatrix::zeros(6), 6, 10, &mut rng).unwrap();
        params.log_scale_l = vec![0.5f64.ln(); 15];
        let g = BinaryGraph::from_weighted(&scm.w_gt(), EDGE_THRESHOLD);

        let mut a = ChaCha8Rng::seed_from_u64(99);
        let eshd = expected_shd(&params, &scm.perm, &g, 64, EDGE_THRESHOLD, &mut a).unwrap();
        let mut b = ChaCha8Rng::seed_from_u64(99);
        let mut total = 0.0;
        for _ in 0..64 {
            let s = sample_posterior(&params, &mut b);
            let w = s.w_hat(&scm.perm).unwrap();
            total += shd_oracle(&BinaryGraph::from_weighted(&w, EDGE_THRESHOLD), &g) as f64;
        }
        assert_eq!(eshd, total / 64.0);
        assert!(eshd > 0.0);
    }

    #[test]
    fn noise_rescaling_kl_closed_form() {
        let scm = scm(13);
        let params = collapsed_on(&scm, &scm.l_gt, 2.0 * scm.sigma_gt);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let kl = kl_true_learned(&params, &scm.perm, &scm, 8, &mut rng).unwrap();
        let expected = 0.5 * 6.0 * (0.25 - 1.0 + 4f64.ln());
        assert!((kl - expected).abs() < 1e-9);
    }

    #[test]
    fn kl_true_learned_is_nonnegative() {
        let scm = scm(15);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..1000 {
            let mut params = init_posterior(FreeMask::full(6), EdgeMatrix::zeros(6), 6, 10, &mut rng).unwrap();
            params.mu_l.iter_mut().for_each(|m| *m = rng.random_range(-2.0..2.0));
            params.log_sigma = rng.random_range(-4.0..0.0);
            assert!(kl_true_learned(&params, &scm.perm, &scm, 1, &mut rng).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn evaluate_fills_every_field() {
        let scm = scm(17);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let data = crate::sampler::generate_dataset(&scm, &crate::sampler::DatasetSpec::observational(50), &mut rng).unwrap();
        let params = collapsed_on(&scm, &scm.l_gt, scm.sigma_gt);
        let rec = evaluate(7, &params, &scm, &data, METRIC_SAMPLES, EDGE_THRESHOLD, &mut rng).unwrap();
        assert_eq!(rec.step, 7);
        assert!(rec.is_finite());
        assert_eq!(rec.eshd, 0.0);
        assert_eq!(rec.auroc, 1.0);
        assert_eq!(rec.get("mse_L"), Some(rec.mse_l));
        assert_eq!(rec.get("nope"), None);
    }
}
