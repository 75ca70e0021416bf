//! Variational posterior over the free entries of `L` and the noise scale,
//! reparameterized sampling, and the linear decoder.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{BcdError, Result};
use crate::graph_scm::{
    assemble_weighted_adjacency, row_major, unpack_free_entries, EdgeMatrix, FreeMask, Permutation,
    WeightedAdjacency,
};
use crate::sampler::{propagate, InterventionLabels};

pub const INIT_LOC_STD: f64 = 0.1;
pub const INIT_SCALE: f64 = 0.1;
pub const INIT_SIGMA: f64 = 0.1;

/// Factorized Gaussian over the masked entries of `L`, a point estimate of
/// the noise log-std, and a bias-free linear decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorParams {
    pub mask: FreeMask,
    pub fixed_l: EdgeMatrix,
    pub mu_l: Vec<f64>,
    pub log_scale_l: Vec<f64>,
    pub log_sigma: f64,
    /// `d × D`.
    pub decoder: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct PosteriorDocument {
    d: usize,
    #[serde(rename = "D")]
    big_d: usize,
    mask: Vec<(usize, usize)>,
    fixed_l: Vec<f64>,
    mu_l: Vec<f64>,
    log_scale_l: Vec<f64>,
    log_sigma: f64,
    decoder: Vec<f64>,
}

impl PosteriorParams {
    pub fn new(
        mask: FreeMask,
        fixed_l: EdgeMatrix,
        mu_l: Vec<f64>,
        log_scale_l: Vec<f64>,
        log_sigma: f64,
        decoder: DMatrix<f64>,
    ) -> Result<Self> {
        let d = fixed_l.d();
        if mask.d() != d || decoder.nrows() != d {
            return Err(BcdError::dim(format!(
                "mask d={}, fixed L d={d}, decoder rows={}",
                mask.d(),
                decoder.nrows()
            )));
        }
        if mu_l.len() != mask.len() || log_scale_l.len() != mask.len() {
            return Err(BcdError::dim(format!(
                "mask has {} entries but mu_l has {} and log_scale_l has {}",
                mask.len(),
                mu_l.len(),
                log_scale_l.len()
            )));
        }
        Ok(PosteriorParams {
            mask,
            fixed_l,
            mu_l,
            log_scale_l,
            log_sigma,
            decoder,
        })
    }

    pub fn d(&self) -> usize {
        self.fixed_l.d()
    }

    pub fn big_d(&self) -> usize {
        self.decoder.ncols()
    }

    pub fn sigma(&self) -> f64 {
        self.log_sigma.exp()
    }

    /// Posterior mean of `L`.
    pub fn mean_l(&self) -> EdgeMatrix {
        unpack_free_entries(&self.mu_l, &self.mask, &self.fixed_l).expect("shapes checked at construction")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PosteriorDocument = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    fn document(&self) -> PosteriorDocument {
        PosteriorDocument {
            d: self.d(),
            big_d: self.big_d(),
            mask: self.mask.positions().to_vec(),
            fixed_l: self.fixed_l.to_row_major(),
            mu_l: self.mu_l.clone(),
            log_scale_l: self.log_scale_l.clone(),
            log_sigma: self.log_sigma,
            decoder: row_major(&self.decoder),
        }
    }

    fn from_document(doc: PosteriorDocument) -> Result<Self> {
        if doc.decoder.len() != doc.d * doc.big_d {
            return Err(BcdError::dim("decoder length disagrees with d and D"));
        }
        Self::new(
            FreeMask::new(doc.d, doc.mask)?,
            EdgeMatrix::from_row_major(doc.d, &doc.fixed_l)?,
            doc.mu_l,
            doc.log_scale_l,
            doc.log_sigma,
            DMatrix::from_row_slice(doc.d, doc.big_d, &doc.decoder),
        )
    }
}

impl Serialize for PosteriorParams {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.document().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PosteriorParams {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = PosteriorDocument::deserialize(deserializer)?;
        PosteriorParams::from_document(doc).map_err(serde::de::Error::custom)
    }
}

/// `mu_l ~ N(0, 0.1²)`, scales and sigma at 0.1, decoder entries `~ N(0, 1/d)`.
pub fn init_posterior<R: Rng + ?Sized>(
    mask: FreeMask,
    fixed_l: EdgeMatrix,
    d: usize,
    big_d: usize,
    rng: &mut R,
) -> Result<PosteriorParams> {
    if fixed_l.d() != d || mask.d() != d {
        return Err(BcdError::dim(format!(
            "mask d={} and fixed L d={} must equal d={d}",
            mask.d(),
            fixed_l.d()
        )));
    }
    let loc = Normal::new(0.0, INIT_LOC_STD).expect("valid std");
    let mu_l = (0..mask.len()).map(|_| loc.sample(rng)).collect();
    let log_scale_l = vec![INIT_SCALE.ln(); mask.len()];
    let dec = Normal::new(0.0, (1.0 / d as f64).sqrt()).expect("valid std");
    let decoder = DMatrix::from_fn(d, big_d, |_, _| dec.sample(rng));
    PosteriorParams::new(mask, fixed_l, mu_l, log_scale_l, INIT_SIGMA.ln(), decoder)
}

/// One draw from the posterior together with the standard-normal noise that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub l_hat: EdgeMatrix,
    pub sigma_hat: f64,
    pub eps_draw: Vec<f64>,
}

impl PosteriorSample {
    pub fn w_hat(&self, perm: &Permutation) -> Result<WeightedAdjacency> {
        assemble_weighted_adjacency(perm, &self.l_hat)
    }
}

/// `θ = mu_l + exp(log_scale_l) ⊙ η`.
pub fn sample_posterior_with(params: &PosteriorParams, eta: &[f64]) -> Result<PosteriorSample> {
    if eta.len() != params.mu_l.len() {
        return Err(BcdError::dim(format!(
            "eta has {} entries, posterior has {}",
            eta.len(),
            params.mu_l.len()
        )));
    }
    let theta: Vec<f64> = params
        .mu_l
        .iter()
        .zip(&params.log_scale_l)
        .zip(eta)
        .map(|((m, s), e)| m + s.exp() * e)
        .collect();
    Ok(PosteriorSample {
        l_hat: unpack_free_entries(&theta, &params.mask, &params.fixed_l)?,
        sigma_hat: params.sigma(),
        eps_draw: eta.to_vec(),
    })
}

pub fn sample_posterior<R: Rng + ?Sized>(params: &PosteriorParams, rng: &mut R) -> PosteriorSample {
    let eta: Vec<f64> = (0..params.mu_l.len()).map(|_| StandardNormal.sample(rng)).collect();
    sample_posterior_with(params, &eta).expect("eta sized from params")
}

/// `X̂ = z · decoder`.
pub fn decode(z: &DMatrix<f64>, params: &PosteriorParams) -> Result<DMatrix<f64>> {
    if z.ncols() != params.decoder.nrows() {
        return Err(BcdError::dim(format!(
            "latents have {} columns, decoder has {} rows",
            z.ncols(),
            params.decoder.nrows()
        )));
    }
    Ok(z * &params.decoder)
}

/// All stochastic inputs of one forward pass: posterior noise `eta` and
/// per-row ancestral noise `eps` (`n × d`, standard normal).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraws {
    pub eta: Vec<f64>,
    pub eps: DMatrix<f64>,
}

impl NoiseDraws {
    /// Draws `eta` first, then `eps` row by row.
    pub fn draw<R: Rng + ?Sized>(n_free: usize, n: usize, d: usize, rng: &mut R) -> Self {
        let eta = (0..n_free).map(|_| StandardNormal.sample(rng)).collect();
        let mut eps = DMatrix::zeros(n, d);
        for r in 0..n {
            for c in 0..d {
                eps[(r, c)] = StandardNormal.sample(rng);
            }
        }
        NoiseDraws { eta, eps }
    }
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub z_hat: DMatrix<f64>,
    pub x_hat: DMatrix<f64>,
    pub sample: PosteriorSample,
    pub w_hat: WeightedAdjacency,
}

/// Topological order implied by a fixed permutation: nodes by increasing `order` value.
pub(crate) fn perm_topological_order(perm: &Permutation) -> Vec<usize> {
    perm.inverse()
}

/// Deterministic forward pass with frozen noise. One posterior sample is
/// shared by every row; each row honours its intervention label.
pub fn forward_with(
    params: &PosteriorParams,
    perm: &Permutation,
    labels: &InterventionLabels,
    noise: &NoiseDraws,
) -> Result<ForwardPass> {
    let n = labels.n();
    let d = params.d();
    if n == 0 {
        return Err(BcdError::arg("forward pass needs at least one row"));
    }
    if labels.d() != d || noise.eps.nrows() != n || noise.eps.ncols() != d {
        return Err(BcdError::dim("labels, noise and posterior disagree on shape"));
    }
    let sample = sample_posterior_with(params, &noise.eta)?;
    let w_hat = sample.w_hat(perm)?;
    let order = perm_topological_order(perm);
    let mut z_hat = DMatrix::zeros(n, d);
    let mut eps_row = vec![0.0; d];
    for r in 0..n {
        for (c, e) in eps_row.iter_mut().enumerate() {
            *e = noise.eps[(r, c)];
        }
        let z = propagate(w_hat.matrix(), &order, sample.sigma_hat, &eps_row, &labels.clamp(r));
        z_hat.row_mut(r).copy_from_slice(&z);
    }
    let x_hat = decode(&z_hat, params)?;
    Ok(ForwardPass {
        z_hat,
        x_hat,
        sample,
        w_hat,
    })
}

pub fn forward<R: Rng + ?Sized>(
    params: &PosteriorParams,
    perm: &Permutation,
    labels: &InterventionLabels,
    rng: &mut R,
) -> Result<(ForwardPass, NoiseDraws)> {
    let noise = NoiseDraws::draw(params.mu_l.len(), labels.n(), params.d(), rng);
    let pass = forward_with(params, perm, labels, &noise)?;
    Ok((pass, noise))
}
