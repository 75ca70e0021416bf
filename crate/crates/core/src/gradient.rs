//! Exact gradients of the training loss with respect to every learnable
//! coordinate, a central-difference checker, and an Adam optimizer.
//!
//! With all noise frozen the model is a smooth function of the parameters:
//!
//! ```text
//! θ = μ + exp(s) ⊙ η  →  L̂  →  Ŵ = (P L̂ Pᵀ)ᵀ
//! ẑ = (I − W̃ᵀ)⁻¹ b,   b_i = v_i (clamped) or σ̂ ε_i
//! X̂ = ẑ · decoder
//! ```
//!
//! so the reverse pass is a handful of triangular solves per row.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BcdError, Result};
use crate::graph_scm::{EdgeMatrix, FreeMask, GroundTruthScm, Permutation};
use crate::objective::{combine, gaussian_kl, mse_loss, LossBreakdown};
use crate::posterior::{forward_with, init_posterior, perm_topological_order, NoiseDraws, PosteriorParams};
use crate::sampler::{
    generate_dataset, inverse_i_minus, observational_joint, DatasetSpec, InterventionLabels, NodeMode, ValueMode,
};

/// Block sizes of the flat parameter vector:
/// `[mu_l | log_scale_l | log_sigma | decoder (row-major)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub n_free: usize,
    pub d: usize,
    pub big_d: usize,
}

impl ParamLayout {
    pub fn of(params: &PosteriorParams) -> Self {
        ParamLayout {
            n_free: params.mu_l.len(),
            d: params.d(),
            big_d: params.big_d(),
        }
    }

    pub fn len(&self) -> usize {
        2 * self.n_free + 1 + self.d * self.big_d
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn log_sigma_index(&self) -> usize {
        2 * self.n_free
    }

    pub fn decoder_offset(&self) -> usize {
        2 * self.n_free + 1
    }

    /// Human-readable name of a coordinate.
    pub fn name(&self, k: usize) -> String {
        let n = self.n_free;
        if k < n {
            format!("mu_l[{k}]")
        } else if k < 2 * n {
            format!("log_scale_l[{}]", k - n)
        } else if k == 2 * n {
            "log_sigma".to_owned()
        } else {
            let e = k - self.decoder_offset();
            format!("decoder[{},{}]", e / self.big_d, e % self.big_d)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub layout: ParamLayout,
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(layout: ParamLayout) -> Self {
        ParamVector {
            layout,
            values: vec![0.0; layout.len()],
        }
    }

    pub fn from_params(params: &PosteriorParams) -> Self {
        let layout = ParamLayout::of(params);
        let mut values = Vec::with_capacity(layout.len());
        values.extend_from_slice(&params.mu_l);
        values.extend_from_slice(&params.log_scale_l);
        values.push(params.log_sigma);
        for i in 0..layout.d {
            for j in 0..layout.big_d {
                values.push(params.decoder[(i, j)]);
            }
        }
        ParamVector { layout, values }
    }

    /// Writes the coordinates back into `params`; masked-out entries of `L`
    /// are not coordinates and are never touched.
    pub fn write_into(&self, params: &mut PosteriorParams) -> Result<()> {
        if ParamLayout::of(params) != self.layout {
            return Err(BcdError::dim("parameter layout does not match posterior"));
        }
        let n = self.layout.n_free;
        params.mu_l.copy_from_slice(&self.values[..n]);
        params.log_scale_l.copy_from_slice(&self.values[n..2 * n]);
        params.log_sigma = self.values[2 * n];
        let off = self.layout.decoder_offset();
        let big_d = self.layout.big_d;
        for i in 0..self.layout.d {
            for j in 0..big_d {
                params.decoder[(i, j)] = self.values[off + i * big_d + j];
            }
        }
        Ok(())
    }

    pub fn to_params(&self, template: &PosteriorParams) -> Result<PosteriorParams> {
        let mut p = template.clone();
        self.write_into(&mut p)?;
        Ok(p)
    }
}

/// Everything besides the parameters that the loss depends on. All
/// randomness is inside `noise`, so the loss is deterministic.
#[derive(Debug, Clone, Copy)]
pub struct LossInputs<'a> {
    pub perm: &'a Permutation,
    pub x: &'a DMatrix<f64>,
    pub labels: &'a InterventionLabels,
    pub noise: &'a NoiseDraws,
    /// Ground truth for the supervised KL term; `None` for unsupervised runs.
    pub supervision: Option<&'a GroundTruthScm>,
    pub kl_weight: f64,
}

/// Loss value with frozen draws.
pub fn loss_at(params: &PosteriorParams, inputs: &LossInputs<'_>) -> Result<LossBreakdown> {
    let pass = forward_with(params, inputs.perm, inputs.labels, inputs.noise)?;
    let mse = mse_loss(inputs.x, &pass.x_hat)?;
    let kl = match inputs.supervision {
        Some(scm) => {
            let q = observational_joint(&pass.w_hat, pass.sample.sigma_hat)?;
            let p = observational_joint(&scm.w_gt(), scm.sigma_gt)?;
            Some(gaussian_kl(&q, &p)?)
        }
        None => None,
    };
    Ok(combine(mse, kl, inputs.kl_weight))
}

/// Loss and its exact gradient with frozen draws.
pub fn grad_total_loss(params: &PosteriorParams, inputs: &LossInputs<'_>) -> Result<(LossBreakdown, ParamVector)> {
    let layout = ParamLayout::of(params);
    let (n, d, big_d) = (inputs.x.nrows(), layout.d, layout.big_d);
    if inputs.x.ncols() != big_d {
        return Err(BcdError::dim(format!(
            "batch has {} columns, decoder has {big_d}",
            inputs.x.ncols()
        )));
    }
    let pass = forward_with(params, inputs.perm, inputs.labels, inputs.noise)?;
    let sigma = pass.sample.sigma_hat;
    let w = pass.w_hat.matrix();
    let order = perm_topological_order(inputs.perm);

    let mse = mse_loss(inputs.x, &pass.x_hat)?;
    // dMSE/dX̂
    let g_x = (&pass.x_hat - inputs.x) * (2.0 / (n * big_d) as f64);
    let g_decoder = pass.z_hat.transpose() * &g_x;
    let g_z = &g_x * params.decoder.transpose();

    let mut g_w = DMatrix::zeros(d, d);
    let mut g_sigma = 0.0;
    let mut lambda = vec![0.0; d];
    for r in 0..n {
        let clamp = inputs.labels.clamp(r);
        // (I − W̃) λ = g_z, children before parents
        for &j in order.iter().rev() {
            let mut acc = g_z[(r, j)];
            for i in 0..d {
                if clamp[i].is_none() {
                    let wji = w[(j, i)];
                    if wji != 0.0 {
                        acc += wji * lambda[i];
                    }
                }
            }
            lambda[j] = acc;
        }
        for i in 0..d {
            if clamp[i].is_some() {
                continue;
            }
            g_sigma += lambda[i] * inputs.noise.eps[(r, i)];
            for j in 0..d {
                g_w[(j, i)] += lambda[i] * pass.z_hat[(r, j)];
            }
        }
    }

    let kl = match inputs.supervision {
        Some(scm) => {
            let q = observational_joint(&pass.w_hat, sigma)?;
            let p = observational_joint(&scm.w_gt(), scm.sigma_gt)?;
            let kl = gaussian_kl(&q, &p)?;
            // KL = ½[σ² tr(Σp⁻¹ BᵀB) − d + ln|Σp| − 2d ln σ],  B = (I − Ŵ)⁻¹
            let b = inverse_i_minus(w)?;
            let p_inv = p
                .cholesky()?
                .inverse();
            let bt_b = b.transpose() * &b;
            let trace = (&p_inv * &bt_b).trace();
            let weight = inputs.kl_weight;
            g_w += (&bt_b * &p_inv * b.transpose()) * (weight * sigma * sigma);
            g_sigma += weight * (sigma * trace - d as f64 / sigma);
            Some(kl)
        }
        None => None,
    };

    let mut grad = ParamVector::zeros(layout);
    let slot = inputs.perm.order();
    // W[a][b] = L[order[b]][order[a]]
    let mut g_l = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            g_l[(slot[b], slot[a])] += g_w[(a, b)];
        }
    }
    let nf = layout.n_free;
    for (k, &(i, j)) in params.mask.positions().iter().enumerate() {
        let g_theta = g_l[(i, j)];
        grad.values[k] = g_theta;
        grad.values[nf + k] = g_theta * params.log_scale_l[k].exp() * inputs.noise.eta[k];
    }
    grad.values[layout.log_sigma_index()] = g_sigma * sigma;
    let off = layout.decoder_offset();
    for i in 0..d {
        for j in 0..big_d {
            grad.values[off + i * big_d + j] = g_decoder[(i, j)];
        }
    }
    Ok((combine(mse, kl, inputs.kl_weight), grad))
}

/// Analytic vs. central-difference gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradReport {
    pub analytic: ParamVector,
    pub numeric: ParamVector,
    pub max_rel_err: f64,
    /// Coordinate attaining `max_rel_err`.
    pub worst: String,
    pub h: f64,
}

pub const GRAD_TOLERANCE: f64 = 1e-4;

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / (1e-8f64).max(a.abs() + n.abs())
}

pub fn check_gradients(params: &PosteriorParams, inputs: &LossInputs<'_>, h: f64) -> Result<GradReport> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(BcdError::arg(format!("step h = {h} outside [1e-7, 1e-3]")));
    }
    let (_, analytic) = grad_total_loss(params, inputs)?;
    let base = ParamVector::from_params(params);
    let mut numeric = ParamVector::zeros(base.layout);
    let mut probe = params.clone();
    for k in 0..base.values.len() {
        let mut shifted = base.clone();
        shifted.values[k] = base.values[k] + h;
        shifted.write_into(&mut probe)?;
        let plus = loss_at(&probe, inputs)?.total;
        shifted.values[k] = base.values[k] - h;
        shifted.write_into(&mut probe)?;
        let minus = loss_at(&probe, inputs)?.total;
        numeric.values[k] = (plus - minus) / (2.0 * h);
    }
    let (worst_k, max_rel_err) = analytic
        .values
        .iter()
        .zip(&numeric.values)
        .map(|(a, n)| relative_error(*a, *n))
        .enumerate()
        .fold((0, 0.0f64), |best, (k, e)| if e > best.1 { (k, e) } else { best });
    Ok(GradReport {
        worst: base.layout.name(worst_k),
        analytic,
        numeric,
        max_rel_err,
        h,
    })
}

/// A small random problem for gradient checking: a ground truth, a mixed
/// observational and interventional dataset, a perturbed posterior over the
/// full mask and frozen noise.
#[derive(Debug, Clone)]
pub struct GradCheckProblem {
    pub scm: GroundTruthScm,
    pub x: DMatrix<f64>,
    pub labels: InterventionLabels,
    pub noise: NoiseDraws,
    pub params: PosteriorParams,
}

impl GradCheckProblem {
    pub fn random(d: usize, big_d: usize, seed: u64) -> Result<Self> {
        if d < 2 || big_d < d {
            return Err(BcdError::arg(format!("gradient check needs 2 <= d <= D, got d={d} D={big_d}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scm = GroundTruthScm::generate(d, big_d, 1.0, 0.3, &mut rng)?;
        let spec = DatasetSpec {
            n_obs: 2 * d,
            n_int: 6,
            node_mode: NodeMode::Multi,
            value_mode: ValueMode::Uniform { lo: -2.0, hi: 2.0 },
            sets: 3,
        };
        let data = generate_dataset(&scm, &spec, &mut rng)?;
        let mut params = init_posterior(FreeMask::full(d), EdgeMatrix::zeros(d), d, big_d, &mut rng)?;
        params.mu_l.iter_mut().for_each(|m| *m = rng.random_range(-1.0..1.0));
        params.log_scale_l.iter_mut().for_each(|s| *s = rng.random_range(-3.0..-1.0));
        params.log_sigma = rng.random_range(-1.5..-0.5);
        let noise = NoiseDraws::draw(params.mu_l.len(), data.n(), d, &mut rng);
        Ok(GradCheckProblem {
            scm,
            x: data.x,
            labels: data.labels,
            noise,
            params,
        })
    }

    pub fn inputs(&self, supervised: bool) -> LossInputs<'_> {
        LossInputs {
            perm: &self.scm.perm,
            x: &self.x,
            labels: &self.labels,
            noise: &self.noise,
            supervision: supervised.then_some(&self.scm),
            kl_weight: 1.0,
        }
    }

    pub fn check(&self, supervised: bool, h: f64) -> Result<GradReport> {
        check_gradients(&self.params, &self.inputs(supervised), h)
    }
}

/// Adaptive-moment optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, n: usize) -> Result<Self> {
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(BcdError::arg(format!("learning rate must be positive, got {lr}")));
        }
        Ok(Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        })
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(BcdError::dim(format!(
                "optimizer sized for {} coordinates, got params {} and grad {}",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        self.t += 1;
        let bias1 = 1.0 - self.beta1.powi(self.t as i32);
        let bias2 = 1.0 - self.beta2.powi(self.t as i32);
        for k in 0..params.len() {
            let g = grad[k];
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[k] / bias1;
            let v_hat = self.v[k] / bias2;
            params[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// One Adam update of `params` from `grad`.
pub fn optimizer_step(params: &mut PosteriorParams, grad: &ParamVector, state: &mut Adam) -> Result<()> {
    let mut flat = ParamVector::from_params(params);
    if flat.layout != grad.layout {
        return Err(BcdError::dim("gradient layout does not match posterior"));
    }
    state.step(&mut flat.values, &grad.values)?;
    flat.write_into(params)
}
