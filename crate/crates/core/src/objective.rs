//! Training losses: reconstruction MSE and the supervised KL between the
//! posterior and ground-truth observational joints.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{BcdError, Result};
use crate::graph_scm::{GroundTruthScm, Permutation};
use crate::posterior::PosteriorSample;
use crate::sampler::{observational_joint, GaussianJoint};

pub const DEFAULT_KL_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub mse_x: f64,
    /// Zero when supervision is off.
    pub kl_joint: f64,
    pub total: f64,
}

/// Mean squared difference over all `n · D` entries.
pub fn mse_loss(x: &DMatrix<f64>, x_hat: &DMatrix<f64>) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(BcdError::dim(format!(
            "mse of {:?} against {:?}",
            x.shape(),
            x_hat.shape()
        )));
    }
    if x.is_empty() {
        return Err(BcdError::arg("mse of empty matrices"));
    }
    let sum: f64 = x.iter().zip(x_hat.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / x.len() as f64)
}

/// Closed-form `KL(q ‖ p)` between multivariate Gaussians.
pub fn gaussian_kl(q: &GaussianJoint, p: &GaussianJoint) -> Result<f64> {
    let d = q.d();
    if p.d() != d {
        return Err(BcdError::dim(format!("KL between d={d} and d={}", p.d())));
    }
    let chol_q = q.cholesky()?;
    let chol_p = p.cholesky()?;
    let trace = chol_p.solve(&q.cov).trace();
    let diff = &p.mu - &q.mu;
    let maha = diff.dot(&chol_p.solve(&diff));
    let log_det = |c: &nalgebra::Cholesky<f64, nalgebra::Dyn>| -> f64 {
        2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    };
    Ok(0.5 * (trace + maha - d as f64 + log_det(&chol_p) - log_det(&chol_q)))
}

/// `KL(q(z) ‖ p(z))` with `q` built from the posterior sample and `p` from
/// the ground truth; posterior first.
pub fn supervised_kl(sample: &PosteriorSample, perm: &Permutation, scm: &GroundTruthScm) -> Result<f64> {
    let q = observational_joint(&sample.w_hat(perm)?, sample.sigma_hat)?;
    let p = observational_joint(&scm.w_gt(), scm.sigma_gt)?;
    gaussian_kl(&q, &p)
}

/// `total = mse_x + kl_weight · kl_joint`; pass `None` for unsupervised runs.
pub fn total_loss(x: &DMatrix<f64>, x_hat: &DMatrix<f64>, kl_joint: Option<f64>, kl_weight: f64) -> Result<LossBreakdown> {
    let mse_x = mse_loss(x, x_hat)?;
    Ok(combine(mse_x, kl_joint, kl_weight))
}

pub(crate) fn combine(mse_x: f64, kl_joint: Option<f64>, kl_weight: f64) -> LossBreakdown {
    let kl_joint = kl_joint.unwrap_or(0.0);
    LossBreakdown {
        mse_x,
        kl_joint,
        total: mse_x + kl_weight * kl_joint,
    }
}
