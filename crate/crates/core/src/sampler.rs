//! Ancestral sampling from a linear-Gaussian SCM, do-interventions, the
//! set-based intervention protocol used to build datasets, linear projection
//! to observed space, and the closed-form observational joint.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{BcdError, Result};
use crate::graph_scm::{topological_order, GroundTruthScm, WeightedAdjacency};

/// How intervention values are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueMode {
    Fixed { value: f64 },
    /// Redrawn independently for every sample and target.
    Uniform { lo: f64, hi: f64 },
}

impl ValueMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ValueMode::Fixed { value } if !value.is_finite() => {
                Err(BcdError::arg("fixed intervention value must be finite"))
            }
            ValueMode::Uniform { lo, hi } if !(lo < hi) || !lo.is_finite() || !hi.is_finite() => {
                Err(BcdError::arg(format!("uniform intervention range needs lo < hi, got [{lo}, {hi}]")))
            }
            _ => Ok(()),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ValueMode::Fixed { value } => value,
            ValueMode::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub targets: Vec<usize>,
    pub value_mode: ValueMode,
}

impl InterventionSpec {
    pub fn observational() -> Self {
        InterventionSpec {
            targets: Vec::new(),
            value_mode: ValueMode::Fixed { value: 0.0 },
        }
    }

    pub fn new(targets: Vec<usize>, value_mode: ValueMode) -> Result<Self> {
        value_mode.validate()?;
        Ok(InterventionSpec { targets, value_mode })
    }
}

/// Zeroes the incoming-weight column of every target.
pub fn mutate_for_intervention(w: &WeightedAdjacency, targets: &[usize]) -> Result<WeightedAdjacency> {
    let d = w.d();
    let mut m = w.matrix().clone();
    for &t in targets {
        if t >= d {
            return Err(BcdError::arg(format!("intervention target {t} out of range for d={d}")));
        }
        m.column_mut(t).fill(0.0);
    }
    WeightedAdjacency::new(m)
}

/// Deterministic core of ancestral sampling: nodes are visited in `order`;
/// a node with `clamp[i] = Some(v)` is set to `v`, any other node to
/// `Σ_j w[j][i] z_j + sigma * eps[i]`.
pub fn propagate(
    w: &DMatrix<f64>,
    order: &[usize],
    sigma: f64,
    eps: &[f64],
    clamp: &[Option<f64>],
) -> Vec<f64> {
    let d = order.len();
    let mut z = vec![0.0; d];
    for &i in order {
        z[i] = match clamp[i] {
            Some(v) => v,
            None => {
                let mut acc = sigma * eps[i];
                for j in 0..d {
                    let wji = w[(j, i)];
                    if wji != 0.0 {
                        acc += wji * z[j];
                    }
                }
                acc
            }
        };
    }
    z
}

/// Draws one latent vector. Intervened nodes are clamped exactly to their
/// drawn value with no added noise.
///
/// Draw order: one value per target (in `spec.targets` order), then `d`
/// standard normals.
pub fn ancestral_sample<R: Rng + ?Sized>(
    w: &WeightedAdjacency,
    sigma: f64,
    spec: &InterventionSpec,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let order = topological_order(w.matrix()).ok_or(BcdError::Cyclic)?;
    check_sigma(sigma)?;
    spec.value_mode.validate()?;
    let mutated = mutate_for_intervention(w, &spec.targets)?;
    let z = sample_with_order(mutated.matrix(), &order, sigma, spec, rng);
    Ok(DVector::from_vec(z))
}

fn sample_with_order<R: Rng + ?Sized>(
    w: &DMatrix<f64>,
    order: &[usize],
    sigma: f64,
    spec: &InterventionSpec,
    rng: &mut R,
) -> Vec<f64> {
    let d = order.len();
    let mut clamp = vec![None; d];
    for &t in &spec.targets {
        clamp[t] = Some(spec.value_mode.draw(rng));
    }
    let eps: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    propagate(w, order, sigma, &eps, &clamp)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(BcdError::arg(format!("sigma must be positive, got {sigma}")))
    }
}

/// Mean and covariance of a multivariate Gaussian over the latents.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianJoint {
    pub mu: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianJoint {
    pub fn new(mu: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mu.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(BcdError::dim(format!(
                "mean has length {d}, covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let joint = GaussianJoint { mu, cov };
        joint.cholesky()?;
        Ok(joint)
    }

    pub fn d(&self) -> usize {
        self.mu.len()
    }

    pub(crate) fn cholesky(&self) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let scale = self.cov.amax().max(1.0);
        for i in 0..self.d() {
            for j in 0..i {
                if (self.cov[(i, j)] - self.cov[(j, i)]).abs() > 1e-10 * scale {
                    return Err(BcdError::NotPositiveDefinite(format!(
                        "covariance is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        self.cov
            .clone()
            .cholesky()
            .ok_or_else(|| BcdError::NotPositiveDefinite("Cholesky factorization failed".into()))
    }
}

/// `(I - W)^{-1}`; always invertible for an acyclic `W` with zero diagonal.
pub(crate) fn inverse_i_minus(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = w.nrows();
    (DMatrix::identity(d, d) - w)
        .try_inverse()
        .ok_or_else(|| BcdError::Numeric("I - W is singular".into()))
}

/// `N(0, (I - W)^{-T} σ² (I - W)^{-1})`.
pub fn observational_joint(w: &WeightedAdjacency, sigma: f64) -> Result<GaussianJoint> {
    if !crate::graph_scm::validate_dag(w) {
        return Err(BcdError::Cyclic);
    }
    check_sigma(sigma)?;
    let b = inverse_i_minus(w.matrix())?;
    let mut cov = b.transpose() * &b * (sigma * sigma);
    // exact symmetry for the factorization
    cov = (&cov + cov.transpose()) * 0.5;
    GaussianJoint::new(DVector::zeros(w.d()), cov)
}

/// `X = z P'`.
pub fn project(z: &DMatrix<f64>, proj: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if z.ncols() != proj.nrows() {
        return Err(BcdError::dim(format!(
            "latents have {} columns, projection has {} rows",
            z.ncols(),
            proj.nrows()
        )));
    }
    Ok(z * proj)
}

/// Per-sample intervention labels: which nodes were intervened on and the value used.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionLabels {
    d: usize,
    mask: Vec<bool>,
    values: Vec<f64>,
}

impl InterventionLabels {
    pub fn observational(n: usize, d: usize) -> Self {
        InterventionLabels {
            d,
            mask: vec![false; n * d],
            values: vec![0.0; n * d],
        }
    }

    pub fn from_parts(d: usize, mask: Vec<bool>, values: Vec<f64>) -> Result<Self> {
        if mask.len() != values.len() || d == 0 || !mask.len().is_multiple_of(d) {
            return Err(BcdError::dim("label mask and values disagree in shape"));
        }
        Ok(InterventionLabels { d, mask, values })
    }

    pub fn n(&self) -> usize {
        self.mask.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_target(&self, row: usize, node: usize) -> bool {
        self.mask[row * self.d + node]
    }

    pub fn value(&self, row: usize, node: usize) -> f64 {
        self.values[row * self.d + node]
    }

    pub fn row_targets(&self, row: usize) -> Vec<usize> {
        (0..self.d).filter(|&j| self.is_target(row, j)).collect()
    }

    pub fn is_observational(&self, row: usize) -> bool {
        !self.mask[row * self.d..(row + 1) * self.d].iter().any(|m| *m)
    }

    /// Clamp vector for one row, `Some(value)` at each target.
    pub fn clamp(&self, row: usize) -> Vec<Option<f64>> {
        (0..self.d)
            .map(|j| self.is_target(row, j).then(|| self.value(row, j)))
            .collect()
    }

    pub(crate) fn set(&mut self, row: usize, node: usize, value: f64) {
        self.mask[row * self.d + node] = true;
        self.values[row * self.d + node] = value;
    }

    /// Labels for a subset of rows.
    pub fn select(&self, rows: &[usize]) -> Self {
        let d = self.d;
        let mut mask = Vec::with_capacity(rows.len() * d);
        let mut values = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            mask.extend_from_slice(&self.mask[r * d..(r + 1) * d]);
            values.extend_from_slice(&self.values[r * d..(r + 1) * d]);
        }
        InterventionLabels { d, mask, values }
    }
}

/// High-dimensional observations plus their intervention labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub labels: InterventionLabels,
    /// True latents, kept for evaluation only.
    pub z_eval: Option<DMatrix<f64>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_observational(&self) -> usize {
        (0..self.n()).filter(|&r| self.labels.is_observational(r)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeMode {
    /// One node per set.
    Single,
    /// Between 2 and d nodes per set, chosen without replacement.
    Multi,
}

/// Parameters of [`generate_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_obs: usize,
    pub n_int: usize,
    pub node_mode: NodeMode,
    pub value_mode: ValueMode,
    pub sets: usize,
}

pub const DEFAULT_SETS: usize = 20;

impl DatasetSpec {
    pub fn observational(n_obs: usize) -> Self {
        DatasetSpec {
            n_obs,
            n_int: 0,
            node_mode: NodeMode::Single,
            value_mode: ValueMode::Fixed { value: 100.0 },
            sets: DEFAULT_SETS,
        }
    }
}

/// Observational rows first, then `sets` interventional blocks of
/// `n_int / sets` rows each sharing one target set.
pub fn generate_dataset<R: Rng + ?Sized>(scm: &GroundTruthScm, spec: &DatasetSpec, rng: &mut R) -> Result<Dataset> {
    let d = scm.d();
    let n = spec.n_obs + spec.n_int;
    if n == 0 {
        return Err(BcdError::arg("dataset would be empty (n_obs = n_int = 0)"));
    }
    spec.value_mode.validate()?;
    let per_set = if spec.n_int > 0 {
        if spec.sets == 0 || !spec.n_int.is_multiple_of(spec.sets) {
            return Err(BcdError::arg(format!(
                "n_int = {} is not divisible into {} sets",
                spec.n_int, spec.sets
            )));
        }
        if spec.node_mode == NodeMode::Multi && d < 2 {
            return Err(BcdError::arg("multi-node interventions need d >= 2"));
        }
        spec.n_int / spec.sets
    } else {
        0
    };

    let w = scm.w_gt();
    let order = topological_order(w.matrix()).ok_or(BcdError::Cyclic)?;
    let mut z = DMatrix::zeros(n, d);
    let mut labels = InterventionLabels::observational(n, d);

    let observational = InterventionSpec::observational();
    for r in 0..spec.n_obs {
        let row = sample_with_order(w.matrix(), &order, scm.sigma_gt, &observational, rng);
        z.row_mut(r).copy_from_slice(&row);
    }

    let mut r = spec.n_obs;
    for _ in 0..if spec.n_int > 0 { spec.sets } else { 0 } {
        let mut targets = match spec.node_mode {
            NodeMode::Single => vec![rng.random_range(0..d)],
            NodeMode::Multi => {
                let x = rng.random_range(2..=d);
                index::sample(rng, d, x).into_vec()
            }
        };
        targets.sort_unstable();
        let block = InterventionSpec {
            targets,
            value_mode: spec.value_mode,
        };
        let mutated = mutate_for_intervention(&w, &block.targets)?;
        for _ in 0..per_set {
            let row = sample_with_order(mutated.matrix(), &order, scm.sigma_gt, &block, rng);
            for &t in &block.targets {
                labels.set(r, t, row[t]);
            }
            z.row_mut(r).copy_from_slice(&row);
            r += 1;
        }
    }

    let x = project(&z, &scm.proj)?;
    Ok(Dataset {
        x,
        labels,
        z_eval: Some(z),
    })
}

/// Empirical covariance (divisor `n - 1`) of the rows of `samples`.
pub fn empirical_covariance(samples: &DMatrix<f64>) -> DMatrix<f64> {
    let n = samples.nrows() as f64;
    let mean = samples.row_mean();
    let mut centered = samples.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    centered.transpose() * centered / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_scm::{assemble_weighted_adjacency, EdgeMatrix, Permutation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(w: f64) -> WeightedAdjacency {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = w;
        WeightedAdjacency::new(m).unwrap()
    }

    fn draw_many(w: &WeightedAdjacency, sigma: f64, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, w.d());
        let spec = InterventionSpec::observational();
        for r in 0..n {
            let z = ancestral_sample(w, sigma, &spec, rng).unwrap();
            out.row_mut(r).copy_from_slice(z.as_slice());
        }
        out
    }

    fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn mutation_zeroes_target_columns_only() {
        let w = chain(0.8);
        assert_eq!(mutate_for_intervention(&w, &[]).unwrap(), w);
        assert_eq!(mutate_for_intervention(&w, &[1]).unwrap(), WeightedAdjacency::zeros(2));
        assert!(mutate_for_intervention(&w, &[2]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scm = GroundTruthScm::generate(6, 6, 2.0, 0.1, &mut rng).unwrap();
        let w = scm.w_gt();
        let m = mutate_for_intervention(&w, &[2, 4]).unwrap();
        for j in 0..6 {
            for i in 0..6 {
                let expected = if j == 2 || j == 4 { 0.0 } else { w.matrix()[(i, j)] };
                assert_eq!(m.matrix()[(i, j)].to_bits(), expected.to_bits());
            }
        }
    }

    #[test]
    fn roots_have_noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = WeightedAdjacency::zeros(3);
        let samples = draw_many(&w, 0.1, 100_000, &mut rng);
        let cov = empirical_covariance(&samples);
        for i in 0..3 {
            assert!((cov[(i, i)] / 0.01 - 1.0).abs() < 0.02, "var {}", cov[(i, i)]);
        }
    }

    #[test]
    fn clamped_nodes_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let scm = GroundTruthScm::generate(6, 6, 2.0, 0.1, &mut rng).unwrap();
        let spec = InterventionSpec::new(vec![3], ValueMode::Fixed { value: 100.0 }).unwrap();
        for _ in 0..100 {
            let z = ancestral_sample(&scm.w_gt(), 0.1, &spec, &mut rng).unwrap();
            assert_eq!(z[3], 100.0);
        }
    }

    #[test]
    fn sample_matches_linear_solve() {
        let w = chain(1.0);
        let mut a = ChaCha8Rng::seed_from_u64(14);
        let mut b = a.clone();
        let z = ancestral_sample(&w, 0.1, &InterventionSpec::observational(), &mut a).unwrap();
        let eps = DVector::from_iterator(2, (0..2).map(|_| 0.1 * Distribution::<f64>::sample(&StandardNormal, &mut b)));
        let expected = inverse_i_minus(w.matrix()).unwrap().transpose() * eps;
        assert!((z - expected).amax() < 1e-15);
    }

    #[test]
    fn cyclic_graphs_are_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        let w = WeightedAdjacency::new(m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        assert!(matches!(
            ancestral_sample(&w, 0.1, &InterventionSpec::observational(), &mut rng),
            Err(BcdError::Cyclic)
        ));
        assert!(observational_joint(&w, 0.1).is_err());
    }

    #[test]
    fn empty_graph_joint_is_isotropic() {
        let joint = observational_joint(&WeightedAdjacency::zeros(4), 0.3).unwrap();
        assert_eq!(joint.mu, DVector::zeros(4));
        assert!((joint.cov.clone() - DMatrix::identity(4, 4) * 0.09).amax() < 1e-15);
    }

    #[test]
    fn chain_joint_matches_hand_expansion_and_samples() {
        let (w, sigma) = (0.7, 0.1);
        let joint = observational_joint(&chain(w), sigma).unwrap();
        let s2 = sigma * sigma;
        let expected = DMatrix::from_row_slice(2, 2, &[s2, s2 * w, s2 * w, s2 * (1.0 + w * w)]);
        assert!((joint.cov.clone() - &expected).amax() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let emp = empirical_covariance(&draw_many(&chain(w), sigma, 100_000, &mut rng));
        assert!(rel_frobenius(&emp, &expected) < 0.02);
    }

    #[test]
    fn random_joint_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let scm = GroundTruthScm::generate(5, 5, 1.0, 0.2, &mut rng).unwrap();
        let joint = observational_joint(&scm.w_gt(), 0.2).unwrap();
        let emp = empirical_covariance(&draw_many(&scm.w_gt(), 0.2, 100_000, &mut rng));
        assert!(rel_frobenius(&emp, &joint.cov) < 0.03);
    }

    #[test]
    fn projection_cases() {
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(project(&z, &DMatrix::identity(2, 2)).unwrap(), z);
        let out = project(&DMatrix::from_element(1, 1, 2.0), &DMatrix::from_row_slice(1, 2, &[3.0, -1.0])).unwrap();
        assert_eq!(out, DMatrix::from_row_slice(1, 2, &[6.0, -2.0]));
        assert!(project(&z, &DMatrix::zeros(3, 4)).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let proj = DMatrix::from_fn(6, 10, |_, _| rng.random_range(-1.0..1.0));
        let z = DMatrix::from_fn(5, 6, |_, _| rng.random_range(-1.0..1.0));
        let x = project(&z, &proj).unwrap();
        for r in 0..5 {
            for c in 0..10 {
                let mut acc = 0.0;
                for k in 0..6 {
                    acc += z[(r, k)] * proj[(k, c)];
                }
                assert!((x[(r, c)] - acc).abs() < 1e-12);
            }
        }
    }

    fn scm6(seed: u64) -> (GroundTruthScm, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scm = GroundTruthScm::generate(6, 10, 2.0, 0.1, &mut rng).unwrap();
        (scm, rng)
    }

    #[test]
    fn observational_dataset_shape() {
        let (scm, mut rng) = scm6(19);
        let data = generate_dataset(&scm, &DatasetSpec::observational(600), &mut rng).unwrap();
        assert_eq!(data.n(), 600);
        assert_eq!(data.x.ncols(), 10);
        assert_eq!(data.n_observational(), 600);
        let z = data.z_eval.as_ref().unwrap();
        assert_eq!(&data.x, &(z * &scm.proj));
    }

    #[test]
    fn divisibility_is_enforced() {
        let (scm, mut rng) = scm6(20);
        let mut spec = DatasetSpec {
            n_obs: 900,
            n_int: 910,
            node_mode: NodeMode::Single,
            value_mode: ValueMode::Fixed { value: 100.0 },
            sets: 20,
        };
        assert!(generate_dataset(&scm, &spec, &mut rng).is_err());
        spec.n_int = 900;
        let data = generate_dataset(&scm, &spec, &mut rng).unwrap();
        assert_eq!(data.n(), 1800);
        assert_eq!(data.n_observational(), 900);
        spec.sets = 18;
        assert!(generate_dataset(&scm, &spec, &mut rng).is_ok());
        spec.n_obs = 0;
        spec.n_int = 0;
        assert!(generate_dataset(&scm, &spec, &mut rng).is_err());
    }

    #[test]
    fn interventional_blocks_follow_the_protocol() {
        let (scm, mut rng) = scm6(21);
        let spec = DatasetSpec {
            n_obs: 100,
            n_int: 400,
            node_mode: NodeMode::Multi,
            value_mode: ValueMode::Uniform { lo: -10.0, hi: 10.0 },
            sets: 20,
        };
        let data = generate_dataset(&scm, &spec, &mut rng).unwrap();
        let z = data.z_eval.as_ref().unwrap();
        for r in 0..100 {
            assert!(data.labels.is_observational(r));
        }
        for block in 0..20 {
            let first = 100 + block * 20;
            let targets = data.labels.row_targets(first);
            assert!((2..=6).contains(&targets.len()));
            for r in first..first + 20 {
                assert_eq!(data.labels.row_targets(r), targets);
                for &t in &targets {
                    assert_eq!(z[(r, t)], data.labels.value(r, t));
                    assert!((-10.0..10.0).contains(&z[(r, t)]));
                }
            }
        }

        let single = DatasetSpec {
            node_mode: NodeMode::Single,
            value_mode: ValueMode::Fixed { value: 100.0 },
            ..spec
        };
        let data = generate_dataset(&scm, &single, &mut rng).unwrap();
        for r in 100..500 {
            let t = data.labels.row_targets(r);
            assert_eq!(t.len(), 1);
            assert_eq!(data.labels.value(r, t[0]), 100.0);
        }
    }

    #[test]
    fn intervened_value_is_independent_of_former_parents() {
        let mut m = DMatrix::zeros(3, 3);
        m[(1, 0)] = 1.5;
        m[(2, 0)] = -1.0;
        m[(2, 1)] = 0.8;
        let l = EdgeMatrix::new(m).unwrap();
        let w = assemble_weighted_adjacency(&Permutation::identity(3), &l).unwrap();
        let spec = InterventionSpec::new(vec![2], ValueMode::Uniform { lo: -10.0, hi: 10.0 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let n = 10_000;
        let mut samples = DMatrix::zeros(n, 3);
        for r in 0..n {
            let z = ancestral_sample(&w, 0.1, &spec, &mut rng).unwrap();
            samples.row_mut(r).copy_from_slice(z.as_slice());
        }
        let cov = empirical_covariance(&samples);
        for parent in [0, 1] {
            let corr = cov[(parent, 2)] / (cov[(parent, parent)] * cov[(2, 2)]).sqrt();
            assert!(corr.abs() < 0.05, "corr with {parent}: {corr}");
        }
    }

    #[test]
    fn multi_mode_requires_two_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let scm = GroundTruthScm::generate(1, 2, 1.0, 0.1, &mut rng).unwrap();
        let spec = DatasetSpec {
            n_obs: 0,
            n_int: 20,
            node_mode: NodeMode::Multi,
            value_mode: ValueMode::Fixed { value: 1.0 },
            sets: 20,
        };
        assert!(generate_dataset(&scm, &spec, &mut rng).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = DatasetSpec {
            n_obs: 50,
            n_int: 100,
            node_mode: NodeMode::Multi,
            value_mode: ValueMode::Uniform { lo: -1.0, hi: 1.0 },
            sets: 20,
        };
        let (scm, mut a) = scm6(24);
        let (_, mut b) = scm6(24);
        assert_eq!(
            generate_dataset(&scm, &spec, &mut a).unwrap(),
            generate_dataset(&scm, &spec, &mut b).unwrap()
        );
    }

    #[test]
    fn value_mode_validation() {
        assert!(ValueMode::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(ValueMode::Fixed { value: f64::NAN }.validate().is_err());
        assert!(InterventionSpec::new(vec![0], ValueMode::Uniform { lo: 2.0, hi: -2.0 }).is_err());
    }
}
