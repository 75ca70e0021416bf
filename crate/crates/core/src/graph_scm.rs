//! Ground-truth DAG synthesis and the permutation / lower-triangular
//! parameterization of weighted adjacency matrices.
//!
//! Edge convention: `W[i][j]` is the weight of edge `i -> j`, and the SCM
//! update is `z = Wᵀ z + ε`. A DAG is written as `W = (P L Pᵀ)ᵀ` with `L`
//! strictly lower triangular and `P` the permutation matrix whose row `i`
//! has its single one in column `order[i]`.

use std::collections::VecDeque;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{BcdError, Result};

/// Magnitude range of ground-truth edge weights; the sign is a fair coin.
pub const EDGE_WEIGHT_RANGE: (f64, f64) = (0.5, 2.0);

/// Strictly lower-triangular `d × d` matrix of edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMatrix(DMatrix<f64>);

impl EdgeMatrix {
    pub fn zeros(d: usize) -> Self {
        EdgeMatrix(DMatrix::zeros(d, d))
    }

    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let d = entries.nrows();
        if d == 0 || entries.ncols() != d {
            return Err(BcdError::dim(format!(
                "edge matrix must be square with d >= 1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for i in 0..d {
            for j in i..d {
                if entries[(i, j)] != 0.0 {
                    return Err(BcdError::arg(format!(
                        "edge matrix entry ({i},{j}) on or above the diagonal is nonzero"
                    )));
                }
            }
        }
        Ok(EdgeMatrix(entries))
    }

    pub fn from_row_major(d: usize, values: &[f64]) -> Result<Self> {
        if values.len() != d * d {
            return Err(BcdError::dim(format!(
                "expected {} values for a {d}x{d} edge matrix, got {}",
                d * d,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(d, d, values))
    }

    pub fn d(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn edge_count(&self) -> usize {
        self.0.iter().filter(|w| **w != 0.0).count()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        row_major(&self.0)
    }

    /// Values of all `d(d-1)/2` below-diagonal positions in row-major order.
    pub fn below_diagonal(&self) -> Vec<f64> {
        let d = self.d();
        let mut out = Vec::with_capacity(d * d.saturating_sub(1) / 2);
        for i in 0..d {
            for j in 0..i {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }
}

/// A node ordering, read as the permutation matrix `P[i][order[i]] = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn identity(d: usize) -> Self {
        Permutation {
            order: (0..d).collect(),
        }
    }

    pub fn new(order: Vec<usize>) -> Result<Self> {
        let d = order.len();
        let mut seen = vec![false; d];
        for &k in &order {
            if k >= d || seen[k] {
                return Err(BcdError::arg(format!(
                    "{order:?} is not a permutation of 0..{d}"
                )));
            }
            seen[k] = true;
        }
        Ok(Permutation { order })
    }

    pub fn d(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.d();
        let mut p = DMatrix::zeros(d, d);
        for (i, &k) in self.order.iter().enumerate() {
            p[(i, k)] = 1.0;
        }
        p
    }

    /// Inverse mapping: `inverse()[order[i]] == i`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.d()];
        for (i, &k) in self.order.iter().enumerate() {
            inv[k] = i;
        }
        inv
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = BcdError;

    fn try_from(order: Vec<usize>) -> Result<Self> {
        Permutation::new(order)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.order
    }
}

/// Square weight matrix; `W[i][j]` is the weight of edge `i -> j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAdjacency(DMatrix<f64>);

impl WeightedAdjacency {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(BcdError::dim(format!(
                "weighted adjacency must be square, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        Ok(WeightedAdjacency(w))
    }

    pub fn zeros(d: usize) -> Self {
        WeightedAdjacency(DMatrix::zeros(d, d))
    }

    pub fn d(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Returns `W = (P L Pᵀ)ᵀ`.
pub fn assemble_weighted_adjacency(perm: &Permutation, l: &EdgeMatrix) -> Result<WeightedAdjacency> {
    let d = l.d();
    if perm.d() != d {
        return Err(BcdError::dim(format!(
            "permutation has {} nodes, edge matrix has {d}",
            perm.d()
        )));
    }
    // (P L Pᵀ)[b][a] = L[order[b]][order[a]], so no matrix products are needed.
    let order = perm.order();
    let w = DMatrix::from_fn(d, d, |a, b| l.get(order[b], order[a]));
    Ok(WeightedAdjacency(w))
}

/// Kahn topological order of the nonzero pattern, or `None` if it has a cycle.
pub fn topological_order(w: &DMatrix<f64>) -> Option<Vec<usize>> {
    let d = w.nrows();
    let mut indegree = vec![0usize; d];
    for i in 0..d {
        for j in 0..d {
            if w[(i, j)] != 0.0 {
                indegree[j] += 1;
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..d).filter(|&j| indegree[j] == 0).collect();
    let mut order = Vec::with_capacity(d);
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for j in 0..d {
            if w[(i, j)] != 0.0 {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
    }
    (order.len() == d).then_some(order)
}

/// True iff the nonzero pattern of `w` has no directed cycle.
pub fn validate_dag(w: &WeightedAdjacency) -> bool {
    topological_order(w.matrix()).is_some()
}

/// Draws an Erdős–Rényi DAG over a fixed ordering with expected edge count
/// `edges_per_node * d`; weights follow [`EDGE_WEIGHT_RANGE`] with random sign.
pub fn sample_er_dag<R: Rng + ?Sized>(d: usize, edges_per_node: f64, rng: &mut R) -> Result<EdgeMatrix> {
    if d == 0 {
        return Err(BcdError::arg("d must be at least 1"));
    }
    if !(edges_per_node > 0.0) || !edges_per_node.is_finite() {
        return Err(BcdError::arg("edges_per_node must be positive"));
    }
    let slots = d * (d - 1) / 2;
    let mut l = DMatrix::zeros(d, d);
    if slots == 0 {
        return Ok(EdgeMatrix(l));
    }
    let p = edges_per_node * d as f64 / slots as f64;
    if p > 1.0 {
        return Err(BcdError::arg(format!(
            "edge density {edges_per_node} per node implies edge probability {p:.3} > 1 at d={d}"
        )));
    }
    let magnitude = Uniform::new_inclusive(EDGE_WEIGHT_RANGE.0, EDGE_WEIGHT_RANGE.1)
        .expect("valid weight range");
    for i in 0..d {
        for j in 0..i {
            if rng.random::<f64>() < p {
                let w = magnitude.sample(rng);
                l[(i, j)] = if rng.random::<bool>() { w } else { -w };
            }
        }
    }
    Ok(EdgeMatrix(l))
}

/// Set of learnable below-diagonal positions of `L`, kept in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeMask {
    d: usize,
    positions: Vec<(usize, usize)>,
}

impl FreeMask {
    pub fn new(d: usize, mut positions: Vec<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &positions {
            if i >= d || j >= i {
                return Err(BcdError::arg(format!(
                    "mask position ({i},{j}) is not strictly below the diagonal of a {d}x{d} matrix"
                )));
            }
        }
        positions.sort_unstable();
        positions.dedup();
        Ok(FreeMask { d, positions })
    }

    pub fn full(d: usize) -> Self {
        let positions = (0..d).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
        FreeMask { d, positions }
    }

    pub fn empty(d: usize) -> Self {
        FreeMask {
            d,
            positions: Vec::new(),
        }
    }

    /// Only the last edge, at position `(d-1, d-2)`.
    pub fn single_edge(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(BcdError::arg("single-edge mask needs d >= 2"));
        }
        Ok(FreeMask {
            d,
            positions: vec![(d - 1, d - 2)],
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.positions.binary_search(&(row, col)).is_ok()
    }
}

pub fn pack_free_entries(l: &EdgeMatrix, mask: &FreeMask) -> Result<Vec<f64>> {
    if l.d() != mask.d() {
        return Err(BcdError::dim(format!(
            "mask is for d={}, edge matrix has d={}",
            mask.d(),
            l.d()
        )));
    }
    Ok(mask.positions().iter().map(|&(i, j)| l.get(i, j)).collect())
}

/// Writes `theta` into the masked positions of a copy of `fixed`.
pub fn unpack_free_entries(theta: &[f64], mask: &FreeMask, fixed: &EdgeMatrix) -> Result<EdgeMatrix> {
    if theta.len() != mask.len() {
        return Err(BcdError::dim(format!(
            "theta has {} entries, mask has {}",
            theta.len(),
            mask.len()
        )));
    }
    if fixed.d() != mask.d() {
        return Err(BcdError::dim(format!(
            "mask is for d={}, fixed matrix has d={}",
            mask.d(),
            fixed.d()
        )));
    }
    let mut l = fixed.0.clone();
    for (&(i, j), &v) in mask.positions().iter().zip(theta) {
        l[(i, j)] = v;
    }
    Ok(EdgeMatrix(l))
}

/// The generative model: latent SCM plus linear projection to observed space.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthScm {
    pub perm: Permutation,
    pub l_gt: EdgeMatrix,
    pub sigma_gt: f64,
    /// `d × D` projection `P'`, with `X = z P'`.
    pub proj: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScmDocument {
    d: usize,
    #[serde(rename = "D")]
    big_d: usize,
    perm: Permutation,
    #[serde(rename = "L")]
    l: Vec<f64>,
    sigma: f64,
    proj: Vec<f64>,
}

impl GroundTruthScm {
    pub fn new(perm: Permutation, l_gt: EdgeMatrix, sigma_gt: f64, proj: DMatrix<f64>) -> Result<Self> {
        let d = l_gt.d();
        if perm.d() != d || proj.nrows() != d {
            return Err(BcdError::dim(format!(
                "permutation ({}), edge matrix ({d}) and projection rows ({}) disagree",
                perm.d(),
                proj.nrows()
            )));
        }
        if proj.ncols() < d {
            return Err(BcdError::arg(format!(
                "observed dimension D={} is smaller than d={d}",
                proj.ncols()
            )));
        }
        if !(sigma_gt > 0.0) || !sigma_gt.is_finite() {
            return Err(BcdError::arg(format!("sigma must be positive, got {sigma_gt}")));
        }
        Ok(GroundTruthScm {
            perm,
            l_gt,
            sigma_gt,
            proj,
        })
    }

    /// Random ER ground truth with identity ordering and a full-row-rank
    /// projection with entries uniform on `[-1, 1]`.
    pub fn generate<R: Rng + ?Sized>(
        d: usize,
        big_d: usize,
        edges_per_node: f64,
        sigma_gt: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if big_d < d {
            return Err(BcdError::arg(format!("D={big_d} must be at least d={d}")));
        }
        let l_gt = sample_er_dag(d, edges_per_node, rng)?;
        let proj = sample_projection(d, big_d, rng);
        Self::new(Permutation::identity(d), l_gt, sigma_gt, proj)
    }

    pub fn d(&self) -> usize {
        self.l_gt.d()
    }

    pub fn big_d(&self) -> usize {
        self.proj.ncols()
    }

    pub fn w_gt(&self) -> WeightedAdjacency {
        assemble_weighted_adjacency(&self.perm, &self.l_gt).expect("dimensions checked at construction")
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ScmDocument {
            d: self.d(),
            big_d: self.big_d(),
            perm: self.perm.clone(),
            l: self.l_gt.to_row_major(),
            sigma: self.sigma_gt,
            proj: row_major(&self.proj),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScmDocument = serde_json::from_str(text)?;
        if doc.perm.d() != doc.d || doc.proj.len() != doc.d * doc.big_d {
            return Err(BcdError::dim("scm document fields disagree on d / D"));
        }
        let l = EdgeMatrix::from_row_major(doc.d, &doc.l)?;
        let proj = DMatrix::from_row_slice(doc.d, doc.big_d, &doc.proj);
        Self::new(doc.perm, l, doc.sigma, proj)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| BcdError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BcdError::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Uniform `[-1, 1]` projection, redrawn until it has full row rank.
pub fn sample_projection<R: Rng + ?Sized>(d: usize, big_d: usize, rng: &mut R) -> DMatrix<f64> {
    let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    loop {
        let proj = DMatrix::from_fn(d, big_d, |_, _| unit.sample(rng));
        if proj.rank(1e-8) == d {
            return proj;
        }
    }
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}
