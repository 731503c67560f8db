//! Linear Gaussian structural equation models.
//!
//! A [`GaussianSem`] sets `X_k = Σ_{p ∈ pa(k)} β_{pk} X_p + η_k` with
//! independent zero-mean noise of variance `σ_k²`. The implied covariance is
//! obtained by forward substitution along a topological order, and samples
//! are drawn ancestrally.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::Skeleton;
use crate::rng;

/// A directed acyclic graph over nodes `0..d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    d: usize,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl Dag {
    pub fn new(d: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("a graph needs at least one node".into()));
        }
        let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
        for &(a, b) in &edges {
            for v in [a, b] {
                if v >= d {
                    return Err(Error::NodeOutOfRange { node: v, d });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut parents = vec![Vec::new(); d];
        let mut children = vec![Vec::new(); d];
        for &(a, b) in &edges {
            parents[b].push(a);
            children[a].push(b);
        }
        let topo = kahn_order(&parents, &children).ok_or(Error::Cyclic)?;
        Ok(Dag {
            d,
            edges,
            parents,
            children,
            topo,
        })
    }

    pub fn empty(d: usize) -> Result<Self> {
        Dag::new(d, std::iter::empty())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Edges as `(parent, child)` pairs in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.binary_search(&(from, to)).is_ok()
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Topological order, smallest available node first.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn skeleton(&self) -> Skeleton {
        Skeleton::new(self.d, self.edges.iter().copied()).expect("DAG edges form a valid skeleton")
    }

    /// Nodes with no parents.
    pub fn roots(&self) -> Vec<usize> {
        (0..self.d).filter(|&v| self.parents[v].is_empty()).collect()
    }
}

fn kahn_order(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Option<Vec<usize>> {
    let d = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..d).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(d);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    (order.len() == d).then_some(order)
}

/// A linear Gaussian SEM: a DAG, one coefficient per edge and one noise
/// variance per node.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSem {
    graph: Dag,
    beta: BTreeMap<(usize, usize), f64>,
    noise_var: Vec<f64>,
}

impl GaussianSem {
    /// Builds a SEM from `(parent, child, beta)` triples.
    pub fn new(d: usize, weighted_edges: &[(usize, usize, f64)], noise_var: Vec<f64>) -> Result<Self> {
        let graph = Dag::new(d, weighted_edges.iter().map(|&(a, b, _)| (a, b)))?;
        let beta = weighted_edges.iter().map(|&(a, b, w)| ((a, b), w)).collect();
        GaussianSem::from_parts(graph, beta, noise_var)
    }

    pub fn from_parts(graph: Dag, beta: BTreeMap<(usize, usize), f64>, noise_var: Vec<f64>) -> Result<Self> {
        if noise_var.len() != graph.d() {
            return Err(Error::DimensionMismatch {
                expected: graph.d(),
                found: noise_var.len(),
            });
        }
        if let Some((k, v)) = noise_var.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "noise variance of node {k} must be positive and finite, got {v}"
            )));
        }
        if beta.len() != graph.edges().len() || graph.edges().iter().any(|e| !beta.contains_key(e)) {
            return Err(Error::InvalidParameter(
                "coefficient keys must match the edge set exactly".into(),
            ));
        }
        if let Some((e, w)) = beta.iter().find(|(_, w)| !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("coefficient on {e:?} is {w}")));
        }
        Ok(GaussianSem {
            graph,
            beta,
            noise_var,
        })
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn d(&self) -> usize {
        self.graph.d()
    }

    pub fn beta(&self, parent: usize, child: usize) -> Option<f64> {
        self.beta.get(&(parent, child)).copied()
    }

    pub fn coefficients(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.beta
    }

    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    /// `(parent, child, beta)` triples in edge order.
    pub fn weighted_edges(&self) -> Vec<(usize, usize, f64)> {
        self.beta.iter().map(|(&(a, b), &w)| (a, b, w)).collect()
    }

    /// The same SEM with every noise variance multiplied by `factor`.
    pub fn with_noise_scale(&self, factor: f64) -> Result<Self> {
        GaussianSem::from_parts(
            self.graph.clone(),
            self.beta.clone(),
            self.noise_var.iter().map(|v| v * factor).collect(),
        )
    }
}

/// A symmetric `d × d` second-moment matrix.
///
/// Matrices built through [`CovarianceMatrix::new`] are checked to be
/// positive definite. Sample estimates are only guaranteed positive
/// semidefinite; the estimators report degeneracy where it matters.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    n_samples: Option<usize>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl CovarianceMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let cov = CovarianceMatrix::symmetric(matrix, None)?;
        if !cov.is_positive_definite() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(cov)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: r.len(),
            });
        }
        CovarianceMatrix::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    /// Symmetric but possibly singular, as produced from sample moments.
    pub(crate) fn symmetric(matrix: DMatrix<f64>, n_samples: Option<usize>) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d.max(1),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("covariance entries must be finite".into()));
        }
        let scale = matrix.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mut asym = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                asym = asym.max((matrix[(i, j)] - matrix[(j, i)]).abs());
            }
        }
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(CovarianceMatrix { matrix, n_samples })
    }

    pub fn d(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Sample count behind an estimate; `None` for exact covariances.
    pub fn n_samples(&self) -> Option<usize> {
        self.n_samples
    }

    pub fn is_positive_definite(&self) -> bool {
        self.matrix.clone().cholesky().is_some()
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.matrix[(idx[a], idx[b])])
    }

    /// Principal submatrix as a new covariance, checked for positive definiteness.
    pub fn marginal(&self, idx: &[usize]) -> Result<CovarianceMatrix> {
        for &v in idx {
            if v >= self.d() {
                return Err(Error::NodeOutOfRange { node: v, d: self.d() });
            }
        }
        CovarianceMatrix::new(self.submatrix(idx))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// `n` observations of a `d`-dimensional vector, stored row-major by observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::InvalidParameter("a sample matrix needs at least one row".into()));
        }
        if data.ncols() == 0 {
            return Err(Error::InvalidParameter("a sample matrix needs at least one column".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("sample entries must be finite".into()));
        }
        Ok(SampleMatrix { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: r.len(),
            });
        }
        SampleMatrix::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    /// The same observations with columns reordered: column `c` of the result
    /// is column `perm[c]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<SampleMatrix> {
        if perm.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: perm.len(),
            });
        }
        let data = DMatrix::from_fn(self.n(), self.d(), |i, c| self.data[(i, perm[c])]);
        SampleMatrix::new(data)
    }
}

/// Noise distribution used by [`sample`].
///
/// Draws are raw, not standardized: `uniform` is `U(-1, 1)` (variance 1/3)
/// and `laplace` is `Laplace(0, 1)` (variance 2). Node `k` receives the draw
/// multiplied by `σ_k`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    #[default]
    Gaussian,
    Uniform,
    Laplace,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 3] = [NoiseFamily::Gaussian, NoiseFamily::Uniform, NoiseFamily::Laplace];

    /// Variance of one raw draw.
    pub fn variance(self) -> f64 {
        match self {
            NoiseFamily::Gaussian => 1.0,
            NoiseFamily::Uniform => 1.0 / 3.0,
            NoiseFamily::Laplace => 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Uniform => "uniform",
            NoiseFamily::Laplace => "laplace",
        }
    }

    fn draw(self, rng: &mut rng::Rng) -> f64 {
        match self {
            NoiseFamily::Gaussian => StandardNormal.sample(rng),
            NoiseFamily::Uniform => rng.random_range(-1.0..1.0),
            NoiseFamily::Laplace => {
                // inverse CDF on u ∈ (-1/2, 1/2)
                let u: f64 = rng.random::<f64>() - 0.5;
                let tail = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
                -u.signum() * tail.ln()
            }
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseFamily::Gaussian),
            "uniform" => Ok(NoiseFamily::Uniform),
            "laplace" => Ok(NoiseFamily::Laplace),
            other => Err(Error::InvalidParameter(format!("unknown noise family `{other}`"))),
        }
    }
}

/// Exact covariance `Σ = (I − B)^{-T} Ω (I − B)^{-1}` of a SEM.
///
/// Nodes are processed in topological order: for node `k` with parents `P`,
/// `Σ[k, j] = Σ_{p ∈ P} β_{pk} Σ[p, j]` for every earlier `j`, and
/// `Σ[k, k] = Σ_{p,q ∈ P} β_{pk} β_{qk} Σ[p, q] + σ_k²`.
pub fn sem_to_covariance(sem: &GaussianSem) -> Result<CovarianceMatrix> {
    let d = sem.d();
    let dag = sem.graph();
    let mut sigma = DMatrix::<f64>::zeros(d, d);
    let order = dag.topological_order();
    for (pos, &k) in order.iter().enumerate() {
        let parents: Vec<(usize, f64)> = dag
            .parents(k)
            .iter()
            .map(|&p| (p, sem.beta[&(p, k)]))
            .collect();
        for &j in &order[..pos] {
            let c: f64 = parents.iter().map(|&(p, b)| b * sigma[(p, j)]).sum();
            sigma[(k, j)] = c;
            sigma[(j, k)] = c;
        }
        let mut var = sem.noise_var[k];
        for &(p, bp) in &parents {
            for &(q, bq) in &parents {
                var += bp * bq * sigma[(p, q)];
            }
        }
        sigma[(k, k)] = var;
    }
    CovarianceMatrix::new(sigma)
}

/// Draws `n` i.i.d. rows by ancestral sampling.
pub fn sample(sem: &GaussianSem, n: usize, noise: NoiseFamily, seed: u64) -> Result<SampleMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let d = sem.d();
    let dag = sem.graph();
    let order = dag.topological_order();
    let scale: Vec<f64> = sem.noise_var.iter().map(|v| v.sqrt()).collect();
    let parents: Vec<Vec<(usize, f64)>> = (0..d)
        .map(|k| dag.parents(k).iter().map(|&p| (p, sem.beta[&(p, k)])).collect())
        .collect();
    let mut rng = rng::seeded(seed);
    let mut data = DMatrix::<f64>::zeros(n, d);
    let mut row = vec![0.0; d];
    for i in 0..n {
        for &k in order {
            let mean: f64 = parents[k].iter().map(|&(p, b)| b * row[p]).sum();
            row[k] = mean + scale[k] * noise.draw(&mut rng);
        }
        for (k, &v) in row.iter().enumerate() {
            data[(i, k)] = v;
        }
    }
    SampleMatrix::new(data)
}

fn check_targets(d: usize, j: usize, k: usize, given: &[usize]) -> Result<()> {
    for &v in [j, k].iter().chain(given) {
        if v >= d {
            return Err(Error::NodeOutOfRange { node: v, d });
        }
    }
    if j == k {
        return Err(Error::InvalidParameter(format!("targets must differ, got ({j}, {k})")));
    }
    if given.contains(&j) || given.contains(&k) {
        return Err(Error::InvalidParameter(
            "conditioning set must not contain a target".into(),
        ));
    }
    Ok(())
}

pub(crate) fn validate_ci_query(d: usize, j: usize, k: usize, given: &[usize]) -> Result<()> {
    check_targets(d, j, k, given)
}

/// Conditional covariance of `(X_j, X_k)` given `X_S` via the Schur complement
/// `Σ_II − Σ_IS Σ_SS^{-1} Σ_SI`, `I = {j, k}`.
pub fn conditional_covariance(
    sigma: &CovarianceMatrix,
    targets: (usize, usize),
    given: &[usize],
) -> Result<Matrix2<f64>> {
    let (j, k) = targets;
    check_targets(sigma.d(), j, k, given)?;
    let m = sigma.matrix();
    let mut block = Matrix2::new(m[(j, j)], m[(j, k)], m[(k, j)], m[(k, k)]);
    if given.is_empty() {
        return Ok(block);
    }
    let chol = sigma
        .submatrix(given)
        .cholesky()
        .ok_or_else(|| Error::DegenerateConditioning { given: given.to_vec() })?;
    let cross = DMatrix::from_fn(given.len(), 2, |a, b| m[(given[a], [j, k][b])]);
    let solved = chol.solve(&cross);
    let correction = cross.transpose() * solved;
    for a in 0..2 {
        for b in 0..2 {
            block[(a, b)] -= correction[(a, b)];
        }
    }
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(beta: f64, d: usize) -> GaussianSem {
        let edges: Vec<_> = (0..d - 1).map(|i| (i, i + 1, beta)).collect();
        GaussianSem::new(d, &edges, vec![1.0; d]).unwrap()
    }

    #[test]
    fn dag_rejects_bad_edges() {
        assert!(matches!(Dag::new(2, [(0, 0)]), Err(Error::SelfLoop(0))));
        assert!(matches!(Dag::new(2, [(0, 1), (0, 1)]), Err(Error::DuplicateEdge(0, 1))));
        assert!(matches!(Dag::new(2, [(0, 2)]), Err(Error::NodeOutOfRange { node: 2, d: 2 })));
        assert!(matches!(Dag::new(3, [(0, 1), (1, 2), (2, 0)]), Err(Error::Cyclic)));
    }

    #[test]
    fn topological_order_respects_edges() {
        let g = Dag::new(4, [(3, 1), (1, 0), (2, 0)]).unwrap();
        let pos: Vec<usize> = {
            let mut p = vec![0; 4];
            for (i, &v) in g.topological_order().iter().enumerate() {
                p[v] = i;
            }
            p
        };
        for &(a, b) in g.edges() {
            assert!(pos[a] < pos[b]);
        }
    }

    #[test]
    fn sem_requires_matching_coefficients() {
        let g = Dag::new(2, [(0, 1)]).unwrap();
        assert!(GaussianSem::from_parts(g.clone(), BTreeMap::new(), vec![1.0, 1.0]).is_err());
        let beta: BTreeMap<_, _> = [((0, 1), 0.5)].into();
        assert!(GaussianSem::from_parts(g.clone(), beta.clone(), vec![1.0, 0.0]).is_err());
        assert!(GaussianSem::from_parts(g, beta, vec![1.0]).is_err());
    }

    #[test]
    fn two_node_chain_covariance() {
        let s = sem_to_covariance(&chain(0.5, 2)).unwrap();
        assert_close!(s.get(0, 0), 1.0, 1e-15);
        assert_close!(s.get(0, 1), 0.5, 1e-15);
        assert_close!(s.get(1, 0), 0.5, 1e-15);
        assert_close!(s.get(1, 1), 1.25, 1e-15);
    }

    #[test]
    fn edgeless_sem_gives_identity() {
        let sem = GaussianSem::new(4, &[], vec![1.0; 4]).unwrap();
        assert_eq!(sem_to_covariance(&sem).unwrap().matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn root_variance_is_noise_variance() {
        let sem = GaussianSem::new(4, &[(0, 2, 0.7), (1, 2, -0.3), (2, 3, 1.1)], vec![2.0, 0.5, 1.0, 3.0]).unwrap();
        let s = sem_to_covariance(&sem).unwrap();
        for r in sem.graph().roots() {
            assert_close!(s.get(r, r), sem.noise_var()[r], 1e-15);
        }
    }

    #[test]
    fn covariance_matches_matrix_inverse_route() {
        // Σ = (I − B)^{-T} Ω (I − B)^{-1}, evaluated with an explicit inverse
        let sem = GaussianSem::new(
            5,
            &[(0, 2, 0.7), (1, 2, -0.4), (2, 3, 0.9), (2, 4, -1.2), (1, 4, 0.3)],
            vec![1.0, 2.0, 0.5, 1.5, 0.8],
        )
        .unwrap();
        let mut b = DMatrix::<f64>::zeros(5, 5);
        for (a, c, w) in sem.weighted_edges() {
            b[(a, c)] = w;
        }
        let inv = (DMatrix::<f64>::identity(5, 5) - b).try_inverse().unwrap();
        let omega = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sem.noise_var().to_vec()));
        let expected = inv.transpose() * omega * inv;
        let got = sem_to_covariance(&sem).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_close!(got.get(i, j), expected[(i, j)], 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let sem = chain(0.5, 3);
        for noise in NoiseFamily::ALL {
            let a = sample(&sem, 50, noise, 11).unwrap();
            let b = sample(&sem, 50, noise, 11).unwrap();
            let c = sample(&sem, 50, noise, 12).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
        assert!(sample(&sem, 0, NoiseFamily::Gaussian, 1).is_err());
    }

    #[test]
    fn large_sample_matches_exact_covariance() {
        let sem = chain(0.5, 2);
        let exact = sem_to_covariance(&sem).unwrap();
        let x = sample(&sem, 200_000, NoiseFamily::Gaussian, 3).unwrap();
        let est = x.matrix().tr_mul(x.matrix()) / x.n() as f64;
        for i in 0..2 {
            for j in 0..2 {
                assert_close!(est[(i, j)], exact.get(i, j), 0.02);
            }
        }
    }

    #[test]
    fn raw_noise_variances() {
        let sem = GaussianSem::new(1, &[], vec![1.0]).unwrap();
        for noise in NoiseFamily::ALL {
            let x = sample(&sem, 200_000, noise, 5).unwrap();
            let v = x.matrix().column(0).iter().map(|a| a * a).sum::<f64>() / x.n() as f64;
            assert_close!(v, noise.variance(), 0.03 * noise.variance());
        }
    }

    #[test]
    fn edgeless_cross_covariance_vanishes() {
        let sem = GaussianSem::new(3, &[], vec![1.0; 3]).unwrap();
        let x = sample(&sem, 100_000, NoiseFamily::Laplace, 9).unwrap();
        let est = x.matrix().tr_mul(x.matrix()) / x.n() as f64;
        assert_close!(est[(0, 1)], 0.0, 0.03);
        assert_close!(est[(1, 2)], 0.0, 0.03);
    }

    #[test]
    fn conditional_covariance_cases() {
        let s = sem_to_covariance(&chain(0.5, 3)).unwrap();
        let marginal = conditional_covariance(&s, (0, 2), &[]).unwrap();
        assert_eq!(marginal, Matrix2::new(s.get(0, 0), s.get(0, 2), s.get(2, 0), s.get(2, 2)));
        let cond = conditional_covariance(&s, (0, 2), &[1]).unwrap();
        assert_close!(cond[(0, 1)], 0.0, 1e-14);
        assert!(conditional_covariance(&s, (0, 0), &[]).is_err());
        assert!(conditional_covariance(&s, (0, 2), &[2]).is_err());
    }

    #[test]
    fn conditional_covariance_singular_block() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let s = CovarianceMatrix::symmetric(m, Some(10)).unwrap();
        assert!(matches!(
            conditional_covariance(&s, (0, 2), &[1]),
            Err(Error::DegenerateConditioning { .. })
        ));
    }

    #[test]
    fn conditional_covariance_descendant_case_closed_form() {
        // j → k and j → h → ℓ: conditioning the edge (j, k) on a descendant ℓ of j.
        // With V = var X_j, b = β_h β_ℓ and ν² = var(X_ℓ − b X_j), the block is
        // proportional to [[ν², β_k ν²], [β_k ν², β_k² ν² + σ_k² b² + σ_k² ν² / V]]
        // with factor V / (b² V + ν²).
        let (bk, bh, bl) = (0.8, 0.6, -1.3);
        let (sj, sk, sh, sl) = (1.5, 0.7, 1.2, 0.9);
        // nodes: j=0, k=1, h=2, ℓ=3
        let sem = GaussianSem::new(4, &[(0, 1, bk), (0, 2, bh), (2, 3, bl)], vec![sj, sk, sh, sl]).unwrap();
        let s = sem_to_covariance(&sem).unwrap();
        let cond = conditional_covariance(&s, (0, 1), &[3]).unwrap();
        let v = sj;
        let b = bh * bl;
        let nu2 = sl + bl * bl * sh;
        let factor = v / (b * b * v + nu2);
        let expected = Matrix2::new(
            nu2,
            bk * nu2,
            bk * nu2,
            bk * bk * nu2 + sk * b * b + sk * nu2 / v,
        ) * factor;
        for a in 0..2 {
            for c in 0..2 {
                assert_close!(cond[(a, c)], expected[(a, c)], 1e-12);
            }
        }
    }

    #[test]
    fn covariance_rejects_asymmetric_and_indefinite() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(CovarianceMatrix::new(asym), Err(Error::NotSymmetric(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(CovarianceMatrix::new(indef), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn noise_family_parses() {
        assert_eq!("Laplace".parse::<NoiseFamily>().unwrap(), NoiseFamily::Laplace);
        assert!("cauchy".parse::<NoiseFamily>().is_err());
    }
}
