//! Chow-Liu tree learning: a maximum-weight spanning tree under plug-in
//! Gaussian mutual information, oriented away from an arbitrary root.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{mi_from_matrix, sample_covariance, MiEstimate};
use crate::graphs::DisjointSet;
pub use crate::graphs::{DirectedTree, UndirectedTree};
use crate::model::{CovarianceMatrix, SampleMatrix};

/// Complete graph on `0..d` with a non-negative weight on every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCompleteGraph {
    d: usize,
    /// Row-major upper triangle: `(0,1), (0,2), …, (1,2), …`.
    weights: Vec<f64>,
}

fn pair_index(d: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    a * (2 * d - a - 1) / 2 + (b - a - 1)
}

fn pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |a| ((a + 1)..d).map(move |b| (a, b)))
}

impl WeightedCompleteGraph {
    /// Builds the graph from a weight function evaluated on every pair `a < b`.
    pub fn from_fn(d: usize, mut weight: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let weights: Vec<f64> = pairs(d).map(|(a, b)| weight(a, b)).collect();
        WeightedCompleteGraph::from_weights(d, weights)
    }

    fn from_weights(d: usize, weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            let (a, b) = pairs(d).nth(i).expect("index within pair count");
            return Err(Error::InvalidParameter(format!("weight {w} on ({a}, {b}) is not finite and non-negative")));
        }
        Ok(WeightedCompleteGraph { d, weights })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        assert!(a != b && a < self.d && b < self.d, "pair ({a}, {b}) outside the graph");
        self.weights[pair_index(self.d, a, b)]
    }

    /// `((a, b), w)` for every pair `a < b` in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        pairs(self.d).zip(self.weights.iter().copied())
    }
}

/// Weighted complete graph of plug-in mutual informations.
pub fn pairwise_mi_graph(sigma_hat: &CovarianceMatrix) -> Result<WeightedCompleteGraph> {
    let d = sigma_hat.d();
    let m = sigma_hat.matrix();
    let all: Vec<(usize, usize)> = pairs(d).collect();
    let weights = all
        .par_iter()
        .map(|&(a, b)| {
            mi_from_matrix(m, a, b)
                .map(MiEstimate::value)
                .map_err(|e| e.in_pair((a, b), None))
        })
        .collect::<Result<Vec<f64>>>()?;
    WeightedCompleteGraph::from_weights(d, weights)
}

/// Kruskal over edges sorted by weight (descending), ties broken by the
/// lexicographically smaller pair.
pub fn max_weight_spanning_tree(g: &WeightedCompleteGraph) -> UndirectedTree {
    let d = g.d();
    let mut edges: Vec<((usize, usize), f64)> = g.iter().collect();
    edges.sort_by(|(pa, wa), (pb, wb)| wb.total_cmp(wa).then(pa.cmp(pb)));
    let mut dsu = DisjointSet::new(d);
    let mut tree = Vec::with_capacity(d.saturating_sub(1));
    for ((a, b), _) in edges {
        if dsu.union(a, b) {
            tree.push((a, b));
            if tree.len() + 1 == d {
                break;
            }
        }
    }
    UndirectedTree::new(d, tree).expect("Kruskal on a complete graph spans it")
}

pub fn orient_arbitrary(t: &UndirectedTree, root: usize) -> Result<DirectedTree> {
    t.orient_from(root)
}

/// Output of the Chow-Liu learner.
#[derive(Debug, Clone)]
pub struct ChowLiuFit {
    /// The skeleton oriented away from node 0.
    pub tree: DirectedTree,
    pub skeleton: UndirectedTree,
    pub weights: WeightedCompleteGraph,
}

/// Chow-Liu on an already estimated (or exact) covariance.
pub fn chow_liu_from_covariance(sigma_hat: &CovarianceMatrix) -> Result<ChowLiuFit> {
    if sigma_hat.d() < 2 {
        return Err(Error::InvalidParameter("Chow-Liu needs at least two variables".into()));
    }
    let weights = pairwise_mi_graph(sigma_hat)?;
    let skeleton = max_weight_spanning_tree(&weights);
    let tree = orient_arbitrary(&skeleton, 0)?;
    Ok(ChowLiuFit {
        tree,
        skeleton,
        weights,
    })
}

pub fn chow_liu(data: &SampleMatrix) -> Result<ChowLiuFit> {
    chow_liu_from_covariance(&sample_covariance(data))
}
