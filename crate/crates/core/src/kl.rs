//! KL divergence between zero-mean Gaussians, M-projection onto a tree and
//! exhaustive search for the best tree on small graphs.
//!
//! All logarithms are natural.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::mi_from_matrix;
use crate::graphs::{labeled_trees, DirectedTree, UndirectedTree};
use crate::model::{sem_to_covariance, CovarianceMatrix, GaussianSem};

pub const MAX_BRUTEFORCE_D: usize = 8;

fn log_det_and_factor(sigma: &DMatrix<f64>) -> Result<(f64, nalgebra::Cholesky<f64, nalgebra::Dyn>)> {
    let chol = sigma.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    Ok((log_det, chol))
}

/// `D(N(0, Σ₀) ‖ N(0, Σ₁)) = ½ (tr(Σ₁⁻¹Σ₀) − d + ln det Σ₁ − ln det Σ₀)`.
pub fn gaussian_kl(sigma0: &CovarianceMatrix, sigma1: &CovarianceMatrix) -> Result<f64> {
    if sigma0.d() != sigma1.d() {
        return Err(Error::DimensionMismatch {
            expected: sigma0.d(),
            found: sigma1.d(),
        });
    }
    let (ld0, _) = log_det_and_factor(sigma0.matrix())?;
    let (ld1, chol1) = log_det_and_factor(sigma1.matrix())?;
    let trace = chol1.solve(sigma0.matrix()).trace();
    Ok((0.5 * (trace - sigma0.d() as f64 + ld1 - ld0)).max(0.0))
}

/// The tree-structured Gaussian closest (in `D(P ‖ ·)`) to a given one.
#[derive(Debug, Clone)]
pub struct TreeProjection {
    pub tree: DirectedTree,
    /// Regression of each node on its tree parent.
    pub projected: GaussianSem,
}

impl TreeProjection {
    pub fn implied_covariance(&self) -> Result<CovarianceMatrix> {
        sem_to_covariance(&self.projected)
    }
}

/// Moment matching along the tree: `β_k = Σ_{k,p} / Σ_{p,p}` and
/// `σ_k² = Σ_{kk} − β_k² Σ_{pp}`; the root keeps its variance.
pub fn project_onto_tree(sigma: &CovarianceMatrix, t: &DirectedTree) -> Result<TreeProjection> {
    check_dims(sigma, t)?;
    let m = sigma.matrix();
    let mut beta = BTreeMap::new();
    let mut noise = Vec::with_capacity(t.d());
    for k in 0..t.d() {
        match t.parent(k) {
            None => noise.push(m[(k, k)]),
            Some(p) => {
                let spp = m[(p, p)];
                if spp.is_nan() || spp <= 0.0 {
                    return Err(Error::DegenerateVariance {
                        node: p,
                        given: Vec::new(),
                        value: spp,
                    });
                }
                let b = m[(k, p)] / spp;
                beta.insert((p, k), b);
                noise.push(m[(k, k)] - b * b * spp);
            }
        }
    }
    let projected = GaussianSem::from_parts(t.dag().clone(), beta, noise)?;
    Ok(TreeProjection {
        tree: t.clone(),
        projected,
    })
}

fn check_dims(sigma: &CovarianceMatrix, t: &DirectedTree) -> Result<()> {
    if sigma.d() != t.d() {
        return Err(Error::DimensionMismatch {
            expected: t.d(),
            found: sigma.d(),
        });
    }
    Ok(())
}

/// Terms of `D(P ‖ P_T) = −Σᵢ I(Xᵢ; X_pa(i)) − H(X) + Σᵢ H(Xᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlDecomposition {
    /// `(parent, child, I)` for every tree edge.
    pub edge_mutual_information: Vec<(usize, usize, f64)>,
    pub joint_entropy: f64,
    pub marginal_entropies: Vec<f64>,
    pub total: f64,
}

fn gaussian_entropy(log_det: f64, d: usize) -> f64 {
    0.5 * (d as f64 * (2.0 * PI * E).ln() + log_det)
}

pub fn kl_decomposition(sigma: &CovarianceMatrix, t: &DirectedTree) -> Result<KlDecomposition> {
    check_dims(sigma, t)?;
    let m = sigma.matrix();
    let (log_det, _) = log_det_and_factor(m)?;
    let joint_entropy = gaussian_entropy(log_det, t.d());
    let marginal_entropies: Vec<f64> = (0..t.d()).map(|i| gaussian_entropy(m[(i, i)].ln(), 1)).collect();
    let edge_mutual_information = t
        .edges()
        .iter()
        .map(|&(p, c)| Ok((p, c, mi_from_matrix(m, p, c)?.value())))
        .collect::<Result<Vec<_>>>()?;
    let total = -edge_mutual_information.iter().map(|e| e.2).sum::<f64>() - joint_entropy
        + marginal_entropies.iter().sum::<f64>();
    Ok(KlDecomposition {
        edge_mutual_information,
        joint_entropy,
        marginal_entropies,
        total: total.max(0.0),
    })
}

/// `D(P ‖ P_T)` through the entropy / mutual-information decomposition.
pub fn kl_to_tree(sigma: &CovarianceMatrix, t: &DirectedTree) -> Result<f64> {
    Ok(kl_decomposition(sigma, t)?.total)
}

/// Exhaustive minimization of `D(P ‖ P_T)` over all labeled trees.
///
/// The winning tree is oriented away from node 0; ties go to the first tree
/// in Prüfer order.
pub fn best_tree_bruteforce(sigma: &CovarianceMatrix) -> Result<(DirectedTree, f64)> {
    let d = sigma.d();
    if d > MAX_BRUTEFORCE_D {
        return Err(Error::TooLargeForEnumeration {
            d,
            max: MAX_BRUTEFORCE_D,
        });
    }
    let m = sigma.matrix();
    let (log_det, _) = log_det_and_factor(m)?;
    if d == 1 {
        let t = UndirectedTree::new(1, [])?.orient_from(0)?;
        return Ok((t, 0.0));
    }
    let mut mi = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in (a + 1)..d {
            let v = mi_from_matrix(m, a, b)?.value();
            mi[(a, b)] = v;
            mi[(b, a)] = v;
        }
    }
    let base = 0.5 * ((0..d).map(|i| m[(i, i)].ln()).sum::<f64>() - log_det);
    let trees: Vec<UndirectedTree> = labeled_trees(d).collect();
    let (best, value) = trees
        .par_iter()
        .enumerate()
        .map(|(i, t)| (i, base - t.edges().map(|(a, b)| mi[(a, b)]).sum::<f64>()))
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |x, y| match x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)) {
                std::cmp::Ordering::Greater => y,
                _ => x,
            },
        );
    Ok((trees[best].orient_from(0)?, value.max(0.0)))
}
