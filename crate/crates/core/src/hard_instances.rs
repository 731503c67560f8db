//! Adversarial constructions: three-node gadgets that are hard to tell apart,
//! the ensemble behind the structure-learning lower bound, the strength of
//! tree-faithfulness of a polytree SEM, and coefficient samplers.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::estimators::partial_correlation_small;
use crate::graphs::{random_labeled_tree_with, v_structures, DirectedTree, UndirectedTree};
use crate::model::{sem_to_covariance, CovarianceMatrix, GaussianSem};
use crate::rng::{self, Rng};

/// Node indices used by the gadgets.
pub const X: usize = 0;
pub const Y: usize = 1;
pub const Z: usize = 2;

/// Two nearby 3×3 covariances over `(X, Y, Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GadgetPair {
    pub sigma1: CovarianceMatrix,
    pub sigma2: CovarianceMatrix,
    pub epsilon: f64,
}

/// The three labeled trees on `{X, Y, Z}`, each rooted at `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GadgetTree {
    /// `Y − X − Z`
    T1,
    /// `X − Y − Z`
    T2,
    /// `X − Z − Y`
    T3,
}

impl GadgetTree {
    pub const ALL: [GadgetTree; 3] = [GadgetTree::T1, GadgetTree::T2, GadgetTree::T3];

    pub fn tree(self) -> DirectedTree {
        let edges = match self {
            GadgetTree::T1 => [(X, Y), (X, Z)],
            GadgetTree::T2 => [(X, Y), (Y, Z)],
            GadgetTree::T3 => [(X, Z), (Z, Y)],
        };
        UndirectedTree::new(3, edges)
            .and_then(|t| t.orient_from(X))
            .expect("three-node trees are valid")
    }
}

fn sym3(var: [f64; 3], xy: f64, xz: f64, yz: f64) -> CovarianceMatrix {
    let m = DMatrix::from_row_slice(3, 3, &[var[0], xy, xz, xy, var[1], yz, xz, yz, var[2]]);
    CovarianceMatrix::new(m).expect("gadget covariances are positive definite")
}

fn check_epsilon(epsilon: f64, upper: f64) -> Result<()> {
    if !(epsilon >= 0.0 && epsilon < upper) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in [0, {upper}), got {epsilon}")));
    }
    Ok(())
}

/// Marginals on `(X, Y, Z)` of `X = (1+ε)H + N`, `Y = H + N`, `Z = H + N`
/// (independent standard noises, latent `H ~ N(0, 1)`), and of the same
/// model with the roles of `X` and `Y` swapped.
pub fn nonrealizable_gadget(epsilon: f64) -> Result<GadgetPair> {
    check_epsilon(epsilon, 1.0)?;
    let a = 1.0 + epsilon;
    Ok(GadgetPair {
        sigma1: sym3([a * a + 1.0, 2.0, 2.0], a, a, 1.0),
        sigma2: sym3([2.0, a * a + 1.0, 2.0], a, 1.0, a),
        epsilon,
    })
}

/// SEMs of the two tree-structured gadgets:
/// `Y = (1 − √ε) X + √ε N`, and `Z = ½ X + ½ N` (first) or `Z = ½ Y + ½ N`
/// (second), with `X ~ N(0, 1)`.
pub fn realizable_gadget_sems(epsilon: f64) -> Result<(GaussianSem, GaussianSem)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let b = 1.0 - epsilon.sqrt();
    let noise = vec![1.0, epsilon, 0.25];
    let first = GaussianSem::new(3, &[(X, Y, b), (X, Z, 0.5)], noise.clone())?;
    let second = GaussianSem::new(3, &[(X, Y, b), (Y, Z, 0.5)], noise)?;
    Ok((first, second))
}

pub fn realizable_gadget(epsilon: f64) -> Result<GadgetPair> {
    let (first, second) = realizable_gadget_sems(epsilon)?;
    Ok(GadgetPair {
        sigma1: sem_to_covariance(&first)?,
        sigma2: sem_to_covariance(&second)?,
        epsilon,
    })
}

/// Largest `c` allowed by [`structure_lb_instance`]: `c² ≤ 1/5`.
pub fn max_lb_strength() -> f64 {
    (0.2f64).sqrt()
}

/// Uniform random tree oriented away from node 0 with every coefficient
/// `√2·c` and unit noise.
pub fn structure_lb_instance(d: usize, c: f64, seed: u64) -> Result<GaussianSem> {
    structure_lb_instance_with(&mut rng::seeded(seed), d, c)
}

pub fn structure_lb_instance_with(rng: &mut Rng, d: usize, c: f64) -> Result<GaussianSem> {
    if !(c > 0.0 && c * c <= 0.2 + 1e-15) {
        return Err(Error::InvalidParameter(format!("need 0 < c and c² ≤ 1/5, got c = {c}")));
    }
    let tree = random_labeled_tree_with(rng, d)?.orient_from(0)?;
    let beta = 2f64.sqrt() * c;
    let edges: Vec<_> = tree.edges().iter().map(|&(p, k)| (p, k, beta)).collect();
    GaussianSem::new(d, &edges, vec![1.0; d])
}

/// Two SEMs on `d ≥ 3` nodes with coefficient `β = √2·c` and unit noise:
/// `0 → 1 → 2` versus `1 → 2 → 0`, both with `1 → k` for every `k ≥ 3`.
pub fn neighbouring_tree_pair(d: usize, c: f64) -> Result<(GaussianSem, GaussianSem)> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!("need d ≥ 3, got {d}")));
    }
    let beta = 2f64.sqrt() * c;
    let rest: Vec<_> = (3..d).map(|k| (1, k, beta)).collect();
    let mut first = vec![(0, 1, beta), (1, 2, beta)];
    let mut second = vec![(1, 2, beta), (2, 0, beta)];
    first.extend(&rest);
    second.extend(&rest);
    Ok((
        GaussianSem::new(d, &first, vec![1.0; d])?,
        GaussianSem::new(d, &second, vec![1.0; d])?,
    ))
}

/// `D(P ‖ P′)` for [`neighbouring_tree_pair`]:
/// `½(−β⁴ + β⁶ + 2(β² + β⁴ − β³))` with `β = √2·c`.
pub fn neighbouring_tree_pair_kl(c: f64) -> f64 {
    let b = 2f64.sqrt() * c;
    0.5 * (-b.powi(4) + b.powi(6) + 2.0 * (b * b + b.powi(4) - b.powi(3)))
}

/// Strength of tree-faithfulness of a polytree SEM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Faithfulness {
    /// No adjacencies and no v-structures: nothing to bound.
    Unconstrained,
    /// The smallest required `|ρ|`.
    Strength(f64),
}

impl Faithfulness {
    pub fn value(self) -> Option<f64> {
        match self {
            Faithfulness::Unconstrained => None,
            Faithfulness::Strength(c) => Some(c),
        }
    }

    /// Whether the SEM is `c`-strong tree-faithful.
    pub fn at_least(self, c: f64) -> bool {
        self.value().is_none_or(|v| v >= c)
    }
}

impl fmt::Display for Faithfulness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Faithfulness::Unconstrained => write!(f, "unconstrained"),
            Faithfulness::Strength(c) => write!(f, "{c}"),
        }
    }
}

/// Minimum of `|ρ(j, k | ℓ)|` over adjacent `j, k` with `ℓ` empty or any
/// other node, and of `|ρ(j, k | ℓ)|` over v-structures `j → ℓ ← k`,
/// on the exact covariance. Polyforests are accepted.
pub fn faithfulness_parameter(sem: &GaussianSem) -> Result<Faithfulness> {
    let g = sem.graph();
    if !g.skeleton().is_forest() {
        return Err(Error::NotPolytree("skeleton has a cycle".into()));
    }
    let sigma = sem_to_covariance(sem)?;
    let m = sigma.matrix();
    let d = sem.d();
    let mut min = f64::INFINITY;
    for &(j, k) in g.edges() {
        let given = std::iter::once(None).chain((0..d).filter(|&l| l != j && l != k).map(Some));
        for l in given {
            min = min.min(partial_correlation_small(m, j, k, l)?.abs());
        }
    }
    for (a, c, b) in v_structures(g) {
        min = min.min(partial_correlation_small(m, a, b, Some(c))?.abs());
    }
    Ok(if min.is_finite() {
        Faithfulness::Strength(min)
    } else {
        Faithfulness::Unconstrained
    })
}

/// `count` coefficients with magnitude uniform on `[0.1, 0.5)` and a fair
/// random sign.
pub fn iid_beta_sampler_with(rng: &mut Rng, count: usize) -> Vec<f64> {
    (0..count)
        .map(|_| {
            let m: f64 = rng.random_range(0.1..0.5);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect()
}

pub fn iid_beta_sampler(count: usize, seed: u64) -> Vec<f64> {
    iid_beta_sampler_with(&mut rng::seeded(seed), count)
}

/// `β_k = α_k + z` with `α_k` from [`iid_beta_sampler_with`] and one shared
/// `z` uniform on `[−z_scale, z_scale]`. With `z_scale = 0` the output equals
/// the i.i.d. sampler's.
pub fn agnostic_beta_sampler_with(rng: &mut Rng, count: usize, z_scale: f64) -> Result<Vec<f64>> {
    if !(z_scale >= 0.0 && z_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("z_scale must be non-negative, got {z_scale}")));
    }
    let mut beta = iid_beta_sampler_with(rng, count);
    if z_scale > 0.0 {
        let z = rng.random_range(-z_scale..=z_scale);
        beta.iter_mut().for_each(|b| *b += z);
    }
    Ok(beta)
}

pub fn agnostic_beta_sampler(count: usize, z_scale: f64, seed: u64) -> Result<Vec<f64>> {
    agnostic_beta_sampler_with(&mut rng::seeded(seed), count, z_scale)
}
