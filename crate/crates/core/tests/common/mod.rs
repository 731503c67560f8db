#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng as _;

use gausstree::graphs::{random_directed_tree_with, random_polytree_with};
use gausstree::hard_instances::iid_beta_sampler_with;
use gausstree::model::{CovarianceMatrix, Dag, GaussianSem};
use gausstree::rng::Rng;

pub fn random_pd(d: usize, rng: &mut Rng) -> CovarianceMatrix {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    CovarianceMatrix::new(&a * a.transpose() + DMatrix::identity(d, d) * 0.3).unwrap()
}

/// Complete-DAG SEM (`i → j` for all `i < j`) with covariance `sigma`, by
/// successive regressions.
pub fn sem_from_covariance(sigma: &CovarianceMatrix) -> GaussianSem {
    let d = sigma.d();
    let m = sigma.matrix();
    let mut edges = Vec::new();
    let mut noise = Vec::with_capacity(d);
    for k in 0..d {
        if k == 0 {
            noise.push(m[(0, 0)]);
            continue;
        }
        let prev: Vec<usize> = (0..k).collect();
        let a = sigma.submatrix(&prev);
        let b = DMatrix::from_fn(k, 1, |i, _| m[(i, k)]);
        let coef = a.clone().cholesky().unwrap().solve(&b);
        let explained = (b.transpose() * &coef)[(0, 0)];
        for (p, &c) in coef.iter().enumerate() {
            edges.push((p, k, c));
        }
        noise.push(m[(k, k)] - explained);
    }
    GaussianSem::new(d, &edges, noise).unwrap()
}

fn with_iid_betas(rng: &mut Rng, dag: &Dag) -> GaussianSem {
    let beta = iid_beta_sampler_with(rng, dag.edges().len());
    let edges: Vec<_> = dag.edges().iter().zip(beta).map(|(&(p, c), b)| (p, c, b)).collect();
    GaussianSem::new(dag.d(), &edges, vec![1.0; dag.d()]).unwrap()
}

pub fn random_polytree_sem(rng: &mut Rng, d: usize) -> GaussianSem {
    let p = random_polytree_with(rng, d).unwrap();
    with_iid_betas(rng, p.dag())
}

pub fn random_tree_sem(rng: &mut Rng, d: usize) -> GaussianSem {
    let t = random_directed_tree_with(rng, d).unwrap();
    with_iid_betas(rng, t.dag())
}

/// All subsets of `items` with at most `k` elements.
pub fn subsets_up_to(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for size in 1..=k.min(items.len()) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.iter().map(|&i| items[i]).collect());
            let mut i = size;
            while i > 0 && idx[i - 1] == items.len() - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}
