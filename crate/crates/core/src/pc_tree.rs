//! PC-Tree: skeleton discovery with marginal and single-node conditional
//! independence tests, followed by v-structure detection and Meek closure.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result, Separator};
use crate::estimators::{ci_decide, partial_correlation_small, sample_covariance};
use crate::graphs::{Cpdag, Pdag, Skeleton};
use crate::model::{CovarianceMatrix, SampleMatrix};

pub const DEFAULT_CUTOFF: f64 = 0.05;

/// Accepting conditioners `S(j, k)` for every pair left non-adjacent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeparationSets {
    sets: BTreeMap<(usize, usize), BTreeSet<Separator>>,
}

impl SeparationSets {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, j: usize, k: usize, sep: BTreeSet<Separator>) {
        self.sets.insert(ordered(j, k), sep);
    }

    pub fn get(&self, j: usize, k: usize) -> Option<&BTreeSet<Separator>> {
        self.sets.get(&ordered(j, k))
    }

    /// Whether `ℓ ∈ S(j, k)`; the empty-set marker never matches a node.
    pub fn separates(&self, j: usize, k: usize, l: usize) -> Option<bool> {
        self.get(j, k).map(|s| s.contains(&Separator::Node(l)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &BTreeSet<Separator>)> {
        self.sets.iter()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::InvalidParameter(format!("cutoff must lie in (0, 1), got {cutoff}")));
    }
    Ok(())
}

/// Tests every pair against `∅` and each single other node, always running
/// all `d − 1` tests. The pair becomes an edge iff every test rejects
/// independence; otherwise the accepting conditioners are recorded.
pub fn pc_tree_skeleton(sigma_hat: &CovarianceMatrix, cutoff: f64) -> Result<(Skeleton, SeparationSets)> {
    check_cutoff(cutoff)?;
    let d = sigma_hat.d();
    if d < 2 {
        return Err(Error::InvalidParameter("PC-Tree needs at least two variables".into()));
    }
    let m = sigma_hat.matrix();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| ((j + 1)..d).map(move |k| (j, k))).collect();
    let verdicts = pairs
        .par_iter()
        .map(|&(j, k)| {
            let conditioners = std::iter::once(Separator::Empty)
                .chain((0..d).filter(|&l| l != j && l != k).map(Separator::Node));
            let mut accepted = BTreeSet::new();
            for sep in conditioners {
                let given = match sep {
                    Separator::Empty => None,
                    Separator::Node(l) => Some(l),
                };
                let rho = partial_correlation_small(m, j, k, given).map_err(|e| e.in_pair((j, k), Some(sep)))?;
                if ci_decide(rho, cutoff).independent() {
                    accepted.insert(sep);
                }
            }
            Ok(((j, k), accepted))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut edges = Vec::new();
    let mut sepsets = SeparationSets::new();
    for ((j, k), accepted) in verdicts {
        if accepted.is_empty() {
            edges.push((j, k));
        } else {
            sepsets.insert(j, k, accepted);
        }
    }
    Ok((Skeleton::new(d, edges)?, sepsets))
}

/// Orients every unshielded triple `j − ℓ − k` with `ℓ ∉ S(j, k)` as
/// `j → ℓ ← k`, then closes under Meek rules R1–R4.
pub fn orient(skeleton: &Skeleton, sepsets: &SeparationSets) -> Result<Cpdag> {
    let adj = skeleton.adjacency();
    // edge (a, b) oriented a → b, with the triple that forced it
    let mut forced: BTreeMap<(usize, usize), (usize, usize, usize)> = BTreeMap::new();
    for (l, nb) in adj.iter().enumerate() {
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if skeleton.contains(a, b) {
                    continue;
                }
                let (j, k) = ordered(a, b);
                let separated = sepsets.separates(j, k, l).ok_or(Error::MissingSeparationSet(j, k))?;
                if separated {
                    continue;
                }
                let triple = (j, l, k);
                for parent in [j, k] {
                    if let Some(&other) = forced.get(&(l, parent)) {
                        return Err(Error::OrientationConflict {
                            edge: ordered(parent, l),
                            first: other,
                            second: triple,
                        });
                    }
                    forced.entry((parent, l)).or_insert(triple);
                }
            }
        }
    }
    let mut pdag = Pdag::from_skeleton(skeleton);
    for &(a, b) in forced.keys() {
        pdag.orient(a, b);
    }
    pdag.close_under_meek_rules();
    pdag.into_cpdag()
}

/// Skeleton, separation sets and CPDAG of one PC-Tree run.
#[derive(Debug, Clone)]
pub struct PcTreeFit {
    pub skeleton: Skeleton,
    pub sepsets: SeparationSets,
    pub cpdag: Cpdag,
}

pub fn pc_tree_from_covariance(sigma_hat: &CovarianceMatrix, cutoff: f64) -> Result<PcTreeFit> {
    let (skeleton, sepsets) = pc_tree_skeleton(sigma_hat, cutoff)?;
    let cpdag = orient(&skeleton, &sepsets)?;
    Ok(PcTreeFit {
        skeleton,
        sepsets,
        cpdag,
    })
}

pub fn pc_tree(data: &SampleMatrix, cutoff: f64) -> Result<Cpdag> {
    Ok(pc_tree_from_covariance(&sample_covariance(data), cutoff)?.cpdag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{cpdag_of, meek_closure, PairStatus};
    use crate::model::{sem_to_covariance, GaussianSem};

    fn exact(d: usize, edges: &[(usize, usize, f64)]) -> CovarianceMatrix {
        sem_to_covariance(&GaussianSem::new(d, edges, vec![1.0; d]).unwrap()).unwrap()
    }

    fn sep(items: &[Separator]) -> BTreeSet<Separator> {
        items.iter().copied().collect()
    }

    #[test]
    fn collider_is_found_and_oriented() {
        let sigma = exact(3, &[(0, 2, 0.5), (1, 2, 0.5)]);
        let (skel, sepsets) = pc_tree_skeleton(&sigma, 0.1).unwrap();
        assert_eq!(skel.edges().collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
        assert_eq!(sepsets.get(0, 1), Some(&sep(&[Separator::Empty])));
        let c = orient(&skel, &sepsets).unwrap();
        assert_eq!(c.directed().iter().copied().collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn chain_stays_undirected() {
        let sigma = exact(3, &[(0, 1, 0.5), (1, 2, 0.5)]);
        let fit = pc_tree_from_covariance(&sigma, 0.1).unwrap();
        assert_eq!(fit.skeleton.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert_eq!(fit.sepsets.get(0, 2), Some(&sep(&[Separator::Node(1)])));
        assert!(fit.cpdag.directed().is_empty());
        assert_eq!(fit.cpdag.undirected().len(), 2);
    }

    #[test]
    fn rule1_orients_extra_leaf() {
        let skel = Skeleton::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap();
        let mut s = SeparationSets::new();
        s.insert(0, 2, sep(&[Separator::Empty]));
        s.insert(0, 3, sep(&[Separator::Node(1)]));
        s.insert(2, 3, sep(&[Separator::Node(1)]));
        let c = orient(&skel, &s).unwrap();
        assert_eq!(c.status(0, 1), PairStatus::Directed(0, 1));
        assert_eq!(c.status(2, 1), PairStatus::Directed(2, 1));
        assert_eq!(c.status(1, 3), PairStatus::Directed(1, 3));
    }

    #[test]
    fn empty_marker_does_not_hide_collider() {
        // S(0, 2) = {∅} only: node 1 is absent, so 0 → 1 ← 2
        let skel = Skeleton::new(3, [(0, 1), (1, 2)]).unwrap();
        let mut s = SeparationSets::new();
        s.insert(0, 2, sep(&[Separator::Empty]));
        let c = orient(&skel, &s).unwrap();
        assert_eq!(c.directed().len(), 2);
        // both markers present: 1 separates, no collider
        s.insert(0, 2, sep(&[Separator::Empty, Separator::Node(1)]));
        assert!(orient(&skel, &s).unwrap().directed().is_empty());
    }

    #[test]
    fn conflicting_colliders_fail_loudly() {
        // path 0 − 1 − 2 − 3 with both 1 and 2 claimed as colliders
        let skel = Skeleton::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut s = SeparationSets::new();
        s.insert(0, 2, sep(&[Separator::Empty]));
        s.insert(1, 3, sep(&[Separator::Empty]));
        s.insert(0, 3, sep(&[Separator::Empty]));
        match orient(&skel, &s) {
            Err(Error::OrientationConflict { edge: (1, 2), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_sepset_is_an_error() {
        let skel = Skeleton::new(3, [(0, 1), (1, 2)]).unwrap();
        assert!(matches!(orient(&skel, &SeparationSets::new()), Err(Error::MissingSeparationSet(0, 2))));
    }

    #[test]
    fn two_dependent_nodes() {
        let sigma = exact(2, &[(0, 1, 0.4)]);
        let fit = pc_tree_from_covariance(&sigma, DEFAULT_CUTOFF).unwrap();
        assert_eq!(fit.cpdag.undirected().iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
        assert!(fit.sepsets.is_empty());
    }

    #[test]
    fn polyforest_is_not_padded() {
        let sigma = exact(4, &[(0, 1, 0.5), (2, 3, 0.5)]);
        let (skel, _) = pc_tree_skeleton(&sigma, 0.1).unwrap();
        assert_eq!(skel.len(), 2);
        assert!(skel.is_forest());
    }

    #[test]
    fn oracle_mode_matches_cpdag_of_truth() {
        let edges = [(0, 2, 0.4), (1, 2, -0.45), (2, 3, 0.3), (4, 3, 0.35), (3, 5, 0.25)];
        let sem = GaussianSem::new(6, &edges, vec![1.0; 6]).unwrap();
        let fit = pc_tree_from_covariance(&sem_to_covariance(&sem).unwrap(), 0.02).unwrap();
        assert_eq!(fit.skeleton, sem.graph().skeleton());
        assert_eq!(fit.cpdag, cpdag_of(sem.graph()));
        assert_eq!(meek_closure(&fit.cpdag).unwrap(), fit.cpdag);
    }

    #[test]
    fn bad_cutoff_rejected() {
        let sigma = exact(2, &[(0, 1, 0.4)]);
        for c in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(pc_tree_skeleton(&sigma, c).is_err());
        }
    }

    #[test]
    fn degeneracy_carries_context() {
        let s = CovarianceMatrix::symmetric(nalgebra::DMatrix::from_diagonal_element(3, 3, 0.0), None).unwrap();
        match pc_tree_skeleton(&s, 0.1) {
            Err(Error::Pair { conditioner: Some(Separator::Empty), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
