mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use gausstree::chow_liu::chow_liu;
use gausstree::estimators::{empirical_cmi, empirical_mi, partial_correlation, sample_covariance};
use gausstree::graphs::{
    cpdag_of, d_separated, labeled_trees, meek_closure, prufer_decode, prufer_encode, random_labeled_tree,
    random_polytree, shd, v_structures, Cpdag, Skeleton,
};
use gausstree::model::{conditional_covariance, sample, sem_to_covariance, Dag, NoiseFamily};
use gausstree::pc_tree::{pc_tree, pc_tree_from_covariance};
use gausstree::rng::seeded;

use common::{random_pd, random_polytree_sem, subsets_up_to};

fn skeleton_strategy(d: usize) -> impl Strategy<Value = Skeleton> {
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| ((a + 1)..d).map(move |b| (a, b))).collect();
    proptest::sample::subsequence(pairs.clone(), 0..=pairs.len()).prop_map(move |e| Skeleton::new(d, e).unwrap())
}

fn relabel_cpdag(c: &Cpdag, perm: &[usize]) -> Cpdag {
    Cpdag::new(
        c.d(),
        c.directed().iter().map(|&(a, b)| (perm[a], perm[b])),
        c.undirected().iter().map(|&(a, b)| (perm[a], perm[b])),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn prufer_roundtrip(d in 2usize..10, raw in proptest::collection::vec(0usize..1000, 8)) {
        let seq: Vec<usize> = raw.iter().take(d - 2).map(|v| v % d).collect();
        let t = prufer_decode(&seq, d).unwrap();
        prop_assert_eq!(prufer_encode(&t), seq);
    }

    #[test]
    fn random_trees_span(d in 2usize..30, seed in any::<u64>()) {
        let t = random_labeled_tree(d, seed).unwrap();
        prop_assert_eq!(t.skeleton().len(), d - 1);
        prop_assert_eq!(t.skeleton().components(), 1);
    }

    #[test]
    fn skeleton_shd_is_a_metric(a in skeleton_strategy(6), b in skeleton_strategy(6), c in skeleton_strategy(6)) {
        let ab = shd(&a, &b).unwrap();
        prop_assert_eq!(shd(&a, &a).unwrap(), 0);
        prop_assert_eq!(ab, shd(&b, &a).unwrap());
        prop_assert_eq!(ab == 0, a == b);
        prop_assert!(shd(&a, &c).unwrap() <= ab + shd(&b, &c).unwrap());
    }

    #[test]
    fn cpdag_shd_is_a_metric(d in 3usize..8, s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let [a, b, c] = [s1, s2, s3].map(|s| cpdag_of(random_polytree(d, s).unwrap().dag()));
        let ab = shd(&a, &b).unwrap();
        prop_assert_eq!(shd(&a, &a).unwrap(), 0);
        prop_assert_eq!(ab, shd(&b, &a).unwrap());
        prop_assert_eq!(ab == 0, a == b);
        prop_assert!(shd(&a, &c).unwrap() <= ab + shd(&b, &c).unwrap());
    }

    #[test]
    fn orientation_keeps_adjacencies_and_is_closed(d in 3usize..9, seed in any::<u64>(), frac in 0.05f64..1.0) {
        let sem = random_polytree_sem(&mut seeded(seed), d);
        let sigma = sem_to_covariance(&sem).unwrap();
        let cutoff = frac * 0.3;
        if let Ok(fit) = pc_tree_from_covariance(&sigma, cutoff) {
            prop_assert_eq!(&fit.cpdag.skeleton(), &fit.skeleton);
            prop_assert_eq!(meek_closure(&fit.cpdag).unwrap(), fit.cpdag.clone());
            for (&(j, k), _) in fit.sepsets.iter() {
                prop_assert!(!fit.skeleton.contains(j, k));
            }
            prop_assert_eq!(fit.sepsets.len() + fit.skeleton.len(), d * (d - 1) / 2);
        }
    }

    #[test]
    fn pc_tree_commutes_with_relabeling(seed in any::<u64>(), perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let d = 6;
        let sem = random_polytree_sem(&mut seeded(seed), d);
        let data = sample(&sem, 400, NoiseFamily::Gaussian, seed ^ 1).unwrap();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut seeded(perm_seed));
        // column c of the permuted data is node perm[c]
        let direct = pc_tree(&data, 0.1);
        let permuted = pc_tree(&data.permute_columns(&perm).unwrap(), 0.1);
        match (direct, permuted) {
            (Ok(a), Ok(b)) => prop_assert_eq!(relabel_cpdag(&b, &perm), a),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn chow_liu_commutes_with_relabeling(seed in any::<u64>(), perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let d = 7;
        let sem = random_polytree_sem(&mut seeded(seed), d);
        let data = sample(&sem, 300, NoiseFamily::Uniform, seed ^ 2).unwrap();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut seeded(perm_seed));
        let a = chow_liu(&data).unwrap();
        let b = chow_liu(&data.permute_columns(&perm).unwrap()).unwrap();
        let mapped = Skeleton::new(d, b.skeleton.edges().map(|(x, y)| (perm[x], perm[y]))).unwrap();
        // equal unless a weight tie was broken differently
        let weights: BTreeSet<u64> = a.weights.iter().map(|(_, w)| w.to_bits()).collect();
        if weights.len() == d * (d - 1) / 2 {
            prop_assert_eq!(&mapped, a.skeleton.skeleton());
        }
    }
}

#[test]
fn markov_direction_of_faithfulness() {
    for seed in 0..60 {
        let d = 3 + seed as usize % 5;
        let sem = random_polytree_sem(&mut seeded(seed), d);
        let sigma = sem_to_covariance(&sem).unwrap();
        for j in 0..d {
            for k in (j + 1)..d {
                let rest: Vec<usize> = (0..d).filter(|&v| v != j && v != k).collect();
                for s in subsets_up_to(&rest, 2) {
                    if d_separated(sem.graph(), j, k, &s).unwrap() {
                        let rho = partial_correlation(&sigma, j, k, &s).unwrap().value;
                        assert!(rho.abs() <= 1e-10, "ρ({j},{k}|{s:?}) = {rho}");
                    }
                }
            }
        }
    }
}

#[test]
fn partial_correlation_matches_conditional_covariance() {
    let mut rng = seeded(77);
    for i in 0..40 {
        let d = 4 + i % 5;
        let sigma = random_pd(d, &mut rng);
        for j in 0..d {
            for k in (j + 1)..d {
                let rest: Vec<usize> = (0..d).filter(|&v| v != j && v != k).collect();
                for s in subsets_up_to(&rest, 3) {
                    let c = conditional_covariance(&sigma, (j, k), &s).unwrap();
                    let reference = c[(0, 1)] / (c[(0, 0)] * c[(1, 1)]).sqrt();
                    let rho = partial_correlation(&sigma, j, k, &s).unwrap().value;
                    assert!((rho - reference).abs() <= 1e-10);
                }
            }
        }
    }
}

#[test]
fn cpdag_depends_only_on_skeleton_and_v_structures() {
    let d = 5;
    for tree in labeled_trees(d) {
        let edges: Vec<(usize, usize)> = tree.edges().collect();
        let mut classes: BTreeMap<Vec<(usize, usize, usize)>, Cpdag> = BTreeMap::new();
        for mask in 0..(1u32 << edges.len()) {
            let oriented: Vec<(usize, usize)> = edges
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| if mask >> i & 1 == 1 { (b, a) } else { (a, b) })
                .collect();
            let dag = Dag::new(d, oriented).unwrap();
            let c = cpdag_of(&dag);
            match classes.get(&v_structures(&dag)) {
                Some(existing) => assert_eq!(existing, &c),
                None => {
                    classes.insert(v_structures(&dag), c);
                }
            }
        }
        let distinct: BTreeSet<_> = classes.values().map(|c| format!("{c:?}")).collect();
        assert_eq!(distinct.len(), classes.len());
    }
}

#[test]
fn mutual_information_forms_and_symmetries() {
    let mut rng = seeded(5);
    for _ in 0..500 {
        let s = random_pd(3, &mut rng);
        let (x, y, z) = (0, 1, 2);
        let mi = |a, b| empirical_mi(&s, a, b).unwrap().value();
        let cmi = |a, b, given| empirical_cmi(&s, a, b, given).unwrap().value();
        // Î(X;Y) − Î(X;Z) = Î(X;Y|Z) − Î(X;Z|Y)
        assert!(((mi(x, y) - mi(x, z)) - (cmi(x, y, z) - cmi(x, z, y))).abs() <= 1e-10);
        assert_eq!(mi(x, y), mi(y, x));
        assert!((cmi(y, z, x) - cmi(z, y, x)).abs() <= 1e-12);
        assert!(mi(x, z) >= 0.0 && cmi(y, z, x) >= 0.0);
        // ρ-form against the regression form ½ ln(1 + β̂² σ̂_x² / σ̂²_{y|x})
        let m = s.matrix();
        let beta = m[(x, y)] / m[(x, x)];
        let resid = m[(y, y)] - beta * beta * m[(x, x)];
        assert!((mi(x, y) - 0.5 * (beta * beta * m[(x, x)] / resid).ln_1p()).abs() <= 1e-12);
    }
}

#[test]
fn large_sample_covariance_converges() {
    let sem = random_polytree_sem(&mut seeded(8), 5);
    let exact = sem_to_covariance(&sem).unwrap();
    let est = sample_covariance(&sample(&sem, 100_000, NoiseFamily::Gaussian, 3).unwrap());
    assert!((est.matrix() - exact.matrix()).abs().max() < 0.03);
}
