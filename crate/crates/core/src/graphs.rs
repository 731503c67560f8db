//! Graph-theoretic ground truth: skeletons, trees, polytrees and CPDAGs,
//! d-separation, the Meek orientation rules, structural Hamming distance and
//! uniform random tree generation.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::model::Dag;
use crate::rng::{self, Rng};

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// An undirected simple graph over `0..d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Skeleton {
    d: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Skeleton {
    /// Edges may be given in either orientation; duplicates collapse.
    pub fn new(d: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            for v in [a, b] {
                if v >= d {
                    return Err(Error::NodeOutOfRange { node: v, d });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            set.insert(ordered(a, b));
        }
        Ok(Skeleton { d, edges: set })
    }

    pub fn empty(d: usize) -> Self {
        Skeleton {
            d,
            edges: BTreeSet::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Edges as `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&ordered(a, b))
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.d];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let mut dsu = DisjointSet::new(self.d);
        let mut count = self.d;
        for &(a, b) in &self.edges {
            if dsu.union(a, b) {
                count -= 1;
            }
        }
        count
    }

    /// Acyclic (every component a tree).
    pub fn is_forest(&self) -> bool {
        self.components() + self.edges.len() == self.d
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.d && self.is_forest()
    }
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// A spanning tree: connected, `d − 1` edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UndirectedTree(Skeleton);

impl UndirectedTree {
    pub fn new(d: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        UndirectedTree::from_skeleton(Skeleton::new(d, edges)?)
    }

    pub fn from_skeleton(s: Skeleton) -> Result<Self> {
        if !s.is_tree() {
            return Err(Error::InvalidStructure(format!(
                "{} edges on {} nodes do not form a spanning tree",
                s.len(),
                s.d()
            )));
        }
        Ok(UndirectedTree(s))
    }

    pub fn d(&self) -> usize {
        self.0.d()
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.0
    }

    pub fn into_skeleton(self) -> Skeleton {
        self.0
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.edges()
    }

    /// Breadth-first orientation away from `root`.
    pub fn orient_from(&self, root: usize) -> Result<DirectedTree> {
        let d = self.d();
        if root >= d {
            return Err(Error::NodeOutOfRange { node: root, d });
        }
        let adj = self.0.adjacency();
        let mut seen = vec![false; d];
        let mut edges = Vec::with_capacity(d.saturating_sub(1));
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    edges.push((v, w));
                    queue.push_back(w);
                }
            }
        }
        DirectedTree::new(Dag::new(d, edges)?)
    }
}

/// A rooted tree with every edge pointing away from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedTree {
    root: usize,
    dag: Dag,
}

impl DirectedTree {
    pub fn new(dag: Dag) -> Result<Self> {
        if !dag.skeleton().is_tree() {
            return Err(Error::InvalidStructure("skeleton is not a spanning tree".into()));
        }
        let roots = dag.roots();
        if roots.len() != 1 {
            return Err(Error::InvalidStructure(format!("expected one root, found {}", roots.len())));
        }
        if (0..dag.d()).any(|v| dag.parents(v).len() > 1) {
            return Err(Error::InvalidStructure("a node has more than one parent".into()));
        }
        Ok(DirectedTree { root: roots[0], dag })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn d(&self) -> usize {
        self.dag.d()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.dag.parents(v).first().copied()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        self.dag.edges()
    }

    pub fn undirected(&self) -> UndirectedTree {
        UndirectedTree(self.dag.skeleton())
    }
}

/// A DAG whose skeleton is a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polytree {
    dag: Dag,
}

impl Polytree {
    pub fn new(dag: Dag) -> Result<Self> {
        if !dag.skeleton().is_tree() {
            return Err(Error::NotPolytree("skeleton is not a spanning tree".into()));
        }
        Ok(Polytree { dag })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn into_dag(self) -> Dag {
        self.dag
    }
}

impl From<DirectedTree> for Polytree {
    fn from(t: DirectedTree) -> Self {
        Polytree { dag: t.dag }
    }
}

/// Relationship of an unordered pair in a partially directed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairStatus {
    Absent,
    Undirected,
    /// Directed from the first to the second node.
    Directed(usize, usize),
}

/// Completed partially directed acyclic graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cpdag {
    d: usize,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

impl Cpdag {
    pub fn new(
        d: usize,
        directed: impl IntoIterator<Item = (usize, usize)>,
        undirected: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let directed: BTreeSet<_> = directed.into_iter().collect();
        // validates range and self-loops, and acyclicity of the directed part
        Dag::new(d, directed.iter().copied())?;
        let undirected = Skeleton::new(d, undirected)?.edges;
        if let Some(&(a, b)) = directed.iter().find(|&&(a, b)| undirected.contains(&ordered(a, b))) {
            return Err(Error::InvalidStructure(format!(
                "pair ({a}, {b}) is both directed and undirected"
            )));
        }
        if let Some(&(a, b)) = directed.iter().find(|&&(a, b)| directed.contains(&(b, a))) {
            return Err(Error::InvalidStructure(format!("pair ({a}, {b}) is directed both ways")));
        }
        Ok(Cpdag {
            d,
            directed,
            undirected,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn directed(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn undirected(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn status(&self, a: usize, b: usize) -> PairStatus {
        if self.directed.contains(&(a, b)) {
            PairStatus::Directed(a, b)
        } else if self.directed.contains(&(b, a)) {
            PairStatus::Directed(b, a)
        } else if self.undirected.contains(&ordered(a, b)) {
            PairStatus::Undirected
        } else {
            PairStatus::Absent
        }
    }

    pub fn skeleton(&self) -> Skeleton {
        Skeleton::new(self.d, self.directed.iter().chain(&self.undirected).copied())
            .expect("CPDAG pairs are valid")
    }
}

/// Working partially directed graph for orientation rules.
///
/// `mark[a][b]` means the edge between `a` and `b` may point `a → b`: both
/// marks set is an undirected edge, one mark a directed edge.
#[derive(Debug, Clone)]
pub(crate) struct Pdag {
    d: usize,
    mark: Vec<Vec<bool>>,
}

impl Pdag {
    pub(crate) fn from_skeleton(s: &Skeleton) -> Self {
        let mut mark = vec![vec![false; s.d()]; s.d()];
        for (a, b) in s.edges() {
            mark[a][b] = true;
            mark[b][a] = true;
        }
        Pdag { d: s.d(), mark }
    }

    pub(crate) fn adjacent(&self, a: usize, b: usize) -> bool {
        self.mark[a][b] || self.mark[b][a]
    }

    pub(crate) fn undirected(&self, a: usize, b: usize) -> bool {
        self.mark[a][b] && self.mark[b][a]
    }

    pub(crate) fn directed(&self, a: usize, b: usize) -> bool {
        self.mark[a][b] && !self.mark[b][a]
    }

    /// Turns the edge into `a → b`.
    pub(crate) fn orient(&mut self, a: usize, b: usize) {
        debug_assert!(self.adjacent(a, b));
        self.mark[a][b] = true;
        self.mark[b][a] = false;
    }

    fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.d {
            for b in (a + 1)..self.d {
                if self.undirected(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// R1: `c → a`, `a − b`, `c` and `b` non-adjacent ⇒ `a → b`.
    fn rule1(&self, a: usize, b: usize) -> bool {
        (0..self.d).any(|c| c != b && self.directed(c, a) && !self.adjacent(c, b))
    }

    /// R2: `a → c → b` and `a − b` ⇒ `a → b`.
    fn rule2(&self, a: usize, b: usize) -> bool {
        (0..self.d).any(|c| self.directed(a, c) && self.directed(c, b))
    }

    /// R3: `a − c → b`, `a − e → b`, `c` and `e` non-adjacent, `a − b` ⇒ `a → b`.
    fn rule3(&self, a: usize, b: usize) -> bool {
        let mids: Vec<usize> = (0..self.d)
            .filter(|&c| self.undirected(a, c) && self.directed(c, b))
            .collect();
        mids.iter()
            .enumerate()
            .any(|(i, &c)| mids[i + 1..].iter().any(|&e| !self.adjacent(c, e)))
    }

    /// R4: `a − c → e → b`, `c` and `b` non-adjacent, `a` adjacent to `e`,
    /// `a − b` ⇒ `a → b`.
    fn rule4(&self, a: usize, b: usize) -> bool {
        (0..self.d).any(|e| {
            e != a
                && self.adjacent(a, e)
                && self.directed(e, b)
                && (0..self.d).any(|c| {
                    c != b && self.undirected(a, c) && self.directed(c, e) && !self.adjacent(c, b)
                })
        })
    }

    /// Applies R1–R4 in that order, each over undirected edges in
    /// lexicographic order, until nothing changes.
    pub(crate) fn close_under_meek_rules(&mut self) {
        type Rule = fn(&Pdag, usize, usize) -> bool;
        let rules: [Rule; 4] = [Pdag::rule1, Pdag::rule2, Pdag::rule3, Pdag::rule4];
        loop {
            let mut changed = false;
            for rule in rules {
                for (a, b) in self.undirected_pairs() {
                    for (x, y) in [(a, b), (b, a)] {
                        if self.undirected(x, y) && rule(self, x, y) {
                            self.orient(x, y);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    pub(crate) fn into_cpdag(self) -> Result<Cpdag> {
        let mut directed = Vec::new();
        let mut undirected = Vec::new();
        for a in 0..self.d {
            for b in 0..self.d {
                if self.directed(a, b) {
                    directed.push((a, b));
                } else if a < b && self.undirected(a, b) {
                    undirected.push((a, b));
                }
            }
        }
        Cpdag::new(self.d, directed, undirected)
    }

    pub(crate) fn from_cpdag(c: &Cpdag) -> Self {
        let mut p = Pdag::from_skeleton(&c.skeleton());
        for &(a, b) in c.directed() {
            p.orient(a, b);
        }
        p
    }
}

/// Re-applies the Meek rules to a CPDAG. A closed CPDAG is returned unchanged.
pub fn meek_closure(c: &Cpdag) -> Result<Cpdag> {
    let mut p = Pdag::from_cpdag(c);
    p.close_under_meek_rules();
    p.into_cpdag()
}

/// Unshielded colliders `a → c ← b` (`a < b`, non-adjacent) as `(a, c, b)`.
pub fn v_structures(g: &Dag) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for c in 0..g.d() {
        let pa = g.parents(c);
        for (i, &a) in pa.iter().enumerate() {
            for &b in &pa[i + 1..] {
                if !g.is_adjacent(a, b) {
                    let (a, b) = ordered(a, b);
                    out.push((a, c, b));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// CPDAG of the Markov equivalence class of `g`: skeleton plus v-structures,
/// closed under the Meek rules.
pub fn cpdag_of(g: &Dag) -> Cpdag {
    let mut p = Pdag::from_skeleton(&g.skeleton());
    for (a, c, b) in v_structures(g) {
        p.orient(a, c);
        p.orient(b, c);
    }
    p.close_under_meek_rules();
    p.into_cpdag().expect("orientations of a DAG stay acyclic")
}

/// Whether `S` d-separates `j` and `k` in `g`, decided on the moralized
/// ancestral graph of `{j, k} ∪ S`.
pub fn d_separated(g: &Dag, j: usize, k: usize, given: &[usize]) -> Result<bool> {
    let d = g.d();
    for &v in [j, k].iter().chain(given) {
        if v >= d {
            return Err(Error::NodeOutOfRange { node: v, d });
        }
    }
    if j == k || given.contains(&j) || given.contains(&k) {
        return Err(Error::InvalidParameter(
            "d-separation needs distinct endpoints outside the conditioning set".into(),
        ));
    }
    // ancestral closure
    let mut keep = vec![false; d];
    let mut stack: Vec<usize> = [j, k].iter().chain(given).copied().collect();
    while let Some(v) = stack.pop() {
        if !keep[v] {
            keep[v] = true;
            stack.extend(g.parents(v).iter().copied());
        }
    }
    // moralize
    let mut adj = vec![Vec::new(); d];
    for v in (0..d).filter(|&v| keep[v]) {
        let pa = g.parents(v);
        for (i, &p) in pa.iter().enumerate() {
            adj[p].push(v);
            adj[v].push(p);
            for &q in &pa[i + 1..] {
                adj[p].push(q);
                adj[q].push(p);
            }
        }
    }
    let mut blocked = vec![false; d];
    for &s in given {
        blocked[s] = true;
    }
    let mut seen = vec![false; d];
    let mut queue = VecDeque::from([j]);
    seen[j] = true;
    while let Some(v) = queue.pop_front() {
        if v == k {
            return Ok(false);
        }
        for &w in &adj[v] {
            if !seen[w] && !blocked[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    Ok(true)
}

/// Structural Hamming distance between graphs of the same kind.
pub trait StructuralDistance {
    fn shd(&self, other: &Self) -> Result<usize>;
}

impl StructuralDistance for Skeleton {
    /// Size of the symmetric difference of the edge sets.
    fn shd(&self, other: &Self) -> Result<usize> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        Ok(self.edges.symmetric_difference(&other.edges).count())
    }
}

impl StructuralDistance for Cpdag {
    /// Number of unordered pairs whose status (absent, undirected, or directed
    /// with a given direction) differs.
    fn shd(&self, other: &Self) -> Result<usize> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        let pairs: BTreeSet<(usize, usize)> = self
            .directed
            .iter()
            .chain(&other.directed)
            .map(|&(a, b)| ordered(a, b))
            .chain(self.undirected.iter().chain(&other.undirected).copied())
            .collect();
        Ok(pairs
            .into_iter()
            .filter(|&(a, b)| self.status(a, b) != other.status(a, b))
            .count())
    }
}

pub fn shd<G: StructuralDistance>(a: &G, b: &G) -> Result<usize> {
    a.shd(b)
}

pub fn exact_recovery<G: StructuralDistance>(a: &G, b: &G) -> Result<bool> {
    Ok(a.shd(b)? == 0)
}

/// Decodes a Prüfer sequence (entries in `0..d`, length `d − 2`).
pub fn prufer_decode(seq: &[usize], d: usize) -> Result<UndirectedTree> {
    if d < 2 || seq.len() != d - 2 {
        return Err(Error::InvalidParameter(format!(
            "a Prüfer sequence for {d} nodes has length {}",
            d.saturating_sub(2)
        )));
    }
    if let Some(&v) = seq.iter().find(|&&v| v >= d) {
        return Err(Error::NodeOutOfRange { node: v, d });
    }
    let mut degree = vec![1usize; d];
    for &v in seq {
        degree[v] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> = (0..d).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(d - 1);
    for &v in seq {
        let Reverse(leaf) = leaves.pop().expect("a tree always has a leaf");
        edges.push((leaf, v));
        degree[v] -= 1;
        if degree[v] == 1 {
            leaves.push(Reverse(v));
        }
    }
    let Reverse(a) = leaves.pop().expect("two nodes remain");
    let Reverse(b) = leaves.pop().expect("two nodes remain");
    edges.push((a, b));
    UndirectedTree::new(d, edges)
}

/// Prüfer sequence of a labeled tree; inverse of [`prufer_decode`].
pub fn prufer_encode(t: &UndirectedTree) -> Vec<usize> {
    let d = t.d();
    let adj = t.skeleton().adjacency();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; d];
    let mut leaves: BinaryHeap<Reverse<usize>> = (0..d).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut seq = Vec::with_capacity(d.saturating_sub(2));
    while seq.len() + 2 < d {
        let Reverse(leaf) = leaves.pop().expect("a tree always has a leaf");
        removed[leaf] = true;
        let nb = adj[leaf].iter().copied().find(|&w| !removed[w]).expect("leaf has a neighbour");
        seq.push(nb);
        degree[nb] -= 1;
        if degree[nb] == 1 {
            leaves.push(Reverse(nb));
        }
    }
    seq
}

/// All `d^{d−2}` labeled trees on `d ≥ 2` nodes, in Prüfer-sequence order.
pub fn labeled_trees(d: usize) -> impl Iterator<Item = UndirectedTree> {
    let len = d.saturating_sub(2);
    let total = if d < 2 { 0 } else { d.pow(len as u32) };
    (0..total).map(move |mut code| {
        let mut seq = vec![0; len];
        for slot in seq.iter_mut().rev() {
            *slot = code % d;
            code /= d;
        }
        prufer_decode(&seq, d).expect("every sequence decodes")
    })
}

fn check_tree_size(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("random trees need d ≥ 2, got {d}")));
    }
    Ok(())
}

/// Uniform labeled tree via a uniform Prüfer sequence.
pub fn random_labeled_tree_with(rng: &mut Rng, d: usize) -> Result<UndirectedTree> {
    check_tree_size(d)?;
    let seq: Vec<usize> = (0..d - 2).map(|_| rng.random_range(0..d)).collect();
    prufer_decode(&seq, d)
}

/// Uniform labeled tree oriented away from a uniformly chosen root.
pub fn random_directed_tree_with(rng: &mut Rng, d: usize) -> Result<DirectedTree> {
    let t = random_labeled_tree_with(rng, d)?;
    let root = rng.random_range(0..d);
    t.orient_from(root)
}

/// Uniform labeled tree with each edge oriented by an independent fair coin.
pub fn random_polytree_with(rng: &mut Rng, d: usize) -> Result<Polytree> {
    let t = random_labeled_tree_with(rng, d)?;
    let edges: Vec<(usize, usize)> = t
        .edges()
        .map(|(a, b)| if rng.random_bool(0.5) { (a, b) } else { (b, a) })
        .collect();
    Polytree::new(Dag::new(d, edges)?)
}

pub fn random_labeled_tree(d: usize, seed: u64) -> Result<UndirectedTree> {
    random_labeled_tree_with(&mut rng::seeded(seed), d)
}

pub fn random_directed_tree(d: usize, seed: u64) -> Result<DirectedTree> {
    random_directed_tree_with(&mut rng::seeded(seed), d)
}

pub fn random_polytree(d: usize, seed: u64) -> Result<Polytree> {
    random_polytree_with(&mut rng::seeded(seed), d)
}
