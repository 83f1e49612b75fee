//! Computation trees, the recursive tree distance and the Tree Mover's
//! Distance between graphs.
//!
//! The depth-K computation tree of node `v` has root feature `x_v` and one
//! child per neighbor `u`, namely the depth-(K−1) tree of `u`; the node a
//! subtree was reached from is included again among its children.
//!
//! Tree distance between `T_a` and `T_b`:
//!
//! ```text
//! TD(T_a, T_b) = ‖x_a − x_b‖_p + OT_TD(children(T_a), children(T_b))
//! ```
//!
//! where both children multisets are padded with blank trees (a single node
//! carrying `z`) to a common size and `OT_TD` is the optimal transport cost
//! under TD itself. TMD^(K) is the same transport applied to the two
//! multisets of depth-K computation trees, padded to `max(|V_G|, |V_H|)`.
//!
//! Trees are hash-consed into an arena keyed by `(feature bits, sorted child
//! ids)`, so structurally equal subtrees share one id and TD is memoized per
//! id pair. For graphs this makes TMD polynomial in K even though the
//! explicit trees grow exponentially.

use std::collections::HashMap;

use crate::assignment::min_cost;
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::graph::Graph;
use crate::linalg::dist_p;
use crate::multiset::FeatureVector;

/// Largest depth for which [`computation_tree`] materializes explicit trees.
pub const MAX_EXPLICIT_DEPTH: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct ComputationTree {
    root_feature: FeatureVector,
    children: Vec<ComputationTree>,
    depth: usize,
}

impl ComputationTree {
    pub fn new(root_feature: FeatureVector, children: Vec<ComputationTree>) -> Self {
        let depth = children.iter().map(|c| c.depth + 1).max().unwrap_or(0);
        ComputationTree { root_feature, children, depth }
    }

    pub fn leaf(feature: FeatureVector) -> Self {
        Self::new(feature, Vec::new())
    }

    /// The blank tree: a single node carrying `z`.
    pub fn blank(z: &[f64]) -> Self {
        Self::leaf(z.to_vec())
    }

    pub fn root_feature(&self) -> &[f64] {
        &self.root_feature
    }

    pub fn children(&self) -> &[ComputationTree] {
        &self.children
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(ComputationTree::node_count).sum::<usize>()
    }
}

/// Depth-`k` computation tree rooted at `v`.
pub fn computation_tree(g: &Graph, v: usize, k: usize) -> Result<ComputationTree> {
    g.check_node(v)?;
    if k > MAX_EXPLICIT_DEPTH {
        return Err(invalid(format!(
            "explicit computation trees are capped at depth {MAX_EXPLICIT_DEPTH}; use tmd for deeper comparisons"
        )));
    }
    fn build(g: &Graph, v: usize, k: usize) -> ComputationTree {
        let children = if k == 0 { Vec::new() } else { g.neighbors(v).iter().map(|&u| build(g, u, k - 1)).collect() };
        ComputationTree::new(g.feature(v).to_vec(), children)
    }
    Ok(build(g, v, k))
}

type TreeId = usize;

/// Hash-consed tree store with a memoized tree distance.
struct TreeArena {
    features: Vec<FeatureVector>,
    children: Vec<Vec<TreeId>>,
    index: HashMap<(Vec<u64>, Vec<TreeId>), TreeId>,
    memo: HashMap<(TreeId, TreeId), f64>,
    blank: TreeId,
    p: f64,
}

impl TreeArena {
    fn new(z: &[f64], p: f64) -> Self {
        let mut arena = TreeArena {
            features: Vec::new(),
            children: Vec::new(),
            index: HashMap::new(),
            memo: HashMap::new(),
            blank: 0,
            p,
        };
        arena.blank = arena.intern(z, Vec::new());
        arena
    }

    fn intern(&mut self, feature: &[f64], mut children: Vec<TreeId>) -> TreeId {
        children.sort_unstable();
        let key = (feature.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), children);
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.features.len();
        self.features.push(feature.to_vec());
        self.children.push(key.1.clone());
        self.index.insert(key, id);
        id
    }

    fn intern_tree(&mut self, t: &ComputationTree) -> TreeId {
        let kids = t.children.iter().map(|c| self.intern_tree(c)).collect();
        self.intern(&t.root_feature, kids)
    }

    /// Ids of the depth-`k` computation trees of every node of `g`.
    fn intern_graph(&mut self, g: &Graph, k: usize) -> Vec<TreeId> {
        let mut ids: Vec<TreeId> = g.features().iter().map(|f| self.intern(f, Vec::new())).collect();
        for _ in 0..k {
            ids = (0..g.node_count())
                .map(|v| {
                    let kids = g.neighbors(v).iter().map(|&u| ids[u]).collect();
                    self.intern(g.feature(v), kids)
                })
                .collect();
        }
        ids
    }

    fn td(&mut self, a: TreeId, b: TreeId) -> f64 {
        if a == b {
            return 0.0;
        }
        let key = (a.min(b), a.max(b));
        if let Some(&d) = self.memo.get(&key) {
            return d;
        }
        let root = dist_p(&self.features[a], &self.features[b], self.p);
        let (ca, cb) = (self.children[a].clone(), self.children[b].clone());
        let d = root + self.transport(&ca, &cb);
        self.memo.insert(key, d);
        d
    }

    /// Optimal transport under TD after blank-padding both sides to a common size.
    fn transport(&mut self, xs: &[TreeId], ys: &[TreeId]) -> f64 {
        let m = xs.len().max(ys.len());
        if m == 0 {
            return 0.0;
        }
        let blank = self.blank;
        let pad = |v: &[TreeId]| {
            let mut v = v.to_vec();
            v.resize(m, blank);
            v
        };
        let (xs, ys) = (pad(xs), pad(ys));
        let cost: Vec<Vec<f64>> = xs.iter().map(|&a| ys.iter().map(|&b| self.td(a, b)).collect()).collect();
        min_cost(&cost).max(0.0)
    }
}

fn check_common(dim_a: usize, dim_b: usize, z: &[f64], p: f64) -> Result<()> {
    if dim_a != dim_b {
        return Err(Error::DimensionMismatch { expected: dim_a, found: dim_b });
    }
    if z.len() != dim_a {
        return Err(Error::DimensionMismatch { expected: dim_a, found: z.len() });
    }
    ensure_finite(z, "blank vector")?;
    crate::multiset::check_p(p)
}

fn tree_dim(t: &ComputationTree) -> Result<usize> {
    let d = t.root_feature.len();
    for c in &t.children {
        let dc = tree_dim(c)?;
        if dc != d {
            return Err(Error::DimensionMismatch { expected: d, found: dc });
        }
    }
    ensure_finite(&t.root_feature, "tree feature")?;
    Ok(d)
}

/// Tree distance with blank vector `z` and node norm `‖·‖_p`.
pub fn tree_distance(ta: &ComputationTree, tb: &ComputationTree, z: &[f64], p: f64) -> Result<f64> {
    check_common(tree_dim(ta)?, tree_dim(tb)?, z, p)?;
    let mut arena = TreeArena::new(z, p);
    let (a, b) = (arena.intern_tree(ta), arena.intern_tree(tb));
    Ok(arena.td(a, b))
}

/// Tree Mover's Distance between the depth-`k` computation-tree multisets
/// of `g` and `h`.
pub fn tmd(g: &Graph, h: &Graph, k: usize, z: &[f64], p: f64) -> Result<f64> {
    check_common(g.dim(), h.dim(), z, p)?;
    let mut arena = TreeArena::new(z, p);
    let a = arena.intern_graph(g, k);
    let b = arena.intern_graph(h, k);
    Ok(arena.transport(&a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiset::{augmented_wasserstein, InnerNorm, Multiset};

    fn path2() -> Graph {
        Graph::scalar(&[1.0, 2.0], vec![[0, 1]]).unwrap()
    }

    #[test]
    fn computation_tree_shapes() {
        let single = Graph::scalar(&[3.0], vec![]).unwrap();
        assert_eq!(computation_tree(&single, 0, 4).unwrap().node_count(), 1);
        let t1 = computation_tree(&path2(), 0, 1).unwrap();
        assert_eq!(t1.children().len(), 1);
        assert_eq!(t1.children()[0].root_feature(), &[2.0]);
        let t2 = computation_tree(&path2(), 0, 2).unwrap();
        assert_eq!(t2.node_count(), 3);
        assert_eq!(t2.depth(), 2);
        assert_eq!(t2.children()[0].children()[0].root_feature(), &[1.0]);
        // star with 3 leaves, depth 2 from the center: 1 + 3 + 3
        let star = Graph::scalar(&[0.0, 1.0, 1.0, 1.0], vec![[0, 1], [0, 2], [0, 3]]).unwrap();
        assert_eq!(computation_tree(&star, 0, 2).unwrap().node_count(), 7);
        // from a leaf: 1 + 1 + 3
        assert_eq!(computation_tree(&star, 1, 2).unwrap().node_count(), 5);
        assert!(computation_tree(&star, 4, 1).is_err());
        assert!(computation_tree(&star, 0, MAX_EXPLICIT_DEPTH + 1).is_err());
    }

    #[test]
    fn tree_distance_examples() {
        let z = [-1.0];
        let x = ComputationTree::leaf(vec![0.3]);
        let y = ComputationTree::leaf(vec![-0.2]);
        assert!((tree_distance(&x, &y, &z, 2.0).unwrap() - 0.5).abs() < 1e-15);
        let blank = ComputationTree::blank(&z);
        assert!((tree_distance(&blank, &x, &z, 2.0).unwrap() - 1.3).abs() < 1e-15);
        let eps = 0.1;
        let a = ComputationTree::new(vec![0.0], vec![ComputationTree::leaf(vec![eps])]);
        let b = ComputationTree::new(vec![0.0], vec![ComputationTree::leaf(vec![2.0 * eps])]);
        assert!((tree_distance(&a, &b, &z, 1.0).unwrap() - eps).abs() < 1e-15);
        assert_eq!(tree_distance(&a, &a, &z, 1.0).unwrap(), 0.0);
        assert!(tree_distance(&a, &ComputationTree::leaf(vec![0.0, 0.0]), &z, 1.0).is_err());
    }

    #[test]
    fn unequal_children_pay_for_blanks() {
        let z = [-1.0];
        let a = ComputationTree::new(vec![0.0], vec![ComputationTree::leaf(vec![1.0])]);
        let b =
            ComputationTree::new(vec![0.0], vec![ComputationTree::leaf(vec![1.0]), ComputationTree::leaf(vec![2.0])]);
        // the extra child is matched to a blank: |2 − (−1)| = 3
        assert!((tree_distance(&a, &b, &z, 1.0).unwrap() - 3.0).abs() < 1e-15);
    }

    /// Reference TD that pads children to a fixed global size instead of the
    /// pairwise maximum; blank-to-blank pairs cost zero so both must agree.
    fn td_global_padding(a: &ComputationTree, b: &ComputationTree, z: &[f64], p: f64, n: usize) -> f64 {
        let root = dist_p(a.root_feature(), b.root_feature(), p);
        if a.children().is_empty() && b.children().is_empty() {
            return root;
        }
        let pad = |t: &ComputationTree| {
            let mut v = t.children().to_vec();
            v.resize(n, ComputationTree::blank(z));
            v
        };
        let (xs, ys) = (pad(a), pad(b));
        let cost: Vec<Vec<f64>> =
            xs.iter().map(|x| ys.iter().map(|y| td_global_padding(x, y, z, p, n)).collect()).collect();
        root + crate::assignment::solve_assignment(&cost).unwrap().cost
    }

    #[test]
    fn pairwise_padding_matches_global_padding() {
        let mut rng = crate::rng::stream(5, 0);
        let z = [-1.0];
        for _ in 0..30 {
            let g = Graph::random(&mut rng, 4, &[0.0, 1.0, 2.0], 0.5).unwrap();
            let h = Graph::random(&mut rng, 4, &[0.0, 1.0, 2.0], 0.5).unwrap();
            for v in 0..4 {
                let ta = computation_tree(&g, v, 2).unwrap();
                let tb = computation_tree(&h, v, 2).unwrap();
                let fast = tree_distance(&ta, &tb, &z, 2.0).unwrap();
                let slow = td_global_padding(&ta, &tb, &z, 2.0, 4);
                assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
            }
        }
    }

    #[test]
    fn depth_zero_tmd_is_augmented_wasserstein() {
        let mut rng = crate::rng::stream(6, 0);
        let z = [-1.0];
        for _ in 0..30 {
            let g = Graph::random(&mut rng, 5, &[0.0, 0.5, 2.0], 0.4).unwrap();
            let h = Graph::random(&mut rng, 3, &[0.0, 1.0], 0.4).unwrap();
            let n = 5;
            let x = Multiset::new(1, n, g.features().to_vec()).unwrap();
            let y = Multiset::new(1, n, h.features().to_vec()).unwrap();
            let w = augmented_wasserstein(&x, &y, &z, 1.0, InnerNorm::L1).unwrap();
            assert!((tmd(&g, &h, 0, &z, 1.0).unwrap() - w).abs() < 1e-12);
        }
    }

    #[test]
    fn tmd_matches_explicit_trees() {
        let mut rng = crate::rng::stream(7, 0);
        let z = [-1.0];
        for _ in 0..20 {
            let g = Graph::random(&mut rng, 4, &[0.0, 1.0, 2.0], 0.5).unwrap();
            let h = Graph::random(&mut rng, 4, &[0.0, 1.0, 2.0], 0.5).unwrap();
            let cost: Vec<Vec<f64>> = (0..4)
                .map(|v| {
                    let ta = computation_tree(&g, v, 2).unwrap();
                    (0..4).map(|u| tree_distance(&ta, &computation_tree(&h, u, 2).unwrap(), &z, 2.0).unwrap()).collect()
                })
                .collect();
            let explicit = crate::assignment::solve_assignment(&cost).unwrap().cost;
            assert!((tmd(&g, &h, 2, &z, 2.0).unwrap() - explicit).abs() < 1e-12);
        }
    }

    #[test]
    fn tmd_identity_and_dims() {
        let g = Graph::scalar(&[0.0, 1.0, 2.0], vec![[0, 1], [1, 2]]).unwrap();
        assert_eq!(tmd(&g, &g, 3, &[-1.0], 2.0).unwrap(), 0.0);
        let h = Graph::new(2, vec![vec![0.0, 0.0]], vec![]).unwrap();
        assert!(tmd(&g, &h, 1, &[-1.0], 2.0).is_err());
        assert!(tmd(&g, &g, 1, &[-1.0, 0.0], 2.0).is_err());
    }
}
