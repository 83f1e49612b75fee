//! Deterministic input pairs on which weak embeddings lose separation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::Graph;
use crate::multiset::Multiset;

/// Largest absolute entry of a normalized equal-moments pair.
pub const NORMALIZED_MAX: f64 = 0.9;

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("epsilon must be positive and finite, got {eps}")))
    }
}

/// `({{−ε, ε}}, {{−2ε, 2ε}})`: equal sums, `W_1 = 2ε`.
pub fn pm_epsilon_pair(eps: f64) -> Result<(Multiset, Multiset)> {
    check_eps(eps)?;
    Ok((Multiset::scalars(&[-eps, eps])?, Multiset::scalars(&[-2.0 * eps, 2.0 * eps])?))
}

/// Two vectors of length `2^k`, distinct up to permutation, whose raw moments
/// of orders `1..2^k − 1` coincide.
///
/// Starts from `([−1, 1], [−2, 2])`; each step shifts both vectors by their
/// common minimum, takes square roots, and mirrors: `v ↦ [−√(v−t), √(v−t)]`.
/// Square roots preserve even moments up to twice the old order and
/// mirroring zeroes every odd moment.
pub fn equal_moments_pair(k: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=20).contains(&k) {
        return Err(invalid(format!("equal-moments depth must be in 1..=20, got {k}")));
    }
    let mut x = vec![-1.0, 1.0];
    let mut y = vec![-2.0, 2.0];
    for _ in 1..k {
        let t = x.iter().chain(&y).copied().fold(f64::INFINITY, f64::min);
        let step = |v: &[f64]| {
            let roots: Vec<f64> = v.iter().map(|&e| (e - t).max(0.0).sqrt()).collect();
            let mut out: Vec<f64> = roots.iter().map(|r| -r).collect();
            out.extend(roots);
            out
        };
        x = step(&x);
        y = step(&y);
    }
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    Ok((x, y))
}

/// [`equal_moments_pair`] scaled so the largest absolute entry is
/// [`NORMALIZED_MAX`], keeping every entry inside `(−1, 1)`.
pub fn normalized_equal_moments_pair(k: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, y) = equal_moments_pair(k)?;
    let m = x.iter().chain(&y).fold(0.0f64, |m, v| m.max(v.abs()));
    let s = NORMALIZED_MAX / m;
    Ok((x.iter().map(|v| v * s).collect(), y.iter().map(|v| v * s).collect()))
}

/// `({{1, 0, 0, −1}}, {{1, ε, −ε, −1}})`: equal cardinality, minimum and
/// maximum, so the adaptive bias sweeps the same interval on both sides.
pub fn adapt_adversarial_pair(eps: f64) -> Result<(Multiset, Multiset)> {
    check_eps(eps)?;
    if eps >= 1.0 {
        return Err(invalid(format!("adaptive adversarial pair needs 0 < ε < 1, got {eps}")));
    }
    Ok((Multiset::scalars(&[1.0, 0.0, 0.0, -1.0])?, Multiset::scalars(&[1.0, eps, -eps, -1.0])?))
}

#[derive(Debug, Clone)]
struct Rooted {
    feature: f64,
    children: Vec<Rooted>,
}

impl Rooted {
    fn leaf(feature: f64) -> Self {
        Rooted { feature, children: Vec::new() }
    }

    fn join(feature: f64, parts: &[&Rooted]) -> Self {
        Rooted { feature, children: parts.iter().map(|&t| t.clone()).collect() }
    }

    /// Preorder numbering: the root is node 0.
    fn into_graph(self) -> Result<Graph> {
        fn walk(t: &Rooted, parent: Option<usize>, feats: &mut Vec<f64>, edges: &mut Vec<[usize; 2]>) {
            let id = feats.len();
            feats.push(t.feature);
            if let Some(p) = parent {
                edges.push([p, id]);
            }
            for c in &t.children {
                walk(c, Some(id), feats, edges);
            }
        }
        let (mut feats, mut edges) = (Vec::new(), Vec::new());
        walk(&self, None, &mut feats, &mut edges);
        Graph::scalar(&feats, edges)
    }
}

/// A pair of rooted trees `(G, Ĝ)`; the root is node 0 in both.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsTreePair {
    pub g: Graph,
    pub g_hat: Graph,
    pub epsilon: f64,
    pub level: usize,
    pub internal_feature: f64,
}

impl EpsTreePair {
    /// Depth of both trees (root to leaf edge count), `level + 1`.
    pub fn depth(&self) -> usize {
        self.level + 1
    }
}

/// ε-trees of level `T`.
///
/// Level 0 holds single nodes `a, b, c, d = ε, −ε, 2ε, −2ε`. Level `T+1`:
/// `a = [a, a, b, b]`, `b = [c, c, d, d]`, `c = d = [a, b, c, d]`, each under
/// a fresh root carrying `internal_feature`.
/// `G_0 = [a_0, b_0]`, `Ĝ_0 = [c_0, d_0]`, and for `T ≥ 1`
/// `G_T = [c_T, d_T]`, `Ĝ_T = [a_T, b_T]`.
///
/// In both trees the children of the two subtrees hanging from the root
/// form the same multiset of subtrees, so any sum aggregation sees the same
/// total at that level. Every level-1 node owns leaves summing to zero, so
/// first-order terms cancel node by node and, after each layer, `a` and `b`
/// straddle `c = d` symmetrically: only the spread of the pair differs,
/// which squares the gap of a smooth network at every level.
pub fn eps_tree_pair(level: usize, eps: f64, internal_feature: f64) -> Result<EpsTreePair> {
    check_eps(eps)?;
    if !internal_feature.is_finite() {
        return Err(invalid("internal feature must be finite"));
    }
    if level > 6 {
        return Err(invalid(format!("ε-tree level must be at most 6, got {level}")));
    }
    let r = internal_feature;
    let (g, g_hat) = if level == 0 {
        (
            Rooted::join(r, &[&Rooted::leaf(eps), &Rooted::leaf(-eps)]),
            Rooted::join(r, &[&Rooted::leaf(2.0 * eps), &Rooted::leaf(-2.0 * eps)]),
        )
    } else {
        let mut a = Rooted::leaf(eps);
        let mut b = Rooted::leaf(-eps);
        let mut c = Rooted::leaf(2.0 * eps);
        let mut d = Rooted::leaf(-2.0 * eps);
        for _ in 0..level {
            let na = Rooted::join(r, &[&a, &a, &b, &b]);
            let nb = Rooted::join(r, &[&c, &c, &d, &d]);
            let nc = Rooted::join(r, &[&a, &b, &c, &d]);
            (a, b, d) = (na, nb, nc.clone());
            c = nc;
        }
        (Rooted::join(r, &[&c, &d]), Rooted::join(r, &[&a, &b]))
    };
    Ok(EpsTreePair {
        g: g.into_graph()?.with_label(Some(0)),
        g_hat: g_hat.into_graph()?.with_label(Some(1)),
        epsilon: eps,
        level,
        internal_feature,
    })
}

/// Two forests of two depth-2 trees that two rounds of 1-WL separate but a
/// width-1, depth-2 network with scalar ReLU-sum aggregation cannot.
///
/// Middle nodes own leaf pairs `a: {{−ε, ε}}`, `b: {{1−ε, 1+ε}}`,
/// `c: {{0, 0}}`, `d: {{1, 1}}`. The first graph groups `(a, b)` and
/// `(c, d)` under the two roots, the second `(c, b)` and `(a, d)`. Roots and
/// middle nodes carry feature 0. Any single bias separates at most one of
/// `a|c` and `b|d`, and either way the two root neighborhoods coincide as a
/// pair of multisets.
pub fn relu_counterexample_pair(eps: f64) -> Result<(Graph, Graph)> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid(format!("counterexample needs 0 < ε < 1/2, got {eps}")));
    }
    // roots 0, 1; middles a=2, b=3, c=4, d=5; leaves 6..14
    let features = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -eps, eps, 1.0 - eps, 1.0 + eps, 0.0, 0.0, 1.0, 1.0];
    let leaves = [[2, 6], [2, 7], [3, 8], [3, 9], [4, 10], [4, 11], [5, 12], [5, 13]];
    let build = |roots: [[usize; 2]; 4], label| {
        let mut edges = roots.to_vec();
        edges.extend(leaves);
        Ok::<_, crate::Error>(Graph::scalar(&features, edges)?.with_label(Some(label)))
    };
    Ok((build([[0, 2], [0, 3], [1, 4], [1, 5]], 0)?, build([[0, 4], [0, 3], [1, 2], [1, 5]], 1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiset::{wasserstein, InnerNorm};
    use crate::wl::wl_distinguishable;

    fn moment(v: &[f64], j: i32) -> f64 {
        v.iter().map(|x| x.powi(j)).sum()
    }

    fn abs_moment(v: &[f64], j: i32) -> f64 {
        v.iter().map(|x| x.abs().powi(j)).sum()
    }

    #[test]
    fn pm_epsilon() {
        let (x, y) = pm_epsilon_pair(0.1).unwrap();
        assert_eq!(x, Multiset::scalars(&[-0.1, 0.1]).unwrap());
        assert!((wasserstein(&x, &y, 1.0, InnerNorm::L1).unwrap() - 0.2).abs() < 1e-15);
        assert!(pm_epsilon_pair(0.0).is_err());
    }

    #[test]
    fn equal_moments_small_cases() {
        assert_eq!(equal_moments_pair(1).unwrap(), (vec![-1.0, 1.0], vec![-2.0, 2.0]));
        let (x, y) = equal_moments_pair(2).unwrap();
        let s3 = 3f64.sqrt();
        assert_eq!(x, vec![-s3, -1.0, 1.0, s3]);
        assert_eq!(y, vec![-2.0, 0.0, 0.0, 2.0]);
        for (j, want) in [(1, 0.0), (2, 8.0), (3, 0.0)] {
            assert!((moment(&x, j) - want).abs() < 1e-12 && (moment(&y, j) - want).abs() < 1e-12);
        }
        assert!((moment(&x, 4) - 20.0).abs() < 1e-12 && (moment(&y, 4) - 32.0).abs() < 1e-12);
    }

    #[test]
    fn equal_moments_up_to_four() {
        for k in 1..=4u32 {
            let n = 1i32 << k;
            for (x, y) in [equal_moments_pair(k).unwrap(), normalized_equal_moments_pair(k).unwrap()] {
                for j in 1..n {
                    let scale = abs_moment(&x, j).max(abs_moment(&y, j));
                    assert!((moment(&x, j) - moment(&y, j)).abs() <= 1e-9 * scale, "k={k} j={j}");
                }
                let scale = abs_moment(&x, n).max(abs_moment(&y, n));
                assert!((moment(&x, n) - moment(&y, n)).abs() > 1e-6 * scale);
            }
            let (x, y) = normalized_equal_moments_pair(k).unwrap();
            assert!(x.iter().chain(&y).all(|v| v.abs() < 1.0));
            let gap = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap > 0.1, "k={k} gap={gap}");
        }
    }

    #[test]
    fn adapt_pair() {
        let (x, y) = adapt_adversarial_pair(0.1).unwrap();
        assert_eq!(y, Multiset::scalars(&[1.0, 0.1, -0.1, -1.0]).unwrap());
        assert!((wasserstein(&x, &y, 1.0, InnerNorm::L1).unwrap() - 0.2).abs() < 1e-15);
        assert!(adapt_adversarial_pair(1.0).is_err());
    }

    fn leaf_values(g: &Graph) -> Vec<f64> {
        let mut v: Vec<f64> =
            (1..g.node_count()).filter(|&u| g.neighbors(u).len() == 1).map(|u| g.feature(u)[0]).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Nodes grouped by distance from the root.
    fn levels(g: &Graph) -> Vec<Vec<usize>> {
        let mut out = vec![vec![0]];
        let mut seen = vec![false; g.node_count()];
        seen[0] = true;
        loop {
            let next: Vec<usize> = out
                .last()
                .unwrap()
                .iter()
                .flat_map(|&v| g.neighbors(v).to_vec())
                .filter(|&u| !std::mem::replace(&mut seen[u], true))
                .collect();
            if next.is_empty() {
                return out;
            }
            out.push(next);
        }
    }

    #[test]
    fn eps_tree_shapes() {
        for (t, nodes) in [(0, 3), (1, 11), (2, 43)] {
            let pair = eps_tree_pair(t, 0.2, 0.0).unwrap();
            assert_eq!(pair.g.node_count(), nodes);
            assert_eq!(pair.g_hat.node_count(), nodes);
            assert_eq!(levels(&pair.g).len(), t + 2);
            assert!(wl_distinguishable(&pair.g, &pair.g_hat, pair.depth()));
        }
        let one = eps_tree_pair(1, 0.1, 0.0).unwrap();
        let want = vec![-0.2, -0.2, -0.1, -0.1, 0.1, 0.1, 0.2, 0.2];
        assert_eq!(leaf_values(&one.g), want);
        assert_eq!(leaf_values(&one.g_hat), want);
    }

    #[test]
    fn eps_tree_sum_identity() {
        for t in 1..=3 {
            for internal in [0.0, 1.0] {
                let pair = eps_tree_pair(t, 0.3, internal).unwrap();
                let (lg, lh) = (levels(&pair.g), levels(&pair.g_hat));
                assert_eq!(lg.len(), lh.len());
                let values = |g: &Graph, nodes: &[usize]| {
                    let mut v: Vec<f64> = nodes.iter().map(|&u| g.feature(u)[0]).collect();
                    v.sort_by(f64::total_cmp);
                    v
                };
                for (a, b) in lg.iter().zip(&lh).skip(1) {
                    assert_eq!(values(&pair.g, a), values(&pair.g_hat, b));
                }
                // the two root children own the same grandchildren multiset
                let grand = |g: &Graph| {
                    let kids: Vec<usize> = g.neighbors(0).iter().flat_map(|&c| g.neighbors(c).to_vec()).collect();
                    values(g, &kids)
                };
                assert_eq!(grand(&pair.g), grand(&pair.g_hat));
                // every parent of leaves owns a zero-sum multiset
                for g in [&pair.g, &pair.g_hat] {
                    let last = lg.len() - 1;
                    let parents = if g == &pair.g { &lg[last - 1] } else { &lh[last - 1] };
                    for &u in parents {
                        let s: f64 = g
                            .neighbors(u)
                            .iter()
                            .filter(|&&w| g.neighbors(w).len() == 1)
                            .map(|&w| g.feature(w)[0])
                            .sum();
                        assert!(s.abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn counterexample_structure() {
        let (g1, g2) = relu_counterexample_pair(0.25).unwrap();
        assert_eq!(g1.node_count(), g2.node_count());
        assert_eq!(g1.edges().len(), g2.edges().len());
        assert!(!wl_distinguishable(&g1, &g2, 1));
        assert!(wl_distinguishable(&g1, &g2, 2));
        assert!(relu_counterexample_pair(0.5).is_err());
    }
}
