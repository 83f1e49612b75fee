use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::multiset::FeatureVector;

/// Undirected node-featured graph without self-loops or repeated edges.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    dim: usize,
    features: Vec<FeatureVector>,
    edges: Vec<[usize; 2]>,
    label: Option<i64>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRepr {
    dim: usize,
    features: Vec<FeatureVector>,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<i64>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;
    fn try_from(r: GraphRepr) -> Result<Self> {
        Ok(Graph::new(r.dim, r.features, r.edges)?.with_label(r.label))
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr { dim: g.dim, features: g.features, edges: g.edges, label: g.label }
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.features == other.features && self.edges == other.edges
    }
}

impl Graph {
    pub fn new(dim: usize, features: Vec<FeatureVector>, edges: Vec<[usize; 2]>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("feature dimension must be at least 1"));
        }
        for f in &features {
            if f.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: f.len() });
            }
            ensure_finite(f, "node feature")?;
        }
        let n = features.len();
        let mut neighbors = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for &[i, j] in &edges {
            if i >= n || j >= n {
                return Err(Error::InvalidNode { index: i.max(j), nodes: n });
            }
            if i == j {
                return Err(Error::InvalidEdge(i, j, "self-loop"));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidEdge(i, j, "duplicate edge"));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        neighbors.iter_mut().for_each(|nb| nb.sort_unstable());
        Ok(Graph { dim, features, edges, label: None, neighbors })
    }

    /// Graph with scalar node features.
    pub fn scalar(features: &[f64], edges: Vec<[usize; 2]>) -> Result<Self> {
        Self::new(1, features.iter().map(|&v| vec![v]).collect(), edges)
    }

    pub fn with_label(mut self, label: Option<i64>) -> Self {
        self.label = label;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[FeatureVector] {
        &self.features
    }

    pub fn feature(&self, v: usize) -> &[f64] {
        &self.features[v]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn label(&self) -> Option<i64> {
        self.label
    }

    /// Neighbors of `v` in ascending index order; `v` itself is never included.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(Error::InvalidNode { index: v, nodes: self.node_count() })
        }
    }

    /// Largest absolute feature coordinate (0 for an empty graph).
    pub fn max_abs_feature(&self) -> f64 {
        self.features.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest Euclidean feature norm.
    pub fn max_feature_norm(&self) -> f64 {
        self.features.iter().map(|f| crate::linalg::norm2(f)).fold(0.0, f64::max)
    }

    /// Every feature multiplied by `s`; topology unchanged.
    pub fn scaled(&self, s: f64) -> Self {
        let mut g = self.clone();
        g.features.iter_mut().flatten().for_each(|v| *v *= s);
        g
    }

    /// Relabel nodes: old node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(invalid("node permutation must be a bijection on 0..n"));
        }
        let mut features = vec![Vec::new(); n];
        for (v, f) in self.features.iter().enumerate() {
            features[perm[v]] = f.clone();
        }
        let edges = self.edges.iter().map(|&[i, j]| [perm[i], perm[j]]).collect();
        Ok(Graph::new(self.dim, features, edges)?.with_label(self.label))
    }

    /// Random graph with `nodes` nodes, scalar features drawn from `values`,
    /// each edge present independently with probability `edge_prob`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, nodes: usize, values: &[f64], edge_prob: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("need at least one feature value"));
        }
        let features: Vec<f64> = (0..nodes).map(|_| values[rng.random_range(0..values.len())]).collect();
        let mut edges = Vec::new();
        for i in 0..nodes {
            for j in i + 1..nodes {
                if rng.random::<f64>() < edge_prob {
                    edges.push([i, j]);
                }
            }
        }
        Graph::scalar(&features, edges)
    }
}
