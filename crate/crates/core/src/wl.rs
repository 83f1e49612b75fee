//! 1-WL color refinement, used as an independent oracle for TMD.
//!
//! Colors are interned canonical keys: round 0 uses the raw feature bits and
//! round k uses `(own color, sorted neighbor colors)` from round k−1. Interning
//! exact keys instead of hashing them rules out collisions.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum ColorKey {
    Feature(Vec<u64>),
    Refined(u32, Vec<u32>),
}

#[derive(Debug, Default)]
struct ColorTable {
    ids: HashMap<ColorKey, u32>,
}

impl ColorTable {
    fn id(&mut self, key: ColorKey) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(key).or_insert(next)
    }

    fn refine(&mut self, g: &Graph, rounds: usize) -> Vec<Vec<u32>> {
        let mut all = Vec::with_capacity(rounds + 1);
        let mut colors: Vec<u32> =
            g.features().iter().map(|f| self.id(ColorKey::Feature(f.iter().map(|v| v.to_bits()).collect()))).collect();
        all.push(colors.clone());
        for _ in 0..rounds {
            colors = (0..g.node_count())
                .map(|v| {
                    let mut nb: Vec<u32> = g.neighbors(v).iter().map(|&u| colors[u]).collect();
                    nb.sort_unstable();
                    self.id(ColorKey::Refined(colors[v], nb))
                })
                .collect();
            all.push(colors.clone());
        }
        all
    }
}

/// Node colors after each refinement round, plus the final histogram.
///
/// Color ids are only comparable between graphs refined with a shared table,
/// which [`wl_distinguishable`] arranges.
#[derive(Debug, Clone, Serialize)]
pub struct WlColoring {
    /// `rounds[k][v]` is the color of node `v` after `k` rounds.
    pub rounds: Vec<Vec<u32>>,
    /// Multiplicity of each final-round color.
    pub histogram: BTreeMap<u32, usize>,
}

fn histogram(colors: &[u32]) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for &c in colors {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

pub fn wl_colors(g: &Graph, k: usize) -> WlColoring {
    let rounds = ColorTable::default().refine(g, k);
    let histogram = histogram(rounds.last().expect("round 0 always present"));
    WlColoring { rounds, histogram }
}

/// True iff `k` rounds of 1-WL produce different color histograms.
pub fn wl_distinguishable(g: &Graph, h: &Graph, k: usize) -> bool {
    let mut table = ColorTable::default();
    let a = table.refine(g, k);
    let b = table.refine(h, k);
    histogram(&a[k]) != histogram(&b[k])
}
