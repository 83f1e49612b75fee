//! Multisets of feature vectors, the blank augmentation map and exact
//! Wasserstein distances.
//!
//! A [`Multiset`] holds `r ≤ n` vectors of a common dimension `d`. Distances
//! between equal-size multisets are solved exactly as assignment problems;
//! multisets of different sizes must first be padded to capacity with a blank
//! vector `z` ([`augment`]), which is what [`augmented_wasserstein`] does.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::assignment::min_cost;
use crate::error::{ensure_finite, invalid, Error, Result};

/// A feature vector in R^d.
pub type FeatureVector = Vec<f64>;

/// Ground cost used between matched elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InnerNorm {
    /// `‖x − y‖_1`, the default ground cost of W_1.
    #[default]
    L1,
    /// `‖x − y‖_p` with the same `p` as the transport exponent.
    Lp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MultisetRepr", into = "MultisetRepr")]
pub struct Multiset {
    dim: usize,
    capacity: usize,
    elements: Vec<FeatureVector>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultisetRepr {
    dim: usize,
    capacity: usize,
    elements: Vec<FeatureVector>,
}

impl TryFrom<MultisetRepr> for Multiset {
    type Error = Error;
    fn try_from(r: MultisetRepr) -> Result<Self> {
        Multiset::new(r.dim, r.capacity, r.elements)
    }
}

impl From<Multiset> for MultisetRepr {
    fn from(m: Multiset) -> Self {
        MultisetRepr { dim: m.dim, capacity: m.capacity, elements: m.elements }
    }
}

pub(crate) fn cmp_vectors(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or_else(|| a.len().cmp(&b.len()))
}

impl Multiset {
    pub fn new(dim: usize, capacity: usize, elements: Vec<FeatureVector>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("multiset dimension must be at least 1"));
        }
        if elements.len() > capacity {
            return Err(Error::CapacityExceeded { size: elements.len(), capacity });
        }
        for e in &elements {
            if e.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.len() });
            }
            ensure_finite(e, "multiset element")?;
        }
        Ok(Multiset { dim, capacity, elements })
    }

    /// A multiset whose capacity equals its size.
    pub fn full(dim: usize, elements: Vec<FeatureVector>) -> Result<Self> {
        let n = elements.len();
        Self::new(dim, n, elements)
    }

    /// One-dimensional multiset with capacity equal to its size.
    pub fn scalars(values: &[f64]) -> Result<Self> {
        Self::full(1, values.iter().map(|&v| vec![v]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[FeatureVector] {
        &self.elements
    }

    /// Same multiset with a different capacity.
    pub fn with_capacity(&self, capacity: usize) -> Result<Self> {
        Self::new(self.dim, capacity, self.elements.clone())
    }

    /// Every element multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let elements = self.elements.iter().map(|e| e.iter().map(|v| v * s).collect()).collect();
        Multiset { dim: self.dim, capacity: self.capacity, elements }
    }

    /// Largest Euclidean norm among the elements (0 when empty).
    pub fn max_norm(&self) -> f64 {
        self.elements.iter().map(|e| crate::linalg::norm2(e)).fold(0.0, f64::max)
    }

    fn sorted_elements(&self) -> Vec<&FeatureVector> {
        let mut v: Vec<&FeatureVector> = self.elements.iter().collect();
        v.sort_by(|a, b| cmp_vectors(a, b));
        v
    }
}

/// Equality up to permutation of the elements.
impl PartialEq for Multiset {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.capacity == other.capacity
            && self.len() == other.len()
            && self.sorted_elements().iter().zip(other.sorted_elements()).all(|(a, b)| cmp_vectors(a, b).is_eq())
    }
}

/// Pads `x` with copies of `z` up to its capacity.
pub fn augment(x: &Multiset, z: &[f64]) -> Result<Multiset> {
    if z.len() != x.dim {
        return Err(Error::DimensionMismatch { expected: x.dim, found: z.len() });
    }
    ensure_finite(z, "blank vector")?;
    let mut elements = x.elements.clone();
    elements.resize(x.capacity, z.to_vec());
    Ok(Multiset { dim: x.dim, capacity: x.capacity, elements })
}

pub(crate) fn ground_cost(a: &[f64], b: &[f64], p: f64, inner: InnerNorm) -> f64 {
    match inner {
        InnerNorm::L1 => {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
            if p == 1.0 {
                d
            } else {
                d.powf(p)
            }
        }
        InnerNorm::Lp => {
            if p == 1.0 {
                a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
            } else if p == 2.0 {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
            } else {
                a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum()
            }
        }
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("transport exponent p must be a finite real ≥ 1, got {p}")))
    }
}

/// `(min_τ Σ_i c(x_i, y_τ(i)))^{1/p}` with `c = ‖·‖_1^p` or `‖·‖_p^p`.
///
/// Both multisets must have the same number of elements.
pub fn wasserstein(x: &Multiset, y: &Multiset, p: f64, inner: InnerNorm) -> Result<f64> {
    check_p(p)?;
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch { expected: x.dim, found: y.dim });
    }
    if x.len() != y.len() {
        return Err(Error::Unbalanced { left: x.len(), right: y.len() });
    }
    // a fixed argument order makes the result exactly symmetric
    let (x, y) = if lex_cmp(&x.elements, &y.elements).is_gt() { (y, x) } else { (x, y) };
    let cost: Vec<Vec<f64>> =
        x.elements.iter().map(|a| y.elements.iter().map(|b| ground_cost(a, b, p, inner)).collect()).collect();
    let total = min_cost(&cost).max(0.0);
    Ok(if p == 1.0 { total } else { total.powf(1.0 / p) })
}

fn lex_cmp(a: &[FeatureVector], b: &[FeatureVector]) -> std::cmp::Ordering {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(u, v)| u.total_cmp(v))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Wasserstein distance after padding both multisets to their common
/// capacity with `z`. `z` should lie outside the feature domain.
pub fn augmented_wasserstein(x: &Multiset, y: &Multiset, z: &[f64], p: f64, inner: InnerNorm) -> Result<f64> {
    if x.capacity != y.capacity {
        return Err(Error::CapacityMismatch { left: x.capacity, right: y.capacity });
    }
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch { expected: x.dim, found: y.dim });
    }
    wasserstein(&augment(x, z)?, &augment(y, z)?, p, inner)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn augment_examples() {
        let x = Multiset::new(1, 3, vec![vec![1.0]]).unwrap();
        let a = augment(&x, &[-3.0]).unwrap();
        assert_eq!(a.elements(), &[vec![1.0], vec![-3.0], vec![-3.0]]);
        assert_eq!(augment(&a, &[-3.0]).unwrap(), a);
        let e = Multiset::new(1, 2, vec![]).unwrap();
        assert_eq!(augment(&e, &[-3.0]).unwrap().elements(), &[vec![-3.0], vec![-3.0]]);
        assert!(matches!(augment(&x, &[0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(Multiset::new(1, 1, vec![vec![0.0], vec![1.0]]), Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn equality_ignores_order() {
        let a = Multiset::scalars(&[1.0, 2.0, 2.0]).unwrap();
        let b = Multiset::scalars(&[2.0, 1.0, 2.0]).unwrap();
        let c = Multiset::scalars(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn wasserstein_examples() {
        let w = |a: &[f64], b: &[f64]| {
            wasserstein(&Multiset::scalars(a).unwrap(), &Multiset::scalars(b).unwrap(), 1.0, InnerNorm::L1).unwrap()
        };
        assert_eq!(w(&[0.0], &[1.0]), 1.0);
        assert!((w(&[-0.1, 0.1], &[-0.2, 0.2]) - 0.2).abs() < 1e-15);
        assert_eq!(w(&[0.3, -1.0, 2.0], &[2.0, 0.3, -1.0]), 0.0);
        let r = wasserstein(
            &Multiset::scalars(&[0.0]).unwrap(),
            &Multiset::scalars(&[0.0, 1.0]).unwrap(),
            1.0,
            InnerNorm::L1,
        );
        assert!(matches!(r, Err(Error::Unbalanced { .. })));
    }

    #[test]
    fn augmented_examples() {
        let x = Multiset::new(2, 2, vec![vec![1.0, 2.0]]).unwrap();
        let y = Multiset::new(2, 2, vec![vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let z = [-1.0, -1.0];
        // forced: one copy of x matches itself, the blank pays ‖x − z‖_1 = 5
        let d = augmented_wasserstein(&x, &y, &z, 1.0, InnerNorm::L1).unwrap();
        assert!((d - 5.0).abs() < 1e-15);
        let e = Multiset::new(2, 1, vec![]).unwrap();
        let f = Multiset::new(2, 1, vec![vec![0.5, 0.0]]).unwrap();
        assert!((augmented_wasserstein(&e, &f, &z, 1.0, InnerNorm::L1).unwrap() - 2.5).abs() < 1e-15);
        let g = Multiset::new(2, 3, vec![]).unwrap();
        assert!(matches!(augmented_wasserstein(&e, &g, &z, 1.0, InnerNorm::L1), Err(Error::CapacityMismatch { .. })));
    }

    #[test]
    fn w2_with_l2_ground_cost() {
        let x = Multiset::full(2, vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let y = Multiset::full(2, vec![vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let d = wasserstein(&x, &y, 2.0, InnerNorm::Lp).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let m = Multiset::new(1, 3, vec![vec![0.5], vec![-1.0]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"dim":1,"capacity":3,"elements":[[0.5],[-1.0]]}"#);
        let back: Multiset = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = serde_json::from_str::<Multiset>(r#"{"dim":2,"capacity":3,"elements":[[0.5]]}"#);
        assert!(bad.is_err());
    }
}
