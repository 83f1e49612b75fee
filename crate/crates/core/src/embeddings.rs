//! Parametric multiset embeddings and their random parameters.
//!
//! | family | value |
//! |---|---|
//! | [`m_sigma`] | `Σ_i σ(a·x_i − b)` |
//! | [`m_adapt`] | `[r, m, M, (1/r) Σ_i ReLU(a·x_i − b)]` with `b = (1−t)m + tM` |
//! | [`s_sort`]  | `b · sort(a·ρ_z(X))` |
//!
//! `a` is uniform on the unit sphere, `b ~ U[−B, B]`, `t ~ U[0, 1]`, and the
//! sort weights `b` are uniform on S^{n−1}. A width-W embedding stacks W
//! independent copies and scales every coordinate by `W^{−1/p}`, so the plain
//! l_p distance between stacked outputs is the Monte-Carlo average of the
//! per-copy gaps: its expectation does not depend on W while its variance
//! decays like 1/W.
//!
//! Sums are accumulated in sorted order, so every embedding is bit-exactly
//! invariant to the order of the multiset's elements.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::linalg::{dot, sorted_sum};
use crate::multiset::Multiset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(invalid(format!("unknown activation '{s}' (relu, sigmoid, tanh)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumEmbedParams {
    pub a: Vec<f64>,
    pub b: f64,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptParams {
    pub a: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortParams {
    pub a: Vec<f64>,
    /// Weights over the sorted projections; its length is the capacity n.
    pub b: Vec<f64>,
    /// Blank vector used to pad to capacity.
    pub z: Vec<f64>,
}

/// Uniform point on S^{d−1}: a normalized standard Gaussian vector.
pub fn sample_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    assert!(d >= 1, "sphere dimension must be positive");
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = crate::linalg::norm2(&v);
        // the all-zero draw has probability zero; resample if it happens
        if norm > 0.0 && norm.is_finite() {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform on `[−B, B]`.
pub fn sample_interval<R: Rng + ?Sized>(bound: f64, rng: &mut R) -> f64 {
    (2.0 * rng.random::<f64>() - 1.0) * bound
}

/// Uniform on `[0, 1]`.
pub fn sample_t<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

fn check_dim(x: &Multiset, a: &[f64]) -> Result<()> {
    if a.len() == x.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: x.dim(), found: a.len() })
    }
}

/// `Σ_i σ(a·x_i − b)`; the empty multiset maps to 0.
pub fn m_sigma(x: &Multiset, params: &SumEmbedParams) -> Result<f64> {
    check_dim(x, &params.a)?;
    let mut terms: Vec<f64> =
        x.elements().iter().map(|e| params.activation.apply(dot(&params.a, e) - params.b)).collect();
    Ok(sorted_sum(&mut terms))
}

/// `[r, m, M, mean ReLU(a·x_i − b)]` with the bias placed between the
/// smallest and largest projection.
pub fn m_adapt(x: &Multiset, params: &AdaptParams) -> Result<[f64; 4]> {
    check_dim(x, &params.a)?;
    if x.is_empty() {
        return Err(Error::EmptyMultiset);
    }
    let proj: Vec<f64> = x.elements().iter().map(|e| dot(&params.a, e)).collect();
    Ok(adapt_from_projections(&proj, params.t))
}

pub(crate) fn adapt_from_projections(proj: &[f64], t: f64) -> [f64; 4] {
    let m = proj.iter().copied().fold(f64::INFINITY, f64::min);
    let big_m = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let b = (1.0 - t) * m + t * big_m;
    let mut terms: Vec<f64> = proj.iter().map(|&v| (v - b).max(0.0)).collect();
    let r = proj.len() as f64;
    [r, m, big_m, sorted_sum(&mut terms) / r]
}

/// `b · sort(a·ρ_z(X))` with ascending sort.
pub fn s_sort(x: &Multiset, params: &SortParams) -> Result<f64> {
    check_dim(x, &params.a)?;
    if params.z.len() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: params.z.len() });
    }
    let n = params.b.len();
    if x.len() > n {
        return Err(Error::CapacityExceeded { size: x.len(), capacity: n });
    }
    let mut proj: Vec<f64> = x.elements().iter().map(|e| dot(&params.a, e)).collect();
    proj.resize(n, dot(&params.a, &params.z));
    proj.sort_unstable_by(f64::total_cmp);
    Ok(dot(&params.b, &proj))
}

/// A multiset embedding family and the hyperparameters of its sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum MultisetEmbedding {
    /// `m_σ` with bias drawn from `[−bias_range, bias_range]`.
    Sum {
        activation: Activation,
        bias_range: f64,
    },
    Adapt,
    /// `S_z` with weights on S^{capacity−1}.
    Sort {
        capacity: usize,
        z: Vec<f64>,
    },
}

/// One sampled copy of any embedding family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum EmbeddingParams {
    Sum(SumEmbedParams),
    Adapt(AdaptParams),
    Sort(SortParams),
}

impl MultisetEmbedding {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            MultisetEmbedding::Sum { bias_range, .. } if !(*bias_range > 0.0 && bias_range.is_finite()) => {
                Err(invalid(format!("bias range must be positive and finite, got {bias_range}")))
            }
            MultisetEmbedding::Sort { capacity, z } => {
                if *capacity == 0 {
                    return Err(invalid("sort capacity must be positive"));
                }
                if z.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: z.len() });
                }
                ensure_finite(z, "blank vector")
            }
            _ => Ok(()),
        }
    }

    /// Coordinates produced by one copy.
    pub fn output_len(&self) -> usize {
        match self {
            MultisetEmbedding::Adapt => 4,
            _ => 1,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> EmbeddingParams {
        match self {
            MultisetEmbedding::Sum { activation, bias_range } => EmbeddingParams::Sum(SumEmbedParams {
                a: sample_sphere(dim, rng),
                b: sample_interval(*bias_range, rng),
                activation: *activation,
            }),
            MultisetEmbedding::Adapt => {
                EmbeddingParams::Adapt(AdaptParams { a: sample_sphere(dim, rng), t: sample_t(rng) })
            }
            MultisetEmbedding::Sort { capacity, z } => EmbeddingParams::Sort(SortParams {
                a: sample_sphere(dim, rng),
                b: sample_sphere(*capacity, rng),
                z: z.clone(),
            }),
        }
    }
}

impl EmbeddingParams {
    pub fn evaluate(&self, x: &Multiset) -> Result<Vec<f64>> {
        Ok(match self {
            EmbeddingParams::Sum(p) => vec![m_sigma(x, p)?],
            EmbeddingParams::Adapt(p) => m_adapt(x, p)?.to_vec(),
            EmbeddingParams::Sort(p) => vec![s_sort(x, p)?],
        })
    }
}

/// `W` independent copies of one embedding family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedParams {
    pub copies: Vec<EmbeddingParams>,
}

impl StackedParams {
    pub fn sample<R: Rng + ?Sized>(family: &MultisetEmbedding, width: usize, dim: usize, rng: &mut R) -> Self {
        StackedParams { copies: (0..width).map(|_| family.sample(dim, rng)).collect() }
    }

    pub fn width(&self) -> usize {
        self.copies.len()
    }
}

/// Concatenated outputs of all copies, each coordinate scaled by `W^{−1/p}`.
pub fn stacked_embed(x: &Multiset, params: &StackedParams, p: f64) -> Result<Vec<f64>> {
    let w = params.width();
    if w == 0 {
        return Err(invalid("stacked embedding needs at least one copy"));
    }
    let scale = (w as f64).powf(-1.0 / p);
    let mut out = Vec::with_capacity(w);
    for c in &params.copies {
        out.extend(c.evaluate(x)?.into_iter().map(|v| v * scale));
    }
    Ok(out)
}

/// `∫_lo^hi |Σ_j ReLU(y_j − b) − Σ_i ReLU(x_i − b)|^p db` for `p ∈ {1, 2}`.
///
/// The integrand is piecewise linear with kinks at the entries of `x` and `y`,
/// so each segment is integrated in closed form. Entries may lie anywhere;
/// `x` and `y` need not be sorted or of equal length.
pub(crate) fn relu_bias_integral(x: &[f64], y: &[f64], lo: f64, hi: f64, p: u32) -> f64 {
    debug_assert!(p == 1 || p == 2);
    let mut pts: Vec<(f64, f64)> = y.iter().map(|&v| (v, 1.0)).chain(x.iter().map(|&v| (v, -1.0))).collect();
    pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    // For b in a segment, Δ(b) = s1 − s0·b with s1 = Σ_{v>b} w v and s0 = Σ_{v>b} w.
    // Sweep from the top: kinks strictly above hi are active on all of [lo, hi].
    let mut idx = pts.len();
    let (mut s1, mut s0) = (0.0, 0.0);
    while idx > 0 && pts[idx - 1].0 >= hi {
        idx -= 1;
        s1 += pts[idx].1 * pts[idx].0;
        s0 += pts[idx].1;
    }
    let mut upper = hi;
    let mut total = 0.0;
    loop {
        let lower = if idx > 0 && pts[idx - 1].0 > lo { pts[idx - 1].0 } else { lo };
        if upper > lower {
            let (fa, fb) = (s1 - s0 * lower, s1 - s0 * upper);
            total += segment_integral(fa, fb, upper - lower, p);
        }
        if lower <= lo {
            break;
        }
        // absorb every kink located exactly at `lower`
        while idx > 0 && pts[idx - 1].0 >= lower {
            idx -= 1;
            s1 += pts[idx].1 * pts[idx].0;
            s0 += pts[idx].1;
        }
        upper = lower;
    }
    total
}

#[inline]
fn segment_integral(fa: f64, fb: f64, len: f64, p: u32) -> f64 {
    if p == 2 {
        len * (fa * fa + fa * fb + fb * fb) / 3.0
    } else if fa * fb >= 0.0 {
        len * (fa.abs() + fb.abs()) / 2.0
    } else {
        len * (fa * fa + fb * fb) / (2.0 * (fa.abs() + fb.abs()))
    }
}

fn check_oracle_p(p: u32) -> Result<()> {
    if p == 1 || p == 2 {
        Ok(())
    } else {
        Err(invalid(format!("the exact bias oracle supports p ∈ {{1, 2}}, got {p}")))
    }
}

/// `E_{b ~ U[−B, B]} |q_b(y) − q_b(x)|^p` exactly, with `q_b(v) = Σ ReLU(v_i − b)`.
pub fn exact_relu_bias_expectation(x: &[f64], y: &[f64], bound: f64, p: u32) -> Result<f64> {
    check_oracle_p(p)?;
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(invalid(format!("bias bound must be positive, got {bound}")));
    }
    ensure_finite(x, "oracle input")?;
    ensure_finite(y, "oracle input")?;
    if x.iter().chain(y).any(|v| v.abs() > bound) {
        return Err(invalid("oracle inputs must lie in [−B, B]"));
    }
    Ok(relu_bias_integral(x, y, -bound, bound, p) / (2.0 * bound))
}

/// Exact `E_{a, b} |m_relu(X) − m_relu(Y)|^p` for scalar multisets, where
/// `a` is uniform on {−1, +1} and `b ~ U[−B, B]`.
pub fn exact_relu_gap_1d(x: &Multiset, y: &Multiset, bound: f64, p: u32) -> Result<f64> {
    if x.dim() != 1 || y.dim() != 1 {
        return Err(invalid("the exact ReLU gap is defined for scalar multisets"));
    }
    let xs: Vec<f64> = x.elements().iter().map(|e| e[0]).collect();
    let ys: Vec<f64> = y.elements().iter().map(|e| e[0]).collect();
    let neg = |v: &[f64]| v.iter().map(|t| -t).collect::<Vec<_>>();
    let plus = exact_relu_bias_expectation(&xs, &ys, bound, p)?;
    let minus = exact_relu_bias_expectation(&neg(&xs), &neg(&ys), bound, p)?;
    Ok(0.5 * (plus + minus))
}

/// Lower bound `‖x − y‖_∞^{p+1} / (8 n (2B) 4^p)` on the exact bias
/// expectation, with `x`, `y` compared after sorting.
pub fn relu_gap_lower_bound(x: &[f64], y: &[f64], bound: f64, p: u32) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(invalid("lower bound needs two non-empty vectors of equal length"));
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    let inf = xs.iter().zip(&ys).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let n = x.len() as f64;
    Ok(inf.powi(p as i32 + 1) / (8.0 * n * 2.0 * bound * 4f64.powi(p as i32)))
}
