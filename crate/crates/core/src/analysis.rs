//! Measurements on random embeddings: exponent fits over ε-sweeps,
//! distortion, variance against width, and frozen-embedding probes.
//!
//! The exponent is the least-squares slope of `log (E gap^p)^{1/p}` against
//! `log d(x, y)`. A slope of 1 means the embedding separates the family as
//! well as the input metric does; larger slopes mean the output gap vanishes
//! faster than the input distance.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversarial::{adapt_adversarial_pair, eps_tree_pair, normalized_equal_moments_pair, pm_epsilon_pair};
use crate::embeddings::{exact_relu_gap_1d, stacked_embed, Activation, MultisetEmbedding, StackedParams};
use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::linalg::{dist_p, dist_p_pow, mean_std, norm2};
use crate::mpnn::{gap_samples, GapMode, MpnnConfig};
use crate::multiset::{wasserstein, InnerNorm, Multiset};

/// Records whose `(gap_mean)^{1/p}` is below this are floating-point noise
/// and are left out of fits.
pub const NOISE_FLOOR: f64 = 1e-13;

/// One point of an ε-sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub epsilon: f64,
    pub input_distance: f64,
    /// `E ‖Δ‖_p^p`.
    pub gap_mean: f64,
    pub gap_std: f64,
    pub samples: usize,
}

impl ExperimentRecord {
    pub fn normalized_gap(&self, p: f64) -> f64 {
        self.gap_mean.powf(1.0 / p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub p: f64,
    /// Records used in the fit.
    pub points: usize,
    /// Records dropped below [`NOISE_FLOOR`].
    pub excluded: usize,
    /// Smallest and largest input distance used.
    pub fit_range: (f64, f64),
}

/// Least-squares slope on log–log axes, after dropping records under the
/// noise floor. Fewer than five usable records is a numerical failure.
pub fn fit_exponent(records: &[ExperimentRecord], p: f64) -> Result<HolderEstimate> {
    crate::multiset::check_p(p)?;
    if records.len() < 5 {
        return Err(invalid(format!("exponent fit needs at least 5 records, got {}", records.len())));
    }
    if let Some(r) = records.iter().find(|r| !(r.input_distance > 0.0) || !(r.gap_mean >= 0.0)) {
        return Err(invalid(format!(
            "records need positive input distance and non-negative gap, got {} and {}",
            r.input_distance, r.gap_mean
        )));
    }
    let kept: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.normalized_gap(p) >= NOISE_FLOOR)
        .map(|r| (r.input_distance.ln(), r.normalized_gap(p).ln()))
        .collect();
    let excluded = records.len() - kept.len();
    if kept.len() < 5 {
        return Err(Error::Numerical(format!(
            "only {} of {} records lie above the noise floor {NOISE_FLOOR:e}; use larger ε values",
            kept.len(),
            records.len()
        )));
    }
    let (slope, intercept, r2) = least_squares(&kept);
    let used = records.iter().filter(|r| r.normalized_gap(p) >= NOISE_FLOOR).map(|r| r.input_distance);
    let fit_range = used.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    Ok(HolderEstimate { slope, intercept, r2, p, points: kept.len(), excluded, fit_range })
}

/// `(slope, intercept, r²)` of `y ≈ slope·x + intercept`.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, my - slope * mx, r2)
}

/// Largest ratio over smallest ratio.
pub fn distortion(ratios: &[f64]) -> Result<f64> {
    if ratios.len() < 2 {
        return Err(invalid("distortion needs at least two ratios"));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(invalid(format!("distortion needs positive finite ratios, got {r}")));
    }
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max / min)
}

/// Two inputs compared by an embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pair {
    Multisets { x: Multiset, y: Multiset },
    Graphs { g: Graph, h: Graph },
}

/// Parametrized adversarial families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PairFamily {
    /// `({{−ε, ε}}, {{−2ε, 2ε}})`.
    PmEpsilon,
    /// The normalized equal-moments pair of length `2^k`, scaled by ε.
    EqualMoments {
        k: u32,
    },
    /// `({{1, 0, 0, −1}}, {{1, ε, −ε, −1}})`, needs ε < 1.
    AdaptAdversarial,
    EpsTrees {
        level: usize,
        internal_feature: f64,
    },
}

impl PairFamily {
    pub fn pair(&self, eps: f64) -> Result<Pair> {
        Ok(match *self {
            PairFamily::PmEpsilon => {
                let (x, y) = pm_epsilon_pair(eps)?;
                Pair::Multisets { x, y }
            }
            PairFamily::EqualMoments { k } => {
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(invalid(format!("epsilon must be positive and finite, got {eps}")));
                }
                let (x, y) = normalized_equal_moments_pair(k)?;
                let scale = |v: &[f64]| v.iter().map(|e| e * eps).collect::<Vec<_>>();
                Pair::Multisets { x: Multiset::scalars(&scale(&x))?, y: Multiset::scalars(&scale(&y))? }
            }
            PairFamily::AdaptAdversarial => {
                let (x, y) = adapt_adversarial_pair(eps)?;
                Pair::Multisets { x, y }
            }
            PairFamily::EpsTrees { level, internal_feature } => {
                let t = eps_tree_pair(level, eps, internal_feature)?;
                Pair::Graphs { g: t.g, h: t.g_hat }
            }
        })
    }
}

/// What maps the pair to vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingSpec {
    /// `width` stacked copies of a multiset embedding.
    Multiset {
        family: MultisetEmbedding,
        width: usize,
    },
    Mpnn {
        config: MpnnConfig,
    },
}

/// Settings shared by the sweep operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub p: f64,
    pub draws: usize,
    pub seed: u64,
    /// Use closed-form bias integration where it exists: the scalar ReLU
    /// multiset embedding and the ReLU network readout.
    pub exact: bool,
    /// Node norm of the tree distance.
    pub tmd_norm: f64,
    /// Blank feature of the tree distance; zeros when absent.
    pub tmd_blank: Option<Vec<f64>>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { p: 2.0, draws: 1000, seed: 0, exact: false, tmd_norm: 2.0, tmd_blank: None }
    }
}

/// Input distance: `W_1` (l1 ground cost) for balanced multisets, and
/// `TMD^{(K)}` for graphs with `K` the network depth (0 for multiset specs).
pub fn input_distance(pair: &Pair, depth: usize, opts: &SweepOptions) -> Result<f64> {
    match pair {
        Pair::Multisets { x, y } => wasserstein(x, y, 1.0, InnerNorm::L1),
        Pair::Graphs { g, h } => {
            let z = opts.tmd_blank.clone().unwrap_or_else(|| vec![0.0; g.dim()]);
            crate::tmd::tmd(g, h, depth, &z, opts.tmd_norm)
        }
    }
}

fn spec_depth(spec: &EmbeddingSpec) -> usize {
    match spec {
        EmbeddingSpec::Multiset { .. } => 0,
        EmbeddingSpec::Mpnn { config } => config.depth,
    }
}

/// Per-draw gaps `‖f(x) − f(y)‖_p^p` for every pair, one row per pair.
/// Each draw is shared across all pairs.
pub fn gap_draws(pairs: &[Pair], spec: &EmbeddingSpec, opts: &SweepOptions) -> Result<Vec<Vec<f64>>> {
    if opts.draws == 0 {
        return Err(invalid("need at least one parameter draw"));
    }
    match spec {
        EmbeddingSpec::Multiset { family, width } => {
            let sets: Vec<(&Multiset, &Multiset)> = pairs
                .iter()
                .map(|p| match p {
                    Pair::Multisets { x, y } => Ok((x, y)),
                    Pair::Graphs { .. } => Err(invalid("a multiset embedding cannot embed graphs")),
                })
                .collect::<Result<_>>()?;
            let dim = sets.first().map_or(1, |s| s.0.dim());
            family.validate(dim)?;
            if *width == 0 {
                return Err(invalid("width must be positive"));
            }
            let per_draw: Vec<Vec<f64>> = (0..opts.draws as u64)
                .into_par_iter()
                .map(|d| {
                    let mut rng = crate::rng::stream(opts.seed, d);
                    let params = StackedParams::sample(family, *width, dim, &mut rng);
                    sets.iter()
                        .map(|(x, y)| {
                            let (a, b) = (stacked_embed(x, &params, opts.p)?, stacked_embed(y, &params, opts.p)?);
                            Ok(dist_p_pow(&a, &b, opts.p))
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            Ok((0..pairs.len()).map(|i| per_draw.iter().map(|r| r[i]).collect()).collect())
        }
        EmbeddingSpec::Mpnn { config } => {
            let graphs: Vec<(Graph, Graph)> = pairs
                .iter()
                .map(|p| match p {
                    Pair::Graphs { g, h } => Ok((g.clone(), h.clone())),
                    Pair::Multisets { .. } => Err(invalid("a network embeds graphs, not multisets")),
                })
                .collect::<Result<_>>()?;
            let mut cfg = config.clone();
            cfg.p = opts.p;
            let mode = if opts.exact { GapMode::ExactReadoutBias } else { GapMode::MonteCarlo };
            gap_samples(&graphs, &cfg, opts.draws, opts.seed, mode)
        }
    }
}

/// Exact `E‖Δ‖_p^p` for a scalar ReLU multiset embedding with `a = ±1`.
fn exact_multiset_gap(pair: &Pair, family: &MultisetEmbedding, p: f64) -> Result<Option<f64>> {
    match (pair, family) {
        (Pair::Multisets { x, y }, MultisetEmbedding::Sum { activation: Activation::Relu, bias_range })
            if x.dim() == 1 && (p == 1.0 || p == 2.0) =>
        {
            Ok(Some(exact_relu_gap_1d(x, y, *bias_range, p as u32)?))
        }
        _ => Ok(None),
    }
}

/// One record per ε: the family's input distance and the mean and standard
/// deviation of the output gap over parameter draws.
pub fn distortion_sweep(
    family: impl Fn(f64) -> Result<Pair>,
    spec: &EmbeddingSpec,
    eps_grid: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<ExperimentRecord>> {
    if eps_grid.len() < 5 {
        return Err(invalid(format!("ε grid needs at least 5 points, got {}", eps_grid.len())));
    }
    if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(invalid(format!("ε grid must be strictly positive, got {e}")));
    }
    let pairs: Vec<Pair> = eps_grid.iter().map(|&e| family(e)).collect::<Result<_>>()?;
    let depth = spec_depth(spec);
    let distances: Vec<f64> = pairs.iter().map(|p| input_distance(p, depth, opts)).collect::<Result<_>>()?;
    if let Some(i) = distances.iter().position(|&d| !(d > 0.0)) {
        return Err(invalid(format!("input distance is zero at ε = {}", eps_grid[i])));
    }
    let exact: Option<Vec<f64>> = match spec {
        EmbeddingSpec::Multiset { family, .. } if opts.exact => {
            let vals: Vec<Option<f64>> =
                pairs.iter().map(|p| exact_multiset_gap(p, family, opts.p)).collect::<Result<_>>()?;
            if vals.iter().any(Option::is_none) {
                return Err(invalid("the exact oracle covers the scalar relu sum embedding with p ∈ {1, 2}"));
            }
            Some(vals.into_iter().flatten().collect())
        }
        _ => None,
    };
    let records = match exact {
        Some(vals) => eps_grid
            .iter()
            .zip(&distances)
            .zip(vals)
            .map(|((&epsilon, &input_distance), gap_mean)| ExperimentRecord {
                epsilon,
                input_distance,
                gap_mean,
                gap_std: 0.0,
                samples: 1,
            })
            .collect(),
        None => {
            let rows = gap_draws(&pairs, spec, opts)?;
            eps_grid
                .iter()
                .zip(&distances)
                .zip(rows)
                .map(|((&epsilon, &input_distance), samples)| {
                    let (gap_mean, gap_std) = mean_std(&samples);
                    ExperimentRecord { epsilon, input_distance, gap_mean, gap_std, samples: samples.len() }
                })
                .collect()
        }
    };
    Ok(records)
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Statistics of `F_W = ‖Δ_W‖_p^p / d(x, y)^p` across draws at one width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub width: usize,
    pub mean: f64,
    pub std: f64,
    pub samples: usize,
}

/// `F_W` for each width: multiset specs stack `W` copies, network specs
/// stack `W` independent networks.
pub fn variance_vs_width(
    spec: &EmbeddingSpec,
    pair: &Pair,
    widths: &[usize],
    opts: &SweepOptions,
) -> Result<Vec<WidthRow>> {
    if widths.len() < 3 || widths.windows(2).any(|w| w[0] >= w[1]) || widths[0] == 0 {
        return Err(invalid("need at least 3 strictly increasing positive widths"));
    }
    if opts.draws < 2 {
        return Err(invalid("variance needs at least two draws"));
    }
    let d = input_distance(pair, spec_depth(spec), opts)?;
    if !(d > 0.0) {
        return Err(invalid("input distance of the pair is zero"));
    }
    widths
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let spec_w = match spec {
                EmbeddingSpec::Multiset { family, .. } => EmbeddingSpec::Multiset { family: family.clone(), width: w },
                EmbeddingSpec::Mpnn { config } => {
                    let mut config = config.clone();
                    config.stack = w;
                    EmbeddingSpec::Mpnn { config }
                }
            };
            let o = SweepOptions { seed: crate::rng::child_seed(opts.seed, i as u64), ..opts.clone() };
            let gaps = gap_draws(std::slice::from_ref(pair), &spec_w, &o)?.remove(0);
            let f: Vec<f64> = gaps.iter().map(|g| g / d.powf(opts.p)).collect();
            let (mean, std) = mean_std(&f);
            Ok(WidthRow { width: w, mean, std, samples: f.len() })
        })
        .collect()
}

/// Feature scaling applied before the nearest-centroid rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProbeNormalization {
    None,
    /// Each embedding divided by its Euclidean norm.
    UnitNorm,
    /// Each coordinate standardized with training-set mean and std.
    Standardize,
    /// Whitened by the pooled within-class covariance of the training set,
    /// shrunk toward a multiple of the identity (Ledoit–Wolf). Nearest
    /// centroid then becomes linear discriminant analysis.
    #[default]
    Whiten,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// Share of each class used to fit the centroids.
    pub train_fraction: f64,
    pub normalization: ProbeNormalization,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { train_fraction: 0.5, normalization: ProbeNormalization::default(), seed: 0 }
    }
}

/// Test accuracy of a nearest-centroid classifier on frozen embeddings,
/// with a seeded split stratified by class.
pub fn frozen_probe_accuracy(data: &[(Vec<f64>, i64)], opts: &ProbeOptions) -> Result<f64> {
    let mut classes: Vec<i64> = data.iter().map(|d| d.1).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(invalid("probe needs at least two classes"));
    }
    let dim = data[0].0.len();
    if data.iter().any(|d| d.0.len() != dim) {
        return Err(invalid("embeddings must share one dimension"));
    }
    if !(opts.train_fraction > 0.0 && opts.train_fraction < 1.0) {
        return Err(invalid("train fraction must lie in (0, 1)"));
    }
    let mut rng = crate::rng::stream(opts.seed, 0);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for &c in &classes {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data[i].1 == c).collect();
        if idx.len() < 4 {
            return Err(invalid(format!("class {c} has {} examples; the probe needs at least 4", idx.len())));
        }
        idx.shuffle(&mut rng);
        let cut = ((idx.len() as f64 * opts.train_fraction).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    let unit = |v: &[f64]| {
        let n = norm2(v);
        if n > 0.0 {
            v.iter().map(|x| x / n).collect()
        } else {
            v.to_vec()
        }
    };
    let mut feats: Vec<Vec<f64>> = match opts.normalization {
        ProbeNormalization::UnitNorm => data.iter().map(|d| unit(&d.0)).collect(),
        _ => data.iter().map(|d| d.0.clone()).collect(),
    };
    if opts.normalization == ProbeNormalization::Standardize {
        for j in 0..dim {
            let col: Vec<f64> = train.iter().map(|&i| feats[i][j]).collect();
            let (m, s) = mean_std(&col);
            let s = if s > 0.0 { s } else { 1.0 };
            feats.iter_mut().for_each(|f| f[j] = (f[j] - m) / s);
        }
    }
    if opts.normalization == ProbeNormalization::Whiten {
        whiten(&mut feats, data, &train)?;
    }
    let centroids: Vec<Vec<f64>> = classes
        .iter()
        .map(|&c| {
            let members: Vec<usize> = train.iter().copied().filter(|&i| data[i].1 == c).collect();
            let mut mu = vec![0.0; dim];
            for &i in &members {
                mu.iter_mut().zip(&feats[i]).for_each(|(m, v)| *m += v);
            }
            mu.iter_mut().for_each(|m| *m /= members.len() as f64);
            mu
        })
        .collect();
    let correct = test
        .iter()
        .filter(|&&i| {
            // ties go to the smaller class label
            let best = centroids
                .iter()
                .enumerate()
                .map(|(c, mu)| (dist_p(&feats[i], mu, 2.0), c))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("at least two classes");
            classes[best.1] == data[i].1
        })
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Replaces every feature `f` by `L^{-1} f`, where `L L^T` is the shrunk
/// pooled within-class covariance of the training rows.
fn whiten(feats: &mut [Vec<f64>], data: &[(Vec<f64>, i64)], train: &[usize]) -> Result<()> {
    let dim = feats[0].len();
    let mut means: std::collections::BTreeMap<i64, (Vec<f64>, usize)> = Default::default();
    for &i in train {
        let e = means.entry(data[i].1).or_insert_with(|| (vec![0.0; dim], 0));
        e.0.iter_mut().zip(&feats[i]).for_each(|(m, v)| *m += v);
        e.1 += 1;
    }
    let n = train.len();
    let centered = DMatrix::from_fn(n, dim, |r, c| {
        let i = train[r];
        let (sum, count) = &means[&data[i].1];
        feats[i][c] - sum[c] / *count as f64
    });
    let cov = ledoit_wolf(&centered);
    let chol = cov.cholesky().ok_or_else(|| Error::Numerical("shrunk covariance is not positive definite".into()))?;
    for f in feats.iter_mut() {
        let w =
            chol.l().solve_lower_triangular(&DVector::from_column_slice(f)).expect("triangular factor is invertible");
        f.copy_from_slice(w.as_slice());
    }
    Ok(())
}

/// Ledoit–Wolf shrinkage of the covariance of centered rows `x`.
fn ledoit_wolf(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = (x.nrows() as f64, x.ncols() as f64);
    let emp = x.transpose() * x / n;
    let mu = emp.trace() / p;
    let x2 = x.map(|v| v * v);
    let beta_sum = (x2.transpose() * &x2).sum();
    let delta_sum = emp.iter().map(|v| v * v).sum::<f64>();
    let beta = (beta_sum / n - delta_sum) / n;
    let delta = delta_sum - 2.0 * mu * emp.trace() + p * mu * mu;
    let mu = if mu > 0.0 { mu } else { 1.0 };
    let shrinkage = if delta > 0.0 { (beta / delta).clamp(0.0, 1.0) } else { 1.0 };
    let mut out = emp * (1.0 - shrinkage);
    for i in 0..x.ncols() {
        out[(i, i)] += shrinkage * mu;
    }
    out
}

/// `‖a − b‖_2` over the mean of `‖a‖_2` and `‖b‖_2`.
pub fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = 0.5 * (norm2(a) + norm2(b));
    if scale == 0.0 {
        0.0
    } else {
        dist_p(a, b, 2.0) / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64, p: f64) -> Vec<ExperimentRecord> {
        log_grid(0.01, 1.0, 12)
            .into_iter()
            .map(|x| ExperimentRecord {
                epsilon: x,
                input_distance: x,
                gap_mean: f(x).powf(p),
                gap_std: 0.0,
                samples: 1,
            })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let est = fit_exponent(&synthetic(|x| x.powf(1.5), 2.0), 2.0).unwrap();
        assert!((est.slope - 1.5).abs() < 1e-12 && (est.r2 - 1.0).abs() < 1e-12);
        let est = fit_exponent(&synthetic(|x| 3.0 * x, 1.0), 1.0).unwrap();
        assert!((est.slope - 1.0).abs() < 1e-12);
        assert_eq!(est.points, 12);
    }

    #[test]
    fn scaling_gaps_keeps_slope() {
        let recs = synthetic(|x| x.powi(2) + 0.1 * x, 2.0);
        let scaled: Vec<_> = recs.iter().map(|r| ExperimentRecord { gap_mean: r.gap_mean * 7.0, ..*r }).collect();
        let (a, b) = (fit_exponent(&recs, 2.0).unwrap(), fit_exponent(&scaled, 2.0).unwrap());
        assert!((a.slope - b.slope).abs() < 1e-12);
    }

    #[test]
    fn noise_floor_exclusion() {
        let mut recs = synthetic(|x| x.powi(8), 2.0);
        let est = fit_exponent(&recs, 2.0).unwrap();
        assert!(est.excluded > 0 && (est.slope - 8.0).abs() < 1e-9);
        recs.iter_mut().for_each(|r| r.gap_mean = 0.0);
        assert!(matches!(fit_exponent(&recs, 2.0), Err(Error::Numerical(_))));
        recs[0].input_distance = 0.0;
        assert!(matches!(fit_exponent(&recs, 2.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn distortion_examples() {
        assert_eq!(distortion(&[2.0, 2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(distortion(&[1.0, 2.0]).unwrap(), 2.0);
        assert!(distortion(&[0.0, 1.0]).is_err());
        assert!(distortion(&[1.0]).is_err());
    }

    #[test]
    fn constant_family_gives_constant_records() {
        let (x, y) = (Multiset::scalars(&[0.1, 0.5]).unwrap(), Multiset::scalars(&[0.2, 0.3]).unwrap());
        let spec = EmbeddingSpec::Multiset {
            family: MultisetEmbedding::Sum { activation: Activation::Relu, bias_range: 1.0 },
            width: 2,
        };
        let opts = SweepOptions { draws: 50, seed: 3, ..Default::default() };
        let recs = distortion_sweep(
            |_| Ok(Pair::Multisets { x: x.clone(), y: y.clone() }),
            &spec,
            &log_grid(0.1, 1.0, 5),
            &opts,
        )
        .unwrap();
        assert!(recs.windows(2).all(|w| w[0].gap_mean == w[1].gap_mean && w[0].input_distance == w[1].input_distance));
    }

    #[test]
    fn relu_pm_epsilon_exact_sweep() {
        let spec = EmbeddingSpec::Multiset {
            family: MultisetEmbedding::Sum { activation: Activation::Relu, bias_range: 1.0 },
            width: 1,
        };
        let opts = SweepOptions { exact: true, ..Default::default() };
        let fam = PairFamily::PmEpsilon;
        let recs = distortion_sweep(|e| fam.pair(e), &spec, &log_grid(0.01, 0.4, 10), &opts).unwrap();
        let est = fit_exponent(&recs, 2.0).unwrap();
        assert!((est.slope - 1.5).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn sweep_validation() {
        let spec = EmbeddingSpec::Multiset { family: MultisetEmbedding::Adapt, width: 1 };
        let opts = SweepOptions::default();
        let fam = PairFamily::PmEpsilon;
        assert!(distortion_sweep(|e| fam.pair(e), &spec, &[0.1, 0.2], &opts).is_err());
        assert!(distortion_sweep(|e| fam.pair(e), &spec, &[0.1, 0.2, 0.3, 0.4, -1.0], &opts).is_err());
        let same = |_e: f64| {
            Ok(Pair::Multisets { x: Multiset::scalars(&[1.0]).unwrap(), y: Multiset::scalars(&[1.0]).unwrap() })
        };
        assert!(distortion_sweep(same, &spec, &log_grid(0.1, 1.0, 5), &opts).is_err());
    }

    #[test]
    fn width_one_row_matches_direct_draws() {
        let family = MultisetEmbedding::Sort { capacity: 2, z: vec![0.0] };
        let spec = EmbeddingSpec::Multiset { family: family.clone(), width: 1 };
        let pair = PairFamily::PmEpsilon.pair(0.3).unwrap();
        let opts = SweepOptions { draws: 200, seed: 11, ..Default::default() };
        let rows = variance_vs_width(&spec, &pair, &[1, 4, 16], &opts).unwrap();
        let o = SweepOptions { seed: crate::rng::child_seed(11, 0), ..opts.clone() };
        let direct = gap_draws(std::slice::from_ref(&pair), &spec, &o).unwrap().remove(0);
        let (m, s) = mean_std(&direct.iter().map(|g| g / 0.36).collect::<Vec<_>>());
        assert!((rows[0].mean - m).abs() < 1e-15 && (rows[0].std - s).abs() < 1e-15);
        assert!(rows[2].std < rows[0].std);
    }

    #[test]
    fn probe_examples() {
        let mut data = Vec::new();
        for i in 0..10 {
            data.push((vec![1.0 + 0.01 * i as f64, 0.0], 0));
            data.push((vec![0.0, 1.0 + 0.01 * i as f64], 1));
        }
        for norm in [
            ProbeNormalization::None,
            ProbeNormalization::UnitNorm,
            ProbeNormalization::Standardize,
            ProbeNormalization::Whiten,
        ] {
            let opts = ProbeOptions { normalization: norm, ..Default::default() };
            assert_eq!(frozen_probe_accuracy(&data, &opts).unwrap(), 1.0);
        }
        let same: Vec<_> = (0..20).map(|i| (vec![1.0, 2.0], i % 2)).collect();
        assert_eq!(frozen_probe_accuracy(&same, &ProbeOptions::default()).unwrap(), 0.5);
        assert!(frozen_probe_accuracy(&same[..4], &ProbeOptions::default()).is_err());
        let single: Vec<_> = (0..8).map(|_| (vec![1.0], 0)).collect();
        assert!(frozen_probe_accuracy(&single, &ProbeOptions::default()).is_err());
    }
}
