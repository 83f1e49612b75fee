//! Untrained message passing networks built from the multiset embeddings.
//!
//! Layer `k = 1..K` aggregates each node's neighborhood with `W_k` parallel
//! copies of the variant's multiset embedding and combines the result with
//! the node's previous feature. The readout applies `W_{K+1}` copies to the
//! multiset of all final node features.
//!
//! `stack` independent networks can be run side by side; their readouts are
//! concatenated. Every readout coordinate is scaled by `C^{−1/p}`, where `C`
//! is the total number of readout copies, so `‖Δ‖_p^p` between two graphs is
//! the average of the per-copy gaps.
//!
//! Blank vectors: `blanks[k]` is the state of an isolated blank node after
//! `k` layers (`blanks[K+1]` is its readout). Layer `k` pads sort
//! neighborhoods with `blanks[k−1]` and the sort readout pads with
//! `blanks[K]`. Sum-based variants never pad.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combine::{combine_into, CombineKind, CombineParams};
use crate::embeddings::{adapt_from_projections, relu_bias_integral, Activation, EmbeddingParams, MultisetEmbedding};
use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::linalg::{dot, mean_std, sorted_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MpnnVariant {
    Sort,
    Adapt,
    Relu,
    Smooth,
}

impl MpnnVariant {
    pub const ALL: [MpnnVariant; 4] = [MpnnVariant::Sort, MpnnVariant::Adapt, MpnnVariant::Relu, MpnnVariant::Smooth];

    pub fn name(self) -> &'static str {
        match self {
            MpnnVariant::Sort => "sort",
            MpnnVariant::Adapt => "adapt",
            MpnnVariant::Relu => "relu",
            MpnnVariant::Smooth => "smooth",
        }
    }

    /// Coordinates produced by one aggregation copy.
    pub fn copy_len(self) -> usize {
        if self == MpnnVariant::Adapt {
            4
        } else {
            1
        }
    }
}

impl std::str::FromStr for MpnnVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sort" => Ok(MpnnVariant::Sort),
            "adapt" => Ok(MpnnVariant::Adapt),
            "relu" => Ok(MpnnVariant::Relu),
            "smooth" => Ok(MpnnVariant::Smooth),
            _ => Err(invalid(format!("unknown variant '{s}' (sort, adapt, relu, smooth)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlankStrategy {
    /// User-supplied `blanks[0..=K+1]`.
    Fixed {
        vectors: Vec<Vec<f64>>,
    },
    /// Run the network on an isolated node with zero feature.
    IterativeUpdate,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpnnConfig {
    pub variant: MpnnVariant,
    pub depth: usize,
    pub in_dim: usize,
    /// `W_1..W_{K+1}`; the last entry is the readout width.
    pub widths: Vec<usize>,
    pub combine: CombineKind,
    /// Activation of the smooth variant.
    pub activation: Activation,
    /// Biases are drawn from `[−B, B]`.
    pub bias_range: f64,
    pub blank: BlankStrategy,
    /// Largest graph (and hence neighborhood) the network accepts.
    pub capacity: usize,
    pub p: f64,
    /// Independent networks whose readouts are concatenated.
    #[serde(default = "one")]
    pub stack: usize,
}

fn one() -> usize {
    1
}

impl MpnnConfig {
    /// Uniform width, concat-project combine, sigmoid smooth activation,
    /// iterative blanks, `p = 2`, a single network.
    pub fn new(
        variant: MpnnVariant,
        depth: usize,
        width: usize,
        in_dim: usize,
        capacity: usize,
        bias_range: f64,
    ) -> Self {
        MpnnConfig {
            variant,
            depth,
            in_dim,
            widths: vec![width; depth + 1],
            combine: CombineKind::ConcatProject,
            activation: Activation::Sigmoid,
            bias_range,
            blank: BlankStrategy::IterativeUpdate,
            capacity,
            p: 2.0,
            stack: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 {
            return Err(invalid("input dimension must be positive"));
        }
        if self.widths.len() != self.depth + 1 {
            return Err(invalid(format!(
                "depth {} needs {} widths, got {}",
                self.depth,
                self.depth + 1,
                self.widths.len()
            )));
        }
        if self.widths.contains(&0) || self.stack == 0 || self.capacity == 0 {
            return Err(invalid("widths, stack and capacity must be positive"));
        }
        if !(self.bias_range > 0.0 && self.bias_range.is_finite()) {
            return Err(invalid(format!("bias range must be positive and finite, got {}", self.bias_range)));
        }
        crate::multiset::check_p(self.p)?;
        if self.variant == MpnnVariant::Smooth && self.activation == Activation::Relu {
            return Err(invalid("the smooth variant needs a smooth activation (sigmoid or tanh)"));
        }
        self.feature_dims().map(|_| ())
    }

    /// Node feature dimension after each layer, `d_0..d_K`.
    pub fn feature_dims(&self) -> Result<Vec<usize>> {
        let mut dims = vec![self.in_dim];
        for k in 0..self.depth {
            let d = dims[k];
            let agg = self.widths[k] * self.variant.copy_len();
            dims.push(match self.combine {
                CombineKind::ConcatProject => self.widths[k],
                CombineKind::LtSum => agg,
                CombineKind::Concatenation => d + agg,
                CombineKind::LinearCombination => self.combine.output_dim(d, agg)?,
            });
        }
        Ok(dims)
    }

    /// Length of the global embedding.
    pub fn output_len(&self) -> usize {
        self.stack * self.widths[self.depth] * self.variant.copy_len()
    }

    fn aggregation_family(&self, dim: usize) -> MultisetEmbedding {
        match self.variant {
            MpnnVariant::Sort => MultisetEmbedding::Sort { capacity: self.capacity, z: vec![0.0; dim] },
            MpnnVariant::Adapt => MultisetEmbedding::Adapt,
            MpnnVariant::Relu => MultisetEmbedding::Sum { activation: Activation::Relu, bias_range: self.bias_range },
            MpnnVariant::Smooth => MultisetEmbedding::Sum { activation: self.activation, bias_range: self.bias_range },
        }
    }

    fn check_graph(&self, g: &Graph) -> Result<()> {
        if g.dim() != self.in_dim {
            return Err(Error::DimensionMismatch { expected: self.in_dim, found: g.dim() });
        }
        if g.node_count() > self.capacity {
            return Err(Error::CapacityExceeded { size: g.node_count(), capacity: self.capacity });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub aggregate: Vec<EmbeddingParams>,
    pub combine: Vec<CombineParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<LayerParams>,
    pub readout: Vec<EmbeddingParams>,
    /// `blanks[0..=K+1]`.
    pub blanks: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpnnParams {
    pub networks: Vec<NetworkParams>,
    /// `(master seed, draw index)` when sampled through [`MpnnParams::from_seed`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<(u64, u64)>,
}

impl MpnnParams {
    /// Parameters drawn from stream `draw` of `seed`.
    pub fn from_seed(config: &MpnnConfig, seed: u64, draw: u64) -> Result<Self> {
        let mut params = init_params(config, &mut crate::rng::stream(seed, draw))?;
        params.seed = Some((seed, draw));
        Ok(params)
    }
}

/// Samples every aggregation, combine and readout copy independently, then
/// resolves the blank vectors.
pub fn init_params<R: Rng + ?Sized>(config: &MpnnConfig, rng: &mut R) -> Result<MpnnParams> {
    config.validate()?;
    let dims = config.feature_dims()?;
    let k_max = config.depth;
    let mut networks = Vec::with_capacity(config.stack);
    for _ in 0..config.stack {
        let mut layers = Vec::with_capacity(k_max);
        for k in 0..k_max {
            let family = config.aggregation_family(dims[k]);
            let aggregate = (0..config.widths[k]).map(|_| family.sample(dims[k], rng)).collect();
            let agg = config.widths[k] * config.variant.copy_len();
            let combine = match config.combine {
                CombineKind::ConcatProject => {
                    (0..config.widths[k]).map(|_| config.combine.sample(dims[k], agg, 1.0, rng)).collect()
                }
                kind => vec![kind.sample(dims[k], agg, 1.0, rng)],
            };
            layers.push(LayerParams { aggregate, combine });
        }
        let family = config.aggregation_family(dims[k_max]);
        let readout = (0..config.widths[k_max]).map(|_| family.sample(dims[k_max], rng)).collect();
        let mut net = NetworkParams { layers, readout, blanks: Vec::new() };
        net.blanks = blank_vectors(config, &net)?;
        set_sort_blanks(&mut net);
        networks.push(net);
    }
    Ok(MpnnParams { networks, seed: None })
}

/// Copies the resolved blanks into the sort parameter records.
fn set_sort_blanks(net: &mut NetworkParams) {
    let k_max = net.layers.len();
    for (k, layer) in net.layers.iter_mut().enumerate() {
        for e in &mut layer.aggregate {
            if let EmbeddingParams::Sort(s) = e {
                s.z = net.blanks[k].clone();
            }
        }
    }
    for e in &mut net.readout {
        if let EmbeddingParams::Sort(s) = e {
            s.z = net.blanks[k_max].clone();
        }
    }
}

/// `blanks[0..=K+1]` for one network under the configured strategy.
pub fn blank_vectors(config: &MpnnConfig, net: &NetworkParams) -> Result<Vec<Vec<f64>>> {
    let dims = config.feature_dims()?;
    let readout_len = config.widths[config.depth] * config.variant.copy_len();
    let mut want: Vec<usize> = dims.clone();
    want.push(readout_len);
    match &config.blank {
        BlankStrategy::Zero => Ok(want.iter().map(|&d| vec![0.0; d]).collect()),
        BlankStrategy::Fixed { vectors } => {
            if vectors.len() != want.len() {
                return Err(invalid(format!("fixed blanks need {} vectors, got {}", want.len(), vectors.len())));
            }
            for (v, &d) in vectors.iter().zip(&want) {
                if v.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: v.len() });
                }
                crate::error::ensure_finite(v, "blank vector")?;
            }
            Ok(vectors.clone())
        }
        BlankStrategy::IterativeUpdate => {
            let lone = Graph::new(config.in_dim, vec![vec![0.0; config.in_dim]], Vec::new())?;
            let mut blanks = vec![vec![0.0; config.in_dim]];
            let mut ws = Scratch::default();
            let mut x = blanks[0].clone();
            for k in 0..config.depth {
                let c = Compiled::stage(config, &net.layers[k].aggregate, &blanks[k]);
                x = apply_layer(config, &c, &net.layers[k].combine, &lone, &x, dims[k], &mut ws);
                blanks.push(x.clone());
            }
            let c = Compiled::stage(config, &net.readout, &blanks[config.depth]);
            let mut out = Vec::new();
            readout_into(config, &c, &x, dims[config.depth], 1, &mut out, &mut ws);
            blanks.push(out);
            Ok(blanks)
        }
    }
}

/// Per-stage data derived from the parameters once per draw.
struct Compiled<'a> {
    params: &'a [EmbeddingParams],
    /// Prefix sums of the sort weights, one vector per copy.
    prefix: Vec<Vec<f64>>,
    blank: &'a [f64],
}

impl<'a> Compiled<'a> {
    fn stage(config: &MpnnConfig, params: &'a [EmbeddingParams], blank: &'a [f64]) -> Self {
        let prefix = if config.variant == MpnnVariant::Sort {
            params
                .iter()
                .map(|e| match e {
                    EmbeddingParams::Sort(s) => {
                        let mut acc = vec![0.0; s.b.len() + 1];
                        for (i, w) in s.b.iter().enumerate() {
                            acc[i + 1] = acc[i] + w;
                        }
                        acc
                    }
                    _ => Vec::new(),
                })
                .collect()
        } else {
            Vec::new()
        };
        Compiled { params, prefix, blank }
    }
}

#[derive(Default)]
struct Scratch {
    proj: Vec<f64>,
    vals: Vec<f64>,
    agg: Vec<f64>,
}

/// One copy of the aggregation on the projected group members in `vals`
/// (clobbered), writing `copy_len` values to `out`.
#[inline]
fn aggregate_copy(
    params: &EmbeddingParams,
    prefix: Option<&[f64]>,
    blank_proj: f64,
    vals: &mut [f64],
    out: &mut Vec<f64>,
) {
    match params {
        EmbeddingParams::Sum(s) => {
            vals.iter_mut().for_each(|v| *v = s.activation.apply(*v - s.b));
            out.push(sorted_sum(vals));
        }
        EmbeddingParams::Adapt(a) => {
            // convention: an empty neighborhood maps to the zero vector
            if vals.is_empty() {
                out.extend_from_slice(&[0.0; 4]);
            } else {
                out.extend_from_slice(&adapt_from_projections(vals, a.t));
            }
        }
        EmbeddingParams::Sort(s) => {
            let prefix = prefix.expect("sort stages carry prefix sums");
            vals.sort_unstable_by(f64::total_cmp);
            let m = vals.len();
            let blanks = s.b.len() - m;
            // the padded sorted vector is vals[..j], then the blanks, then vals[j..]
            let j = vals.partition_point(|&v| v < blank_proj);
            let mut total = 0.0;
            for (i, v) in vals[..j].iter().enumerate() {
                total += s.b[i] * v;
            }
            total += blank_proj * (prefix[j + blanks] - prefix[j]);
            for (i, v) in vals[j..].iter().enumerate() {
                total += s.b[j + blanks + i] * v;
            }
            out.push(total);
        }
    }
}

fn projection(params: &EmbeddingParams) -> &[f64] {
    match params {
        EmbeddingParams::Sum(s) => &s.a,
        EmbeddingParams::Adapt(a) => &a.a,
        EmbeddingParams::Sort(s) => &s.a,
    }
}

/// Features after one layer, flat `[node][d_next]`.
fn apply_layer(
    config: &MpnnConfig,
    stage: &Compiled,
    combine: &[CombineParams],
    g: &Graph,
    x: &[f64],
    dim: usize,
    ws: &mut Scratch,
) -> Vec<f64> {
    let n = g.node_count();
    let len = config.variant.copy_len();
    let width = stage.params.len();
    let agg_dim = width * len;
    ws.agg.clear();
    ws.agg.resize(n * agg_dim, 0.0);
    let mut one = Vec::with_capacity(4);
    for (i, params) in stage.params.iter().enumerate() {
        let a = projection(params);
        ws.proj.clear();
        ws.proj.extend((0..n).map(|v| dot(a, &x[v * dim..(v + 1) * dim])));
        let blank_proj = dot(a, stage.blank);
        let prefix = stage.prefix.get(i).map(Vec::as_slice);
        for v in 0..n {
            ws.vals.clear();
            ws.vals.extend(g.neighbors(v).iter().map(|&u| ws.proj[u]));
            one.clear();
            aggregate_copy(params, prefix, blank_proj, &mut ws.vals, &mut one);
            ws.agg[v * agg_dim + i * len..v * agg_dim + (i + 1) * len].copy_from_slice(&one);
        }
    }
    let mut next = Vec::new();
    for v in 0..n {
        let xv = &x[v * dim..(v + 1) * dim];
        let cv = &ws.agg[v * agg_dim..(v + 1) * agg_dim];
        for inst in combine {
            combine_into(xv, cv, inst, &mut next);
        }
    }
    next
}

/// Unscaled readout of the `n` node features in `x`.
fn readout_into(
    config: &MpnnConfig,
    stage: &Compiled,
    x: &[f64],
    dim: usize,
    n: usize,
    out: &mut Vec<f64>,
    ws: &mut Scratch,
) {
    let _ = config;
    for (i, params) in stage.params.iter().enumerate() {
        let a = projection(params);
        ws.vals.clear();
        ws.vals.extend((0..n).map(|v| dot(a, &x[v * dim..(v + 1) * dim])));
        let blank_proj = dot(a, stage.blank);
        aggregate_copy(params, stage.prefix.get(i).map(Vec::as_slice), blank_proj, &mut ws.vals, out);
    }
}

/// Node features and aggregation outputs of every layer, plus the global
/// embedding. Per-node vectors concatenate the stacked networks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardTrace {
    /// `features[k][v]` is `x_v^{(k)}` for `k = 0..=K`.
    pub features: Vec<Vec<Vec<f64>>>,
    /// `aggregates[k−1][v]` is `c_v^{(k)}` for `k = 1..=K`.
    pub aggregates: Vec<Vec<Vec<f64>>>,
    pub global: Vec<f64>,
}

/// A parameter draw prepared for repeated evaluation.
pub struct Network<'a> {
    config: &'a MpnnConfig,
    nets: Vec<(&'a NetworkParams, Vec<Compiled<'a>>)>,
    dims: Vec<usize>,
    scale: f64,
}

impl<'a> Network<'a> {
    pub fn new(config: &'a MpnnConfig, params: &'a MpnnParams) -> Result<Self> {
        config.validate()?;
        if params.networks.len() != config.stack {
            return Err(invalid(format!("expected {} stacked networks, got {}", config.stack, params.networks.len())));
        }
        let dims = config.feature_dims()?;
        let nets = params
            .networks
            .iter()
            .map(|net| {
                let mut stages: Vec<Compiled> = net
                    .layers
                    .iter()
                    .enumerate()
                    .map(|(k, l)| Compiled::stage(config, &l.aggregate, &net.blanks[k]))
                    .collect();
                stages.push(Compiled::stage(config, &net.readout, &net.blanks[config.depth]));
                (net, stages)
            })
            .collect();
        let copies = (config.stack * config.widths[config.depth]) as f64;
        Ok(Network { config, nets, dims, scale: copies.powf(-1.0 / config.p) })
    }

    fn flat_features(g: &Graph) -> Vec<f64> {
        g.features().iter().flatten().copied().collect()
    }

    /// Final node features of network `i`, flat `[node][d_K]`.
    fn node_features(&self, i: usize, g: &Graph, ws: &mut Scratch) -> Vec<f64> {
        let (net, stages) = &self.nets[i];
        let mut x = Self::flat_features(g);
        for k in 0..self.config.depth {
            x = apply_layer(self.config, &stages[k], &net.layers[k].combine, g, &x, self.dims[k], ws);
        }
        x
    }

    /// `c^global`.
    pub fn embed(&self, g: &Graph) -> Result<Vec<f64>> {
        self.config.check_graph(g)?;
        let mut ws = Scratch::default();
        let mut out = Vec::with_capacity(self.config.output_len());
        for i in 0..self.nets.len() {
            let x = self.node_features(i, g, &mut ws);
            let stages = &self.nets[i].1;
            readout_into(
                self.config,
                &stages[self.config.depth],
                &x,
                self.dims[self.config.depth],
                g.node_count(),
                &mut out,
                &mut ws,
            );
        }
        out.iter_mut().for_each(|v| *v *= self.scale);
        Ok(out)
    }

    pub fn trace(&self, g: &Graph) -> Result<ForwardTrace> {
        self.config.check_graph(g)?;
        let n = g.node_count();
        let k_max = self.config.depth;
        let mut features = vec![vec![Vec::new(); n]; k_max + 1];
        let mut aggregates = vec![vec![Vec::new(); n]; k_max];
        let mut global = Vec::new();
        let mut ws = Scratch::default();
        for (net, stages) in &self.nets {
            let mut x = Self::flat_features(g);
            for k in 0..=k_max {
                let d = self.dims[k];
                for v in 0..n {
                    features[k][v].extend_from_slice(&x[v * d..(v + 1) * d]);
                }
                if k == k_max {
                    break;
                }
                x = apply_layer(self.config, &stages[k], &net.layers[k].combine, g, &x, d, &mut ws);
                let agg_dim = ws.agg.len() / n.max(1);
                for v in 0..n {
                    aggregates[k][v].extend_from_slice(&ws.agg[v * agg_dim..(v + 1) * agg_dim]);
                }
            }
            readout_into(self.config, &stages[k_max], &x, self.dims[k_max], n, &mut global, &mut ws);
        }
        global.iter_mut().for_each(|v| *v *= self.scale);
        Ok(ForwardTrace { features, aggregates, global })
    }

    /// `‖f(G) − f(H)‖_p^p`.
    pub fn gap(&self, g: &Graph, h: &Graph) -> Result<f64> {
        let (a, b) = (self.embed(g)?, self.embed(h)?);
        Ok(crate::linalg::dist_p_pow(&a, &b, self.config.p))
    }

    /// `E_b ‖f(G) − f(H)‖_p^p` with the readout biases integrated exactly and
    /// every other parameter fixed. ReLU variant only, `p ∈ {1, 2}`.
    pub fn gap_exact_readout(&self, g: &Graph, h: &Graph) -> Result<f64> {
        if self.config.variant != MpnnVariant::Relu {
            return Err(invalid("exact readout integration applies to the relu variant"));
        }
        let p = self.config.p;
        if p != 1.0 && p != 2.0 {
            return Err(invalid(format!("exact readout integration needs p ∈ {{1, 2}}, got {p}")));
        }
        self.config.check_graph(g)?;
        self.config.check_graph(h)?;
        let bound = self.config.bias_range;
        let d = self.dims[self.config.depth];
        let mut ws = Scratch::default();
        let mut terms = Vec::new();
        for i in 0..self.nets.len() {
            let xg = self.node_features(i, g, &mut ws);
            let xh = self.node_features(i, h, &mut ws);
            for params in &self.nets[i].0.readout {
                let a = projection(params);
                let pg: Vec<f64> = xg.chunks(d).map(|f| dot(a, f)).collect();
                let ph: Vec<f64> = xh.chunks(d).map(|f| dot(a, f)).collect();
                terms.push(relu_bias_integral(&pg, &ph, -bound, bound, p as u32) / (2.0 * bound));
            }
        }
        Ok(sorted_sum(&mut terms) * self.scale.powf(p))
    }
}

/// `c^global` of `g` under `params`.
pub fn forward(g: &Graph, params: &MpnnParams, config: &MpnnConfig) -> Result<ForwardTrace> {
    Network::new(config, params)?.trace(g)
}

/// Sample mean and standard deviation of a per-draw quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl GapEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let (mean, std) = mean_std(samples);
        GapEstimate { mean, std, count: samples.len() }
    }

    pub fn std_error(&self) -> f64 {
        self.std / (self.count as f64).sqrt()
    }
}

/// How the per-draw gap is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    #[default]
    MonteCarlo,
    /// Integrate the ReLU readout bias exactly (relu variant only).
    ExactReadoutBias,
}

/// Per-draw gaps for every pair, sharing each parameter draw across pairs.
/// Draw `d` uses stream `d` of `seed`; results are independent of the
/// worker count.
pub fn gap_samples(
    pairs: &[(Graph, Graph)],
    config: &MpnnConfig,
    draws: usize,
    seed: u64,
    mode: GapMode,
) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    for (g, h) in pairs {
        config.check_graph(g)?;
        config.check_graph(h)?;
    }
    let per_draw: Vec<Vec<f64>> = (0..draws as u64)
        .into_par_iter()
        .map(|d| {
            let params = MpnnParams::from_seed(config, seed, d)?;
            let net = Network::new(config, &params)?;
            pairs
                .iter()
                .map(|(g, h)| match mode {
                    GapMode::MonteCarlo => net.gap(g, h),
                    GapMode::ExactReadoutBias => net.gap_exact_readout(g, h),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..pairs.len()).map(|i| per_draw.iter().map(|row| row[i]).collect()).collect())
}

/// `E_w ‖f(G; w) − f(H; w)‖_p^p` over `draws` independent parameter draws.
pub fn expected_gap(g: &Graph, h: &Graph, config: &MpnnConfig, draws: usize, seed: u64) -> Result<GapEstimate> {
    if draws < 2 {
        return Err(invalid("expected gap needs at least two draws"));
    }
    let samples = gap_samples(&[(g.clone(), h.clone())], config, draws, seed, GapMode::MonteCarlo)?;
    Ok(GapEstimate::from_samples(&samples[0]))
}

/// `1 + max ‖x_v‖_2` over the given graphs, the default bias range.
pub fn default_bias_range<'a>(graphs: impl IntoIterator<Item = &'a Graph>) -> f64 {
    1.0 + graphs.into_iter().map(Graph::max_feature_norm).fold(0.0, f64::max)
}
