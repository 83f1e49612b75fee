use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use holder_core::analysis::{log_grid, PairFamily, ProbeNormalization};
use holder_core::combine::CombineKind;
use holder_core::embeddings::Activation;
use holder_core::mpnn::MpnnVariant;
use holder_core::InnerNorm;
use serde::Serialize;

use crate::output::Format;

#[derive(Debug, Parser, Serialize)]
#[command(name = "holder", version, about = "Separation experiments for random multiset and graph embeddings")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Exponent of the output gap norm and of the Wasserstein distance.
    #[arg(long, global = true, default_value_t = 2.0)]
    pub p: f64,
    /// Output directory. A manifest.json is written next to the outputs;
    /// without it results go to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Encoding of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write adversarial or random inputs as JSON.
    Gen(GenArgs),
    /// Distance between two input files.
    Dist(DistArgs),
    /// Fit the separation exponent over an ε-sweep.
    Exponent(ExponentArgs),
    /// Distortion of random 2-tuple combine maps.
    Distortion(DistortionArgs),
    /// Spread of the normalized gap as the embedding widens.
    Variance(VarianceArgs),
    /// Frozen-embedding probe accuracy on ε-tree pairs.
    Probe(ProbeArgs),
    /// Embed one input file.
    Embed(EmbedCmdArgs),
    /// Re-run the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Dist(_) => "dist",
            Command::Exponent(_) => "exponent",
            Command::Distortion(_) => "distortion",
            Command::Variance(_) => "variance",
            Command::Probe(_) => "probe",
            Command::Embed(_) => "embed",
            Command::Replay { .. } => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    PmEpsilon,
    EqualMoments,
    AdaptAdversarial,
    EpsTrees,
    ReluCounterexample,
    RandomGraphs,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    pub kind: GenKind,
    /// Scale of the pair. Equal-moments pairs are written unscaled unless
    /// this is given.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Equal-moments pairs have 2^k elements.
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    /// ε-tree level.
    #[arg(long, alias = "T", default_value_t = 1)]
    pub level: usize,
    /// Feature of the internal ε-tree nodes.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub internal_feature: f64,
    /// Number of random graphs.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Largest random graph.
    #[arg(long, default_value_t = 8)]
    pub nodes: usize,
    /// Feature values random graphs draw from.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3", allow_hyphen_values = true)]
    pub values: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub edge_prob: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Wasserstein,
    Tmd,
    Wl,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    L1,
    Lp,
}

impl From<NormArg> for InnerNorm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::L1 => InnerNorm::L1,
            NormArg::Lp => InnerNorm::Lp,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DistArgs {
    pub metric: Metric,
    /// Multiset JSON for wasserstein, graph JSON otherwise.
    pub a: PathBuf,
    pub b: PathBuf,
    /// Computation-tree depth for tmd and wl.
    #[arg(long, alias = "K", default_value_t = 2)]
    pub depth: usize,
    /// Blank vector (comma separated); zeros by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Option<Vec<f64>>,
    /// Ground norm between multiset elements.
    #[arg(long, value_enum, default_value_t = NormArg::L1)]
    pub inner_norm: NormArg,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    PmEpsilon,
    EqualMoments,
    AdaptAdversarial,
    EpsTrees,
}

#[derive(Debug, Args, Serialize)]
pub struct SourceArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    /// ε-tree level; defaults to the network depth.
    #[arg(long, alias = "T")]
    pub level: Option<usize>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub internal_feature: f64,
}

impl SourceArgs {
    pub fn family(&self, depth: usize) -> PairFamily {
        match self.family {
            FamilyArg::PmEpsilon => PairFamily::PmEpsilon,
            FamilyArg::EqualMoments => PairFamily::EqualMoments { k: self.k },
            FamilyArg::AdaptAdversarial => PairFamily::AdaptAdversarial,
            FamilyArg::EpsTrees => {
                PairFamily::EpsTrees { level: self.level.unwrap_or(depth), internal_feature: self.internal_feature }
            }
        }
    }
}

/// Multiset embedding families.
#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingArg {
    Relu,
    Sigmoid,
    Tanh,
    Sort,
    Adapt,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Sort,
    Adapt,
    Relu,
    Smooth,
}

impl From<VariantArg> for MpnnVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Sort => MpnnVariant::Sort,
            VariantArg::Adapt => MpnnVariant::Adapt,
            VariantArg::Relu => MpnnVariant::Relu,
            VariantArg::Smooth => MpnnVariant::Smooth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineArg {
    Linear,
    LtSum,
    Concat,
    ConcatProject,
}

impl From<CombineArg> for CombineKind {
    fn from(c: CombineArg) -> Self {
        match c {
            CombineArg::Linear => CombineKind::LinearCombination,
            CombineArg::LtSum => CombineKind::LtSum,
            CombineArg::Concat => CombineKind::Concatenation,
            CombineArg::ConcatProject => CombineKind::ConcatProject,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothArg {
    Sigmoid,
    Tanh,
}

impl From<SmoothArg> for Activation {
    fn from(a: SmoothArg) -> Self {
        match a {
            SmoothArg::Sigmoid => Activation::Sigmoid,
            SmoothArg::Tanh => Activation::Tanh,
        }
    }
}

/// What maps inputs to vectors: `--embedding` for multisets, `--variant`
/// for graphs.
#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, conflicts_with = "variant")]
    pub embedding: Option<EmbeddingArg>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Message passing layers.
    #[arg(long, alias = "K", default_value_t = 1)]
    pub depth: usize,
    /// Copies of a multiset embedding, or the layer width of a network.
    #[arg(long, default_value_t = 1)]
    pub width: usize,
    /// Independent networks whose readouts are concatenated.
    #[arg(long, default_value_t = 1)]
    pub stack: usize,
    /// Biases are drawn from [−B, B]; defaults cover the input features.
    #[arg(long)]
    pub bias_range: Option<f64>,
    #[arg(long, value_enum, default_value_t = CombineArg::ConcatProject)]
    pub combine: CombineArg,
    /// Activation of the smooth network.
    #[arg(long, value_enum, default_value_t = SmoothArg::Sigmoid)]
    pub activation: SmoothArg,
}

/// ε values: `lo:hi:n` for `n` log-spaced points, or a comma list.
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct EpsGrid(pub Vec<f64>);

impl FromStr for EpsGrid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}"));
        let grid = if let [lo, hi, n] = s.split(':').collect::<Vec<_>>()[..] {
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            let n: usize = n.trim().parse().map_err(|e| format!("bad point count '{n}': {e}"))?;
            if !(lo > 0.0 && hi > lo && n >= 2) {
                return Err(format!("need 0 < lo < hi and n ≥ 2, got {s}"));
            }
            log_grid(lo, hi, n)
        } else {
            s.split(',').map(parse).collect::<Result<_, _>>()?
        };
        Ok(EpsGrid(grid))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "0.05:0.4:20")]
    pub eps_grid: EpsGrid,
    /// Parameter draws per ε, shared across ε.
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    /// Integrate ReLU biases in closed form.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct DistortionArgs {
    /// Report one variant only.
    #[arg(long, value_enum)]
    pub combine: Option<CombineArg>,
    #[arg(long, default_value_t = 2)]
    pub in_dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,4,16")]
    pub widths: Vec<usize>,
    /// Random tuple pairs the ratios are taken over.
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,
    /// Independent instances averaged per width.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,4,16,64")]
    pub widths: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeFamily {
    EpsTrees,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationArg {
    None,
    UnitNorm,
    Standardize,
    Whiten,
}

impl From<NormalizationArg> for ProbeNormalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::None => ProbeNormalization::None,
            NormalizationArg::UnitNorm => ProbeNormalization::UnitNorm,
            NormalizationArg::Standardize => ProbeNormalization::Standardize,
            NormalizationArg::Whiten => ProbeNormalization::Whiten,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ProbeArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value_t = ProbeFamily::EpsTrees)]
    pub family: ProbeFamily,
    #[arg(long, alias = "T", default_value_t = 2)]
    pub level: usize,
    #[arg(long, alias = "K", default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 2.0)]
    pub bias_range: f64,
    /// Pairs with ε evenly spaced over [eps-min, eps-max].
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub internal_feature: f64,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Whiten)]
    pub normalization: NormalizationArg,
    #[arg(long, default_value_t = 0.5)]
    pub train_fraction: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedCmdArgs {
    /// Multiset JSON with --embedding, graph JSON with --variant.
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Largest graph the network accepts; defaults to the input size.
    #[arg(long)]
    pub capacity: Option<usize>,
    /// Which parameter draw under --seed.
    #[arg(long, default_value_t = 0)]
    pub draw: u64,
}
