use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use holder_core::adversarial::{eps_tree_pair, equal_moments_pair, relu_counterexample_pair};
use holder_core::analysis::{
    distortion_sweep, fit_exponent, frozen_probe_accuracy, least_squares, variance_vs_width, EmbeddingSpec,
    ExperimentRecord, Pair, PairFamily, ProbeOptions, SweepOptions, WidthRow,
};
use holder_core::combine::{combine_distortion_study, CombineKind, DistortionRow, TuplePair};
use holder_core::embeddings::{stacked_embed, Activation, MultisetEmbedding, StackedParams};
use holder_core::mpnn::{default_bias_range, MpnnConfig, MpnnParams, Network};
use holder_core::multiset::{augmented_wasserstein, wasserstein};
use holder_core::rng::{child_seed, stream};
use holder_core::tmd::tmd;
use holder_core::wl::wl_distinguishable;
use holder_core::{Graph, Multiset};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::*;
use crate::output::{float, Sink};

pub fn run(cli: &Cli, sink: &mut Sink) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Gen(a) => gen(a, c, sink),
        Command::Dist(a) => dist(a, c, sink),
        Command::Exponent(a) => exponent(a, c, sink),
        Command::Distortion(a) => distortion(a, c, sink),
        Command::Variance(a) => variance(a, c, sink),
        Command::Probe(a) => probe(a, c, sink),
        Command::Embed(a) => embed(a, c, sink),
        Command::Replay { .. } => unreachable!("replay is resolved before dispatch"),
    }
}

/// Parses a JSON input; serde_json reports line and column on failure.
fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid input {}", path.display()))
}

fn gen(a: &GenArgs, c: &Common, sink: &mut Sink) -> Result<()> {
    let eps = a.eps.unwrap_or(0.1);
    let mut files: BTreeMap<String, serde_json::Value> = BTreeMap::new();
    let mut put = |name: String, v: serde_json::Value| files.insert(name, v);
    match a.kind {
        GenKind::PmEpsilon | GenKind::AdaptAdversarial => {
            let fam =
                if matches!(a.kind, GenKind::PmEpsilon) { PairFamily::PmEpsilon } else { PairFamily::AdaptAdversarial };
            let Pair::Multisets { x, y } = fam.pair(eps)? else { unreachable!() };
            put("x".into(), serde_json::to_value(x)?);
            put("y".into(), serde_json::to_value(y)?);
        }
        GenKind::EqualMoments => {
            let (x, y) = match a.eps {
                Some(e) => match (PairFamily::EqualMoments { k: a.k }).pair(e)? {
                    Pair::Multisets { x, y } => (x, y),
                    Pair::Graphs { .. } => unreachable!(),
                },
                None => {
                    let (x, y) = equal_moments_pair(a.k)?;
                    (Multiset::scalars(&x)?, Multiset::scalars(&y)?)
                }
            };
            put("x".into(), serde_json::to_value(x)?);
            put("y".into(), serde_json::to_value(y)?);
        }
        GenKind::EpsTrees => {
            let t = eps_tree_pair(a.level, eps, a.internal_feature)?;
            put("g".into(), serde_json::to_value(t.g.with_label(Some(0)))?);
            put("g_hat".into(), serde_json::to_value(t.g_hat.with_label(Some(1)))?);
        }
        GenKind::ReluCounterexample => {
            let (g, h) = relu_counterexample_pair(eps)?;
            put("g".into(), serde_json::to_value(g)?);
            put("h".into(), serde_json::to_value(h)?);
        }
        GenKind::RandomGraphs => {
            if a.nodes == 0 {
                bail!("--nodes must be positive");
            }
            for i in 0..a.count {
                let mut rng = stream(c.seed, i as u64);
                let n = rng.random_range(1..=a.nodes);
                put(
                    format!("graph_{i:04}"),
                    serde_json::to_value(Graph::random(&mut rng, n, &a.values, a.edge_prob)?)?,
                );
            }
        }
    }
    if sink.has_dir() {
        for (stem, v) in &files {
            sink.json(stem, v)?;
        }
        println!("wrote {} files", files.len());
        Ok(())
    } else {
        sink.json("pair", &files)
    }
}

#[derive(Serialize)]
struct DistRow {
    metric: &'static str,
    value: f64,
}

fn dist(a: &DistArgs, c: &Common, sink: &mut Sink) -> Result<()> {
    let (metric, value) = match a.metric {
        Metric::Wasserstein => {
            let (x, y): (Multiset, Multiset) = (load(&a.a)?, load(&a.b)?);
            let d = match &a.z {
                None if x.len() == y.len() => wasserstein(&x, &y, c.p, a.inner_norm.into())?,
                z => {
                    let z = z.clone().unwrap_or_else(|| vec![0.0; x.dim()]);
                    augmented_wasserstein(&x, &y, &z, c.p, a.inner_norm.into())?
                }
            };
            ("wasserstein", d)
        }
        Metric::Tmd | Metric::Wl => {
            let (g, h): (Graph, Graph) = (load(&a.a)?, load(&a.b)?);
            if matches!(a.metric, Metric::Wl) {
                let verdict = wl_distinguishable(&g, &h, a.depth);
                println!("{}", if verdict { "distinguishable" } else { "indistinguishable" });
                ("wl", if verdict { 1.0 } else { 0.0 })
            } else {
                let z = a.z.clone().unwrap_or_else(|| vec![0.0; g.dim()]);
                ("tmd", tmd(&g, &h, a.depth, &z, c.p)?)
            }
        }
    };
    if !matches!(a.metric, Metric::Wl) {
        println!("{}", float(value));
    }
    if sink.has_dir() {
        sink.table("dist", "metric,value", &[DistRow { metric, value }], |r| {
            format!("{},{}", r.metric, float(r.value))
        })?;
    }
    Ok(())
}

/// Embedding for `pair`; `reference` is the pair at the largest ε, used to
/// size capacities and default bias ranges.
fn build_spec(m: &ModelArgs, reference: &Pair, p: f64) -> Result<EmbeddingSpec> {
    if m.width == 0 || m.stack == 0 {
        bail!("--width and --stack must be positive");
    }
    match (m.embedding, m.variant, reference) {
        (Some(e), None, Pair::Multisets { x, y }) => {
            let bias = m.bias_range.unwrap_or_else(|| x.max_norm().max(y.max_norm()).max(1.0));
            let sum = |activation| MultisetEmbedding::Sum { activation, bias_range: bias };
            let family = match e {
                EmbeddingArg::Relu => sum(Activation::Relu),
                EmbeddingArg::Sigmoid => sum(Activation::Sigmoid),
                EmbeddingArg::Tanh => sum(Activation::Tanh),
                EmbeddingArg::Sort => {
                    MultisetEmbedding::Sort { capacity: x.capacity().max(y.capacity()), z: vec![0.0; x.dim()] }
                }
                EmbeddingArg::Adapt => MultisetEmbedding::Adapt,
            };
            Ok(EmbeddingSpec::Multiset { family, width: m.width })
        }
        (None, Some(v), Pair::Graphs { g, h }) => {
            let bias = m.bias_range.unwrap_or_else(|| default_bias_range([g, h]));
            let nodes = g.node_count().max(h.node_count());
            let mut config = MpnnConfig::new(v.into(), m.depth, m.width, g.dim(), nodes, bias);
            config.combine = m.combine.into();
            config.activation = m.activation.into();
            config.p = p;
            config.stack = m.stack;
            Ok(EmbeddingSpec::Mpnn { config })
        }
        (None, None, _) => bail!("pass --embedding (multisets) or --variant (graphs)"),
        (Some(_), _, Pair::Graphs { .. }) => {
            bail!("--embedding applies to multisets; use --variant for graph families")
        }
        (_, Some(_), Pair::Multisets { .. }) => {
            bail!("--variant applies to graphs; use --embedding for multiset families")
        }
    }
}

fn record_csv(r: &ExperimentRecord) -> String {
    format!("{},{},{},{},{}", float(r.epsilon), float(r.input_distance), float(r.gap_mean), float(r.gap_std), r.samples)
}

fn exponent(a: &ExponentArgs, c: &Common, sink: &mut Sink) -> Result<()> {
    let grid = &a.eps_grid.0;
    let largest = grid.iter().copied().fold(f64::NAN, f64::max);
    let fam = a.source.family(a.model.depth);
    let spec = build_spec(&a.model, &fam.pair(largest)?, c.p)?;
    let opts = SweepOptions { p: c.p, draws: a.draws, seed: c.seed, exact: a.exact, ..Default::default() };
    let records = distortion_sweep(|e| fam.pair(e), &spec, grid, &opts)?;
    sink.table("records", "epsilon,input_distance,gap_mean,gap_std,samples", &records, record_csv)?;
    let fit = fit_exponent(&records, c.p).context(
        "most gaps are below floating-point resolution; move the ε grid toward larger values or use --exact",
    )?;
    sink.json("fit", &fit)?;
    eprintln!(
        "alpha = {:.4} (r2 {:.4}, {} points, {} below the noise floor)",
        fit.slope, fit.r2, fit.points, fit.excluded
    );
    Ok(())
}

fn distortion(a: &DistortionArgs, c: &Common, sink: &mut Sink) -> Result<()> {
    if a.in_dim == 0 {
        bail!("--in-dim must be positive");
    }
    let mut rng = stream(child_seed(c.seed, 1), 0);
    let mut v = || (0..a.in_dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    let pairs: Vec<TuplePair> = (0..a.pairs).map(|_| TuplePair { x: v(), y: v(), x2: v(), y2: v() }).collect();
    let mut rows = combine_distortion_study(a.in_dim, &a.widths, &pairs, a.samples, c.p, c.seed)?;
    if let Some(only) = a.combine {
        let kind: CombineKind = only.into();
        rows.retain(|r| r.variant == kind);
    }
    sink.table("distortion", "variant,in_dim,width,distortion", &rows, |r: &DistortionRow| {
        format!("{},{},{},{}", r.variant.name(), r.in_dim, r.width, float(r.distortion))
    })?;
    if sink.has_dir() {
        for r in &rows {
            eprintln!("{} width {}: {:.4}", r.variant.name(), r.width, r.distortion);
        }
    }
    Ok(())
}

fn variance(a: &VarianceArgs, c: &Common, sink: &mut Sink) -> Result<()> {
    let fam = a.source.family(a.model.depth);
    let pair = fam.pair(a.eps)?;
    let spec = build_spec(&a.model, &pair, c.p)?;
    let opts = SweepOptions { p: c.p, draws: a.draws, seed: c.seed, ..Default::default() };
    let rows = variance_vs_width(&spec, &pair, &a.widths, &opts)?;
    sink.table("variance", "width,mean,std,samples", &rows, |r: &WidthRow| {
        format!("{},{},{},{}", r.width, float(r.mean), float(r.std), r.samples)
    })?;
    let points: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.std > 0.0).map(|r| ((r.width as f64).ln(), r.std.ln())).collect();
    if points.len() >= 2 {
        eprintln!("std slope = {:.4}", least_squares(&points).0);
    }
    Ok(())
}

#[derive(Serialize)]
struct ProbeReport {
    variant: &'static str,
    accuracy: f64,
    pairs: usize,
}

fn probe(a: &ProbeArgs, c: &Common, sink: &mut Sink) -> Result<()> {
    if a.pairs < 2 || !(a.eps_min > 0.0 && a.eps_max >= a.eps_min) {
        bail!("need at least 2 pairs and 0 < eps-min ≤ eps-max");
    }
    let pairs: Vec<_> = (0..a.pairs)
        .map(|i| {
            eps_tree_pair(
                a.level,
                a.eps_min + (a.eps_max - a.eps_min) * i as f64 / (a.pairs - 1) as f64,
                a.internal_feature,
            )
        })
        .collect::<holder_core::Result<_>>()?;
    let nodes = pairs[0].g.node_count();
    let mut config = MpnnConfig::new(a.variant.into(), a.depth, a.width, 1, nodes, a.bias_range);
    config.p = c.p;
    let params = MpnnParams::from_seed(&config, c.seed, 0)?;
    let net = Network::new(&config, &params)?;
    let mut data = Vec::with_capacity(2 * pairs.len());
    for t in &pairs {
        data.push((net.embed(&t.g)?, 0));
        data.push((net.embed(&t.g_hat)?, 1));
    }
    let opts = ProbeOptions { train_fraction: a.train_fraction, normalization: a.normalization.into(), seed: c.seed };
    let accuracy = frozen_probe_accuracy(&data, &opts)?;
    let variant = holder_core::mpnn::MpnnVariant::from(a.variant).name();
    eprintln!("accuracy = {accuracy:.4}");
    sink.table("probe", "variant,accuracy,pairs", &[ProbeReport { variant, accuracy, pairs: a.pairs }], |r| {
        format!("{},{},{}", r.variant, float(r.accuracy), r.pairs)
    })
}

#[derive(Serialize)]
struct Coordinate {
    index: usize,
    value: f64,
}

fn embed(a: &EmbedCmdArgs, c: &Common, sink: &mut Sink) -> Result<()> {
    let vector = if a.model.variant.is_some() {
        let g: Graph = load(&a.input)?;
        let EmbeddingSpec::Mpnn { mut config } =
            build_spec(&a.model, &Pair::Graphs { g: g.clone(), h: g.clone() }, c.p)?
        else {
            unreachable!()
        };
        if let Some(cap) = a.capacity {
            config.capacity = cap;
        }
        let params = MpnnParams::from_seed(&config, c.seed, a.draw)?;
        Network::new(&config, &params)?.embed(&g)?
    } else {
        let x: Multiset = load(&a.input)?;
        let EmbeddingSpec::Multiset { family, width } =
            build_spec(&a.model, &Pair::Multisets { x: x.clone(), y: x.clone() }, c.p)?
        else {
            unreachable!()
        };
        let params = StackedParams::sample(&family, width, x.dim(), &mut stream(c.seed, a.draw));
        stacked_embed(&x, &params, c.p)?
    };
    let rows: Vec<Coordinate> =
        vector.into_iter().enumerate().map(|(index, value)| Coordinate { index, value }).collect();
    sink.table("embedding", "index,value", &rows, |r| format!("{},{}", r.index, float(r.value)))
}
