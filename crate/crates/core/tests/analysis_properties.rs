use holder_core::adversarial::eps_tree_pair;
use holder_core::analysis::{
    distortion_sweep, fit_exponent, gap_draws, log_grid, EmbeddingSpec, ExperimentRecord, PairFamily, SweepOptions,
};
use holder_core::embeddings::{Activation, MultisetEmbedding};
use holder_core::mpnn::{MpnnConfig, MpnnVariant};
use proptest::prelude::*;

fn records(slope: f64, scale: f64, p: f64) -> Vec<ExperimentRecord> {
    log_grid(0.01, 1.0, 10)
        .into_iter()
        .map(|e| ExperimentRecord {
            epsilon: e,
            input_distance: scale * e,
            gap_mean: (e.powf(slope)).powf(p),
            gap_std: 0.0,
            samples: 1,
        })
        .collect()
}

proptest! {
    /// Rescaling the input distance only moves the intercept.
    #[test]
    fn fit_slope_ignores_distance_scale(slope in 0.5f64..6.0, scale in 1e-3f64..1e3, p in 1.0f64..3.0) {
        let a = fit_exponent(&records(slope, 1.0, p), p).unwrap();
        let b = fit_exponent(&records(slope, scale, p), p).unwrap();
        prop_assert!((a.slope - slope).abs() < 1e-9);
        prop_assert!((a.slope - b.slope).abs() < 1e-9);
    }
}

#[test]
fn exact_relu_oracle_agrees_with_monte_carlo() {
    let spec = EmbeddingSpec::Multiset {
        family: MultisetEmbedding::Sum { activation: Activation::Relu, bias_range: 1.0 },
        width: 1,
    };
    let grid = [0.03, 0.06, 0.12, 0.25, 0.5];
    let fam = PairFamily::PmEpsilon;
    let exact = SweepOptions { exact: true, ..Default::default() };
    let mc = SweepOptions { draws: 1_000_000, seed: 21, ..Default::default() };
    let a = distortion_sweep(|e| fam.pair(e), &spec, &grid, &exact).unwrap();
    let b = distortion_sweep(|e| fam.pair(e), &spec, &grid, &mc).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let se = y.gap_std / (y.samples as f64).sqrt();
        assert!(
            (x.gap_mean - y.gap_mean).abs() <= 3.0 * se,
            "ε={}: {} vs {} ± {se}",
            x.epsilon,
            x.gap_mean,
            y.gap_mean
        );
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let t = eps_tree_pair(1, 0.2, 1.0).unwrap();
    let pairs = [PairFamily::EpsTrees { level: 1, internal_feature: 1.0 }.pair(0.2).unwrap()];
    let mut config = MpnnConfig::new(MpnnVariant::Smooth, 2, 2, 1, t.g.node_count(), 2.0);
    config.stack = 4;
    let spec = EmbeddingSpec::Mpnn { config };
    let opts = SweepOptions { draws: 24, seed: 22, ..Default::default() };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| gap_draws(&pairs, &spec, &opts).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn generators_are_deterministic() {
    for fam in [
        PairFamily::PmEpsilon,
        PairFamily::EqualMoments { k: 4 },
        PairFamily::AdaptAdversarial,
        PairFamily::EpsTrees { level: 2, internal_feature: 1.0 },
    ] {
        let a = serde_json::to_string(&fam.pair(0.3).unwrap()).unwrap();
        let b = serde_json::to_string(&fam.pair(0.3).unwrap()).unwrap();
        assert_eq!(a, b);
    }
    let spec = EmbeddingSpec::Multiset { family: MultisetEmbedding::Adapt, width: 3 };
    let opts = SweepOptions { draws: 50, seed: 23, ..Default::default() };
    let fam = PairFamily::AdaptAdversarial;
    let grid = log_grid(0.1, 0.8, 5);
    let a = distortion_sweep(|e| fam.pair(e), &spec, &grid, &opts).unwrap();
    let b = distortion_sweep(|e| fam.pair(e), &spec, &grid, &opts).unwrap();
    assert_eq!(a, b);
}
