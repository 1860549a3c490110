use compound_core::io::builtin_scenario;
use compound_core::probability::{Distribution, Dmc};
use compound_core::rate::{DecoderKind, Metric};
use compound_core::sim::{
    decode, estimate_error, generate_codebook, joint_type, transmit, DecoderSpec, SimConfig, SimParams,
};
use compound_core::Matrix;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(0xc0de), ..ProptestConfig::default() }
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn channel(nx: usize, ny: usize) -> impl Strategy<Value = Dmc<f64>> {
    prop::collection::vec(prop::collection::vec(0.03f64..1.0, ny), nx)
        .prop_map(|rows| Dmc::new(Matrix::from_rows(rows.into_iter().map(normalize).collect()).unwrap()).unwrap())
}

/// Input law, the true channel and a second channel supplying the metric.
fn pair() -> impl Strategy<Value = (Distribution<f64>, Dmc<f64>, Dmc<f64>)> {
    (2usize..=3, 2usize..=3).prop_flat_map(|(nx, ny)| {
        (
            prop::collection::vec(0.1f64..1.0, nx).prop_map(|v| Distribution::new(normalize(v)).unwrap()),
            channel(nx, ny),
            channel(nx, ny),
        )
    })
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn linear_score_is_the_average_metric((p, w, v) in pair(), seed in any::<u64>(), n in 1usize..40) {
        let d = Metric::log_likelihood(&v).unwrap();
        let book = generate_codebook(&p, n, 2, seed).unwrap();
        let x = book.word(0);
        let y = transmit(&w, x, seed ^ 1).unwrap();
        let direct = x.iter().zip(&y).map(|(&a, &b)| d.get(a, b)).sum::<f64>() / n as f64;
        let typed = DecoderSpec::linear(d).score(&joint_type(x, &y, p.len(), w.outputs()), n);
        prop_assert!((direct - typed).abs() <= 1e-12, "{direct} vs {typed}");
    }

    #[test]
    fn one_metric_generalized_decoder_is_linear((p, w, v) in pair(), seed in any::<u64>()) {
        let d = Metric::log_likelihood(&v).unwrap();
        let book = generate_codebook(&p, 12, 16, seed).unwrap();
        let linear = DecoderSpec::linear(d.clone());
        let single = DecoderSpec::generalized(vec![d]).unwrap();
        for m in 0..book.len() {
            let y = transmit(&w, book.word(m), seed.wrapping_add(m as u64)).unwrap();
            prop_assert_eq!(decode(&y, &book, &linear).unwrap(), decode(&y, &book, &single).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn same_seed_same_statistics((p, w, v) in pair(), seed in any::<u64>()) {
        let spec = DecoderSpec::linear(Metric::log_likelihood(&v).unwrap());
        let params = SimParams { n: 16, rate_bits: 0.25, trials: 50, seed };
        let channels = [w, v];
        let a = estimate_error(&channels, &spec, &p, &params, &SimConfig::default()).unwrap();
        let b = estimate_error(&channels, &spec, &p, &params, &SimConfig::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn mmi_is_no_worse_than_gmap_on_matched_runs() {
    let scenario = builtin_scenario("union-one-sided").unwrap().unwrap();
    let input = scenario.input.clone().unwrap();
    let gmap = DecoderSpec::for_kind(DecoderKind::Gmap, &scenario.set, &input).unwrap();
    let mmi = DecoderSpec::mmi();
    for n in [16, 32] {
        let params = SimParams { n, rate_bits: 0.15, trials: 400, seed: 90 + n as u64 };
        let channels = scenario.set.channels();
        let a = estimate_error(channels, &mmi, &input, &params, &SimConfig::default()).unwrap();
        let b = estimate_error(channels, &gmap, &input, &params, &SimConfig::default()).unwrap();
        for (m, g) in a.iter().zip(&b) {
            let sigma = m.std_err.hypot(g.std_err);
            assert!(
                m.error_rate <= g.error_rate + 3.0 * sigma,
                "n={n} channel {}: MMI {} vs GMAP {} (σ {sigma})",
                m.channel,
                m.error_rate,
                g.error_rate
            );
        }
    }
}
