use compound_core::probability::{joint_of, mutual_information, Distribution, Dmc};
use compound_core::rate::{
    compound_capacity, convex_hull_worst, generalized_rate, is_one_sided, kl_projection, mismatched_rate,
    pythagorean_gap, CapacityConfig, Metric, ProjectionConfig,
};
use compound_core::Matrix;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(0x0c0ffee), ..ProptestConfig::default() }
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn dist(n: usize) -> impl Strategy<Value = Distribution<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|v| Distribution::new(normalize(v)).unwrap())
}

fn channel(nx: usize, ny: usize) -> impl Strategy<Value = Dmc<f64>> {
    prop::collection::vec(prop::collection::vec(0.03f64..1.0, ny), nx)
        .prop_map(|rows| Dmc::new(Matrix::from_rows(rows.into_iter().map(normalize).collect()).unwrap()).unwrap())
}

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=3, 2usize..=3)
}

/// Input law, `count` channels and an output shift, all on a common random shape.
fn instance(count: usize) -> impl Strategy<Value = (Distribution<f64>, Vec<Dmc<f64>>, Vec<f64>)> {
    shape().prop_flat_map(move |(nx, ny)| {
        (dist(nx), prop::collection::vec(channel(nx, ny), count), prop::collection::vec(-3.0f64..3.0, ny))
    })
}

fn hull_instance() -> impl Strategy<Value = (Distribution<f64>, Vec<Dmc<f64>>, Vec<Vec<f64>>)> {
    (shape(), 2usize..=3).prop_flat_map(|((nx, ny), k)| {
        (
            dist(nx),
            prop::collection::vec(channel(nx, ny), k),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, k), 1..4),
        )
    })
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn matched_metric_rate_is_mutual_information((p, ws, _) in instance(1)) {
        let w = &ws[0];
        let rate = mismatched_rate(&p, w, &Metric::log_likelihood(w).unwrap()).unwrap();
        let info = mutual_information(&p, w).unwrap();
        prop_assert!((rate - info).abs() <= 1e-6, "rate {rate}, I {info}");
    }

    #[test]
    fn output_shift_leaves_mismatched_rate_unchanged((p, ws, f) in instance(2)) {
        let d = Metric::log_likelihood(&ws[1]).unwrap();
        let a = mismatched_rate(&p, &ws[0], &d).unwrap();
        let b = mismatched_rate(&p, &ws[0], &d.shifted(&f).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn common_shift_leaves_generalized_rate_unchanged((p, ws, f) in instance(3)) {
        let ds: Vec<_> = ws[1..].iter().map(|w| Metric::map(w, &p).unwrap()).collect();
        let shifted: Vec<_> = ds.iter().map(|d| d.shifted(&f).unwrap()).collect();
        let a = generalized_rate(&p, &ws[0], &ds).unwrap();
        let b = generalized_rate(&p, &ws[0], &shifted).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn projection_value_grows_with_threshold((p, ws, _) in instance(2), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let mu0 = joint_of(&p, &ws[0]).unwrap();
        let (row, col, base) = mu0.decompose();
        let d = Metric::log_likelihood(&ws[1]).unwrap();
        let lo = base.expect(d.values()).unwrap();
        let hi = (0..row.len())
            .map(|a| (0..col.len()).map(|b| d.get(a, b)).fold(f64::MIN, f64::max))
            .zip(row.probs())
            .map(|(m, &pa)| m * pa)
            .sum::<f64>();
        let (t1, t2) = if s <= t { (s, t) } else { (t, s) };
        let cfg = ProjectionConfig::default();
        let at = |u: f64| kl_projection(&base, &row, &col, &d, lo + u * (hi - lo), &cfg).unwrap().value;
        let (v1, v2) = (at(t1), at(t2));
        prop_assert!(v1 <= v2 + 1e-9, "value {v1} at {t1} above {v2} at {t2}");
    }

    #[test]
    fn ml_metrics_of_a_finite_set_reach_capacity((_, ws, _) in instance(3)) {
        let cap = compound_capacity(&ws, &CapacityConfig::default()).unwrap();
        prop_assume!(cap.converged);
        let ds: Vec<_> = ws.iter().map(|w| Metric::log_likelihood(w).unwrap()).collect();
        for (k, w) in ws.iter().enumerate() {
            let r = generalized_rate(&cap.input, w, &ds).unwrap();
            prop_assert!(r >= cap.value - 1e-5, "channel {k}: rate {r} below capacity {}", cap.value);
        }
    }

    #[test]
    fn convex_families_satisfy_the_pythagorean_inequality((p, vs, weights) in hull_instance()) {
        let hull = convex_hull_worst(&vs, &p).unwrap();
        let members: Vec<Dmc<f64>> = weights
            .iter()
            .map(|w| Dmc::mixture(&vs, &normalize(w.iter().map(|x| x + 1e-3).collect())).unwrap())
            .chain(vs.iter().cloned())
            .collect();
        for w in &members {
            let g = pythagorean_gap(&p, w, &hull.channel).unwrap();
            prop_assert!(g >= -1e-9, "gap {g}");
        }
    }

    #[test]
    fn one_sided_sets_are_served_by_the_worst_metric((p, vs, weights) in hull_instance()) {
        let hull = convex_hull_worst(&vs, &p).unwrap();
        let mut members: Vec<Dmc<f64>> = weights
            .iter()
            .map(|w| Dmc::mixture(&vs, &normalize(w.iter().map(|x| x + 1e-3).collect())).unwrap())
            .chain(vs.iter().cloned())
            .collect();
        members.push(hull.channel.clone());
        let check = is_one_sided(&members, &p).unwrap();
        prop_assume!(check.one_sided);
        let s = &members[check.worst.index];
        let d = Metric::log_likelihood(s).unwrap();
        let floor = mutual_information(&p, s).unwrap();
        for w in &members {
            let r = mismatched_rate(&p, w, &d).unwrap();
            prop_assert!(r >= floor - 1e-6, "rate {r} below I(P, W_S) = {floor}");
        }
    }
}
