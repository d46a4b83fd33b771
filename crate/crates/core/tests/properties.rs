mod common;

use common::*;
use evsparse::baselines::sparsemax;
use evsparse::metrics::{bhattacharyya, target_distribution, wasserstein1};
use evsparse::oracle::{dempster_combine, PowerSetMass};
use evsparse::{
    center_params, evidential_weights, sparsify_detailed, Distribution, FeatureVector,
    LastLayerParams, Tolerance,
};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = Instance> {
    (2usize..=16, 1usize..=32).prop_flat_map(|(k, j)| {
        (
            prop::collection::vec(prop::collection::vec(-3.0..3.0f64, j), k),
            prop::collection::vec(-3.0..3.0f64, k),
            prop::collection::vec(-3.0..3.0f64, j),
        )
            .prop_map(|(weights, bias, phi)| Instance { weights, bias, phi })
    })
}

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, k).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    })
}

/// Random normalized mass over the subsets of `k` classes with a handful of
/// focal elements, always including the full frame so combinations never
/// hit total conflict.
fn mass(k: usize) -> impl Strategy<Value = PowerSetMass> {
    let full = (1u32 << k) - 1;
    prop::collection::vec((1u32..=full, 0.05..1.0f64), 1..5).prop_map(move |focal| {
        let mut masses = vec![0.0; 1 << k];
        masses[full as usize] = 0.1;
        for (a, m) in focal {
            masses[a as usize] += m;
        }
        let total: f64 = masses.iter().sum();
        masses.iter_mut().for_each(|m| *m /= total);
        PowerSetMass::from_masses(k, masses).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn w_is_logits_minus_their_mean(inst in instance()) {
        let ew = evidential_weights(&center_params(&inst.params()).unwrap(), &inst.features()).unwrap();
        let logits = inst.naive_logits();
        let mu = mean(&logits);
        let centered: Vec<f64> = logits.iter().map(|z| z - mu).collect();
        prop_assert!(max_abs_diff(ew.w(), &centered) <= 1e-10);
        let scale = ew.max_abs().max(1.0) * ew.len() as f64;
        prop_assert!(ew.w().iter().sum::<f64>().abs() <= 1e-10 * scale);
    }

    #[test]
    fn centered_columns_sum_to_zero(inst in instance()) {
        let centered = center_params(&inst.params()).unwrap();
        let k = inst.bias.len();
        let max_raw = inst.weights.iter().flatten().chain(&inst.bias).fold(1.0_f64, |a, v| a.max(v.abs()));
        for j in 0..inst.phi.len() {
            let col: f64 = (0..k).map(|kk| centered.beta(kk, j)).sum();
            prop_assert!(col.abs() <= 1e-12 * k as f64 * max_raw);
        }
        prop_assert!(centered.beta0().iter().sum::<f64>().abs() <= 1e-12 * k as f64 * max_raw);
    }

    #[test]
    fn filtered_support_keeps_argmax_and_order(inst in instance()) {
        let out = sparsify_detailed(&inst.params(), &inst.features(), Tolerance::default()).unwrap();
        let filtered = &out.filtered;
        let total: f64 = filtered.probs().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12 * filtered.num_classes() as f64);
        if !filtered.vacuous_fallback() {
            prop_assert!(filtered.support().contains(&out.softmax.argmax()));
        }
        let soft = out.softmax.probs();
        for (a, &i) in filtered.support().iter().enumerate() {
            for (b, &j) in filtered.support().iter().enumerate() {
                prop_assert_eq!(filtered.probs()[a] >= filtered.probs()[b], soft[i] >= soft[j]);
            }
        }
    }

    #[test]
    fn per_feature_offsets_do_not_matter(
        inst in instance(),
        offsets in prop::collection::vec(-5.0..5.0f64, 32),
    ) {
        let shifted = Instance {
            weights: inst
                .weights
                .iter()
                .map(|row| row.iter().zip(&offsets).map(|(w, c)| w + c).collect())
                .collect(),
            bias: inst.bias.clone(),
            phi: inst.phi.clone(),
        };
        let base = sparsify_detailed(&inst.params(), &inst.features(), Tolerance::default()).unwrap();
        let moved = sparsify_detailed(&shifted.params(), &shifted.features(), Tolerance::default()).unwrap();
        let (c0, c1) = (center_params(&inst.params()).unwrap(), center_params(&shifted.params()).unwrap());
        for k in 0..inst.bias.len() {
            prop_assert!(max_abs_diff(c0.row(k), c1.row(k)) <= 1e-12 * 16.0);
        }
        prop_assert!(max_abs_diff(base.weights.w(), moved.weights.w()) <= 1e-10);
        prop_assert_eq!(base.filtered.support(), moved.filtered.support());
        prop_assert!(max_abs_diff(base.filtered.probs(), moved.filtered.probs()) <= 1e-12);
    }

    #[test]
    fn sparsemax_gaps_match_logit_gaps(z in prop::collection::vec(-5.0..5.0f64, 2..12)) {
        let out = sparsemax(&z).unwrap();
        for (a, &i) in out.support().iter().enumerate() {
            for (b, &j) in out.support().iter().enumerate() {
                prop_assert!(((out.probs()[a] - out.probs()[b]) - (z[i] - z[j])).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn metrics_are_symmetric_and_zero_on_equal(
        (p, q, r) in (2usize..=8).prop_flat_map(|k| (simplex(k), simplex(k), simplex(k)))
    ) {
        let (p, q, r) = (
            Distribution::from_weights(p).unwrap(),
            Distribution::from_weights(q).unwrap(),
            Distribution::from_weights(r).unwrap(),
        );
        prop_assert!(wasserstein1(&p, &p).unwrap() <= 1e-12);
        prop_assert!(bhattacharyya(&p, &p).unwrap() <= 1e-12);
        prop_assert!((wasserstein1(&p, &q).unwrap() - wasserstein1(&q, &p).unwrap()).abs() <= 1e-12);
        prop_assert!((bhattacharyya(&p, &q).unwrap() - bhattacharyya(&q, &p).unwrap()).abs() <= 1e-12);
        prop_assert!(bhattacharyya(&p, &q).unwrap() >= 0.0);
        let (pq, qr, pr) = (
            wasserstein1(&p, &q).unwrap(),
            wasserstein1(&q, &r).unwrap(),
            wasserstein1(&p, &r).unwrap(),
        );
        prop_assert!(pr <= pq + qr + 1e-10);
    }

    #[test]
    fn target_is_idempotent_on_its_support(
        (p, q) in (2usize..=8).prop_flat_map(|k| (simplex(k), simplex(k)))
    ) {
        let p = Distribution::from_weights(p).unwrap();
        let q = Distribution::from_weights(q).unwrap();
        let once = target_distribution(&p, &q).unwrap();
        let restricted = Distribution::from_weights(once.to_dense()).unwrap();
        let twice = target_distribution(&restricted, &q).unwrap();
        prop_assert_eq!(once.support(), twice.support());
        prop_assert!(max_abs_diff(once.probs(), twice.probs()) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dempster_is_commutative_and_associative(
        (a, b, c) in (2usize..=6).prop_flat_map(|k| (mass(k), mass(k), mass(k)))
    ) {
        let (ab, kappa_ab) = dempster_combine(&a, &b).unwrap();
        let (ba, kappa_ba) = dempster_combine(&b, &a).unwrap();
        prop_assert!(ab.max_abs_diff(&ba) <= 1e-10);
        prop_assert!((0.0..1.0).contains(&kappa_ab));
        prop_assert!((kappa_ab - kappa_ba).abs() <= 1e-12);

        let left = dempster_combine(&ab, &c).unwrap().0;
        let right = dempster_combine(&a, &dempster_combine(&b, &c).unwrap().0).unwrap().0;
        prop_assert!(left.max_abs_diff(&right) <= 1e-10);

        let vacuous = PowerSetMass::vacuous(a.num_classes()).unwrap();
        prop_assert!(dempster_combine(&a, &vacuous).unwrap().0.max_abs_diff(&a) <= 1e-15);
        prop_assert!((a.masses().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn uniform_logits_fall_back_for_any_features() {
    let model = LastLayerParams::new(vec![vec![0.0; 3]; 4], vec![1.5; 4]).unwrap();
    for phi in [[0.0, 0.0, 0.0], [1.0, -2.0, 3.0]] {
        let out = sparsify_detailed(&model, &FeatureVector::new(phi.to_vec()).unwrap(), Tolerance::default()).unwrap();
        assert!(out.filtered.vacuous_fallback());
        assert_eq!(out.filtered.probs(), &[0.25; 4]);
    }
}
