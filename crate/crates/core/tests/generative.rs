use clsm::generative::{generate_dataset, sample_behaviors, sample_network, SimConfig};
use clsm::Hyperparams;
use ndarray::Array2;
use proptest::prelude::*;

fn hyper(k: usize, v: usize, alpha: f64) -> Hyperparams {
    let mut h = Hyperparams::symmetric(k, v, 1.0, (1.0, 1.0), 0.5, 1e-5).unwrap();
    h.alpha = vec![alpha; k];
    h
}

#[test]
fn pure_topic_link_rate_matches_strength() {
    // 200 pure nodes per topic, strengths 0.1 and 0.3
    let n = 400;
    let theta = Array2::from_shape_fn((n, 2), |(i, k)| if (i < n / 2) == (k == 0) { 1.0 } else { 0.0 });
    let beta = [0.1, 0.3];
    let (g, _) = sample_network(&theta, &beta, 1e-5, 21, true).unwrap();
    let pairs = (n / 2) * (n / 2 - 1) / 2;
    for (k, &b) in beta.iter().enumerate() {
        let range = if k == 0 { 0..n / 2 } else { n / 2..n };
        let links = g.edges().iter().filter(|&&(a, c)| range.contains(&a) && range.contains(&c)).count();
        let rate = links as f64 / pairs as f64;
        let sigma = (b * (1.0 - b) / pairs as f64).sqrt();
        assert!((rate - b).abs() <= 3.0 * sigma, "topic {k}: rate {rate} vs {b}");
    }
}

#[test]
fn pure_topic_token_frequencies_match_topic() {
    let omega = ndarray::array![[0.5, 0.3, 0.2, 0.0], [0.1, 0.1, 0.1, 0.7]];
    let sets = vec![vec![0usize; 3]; 50];
    let totals = vec![400u64; 50];
    let b = sample_behaviors(&sets, &omega, &totals, 8).unwrap();
    let total = 50.0 * 400.0;
    let mut counts = [0.0; 4];
    for n in 0..50 {
        for s in b.selections(n) {
            counts[s.token] += s.count as f64;
        }
    }
    for (v, &p) in omega.row(0).iter().enumerate() {
        let freq = counts[v] / total;
        let sigma = (p * (1.0 - p) / total).sqrt();
        assert!((freq - p).abs() <= 3.0 * sigma + 1e-12, "token {v}: {freq} vs {p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn retained_indicators_match_degree(seed in any::<u64>(), n in 2usize..30, k in 1usize..4, alpha in 0.05f64..2.0) {
        let mut cfg = SimConfig::new(n, hyper(k, 5, alpha), 2.0, seed);
        cfg.beta = Some(vec![0.4; k]);
        let (g, b, truth) = generate_dataset(&cfg).unwrap();
        g.validate().unwrap();
        prop_assert_eq!(b.num_nodes(), n);
        for node in 0..n {
            prop_assert_eq!(truth.indicator_sets[node].len(), g.degree(node));
            prop_assert!(truth.indicator_sets[node].iter().all(|&z| z < k));
            prop_assert_eq!(truth.fresh_indicators[node].is_some(), g.degree(node) == 0 && b.total(node) > 0);
        }
        for row in truth.theta_true.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn full_retention_keeps_every_partner(seed in any::<u64>(), n in 2usize..20) {
        let mut cfg = SimConfig::new(n, hyper(2, 4, 1.0), 1.0, seed);
        cfg.retain_link_indicators_only = false;
        let (g, _, truth) = generate_dataset(&cfg).unwrap();
        g.validate().unwrap();
        for set in &truth.indicator_sets {
            prop_assert_eq!(set.len(), n - 1);
        }
    }
}
