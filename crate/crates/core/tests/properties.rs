use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use adalab::analysts::adversary::{de_interleave, interleave, BijectionAdversary, StackingAdversary};
use adalab::analysts::random_linear_progressive;
use adalab::harness::{run_session, ExperimentConfig};
use adalab::privacy::{depth_progressive, strong_compose};
use adalab::transcript::Transcript;
use adalab::truncation::{check_identity, closeness_gap, full_trajectory, truncated_replay, TruncationMode};
use adalab::{quantize, Norm, Round, Space};

fn norm_strategy() -> impl Strategy<Value = Norm> {
    prop_oneof![Just(Norm::L1), Just(Norm::L2), Just(Norm::Linf)]
}

fn transcript_from(answers: &[Vec<f64>]) -> Transcript {
    let mut tr = Transcript::new("test", "test");
    for (i, a) in answers.iter().enumerate() {
        tr.push(Round {
            t: i + 1,
            query_id: "q".into(),
            answer: a.clone(),
            empirical: a.clone(),
            true_mean: a.clone(),
            true_mean_stderr: None,
            noise: None,
        })
        .unwrap();
    }
    tr
}

fn session_config(seed_lambda: f64) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{
        "distribution": {{"kind": "uniform_box", "dim": 2}},
        "n": 150, "t": 40,
        "analyst": {{"generator": "random_linear", "d": 3, "d_q": 2, "lambda": {seed_lambda}, "l": 1.0,
                    "space": {{"kind": "grid", "resolution": 0.001}}}},
        "mechanism": {{"kind": "clamped_gaussian", "sigma": 0.05}}
    }}"#
    ))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantize_is_nearest_and_idempotent(v in prop::collection::vec(-100.0f64..100.0, 1..6), res in 1e-4f64..1.0) {
        let g = quantize(&v, res).unwrap();
        for (x, y) in v.iter().zip(g.to_real()) {
            prop_assert!((x - y).abs() <= res / 2.0 + 1e-9);
        }
        prop_assert_eq!(quantize(&g.to_real(), res).unwrap(), g);
    }

    #[test]
    fn composition_grows_with_k(k in 1usize..50, alpha in 0.0f64..1.0, beta in 0.0f64..0.01, bp in 1e-6f64..0.5) {
        let a = strong_compose(k, alpha, beta, bp).unwrap();
        let b = strong_compose(k + 1, alpha, beta, bp).unwrap();
        prop_assert!(b.alpha >= a.alpha && b.beta >= a.beta);
    }

    #[test]
    fn progressive_depth_meets_its_inequality(lambda in 0.05f64..0.99, l in 0.1f64..10.0, c1 in 1.0f64..5.0, delta in 1e-5f64..0.1) {
        let k = depth_progressive(lambda, l, c1, delta).unwrap().k_int as i32;
        prop_assert!(lambda.powi(k) * l * c1 / (1.0 - lambda) <= lambda * delta * (1.0 + 1e-9));
    }

    #[test]
    fn interleave_round_trips(a in 0u64..1_000_000, h in 0u64..1_000_000) {
        let (a, h) = (a as f64 / 1e6, h as f64 / 1e6);
        let c = interleave(a, h, 6).unwrap();
        let (a2, h2) = de_interleave(c, 6).unwrap();
        prop_assert!((a - a2).abs() < 1e-12 && (h - h2).abs() < 1e-12);
    }

    #[test]
    fn bijection_adversary_round_trips(answers in prop::collection::vec(0.0f64..=1.0, 1..30), bits in 1u32..17) {
        let mut adv = BijectionAdversary::new(bits, 512).unwrap();
        let mut codes = Vec::new();
        for &a in &answers {
            let q = adv.query();
            codes.push(adv.code(a));
            adv.step(&q, a).unwrap();
        }
        prop_assert_eq!(adv.decode_transcript(), codes);
    }

    #[test]
    fn stacking_adversary_round_trips(answers in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 2), 1..20)) {
        let mut adv = StackingAdversary::new(4.0, 2, 20).unwrap();
        for a in &answers {
            adv.step(a).unwrap();
        }
        prop_assert_eq!(adv.decode_transcript(), answers);
    }

    #[test]
    fn continuous_gap_respects_bound(
        seed in 0u64..10_000,
        lambda in 0.05f64..0.95,
        norm in norm_strategy(),
        k in 1usize..12,
        answers in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 2), 1..60),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let an = random_linear_progressive(3, 2, lambda, 1.0, 2, Space::Continuous, norm, &mut rng).unwrap();
        let tr = transcript_from(&answers);
        let full = full_trajectory(&an, &tr).unwrap();
        let trunc = truncated_replay(&tr, &an, TruncationMode::for_class(an.class(), k).unwrap(), None).unwrap();
        let c1 = match norm { Norm::L1 => 2.0, Norm::L2 => 2f64.sqrt(), Norm::Linf => 1.0 };
        let bound = lambda.powi(k as i32) * c1 / (1.0 - lambda) + 1e-9;
        for t in 1..=answers.len() {
            prop_assert!(closeness_gap(&full, &trunc, t, norm).unwrap() <= bound);
        }
    }

    #[test]
    fn full_depth_truncation_is_the_full_run(seed in 0u64..10_000, answers in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 2), 1..40)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let an = random_linear_progressive(3, 2, 0.8, 1.0, 2, Space::grid(1e-3), Norm::L2, &mut rng).unwrap();
        let tr = transcript_from(&answers);
        let mode = TruncationMode::for_class(an.class(), answers.len()).unwrap();
        let r = check_identity(&an, &tr, mode, None, seed).unwrap();
        prop_assert_eq!(r.state_mismatches, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sessions_replay_deterministically(seed in 0u64..1000, lambda in 0.1f64..0.9) {
        let cfg = session_config(lambda);
        let (a, ra) = run_session(&cfg, seed).unwrap();
        let (b, rb) = run_session(&cfg, seed).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ra.per_round_error, rb.per_round_error);
    }
}
