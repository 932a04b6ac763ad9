use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use adalab::analysts::{random_linear_b, QueryMap};
use adalab::harness::{interact, SessionOptions};
use adalab::truncation::{check_identity, closeness_gap, depth_for, truncated_replay, ReplayContext, TruncationMode};
use adalab::{
    sample_dataset, Analyst, AnalystSpec, Distribution, Family, Matrix, Mechanism, MechanismKind, MechanismSpec, Norm,
    Space,
};

fn scalar(space: Space) -> Analyst {
    Analyst::new(AnalystSpec {
        family: Family::Linear {
            a: Matrix::scalar(0.5),
            b: Matrix::scalar(1.0),
            queries: QueryMap::Threshold { coords: vec![0], gain: 0.3 },
        },
        space,
        norm: Norm::L2,
    })
    .unwrap()
}

fn opts(seed: u64) -> SessionOptions {
    SessionOptions { mc_budget: None, oracle_seed: seed }
}

#[test]
fn scalar_gap_bound_at_depth_three() {
    // λ³·L·C₁/(1−λ) = 0.125 / 0.5
    let an = scalar(Space::Continuous);
    let dist = Distribution::UniformBox { dim: 1 };
    for seed in 0..20 {
        let data = sample_dataset(&dist, 200, seed).unwrap();
        let mut m = Mechanism::new(MechanismSpec { kind: MechanismKind::Empirical, seed }).unwrap();
        let out = interact(&an, &mut m, &data, &dist, 100, opts(seed)).unwrap();
        let mode = TruncationMode::for_class(an.class(), 3).unwrap();
        let trunc = truncated_replay(&out.transcript, &an, mode, None).unwrap();
        for t in 1..=100 {
            assert!(closeness_gap(&out.trajectory, &trunc, t, Norm::L2).unwrap() <= 0.25 + 1e-12);
        }
    }
}

/// On the grid the rounding after each step adds up to Δ per coordinate, so
/// a mismatch at depth k is at most λ^k·R + Δ/(1−λ) with R = L·C₁/(1−λ).
#[test]
fn grid_mismatches_stay_inside_the_rounding_band() {
    let delta = 0.01;
    let an = scalar(Space::grid(delta));
    let k = depth_for(&an, 500).unwrap().k_int;
    assert_eq!(k, 9);
    let band = 0.5f64.powi(k as i32) * 2.0 + delta / 0.5 + 1e-12;
    let dist = Distribution::UniformBox { dim: 1 };
    let mech = MechanismKind::RoundedEmpirical { eps: 0.1 };
    for seed in 0..20 {
        let data = sample_dataset(&dist, 500, seed).unwrap();
        let mut m = Mechanism::new(MechanismSpec { kind: mech, seed }).unwrap();
        let out = interact(&an, &mut m, &data, &dist, 500, opts(seed)).unwrap();
        let r = check_identity(&an, &out.transcript, TruncationMode::for_class(an.class(), k).unwrap(), None, seed)
            .unwrap();
        assert!(r.max_gap <= band, "seed {seed}: gap {} beyond {band}", r.max_gap);
        if let Some(c) = r.first {
            // unequal grid states differ by a whole number of steps
            let steps = c.gap / delta;
            assert!(steps >= 1.0 - 1e-9 && (steps - steps.round()).abs() < 1e-9);
        }
    }
}

#[test]
fn type_b_shared_noise_on_the_grid() {
    let delta = 0.01;
    let dist = Distribution::UniformBox { dim: 2 };
    let mech = MechanismKind::Gaussian { sigma: 0.05 };
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let an = random_linear_b(2, 0.5, 10.0, 2, Space::grid(delta), Norm::L2, &mut rng).unwrap();
        let k = depth_for(&an, 500).unwrap().k_int;
        assert_eq!(k, 11);
        let data = sample_dataset(&dist, 500, seed).unwrap();
        let mut m = Mechanism::new(MechanismSpec { kind: mech, seed }).unwrap();
        let out = interact(&an, &mut m, &data, &dist, 500, opts(seed)).unwrap();
        let ctx = ReplayContext { data: &data, mechanism: mech };
        let r =
            check_identity(&an, &out.transcript, TruncationMode::for_class(an.class(), k).unwrap(), Some(ctx), seed)
                .unwrap();
        let band = 0.5f64.powi(k as i32) * 10.0 + delta * 2f64.sqrt() / 0.5 + 1e-12;
        assert!(r.max_gap <= band, "seed {seed}: gap {} beyond {band}", r.max_gap);
    }
}

#[test]
fn type_b_replay_without_noise_log_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let an = random_linear_b(2, 0.5, 10.0, 2, Space::Continuous, Norm::L2, &mut rng).unwrap();
    let dist = Distribution::UniformBox { dim: 2 };
    let data = sample_dataset(&dist, 100, 0).unwrap();
    let mut m = Mechanism::new(MechanismSpec { kind: MechanismKind::Gaussian { sigma: 0.05 }, seed: 0 }).unwrap();
    let out = interact(&an, &mut m, &data, &dist, 5, opts(0)).unwrap();
    let mut stripped = adalab::Transcript::new("gaussian", an.describe());
    for round in out.transcript.rounds() {
        stripped.push(adalab::Round { noise: None, ..round.clone() }).unwrap();
    }
    let ctx = ReplayContext { data: &data, mechanism: MechanismKind::Gaussian { sigma: 0.05 } };
    let mode = TruncationMode::for_class(an.class(), 2).unwrap();
    let err = truncated_replay(&stripped, &an, mode, Some(ctx)).unwrap_err();
    assert!(matches!(err, adalab::Error::MissingNoiseLog(1)));
}
