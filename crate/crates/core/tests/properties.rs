//! Property-based and bulk randomized invariants for the numeric kernels
//! and the aggregation rules.

use proptest::prelude::*;
use rand::Rng;

use drag_core::aggregation::{
    byzantine_manipulate, degree_of_divergence, drag_manipulate, ReferenceState,
};
use drag_core::data::{gen_gaussian_mixture, partition_label_skew};
use drag_core::seeding;
use drag_core::ParamVector;

fn random_vector<R: Rng>(dim: usize, rng: &mut R) -> ParamVector {
    ParamVector::new(
        (0..dim)
            .map(|_| rand_distr::StandardNormal.sample(rng))
            .collect(),
    )
    .unwrap()
}

use rand_distr::Distribution;

#[test]
fn cauchy_schwarz_holds_over_many_pairs() {
    let mut rng = seeding::rng(1, &[500]);
    for _ in 0..10_000 {
        let dim = 1 + rng.random_range(0..32);
        let a = random_vector(dim, &mut rng);
        let b = random_vector(dim, &mut rng);
        let dot = a.inner(&b).unwrap().abs();
        assert!(dot <= a.norm() * b.norm() + 1e-9);
    }
}

#[test]
fn lambda_stays_in_range_exactly() {
    let mut rng = seeding::rng(2, &[501]);
    for _ in 0..10_000 {
        let a = random_vector(16, &mut rng);
        let b = random_vector(16, &mut rng);
        let c: f64 = rng.random();
        let score = degree_of_divergence(&a, &b, c).unwrap();
        assert!(score.lambda >= 0.0);
        assert!(score.lambda <= 2.0 * c);
        assert!((-1.0..=1.0).contains(&score.cosine));
    }
}

#[test]
fn drag_manipulation_grows_the_reference_component() {
    // The analytic gap is lambda·(|g| - <g,r>/|r|) >= 0, with equality only
    // when lambda = 0 or g is positively parallel to r.
    let mut rng = seeding::rng(3, &[502]);
    for _ in 0..10_000 {
        let g = random_vector(12, &mut rng);
        let r = random_vector(12, &mut rng);
        let c: f64 = rng.random();
        let score = degree_of_divergence(&g, &r, c).unwrap();
        let m = drag_manipulate(&g, &r, score).unwrap();
        let before = g.inner(&r).unwrap();
        let after = m.v.inner(&r).unwrap();
        assert!(after >= before - 1e-9 * g.norm() * r.norm());
        let gap_expected = score.lambda * (g.norm() - before / r.norm());
        let gap = (after - before) / r.norm();
        assert!((gap - gap_expected).abs() <= 1e-9 * (1.0 + gap_expected.abs()));
        if score.lambda > 1e-12 && gap_expected > 1e-9 {
            assert!(after > before);
        }
    }
}

#[test]
fn byzantine_rule_is_invariant_to_positive_rescaling() {
    let mut rng = seeding::rng(4, &[503]);
    for _ in 0..10_000 {
        let g = random_vector(12, &mut rng);
        let r = random_vector(12, &mut rng);
        let c: f64 = rng.random();
        // Log-uniform positive scaling over twelve decades.
        let p = 10f64.powf(rng.random::<f64>() * 12.0 - 6.0);
        let base = byzantine_manipulate(&g, &r, degree_of_divergence(&g, &r, c).unwrap()).unwrap();
        let scaled_g = g.scale(p);
        let scaled = byzantine_manipulate(
            &scaled_g,
            &r,
            degree_of_divergence(&scaled_g, &r, c).unwrap(),
        )
        .unwrap();
        for (a, b) in base.v.as_slice().iter().zip(scaled.v.as_slice()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b} at p={p}");
        }
    }
}

#[test]
fn byzantine_rule_respects_norm_bound() {
    // |v| <= (|1-lambda| + lambda)·|r|.
    let mut rng = seeding::rng(5, &[504]);
    for _ in 0..10_000 {
        let g = random_vector(12, &mut rng);
        let r = random_vector(12, &mut rng);
        let c: f64 = rng.random();
        let score = degree_of_divergence(&g, &r, c).unwrap();
        let m = byzantine_manipulate(&g, &r, score).unwrap();
        let bound = ((1.0 - score.lambda).abs() + score.lambda) * r.norm() + 1e-9;
        assert!(m.v.norm() <= bound);
    }
}

#[test]
fn byzantine_rule_corrects_reversed_updates() {
    // For c >= 0.5 and g exactly opposed to r the corrected update points
    // along r again.
    let mut rng = seeding::rng(6, &[505]);
    for _ in 0..2_000 {
        let r = random_vector(8, &mut rng);
        let scale: f64 = rng.random::<f64>() * 4.0 + 1e-3;
        let g = r.scale(-scale);
        let c = 0.5 + rng.random::<f64>() * 0.5;
        let score = degree_of_divergence(&g, &r, c).unwrap();
        assert!(score.lambda >= 1.0 - 1e-12);
        let m = byzantine_manipulate(&g, &r, score).unwrap();
        assert!(m.v.inner(&r).unwrap() >= 0.0);
    }
}

#[test]
fn reference_recursion_matches_closed_form_in_bulk() {
    let mut rng = seeding::rng(7, &[506]);
    for trial in 0..100 {
        let alpha = [0.2, 0.6, 1.0][trial % 3];
        let g0: Vec<ParamVector> = (0..4).map(|_| random_vector(10, &mut rng)).collect();
        let t = 1 + rng.random_range(0..50);
        let mut state = ReferenceState::init_traced(&g0).unwrap();
        for _ in 0..t {
            let delta = random_vector(10, &mut rng);
            state.record_delta(&delta);
            state.update(&delta, alpha).unwrap();
        }
        let err = state.closed_form_error(alpha).unwrap();
        assert!(err <= 1e-10, "trial {trial}: {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_and_norm_commute(
        values in proptest::collection::vec(-100.0f64..100.0, 1..24),
        factor in -50.0f64..50.0,
    ) {
        let a = ParamVector::new(values).unwrap();
        let scaled = a.scale(factor);
        let expected = factor.abs() * a.norm();
        prop_assert!((scaled.norm() - expected).abs() <= 1e-12 * (1.0 + expected));
    }

    #[test]
    fn self_inner_is_norm_squared(
        values in proptest::collection::vec(-100.0f64..100.0, 1..24),
    ) {
        let a = ParamVector::new(values).unwrap();
        let dot = a.inner(&a).unwrap();
        let norm_sq = a.norm() * a.norm();
        prop_assert!((dot - norm_sq).abs() <= 1e-9 * (1.0 + norm_sq));
    }

    #[test]
    fn vector_ops_match_naive_loops(
        pair in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..24),
        factor in -50.0f64..50.0,
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pair.into_iter().unzip();
        let a = ParamVector::new(xs.clone()).unwrap();
        let b = ParamVector::new(ys.clone()).unwrap();

        let mut dot = 0.0;
        let mut sq = 0.0;
        let mut axpy = vec![0.0; xs.len()];
        let mut scaled = vec![0.0; xs.len()];
        for i in 0..xs.len() {
            dot += xs[i] * ys[i];
            sq += xs[i] * xs[i];
            axpy[i] = xs[i] + factor * ys[i];
            scaled[i] = factor * xs[i];
        }
        let rel = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + y.abs());

        prop_assert!(rel(a.inner(&b).unwrap(), dot));
        prop_assert!(rel(a.norm(), sq.sqrt()));
        let got = a.axpy(factor, &b).unwrap();
        for (g, e) in got.as_slice().iter().zip(&axpy) {
            prop_assert!(rel(*g, *e));
        }
        let got = a.scale(factor);
        for (g, e) in got.as_slice().iter().zip(&scaled) {
            prop_assert!(rel(*g, *e));
        }
    }

    #[test]
    fn cosine_is_always_clamped(
        pair in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..24),
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pair.into_iter().unzip();
        let a = ParamVector::new(xs).unwrap();
        let b = ParamVector::new(ys).unwrap();
        if let Ok(cosine) = a.cosine(&b) {
            prop_assert!((-1.0..=1.0).contains(&cosine));
        }
    }

    #[test]
    fn partitions_are_disjoint_covers(
        clients in 1usize..9,
        q_step in 0usize..5,
        seed in 0u64..500,
    ) {
        let ds = gen_gaussian_mixture(4, 25, 3, 4.0, seed).unwrap();
        let lo = 1.0 / clients as f64;
        let q = lo + (1.0 - lo) * q_step as f64 / 4.0;
        let part = partition_label_skew(&ds, clients, q, seed).unwrap();
        let mut seen = vec![false; ds.len()];
        for shard in part.shards() {
            prop_assert!(!shard.is_empty());
            for &i in shard {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn data_generation_is_reproducible(seed in 0u64..1000) {
        let a = gen_gaussian_mixture(3, 10, 4, 5.0, seed).unwrap();
        let b = gen_gaussian_mixture(3, 10, 4, 5.0, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
