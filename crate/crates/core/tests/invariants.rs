//! Structural identities that must hold for any valid parameter set, checked
//! over randomized inputs rather than pinned examples.

use hawkes_core::process::{EventSequence, HawkesParams, KernelParams};
use hawkes_core::rare::log_weight;
use hawkes_core::sim::{SamplerKind, SimConfig};
use hawkes_core::harness::ks_two_sample;
use proptest::prelude::*;

fn scenario() -> impl Strategy<Value = (HawkesParams, EventSequence)> {
    (
        0.0f64..2.0,
        0.0f64..1.5,
        0.2f64..3.0,
        0.5f64..12.0,
        prop::collection::vec(0.001f64..0.999, 0..30),
    )
        .prop_map(|(baseline, alpha, beta, horizon, fracs)| {
            let params =
                HawkesParams::new(baseline, KernelParams::new(alpha, beta).unwrap()).unwrap();
            let mut times: Vec<f64> = fracs.into_iter().map(|u| u * horizon).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let events = EventSequence::new(horizon, times).unwrap();
            (params, events)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // Integrating the intensity over [0, s] and [s, T] separately must give
    // the whole-window compensator; the tail piece is computed from its own
    // closed form, not by subtracting.
    #[test]
    fn compensator_is_additive_over_subintervals(
        (params, events) in scenario(),
        frac in 0.0f64..1.0,
    ) {
        let horizon = events.horizon();
        let split = frac * horizon;
        let total = params.compensator(&events, horizon).unwrap();
        let head = params.compensator(&events, split).unwrap();

        let alpha = params.kernel().alpha();
        let beta = params.kernel().beta();
        let mut tail = params.baseline() * (horizon - split);
        for &ti in events.times() {
            if ti < split {
                tail += alpha / beta
                    * ((-beta * (split - ti)).exp() - (-beta * (horizon - ti)).exp());
            } else if ti < horizon {
                tail += alpha / beta * (-(-beta * (horizon - ti)).exp_m1());
            }
        }

        let err = (head + tail - total).abs();
        prop_assert!(
            err <= 1e-9 * total.abs().max(1.0),
            "head {head} + tail {tail} != total {total}"
        );
    }

    // The compensator's slope is the intensity wherever the intensity is
    // continuous, so a central difference away from event times must agree.
    #[test]
    fn compensator_slope_matches_the_intensity(
        (params, events) in scenario(),
        frac in 0.05f64..0.95,
    ) {
        let horizon = events.horizon();
        let t = frac * horizon;
        prop_assume!(events.times().iter().all(|&ti| (ti - t).abs() > 1e-4));
        let h = 1e-6;
        let above = params.compensator(&events, t + h).unwrap();
        let below = params.compensator(&events, t - h).unwrap();
        let slope = (above - below) / (2.0 * h);
        let lambda = params.intensity(&events, t).unwrap();
        prop_assert!(
            (slope - lambda).abs() <= 1e-4 * lambda.max(1.0),
            "slope {slope} vs intensity {lambda}"
        );
    }

    // Every term of the expected count is proportional to the baseline, in
    // all three regimes.
    #[test]
    fn expected_count_is_linear_in_the_baseline(
        baseline in 0.01f64..3.0,
        alpha in 0.0f64..1.5,
        beta in 0.2f64..3.0,
        t in 0.1f64..12.0,
        scale in 0.1f64..4.0,
    ) {
        let kernel = KernelParams::new(alpha, beta).unwrap();
        let one = HawkesParams::new(baseline, kernel).unwrap();
        let scaled = HawkesParams::new(scale * baseline, kernel).unwrap();
        let e1 = one.expected_count(t).unwrap();
        let e2 = scaled.expected_count(t).unwrap();
        prop_assert!(
            (e2 - scale * e1).abs() <= 1e-11 * e2.abs().max(1.0),
            "{e2} vs {}", scale * e1
        );
    }

    // The three count formulas meet at the critical point: nudging alpha one
    // part in a million across beta moves the answer by less than 0.1%.
    #[test]
    fn expected_count_is_continuous_at_criticality(
        baseline in 0.1f64..3.0,
        beta in 0.2f64..2.5,
        t in 0.1f64..8.0,
    ) {
        let at = HawkesParams::new(baseline, KernelParams::new(beta, beta).unwrap())
            .unwrap()
            .expected_count(t)
            .unwrap();
        for nudge in [1.0 - 1e-6, 1.0 + 1e-6] {
            let near = HawkesParams::new(baseline, KernelParams::new(beta * nudge, beta).unwrap())
                .unwrap()
                .expected_count(t)
                .unwrap();
            prop_assert!(
                (near - at).abs() <= 1e-3 * at.abs().max(1e-12),
                "critical {at} vs nudged {near}"
            );
        }
    }

    // Reweighting a trajectory between two baselines is exactly the
    // difference of their log-likelihoods.
    #[test]
    fn reweighting_matches_the_likelihood_ratio(
        (params, events) in scenario(),
        new_baseline in 0.05f64..4.0,
    ) {
        prop_assume!(params.baseline() > 0.01);
        let horizon = events.horizon();
        let tilted = params.with_baseline(new_baseline).unwrap();
        let lw = log_weight(&params, &tilted, &events, horizon).unwrap();
        let direct = params.log_likelihood(&events, horizon).unwrap()
            - tilted.log_likelihood(&events, horizon).unwrap();
        prop_assert!(
            (lw - direct).abs() <= 1e-9 * lw.abs().max(1.0),
            "weight {lw} vs likelihood difference {direct}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    // Whatever the route, a sample is a strictly increasing sequence inside
    // the window.
    #[test]
    fn samplers_respect_the_window(
        baseline in 0.0f64..1.5,
        alpha in 0.0f64..1.2,
        beta in 1.3f64..3.0,
        horizon in 0.5f64..6.0,
        seed in any::<u64>(),
        kind in prop_oneof![
            Just(SamplerKind::Generations),
            Just(SamplerKind::Thinning),
            Just(SamplerKind::Cluster),
        ],
    ) {
        let params = HawkesParams::new(baseline, KernelParams::new(alpha, beta).unwrap()).unwrap();
        let config = SimConfig::new(params, horizon, seed).unwrap();
        let events = kind.simulate(&config);
        prop_assert_eq!(events.horizon(), horizon);
        for &t in events.times() {
            prop_assert!((0.0..=horizon).contains(&t));
        }
        for pair in events.times().windows(2) {
            prop_assert!(pair[0] < pair[1]);
        }
    }

    #[test]
    fn ks_results_are_well_formed(
        a in prop::collection::vec(0.0f64..10.0, 1..50),
        b in prop::collection::vec(0.0f64..10.0, 1..50),
    ) {
        let r = ks_two_sample(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.statistic));
        prop_assert!((0.0..=1.0).contains(&r.p_value));
    }
}
