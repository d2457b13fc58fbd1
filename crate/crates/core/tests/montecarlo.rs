//! Statistical checks: samplers and estimators against closed forms, and
//! against each other, at fixed seeds and tolerances wide enough to be
//! stable run to run.

use hawkes_core::graph::{simulate_network, NodeSpec, SimMode, UserGraph};
use hawkes_core::harness::{ks_two_sample, run_replications, summarize};
use hawkes_core::process::{HawkesParams, KernelParams};
use hawkes_core::rare::{estimate_is, estimate_naive, RareEventSpec};
use hawkes_core::sim::{SamplerKind, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

fn params(baseline: f64, alpha: f64, beta: f64) -> HawkesParams {
    HawkesParams::new(baseline, KernelParams::new(alpha, beta).unwrap()).unwrap()
}

fn count_samples(kind: SamplerKind, config: &SimConfig, n: usize, master: u64) -> Vec<f64> {
    run_replications(
        |seed| kind.simulate(&config.reseeded(seed)).len() as f64,
        n,
        master,
        8,
    )
}

// P(N > c) for a Poisson count, by direct summation.
fn poisson_tail_above(mean: f64, c: u64) -> f64 {
    let mut term = (-mean).exp();
    let mut cdf = term;
    for k in 1..=c {
        term *= mean / k as f64;
        cdf += term;
    }
    (1.0 - cdf).max(0.0)
}

fn mean_matches(kind: SamplerKind, n: usize, master: u64) {
    let p = params(1.0, 1.0, 2.0);
    let config = SimConfig::new(p, 10.0, 0).unwrap();
    let expected = p.expected_count(10.0).unwrap();
    let stats = summarize(&count_samples(kind, &config, n, master)).unwrap();
    assert!(
        (stats.mean - expected).abs() < 3.0 * stats.std_err,
        "{kind:?}: mean {} vs expected {expected} (se {})",
        stats.mean,
        stats.std_err
    );
}

#[test]
fn generation_sampler_mean_tracks_the_analytic_count() {
    mean_matches(SamplerKind::Generations, 10_000, 101);
}

#[test]
fn thinning_sampler_mean_tracks_the_analytic_count() {
    mean_matches(SamplerKind::Thinning, 10_000, 202);
}

#[test]
fn cluster_sampler_mean_tracks_the_analytic_count() {
    mean_matches(SamplerKind::Cluster, 10_000, 303);
}

#[test]
fn thinning_without_excitation_is_poisson() {
    let config = SimConfig::new(params(2.0, 0.0, 1.0), 5.0, 0).unwrap();
    let counts = count_samples(SamplerKind::Thinning, &config, 20_000, 404);
    let stats = summarize(&counts).unwrap();
    assert!((stats.mean - 10.0).abs() < 3.0 * stats.std_err);
    assert!(
        (stats.variance - 10.0).abs() < 0.5,
        "Poisson counts should have variance near the mean, got {}",
        stats.variance
    );
}

#[test]
fn samplers_agree_in_distribution() {
    let config = SimConfig::new(params(1.0, 1.0, 2.0), 10.0, 0).unwrap();
    let n = 2000;
    let gens = count_samples(SamplerKind::Generations, &config, n, 11);
    let thin = count_samples(SamplerKind::Thinning, &config, n, 22);
    let clus = count_samples(SamplerKind::Cluster, &config, n, 33);
    for (label, a, b) in [
        ("generations vs thinning", &gens, &thin),
        ("generations vs cluster", &gens, &clus),
        ("thinning vs cluster", &thin, &clus),
    ] {
        let r = ks_two_sample(a, b).unwrap();
        assert!(
            r.p_value > 1e-3,
            "{label}: D = {}, p = {}",
            r.statistic,
            r.p_value
        );
    }
}

#[test]
fn naive_estimator_matches_poisson_tails() {
    let p = params(1.0, 0.0, 1.0);

    let certain = RareEventSpec::new(0, 10.0, 10_000).unwrap();
    let est = estimate_naive(&certain, &p, 55, 8).unwrap();
    assert!(
        (est.p_hat - (1.0 - (-10.0_f64).exp())).abs() < 1e-3,
        "P(N > 0) should be nearly certain, got {}",
        est.p_hat
    );

    let moderate = RareEventSpec::new(10, 10.0, 10_000).unwrap();
    let est = estimate_naive(&moderate, &p, 66, 8).unwrap();
    let exact = poisson_tail_above(10.0, 10);
    assert!(
        (est.p_hat - exact).abs() < 3.5 * est.std_err,
        "naive {} vs exact {exact} (se {})",
        est.p_hat,
        est.std_err
    );
}

#[test]
fn importance_sampling_matches_a_deep_poisson_tail() {
    let p = params(1.0, 0.0, 1.0);
    let spec = RareEventSpec::new(25, 10.0, 4000).unwrap();
    let est = estimate_is(&spec, &p, 77, 8).unwrap();
    let exact = poisson_tail_above(10.0, 25);
    assert!(est.std_err > 0.0);
    assert!(est.ess >= 100.0, "effective sample size collapsed: {}", est.ess);
    assert!(
        (est.p_hat - exact).abs() < 4.0 * est.std_err,
        "tilted estimate {} vs exact {exact} (se {})",
        est.p_hat,
        est.std_err
    );
    assert!(est.p_hat > 0.5 * exact && est.p_hat < 2.0 * exact);
}

#[test]
fn importance_sampling_agrees_with_naive_on_an_excited_process() {
    // No closed form here, so cross-check the weighted estimator against a
    // large plain-count run at a threshold both can reach.
    let p = params(1.0, 0.5, 1.0);
    let spec_is = RareEventSpec::new(30, 10.0, 4000).unwrap();
    let spec_naive = RareEventSpec::new(30, 10.0, 40_000).unwrap();
    let tilted = estimate_is(&spec_is, &p, 88, 8).unwrap();
    let plain = estimate_naive(&spec_naive, &p, 99, 8).unwrap();
    assert!(plain.hits > 50, "naive reference is too sparse to compare");
    let gap = (tilted.p_hat - plain.p_hat).abs();
    let budget = 4.0 * (tilted.std_err + plain.std_err);
    assert!(
        gap < budget,
        "tilted {} vs naive {} (budget {budget})",
        tilted.p_hat,
        plain.p_hat
    );
}

#[test]
fn ks_p_values_are_calibrated_under_the_null() {
    let dist = Poisson::new(10.0).unwrap();
    let mut passes = 0;
    for rep in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + rep);
        let a: Vec<f64> = (0..150).map(|_| dist.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..150).map(|_| dist.sample(&mut rng)).collect();
        if ks_two_sample(&a, &b).unwrap().p_value > 0.01 {
            passes += 1;
        }
    }
    assert!(
        passes >= 90,
        "same-distribution pairs rejected too often: {passes}/100 passed"
    );
}

#[test]
fn ks_detects_a_shifted_distribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let da = Poisson::new(10.0).unwrap();
    let db = Poisson::new(13.0).unwrap();
    let a: Vec<f64> = (0..400).map(|_| da.sample(&mut rng)).collect();
    let b: Vec<f64> = (0..400).map(|_| db.sample(&mut rng)).collect();
    let r = ks_two_sample(&a, &b).unwrap();
    assert!(r.p_value < 0.01, "shifted pair not detected: p = {}", r.p_value);
}

fn network_total_mean(g: &UserGraph, n: usize, master: u64) -> (f64, f64) {
    let totals: Vec<f64> = (0..n)
        .map(|i| {
            simulate_network(g, 15.0, master + i as u64, 0.0, SimMode::Incremental)
                .unwrap()
                .len() as f64
        })
        .collect();
    let stats = summarize(&totals).unwrap();
    (stats.mean, stats.std_err)
}

#[test]
fn follow_edges_only_add_events() {
    let kernel = KernelParams::new(0.8, 1.6).unwrap();
    let nodes = || {
        vec![
            NodeSpec::new("a", 0.4, kernel).unwrap(),
            NodeSpec::new("b", 0.4, kernel).unwrap(),
            NodeSpec::new("c", 0.4, kernel).unwrap(),
        ]
    };
    let isolated = UserGraph::new(nodes(), vec![]).unwrap();
    let wired = UserGraph::new(
        nodes(),
        vec![
            (String::from("b"), String::from("a")),
            (String::from("c"), String::from("b")),
            (String::from("a"), String::from("c")),
        ],
    )
    .unwrap();
    let (mean_iso, se_iso) = network_total_mean(&isolated, 400, 1000);
    let (mean_wired, se_wired) = network_total_mean(&wired, 400, 2000);
    let slack = 3.0 * (se_iso + se_wired);
    assert!(
        mean_wired > mean_iso - slack,
        "wiring the graph lost events: {mean_wired} vs {mean_iso}"
    );
    // With branching ratio 0.5 per edge the lift should be clearly visible.
    assert!(
        mean_wired > mean_iso + slack,
        "expected a clear lift from excitation: {mean_wired} vs {mean_iso}"
    );
}

#[test]
fn self_loop_node_matches_the_univariate_mean() {
    let p = params(1.0, 0.5, 1.0);
    let g = UserGraph::new(
        vec![NodeSpec::new("a", 1.0, KernelParams::new(0.5, 1.0).unwrap()).unwrap()],
        vec![(String::from("a"), String::from("a"))],
    )
    .unwrap();
    let expected = p.expected_count(10.0).unwrap();
    let totals: Vec<f64> = (0..3000)
        .map(|i| {
            simulate_network(&g, 10.0, 5000 + i, 0.0, SimMode::Incremental)
                .unwrap()
                .len() as f64
        })
        .collect();
    let stats = summarize(&totals).unwrap();
    assert!(
        (stats.mean - expected).abs() < 4.0 * stats.std_err,
        "self-loop mean {} vs univariate {expected} (se {})",
        stats.mean,
        stats.std_err
    );
}

#[test]
fn strict_and_incremental_modes_agree_in_distribution() {
    let g = UserGraph::new(
        vec![
            NodeSpec::new("a", 1.0, KernelParams::new(0.6, 1.2).unwrap()).unwrap(),
            NodeSpec::new("b", 0.3, KernelParams::new(0.6, 1.2).unwrap()).unwrap(),
        ],
        vec![(String::from("b"), String::from("a"))],
    )
    .unwrap();
    let inc: Vec<f64> = (0..1500)
        .map(|i| {
            simulate_network(&g, 12.0, 7000 + i, 0.0, SimMode::Incremental)
                .unwrap()
                .len() as f64
        })
        .collect();
    let strict: Vec<f64> = (0..1500)
        .map(|i| {
            simulate_network(&g, 12.0, 9000 + i, 0.0, SimMode::Strict)
                .unwrap()
                .len() as f64
        })
        .collect();
    let r = ks_two_sample(&inc, &strict).unwrap();
    assert!(
        r.p_value > 1e-3,
        "modes disagree: D = {}, p = {}",
        r.statistic,
        r.p_value
    );
}
