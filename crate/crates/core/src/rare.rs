//! Tail probability estimation for the event count, by naive replication and
//! by importance sampling with a tilted baseline.
//!
//! The target is `P(N_T > c)` for a threshold `c` far above the mean, where
//! hitting the event by brute force is hopeless. The tilt keeps the kernel
//! and scales only the baseline to `c * lambda0 / E[N_T]`; the expected count
//! is linear in the baseline, so the tilted process crosses the threshold
//! routinely. Each tilted path is reweighted by the likelihood ratio between
//! the original and tilted measures, which collapses to
//!
//! ```text
//! log w = T * (tilted_lambda0 - lambda0)
//!       + sum_i log(lambda(t_i; lambda0) / lambda(t_i; tilted_lambda0))
//! ```
//!
//! because the two processes share every kernel term. Weights live in log
//! space and are only exponentiated after shifting by their maximum.

use crate::harness::{derive_trial_seed, run_replications};
use crate::process::{EventSequence, HawkesParams, ModelError};
use crate::sim::{SamplerKind, SimConfig};
use thiserror::Error;

/// Signed 32-bit id limit, the count threshold at which a tweet counter
/// famously rolled over. The default threshold for tail estimation; any other
/// value can be passed instead.
pub const TWITPOCALYPSE_THRESHOLD: u64 = 2_147_483_647;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RareError {
    #[error("estimation horizon must be finite and > 0, got {0}")]
    InvalidHorizon(f64),
    #[error("trial count must be >= 1")]
    InvalidTrials,
    #[error("cannot tilt: the expected count vanishes for these parameters")]
    ZeroExpectedCount,
    #[error("weights are defined only for parameter pairs sharing a kernel")]
    KernelMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What to estimate: the probability that the count on `[0, horizon]`
/// exceeds `threshold`, from `trials` simulated paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RareEventSpec {
    threshold: u64,
    horizon: f64,
    trials: usize,
    sampler: SamplerKind,
}

impl RareEventSpec {
    pub fn new(threshold: u64, horizon: f64, trials: usize) -> Result<Self, RareError> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(RareError::InvalidHorizon(horizon));
        }
        if trials == 0 {
            return Err(RareError::InvalidTrials);
        }
        Ok(Self {
            threshold,
            horizon,
            trials,
            sampler: SamplerKind::Thinning,
        })
    }

    /// Swap the backing sampler. The estimate's law does not depend on the
    /// choice; thinning is the default because it is the fastest.
    pub fn with_sampler(mut self, sampler: SamplerKind) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn sampler(&self) -> SamplerKind {
        self.sampler
    }
}

/// Importance-sampled tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub p_hat: f64,
    /// Sample standard error of the weighted indicator, misses counted as
    /// zero-weight trials.
    pub std_err: f64,
    /// Effective sample size `(sum w)^2 / sum w^2` over the weights; zero
    /// when no trial crossed the threshold.
    pub ess: f64,
    pub tilted_baseline: f64,
    /// Fraction of tilted trials that crossed the threshold.
    pub hit_fraction: f64,
}

/// Plain Monte Carlo tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveEstimate {
    pub p_hat: f64,
    /// Binomial standard error `sqrt(p (1 - p) / m)`.
    pub std_err: f64,
    pub hits: u64,
}

/// Baseline of the tilted process, `threshold * lambda0 / E[N_horizon]`.
///
/// Steers the tilted mean count onto the threshold. Useful only when the
/// threshold is positive and at least on the order of the expected count; a
/// zero threshold would tilt the baseline to zero and sample nothing.
pub fn tilt_baseline(params: &HawkesParams, threshold: u64, t: f64) -> Result<f64, RareError> {
    if t.is_nan() || t < 0.0 {
        return Err(RareError::Model(ModelError::NegativeTime(t)));
    }
    let expected = params.expected_count(t)?;
    if expected <= 0.0 {
        return Err(RareError::ZeroExpectedCount);
    }
    Ok(threshold as f64 * params.baseline() / expected)
}

/// Log likelihood ratio of `events` between the original and tilted measures,
/// `log(L(events; params) / L(events; tilted))`.
///
/// Both parameter sets must share a kernel; only then do the kernel terms of
/// the two likelihoods cancel and the ratio depend on the baselines alone.
/// An event that one of the measures cannot produce drives the ratio to the
/// appropriate infinite limit instead of erroring.
pub fn log_weight(
    params: &HawkesParams,
    tilted: &HawkesParams,
    events: &EventSequence,
    t: f64,
) -> Result<f64, RareError> {
    if params.kernel() != tilted.kernel() {
        return Err(RareError::KernelMismatch);
    }
    if t.is_nan() || t < 0.0 {
        return Err(RareError::Model(ModelError::NegativeTime(t)));
    }
    if let Some(&last) = events.times().last() {
        if last > t {
            return Err(RareError::Model(ModelError::EventBeyondWindow {
                time: last,
                window: t,
            }));
        }
    }
    let kernel = params.kernel();
    let mut log_ratio_sum = 0.0;
    let mut excitation = 0.0;
    let mut prev = 0.0;
    for &ti in events.times() {
        excitation *= (-kernel.beta() * (ti - prev)).exp();
        let drive = kernel.alpha() * excitation;
        log_ratio_sum += (params.baseline() + drive).ln() - (tilted.baseline() + drive).ln();
        excitation += 1.0;
        prev = ti;
    }
    Ok(t * (tilted.baseline() - params.baseline()) + log_ratio_sum)
}

/// Importance-sampled estimate of `P(N_horizon > threshold)`.
///
/// Simulates under the tilted baseline, scores each path that crosses the
/// threshold with its likelihood-ratio weight, and averages over all trials.
/// Trial `i` is seeded with `derive_trial_seed(seed, i)`, so the result is
/// identical for any `parallelism`.
pub fn estimate_is(
    spec: &RareEventSpec,
    params: &HawkesParams,
    seed: u64,
    parallelism: usize,
) -> Result<TailEstimate, RareError> {
    let tilted_baseline = tilt_baseline(params, spec.threshold, spec.horizon)?;
    let tilted = params.with_baseline(tilted_baseline)?;
    let base_config =
        SimConfig::new(tilted, spec.horizon, 0).expect("RareEventSpec::new validated the horizon");
    let sampler = spec.sampler;
    let threshold = spec.threshold;
    let horizon = spec.horizon;
    let original = *params;

    let log_weights: Vec<Option<f64>> = run_replications(
        |trial_seed| {
            let events = sampler.simulate(&base_config.reseeded(trial_seed));
            if (events.len() as u64) > threshold {
                Some(
                    log_weight(&original, &tilted, &events, horizon)
                        .expect("simulated events share kernel and window"),
                )
            } else {
                None
            }
        },
        spec.trials,
        seed,
        parallelism,
    );

    let m = spec.trials as f64;
    let hits = log_weights.iter().flatten().count();
    let hit_fraction = hits as f64 / m;
    if hits == 0 {
        return Ok(TailEstimate {
            p_hat: 0.0,
            std_err: 0.0,
            ess: 0.0,
            tilted_baseline,
            hit_fraction,
        });
    }

    // Max-shift before exponentiating; at large tilts the raw weights
    // underflow long before the estimate does.
    let shift = log_weights
        .iter()
        .flatten()
        .fold(f64::NEG_INFINITY, |acc, &w| acc.max(w));
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for lw in log_weights.iter().flatten() {
        let w = (lw - shift).exp();
        sum += w;
        sum_sq += w * w;
    }
    let scale = shift.exp();
    let p_hat = scale * (sum / m);
    let variance = if spec.trials == 1 {
        0.0
    } else {
        scale * scale * (sum_sq - sum * sum / m).max(0.0) / (m - 1.0)
    };
    Ok(TailEstimate {
        p_hat,
        std_err: (variance / m).sqrt(),
        ess: sum * sum / sum_sq,
        tilted_baseline,
        hit_fraction,
    })
}

/// Plain Monte Carlo estimate of `P(N_horizon > threshold)` under the
/// original parameters. Shares the trial-seed derivation with
/// [`estimate_is`], so an identity tilt reproduces these runs exactly.
pub fn estimate_naive(
    spec: &RareEventSpec,
    params: &HawkesParams,
    seed: u64,
    parallelism: usize,
) -> Result<NaiveEstimate, RareError> {
    let base_config =
        SimConfig::new(*params, spec.horizon, 0).expect("RareEventSpec::new validated the horizon");
    let sampler = spec.sampler;
    let threshold = spec.threshold;
    let outcomes: Vec<bool> = run_replications(
        |trial_seed| (sampler.simulate(&base_config.reseeded(trial_seed)).len() as u64) > threshold,
        spec.trials,
        seed,
        parallelism,
    );
    let hits = outcomes.iter().filter(|&&h| h).count() as u64;
    let m = spec.trials as f64;
    let p_hat = hits as f64 / m;
    Ok(NaiveEstimate {
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / m).sqrt(),
        hits,
    })
}

/// One sweep row per threshold, each with its own tilt and seed block. A row
/// whose tilt fails carries the error; the sweep itself keeps going.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub threshold: u64,
    pub outcome: Result<TailEstimate, RareError>,
}

pub fn threshold_sweep(
    params: &HawkesParams,
    thresholds: &[u64],
    horizon: f64,
    trials: usize,
    seed: u64,
    parallelism: usize,
) -> Result<Vec<SweepRow>, RareError> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(RareError::InvalidHorizon(horizon));
    }
    if trials == 0 {
        return Err(RareError::InvalidTrials);
    }
    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(i, &threshold)| {
            let spec = RareEventSpec::new(threshold, horizon, trials).expect("validated above");
            let row_seed = derive_trial_seed(seed, i as u64);
            SweepRow {
                threshold,
                outcome: estimate_is(&spec, params, row_seed, parallelism),
            }
        })
        .collect())
}

/// CSV export, header `threshold,p_hat,std_err,ess,tilted_lambda0`. Failed
/// rows are skipped; the caller decides how to surface their errors.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "threshold,p_hat,std_err,ess,tilted_lambda0")?;
    for row in rows {
        if let Ok(est) = &row.outcome {
            writeln!(
                w,
                "{},{},{},{},{}",
                row.threshold, est.p_hat, est.std_err, est.ess, est.tilted_baseline
            )?;
        }
    }
    Ok(())
}
