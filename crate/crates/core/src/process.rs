//! Univariate self-exciting (Hawkes) process model and closed-form analytics.
//!
//! The conditional intensity is
//!
//! ```text
//! lambda(t) = lambda0 + sum over t_i < t of alpha * exp(-beta * (t - t_i))
//! ```
//!
//! with constant baseline `lambda0 >= 0` and an exponentially decaying
//! excitation kernel with gain `alpha >= 0` and decay `beta > 0`. Every event
//! raises the intensity by `alpha`, so the process feeds on itself; whether it
//! settles down or blows up is decided by the sign of `beta - alpha`.
//!
//! This module holds the parameter and event-sequence types plus the pieces
//! that have closed forms: intensity, compensator, log-likelihood, expected
//! count, and the long-run mean intensity.

use thiserror::Error;

/// Errors from model construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("kernel needs alpha >= 0 and beta > 0, both finite; got alpha={alpha}, beta={beta}")]
    InvalidKernel { alpha: f64, beta: f64 },
    #[error("baseline rate must be finite and >= 0, got {0}")]
    InvalidBaseline(f64),
    #[error("horizon must be finite and > 0, got {0}")]
    InvalidHorizon(f64),
    #[error("event times must be strictly increasing (violated at index {index})")]
    EventsUnsorted { index: usize },
    #[error("event {index} at t={time} lies outside [0, {horizon}]")]
    EventOutOfRange {
        index: usize,
        time: f64,
        horizon: f64,
    },
    #[error("kernel is evaluated at nonnegative elapsed time, got {0}")]
    NegativeElapsed(f64),
    #[error("query time {t} lies outside the observation window [0, {horizon}]")]
    TimeOutOfWindow { t: f64, horizon: f64 },
    #[error("time argument must be >= 0, got {0}")]
    NegativeTime(f64),
    #[error("no stationary limit: needs alpha < beta, got alpha={alpha}, beta={beta}")]
    NoStationaryLimit { alpha: f64, beta: f64 },
    #[error("event {index} at t={time} has zero intensity, the sequence has vanishing density")]
    ZeroIntensityEvent { index: usize, time: f64 },
    #[error("event at t={time} lies beyond the likelihood window [0, {window}]")]
    EventBeyondWindow { time: f64, window: f64 },
}

/// Stability regime, decided by comparing kernel gain to decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `alpha < beta`: the cascade dies out and the process is stationary.
    Subcritical,
    /// `alpha == beta`: boundary case, the expected count grows quadratically.
    Critical,
    /// `alpha > beta`: each event spawns more than one descendant on average.
    Supercritical,
}

impl Regime {
    /// Lowercase label, as emitted by the CLI.
    pub fn label(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }
}

/// Excitation kernel `v(x) = alpha * exp(-beta * x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    alpha: f64,
    beta: f64,
}

impl KernelParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ModelError> {
        if !alpha.is_finite() || !beta.is_finite() || alpha < 0.0 || beta <= 0.0 {
            return Err(ModelError::InvalidKernel { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    pub fn beta(self) -> f64 {
        self.beta
    }

    /// Kernel value at elapsed time `x >= 0`.
    pub fn value(self, x: f64) -> Result<f64, ModelError> {
        if x.is_nan() || x < 0.0 {
            return Err(ModelError::NegativeElapsed(x));
        }
        Ok(self.alpha * (-self.beta * x).exp())
    }

    /// Mean number of direct offspring per event, ignoring horizon truncation.
    pub fn branching_ratio(self) -> f64 {
        self.alpha / self.beta
    }

    /// Regime classification; the comparison is exact, no tolerance band.
    pub fn regime(self) -> Regime {
        if self.alpha < self.beta {
            Regime::Subcritical
        } else if self.alpha == self.beta {
            Regime::Critical
        } else {
            Regime::Supercritical
        }
    }
}

/// Sorted event times on a bounded observation window `[0, horizon]`.
///
/// Times are strictly increasing. A simple point process puts two events at
/// the same instant with probability zero, so a tie in the input is treated
/// as a construction error rather than silently reordered.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    horizon: f64,
    times: Vec<f64>,
}

impl EventSequence {
    pub fn new(horizon: f64, times: Vec<f64>) -> Result<Self, ModelError> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(ModelError::InvalidHorizon(horizon));
        }
        for (i, &t) in times.iter().enumerate() {
            if t.is_nan() || t < 0.0 || t > horizon {
                return Err(ModelError::EventOutOfRange {
                    index: i,
                    time: t,
                    horizon,
                });
            }
            if i > 0 && t <= times[i - 1] {
                return Err(ModelError::EventsUnsorted { index: i });
            }
        }
        Ok(Self { horizon, times })
    }

    pub fn empty(horizon: f64) -> Result<Self, ModelError> {
        Self::new(horizon, Vec::new())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Full parameter set: constant baseline plus excitation kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HawkesParams {
    baseline: f64,
    kernel: KernelParams,
}

impl HawkesParams {
    pub fn new(baseline: f64, kernel: KernelParams) -> Result<Self, ModelError> {
        if !baseline.is_finite() || baseline < 0.0 {
            return Err(ModelError::InvalidBaseline(baseline));
        }
        Ok(Self { baseline, kernel })
    }

    /// Same kernel, different baseline. This is the move the tilted estimator
    /// makes, and it is the only reparameterization whose likelihood ratio
    /// stays free of kernel terms.
    pub fn with_baseline(self, baseline: f64) -> Result<Self, ModelError> {
        Self::new(baseline, self.kernel)
    }

    pub fn baseline(self) -> f64 {
        self.baseline
    }

    pub fn kernel(self) -> KernelParams {
        self.kernel
    }

    /// Conditional intensity at `t` given the realized history. Events at
    /// exactly `t` do not contribute; the excitation sum runs over `t_i < t`.
    pub fn intensity(&self, history: &EventSequence, t: f64) -> Result<f64, ModelError> {
        if t.is_nan() || t < 0.0 || t > history.horizon() {
            return Err(ModelError::TimeOutOfWindow {
                t,
                horizon: history.horizon(),
            });
        }
        let mut acc = 0.0;
        for &ti in history.times() {
            if ti >= t {
                break;
            }
            acc += (-self.kernel.beta * (t - ti)).exp();
        }
        Ok(self.baseline + self.kernel.alpha * acc)
    }

    /// Integrated intensity over `[0, t]`:
    ///
    /// ```text
    /// Lambda(t) = lambda0 * t + sum_i (alpha / beta) * (1 - exp(-beta * (t - t_i)))
    /// ```
    ///
    /// Events at or beyond `t` contribute nothing, their kernel has not
    /// started inside the window.
    pub fn compensator(&self, history: &EventSequence, t: f64) -> Result<f64, ModelError> {
        if t.is_nan() || t < 0.0 {
            return Err(ModelError::NegativeTime(t));
        }
        let mut acc = 0.0;
        for &ti in history.times() {
            if ti >= t {
                break;
            }
            acc += -(-self.kernel.beta * (t - ti)).exp_m1();
        }
        Ok(self.baseline * t + self.kernel.branching_ratio() * acc)
    }

    /// Log-likelihood of an observed sequence over the window `[0, t]`:
    ///
    /// ```text
    /// log L = t - Lambda(t) + sum_i log lambda(t_i)
    /// ```
    ///
    /// where each `lambda(t_i)` is evaluated against the events strictly
    /// before `t_i`. An event sitting at zero intensity makes the density
    /// vanish; that is reported as [`ModelError::ZeroIntensityEvent`] instead
    /// of returning negative infinity.
    pub fn log_likelihood(&self, events: &EventSequence, t: f64) -> Result<f64, ModelError> {
        if t.is_nan() || t < 0.0 {
            return Err(ModelError::NegativeTime(t));
        }
        if let Some(&last) = events.times().last() {
            if last > t {
                return Err(ModelError::EventBeyondWindow {
                    time: last,
                    window: t,
                });
            }
        }
        let mut sum_log = 0.0;
        // Running excitation sum_{j<i} exp(-beta (t_i - t_j)), updated in O(1)
        // per event: decay to the next event time, take the value, add the
        // event's own unit mass.
        let mut excitation = 0.0;
        let mut prev = 0.0;
        for (i, &ti) in events.times().iter().enumerate() {
            excitation *= (-self.kernel.beta * (ti - prev)).exp();
            let lambda = self.baseline + self.kernel.alpha * excitation;
            if lambda <= 0.0 {
                return Err(ModelError::ZeroIntensityEvent { index: i, time: ti });
            }
            sum_log += lambda.ln();
            excitation += 1.0;
            prev = ti;
        }
        Ok(t - self.compensator(events, t)? + sum_log)
    }

    /// Expected event count on `[0, t]` starting from an empty history.
    ///
    /// Piecewise closed form by regime; `exp_m1` keeps the two off-critical
    /// branches stable as `alpha - beta` approaches zero, so the three pieces
    /// agree near the boundary instead of cancelling catastrophically.
    pub fn expected_count(&self, t: f64) -> Result<f64, ModelError> {
        if t.is_nan() || t < 0.0 {
            return Err(ModelError::NegativeTime(t));
        }
        let a = self.kernel.alpha;
        let b = self.kernel.beta;
        let l0 = self.baseline;
        let value = match self.kernel.regime() {
            Regime::Subcritical => {
                let gap = b - a;
                let stationary = b * l0 / gap;
                stationary * t + (l0 - stationary) / gap * -(-gap * t).exp_m1()
            }
            Regime::Critical => 0.5 * b * l0 * t * t + l0 * t,
            Regime::Supercritical => {
                let gap = a - b;
                (b * l0 / (gap * gap) + l0 / gap) * (gap * t).exp_m1() - b * l0 / gap * t
            }
        };
        Ok(value)
    }

    /// Long-run mean intensity `beta * lambda0 / (beta - alpha)`. Exists only
    /// below criticality.
    pub fn limiting_intensity(&self) -> Result<f64, ModelError> {
        match self.kernel.regime() {
            Regime::Subcritical => {
                Ok(self.kernel.beta * self.baseline / (self.kernel.beta - self.kernel.alpha))
            }
            _ => Err(ModelError::NoStationaryLimit {
                alpha: self.kernel.alpha,
                beta: self.kernel.beta,
            }),
        }
    }
}
