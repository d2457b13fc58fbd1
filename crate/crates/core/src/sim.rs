//! Exact samplers for the univariate process on a bounded horizon.
//!
//! Three routes to the same law:
//!
//! * [`simulate_generations`]: draw the baseline events as a homogeneous
//!   Poisson stream, then repeatedly thin a constant-rate proposal stream
//!   against the previous generation's excitation until a generation comes up
//!   empty. Keeps the full generation structure and proposal accounting.
//! * [`simulate_thinning`]: classic sequential thinning. Between events the
//!   intensity only decays, so the intensity just after the current position
//!   dominates everything ahead of it; rejections tighten the bound.
//! * [`simulate_cluster`]: the branching construction. Baseline immigrants
//!   spawn offspring recursively, each brood Poisson-distributed with the
//!   kernel mass remaining before the horizon. No rejection step at all.
//!
//! All three are driven by a ChaCha stream cipher RNG, so a `(config, seed)`
//! pair fixes the output exactly. The generation sampler hands each
//! generation its own counter-derived stream; a trace is therefore stable
//! even though generation sizes vary.

use crate::harness::{derive_trial_seed, run_replications};
use crate::process::{EventSequence, HawkesParams, KernelParams, ModelError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use thiserror::Error;

/// Cap on generations before a run is cut off and flagged.
pub const DEFAULT_MAX_GENERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("simulation horizon must be finite and > 0, got {0}")]
    InvalidHorizon(f64),
    #[error("max_generations must be >= 1")]
    InvalidMaxGenerations,
    #[error("reps must be >= 1")]
    InvalidReps,
    #[error("acceptance ratio is undefined, the run drew no candidates")]
    UndefinedAcceptanceRatio,
    #[error("sweep cell alpha={alpha}, beta={beta} is invalid: {source}")]
    InvalidSweepCell {
        alpha: f64,
        beta: f64,
        source: ModelError,
    },
    #[error("sweep cell alpha={alpha}, beta={beta} produced no run with candidates")]
    EmptySweepCell { alpha: f64, beta: f64 },
}

/// Configuration shared by all three samplers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    params: HawkesParams,
    horizon: f64,
    seed: u64,
    max_generations: usize,
}

impl SimConfig {
    pub fn new(params: HawkesParams, horizon: f64, seed: u64) -> Result<Self, SimError> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(SimError::InvalidHorizon(horizon));
        }
        Ok(Self {
            params,
            horizon,
            seed,
            max_generations: DEFAULT_MAX_GENERATIONS,
        })
    }

    pub fn with_max_generations(mut self, cap: usize) -> Result<Self, SimError> {
        if cap == 0 {
            return Err(SimError::InvalidMaxGenerations);
        }
        self.max_generations = cap;
        Ok(self)
    }

    /// Same setup, different seed. Replication loops lean on this.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }

    /// Same setup, different parameters.
    pub fn with_params(&self, params: HawkesParams) -> Self {
        Self { params, ..*self }
    }

    pub fn params(&self) -> HawkesParams {
        self.params
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_generations(&self) -> usize {
        self.max_generations
    }
}

/// Which of the three samplers to run when only the event times matter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Generations,
    Thinning,
    Cluster,
}

impl SamplerKind {
    pub fn simulate(self, config: &SimConfig) -> EventSequence {
        match self {
            SamplerKind::Generations => simulate_generations(config).into_events(),
            SamplerKind::Thinning => simulate_thinning(config),
            SamplerKind::Cluster => simulate_cluster(config),
        }
    }
}

/// Full output of the generation sampler: the per-generation event lists,
/// proposal accounting, and the merged sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationTrace {
    generations: Vec<Vec<f64>>,
    proposed_count: u64,
    accepted_count: u64,
    merged: EventSequence,
    truncated: bool,
}

impl GenerationTrace {
    /// Event times by generation. The final entry is empty exactly when the
    /// cascade died out on its own rather than hitting the generation cap.
    pub fn generations(&self) -> &[Vec<f64>] {
        &self.generations
    }

    /// Total candidates drawn, generation zero included.
    pub fn proposed_count(&self) -> u64 {
        self.proposed_count
    }

    /// Total candidates kept. Generation-zero candidates are always kept.
    pub fn accepted_count(&self) -> u64 {
        self.accepted_count
    }

    /// All kept events merged into one sorted sequence.
    pub fn merged(&self) -> &EventSequence {
        &self.merged
    }

    pub fn into_events(self) -> EventSequence {
        self.merged
    }

    /// True when the run was cut off at `max_generations`.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// CSV export, header `generation,time`, one row per kept event.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "generation,time")?;
        for (k, gen) in self.generations.iter().enumerate() {
            for &t in gen {
                writeln!(w, "{k},{t}")?;
            }
        }
        Ok(())
    }
}

// One independent ChaCha stream per generation under a single seed.
fn generation_rng(seed: u64, generation: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(generation);
    rng
}

// Homogeneous Poisson stream on (start, end] via exponential gaps.
fn poisson_stream(rng: &mut ChaCha8Rng, rate: f64, start: f64, end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let gaps = Exp::new(rate).expect("positive rate");
    let mut t = start;
    loop {
        t += gaps.sample(rng);
        if t > end {
            return out;
        }
        out.push(t);
    }
}

// Supremum of the parents' excitation over the proposal window. The
// excitation is piecewise decreasing with an upward jump of alpha at each
// parent, so the supremum sits just after one of the parents; scanning the
// decayed running sum with each parent's own jump included finds it.
fn peak_excitation(kernel: KernelParams, parents: &[f64]) -> f64 {
    let mut running = 0.0;
    let mut peak = 0.0_f64;
    let mut prev = f64::NAN;
    for &tau in parents {
        if !prev.is_nan() {
            running *= (-kernel.beta() * (tau - prev)).exp();
        }
        running += 1.0;
        peak = peak.max(running);
        prev = tau;
    }
    kernel.alpha() * peak
}

// Thin sorted proposals against the parents' excitation. One uniform draw per
// proposal, in time order; the decayed parent mass is carried forward instead
// of being recomputed from scratch.
fn thin_generation(
    rng: &mut ChaCha8Rng,
    kernel: KernelParams,
    parents: &[f64],
    proposals: &[f64],
    bound: f64,
) -> Vec<f64> {
    let beta = kernel.beta();
    let mut kept = Vec::new();
    let Some(&first) = proposals.first() else {
        return kept;
    };
    let mut absorbed = 0;
    let mut decayed = 0.0;
    let mut prev = first;
    for &s in proposals {
        decayed *= (-beta * (s - prev)).exp();
        while absorbed < parents.len() && parents[absorbed] < s {
            decayed += (-beta * (s - parents[absorbed])).exp();
            absorbed += 1;
        }
        let excitation = kernel.alpha() * decayed;
        if rng.random::<f64>() * bound < excitation {
            kept.push(s);
        }
        prev = s;
    }
    kept
}

/// Generation-by-generation sampler.
///
/// Generation zero is a homogeneous Poisson stream at the baseline rate.
/// Generation k+1 is proposed at the constant rate that dominates generation
/// k's excitation on `[min(gen k), horizon]` and thinned against that
/// excitation. The run ends when a generation is empty (the empty generation
/// is kept in the trace) or when `max_generations` is reached, in which case
/// the trace is flagged truncated.
pub fn simulate_generations(config: &SimConfig) -> GenerationTrace {
    let params = config.params();
    let kernel = params.kernel();
    let horizon = config.horizon();

    let mut generations: Vec<Vec<f64>> = Vec::new();
    let mut proposed: u64 = 0;

    let mut rng = generation_rng(config.seed(), 0);
    let gen0 = poisson_stream(&mut rng, params.baseline(), 0.0, horizon);
    proposed += gen0.len() as u64;
    generations.push(gen0);

    let mut truncated = false;
    loop {
        if generations.last().expect("nonempty").is_empty() {
            break;
        }
        if generations.len() >= config.max_generations() {
            truncated = true;
            break;
        }
        let k = generations.len() as u64;
        let mut rng = generation_rng(config.seed(), k);
        let parents = generations.last().expect("nonempty");
        let bound = peak_excitation(kernel, parents);
        let proposals = poisson_stream(&mut rng, bound, parents[0], horizon);
        proposed += proposals.len() as u64;
        let next = thin_generation(&mut rng, kernel, parents, &proposals, bound);
        generations.push(next);
    }

    // Merge all generations. An exact float tie across (or within)
    // generations has probability zero but would break the strictly
    // increasing contract, so the later duplicate is discarded, from the
    // trace as well as the merged sequence.
    let mut tagged: Vec<(f64, usize)> = Vec::new();
    for (k, gen) in generations.iter().enumerate() {
        for &t in gen {
            tagged.push((t, k));
        }
    }
    tagged.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut merged = Vec::with_capacity(tagged.len());
    let mut dropped: Vec<(usize, f64)> = Vec::new();
    for &(t, k) in &tagged {
        if merged.last() == Some(&t) {
            dropped.push((k, t));
        } else {
            merged.push(t);
        }
    }
    for (k, t) in dropped {
        let gen = &mut generations[k];
        if let Some(pos) = gen.iter().position(|&x| x == t) {
            gen.remove(pos);
        }
    }

    let accepted = generations.iter().map(|g| g.len() as u64).sum();
    let merged = EventSequence::new(horizon, merged).expect("merged generations are sorted");
    GenerationTrace {
        generations,
        proposed_count: proposed,
        accepted_count: accepted,
        merged,
        truncated,
    }
}

/// Sequential thinning sampler.
///
/// From the current position the intensity only decays until the next event,
/// so its value just after the position is a valid dominating rate. Proposals
/// arrive at that rate; a rejection tightens the bound to the intensity at
/// the rejected point, an acceptance raises it by alpha.
pub fn simulate_thinning(config: &SimConfig) -> EventSequence {
    let params = config.params();
    let kernel = params.kernel();
    let horizon = config.horizon();
    let mut rng = generation_rng(config.seed(), 0);

    let mut times: Vec<f64> = Vec::new();
    // Sum of decayed unit masses of accepted events, valid at `cursor` with
    // an event at `cursor` itself included.
    let mut excitation = 0.0;
    let mut cursor = 0.0;
    let mut bound = params.baseline();
    while bound > 0.0 {
        let s = cursor + Exp::new(bound).expect("positive bound").sample(&mut rng);
        if s > horizon {
            break;
        }
        let decayed = excitation * (-kernel.beta() * (s - cursor)).exp();
        let lambda = params.baseline() + kernel.alpha() * decayed;
        // The duplicate-time guard fires only on a floating-point coincidence;
        // the later duplicate is treated as a rejection.
        if rng.random::<f64>() * bound < lambda && times.last() != Some(&s) {
            times.push(s);
            excitation = decayed + 1.0;
            bound = params.baseline() + kernel.alpha() * excitation;
        } else {
            excitation = decayed;
            bound = lambda;
        }
        cursor = s;
    }
    EventSequence::new(horizon, times).expect("thinning produces a sorted sequence")
}

/// Branching-cluster sampler.
///
/// Baseline immigrants arrive as a homogeneous Poisson stream; every event
/// spawns an independent Poisson brood placed by inverting the truncated
/// kernel CDF. Exact on the bounded horizon, with no rejection step.
pub fn simulate_cluster(config: &SimConfig) -> EventSequence {
    let params = config.params();
    let kernel = params.kernel();
    let horizon = config.horizon();
    let mut rng = generation_rng(config.seed(), 0);

    let immigrants = poisson_stream(&mut rng, params.baseline(), 0.0, horizon);
    let mut events = immigrants.clone();
    // Depth-first over the branching tree; the stack fixes the traversal
    // order, so the seed pins the whole draw sequence.
    let mut pending = immigrants;
    while let Some(tau) = pending.pop() {
        let before = events.len();
        spawn_children(&mut rng, kernel, tau, horizon, &mut events);
        pending.extend_from_slice(&events[before..]);
    }
    events.sort_by(f64::total_cmp);
    events.dedup();
    EventSequence::new(horizon, events).expect("cluster sampler produces a sorted sequence")
}

// Direct offspring of an event at `tau`, appended to `out`. The brood size is
// Poisson with the kernel mass left before the horizon,
// (alpha/beta) (1 - exp(-beta (T - tau))), and each child sits at tau + s
// with s drawn by inverting the truncated kernel CDF.
fn spawn_children(
    rng: &mut ChaCha8Rng,
    kernel: KernelParams,
    tau: f64,
    horizon: f64,
    out: &mut Vec<f64>,
) {
    let beta = kernel.beta();
    let tail = -(-beta * (horizon - tau)).exp_m1();
    let mean = kernel.branching_ratio() * tail;
    if mean <= 0.0 {
        return;
    }
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
    for _ in 0..count {
        let u: f64 = rng.random();
        let child = tau - (1.0 - u * tail).ln() / beta;
        if child <= horizon {
            out.push(child);
        }
    }
}

/// Fraction of drawn candidates that were kept, over the whole trace.
///
/// Generation-zero candidates arrive at exactly the baseline rate and are all
/// kept, so a pure-baseline run has ratio one. A run that drew no candidates
/// at all has no ratio.
pub fn acceptance_ratio(trace: &GenerationTrace) -> Result<f64, SimError> {
    if trace.proposed_count == 0 {
        return Err(SimError::UndefinedAcceptanceRatio);
    }
    Ok(trace.accepted_count as f64 / trace.proposed_count as f64)
}

/// Mean acceptance ratio of the generation sampler over a parameter grid.
///
/// Entry `(i, j)` covers `(alphas[i], betas[j])` with the baseline, horizon
/// and generation cap taken from `base`. Every cell gets `reps` runs seeded
/// from `base.seed()` through the trial-seed mix, so the same call is
/// reproducible cell by cell. The whole grid is validated before any
/// simulation runs. Runs whose generation zero came up empty have no ratio
/// and are left out of the cell mean.
pub fn efficiency_sweep(
    alphas: &[f64],
    betas: &[f64],
    base: &SimConfig,
    reps: usize,
    parallelism: usize,
) -> Result<Vec<Vec<f64>>, SimError> {
    if reps == 0 {
        return Err(SimError::InvalidReps);
    }
    let mut kernels = Vec::with_capacity(alphas.len() * betas.len());
    for &a in alphas {
        for &b in betas {
            let kernel = KernelParams::new(a, b).map_err(|source| SimError::InvalidSweepCell {
                alpha: a,
                beta: b,
                source,
            })?;
            kernels.push(kernel);
        }
    }

    let mut matrix = Vec::with_capacity(alphas.len());
    for i in 0..alphas.len() {
        let mut row = Vec::with_capacity(betas.len());
        for j in 0..betas.len() {
            let flat = i * betas.len() + j;
            let kernel = kernels[flat];
            let cell_params = HawkesParams::new(base.params().baseline(), kernel)
                .expect("baseline was validated with the base config");
            let cell = base.with_params(cell_params);
            let cell_seed = derive_trial_seed(base.seed(), flat as u64);
            let ratios: Vec<Option<f64>> = run_replications(
                |seed| acceptance_ratio(&simulate_generations(&cell.reseeded(seed))).ok(),
                reps,
                cell_seed,
                parallelism,
            );
            let defined: Vec<f64> = ratios.into_iter().flatten().collect();
            if defined.is_empty() {
                return Err(SimError::EmptySweepCell {
                    alpha: kernel.alpha(),
                    beta: kernel.beta(),
                });
            }
            row.push(defined.iter().sum::<f64>() / defined.len() as f64);
        }
        matrix.push(row);
    }
    Ok(matrix)
}
