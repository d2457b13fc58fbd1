//! Self-exciting point process toolkit.
//!
//! The model throughout is the exponential-kernel self-exciting process: a
//! baseline rate plus a jump of `alpha` at every past event, decaying at
//! rate `beta`. The crate splits into:
//!
//! - [`process`]: parameters, closed-form intensity, compensator,
//!   log-likelihood, and expected counts across the three regimes.
//! - [`sim`]: three exact samplers (generation peeling, thinning, cluster)
//!   plus the generation-structure sweep.
//! - [`rare`]: importance-sampled tail probabilities for event-count
//!   overflow thresholds.
//! - [`graph`]: coupled processes on a follower graph.
//! - [`harness`]: seed derivation, replication running, summaries, and the
//!   two-sample distribution check used to compare samplers.
//!
//! All randomness is ChaCha-based and fully determined by explicit `u64`
//! seeds; every simulation entry point is reproducible run-to-run and
//! across thread counts.

pub mod graph;
pub mod harness;
pub mod process;
pub mod rare;
pub mod sim;

pub use graph::{
    activity_histogram, node_intensity, node_summary, simulate_network, validate_graph,
    GraphError, GraphIssue, GraphReport, NetworkTrace, NodeSpec, NodeSummaryRow, SimMode,
    UserGraph,
};
pub use harness::{
    derive_trial_seed, ks_two_sample, run_replications, summarize, HarnessError, KsResult,
    SummaryStats,
};
pub use process::{
    EventSequence, HawkesParams, KernelParams, ModelError, Regime,
};
pub use rare::{
    estimate_is, estimate_naive, log_weight, threshold_sweep, tilt_baseline, write_sweep_csv,
    NaiveEstimate, RareError, RareEventSpec, SweepRow, TailEstimate, TWITPOCALYPSE_THRESHOLD,
};
pub use sim::{
    acceptance_ratio, efficiency_sweep, GenerationTrace, SamplerKind, SimConfig, SimError,
    DEFAULT_MAX_GENERATIONS,
};
