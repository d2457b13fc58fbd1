//! Follower-graph simulation: one point process per node, coupled through a
//! directed follow graph.
//!
//! Influence flows from followee to follower. When node k publishes at time
//! tau, every node i whose follow set contains k picks up a contribution
//! `alpha_i * exp(-beta_i (t - tau))` evaluated with i's own kernel:
//!
//! ```text
//! lambda_i(t) = I_i + sum over events (tau, k), tau < t, k in follows(i),
//!               of alpha_i * exp(-beta_i (t - tau))
//! ```
//!
//! A node with a self-loop reacts to its own events, so a single
//! self-following node is exactly the univariate process.
//!
//! The simulator steps from event to event. Each node holds a candidate next
//! event drawn by thinning against its own intensity; the earliest candidate
//! is committed, then candidates are refreshed. Incremental mode refreshes
//! only the publisher and its followers, which is sound because an
//! unaffected node's intensity function has not changed and exponential
//! proposals are memoryless; strict mode redraws every node and serves as
//! the reference behaviour. The two modes walk different points of the same
//! distribution.

use crate::process::{KernelParams, ModelError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("duplicate node id {0:?}")]
    DuplicateNodeId(String),
    #[error("node id {0:?} is empty or contains a character the trace format cannot carry")]
    MalformedNodeId(String),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("node {0:?} has no kernel parameters and the file provides no defaults")]
    MissingKernel(String),
    #[error("invalid graph file: {0}")]
    Json(String),
    #[error("histogram bin width must be finite and > 0, got {0}")]
    InvalidBinWidth(f64),
    #[error("prune threshold must be finite and >= 0, got {0}")]
    InvalidPruneThreshold(f64),
    #[error("graph failed validation: {}", format_issues(.issues))]
    ValidationFailed { issues: Vec<GraphIssue> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn format_issues(issues: &[GraphIssue]) -> String {
    issues
        .iter()
        .map(GraphIssue::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// A structural defect in the follow-edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphIssue {
    UnknownFollower { from: String, to: String },
    UnknownFollowee { from: String, to: String },
    DuplicateEdge { from: String, to: String },
}

impl fmt::Display for GraphIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphIssue::UnknownFollower { from, to } => {
                write!(f, "edge ({from:?} -> {to:?}): follower {from:?} is not a node")
            }
            GraphIssue::UnknownFollowee { from, to } => {
                write!(f, "edge ({from:?} -> {to:?}): followee {to:?} is not a node")
            }
            GraphIssue::DuplicateEdge { from, to } => {
                write!(f, "edge ({from:?} -> {to:?}) appears more than once")
            }
        }
    }
}

/// Per-node parameters: id, baseline rate, and the node's own kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    id: String,
    baseline: f64,
    kernel: KernelParams,
}

impl NodeSpec {
    pub fn new(
        id: impl Into<String>,
        baseline: f64,
        kernel: KernelParams,
    ) -> Result<Self, GraphError> {
        let id = id.into();
        if id.is_empty() || id.contains([',', '"', '\n', '\r']) {
            return Err(GraphError::MalformedNodeId(id));
        }
        if !baseline.is_finite() || baseline < 0.0 {
            return Err(GraphError::Model(ModelError::InvalidBaseline(baseline)));
        }
        Ok(Self {
            id,
            baseline,
            kernel,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn kernel(&self) -> KernelParams {
        self.kernel
    }
}

/// A directed follow graph with per-node process parameters.
///
/// Follow pairs are stored follower first: `(a, b)` means a follows b, so
/// b's events drive a's intensity. Structural problems in the edge list
/// (unknown endpoints, duplicate edges) are kept and reported by
/// [`validate_graph`]; duplicate node ids are a type invariant and rejected
/// here.
#[derive(Debug, Clone, PartialEq)]
pub struct UserGraph {
    nodes: Vec<NodeSpec>,
    follows: Vec<(String, String)>,
    index: BTreeMap<String, usize>,
}

#[derive(Deserialize)]
struct GraphFile {
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    beta: Option<f64>,
    nodes: Vec<NodeFile>,
    #[serde(default)]
    follows: Vec<(String, String)>,
}

#[derive(Deserialize)]
struct NodeFile {
    id: String,
    baseline: f64,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    beta: Option<f64>,
}

impl UserGraph {
    pub fn new(nodes: Vec<NodeSpec>, follows: Vec<(String, String)>) -> Result<Self, GraphError> {
        let mut index = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateNodeId(node.id.clone()));
            }
        }
        Ok(Self {
            nodes,
            follows,
            index,
        })
    }

    /// Parse the JSON graph format:
    ///
    /// ```json
    /// {
    ///   "alpha": 0.5, "beta": 1.0,
    ///   "nodes": [{"id": "a", "baseline": 1.0, "alpha": 0.5, "beta": 1.0}],
    ///   "follows": [["a", "b"]]
    /// }
    /// ```
    ///
    /// Top-level `alpha`/`beta` are defaults for nodes that do not carry
    /// their own; `["a", "b"]` means a follows b.
    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        let mut nodes = Vec::with_capacity(file.nodes.len());
        for node in file.nodes {
            let alpha = node
                .alpha
                .or(file.alpha)
                .ok_or_else(|| GraphError::MissingKernel(node.id.clone()))?;
            let beta = node
                .beta
                .or(file.beta)
                .ok_or_else(|| GraphError::MissingKernel(node.id.clone()))?;
            let kernel = KernelParams::new(alpha, beta)?;
            nodes.push(NodeSpec::new(node.id, node.baseline, kernel)?);
        }
        Self::new(nodes, file.follows)
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn follows(&self) -> &[(String, String)] {
        &self.follows
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    fn index_of(&self, id: &str) -> Result<usize, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    // Deduplicated adjacency over well-formed edges: follows[i] holds whom i
    // follows, followers[j] holds who follows j. Both sorted by node index.
    fn follow_lists(&self) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let n = self.nodes.len();
        let mut follows = vec![Vec::new(); n];
        for (from, to) in &self.follows {
            if let (Some(&i), Some(&j)) = (self.index.get(from), self.index.get(to)) {
                follows[i].push(j);
            }
        }
        for list in &mut follows {
            list.sort_unstable();
            list.dedup();
        }
        let mut followers = vec![Vec::new(); n];
        for (i, list) in follows.iter().enumerate() {
            for &j in list {
                followers[j].push(i);
            }
        }
        (follows, followers)
    }
}

/// Validation report. Closure holds by construction (a stored edge cannot
/// reach outside the id space without showing up as an issue); irreducibility
/// means the nodes form one weakly connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphReport {
    pub closed: bool,
    pub irreducible: bool,
    pub issues: Vec<GraphIssue>,
}

pub fn validate_graph(g: &UserGraph) -> GraphReport {
    let mut issues = Vec::new();
    let mut seen = BTreeSet::new();
    for (from, to) in g.follows() {
        let from_known = g.index.contains_key(from);
        let to_known = g.index.contains_key(to);
        if !from_known {
            issues.push(GraphIssue::UnknownFollower {
                from: from.clone(),
                to: to.clone(),
            });
        }
        if !to_known {
            issues.push(GraphIssue::UnknownFollowee {
                from: from.clone(),
                to: to.clone(),
            });
        }
        if from_known && to_known && !seen.insert((from.clone(), to.clone())) {
            issues.push(GraphIssue::DuplicateEdge {
                from: from.clone(),
                to: to.clone(),
            });
        }
    }

    let n = g.nodes.len();
    let irreducible = if n <= 1 {
        true
    } else {
        let mut adj = vec![Vec::new(); n];
        for (from, to) in g.follows() {
            if let (Some(&i), Some(&j)) = (g.index.get(from), g.index.get(to)) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        let mut reached = vec![false; n];
        let mut stack = vec![0];
        reached[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !reached[w] {
                    reached[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    };

    GraphReport {
        closed: true,
        irreducible,
        issues,
    }
}

/// Candidate refresh policy after each committed event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Redraw only the publisher and its followers.
    Incremental,
    /// Redraw every node.
    Strict,
}

/// Events of one network run, ordered by strictly increasing time.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTrace {
    horizon: f64,
    events: Vec<(f64, String)>,
    per_node_counts: BTreeMap<String, u64>,
    tie_resamples: u64,
    pruned_influences: u64,
}

impl NetworkTrace {
    /// Build a trace from raw `(time, node id)` rows, validating order and
    /// window. Counts cover the ids that appear; the simulator's own traces
    /// also carry zero entries for silent nodes.
    pub fn from_events(horizon: f64, events: Vec<(f64, String)>) -> Result<Self, GraphError> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(GraphError::Model(ModelError::InvalidHorizon(horizon)));
        }
        for (i, (t, _)) in events.iter().enumerate() {
            if t.is_nan() || *t < 0.0 || *t > horizon {
                return Err(GraphError::Model(ModelError::EventOutOfRange {
                    index: i,
                    time: *t,
                    horizon,
                }));
            }
            if i > 0 && *t <= events[i - 1].0 {
                return Err(GraphError::Model(ModelError::EventsUnsorted { index: i }));
            }
        }
        let mut per_node_counts = BTreeMap::new();
        for (_, id) in &events {
            *per_node_counts.entry(id.clone()).or_insert(0) += 1;
        }
        Ok(Self {
            horizon,
            events,
            per_node_counts,
            tie_resamples: 0,
            pruned_influences: 0,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[(f64, String)] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Event count per node id, zero entries included for simulator traces.
    pub fn per_node_counts(&self) -> &BTreeMap<String, u64> {
        &self.per_node_counts
    }

    /// Candidate draws that collided with a committed time and were redrawn.
    /// Nonzero only on a floating-point coincidence.
    pub fn tie_resamples(&self) -> u64 {
        self.tie_resamples
    }

    /// Influence entries dropped by the prune threshold over the whole run.
    pub fn pruned_influences(&self) -> u64 {
        self.pruned_influences
    }

    /// CSV export, header `time,node`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "time,node")?;
        for (t, id) in &self.events {
            writeln!(w, "{t},{id}")?;
        }
        Ok(())
    }
}

/// Intensity of node `id` at `t` given a realized trace: baseline plus the
/// node's own kernel over all strictly earlier events of nodes it follows.
pub fn node_intensity(
    g: &UserGraph,
    trace: &NetworkTrace,
    id: &str,
    t: f64,
) -> Result<f64, GraphError> {
    let idx = g.index_of(id)?;
    if t.is_nan() || t < 0.0 || t > trace.horizon() {
        return Err(GraphError::Model(ModelError::TimeOutOfWindow {
            t,
            horizon: trace.horizon(),
        }));
    }
    let node = &g.nodes[idx];
    let followed: BTreeSet<&str> = g
        .follows
        .iter()
        .filter(|(from, _)| from == id)
        .map(|(_, to)| to.as_str())
        .collect();
    let beta = node.kernel.beta();
    let mut acc = 0.0;
    for (tau, k) in trace.events() {
        if *tau >= t {
            break;
        }
        if followed.contains(k.as_str()) {
            acc += (-beta * (t - tau)).exp();
        }
    }
    Ok(node.baseline + node.kernel.alpha() * acc)
}

struct NodeState {
    influences: VecDeque<f64>,
    candidate: Option<f64>,
}

/// Simulate the whole network on `[0, horizon]`.
///
/// Refuses graphs with validation issues. With `prune_eps = 0` the
/// simulation is exact; with a positive threshold, influence entries whose
/// kernel value has decayed below it are dropped at refresh time, which
/// underestimates a node's intensity by at most `prune_eps` times the number
/// of entries pruned from it.
pub fn simulate_network(
    g: &UserGraph,
    horizon: f64,
    seed: u64,
    prune_eps: f64,
    mode: SimMode,
) -> Result<NetworkTrace, GraphError> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(GraphError::Model(ModelError::InvalidHorizon(horizon)));
    }
    if !prune_eps.is_finite() || prune_eps < 0.0 {
        return Err(GraphError::InvalidPruneThreshold(prune_eps));
    }
    let report = validate_graph(g);
    if !report.issues.is_empty() {
        return Err(GraphError::ValidationFailed {
            issues: report.issues,
        });
    }

    let n = g.nodes.len();
    let (follows, followers) = g.follow_lists();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state: Vec<NodeState> = (0..n)
        .map(|_| NodeState {
            influences: VecDeque::new(),
            candidate: None,
        })
        .collect();
    for (node, st) in g.nodes.iter().zip(state.iter_mut()) {
        st.candidate = sample_candidate(&mut rng, node, &st.influences, 0.0, horizon);
    }

    let mut events: Vec<(f64, usize)> = Vec::new();
    let mut counts = vec![0u64; n];
    let mut tie_resamples = 0u64;
    let mut pruned = 0u64;

    loop {
        // Earliest candidate wins; an exact time tie goes to the smaller id.
        let mut best: Option<(f64, usize)> = None;
        for (i, st) in state.iter().enumerate() {
            if let Some(t) = st.candidate {
                let better = match best {
                    None => true,
                    Some((bt, bi)) => t < bt || (t == bt && g.nodes[i].id < g.nodes[bi].id),
                };
                if better {
                    best = Some((t, i));
                }
            }
        }
        let Some((t_star, publisher)) = best else {
            break;
        };

        events.push((t_star, publisher));
        counts[publisher] += 1;

        let refresh: Vec<usize> = match mode {
            SimMode::Strict => (0..n).collect(),
            SimMode::Incremental => {
                let mut r = followers[publisher].clone();
                r.push(publisher);
                r.sort_unstable();
                r.dedup();
                r
            }
        };
        for &i in &refresh {
            if follows[i].binary_search(&publisher).is_ok() {
                state[i].influences.push_back(t_star);
            }
            pruned += prune_influences(&mut state[i].influences, &g.nodes[i], t_star, prune_eps);
            state[i].candidate =
                sample_candidate(&mut rng, &g.nodes[i], &state[i].influences, t_star, horizon);
        }
        // A leftover candidate equal to the committed time would break the
        // strictly increasing trace; redraw it conditioned on being later,
        // which is the exact conditional law by memorylessness.
        for (node, st) in g.nodes.iter().zip(state.iter_mut()) {
            while st.candidate == Some(t_star) {
                tie_resamples += 1;
                st.candidate =
                    sample_candidate(&mut rng, node, &st.influences, t_star, horizon);
            }
        }
    }

    let named: Vec<(f64, String)> = events
        .into_iter()
        .map(|(t, i)| (t, g.nodes[i].id.clone()))
        .collect();
    let mut per_node_counts = BTreeMap::new();
    for (i, node) in g.nodes.iter().enumerate() {
        per_node_counts.insert(node.id.clone(), counts[i]);
    }
    Ok(NetworkTrace {
        horizon,
        events: named,
        per_node_counts,
        tie_resamples,
        pruned_influences: pruned,
    })
}

// Next event of one node after `from`, thinning against the node's intensity
// with the influence list frozen. The intensity only decays until the next
// network event, so its value at `from` (an influence at `from` itself
// included) dominates everything ahead; rejections tighten the bound.
fn sample_candidate(
    rng: &mut ChaCha8Rng,
    node: &NodeSpec,
    influences: &VecDeque<f64>,
    from: f64,
    horizon: f64,
) -> Option<f64> {
    let alpha = node.kernel.alpha();
    let beta = node.kernel.beta();
    let mut decayed: f64 = influences
        .iter()
        .map(|&tau| (-beta * (from - tau)).exp())
        .sum();
    let mut cursor = from;
    let mut bound = node.baseline + alpha * decayed;
    loop {
        if bound <= 0.0 {
            return None;
        }
        let s = cursor + Exp::new(bound).expect("positive bound").sample(rng);
        if s > horizon {
            return None;
        }
        decayed *= (-beta * (s - cursor)).exp();
        let lambda = node.baseline + alpha * decayed;
        if rng.random::<f64>() * bound < lambda {
            return Some(s);
        }
        bound = lambda;
        cursor = s;
    }
}

// Oldest influences have decayed furthest; drop from the front while the
// kernel value at `now` sits below the threshold. Returns how many were
// dropped. A zero threshold never drops anything.
fn prune_influences(
    influences: &mut VecDeque<f64>,
    node: &NodeSpec,
    now: f64,
    eps: f64,
) -> u64 {
    if eps <= 0.0 {
        return 0;
    }
    let alpha = node.kernel.alpha();
    let beta = node.kernel.beta();
    let mut dropped = 0;
    while let Some(&tau) = influences.front() {
        if alpha * (-beta * (now - tau)).exp() < eps {
            influences.pop_front();
            dropped += 1;
        } else {
            break;
        }
    }
    dropped
}

/// Event counts in half-open bins of width `bin_width` covering the window,
/// as `(bin start, count)` rows. An event exactly at the horizon lands in
/// the final bin.
pub fn activity_histogram(
    trace: &NetworkTrace,
    bin_width: f64,
) -> Result<Vec<(f64, u64)>, GraphError> {
    if !bin_width.is_finite() || bin_width <= 0.0 {
        return Err(GraphError::InvalidBinWidth(bin_width));
    }
    let bins = ((trace.horizon() / bin_width).ceil() as usize).max(1);
    let mut counts = vec![0u64; bins];
    for (t, _) in trace.events() {
        let idx = ((t / bin_width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (k as f64 * bin_width, c))
        .collect())
}

/// Per-node degree and activity row.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSummaryRow {
    pub id: String,
    /// How many nodes this node follows.
    pub out_degree: usize,
    /// How many nodes follow this node.
    pub in_degree: usize,
    pub events: u64,
}

/// One row per node, in graph order. The trace must come from this graph;
/// an event by an unknown node is an error.
pub fn node_summary(g: &UserGraph, trace: &NetworkTrace) -> Result<Vec<NodeSummaryRow>, GraphError> {
    for (_, id) in trace.events() {
        if !g.index.contains_key(id) {
            return Err(GraphError::UnknownNode(id.clone()));
        }
    }
    let (follows, followers) = g.follow_lists();
    Ok(g.nodes
        .iter()
        .enumerate()
        .map(|(i, node)| NodeSummaryRow {
            id: node.id.clone(),
            out_degree: follows[i].len(),
            in_degree: followers[i].len(),
            events: trace.per_node_counts().get(&node.id).copied().unwrap_or(0),
        })
        .collect())
}
