//! Command-line surface for the process toolkit. Every randomized command
//! takes an explicit --seed and writes the same bytes for the same seed, at
//! any worker count.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use hawkes_core::graph::{
    activity_histogram, node_summary, simulate_network, SimMode, UserGraph,
};
use hawkes_core::process::{EventSequence, HawkesParams, KernelParams};
use hawkes_core::rare::{estimate_is, estimate_naive, RareEventSpec};
use hawkes_core::sim::{simulate_generations, SamplerKind, SimConfig};

#[derive(Parser)]
#[command(
    name = "hawkes",
    version,
    about = "Simulate, fit, and probe self-exciting event streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Baseline event rate.
    #[arg(long)]
    lambda0: f64,
    /// Kernel jump size per event.
    #[arg(long)]
    alpha: f64,
    /// Kernel decay rate.
    #[arg(long)]
    beta: f64,
    /// End of the observation window.
    #[arg(long)]
    horizon: f64,
}

impl ModelArgs {
    fn params(&self) -> Result<HawkesParams> {
        Ok(HawkesParams::new(
            self.lambda0,
            KernelParams::new(self.alpha, self.beta)?,
        )?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Generations,
    Thinning,
    Cluster,
}

impl Method {
    fn kind(self) -> SamplerKind {
        match self {
            Method::Generations => SamplerKind::Generations,
            Method::Thinning => SamplerKind::Thinning,
            Method::Cluster => SamplerKind::Cluster,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Incremental,
    Strict,
}

impl From<ModeArg> for SimMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Incremental => SimMode::Incremental,
            ModeArg::Strict => SimMode::Strict,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw one event sequence and write it as CSV (header `time`).
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Method::Generations)]
        method: Method,
        /// Per-generation bookkeeping CSV; generations method only.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Event CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print closed-form moments as one JSON object.
    Moments {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Log-likelihood of an event CSV over the window.
    Loglik {
        #[command(flatten)]
        model: ModelArgs,
        /// Event times, one per line; a leading `time` header is allowed.
        #[arg(long)]
        events: PathBuf,
    },
    /// Probability that the event count exceeds a threshold.
    RareEvent {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        threshold: u64,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Plain hit counting instead of the tilted estimator.
        #[arg(long)]
        naive: bool,
        /// Result CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; results are identical at any setting.
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
    },
    /// Mean generation-sampler acceptance ratio over a kernel grid.
    Sweep {
        #[arg(long)]
        lambda0: f64,
        /// Comma-separated jump sizes, one per grid row.
        #[arg(long, value_delimiter = ',')]
        alpha_list: Vec<f64>,
        /// Comma-separated decay rates, one per grid column.
        #[arg(long, value_delimiter = ',')]
        beta_list: Vec<f64>,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; results are identical at any setting.
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
    },
    /// Simulate every node of a follower graph.
    GraphSim {
        /// Graph description JSON.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Incremental)]
        mode: ModeArg,
        /// Drop influences once their contribution decays below this; 0 is exact.
        #[arg(long, default_value_t = 0.0)]
        prune_eps: f64,
        /// Trace CSV destination (header `time,node`); stdout when no other
        /// output is requested.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print an activity histogram with this bin width to stdout.
        #[arg(long)]
        hist_width: Option<f64>,
        /// Per-node degree/count summary CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct MomentsOut {
    expected_count: f64,
    limiting_intensity: Option<f64>,
    regime: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            model,
            seed,
            method,
            trace,
            out,
        } => {
            if trace.is_some() && method != Method::Generations {
                bail!("--trace is only produced by the generations method");
            }
            let config = SimConfig::new(model.params()?, model.horizon, seed)?;
            let events = if method == Method::Generations {
                let generations = simulate_generations(&config);
                if let Some(path) = &trace {
                    let mut file = create(path)?;
                    generations
                        .write_csv(&mut file)
                        .with_context(|| format!("writing {}", path.display()))?;
                }
                generations.into_events()
            } else {
                method.kind().simulate(&config)
            };
            let mut text = String::from("time\n");
            for t in events.times() {
                text.push_str(&format!("{t}\n"));
            }
            write_text(out.as_deref(), &text)
        }
        Command::Moments { model } => {
            let params = model.params()?;
            let report = MomentsOut {
                expected_count: params.expected_count(model.horizon)?,
                limiting_intensity: params.limiting_intensity().ok(),
                regime: params.kernel().regime().label().to_string(),
            };
            println!("{}", serde_json::to_string(&report)?);
            Ok(())
        }
        Command::Loglik { model, events } => {
            let params = model.params()?;
            let times = read_events_csv(&events)?;
            let sequence = EventSequence::new(model.horizon, times)?;
            let value = params.log_likelihood(&sequence, model.horizon)?;
            println!("{value}");
            Ok(())
        }
        Command::RareEvent {
            model,
            threshold,
            trials,
            seed,
            naive,
            out,
            parallelism,
        } => {
            let params = model.params()?;
            let spec = RareEventSpec::new(threshold, model.horizon, trials)?;
            let (p_hat, std_err, ess, tilted_lambda0) = if naive {
                let est = estimate_naive(&spec, &params, seed, parallelism)?;
                (est.p_hat, est.std_err, est.hits as f64, params.baseline())
            } else {
                let est = estimate_is(&spec, &params, seed, parallelism)?;
                (est.p_hat, est.std_err, est.ess, est.tilted_baseline)
            };
            let text = format!(
                "threshold,p_hat,std_err,ess,tilted_lambda0\n{threshold},{p_hat},{std_err},{ess},{tilted_lambda0}\n"
            );
            write_text(out.as_deref(), &text)
        }
        Command::Sweep {
            lambda0,
            alpha_list,
            beta_list,
            horizon,
            reps,
            seed,
            out,
            parallelism,
        } => {
            if alpha_list.is_empty() || beta_list.is_empty() {
                bail!("--alpha-list and --beta-list must each name at least one value");
            }
            // The base config only carries baseline, horizon, and seed; each
            // cell swaps in its own kernel.
            let base_params = HawkesParams::new(lambda0, KernelParams::new(0.0, 1.0)?)?;
            let base = SimConfig::new(base_params, horizon, seed)?;
            let grid =
                hawkes_core::sim::efficiency_sweep(&alpha_list, &beta_list, &base, reps, parallelism)?;
            let mut text = String::from("alpha,beta,mean_acceptance_ratio\n");
            for (i, &alpha) in alpha_list.iter().enumerate() {
                for (j, &beta) in beta_list.iter().enumerate() {
                    text.push_str(&format!("{alpha},{beta},{}\n", grid[i][j]));
                }
            }
            fs::write(&out, text).with_context(|| format!("writing {}", out.display()))
        }
        Command::GraphSim {
            graph,
            horizon,
            seed,
            mode,
            prune_eps,
            out,
            hist_width,
            summary,
        } => {
            let text = fs::read_to_string(&graph)
                .with_context(|| format!("reading {}", graph.display()))?;
            let user_graph = UserGraph::from_json_str(&text)?;
            let trace = simulate_network(&user_graph, horizon, seed, prune_eps, mode.into())?;
            if let Some(path) = &out {
                let mut file = create(path)?;
                trace
                    .write_csv(&mut file)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = &summary {
                let rows = node_summary(&user_graph, &trace)?;
                let mut text = String::from("id,out_degree,in_degree,events\n");
                for row in rows {
                    text.push_str(&format!(
                        "{},{},{},{}\n",
                        row.id, row.out_degree, row.in_degree, row.events
                    ));
                }
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(width) = hist_width {
                let mut text = String::from("bin_start,count\n");
                for (start, count) in activity_histogram(&trace, width)? {
                    text.push_str(&format!("{start},{count}\n"));
                }
                print!("{text}");
            } else if out.is_none() {
                let mut buf = Vec::new();
                trace.write_csv(&mut buf).expect("writing to memory");
                print!("{}", String::from_utf8(buf).expect("trace CSV is UTF-8"));
            }
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_events_csv(path: &Path) -> Result<Vec<f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut times = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.eq_ignore_ascii_case("time") {
            continue;
        }
        let t: f64 = line.parse().with_context(|| {
            format!("{}:{}: expected an event time, got {line:?}", path.display(), lineno + 1)
        })?;
        times.push(t);
    }
    Ok(times)
}
