//! `mediasched` command-line front end: solve, simulate, compare and
//! inspect priority graphs.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mediasched::dump::{dump_exhaustive, dump_policy};
use mediasched::oracle::{solve_exhaustive, MAX_EXHAUSTIVE_PACKETS};
use mediasched::priority::{build_state_tree, disconnection_degree, PriorityRelation};
use mediasched::scenario;
use mediasched::sim::{
    baseline_constant_channel, baseline_distortion_greedy, baseline_myopic, baseline_oracle,
    monte_carlo, Scheduler, SimReport, SimSetup,
};
use mediasched::{
    load_channel, load_trace, solve, solve_single, ChannelModel, CostModel, MediaTrace, PacketSet,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "mediasched",
    version,
    about = "Delay-sensitive packet scheduling over Markov channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scheduling problem and write the policy dump as JSON.
    Solve(SolveArgs),
    /// Run one policy over Monte Carlo episodes and write per-episode CSV.
    Simulate(SimulateArgs),
    /// Run every policy on the same episodes and write one summary row each.
    Compare(CompareArgs),
    /// Write the priority graph and state tree of a trace as DOT files.
    InspectGraph(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Linear,
    Convex,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    /// Threshold decomposition or travelling state tree, picked by problem type.
    Proposed,
    /// Exhaustive dynamic program over every state and action.
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// The joint multi-packet problem.
    Joint,
    /// Per-packet threshold policies only, ignoring interactions.
    Single,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Proposed,
    Myopic,
    Greedy,
    Constant,
    Oracle,
}

impl PolicyArg {
    fn name(self) -> &'static str {
        match self {
            PolicyArg::Proposed => "proposed",
            PolicyArg::Myopic => "myopic",
            PolicyArg::Greedy => "greedy",
            PolicyArg::Constant => "constant",
            PolicyArg::Oracle => "oracle",
        }
    }
}

/// Problem inputs: either a built-in scenario or trace and channel files.
#[derive(Args)]
struct ProblemArgs {
    /// Built-in scenario (volatile, standard); replaces --trace and --channel.
    #[arg(long, conflicts_with_all = ["trace", "channel"])]
    scenario: Option<String>,
    /// Packet trace JSON.
    #[arg(long, required_unless_present = "scenario")]
    trace: Option<PathBuf>,
    /// Channel model JSON.
    #[arg(long, required_unless_present = "scenario")]
    channel: Option<PathBuf>,
    /// Transmission cost (default linear, or the scenario's).
    #[arg(long, value_enum)]
    cost: Option<CostArg>,
    /// Slot duration used by the convex cost.
    #[arg(long, default_value_t = 1.0)]
    slot_duration: f64,
    /// Discount factor in [0, 1] (default 0.95, or the scenario's).
    #[arg(long)]
    alpha: Option<f64>,
    /// Cost weight, positive (default 1, or the scenario's).
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = Engine::Proposed)]
    engine: Engine,
    #[arg(long, value_enum, default_value_t = Mode::Joint)]
    mode: Mode,
    /// Policy dump path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-slot complexity CSV path.
    #[arg(long)]
    complexity_out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Number of episodes.
    #[arg(long, default_value_t = 1000)]
    episodes: usize,
    /// Per-packet loss probability in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    loss_rate: f64,
    /// Seed for channel paths and losses.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = PolicyArg::Proposed)]
    policy: PolicyArg,
    #[command(flatten)]
    run: RunArgs,
    /// Per-episode CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mean/stddev summary CSV path.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Summary CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// Packet trace JSON.
    #[arg(long)]
    trace: PathBuf,
    /// Restrict to packets live at this slot (all packets if omitted).
    #[arg(long)]
    slot: Option<usize>,
    /// Directory for priority_graph.dot and state_tree.dot.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// Bad input from the user; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

struct Problem {
    trace: MediaTrace,
    channel: ChannelModel,
    cost: CostModel,
    alpha: f64,
    lambda: f64,
}

fn open(path: &Path, what: &str) -> Result<File> {
    File::open(path)
        .map_err(|e| Usage(format!("cannot open {what} {}: {e}", path.display())).into())
}

fn read_trace(path: &Path) -> Result<MediaTrace> {
    load_trace(open(path, "trace")?).with_context(|| format!("in trace {}", path.display()))
}

impl ProblemArgs {
    fn load(&self) -> Result<Problem> {
        let mut p = match &self.scenario {
            Some(name) => {
                let sc = scenario::by_name(name).ok_or_else(|| {
                    Usage(format!(
                        "unknown scenario `{name}` (known: {})",
                        scenario::NAMES.join(", ")
                    ))
                })??;
                Problem {
                    trace: sc.trace,
                    channel: sc.channel,
                    cost: sc.cost,
                    alpha: sc.alpha,
                    lambda: sc.lambda,
                }
            }
            None => {
                let (trace, channel) =
                    (self.trace.as_ref().unwrap(), self.channel.as_ref().unwrap());
                Problem {
                    trace: read_trace(trace)?,
                    channel: load_channel(open(channel, "channel")?)
                        .with_context(|| format!("in channel {}", channel.display()))?,
                    cost: CostModel::linear(),
                    alpha: 0.95,
                    lambda: 1.0,
                }
            }
        };
        match self.cost {
            Some(CostArg::Linear) => p.cost = CostModel::linear(),
            Some(CostArg::Convex) => p.cost = CostModel::convex(self.slot_duration)?,
            None => {}
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                bail!(Usage(format!("--alpha {a} must lie in [0, 1]")));
            }
            p.alpha = a;
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l > 0.0) {
                bail!(Usage(format!("--lambda {l} must be positive")));
            }
            p.lambda = l;
        }
        Ok(p)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = output(path)?;
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let p = args.problem.load()?;
    if args.complexity_out.is_some()
        && !matches!((args.engine, args.mode), (Engine::Proposed, Mode::Joint))
    {
        bail!(Usage(
            "--complexity-out needs --engine proposed --mode joint".into()
        ));
    }
    let text = match (args.engine, args.mode) {
        (Engine::Oracle, Mode::Single) => bail!(Usage(
            "--mode single only exists for --engine proposed".into()
        )),
        (Engine::Oracle, Mode::Joint) => {
            if p.trace.len() > MAX_EXHAUSTIVE_PACKETS {
                bail!(Usage(format!(
                    "the oracle engine handles at most {MAX_EXHAUSTIVE_PACKETS} packets, trace has {}",
                    p.trace.len()
                )));
            }
            let sol = solve_exhaustive(&p.trace, &p.channel, &p.cost, p.alpha, p.lambda)?;
            dump_exhaustive(&sol, &p.trace, p.alpha, p.lambda).to_json()
        }
        (Engine::Proposed, Mode::Single) => {
            let packets = p
                .trace
                .packets()
                .iter()
                .map(|pk| {
                    let s = solve_single(pk, &p.channel, &p.cost, p.alpha, p.lambda)?;
                    Ok(json!({
                        "id": pk.id,
                        "initial_value": s.initial_value(&p.channel),
                        "net_reward": s.net_reward,
                        "thresholds": s.thresholds,
                        "values": s.values,
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            serde_json::to_string_pretty(&json!({
                "engine": "single",
                "alpha": p.alpha,
                "lambda": p.lambda,
                "packets": packets,
            }))?
        }
        (Engine::Proposed, Mode::Joint) => {
            let policy = solve(&p.trace, &p.channel, &p.cost, p.alpha, p.lambda)?;
            if let Some(path) = &args.complexity_out {
                let mut w = csv::Writer::from_path(path)
                    .with_context(|| format!("creating {}", path.display()))?;
                match &policy.complexity {
                    Some(report) => {
                        for row in &report.slots {
                            w.serialize(row)?;
                        }
                    }
                    None => {
                        eprintln!("decomposed policy: no joint tables, complexity CSV left empty")
                    }
                }
                w.flush()?;
            }
            dump_policy(&policy)?.to_json()
        }
    };
    write_text(args.out.as_deref(), &text)
}

fn build_policy(p: &Problem, which: PolicyArg) -> Result<Box<dyn Scheduler>> {
    Ok(match which {
        PolicyArg::Proposed => Box::new(solve(&p.trace, &p.channel, &p.cost, p.alpha, p.lambda)?),
        PolicyArg::Myopic => Box::new(baseline_myopic(&p.trace, &p.channel, &p.cost, p.lambda)?),
        PolicyArg::Greedy => Box::new(baseline_distortion_greedy(
            &p.trace, &p.channel, &p.cost, p.lambda,
        )?),
        PolicyArg::Constant => Box::new(baseline_constant_channel(
            &p.trace, &p.channel, &p.cost, p.alpha, p.lambda,
        )?),
        PolicyArg::Oracle => Box::new(baseline_oracle(
            &p.trace, &p.channel, &p.cost, p.alpha, p.lambda,
        )?),
    })
}

fn run(p: &Problem, which: PolicyArg, run: &RunArgs) -> Result<SimReport> {
    let setup = SimSetup {
        trace: &p.trace,
        channel: &p.channel,
        cost: &p.cost,
        alpha: p.alpha,
        lambda: p.lambda,
        loss_rate: run.loss_rate,
    };
    let policy = build_policy(p, which)?;
    Ok(monte_carlo(
        policy.as_ref(),
        which.name(),
        &setup,
        run.episodes,
        run.seed,
    )?)
}

fn check_run(run: &RunArgs) -> Result<()> {
    if run.episodes == 0 {
        bail!(Usage("--episodes must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&run.loss_rate) {
        bail!(Usage(format!(
            "--loss-rate {} must lie in [0, 1)",
            run.loss_rate
        )));
    }
    Ok(())
}

fn summary_header() -> [&'static str; 9] {
    [
        "policy",
        "episodes",
        "loss_rate",
        "seed",
        "utility_mean",
        "utility_stddev",
        "utility_stderr",
        "cost_mean",
        "distortion_gain_mean",
    ]
}

fn summary_row(r: &SimReport) -> Vec<String> {
    vec![
        r.policy.clone(),
        r.n_episodes.to_string(),
        r.loss_rate.to_string(),
        r.seed.to_string(),
        r.utility.mean.to_string(),
        r.utility.stddev.to_string(),
        r.utility.std_error(r.n_episodes).to_string(),
        r.cost.mean.to_string(),
        r.distortion_gain.mean.to_string(),
    ]
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    check_run(&args.run)?;
    let p = args.problem.load()?;
    let report = run(&p, args.policy, &args.run)?;
    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    w.write_record([
        "episode",
        "policy",
        "utility",
        "cost",
        "distortion_gain",
        "delivered_count",
    ])?;
    for e in &report.episodes {
        w.write_record([
            e.episode.to_string(),
            report.policy.clone(),
            e.utility.to_string(),
            e.cost.to_string(),
            e.distortion_gain.to_string(),
            e.delivered_count.to_string(),
        ])?;
    }
    w.flush()?;
    if let Some(path) = &args.summary_out {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(summary_header())?;
        w.write_record(summary_row(&report))?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    check_run(&args.run)?;
    let p = args.problem.load()?;
    let mut policies = vec![
        PolicyArg::Proposed,
        PolicyArg::Myopic,
        PolicyArg::Greedy,
        PolicyArg::Constant,
    ];
    if p.trace.len() <= MAX_EXHAUSTIVE_PACKETS {
        policies.push(PolicyArg::Oracle);
    }
    let reports = policies
        .iter()
        .map(|&which| run(&p, which, &args.run))
        .collect::<Result<Vec<_>>>()?;
    let computed = solve(&p.trace, &p.channel, &p.cost, p.alpha, p.lambda)?.initial_value()?;
    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    let mut header: Vec<&str> = summary_header().to_vec();
    header.extend([
        "paired_diff_vs_proposed",
        "paired_diff_stderr",
        "computed_value",
    ]);
    w.write_record(&header)?;
    for (which, r) in policies.iter().zip(&reports) {
        let diff = r.paired_difference(&reports[0]);
        let computed = match which {
            PolicyArg::Proposed => computed.to_string(),
            PolicyArg::Oracle => {
                solve_exhaustive(&p.trace, &p.channel, &p.cost, p.alpha, p.lambda)?
                    .initial_value()
                    .to_string()
            }
            _ => String::new(),
        };
        let mut row = summary_row(r);
        row.extend([
            diff.mean.to_string(),
            diff.std_error(r.n_episodes).to_string(),
            computed,
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let trace = read_trace(&args.trace)?;
    let nodes: PacketSet = match args.slot {
        Some(t) => {
            if t > trace.horizon() {
                bail!(Usage(format!("--slot {t} outside 0..={}", trace.horizon())));
            }
            (0..trace.len())
                .filter(|&j| {
                    let pk = trace.packet(j);
                    pk.arrival <= t && t <= pk.deadline
                })
                .collect()
        }
        None => PacketSet::full(trace.len()),
    };
    let graph = PriorityRelation::new(&trace)?.graph(nodes);
    let tree = build_state_tree(&graph);
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let pg_path = args.out_dir.join("priority_graph.dot");
    let tree_path = args.out_dir.join("state_tree.dot");
    fs::write(&pg_path, graph.to_dot("priority_graph", &trace))?;
    fs::write(&tree_path, tree.to_dot("state_tree", &trace))?;
    let phi = disconnection_degree(&graph);
    println!("nodes: {}", graph.len());
    println!("edges: {}", graph.edges.len());
    println!("disconnection degree: {phi}");
    println!("nodes + disconnection degree: {}", graph.len() + phi);
    println!("state tree non-empty nodes: {}", tree.distinct_nonempty());
    println!("wrote {} and {}", pg_path.display(), tree_path.display());
    Ok(())
}

fn is_usage(err: &anyhow::Error) -> bool {
    use mediasched::Error as E;
    err.chain().any(|cause| {
        cause.is::<Usage>()
            || matches!(
                cause.downcast_ref::<E>(),
                Some(
                    E::Parse { .. }
                        | E::InvalidTrace(_)
                        | E::InvalidChannel(_)
                        | E::InvalidParameter { .. }
                        | E::UnknownPacket(_)
                        | E::SlotOutOfRange { .. }
                        | E::DependenciesNotDecomposable
                        | E::InterdependenceMismatch { .. }
                        | E::NonUniformSizes(..)
                        | E::TooManyPackets { .. }
                )
            )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::InspectGraph(a) => cmd_inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err)
            if err
                .downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage(&err) { 2 } else { 1 })
        }
    }
}
