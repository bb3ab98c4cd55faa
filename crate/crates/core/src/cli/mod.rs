//! The `stubborn` command line: `train`, `probe`, `eval` and `analyze`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error, 3 verification
//! mismatch.

mod config;

pub use config::{parse_value, HandicapKind, RunConfig, KEYS};

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::env::{run_episode, Agent, EnvConfig, TurnRecorder};
use crate::error::{Error, Result};
use crate::policy::{Policy, PolicySpec};
use crate::probe::{zeta_sweep, ProbeContext, ZetaMatrix};
use crate::rng::derive_seed;
use crate::telemetry::{
    average_zeta, load_checkpoint, read_traces, render_chart, sig6, summarize, verify, write_zeta_csv,
    zeta_chart, MetricsTable, RunDirectory, TraceWriter,
};
use crate::trainer::train;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stubborn", version, about = "Stubborn game simulation lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Self-play training of two independent agents.
    Train(TrainArgs),
    /// Measure ζ(n, d) for checkpoints or scripted policies.
    Probe(ProbeArgs),
    /// Play episodes between two policies and report rewards.
    Eval(EvalArgs),
    /// Recompute metrics from traces and verify metrics.csv.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file with flat dotted keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed (train.seeds, env.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (run.out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for rollouts (run.jobs).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Override any config key, e.g. `--set train.clip=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// train.generations
    #[arg(long)]
    pub generations: Option<u32>,
    /// train.episodes_per_generation
    #[arg(long)]
    pub episodes: Option<u32>,
    /// probe.interval
    #[arg(long)]
    pub probe_interval: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Checkpoint for agent A, optionally followed by one for agent B.
    #[arg(long = "checkpoint", num_args = 1..=2)]
    pub checkpoints: Vec<PathBuf>,
    /// Scripted policy for both agents: left, right, uniform, greedy, stubborn:K:MARGIN.
    #[arg(long, conflicts_with = "checkpoints")]
    pub policy: Option<String>,
    /// probe.n_values
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u32>,
    /// probe.d_values
    #[arg(long, value_delimiter = ',')]
    pub d: Vec<f64>,
    /// probe.base_mode: symmetric or averaged
    #[arg(long)]
    pub mode: Option<String>,
    /// probe.samples
    #[arg(long)]
    pub samples: Option<u32>,
    /// probe.mirror
    #[arg(long)]
    pub mirror: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Policy for agent A: left, right, uniform, greedy, stubborn:K:MARGIN, ckpt:PATH.
    #[arg(long)]
    pub policy_a: String,
    /// Policy for agent B.
    #[arg(long)]
    pub policy_b: String,
    #[arg(long, default_value_t = 100)]
    pub episodes: u64,
    /// Fixed handicap for both agents (env.handicap_a, env.handicap_b).
    #[arg(long)]
    pub handicap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Glob of trace files, e.g. 'run/traces-gen*.jsonl'.
    pub traces: Option<String>,
    /// Run directory; shorthand for '<run>/traces-gen*.jsonl' and '<run>/metrics.csv'.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Metrics file; defaults to metrics.csv next to the first trace.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config { .. } => EXIT_USAGE,
            Error::Mismatch(_) => EXIT_MISMATCH,
            _ => EXIT_RUNTIME,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CliResult = std::result::Result<(), CliError>;

impl FromStr for PolicySpec {
    type Err = Error;

    /// Scripted policies by name; `ckpt:PATH` loads a learned checkpoint.
    fn from_str(s: &str) -> Result<Self> {
        let spec = match s {
            "left" => PolicySpec::AlwaysLeft,
            "right" => PolicySpec::AlwaysRight,
            "uniform" => PolicySpec::UniformRandom,
            "greedy" => PolicySpec::GreedyEstimate,
            _ => {
                if let Some(path) = s.strip_prefix("ckpt:") {
                    PolicySpec::Learned(Box::new(load_checkpoint(path)?))
                } else if let Some(rest) = s.strip_prefix("stubborn:") {
                    let (k, margin) = rest.split_once(':').unwrap_or((rest, "0"));
                    let k = k.parse().map_err(|_| Error::config("policy", format!("bad k in `{s}`")))?;
                    let margin = margin
                        .parse()
                        .map_err(|_| Error::config("policy", format!("bad margin in `{s}`")))?;
                    PolicySpec::ThresholdStubborn { k, margin }
                } else {
                    return Err(Error::config("policy", format!("unknown policy `{s}`")));
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn resolve(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for assignment in &common.overrides {
        cfg.set_assignment(assignment)?;
    }
    if let Some(seed) = common.seed {
        cfg.train.seeds = vec![seed];
        cfg.env.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(jobs) = common.jobs {
        cfg.train.jobs = jobs.max(1);
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = resolve(&args.common)?;
    if let Some(g) = args.generations {
        cfg.train.generations = g;
    }
    if let Some(e) = args.episodes {
        cfg.train.episodes_per_generation = e;
    }
    if let Some(p) = args.probe_interval {
        cfg.schedule.probe_interval = p;
    }
    cfg.validate()?;
    let env = cfg.env_config();
    create_dir(&cfg.out)?;
    let resolved = cfg.out.join("config.resolved");
    std::fs::write(&resolved, cfg.resolved()).map_err(|e| Error::io(&resolved, e))?;

    let multi = cfg.train.seeds.len() > 1;
    for &seed in &cfg.train.seeds {
        let dir = if multi {
            cfg.out.join(format!("seed-{seed}"))
        } else {
            cfg.out.clone()
        };
        let mut run = RunDirectory::create(&dir, &cfg.probe)?;
        let outcome = train(&env, &cfg.train, &cfg.probe, cfg.schedule, seed, &mut run)?;
        let first = outcome.reports.first().map_or(0.0, |r| r.mean_episode_reward);
        let last = outcome.reports.last().map_or(0.0, |r| r.mean_episode_reward);
        let _ = writeln!(
            out,
            "seed {seed}: {} generations, mean episode reward {} -> {}, outputs in {}",
            outcome.reports.len(),
            sig6(first),
            sig6(last),
            dir.display()
        );
    }
    Ok(())
}

pub fn cmd_probe(args: &ProbeArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = resolve(&args.common)?;
    if !args.n.is_empty() {
        cfg.probe.n_values = args.n.clone();
    }
    if !args.d.is_empty() {
        cfg.probe.d_values = args.d.clone();
    }
    if let Some(s) = args.samples {
        cfg.set("probe.samples", &toml::Value::Integer(i64::from(s)))?;
    }
    if let Some(mode) = &args.mode {
        cfg.set("probe.base_mode", &toml::Value::String(mode.clone()))?;
    }
    if args.mirror {
        cfg.probe.mirror = true;
    }
    cfg.validate()?;
    let mut env = cfg.env_config();

    let policies: [PolicySpec; 2] = match (&args.policy, args.checkpoints.as_slice()) {
        (Some(name), _) => {
            let p: PolicySpec = name.parse()?;
            [p.clone(), p]
        }
        (None, [a]) => {
            let p = PolicySpec::Learned(Box::new(load_checkpoint(a)?));
            [p.clone(), p]
        }
        (None, [a, b]) => [
            PolicySpec::Learned(Box::new(load_checkpoint(a)?)),
            PolicySpec::Learned(Box::new(load_checkpoint(b)?)),
        ],
        _ => return Err(usage("probe needs --policy or one or two --checkpoint paths")),
    };
    if let PolicySpec::Learned(p) = &policies[0] {
        env.turns_per_episode = p.turns_per_episode();
        env.observe_own_handicap |= p.layout().handicap;
    }
    let contexts = Agent::BOTH.map(|a| ProbeContext::for_agent(&env, a));
    let pair: [&dyn Policy; 2] = [&policies[0], &policies[1]];
    let matrix = zeta_sweep(pair, &cfg.probe, &contexts, 0)?;

    create_dir(&cfg.out)?;
    write_zeta_csv(&matrix, cfg.out.join("zeta.csv"))?;
    let avg = average_zeta(std::slice::from_ref(&matrix)).expect("one matrix");
    render_chart(&zeta_chart(&cfg.probe, &avg), cfg.out.join("zeta.svg"))?;
    print_zeta(&matrix, out);
    Ok(())
}

fn print_zeta(m: &ZetaMatrix, out: &mut dyn Write) {
    let _ = writeln!(out, "agent  n  d  zeta");
    for agent in Agent::BOTH {
        for e in &m.entries[agent.index()] {
            let _ = writeln!(out, "{}  {}  {}  {}", agent.label(), e.n, sig6(e.d), sig6(e.zeta));
        }
    }
}

/// Aggregate results of [`evaluate`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub episodes: u64,
    pub mean_episode_reward: f64,
    /// Mean reward over finished skirmishes (agreement or tie-break).
    pub mean_skirmish_reward: f64,
    pub finished_skirmishes: u64,
    pub agreement_rate: f64,
    pub skirmish_lengths: BTreeMap<u32, u64>,
}

/// Play `episodes` episodes; episode `e` uses seed `derive_seed(seed, e)`.
pub fn evaluate(
    env: &EnvConfig,
    policy_a: &dyn Policy,
    policy_b: &dyn Policy,
    episodes: u64,
    seed: u64,
    mut traces: Option<&mut TraceWriter>,
) -> Result<EvalSummary> {
    let mut total = 0.0;
    let mut skirmish_total = 0.0;
    let mut finished = 0u64;
    let mut turns = 0u64;
    let mut agreements = 0u64;
    let mut lengths = BTreeMap::new();
    for e in 0..episodes {
        let mut noop = ();
        let mut rec;
        let recorder: &mut dyn TurnRecorder = match traces.as_deref_mut() {
            Some(w) => {
                rec = w.recorder(0, e);
                &mut rec
            }
            None => &mut noop,
        };
        let trace = run_episode(env, derive_seed(seed, e), policy_a, policy_b, recorder)?;
        total += trace.total_reward;
        for r in trace.skirmish_rewards() {
            skirmish_total += r;
            finished += 1;
        }
        turns += trace.turns.len() as u64;
        agreements += trace.turns.iter().filter(|t| t.event.is_agreement()).count() as u64;
        for len in trace.skirmish_lengths() {
            *lengths.entry(len).or_insert(0) += 1;
        }
    }
    let ratio = |a: f64, b: u64| if b == 0 { 0.0 } else { a / b as f64 };
    Ok(EvalSummary {
        episodes,
        mean_episode_reward: ratio(total, episodes),
        mean_skirmish_reward: ratio(skirmish_total, finished),
        finished_skirmishes: finished,
        agreement_rate: ratio(agreements as f64, turns),
        skirmish_lengths: lengths,
    })
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = resolve(&args.common)?;
    if let Some(h) = args.handicap {
        cfg.handicap_kind = HandicapKind::Fixed;
        cfg.handicap_a = h;
        cfg.handicap_b = h;
    }
    cfg.validate()?;
    let env = cfg.env_config();
    let a: PolicySpec = args.policy_a.parse()?;
    let b: PolicySpec = args.policy_b.parse()?;
    let mut writer = match &args.common.out {
        Some(dir) => {
            create_dir(dir)?;
            Some(TraceWriter::create(dir.join("traces-eval.jsonl"))?)
        }
        None => None,
    };
    let summary = evaluate(&env, &a, &b, args.episodes, env.seed, writer.as_mut())?;
    let _ = writeln!(out, "episodes: {}", summary.episodes);
    let _ = writeln!(out, "mean episode reward: {}", sig6(summary.mean_episode_reward));
    let _ = writeln!(
        out,
        "mean skirmish reward: {} over {} finished skirmishes",
        sig6(summary.mean_skirmish_reward),
        summary.finished_skirmishes
    );
    let _ = writeln!(out, "agreement rate: {}", sig6(summary.agreement_rate));
    let _ = writeln!(out, "skirmish length histogram:");
    for (len, count) in &summary.skirmish_lengths {
        let _ = writeln!(out, "  {len:>3}: {count}");
    }
    Ok(())
}

fn expand_glob(pattern: &str) -> std::result::Result<Vec<PathBuf>, CliError> {
    let paths = glob::glob(pattern).map_err(|e| usage(format!("bad glob `{pattern}`: {e}")))?;
    let mut files: Vec<PathBuf> = paths.filter_map(std::result::Result::ok).collect();
    files.sort();
    Ok(files)
}

pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> CliResult {
    let pattern = match (&args.traces, &args.run) {
        (Some(p), _) => p.clone(),
        (None, Some(run)) => run.join("traces-gen*.jsonl").display().to_string(),
        (None, None) => return Err(usage("analyze needs a trace glob or --run")),
    };
    let files = expand_glob(&pattern)?;
    if files.is_empty() {
        return Err(usage(format!("no trace files match `{pattern}`")));
    }
    let metrics_path = match (&args.metrics, &args.run) {
        (Some(m), _) => m.clone(),
        (None, Some(run)) => run.join("metrics.csv"),
        (None, None) => files[0].parent().unwrap_or(Path::new(".")).join("metrics.csv"),
    };
    let mut records = Vec::new();
    for f in &files {
        records.extend(read_traces(f)?);
    }
    let summaries = summarize(&records);
    let table = MetricsTable::read(&metrics_path)?;

    let mut hist: BTreeMap<u32, usize> = BTreeMap::new();
    for s in &summaries {
        for (len, c) in &s.skirmish_lengths {
            *hist.entry(*len).or_insert(0) += c;
        }
    }
    let skirmishes: usize = hist.values().sum();
    let turns: usize = hist.iter().map(|(l, c)| *l as usize * c).sum();
    let _ = writeln!(
        out,
        "{} trace files, {} generations, {} turns, {} skirmishes (mean length {})",
        files.len(),
        summaries.len(),
        turns,
        skirmishes,
        sig6(if skirmishes == 0 { 0.0 } else { turns as f64 / skirmishes as f64 })
    );
    let longest = hist.keys().next_back().copied().unwrap_or(0);
    let _ = writeln!(out, "longest skirmish: {longest} turns");

    let problems = verify(&summaries, &table);
    if problems.is_empty() {
        let _ = writeln!(out, "OK");
        Ok(())
    } else {
        for p in &problems {
            let _ = writeln!(out, "MISMATCH {p}");
        }
        Err(CliError {
            code: EXIT_MISMATCH,
            message: format!("{} mismatches against {}", problems.len(), metrics_path.display()),
        })
    }
}

/// Parse `args` (including the program name) and run the chosen command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Probe(a) => cmd_probe(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Analyze(a) => cmd_analyze(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
