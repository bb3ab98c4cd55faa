//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the summary lines are always printed.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stubborn::cli::evaluate;
use stubborn::env::TurnEvent;
use stubborn::policy::FeatureLayout;
use stubborn::probe::{spearman, ProbeContext};
use stubborn::rng::{substream, Stream};
use stubborn::telemetry::{average_zeta, RunDirectory};
use stubborn::trainer::TrainOutcome;
use stubborn::{
    measure_zeta, train, Action, Agent, EnvConfig, EpisodeState, PolicyParams, PolicySpec, ProbeSpec,
    Schedule, TrainConfig,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------------------
// 1. rule conformance against a table-driven reference

/// Reference outcome of one turn: (event, reward, skirmish over).
fn reference_turn(
    prev: Option<(Action, Action)>,
    (a, b): (Action, Action),
    (left, right): (f64, f64),
    coin_left: &mut dyn FnMut() -> bool,
) -> (TurnEvent, f64, bool) {
    use Action::{Left as L, Right as R};
    let switched = prev.is_some_and(|(pa, pb)| pa != a && pb != b);
    match (a, b, switched) {
        (L, L, _) => (TurnEvent::AgreeLeft, left, true),
        (R, R, _) => (TurnEvent::AgreeRight, right, true),
        (_, _, true) => {
            if coin_left() {
                (TurnEvent::TiebreakLeft, left, true)
            } else {
                (TurnEvent::TiebreakRight, right, true)
            }
        }
        (_, _, false) => (TurnEvent::Disagree, 0.0, false),
    }
}

fn criterion_1() -> Verdict {
    let pairs = [(Action::Left, Action::Left), (Action::Left, Action::Right), (Action::Right, Action::Left), (Action::Right, Action::Right)];
    let reward_sets = [[(3.0, 7.0), (8.5, 1.25)], [(9.0, 2.0), (4.0, 6.0)], [(0.5, 9.5), (6.75, 6.5)]];
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (r, rewards) in reward_sets.iter().enumerate() {
        for (i, &first) in pairs.iter().enumerate() {
            for (j, &second) in pairs.iter().enumerate() {
                let seed = 1000 + (r * 16 + i * 4 + j) as u64;
                let mut ep = EpisodeState::new(&EnvConfig::default(), seed).expect("episode");
                let mut coin = substream(seed, Stream::TieBreak);
                let mut coin_left = || coin.random::<f64>() < 0.5;

                ep.force_rewards(rewards[0].0, rewards[0].1).unwrap();
                let got1 = ep.step(first.0, first.1).unwrap();
                let (e1, r1, over1) = reference_turn(None, first, rewards[0], &mut coin_left);

                let (prev, current) = if over1 {
                    ep.force_rewards(rewards[1].0, rewards[1].1).unwrap();
                    (None, rewards[1])
                } else {
                    (Some(first), rewards[0])
                };
                let got2 = ep.step(second.0, second.1).unwrap();
                let (e2, r2, _) = reference_turn(prev, second, current, &mut coin_left);

                checked += 1;
                let got = [(got1.event, got1.reward), (got2.event, got2.reward)];
                if got != [(e1, r1), (e2, r2)] || got1.skirmish_ended != over1 {
                    mismatches.push(format!("{first:?} then {second:?}: {got:?}"));
                }
            }
        }
    }
    verdict(
        mismatches.is_empty() && checked == 48,
        format!("{checked} two-turn sequences over 3 reward sets, {} mismatches {mismatches:?}", mismatches.len()),
    )
}

// ---------------------------------------------------------------------------------------
// 2. cooperativity and zero reward on disagreement

fn criterion_2() -> Verdict {
    let env = EnvConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut steps = 0u64;
    let mut violations = 0u64;
    let mut episode = 0;
    while steps < 1_000_000 {
        let mut ep = EpisodeState::new(&env, episode).expect("episode");
        episode += 1;
        while !ep.is_over() && steps < 1_000_000 {
            let a = if rng.random::<bool>() { Action::Left } else { Action::Right };
            let b = if rng.random::<bool>() { Action::Left } else { Action::Right };
            let out = ep.step(a, b).unwrap();
            steps += 1;
            let shared = ep.cumulative_reward(Agent::A) == ep.cumulative_reward(Agent::B);
            let zero_ok = out.event != TurnEvent::Disagree || out.reward == 0.0;
            if !shared || !zero_ok {
                violations += 1;
            }
        }
    }
    verdict(violations == 0, format!("{steps} random steps, {violations} violations"))
}

// ---------------------------------------------------------------------------------------
// 3. estimate noise statistics

fn criterion_3() -> Verdict {
    const N: usize = 100_000;
    let mut notes = Vec::new();
    let mut pass = true;
    for h in [1.0, 2.0, 5.0] {
        let env = EnvConfig::default().with_handicaps(h, h);
        let mut ep = EpisodeState::new(&env, 3).expect("episode");
        let mut errors = Vec::with_capacity(N);
        while errors.len() < N {
            let sk = ep.begin_skirmish().clone();
            for est in sk.est {
                errors.push(est.left - sk.true_left);
                errors.push(est.right - sk.true_right);
            }
        }
        errors.truncate(N);
        let n = N as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let std = (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let ok = mean.abs() <= 4.0 * h / n.sqrt() && (std - h).abs() <= 0.03 * h;
        pass &= ok;
        notes.push(format!("h={h}: mean {mean:.4} std {std:.4}"));
    }
    verdict(pass, notes.join(", "))
}

// ---------------------------------------------------------------------------------------
// 4. analytic log-probability gradient vs central differences

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let trials = 100;
    for _ in 0..trials {
        let mut params = PolicyParams::zeros(FeatureLayout::default(), 10.0, 40, 32);
        for w in params.theta_mut() {
            *w = rng.random_range(-0.5..0.5);
        }
        let n: u32 = rng.random_range(0..6);
        let prev = |rng: &mut ChaCha8Rng| (n > 0).then(|| if rng.random::<bool>() { Action::Left } else { Action::Right });
        let obs = stubborn::Observation {
            est_left: rng.random_range(-3.0..13.0),
            est_right: rng.random_range(-3.0..13.0),
            own_prev: prev(&mut rng),
            other_prev: prev(&mut rng),
            skirmish_turn_norm: f64::from(n) / 40.0,
            turn_in_skirmish: n,
            own_handicap: None,
        };
        let action = if rng.random::<bool>() { Action::Left } else { Action::Right };
        let analytic = params.logprob_grad(&obs, action).unwrap();
        for i in 0..params.len() {
            let orig = params.theta()[i];
            params.theta_mut()[i] = orig + step;
            let up = params.log_prob(&obs, action).unwrap();
            params.theta_mut()[i] = orig - step;
            let down = params.log_prob(&obs, action).unwrap();
            params.theta_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic[i] - numeric).abs() / scale);
        }
    }
    verdict(worst < 1e-4, format!("{trials} triples, worst relative error {worst:.2e}"))
}

// ---------------------------------------------------------------------------------------
// 5. byte-identical reruns through the binary

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .expect("run dir")
        .map(|e| e.expect("entry").path())
        .collect();
    out.sort();
    out
}

fn criterion_5(scratch: &Path) -> Verdict {
    let bin = env!("CARGO_BIN_EXE_stubborn");
    let dirs = [scratch.join("det-1"), scratch.join("det-2")];
    for dir in &dirs {
        let status = Command::new(bin)
            .args(["train", "--generations", "5", "--seed", "7", "--out"])
            .arg(dir)
            .output()
            .expect("run stubborn");
        if !status.status.success() {
            return verdict(false, format!("train failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
    }
    let (a, b) = (files_under(&dirs[0]), files_under(&dirs[1]));
    let names = |v: &[PathBuf]| v.iter().map(|p| p.file_name().unwrap().to_owned()).collect::<Vec<_>>();
    if names(&a) != names(&b) {
        return verdict(false, "runs produced different file sets");
    }
    let differing: Vec<String> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| std::fs::read(x).unwrap() != std::fs::read(y).unwrap())
        .map(|(x, _)| x.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let kinds = |prefix: &str| a.iter().filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(prefix)).count();
    let covered = kinds("metrics") == 1 && kinds("traces-gen") == 5 && kinds("ckpt-") >= 2;
    verdict(
        differing.is_empty() && covered,
        format!("{} files compared (metrics, 5 trace files, {} checkpoints), differing: {differing:?}", a.len(), kinds("ckpt-")),
    )
}

// ---------------------------------------------------------------------------------------
// 6, 7, 10. desk-scale self-play

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct SeedRun {
    seed: u64,
    dir: PathBuf,
    outcome: Result<TrainOutcome, String>,
}

fn desk_scale_runs(scratch: &Path) -> Vec<SeedRun> {
    let env = EnvConfig::default();
    let config = TrainConfig::default();
    let probe = ProbeSpec::default();
    std::thread::scope(|scope| {
        let handles: Vec<_> = SEEDS
            .iter()
            .map(|&seed| {
                let dir = scratch.join(format!("seed-{seed}"));
                let (env, config, probe) = (&env, &config, &probe);
                scope.spawn(move || {
                    let outcome = RunDirectory::create(&dir, probe)
                        .and_then(|mut run| train(env, config, probe, Schedule::default(), seed, &mut run))
                        .map_err(|e| e.to_string());
                    SeedRun { seed, dir, outcome }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread")).collect()
    })
}

fn criterion_6(runs: &[SeedRun]) -> Verdict {
    let mut improved = 0;
    let mut notes = Vec::new();
    for run in runs {
        let Ok(outcome) = &run.outcome else {
            notes.push(format!("seed {} failed", run.seed));
            continue;
        };
        let r: Vec<f64> = outcome.reports.iter().map(|g| g.mean_episode_reward).collect();
        if r.len() < 20 {
            notes.push(format!("seed {}: only {} generations", run.seed, r.len()));
            continue;
        }
        let first = r[..10].iter().sum::<f64>() / 10.0;
        let last = r[r.len() - 10..].iter().sum::<f64>() / 10.0;
        improved += usize::from(last > first);
        notes.push(format!("seed {}: {first:.1} -> {last:.1}", run.seed));
    }
    verdict(improved >= 4, format!("{improved}/5 seeds improved; {}", notes.join(", ")))
}

fn criterion_7(runs: &[SeedRun]) -> Verdict {
    let mut negative = 0;
    let mut notes = Vec::new();
    for run in runs {
        let Ok(outcome) = &run.outcome else {
            notes.push(format!("seed {} failed", run.seed));
            continue;
        };
        let window = &outcome.zetas[outcome.zetas.len().saturating_sub(50)..];
        let Some(avg) = average_zeta(window) else {
            notes.push(format!("seed {}: no probes", run.seed));
            continue;
        };
        // default grid is d = 5 with n = 0..4, so entries are in n order
        let zeta: Vec<f64> = avg[0].iter().zip(&avg[1]).map(|(a, b)| (a + b) / 2.0).collect();
        let ns: Vec<f64> = (0..zeta.len()).map(|n| n as f64).collect();
        let rho = spearman(&ns, &zeta);
        negative += usize::from(rho.is_some_and(|r| r < 0.0));
        let shown: Vec<String> = zeta.iter().map(|z| format!("{z:.3}")).collect();
        notes.push(format!("seed {}: zeta [{}] rho {}", run.seed, shown.join(" "), rho.map_or("undefined".into(), |r| format!("{r:.2}"))));
    }
    verdict(negative >= 4, format!("{negative}/5 seeds negative; {}", notes.join("; ")))
}

fn criterion_10(runs: &[SeedRun]) -> Verdict {
    let mut ok = 0;
    let mut notes = Vec::new();
    for run in runs {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let dir = run.dir.to_string_lossy().into_owned();
        let code = stubborn::cli::run(["stubborn", "analyze", "--run", dir.as_str()], &mut out, &mut err);
        let out = String::from_utf8_lossy(&out);
        if code == 0 && out.lines().any(|l| l == "OK") {
            ok += 1;
        } else {
            notes.push(format!("seed {} exit {code}: {}", run.seed, String::from_utf8_lossy(&err).trim()));
        }
    }
    verdict(ok == runs.len() && !runs.is_empty(), format!("{ok}/{} runs verified {}", runs.len(), notes.join("; ")))
}

// ---------------------------------------------------------------------------------------
// 8. probe calibration

fn criterion_8() -> Verdict {
    let env = EnvConfig::default();
    let ctx = ProbeContext::for_agent(&env, Agent::A);
    let spec = ProbeSpec::default();
    let sweep = |p: &PolicySpec| -> Vec<f64> { (0..5).map(|n| measure_zeta(p, n, 5.0, &spec, &ctx).unwrap()).collect() };
    let greedy = sweep(&PolicySpec::GreedyEstimate);
    let uniform = sweep(&PolicySpec::UniformRandom);
    let stubborn = sweep(&PolicySpec::ThresholdStubborn { k: 2, margin: 0.0 });
    let pass = greedy == [1.0; 5] && uniform == [0.5; 5] && stubborn == [1.0, 1.0, 0.0, 0.0, 0.0];
    verdict(pass, format!("greedy {greedy:?}, uniform {uniform:?}, stubborn(2, 0) {stubborn:?}"))
}

// ---------------------------------------------------------------------------------------
// 9. greedy pair at zero handicap earns E[max of two uniforms] per skirmish

fn criterion_9() -> Verdict {
    let env = EnvConfig::default().with_handicaps(0.0, 0.0);
    let g = PolicySpec::GreedyEstimate;
    let summary = evaluate(&env, &g, &g, 10_000, 9, None).expect("evaluate");
    let expected = 20.0 / 3.0;
    let diff = (summary.mean_skirmish_reward - expected).abs();
    verdict(
        diff <= 0.05,
        format!(
            "mean skirmish reward {:.4} over {} skirmishes, expected {expected:.4}, |diff| {diff:.4}",
            summary.mean_skirmish_reward, summary.finished_skirmishes
        ),
    )
}

fn timed(label: u32, f: impl FnOnce() -> Verdict) -> (u32, Verdict, f64) {
    let start = Instant::now();
    let v = f();
    (label, v, start.elapsed().as_secs_f64())
}

fn main() {
    // `cargo test -- --list` and filters: this target has a single, unnamed entry point
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let scratch = tempfile::tempdir().expect("tempdir");
    let mut results = vec![
        timed(1, criterion_1),
        timed(2, criterion_2),
        timed(3, criterion_3),
        timed(4, criterion_4),
        timed(5, || criterion_5(scratch.path())),
    ];
    let start = Instant::now();
    let runs = desk_scale_runs(scratch.path());
    let train_secs = start.elapsed().as_secs_f64();
    results.push(timed(6, || criterion_6(&runs)));
    results.push(timed(7, || criterion_7(&runs)));
    results.push(timed(8, criterion_8));
    results.push(timed(9, criterion_9));
    results.push(timed(10, || criterion_10(&runs)));
    results.sort_by_key(|r| r.0);

    println!();
    println!("acceptance (desk-scale training: {train_secs:.1}s for {} seeds)", SEEDS.len());
    let mut failed = 0;
    for (n, v, secs) in &results {
        failed += usize::from(!v.pass);
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2}: {status} ({secs:.2}s) {}", v.detail);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
