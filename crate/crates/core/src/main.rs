use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hecogrid::policy::{Policy, RandomPolicy, ScriptedPolicy};
use hecogrid::wire::{log, server, Endpoint};
use hecogrid::{obs, verify, Batch, EnvConfig, Error, Task};

const EXIT_IO: u8 = 1;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(name = "hecogrid", version, about = "Cooperative multi-agent gridworld engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out a policy and write an episode log.
    Rollout {
        #[command(flatten)]
        env: EnvArgs,
        /// Batched steps to simulate.
        #[arg(long, default_value_t = 256)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        batch: usize,
        #[arg(long, value_enum, default_value_t = PolicyKind::Random)]
        policy: PolicyKind,
        #[arg(long)]
        log: PathBuf,
        /// Print env 0 as text after every step.
        #[arg(long)]
        render_ascii: bool,
    },
    /// Check the coordination, heterogeneity and reward-decomposition oracles.
    Validate {
        #[command(flatten)]
        env: EnvArgs,
        /// Seeds per oracle.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Random states for the reward decomposition check.
        #[arg(long, default_value_t = 1000)]
        states: u64,
    },
    /// Measure agent-steps per second with a random policy.
    Bench {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Worker threads; defaults to the rayon global pool.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Re-simulate a log; exits 0 iff it reproduces bit-for-bit.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Serve the frame protocol.
    Serve {
        #[arg(long, conflicts_with = "port", required_unless_present = "port")]
        socket: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Random,
    Scripted,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum TaskArg {
    TeamTogether,
    TeamSupport,
    KeyForTreasure,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::TeamTogether => Task::TeamTogether,
            TaskArg::TeamSupport => Task::TeamSupport,
            TaskArg::KeyForTreasure => Task::KeyForTreasure,
        }
    }
}

#[derive(Args)]
struct EnvArgs {
    #[arg(long, value_enum, default_value_t = TaskArg::TeamTogether)]
    task: TaskArg,
    #[arg(long, default_value_t = 4)]
    agents: usize,
    #[arg(long, default_value_t = 8)]
    treasures: usize,
    #[arg(long, default_value_t = 1)]
    coord: usize,
    #[arg(long, default_value_t = 1)]
    hetero: usize,
    #[arg(long, default_value_t = 20)]
    width: usize,
    #[arg(long, default_value_t = 20)]
    height: usize,
    #[arg(long, default_value_t = 256)]
    episode_length: u32,
    #[arg(long, default_value_t = 7)]
    view: usize,
    #[arg(long, default_value_t = 2)]
    support_radius: usize,
    /// Keys for key_for_treasure; defaults to the number of agents.
    #[arg(long)]
    keys: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl EnvArgs {
    fn config(&self) -> EnvConfig {
        EnvConfig {
            task: self.task.into(),
            width: self.width,
            height: self.height,
            n_agents: self.agents,
            n_treasures: self.treasures,
            coordination: self.coord,
            heterogeneity: self.hetero,
            support_radius: self.support_radius,
            n_keys: self.keys.unwrap_or(self.agents),
            episode_length: self.episode_length,
            view_size: self.view,
            seed: self.seed,
            reward_per_treasure: 1.0,
        }
    }
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_config() {
        ExitCode::from(EXIT_INFEASIBLE)
    } else {
        ExitCode::from(EXIT_IO)
    }
}

fn rollout(
    config: &EnvConfig,
    steps: usize,
    batch: usize,
    kind: PolicyKind,
    path: &PathBuf,
    render_ascii: bool,
) -> Result<(), Error> {
    let mut policy: Box<dyn Policy> = match kind {
        PolicyKind::Random => Box::new(RandomPolicy::new(config.seed)),
        PolicyKind::Scripted => Box::new(ScriptedPolicy),
    };
    let log = if render_ascii {
        // Same trajectory as `record_rollout`, printing env 0 as it goes.
        let mut printing = PrintingPolicy { inner: policy.as_mut() };
        verify::record_rollout(config, batch, config.seed, steps, &mut printing)?
    } else {
        verify::record_rollout(config, batch, config.seed, steps, policy.as_mut())?
    };
    log::write_log(path, &log)?;
    println!(
        "wrote {} steps x {} envs to {}; treasures this episode: {:?}",
        steps,
        batch,
        path.display(),
        log.final_metrics
    );
    Ok(())
}

struct PrintingPolicy<'a> {
    inner: &'a mut dyn Policy,
}

impl Policy for PrintingPolicy<'_> {
    fn act(&mut self, batch: &Batch, out: &mut Vec<u8>) {
        let world = batch.env(0).world();
        println!("t={} treasures={}\n{}", world.t, batch.env(0).episode_treasures(), obs::render_ascii(world));
        self.inner.act(batch, out);
    }
}

fn validate(config: &EnvConfig, seeds: u64, states: u64) -> Result<bool, Error> {
    config.validate()?;
    let mut ok = true;
    for s in 0..seeds {
        let cfg = EnvConfig { seed: s, ..config.clone() };
        let report = verify::coordination_report(&cfg)?;
        if report.level() != Some(cfg.coordination) || !report.is_threshold() {
            println!("coordination seed {s}: FAIL {:?}", report.collects);
            ok = false;
        }
        match verify::heterogeneity_oracle(&cfg, s) {
            Ok(h) if h == cfg.heterogeneity => {}
            other => {
                println!("heterogeneity seed {s}: FAIL {other:?}");
                ok = false;
            }
        }
    }
    println!("coordination level {} and heterogeneity level {} over {seeds} seeds", config.coordination, config.heterogeneity);
    if config.n_agents <= 6 {
        let mut failures = 0;
        for s in 0..states {
            let state = verify::random_probe_state(config, s)?;
            if !verify::reward_decomposition_check(&state, config)? {
                failures += 1;
            }
        }
        println!("reward decomposition: {}/{states} states pass", states - failures);
        ok &= failures == 0;
    } else {
        println!("reward decomposition skipped (more than 6 agents)");
    }
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

fn bench(config: &EnvConfig, batch: usize, steps: usize, threads: Option<usize>) -> Result<(), Error> {
    let (b, _) = Batch::reset(config, batch, config.seed)?;
    let mut b = match threads {
        Some(t) => b.with_threads(t)?,
        None => b,
    };
    let mut policy = RandomPolicy::new(config.seed);
    let plans: Vec<Vec<u8>> = (0..steps.min(64))
        .map(|_| {
            let mut a = Vec::new();
            policy.act(&b, &mut a);
            a
        })
        .collect();
    let mut result = b.empty_result();
    let start = Instant::now();
    for i in 0..steps {
        b.step_into(&plans[i % plans.len()], &mut result)?;
    }
    let secs = start.elapsed().as_secs_f64();
    let agent_steps = (steps * batch * config.n_agents) as f64;
    println!("{:.0} agent-steps/s ({agent_steps} agent-steps in {secs:.3} s)", agent_steps / secs);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Rollout { env, steps, batch, policy, log, render_ascii } => {
            match rollout(&env.config(), steps, batch, policy, &log, render_ascii) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Validate { env, seeds, states } => match validate(&env.config(), seeds, states) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(EXIT_VALIDATION),
            Err(e) => fail(e),
        },
        Command::Bench { env, batch, steps, threads } => {
            match bench(&env.config(), batch, steps.max(1), threads) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Replay { log } => {
            let result = log::read_log(&log).and_then(|l| verify::replay(&l));
            match result {
                Ok(true) => {
                    println!("replay: bit-identical");
                    ExitCode::SUCCESS
                }
                Ok(false) => {
                    println!("replay: MISMATCH");
                    ExitCode::from(EXIT_VALIDATION)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_IO)
                }
            }
        }
        Command::Serve { socket, port, host } => {
            let endpoint = match (socket, port) {
                #[cfg(unix)]
                (Some(path), _) => Endpoint::Unix(path),
                (_, Some(port)) => Endpoint::Tcp(format!("{host}:{port}")),
                _ => unreachable!("clap enforces one endpoint"),
            };
            eprintln!("serving on {endpoint:?}");
            match server::serve(&endpoint) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
    }
}
