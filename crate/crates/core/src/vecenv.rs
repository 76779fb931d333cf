//! Batched environment lifecycle.
//!
//! A [`Batch`] owns `B` independent [`Env`] instances that share one
//! [`EnvConfig`]. Env `b` is seeded with `seed::split(master_seed, b)` and its
//! `k`-th episode is generated from `seed::split(env_seed, k)`, so every
//! episode depends only on the config and its derived seed. Stepping may fan
//! out over a rayon pool; the result never depends on scheduling.

use std::sync::Arc;

use rayon::prelude::*;

use crate::config::EnvConfig;
use crate::error::{Error, Result};
use crate::grid::{self, Action, TransitionTable, WorldState};
use crate::obs;
use crate::seed;
use crate::tasks;

/// Outputs of one batched step, flat and row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub batch: usize,
    pub n_agents: usize,
    pub view: usize,
    /// `B x N x V x V x 3`.
    pub observations: Vec<f32>,
    /// `B x N`.
    pub rewards: Vec<f32>,
    pub dones: Vec<bool>,
    pub treasures: Vec<u32>,
}

impl StepResult {
    pub fn zeroed(batch: usize, n_agents: usize, view: usize) -> Self {
        Self {
            batch,
            n_agents,
            view,
            observations: vec![0.0; batch * n_agents * view * view * 3],
            rewards: vec![0.0; batch * n_agents],
            dones: vec![false; batch],
            treasures: vec![0; batch],
        }
    }

    pub fn obs_len(&self) -> usize {
        self.view * self.view * 3
    }

    /// Observation of agent `agent` in env `env`.
    pub fn observation(&self, env: usize, agent: usize) -> &[f32] {
        let len = self.obs_len();
        let start = (env * self.n_agents + agent) * len;
        &self.observations[start..start + len]
    }
}

/// Per-env slice of a [`StepResult`].
struct EnvOut<'a> {
    obs: &'a mut [f32],
    rewards: &'a mut [f32],
    done: &'a mut bool,
    treasures: &'a mut u32,
}

/// One environment instance: fixed config and transition table, a world that
/// is regenerated every episode.
#[derive(Debug, Clone)]
pub struct Env {
    config: Arc<EnvConfig>,
    table: Arc<TransitionTable>,
    env_seed: u64,
    episode: u64,
    world: WorldState,
    done: bool,
    episode_return: f64,
    episode_treasures: u32,
    actions: Vec<Action>,
}

impl Env {
    /// A fresh environment whose transition table comes from `config.seed`
    /// and whose first episode is generated from `split(env_seed, 0)`.
    pub fn new(config: &EnvConfig, env_seed: u64) -> Result<Self> {
        config.validate()?;
        let table = grid::build_transition_table(config, config.seed)?;
        Self::with_table(Arc::new(config.clone()), Arc::new(table), env_seed)
    }

    fn with_table(
        config: Arc<EnvConfig>,
        table: Arc<TransitionTable>,
        env_seed: u64,
    ) -> Result<Self> {
        let world = grid::generate_world(&config, seed::split(env_seed, 0))?;
        let n = config.n_agents;
        Ok(Self {
            config,
            table,
            env_seed,
            episode: 0,
            world,
            done: false,
            episode_return: 0.0,
            episode_treasures: 0,
            actions: Vec::with_capacity(n),
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn table(&self) -> &TransitionTable {
        &self.table
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn env_seed(&self) -> u64 {
        self.env_seed
    }

    /// Episodes started so far, minus one.
    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Treasures collected since the last reset.
    pub fn episode_treasures(&self) -> u32 {
        self.episode_treasures
    }

    /// Team reward (summed over agents) since the last reset.
    pub fn episode_return(&self) -> f64 {
        self.episode_return
    }

    fn next_episode(&mut self) {
        self.episode += 1;
        self.world = grid::generate_world(&self.config, seed::split(self.env_seed, self.episode))
            .expect("config validated at construction");
        self.done = false;
        self.episode_return = 0.0;
        self.episode_treasures = 0;
    }

    /// Writes every agent's observation into `out` (`N x V x V x 3`).
    pub fn render_into(&self, out: &mut [f32]) {
        let len = self.config.obs_len();
        for (i, chunk) in out.chunks_exact_mut(len).enumerate() {
            obs::render_into(&self.world, i, self.config.view_size, chunk);
        }
    }

    /// Advances one timestep and returns `(done, treasures_this_step)`.
    ///
    /// If the previous step ended the episode, this call instead starts the
    /// next episode, ignores `actions`, and reports zero reward.
    /// `obs_out` may be empty to skip rendering.
    pub fn step(&mut self, actions: &[Action], obs_out: &mut [f32], rewards_out: &mut [f32]) -> (bool, u32) {
        let mut done = false;
        let mut treasures = 0;
        let out = EnvOut { obs: obs_out, rewards: rewards_out, done: &mut done, treasures: &mut treasures };
        self.step_out(actions, out);
        (done, treasures)
    }

    fn step_out(&mut self, actions: &[Action], out: EnvOut<'_>) {
        if self.done {
            self.next_episode();
            out.rewards.fill(0.0);
            *out.done = false;
            *out.treasures = 0;
        } else {
            grid::step_world(&mut self.world, actions, &self.table);
            let events = tasks::check_collection(&mut self.world, &self.config);
            let rewards =
                tasks::compute_rewards(&events, self.config.n_agents, self.config.reward_per_treasure);
            for (dst, r) in out.rewards.iter_mut().zip(&rewards.0) {
                *dst = *r as f32;
            }
            let collected = events.len() as u32;
            self.episode_treasures += collected;
            self.episode_return += rewards.total();
            self.done = self.world.t >= self.config.episode_length || self.world.active_treasures() == 0;
            *out.done = self.done;
            *out.treasures = collected;
        }
        if !out.obs.is_empty() {
            self.render_into(out.obs);
        }
    }

    fn step_codes(&mut self, codes: &[u8], out: EnvOut<'_>) {
        self.actions.clear();
        self.actions.extend(codes.iter().map(|&c| Action::from_code(c).expect("validated")));
        let actions = std::mem::take(&mut self.actions);
        self.step_out(&actions, out);
        self.actions = actions;
    }
}

/// `B` environments stepped in lockstep.
#[derive(Debug)]
pub struct Batch {
    config: Arc<EnvConfig>,
    master_seed: u64,
    envs: Vec<Env>,
    pool: Option<Arc<rayon::ThreadPool>>,
    render: bool,
}

impl Batch {
    /// Creates `batch` environments and returns their initial observations.
    pub fn reset(config: &EnvConfig, batch: usize, master_seed: u64) -> Result<(Self, StepResult)> {
        if batch == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        config.validate()?;
        let config = Arc::new(config.clone());
        let table = Arc::new(grid::build_transition_table(&config, config.seed)?);
        let envs = (0..batch)
            .map(|b| Env::with_table(config.clone(), table.clone(), seed::split(master_seed, b as u64)))
            .collect::<Result<Vec<_>>>()?;
        let batch = Self { config, master_seed, envs, pool: None, render: true };
        let mut result = batch.empty_result();
        batch.render_all(&mut result);
        Ok((batch, result))
    }

    /// Runs steps on a dedicated pool of `threads` workers instead of the
    /// global rayon pool.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        self.pool = Some(Arc::new(pool));
        Ok(self)
    }

    /// Disables observation rendering; step results then carry an empty
    /// observation buffer.
    pub fn set_render(&mut self, render: bool) {
        self.render = render;
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn envs(&self) -> &[Env] {
        &self.envs
    }

    pub fn env(&self, b: usize) -> &Env {
        &self.envs[b]
    }

    pub fn empty_result(&self) -> StepResult {
        let mut r = StepResult::zeroed(self.envs.len(), self.config.n_agents, self.config.view_size);
        if !self.render {
            r.observations.clear();
        }
        r
    }

    fn render_all(&self, result: &mut StepResult) {
        let per_env = self.config.n_agents * self.config.obs_len();
        if result.observations.is_empty() {
            return;
        }
        for (env, chunk) in self.envs.iter().zip(result.observations.chunks_exact_mut(per_env)) {
            env.render_into(chunk);
        }
    }

    /// Treasures collected by each env since its last reset.
    pub fn episode_metric(&self) -> Vec<u32> {
        self.envs.iter().map(Env::episode_treasures).collect()
    }

    pub fn step(&mut self, actions: &[u8]) -> Result<StepResult> {
        let mut result = self.empty_result();
        self.step_into(actions, &mut result)?;
        Ok(result)
    }

    /// Steps every env with `actions` (`B x N` codes, row-major) and writes
    /// the outcome into `result`, reusing its buffers.
    pub fn step_into(&mut self, actions: &[u8], result: &mut StepResult) -> Result<()> {
        let n = self.config.n_agents;
        let expected = self.envs.len() * n;
        if actions.len() != expected {
            return Err(Error::ShapeMismatch { expected, got: actions.len() });
        }
        if let Some(&bad) = actions.iter().find(|&&a| a as usize >= Action::ALL.len()) {
            return Err(Error::InvalidAction(bad));
        }
        let fresh = self.empty_result();
        if result.observations.len() != fresh.observations.len()
            || result.rewards.len() != fresh.rewards.len()
            || result.dones.len() != fresh.dones.len()
        {
            *result = fresh;
        }
        let per_env_obs = if self.render { n * self.config.obs_len() } else { 0 };
        let envs = &mut self.envs;
        let mut run = || {
            let obs_chunks: Vec<&mut [f32]> = if per_env_obs == 0 {
                (0..envs.len()).map(|_| <&mut [f32]>::default()).collect()
            } else {
                result.observations.chunks_exact_mut(per_env_obs).collect()
            };
            envs.par_iter_mut()
                .zip(actions.par_chunks_exact(n))
                .zip(obs_chunks)
                .zip(result.rewards.par_chunks_exact_mut(n))
                .zip(result.dones.par_iter_mut())
                .zip(result.treasures.par_iter_mut())
                .for_each(|(((((env, codes), obs), rewards), done), treasures)| {
                    env.step_codes(codes, EnvOut { obs, rewards, done, treasures });
                });
        };
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
        Ok(())
    }
}
