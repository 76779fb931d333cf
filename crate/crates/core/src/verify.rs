//! Executable oracles for the coordination and heterogeneity levels, the
//! subset decomposition of the team reward, and deterministic replay.
//!
//! The subset predicates here are written independently of [`crate::tasks`]
//! so the decomposition check compares two separate routes to the same
//! number.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{EnvConfig, Task};
use crate::error::{Error, Result};
use crate::grid::{self, Action, Cell, Orientation, Pos, WorldState};
use crate::policy::Policy;
use crate::tasks;
use crate::vecenv::{Batch, StepResult};

/// Outcome of the scripted-placement coordination probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinationReport {
    /// `collects[k - 1]`: whether the best-case placement of `k` agents earns
    /// a positive reward.
    pub collects: Vec<bool>,
}

impl CoordinationReport {
    /// Smallest `k` that collects, `None` if no team size does.
    pub fn level(&self) -> Option<usize> {
        self.collects.iter().position(|&c| c).map(|i| i + 1)
    }

    /// Whether the placements collect exactly for `k >= level`.
    pub fn is_threshold(&self) -> bool {
        match self.level() {
            Some(c) => self.collects.iter().enumerate().all(|(i, &got)| got == (i + 1 >= c)),
            None => false,
        }
    }
}

fn non_wall_cells(world: &WorldState) -> impl Iterator<Item = Pos> + '_ {
    (0..world.height as i32)
        .flat_map(move |y| (0..world.width as i32).map(move |x| Pos::new(x, y)))
        .filter(|&p| !world.is_wall(p))
}

/// Best-case state for `k` participating agents around treasure 0.
fn scripted_placement(config: &EnvConfig, base: &WorldState, k: usize) -> Result<WorldState> {
    let mut world = base.clone();
    let target = world.treasure_pos[0];
    for (id, active) in world.treasure_active.iter_mut().enumerate() {
        *active = id == 0;
    }
    world.key_on_ground.iter_mut().for_each(|k| *k = None);
    world.key_held.iter_mut().for_each(|k| *k = None);

    let radius = config.support_radius as u32;
    let park_beyond = match config.task {
        Task::TeamSupport => radius,
        _ => 0,
    };
    let park = non_wall_cells(&world)
        .filter(|p| p.chebyshev(target) > park_beyond)
        .max_by_key(|p| (p.chebyshev(target), std::cmp::Reverse((p.y, p.x))))
        .ok_or_else(|| Error::InvalidConfig("no cell to park idle agents".into()))?;
    let support = non_wall_cells(&world)
        .filter(|p| p.chebyshev(target) <= radius)
        .max_by_key(|p| (p.chebyshev(target), std::cmp::Reverse((p.y, p.x))))
        .unwrap_or(target);

    for (i, agent) in world.agents.iter_mut().enumerate() {
        agent.dir = Orientation::North;
        agent.pos = if i >= k {
            park
        } else if i == 0 || config.task != Task::TeamSupport {
            target
        } else {
            support
        };
    }
    if config.task == Task::KeyForTreasure {
        world.key_held[0] = Some(0);
    }
    Ok(world)
}

/// Probes team sizes `1..=N` with best-case placements on a world generated
/// from `config.seed`.
pub fn coordination_report(config: &EnvConfig) -> Result<CoordinationReport> {
    let base = grid::generate_world(config, config.seed)?;
    let mut collects = Vec::with_capacity(config.n_agents);
    for k in 1..=config.n_agents {
        let mut world = scripted_placement(config, &base, k)?;
        let events = tasks::check_collection(&mut world, config);
        let reward = tasks::compute_rewards(&events, config.n_agents, config.reward_per_treasure);
        collects.push(reward.total() > 0.0);
    }
    Ok(CoordinationReport { collects })
}

/// Minimal team size that can earn a positive reward; `None` when unbounded.
pub fn coordination_oracle(config: &EnvConfig) -> Result<Option<usize>> {
    Ok(coordination_report(config)?.level())
}

/// Observable effect of one action: position delta and new heading.
type Effect = (i32, i32, Orientation);

fn zone_effects(config: &EnvConfig, table: &grid::TransitionTable, zone: usize) -> Vec<Effect> {
    // An open world without walls so every column can host the probe.
    let mut world = WorldState::empty(config.width, config.height.max(3), config.heterogeneity);
    world.cells.iter_mut().for_each(|c| *c = Cell::Empty);
    let x = grid::stripe_bounds(config.width, config.heterogeneity)[zone] as i32;
    let start = Pos::new(x, world.height as i32 / 2);
    world.add_agent(start, Orientation::North);
    Action::ALL
        .iter()
        .map(|&a| {
            let mut w = world.clone();
            grid::step_world(&mut w, &[a], table);
            let p = w.agents[0];
            (p.pos.x - start.x, p.pos.y - start.y, p.dir)
        })
        .collect()
}

fn nominal_effects() -> Vec<Effect> {
    vec![
        (0, 0, Orientation::West),
        (0, 0, Orientation::East),
        (0, -1, Orientation::North),
        (0, 0, Orientation::North),
    ]
}

/// Number of distinct transition functions in the environment built from
/// `world_seed`.
///
/// Besides counting distinct permutations, every zone is stepped empirically:
/// zones with different permutations must disagree on some action, zones
/// sharing one must agree, identity zones must behave nominally and `NoOp`
/// must never move an agent.
pub fn heterogeneity_oracle(config: &EnvConfig, world_seed: u64) -> Result<usize> {
    let table = grid::build_transition_table(config, world_seed)?;
    let distinct: HashSet<_> = table.perms().iter().collect();
    let effects: Vec<Vec<Effect>> =
        (0..table.zones()).map(|z| zone_effects(config, &table, z)).collect();
    for z1 in 0..table.zones() {
        if effects[z1][Action::NoOp as usize] != (0, 0, Orientation::North) {
            return Err(Error::Verification(format!("NoOp moves the agent in zone {z1}")));
        }
        if table.perm(z1) == grid::ActionPermutation::IDENTITY && effects[z1] != nominal_effects() {
            return Err(Error::Verification(format!("identity zone {z1} is not nominal")));
        }
        for z2 in 0..table.zones() {
            let same_perm = table.perm(z1) == table.perm(z2);
            let same_effect = effects[z1] == effects[z2];
            if same_perm != same_effect {
                return Err(Error::Verification(format!(
                    "zones {z1} and {z2}: permutations equal = {same_perm}, effects equal = {same_effect}"
                )));
            }
        }
    }
    Ok(distinct.len())
}

/// Whether the agents in `subset` (a bitmask) alone satisfy the collection
/// condition of the treasure at `target`.
fn subset_satisfies(config: &EnvConfig, world: &WorldState, subset: u32, target: Pos) -> bool {
    let members = || (0..world.agents.len()).filter(move |i| subset & (1 << i) != 0);
    let on_cell = || members().filter(|&i| world.agents[i].pos == target);
    let c = config.coordination;
    match config.task {
        Task::TeamTogether => on_cell().count() >= c,
        Task::TeamSupport => {
            let r = config.support_radius as u32;
            on_cell().next().is_some()
                && members().filter(|&i| world.agents[i].pos.chebyshev(target) <= r).count() >= c
        }
        Task::KeyForTreasure => {
            on_cell().count() >= c && on_cell().any(|i| world.key_held[i].is_some())
        }
    }
}

/// Sorted-member lexicographic key for a subset bitmask.
fn lex_key(subset: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| subset & (1 << i) != 0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Reward attributed to each subset, indexed by bitmask.
    pub subset_rewards: Vec<f64>,
    pub subset_total: f64,
    /// Team reward paid by the task rules for the same state.
    pub team_total: f64,
}

impl Decomposition {
    pub fn holds(&self) -> bool {
        let scale = self.team_total.abs().max(1.0);
        (self.subset_total - self.team_total).abs() <= 1e-12 * scale
    }
}

/// Attributes each collectable treasure to its lexicographically smallest
/// inclusion-minimal satisfying agent subset and compares the subset sum with
/// the team reward computed by the task rules.
pub fn reward_decomposition(state: &WorldState, config: &EnvConfig) -> Result<Decomposition> {
    let n = state.n_agents();
    if n > 6 {
        return Err(Error::InvalidConfig(format!("subset enumeration needs N <= 6, got {n}")));
    }
    let full = 1u32 << n;
    let mut subset_rewards = vec![0.0; full as usize];
    for (id, &target) in state.treasure_pos.iter().enumerate() {
        if !state.treasure_active[id] {
            continue;
        }
        let satisfying: Vec<u32> =
            (1..full).filter(|&g| subset_satisfies(config, state, g, target)).collect();
        let minimal = satisfying.iter().copied().filter(|&g| {
            // Every proper non-empty submask must fail.
            let mut sub = (g - 1) & g;
            while sub != 0 {
                if subset_satisfies(config, state, sub, target) {
                    return false;
                }
                sub = (sub - 1) & g;
            }
            true
        });
        if let Some(owner) = minimal.min_by_key(|&g| lex_key(g, n)) {
            subset_rewards[owner as usize] += config.reward_per_treasure;
        }
    }
    let subset_total = subset_rewards.iter().sum();
    let mut scratch = state.clone();
    let events = tasks::check_collection(&mut scratch, config);
    let team_total = tasks::compute_rewards(&events, n, config.reward_per_treasure).total();
    Ok(Decomposition { subset_rewards, subset_total, team_total })
}

pub fn reward_decomposition_check(state: &WorldState, config: &EnvConfig) -> Result<bool> {
    Ok(reward_decomposition(state, config)?.holds())
}

/// A random post-movement state biased toward crowded treasures, for
/// exercising the decomposition check.
pub fn random_probe_state(config: &EnvConfig, seed: u64) -> Result<WorldState> {
    let mut world = grid::generate_world(config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_d3c0);
    let hot = world.treasure_pos.len().min(2);
    let r = config.support_radius as i32;
    for i in 0..world.agents.len() {
        let roll: f64 = rng.random();
        let anchor = world.treasure_pos[rng.random_range(0..hot)];
        let pos = if roll < 0.5 {
            anchor
        } else if roll < 0.85 {
            anchor.offset(rng.random_range(-r - 1..=r + 1), rng.random_range(-r - 1..=r + 1))
        } else {
            Pos::new(
                rng.random_range(1..world.width as i32 - 1),
                rng.random_range(1..world.height as i32 - 1),
            )
        };
        if !world.is_wall(pos) {
            world.agents[i].pos = pos;
        }
    }
    let n_keys = world.key_on_ground.len();
    for i in 0..world.agents.len().min(n_keys) {
        if rng.random_bool(0.5) {
            world.key_on_ground[i] = None;
            world.key_held[i] = Some(i as u16);
        }
    }
    for active in world.treasure_active.iter_mut() {
        if rng.random_bool(0.15) {
            *active = false;
        }
    }
    Ok(world)
}

/// Everything needed to regenerate a batched rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub config: EnvConfig,
    pub master_seed: u64,
    pub batch: usize,
    /// One `B x N` action-code vector per step.
    pub actions: Vec<Vec<u8>>,
    /// One digest of rewards, dones and treasure counts per step.
    pub digests: Vec<u64>,
    /// Treasures-per-episode of every env when the log ended.
    pub final_metrics: Vec<u32>,
}

/// Hash of the rewards, dones and treasure counts of a step together with
/// the resulting agent poses and key possession. Observations are excluded,
/// so the digest does not depend on rendering.
pub fn step_digest(result: &StepResult, batch: &Batch) -> u64 {
    let mut hasher = Sha256::new();
    for r in &result.rewards {
        hasher.update(r.to_le_bytes());
    }
    for &d in &result.dones {
        hasher.update([d as u8]);
    }
    for t in &result.treasures {
        hasher.update(t.to_le_bytes());
    }
    for env in batch.envs() {
        let world = env.world();
        hasher.update(world.t.to_le_bytes());
        for (a, key) in world.agents.iter().zip(&world.key_held) {
            hasher.update(a.pos.x.to_le_bytes());
            hasher.update(a.pos.y.to_le_bytes());
            hasher.update([a.dir as u8, key.is_some() as u8]);
        }
    }
    let bytes = hasher.finalize();
    u64::from_le_bytes(bytes[..8].try_into().expect("sha256 has 32 bytes"))
}

/// Runs `steps` batched steps under `policy` and records them.
pub fn record_rollout(
    config: &EnvConfig,
    batch_size: usize,
    master_seed: u64,
    steps: usize,
    policy: &mut dyn Policy,
) -> Result<EpisodeLog> {
    let (mut batch, _) = Batch::reset(config, batch_size, master_seed)?;
    let mut log = EpisodeLog {
        config: config.clone(),
        master_seed,
        batch: batch_size,
        actions: Vec::with_capacity(steps),
        digests: Vec::with_capacity(steps),
        final_metrics: Vec::new(),
    };
    let mut actions = Vec::new();
    for _ in 0..steps {
        policy.act(&batch, &mut actions);
        let result = batch.step(&actions)?;
        log.digests.push(step_digest(&result, &batch));
        log.actions.push(actions.clone());
    }
    log.final_metrics = batch.episode_metric();
    Ok(log)
}

fn check_shape(log: &EpisodeLog) -> Result<()> {
    let per_step = log.batch * log.config.n_agents;
    if log.batch == 0 {
        return Err(Error::CorruptLog("batch size is zero".into()));
    }
    if log.actions.len() != log.digests.len() {
        return Err(Error::CorruptLog(format!(
            "{} action frames but {} digests",
            log.actions.len(),
            log.digests.len()
        )));
    }
    if let Some((i, a)) = log.actions.iter().enumerate().find(|(_, a)| a.len() != per_step) {
        return Err(Error::CorruptLog(format!("step {i} has {} actions, expected {per_step}", a.len())));
    }
    if log.final_metrics.len() != log.batch {
        return Err(Error::CorruptLog("final metrics do not match batch size".into()));
    }
    Ok(())
}

/// Re-simulates a log with rendering on or off.
pub fn replay_with(log: &EpisodeLog, render: bool) -> Result<bool> {
    check_shape(log)?;
    let (mut batch, _) = Batch::reset(&log.config, log.batch, log.master_seed)
        .map_err(|e| Error::CorruptLog(format!("header does not instantiate: {e}")))?;
    batch.set_render(render);
    let mut result = batch.empty_result();
    for (actions, &digest) in log.actions.iter().zip(&log.digests) {
        match batch.step_into(actions, &mut result) {
            Ok(()) => {}
            Err(Error::InvalidAction(_)) => return Ok(false),
            Err(e) => return Err(e),
        }
        if step_digest(&result, &batch) != digest {
            return Ok(false);
        }
    }
    Ok(batch.episode_metric() == log.final_metrics)
}

/// True iff re-simulating the log reproduces every digest and final metric.
pub fn replay(log: &EpisodeLog) -> Result<bool> {
    replay_with(log, false)
}
