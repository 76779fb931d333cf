//! Built-in policies for rollouts, benchmarks and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Task;
use crate::grid::{Action, Orientation, Pos, WorldState};
use crate::vecenv::{Batch, Env};

pub trait Policy {
    /// Fills `out` with `B x N` action codes for the current batch state.
    fn act(&mut self, batch: &Batch, out: &mut Vec<u8>);
}

/// Uniform over the four actions.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, batch: &Batch, out: &mut Vec<u8>) {
        out.clear();
        let n = batch.len() * batch.config().n_agents;
        out.extend((0..n).map(|_| self.rng.random_range(0..4u8)));
    }
}

/// Privileged greedy controller.
///
/// Every agent heads for the lowest-index active treasure (or, in
/// `KeyForTreasure` while nobody carries a key, the nearest grounded key) and
/// inverts its zone's action permutation so it moves as intended.
#[derive(Default)]
pub struct ScriptedPolicy;

impl Policy for ScriptedPolicy {
    fn act(&mut self, batch: &Batch, out: &mut Vec<u8>) {
        out.clear();
        for env in batch.envs() {
            scripted_actions(env, out);
        }
    }
}

fn nearest(from: Pos, targets: impl Iterator<Item = Pos>) -> Option<Pos> {
    targets.min_by_key(|p| (p.x.abs_diff(from.x) + p.y.abs_diff(from.y), p.y, p.x))
}

/// Effective action that brings an agent at `pose` one move closer to `target`.
fn steer(pos: Pos, dir: Orientation, target: Pos) -> Action {
    let (dx, dy) = (target.x - pos.x, target.y - pos.y);
    if dx == 0 && dy == 0 {
        return Action::NoOp;
    }
    let want = if dx.abs() >= dy.abs() {
        if dx > 0 { Orientation::East } else { Orientation::West }
    } else if dy > 0 {
        Orientation::South
    } else {
        Orientation::North
    };
    if want == dir {
        Action::Forward
    } else if want == dir.right() {
        Action::TurnRight
    } else {
        Action::TurnLeft
    }
}

fn target_for(world: &WorldState, task: Task, agent: usize) -> Option<Pos> {
    let pos = world.agents[agent].pos;
    let team_has_key = world.key_held.iter().any(Option::is_some);
    if task == Task::KeyForTreasure && !team_has_key {
        if let Some(k) = nearest(pos, world.key_on_ground.iter().flatten().copied()) {
            return Some(k);
        }
    }
    world
        .treasure_active
        .iter()
        .position(|&a| a)
        .map(|id| world.treasure_pos[id])
}

fn scripted_actions(env: &Env, out: &mut Vec<u8>) {
    let world = env.world();
    let task = env.config().task;
    for (i, pose) in world.agents.iter().enumerate() {
        let effective = match target_for(world, task, i) {
            Some(target) => steer(pose.pos, pose.dir, target),
            None => Action::NoOp,
        };
        let raw = env.table().perm(world.zone_at(pose.pos)).preimage(effective);
        out.push(raw.code());
    }
}
