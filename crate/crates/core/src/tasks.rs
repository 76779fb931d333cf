//! Collection rules of the three tasks and the shared team reward.
//!
//! All checks run once per timestep on the post-movement state. They
//! deactivate collected treasures (and consume keys) in place and report one
//! [`CollectionEvent`] per collected treasure.

use crate::config::{EnvConfig, Task};
use crate::grid::WorldState;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectionEvent {
    pub treasure: usize,
    /// Agents credited with the collection, ascending.
    pub agents: Vec<usize>,
    pub t: u32,
}

/// Per-agent reward for one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector(pub Vec<f64>);

impl RewardVector {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Treasures whose cell holds at least `c` agents.
pub fn check_team_together(state: &mut WorldState, c: usize) -> Vec<CollectionEvent> {
    let mut events = Vec::new();
    for id in 0..state.treasure_pos.len() {
        if !state.treasure_active[id] {
            continue;
        }
        let on_cell: Vec<usize> = state.agents_at(state.treasure_pos[id]).collect();
        if on_cell.len() >= c {
            state.treasure_active[id] = false;
            events.push(CollectionEvent { treasure: id, agents: on_cell, t: state.t });
        }
    }
    events
}

/// Treasures with an agent on the cell and at least `c` agents (the collector
/// included) within Chebyshev distance `support_radius` of it. Supporters may
/// count toward several treasures in the same step.
pub fn check_team_support(
    state: &mut WorldState,
    c: usize,
    support_radius: usize,
) -> Vec<CollectionEvent> {
    let radius = support_radius as u32;
    let mut events = Vec::new();
    for id in 0..state.treasure_pos.len() {
        if !state.treasure_active[id] {
            continue;
        }
        let target = state.treasure_pos[id];
        if state.agents_at(target).next().is_none() {
            continue;
        }
        let support: Vec<usize> = state
            .agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.pos.chebyshev(target) <= radius)
            .map(|(i, _)| i)
            .collect();
        if support.len() >= c {
            state.treasure_active[id] = false;
            events.push(CollectionEvent { treasure: id, agents: support, t: state.t });
        }
    }
    events
}

/// As [`check_team_together`], and one of the agents on the cell must hold a
/// key. The lowest-index holder's key is consumed.
pub fn check_key_for_treasure(state: &mut WorldState, c: usize) -> Vec<CollectionEvent> {
    let mut events = Vec::new();
    for id in 0..state.treasure_pos.len() {
        if !state.treasure_active[id] {
            continue;
        }
        let on_cell: Vec<usize> = state.agents_at(state.treasure_pos[id]).collect();
        if on_cell.len() < c {
            continue;
        }
        let Some(&holder) = on_cell.iter().find(|&&i| state.key_held[i].is_some()) else {
            continue;
        };
        state.key_held[holder] = None;
        state.treasure_active[id] = false;
        events.push(CollectionEvent { treasure: id, agents: on_cell, t: state.t });
    }
    events
}

/// Runs the collection rule of `config.task`.
pub fn check_collection(state: &mut WorldState, config: &EnvConfig) -> Vec<CollectionEvent> {
    match config.task {
        Task::TeamTogether => check_team_together(state, config.coordination),
        Task::TeamSupport => check_team_support(state, config.coordination, config.support_radius),
        Task::KeyForTreasure => check_key_for_treasure(state, config.coordination),
    }
}

/// Splits `r_unit` per event equally over all `n_agents`.
pub fn compute_rewards(events: &[CollectionEvent], n_agents: usize, r_unit: f64) -> RewardVector {
    let each = events.len() as f64 * r_unit / n_agents as f64;
    RewardVector(vec![each; n_agents])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Orientation, Pos};

    fn world_with_treasure() -> WorldState {
        let mut w = WorldState::empty(12, 12, 1);
        w.add_treasure(Pos::new(5, 5));
        w
    }

    fn place(w: &mut WorldState, p: Pos) -> usize {
        w.add_agent(p, Orientation::North)
    }

    #[test]
    fn together_two_on_cell_collects() {
        let mut w = world_with_treasure();
        place(&mut w, Pos::new(5, 5));
        place(&mut w, Pos::new(5, 5));
        let ev = check_team_together(&mut w, 2);
        assert_eq!(ev, vec![CollectionEvent { treasure: 0, agents: vec![0, 1], t: 0 }]);
        assert!(!w.treasure_active[0]);
    }

    #[test]
    fn together_one_on_cell_below_threshold() {
        let mut w = world_with_treasure();
        place(&mut w, Pos::new(5, 5));
        place(&mut w, Pos::new(5, 6));
        assert!(check_team_together(&mut w, 2).is_empty());
        assert!(w.treasure_active[0]);
    }

    #[test]
    fn together_three_on_cell_lists_all() {
        let mut w = world_with_treasure();
        for _ in 0..3 {
            place(&mut w, Pos::new(5, 5));
        }
        let ev = check_team_together(&mut w, 2);
        assert_eq!(ev[0].agents, vec![0, 1, 2]);
    }

    #[test]
    fn collected_treasure_never_fires_again() {
        let mut w = world_with_treasure();
        place(&mut w, Pos::new(5, 5));
        assert_eq!(check_team_together(&mut w, 1).len(), 1);
        assert!(check_team_together(&mut w, 1).is_empty());
    }

    #[test]
    fn support_within_radius_two() {
        let mut w = world_with_treasure();
        place(&mut w, Pos::new(5, 5));
        place(&mut w, Pos::new(7, 3));
        assert_eq!(check_team_support(&mut w, 2, 2).len(), 1);
    }

    #[test]
    fn support_three_cells_away_fails() {
        let mut w = world_with_treasure();
        place(&mut w, Pos::new(5, 5));
        place(&mut w, Pos::new(8, 5));
        assert!(check_team_support(&mut w, 2, 2).is_empty());
    }

    #[test]
    fn support_needs_an_agent_on_the_cell() {
        let mut w = world_with_treasure();
        place(&mut w, Pos::new(5, 6));
        place(&mut w, Pos::new(6, 5));
        assert!(check_team_support(&mut w, 2, 2).is_empty());
    }

    #[test]
    fn supporter_counts_toward_two_treasures() {
        // X at (5,5) and Y at (7,5). A stands on X, B stands on Y, C sits between.
        let mut w = world_with_treasure();
        w.add_treasure(Pos::new(7, 5));
        let a = place(&mut w, Pos::new(5, 5));
        let b = place(&mut w, Pos::new(7, 5));
        let c = place(&mut w, Pos::new(6, 6));
        let ev = check_team_support(&mut w, 3, 2);
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].agents, vec![a, b, c]);
        assert_eq!(ev[1].agents, vec![a, b, c]);
    }

    #[test]
    fn support_exhaustive_count_with_far_agent() {
        // X at (5,5), Y at (9,5). A on X, B on Y, C at (7,5) supports both.
        // X: {A, C} within 2 -> 2 < 3, not collected. Y: {B, C} -> 2 < 3.
        // Add D at (10,6): Y support {B, C, D} = 3 -> collected; X unchanged.
        let mut w = world_with_treasure();
        w.add_treasure(Pos::new(9, 5));
        place(&mut w, Pos::new(5, 5));
        place(&mut w, Pos::new(9, 5));
        place(&mut w, Pos::new(7, 5));
        assert!(check_team_support(&mut w.clone(), 3, 2).is_empty());
        place(&mut w, Pos::new(10, 6));
        let ev = check_team_support(&mut w, 3, 2);
        assert_eq!(ev, vec![CollectionEvent { treasure: 1, agents: vec![1, 2, 3], t: 0 }]);
        assert!(w.treasure_active[0]);
    }

    #[test]
    fn key_holder_alone_collects_at_c1() {
        let mut w = world_with_treasure();
        let a = place(&mut w, Pos::new(5, 5));
        w.key_held[a] = Some(0);
        assert_eq!(check_key_for_treasure(&mut w, 1).len(), 1);
        assert_eq!(w.key_held[a], None);
    }

    #[test]
    fn no_key_no_collection() {
        let mut w = world_with_treasure();
        place(&mut w, Pos::new(5, 5));
        place(&mut w, Pos::new(5, 5));
        assert!(check_key_for_treasure(&mut w, 2).is_empty());
        assert!(w.treasure_active[0]);
    }

    #[test]
    fn one_key_among_two_suffices() {
        let mut w = world_with_treasure();
        place(&mut w, Pos::new(5, 5));
        let b = place(&mut w, Pos::new(5, 5));
        w.key_held[b] = Some(2);
        let ev = check_key_for_treasure(&mut w, 2);
        assert_eq!(ev[0].agents, vec![0, 1]);
        assert_eq!(w.key_held, vec![None, None]);
    }

    #[test]
    fn lowest_index_holder_loses_key() {
        let mut w = world_with_treasure();
        for k in 0..3 {
            let i = place(&mut w, Pos::new(5, 5));
            w.key_held[i] = Some(k);
        }
        check_key_for_treasure(&mut w, 2);
        assert_eq!(w.key_held, vec![None, Some(1), Some(2)]);
    }

    #[test]
    fn reward_split() {
        let ev = |id| CollectionEvent { treasure: id, agents: vec![0], t: 0 };
        assert_eq!(compute_rewards(&[], 4, 1.0).0, vec![0.0; 4]);
        assert_eq!(compute_rewards(&[ev(0), ev(1)], 4, 1.0).0, vec![0.5; 4]);
        assert_eq!(compute_rewards(&[ev(0)], 1, 1.0).0, vec![1.0]);
    }
}
