use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of zones: the number of distinct permutations of the three
/// movement actions.
pub const MAX_HETEROGENEITY: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// `c` agents must stand on a treasure at the same time.
    TeamTogether,
    /// One agent on the treasure plus enough supporters within a radius.
    TeamSupport,
    /// Like `TeamTogether`, and one of the agents on the treasure must carry a key.
    KeyForTreasure,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::TeamTogether, Task::TeamSupport, Task::KeyForTreasure];

    pub fn name(self) -> &'static str {
        match self {
            Task::TeamTogether => "team_together",
            Task::TeamSupport => "team_support",
            Task::KeyForTreasure => "key_for_treasure",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown task {s:?}")))
    }
}

/// Every knob of an environment instance.
///
/// Serialised as JSON with the field names below; missing fields fall back to
/// [`EnvConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub task: Task,
    pub width: usize,
    pub height: usize,
    pub n_agents: usize,
    pub n_treasures: usize,
    /// Coordination level `c`.
    pub coordination: usize,
    /// Heterogeneity level `h`, the number of zones.
    pub heterogeneity: usize,
    /// Chebyshev radius used by `TeamSupport`.
    pub support_radius: usize,
    /// Keys placed per episode (`KeyForTreasure` only).
    pub n_keys: usize,
    pub episode_length: u32,
    pub view_size: usize,
    /// Seed of the environment itself; fixes the zone transition table.
    pub seed: u64,
    pub reward_per_treasure: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            task: Task::TeamTogether,
            width: 20,
            height: 20,
            n_agents: 4,
            n_treasures: 8,
            coordination: 1,
            heterogeneity: 1,
            support_radius: 2,
            n_keys: 4,
            episode_length: 256,
            view_size: 7,
            seed: 0,
            reward_per_treasure: 1.0,
        }
    }
}

impl EnvConfig {
    /// Default configuration for `task` with `n_keys` tracking `n_agents`.
    pub fn new(task: Task, n_agents: usize, coordination: usize, heterogeneity: usize) -> Self {
        Self {
            task,
            n_agents,
            n_keys: n_agents,
            coordination,
            heterogeneity,
            ..Self::default()
        }
    }

    /// Keys actually placed in the world.
    pub fn keys_in_play(&self) -> usize {
        match self.task {
            Task::KeyForTreasure => self.n_keys,
            _ => 0,
        }
    }

    pub fn interior_cells(&self) -> usize {
        self.width.saturating_sub(2) * self.height.saturating_sub(2)
    }

    /// Number of floats in one agent's observation.
    pub fn obs_len(&self) -> usize {
        self.view_size * self.view_size * 3
    }

    /// Checks every structural invariant, including placement feasibility.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_agents == 0 {
            return bad("n_agents must be positive".into());
        }
        if self.n_treasures == 0 {
            return bad("n_treasures must be positive".into());
        }
        if self.coordination == 0 || self.coordination > self.n_agents {
            return bad(format!(
                "coordination {} must be in 1..={}",
                self.coordination, self.n_agents
            ));
        }
        if self.heterogeneity == 0 {
            return bad("heterogeneity must be positive".into());
        }
        if self.heterogeneity > MAX_HETEROGENEITY {
            return Err(Error::UnsupportedHeterogeneity(self.heterogeneity));
        }
        if self.width < 3 || self.height < 3 {
            return bad(format!("grid {}x{} has no interior", self.width, self.height));
        }
        if self.width < self.heterogeneity {
            return bad(format!(
                "width {} cannot hold {} zone stripes",
                self.width, self.heterogeneity
            ));
        }
        if self.width > u16::MAX as usize || self.height > u16::MAX as usize {
            return bad("grid dimensions must fit in 16 bits".into());
        }
        if self.view_size == 0 || self.view_size.is_multiple_of(2) {
            return bad(format!("view_size {} must be odd", self.view_size));
        }
        if self.task == Task::KeyForTreasure && self.n_keys == 0 {
            return bad("key_for_treasure needs at least one key".into());
        }
        if self.episode_length == 0 {
            return bad("episode_length must be positive".into());
        }
        if !(self.reward_per_treasure.is_finite()) {
            return bad("reward_per_treasure must be finite".into());
        }
        let needed = self.n_agents + self.n_treasures + self.keys_in_play();
        let available = self.interior_cells();
        if needed > available {
            return Err(Error::Infeasible { needed, available });
        }
        Ok(())
    }

    /// JSON with lexicographically sorted keys and no insignificant whitespace.
    pub fn to_canonical_json(&self) -> String {
        // serde_json::Value maps are ordered by key.
        let value = serde_json::to_value(self).expect("config serialises");
        serde_json::to_string(&value).expect("value serialises")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}
