//! World representation, procedural generation and zone-dependent movement.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{EnvConfig, MAX_HETEROGENEITY};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn chebyshev(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

/// Heading of an agent. `y` grows downwards, so north is `-y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Orientation {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Self::North, Self::East, Self::South, Self::West];

    pub fn from_index(i: u8) -> Self {
        Self::ALL[(i & 3) as usize]
    }

    pub fn left(self) -> Self {
        Self::from_index(self as u8 + 3)
    }

    pub fn right(self) -> Self {
        Self::from_index(self as u8 + 1)
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Self::North => (0, -1),
            Self::East => (1, 0),
            Self::South => (0, 1),
            Self::West => (-1, 0),
        }
    }
}

/// Per-agent action. The numeric codes are part of the wire format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Action {
    TurnLeft = 0,
    TurnRight = 1,
    Forward = 2,
    NoOp = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Self::TurnLeft, Self::TurnRight, Self::Forward, Self::NoOp];
    pub const MOVEMENT: [Action; 3] = [Self::TurnLeft, Self::TurnRight, Self::Forward];

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// A permutation of the three movement actions, stored as the effective
/// action for each raw movement code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionPermutation(pub [Action; 3]);

impl ActionPermutation {
    pub const IDENTITY: Self = Self([Action::TurnLeft, Action::TurnRight, Action::Forward]);

    /// All of S3 in lexicographic order of the image tuple; identity first.
    pub const ALL: [Self; 6] = {
        use Action::{Forward as F, TurnLeft as L, TurnRight as R};
        [
            Self([L, R, F]),
            Self([L, F, R]),
            Self([R, L, F]),
            Self([R, F, L]),
            Self([F, L, R]),
            Self([F, R, L]),
        ]
    };

    pub fn apply(self, raw: Action) -> Action {
        match raw {
            Action::NoOp => Action::NoOp,
            a => self.0[a as usize],
        }
    }

    /// The raw action that this permutation maps onto `effective`.
    pub fn preimage(self, effective: Action) -> Action {
        match effective {
            Action::NoOp => Action::NoOp,
            e => Action::MOVEMENT
                .into_iter()
                .find(|&a| self.0[a as usize] == e)
                .expect("permutation is a bijection"),
        }
    }
}

/// One action permutation per zone; zone 0 is always the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionTable {
    perms: Vec<ActionPermutation>,
}

impl TransitionTable {
    pub fn from_perms(perms: Vec<ActionPermutation>) -> Self {
        Self { perms }
    }

    pub fn zones(&self) -> usize {
        self.perms.len()
    }

    pub fn perms(&self) -> &[ActionPermutation] {
        &self.perms
    }

    pub fn perm(&self, zone: usize) -> ActionPermutation {
        self.perms[zone]
    }
}

/// Builds the per-zone action permutations for an environment.
///
/// Zone 0 is the identity; zones `1..h` receive distinct non-identity
/// permutations drawn without replacement from `world_seed`.
pub fn build_transition_table(config: &EnvConfig, world_seed: u64) -> Result<TransitionTable> {
    let h = config.heterogeneity;
    if h > MAX_HETEROGENEITY {
        return Err(Error::UnsupportedHeterogeneity(h));
    }
    if h == 0 {
        return Err(Error::InvalidConfig("heterogeneity must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(world_seed);
    let mut perms = Vec::with_capacity(h);
    perms.push(ActionPermutation::IDENTITY);
    for i in index::sample(&mut rng, MAX_HETEROGENEITY - 1, h - 1) {
        perms.push(ActionPermutation::ALL[i + 1]);
    }
    Ok(TransitionTable { perms })
}

/// The action an agent actually performs in `zone`.
pub fn resolve_action(raw: Action, zone: usize, table: &TransitionTable) -> Action {
    table.perm(zone).apply(raw)
}

/// Static content of a grid cell. Keys and agents are tracked separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Wall,
    Empty,
    Treasure(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgentPose {
    pub pos: Pos,
    pub dir: Orientation,
}

/// Complete simulation state of one environment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldState {
    pub width: usize,
    pub height: usize,
    /// Row-major, `y * width + x`.
    pub cells: Vec<Cell>,
    /// Row-major zone id per cell.
    pub zone_map: Vec<u8>,
    pub zones: usize,
    pub agents: Vec<AgentPose>,
    /// Key id carried by each agent.
    pub key_held: Vec<Option<u16>>,
    pub treasure_pos: Vec<Pos>,
    pub treasure_active: Vec<bool>,
    /// `None` once a key has been picked up (or consumed).
    pub key_on_ground: Vec<Option<Pos>>,
    pub t: u32,
}

/// First column of each zone stripe, plus `width` as a sentinel.
pub fn stripe_bounds(width: usize, zones: usize) -> Vec<usize> {
    (0..=zones).map(|k| k * width / zones).collect()
}

fn column_zones(width: usize, zones: usize) -> Vec<u8> {
    let bounds = stripe_bounds(width, zones);
    let mut out = vec![0u8; width];
    for k in 0..zones {
        for z in &mut out[bounds[k]..bounds[k + 1]] {
            *z = k as u8;
        }
    }
    out
}

impl WorldState {
    /// A world of the given size with a wall border, no objects and no agents.
    pub fn empty(width: usize, height: usize, zones: usize) -> Self {
        let mut cells = vec![Cell::Empty; width * height];
        for y in 0..height {
            for x in 0..width {
                if x == 0 || y == 0 || x + 1 == width || y + 1 == height {
                    cells[y * width + x] = Cell::Wall;
                }
            }
        }
        let cols = column_zones(width, zones);
        let zone_map = (0..height).flat_map(|_| cols.iter().copied()).collect();
        Self {
            width,
            height,
            cells,
            zone_map,
            zones,
            agents: Vec::new(),
            key_held: Vec::new(),
            treasure_pos: Vec::new(),
            treasure_active: Vec::new(),
            key_on_ground: Vec::new(),
            t: 0,
        }
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    fn idx(&self, p: Pos) -> usize {
        p.y as usize * self.width + p.x as usize
    }

    /// Cell content, with everything outside the grid treated as wall.
    pub fn cell(&self, p: Pos) -> Cell {
        if self.in_bounds(p) {
            self.cells[self.idx(p)]
        } else {
            Cell::Wall
        }
    }

    pub fn set_cell(&mut self, p: Pos, cell: Cell) {
        let i = self.idx(p);
        self.cells[i] = cell;
    }

    pub fn zone_at(&self, p: Pos) -> usize {
        self.zone_map[self.idx(p)] as usize
    }

    pub fn is_wall(&self, p: Pos) -> bool {
        self.cell(p) == Cell::Wall
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn active_treasures(&self) -> usize {
        self.treasure_active.iter().filter(|&&a| a).count()
    }

    pub fn agents_at(&self, p: Pos) -> impl Iterator<Item = usize> + '_ {
        self.agents
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.pos == p)
            .map(|(i, _)| i)
    }

    /// Adds a treasure at `p` and returns its id.
    pub fn add_treasure(&mut self, p: Pos) -> usize {
        let id = self.treasure_pos.len();
        self.set_cell(p, Cell::Treasure(id as u16));
        self.treasure_pos.push(p);
        self.treasure_active.push(true);
        id
    }

    pub fn add_agent(&mut self, pos: Pos, dir: Orientation) -> usize {
        self.agents.push(AgentPose { pos, dir });
        self.key_held.push(None);
        self.agents.len() - 1
    }

    /// Structural invariants that must hold after every step.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (i, a) in self.agents.iter().enumerate() {
            if !self.in_bounds(a.pos) || self.is_wall(a.pos) {
                return Err(format!("agent {i} at {:?} is off-grid or in a wall", a.pos));
            }
        }
        for (k, ground) in self.key_on_ground.iter().enumerate() {
            let holders = self.key_held.iter().filter(|h| **h == Some(k as u16)).count();
            if holders > 1 || (holders == 1 && ground.is_some()) {
                return Err(format!("key {k} is both held and grounded, or held twice"));
            }
        }
        Ok(())
    }
}

/// Procedurally generates the start state of one episode.
///
/// Treasures, keys and agents land on distinct interior cells drawn uniformly
/// from `episode_seed`; agent headings are uniform too.
pub fn generate_world(config: &EnvConfig, episode_seed: u64) -> Result<WorldState> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let mut world = WorldState::empty(w, h, config.heterogeneity);
    let mut rng = ChaCha8Rng::seed_from_u64(episode_seed);

    let interior_w = w - 2;
    let interior = config.interior_cells();
    let n_keys = config.keys_in_play();
    let needed = config.n_treasures + n_keys + config.n_agents;
    if needed > interior {
        return Err(Error::Infeasible { needed, available: interior });
    }
    let to_pos = |i: usize| Pos::new((i % interior_w) as i32 + 1, (i / interior_w) as i32 + 1);
    let mut picks = index::sample(&mut rng, interior, needed).into_iter().map(to_pos);

    for _ in 0..config.n_treasures {
        let p = picks.next().expect("sampled enough cells");
        world.add_treasure(p);
    }
    for _ in 0..n_keys {
        world.key_on_ground.push(picks.next());
    }
    for _ in 0..config.n_agents {
        let p = picks.next().expect("sampled enough cells");
        let dir = Orientation::from_index(rng.random_range(0..4u8));
        world.add_agent(p, dir);
    }
    Ok(world)
}

/// Advances the world by one timestep.
///
/// Each agent's raw action is resolved through the permutation of the zone
/// it currently stands in. Movement is simultaneous and only walls block;
/// agents may share cells. Afterwards, agents without a key pick up a
/// grounded key on their cell, lowest index first.
pub fn step_world(state: &mut WorldState, joint_action: &[Action], table: &TransitionTable) {
    debug_assert_eq!(joint_action.len(), state.agents.len());
    for (i, &raw) in joint_action.iter().enumerate() {
        let pose = state.agents[i];
        let zone = state.zone_at(pose.pos);
        let pose = match resolve_action(raw, zone, table) {
            Action::TurnLeft => AgentPose { dir: pose.dir.left(), ..pose },
            Action::TurnRight => AgentPose { dir: pose.dir.right(), ..pose },
            Action::Forward => {
                let (dx, dy) = pose.dir.delta();
                let next = pose.pos.offset(dx, dy);
                if state.is_wall(next) {
                    pose
                } else {
                    AgentPose { pos: next, ..pose }
                }
            }
            Action::NoOp => pose,
        };
        state.agents[i] = pose;
    }

    if !state.key_on_ground.is_empty() {
        for i in 0..state.agents.len() {
            if state.key_held[i].is_some() {
                continue;
            }
            let pos = state.agents[i].pos;
            if let Some(k) = state.key_on_ground.iter().position(|g| *g == Some(pos)) {
                state.key_on_ground[k] = None;
                state.key_held[i] = Some(k as u16);
            }
        }
    }
    state.t += 1;
}
