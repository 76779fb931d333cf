//! Egocentric image observations.
//!
//! Each agent sees a `V x V` window centred on itself and rotated so that its
//! heading points up. One pixel per cell, RGB in `[0, 1]`, row-major and
//! channel-last.

use crate::error::{Error, Result};
use crate::grid::{Cell, Pos, WorldState};

pub type Rgb = [f32; 3];

pub const EMPTY: Rgb = [0.0, 0.0, 0.0];
pub const WALL: Rgb = [0.5, 0.5, 0.5];
pub const TREASURE: Rgb = [1.0, 1.0, 0.0];
pub const COLLECTED: Rgb = [0.3, 0.3, 0.3];
pub const KEY: Rgb = [0.0, 1.0, 1.0];
pub const OTHER: Rgb = [1.0, 0.0, 0.0];
pub const OTHER_WITH_KEY: Rgb = [1.0, 0.0, 1.0];
pub const SELF: Rgb = [0.0, 0.0, 1.0];
pub const SELF_WITH_KEY: Rgb = [0.0, 0.5, 1.0];

/// Green added to empty cells in the last zone is just under this.
pub const ZONE_TINT: f32 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub view: usize,
    pub pixels: Vec<f32>,
}

impl Observation {
    pub fn pixel(&self, row: usize, col: usize) -> Rgb {
        let i = (row * self.view + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Colour of the world cell `p` as seen by `viewer`.
fn cell_color(state: &WorldState, viewer: usize, p: Pos) -> Rgb {
    let cell = state.cell(p);
    if cell == Cell::Wall {
        return WALL;
    }
    let mut other = None;
    for (i, a) in state.agents.iter().enumerate() {
        if i != viewer && a.pos == p {
            let carrying = state.key_held[i].is_some();
            other = Some(other.unwrap_or(false) || carrying);
        }
    }
    if let Some(carrying) = other {
        return if carrying { OTHER_WITH_KEY } else { OTHER };
    }
    if state.key_on_ground.contains(&Some(p)) {
        return KEY;
    }
    match cell {
        Cell::Treasure(id) if state.treasure_active[id as usize] => TREASURE,
        Cell::Treasure(_) => COLLECTED,
        _ => {
            let zone = state.zone_at(p) as f32;
            let tint = (ZONE_TINT * zone / state.zones as f32).clamp(0.0, 1.0);
            [0.0, tint, 0.0]
        }
    }
}

/// Renders agent `agent`'s view into `out`, which must hold `view * view * 3`
/// floats.
pub fn render_into(state: &WorldState, agent: usize, view: usize, out: &mut [f32]) {
    debug_assert_eq!(out.len(), view * view * 3);
    let pose = state.agents[agent];
    let (fx, fy) = pose.dir.delta();
    let (rx, ry) = pose.dir.right().delta();
    let half = (view / 2) as i32;
    for row in 0..view {
        let ahead = half - row as i32;
        for col in 0..view {
            let side = col as i32 - half;
            let p = pose.pos.offset(ahead * fx + side * rx, ahead * fy + side * ry);
            let rgb = cell_color(state, agent, p);
            let i = (row * view + col) * 3;
            out[i..i + 3].copy_from_slice(&rgb);
        }
    }
    let centre = (half as usize * view + half as usize) * 3;
    let me = if state.key_held[agent].is_some() { SELF_WITH_KEY } else { SELF };
    out[centre..centre + 3].copy_from_slice(&me);
}

pub fn render_observation(state: &WorldState, agent: usize, view: usize) -> Result<Observation> {
    if agent >= state.n_agents() {
        return Err(Error::InvalidAgent { agent, n_agents: state.n_agents() });
    }
    if view.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("view_size {view} must be odd")));
    }
    let mut pixels = vec![0.0; view * view * 3];
    render_into(state, agent, view, &mut pixels);
    Ok(Observation { view, pixels })
}

/// Top-down text rendering of a whole world, one character per cell.
///
/// `#` wall, `T` active treasure, `t` collected, `k` key, digits agents
/// (lowest index on the cell), `.` empty.
pub fn render_ascii(state: &WorldState) -> String {
    let mut s = String::with_capacity((state.width + 1) * state.height);
    for y in 0..state.height as i32 {
        for x in 0..state.width as i32 {
            let p = Pos::new(x, y);
            let ch = if let Some(i) = state.agents_at(p).next() {
                char::from_digit((i % 36) as u32, 36).unwrap_or('@')
            } else if state.key_on_ground.contains(&Some(p)) {
                'k'
            } else {
                match state.cell(p) {
                    Cell::Wall => '#',
                    Cell::Treasure(id) if state.treasure_active[id as usize] => 'T',
                    Cell::Treasure(_) => 't',
                    Cell::Empty => '.',
                }
            };
            s.push(ch);
        }
        s.push('\n');
    }
    s
}
