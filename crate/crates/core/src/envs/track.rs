//! Procedurally generated grid racetrack with a kinematic car.
//!
//! Tracks are closed loops of unit grid tiles. Generation starts from a
//! rectangle and applies `curvature` random bumps, each pushing a straight run
//! of tiles one cell sideways; a bump is kept only if the loop stays simple
//! (every tile has exactly two track neighbours, both its loop neighbours).
//!
//! The car is a unicycle: steering turns the heading at a bounded rate, gas
//! and brake change speed, and friction is higher off the track. None of this
//! mimics a particular physics engine. The agent sees an egocentric pixel patch
//! and is scored by [`tile_fitness`].

use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, Image, Observation, Transition};
use crate::error::{Error, Result};
use crate::seed;

/// `1000 * visited / total - 0.1 * frames`, correctly rounded: the formula
/// is brought over the common denominator `10 * total` so the only rounding
/// is the final division.
pub fn tile_fitness(tiles_visited: usize, total_tiles: usize, frames: usize) -> f64 {
    assert!(total_tiles > 0, "track must have tiles");
    assert!(tiles_visited <= total_tiles, "visited more tiles than exist");
    let num = 10_000 * tiles_visited as i128 - total_tiles as i128 * frames as i128;
    num as f64 / (10 * total_tiles) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackParams {
    pub grid_size: i32,
    pub base_width: i32,
    pub base_height: i32,
    /// Number of bumps applied to the base rectangle.
    pub curvature: usize,
    pub max_attempts: usize,
    /// Side of the square observation patch.
    pub patch: usize,
    /// Render 3x84x84 RGB-like frames instead of the single-channel patch.
    pub rgb_frames: bool,
    pub view_ahead: f64,
    pub view_behind: f64,
    pub view_side: f64,
    pub max_speed: f64,
    pub acceleration: f64,
    pub braking: f64,
    pub turn_rate: f64,
    pub friction: f64,
    pub offtrack_friction: f64,
}

impl Default for TrackParams {
    fn default() -> Self {
        TrackParams {
            grid_size: 24,
            base_width: 12,
            base_height: 9,
            curvature: 10,
            max_attempts: 400,
            patch: 16,
            rgb_frames: false,
            view_ahead: 4.0,
            view_behind: 1.0,
            view_side: 2.5,
            max_speed: 0.5,
            acceleration: 0.05,
            braking: 0.1,
            turn_rate: 0.25,
            friction: 0.02,
            offtrack_friction: 0.15,
        }
    }
}

/// Closed loop of grid tiles in driving order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Track {
    pub seed: u64,
    pub grid_size: i32,
    pub tiles: Vec<(i32, i32)>,
}

impl Track {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn adjacent(a: (i32, i32), b: (i32, i32)) -> bool {
    (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1
}

/// True when `tiles` is a closed 4-connected loop that never touches itself.
pub fn is_simple_loop(tiles: &[(i32, i32)]) -> bool {
    let n = tiles.len();
    if n < 4 {
        return false;
    }
    let set: HashSet<_> = tiles.iter().copied().collect();
    if set.len() != n {
        return false;
    }
    for k in 0..n {
        if !adjacent(tiles[k], tiles[(k + 1) % n]) {
            return false;
        }
    }
    tiles.iter().all(|&(x, y)| {
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .filter(|(dx, dy)| set.contains(&(x + dx, y + dy)))
            .count()
            == 2
    })
}

fn rectangle(x0: i32, y0: i32, w: i32, h: i32) -> Vec<(i32, i32)> {
    let mut tiles = Vec::new();
    for x in x0..x0 + w {
        tiles.push((x, y0));
    }
    for y in y0 + 1..y0 + h {
        tiles.push((x0 + w - 1, y));
    }
    for x in (x0..x0 + w - 1).rev() {
        tiles.push((x, y0 + h - 1));
    }
    for y in (y0 + 1..y0 + h - 1).rev() {
        tiles.push((x0, y));
    }
    tiles
}

/// Pushes the straight run starting at `start` of `len` tiles one cell along
/// `normal`, keeping the run's end tiles. Returns `None` if the run is not
/// straight.
fn bump(tiles: &[(i32, i32)], start: usize, len: usize, normal: (i32, i32)) -> Option<Vec<(i32, i32)>> {
    let n = tiles.len();
    if len < 3 || len >= n {
        return None;
    }
    let at = |k: usize| tiles[(start + k) % n];
    let dir = (at(1).0 - at(0).0, at(1).1 - at(0).1);
    if (1..len).any(|k| (at(k).0 - at(k - 1).0, at(k).1 - at(k - 1).1) != dir) {
        return None;
    }
    let mut out = Vec::with_capacity(n + 2);
    out.push(at(0));
    for k in 0..len {
        let p = at(k);
        out.push((p.0 + normal.0, p.1 + normal.1));
    }
    out.push(at(len - 1));
    for k in len..n {
        out.push(at(k));
    }
    // keep tile 0 of the original loop first so the start line is stable
    let first = tiles[0];
    let pos = out.iter().position(|&t| t == first).unwrap_or(0);
    out.rotate_left(pos);
    Some(out)
}

/// Restarts from the base rectangle allowed when bumping stalls.
const GENERATION_ROUNDS: usize = 8;

/// Builds a track from `seed`. Deterministic. Bumping can paint itself into
/// a corner, so a round that spends `max_attempts` without finishing starts
/// over from the rectangle, drawing on the same stream.
pub fn generate_track(seed: u64, params: &TrackParams) -> Result<Track> {
    let (w, h, g) = (params.base_width, params.base_height, params.grid_size);
    if w < 3 || h < 3 || w > g - 2 || h > g - 2 {
        return Err(Error::Invalid(format!("base rectangle {w}x{h} does not fit a {g} grid")));
    }
    let mut rng = seed::rng(seed::derive(&[seed::tag::ENV, seed]));
    let base = rectangle((g - w) / 2, (g - h) / 2, w, h);
    let in_grid = |t: &(i32, i32)| t.0 >= 0 && t.1 >= 0 && t.0 < g && t.1 < g;
    for _round in 0..GENERATION_ROUNDS {
        let mut tiles = base.clone();
        let mut applied = 0;
        for _ in 0..params.max_attempts {
            if applied == params.curvature {
                break;
            }
            let start = rng.random_range(0..tiles.len());
            let len = rng.random_range(3..=6);
            let normal = [(1, 0), (-1, 0), (0, 1), (0, -1)][rng.random_range(0..4)];
            if let Some(candidate) = bump(&tiles, start, len, normal) {
                if candidate.iter().all(in_grid) && is_simple_loop(&candidate) {
                    tiles = candidate;
                    applied += 1;
                }
            }
        }
        if applied == params.curvature {
            return Ok(Track { seed, grid_size: g, tiles });
        }
    }
    Err(Error::TrackGeneration { seed, attempts: GENERATION_ROUNDS * params.max_attempts })
}

/// Car-on-track episode.
#[derive(Debug)]
pub struct TrackEnv {
    params: TrackParams,
    horizon: usize,
    track: Option<Arc<Track>>,
    fixed: Option<Arc<Track>>,
    index: Vec<i32>,
    visited: Vec<bool>,
    visited_count: usize,
    x: f64,
    y: f64,
    heading: f64,
    speed: f64,
    t: usize,
    done: bool,
}

impl TrackEnv {
    pub fn new(params: TrackParams, horizon: usize) -> Self {
        TrackEnv {
            params,
            horizon,
            track: None,
            fixed: None,
            index: Vec::new(),
            visited: Vec::new(),
            visited_count: 0,
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            speed: 0.0,
            t: 0,
            done: true,
        }
    }

    /// Drives the same track every episode instead of generating one per seed.
    pub fn with_fixed_track(mut self, track: Arc<Track>) -> Self {
        self.fixed = Some(track);
        self
    }

    pub fn track(&self) -> Option<&Arc<Track>> {
        self.track.as_ref()
    }

    pub fn tiles_visited(&self) -> usize {
        self.visited_count
    }

    pub fn position(&self) -> (f64, f64, f64) {
        (self.x, self.y, self.heading)
    }

    fn tile_at(&self, x: f64, y: f64) -> Option<usize> {
        let g = self.params.grid_size;
        let (cx, cy) = (x.floor() as i64, y.floor() as i64);
        if cx < 0 || cy < 0 || cx >= g as i64 || cy >= g as i64 {
            return None;
        }
        let k = self.index[(cy * g as i64 + cx) as usize];
        (k >= 0).then_some(k as usize)
    }

    fn render(&self) -> Observation {
        let (channels, side) = if self.params.rgb_frames { (3, 84) } else { (1, self.params.patch) };
        let mut img = Image::zeros(channels, side, side);
        let (fx, fy) = (self.heading.cos(), self.heading.sin());
        let (lx, ly) = (-fy, fx);
        let depth = self.params.view_ahead + self.params.view_behind;
        for r in 0..side {
            let fwd = self.params.view_ahead - (r as f64 + 0.5) / side as f64 * depth;
            for c in 0..side {
                let lat = self.params.view_side - (c as f64 + 0.5) / side as f64 * 2.0 * self.params.view_side;
                let (px, py) = (self.x + fwd * fx + lat * lx, self.y + fwd * fy + lat * ly);
                let tile = self.tile_at(px, py);
                if channels == 1 {
                    img.data[r * side + c] = if tile.is_some() { 1.0 } else { 0.0 };
                } else {
                    let plane = side * side;
                    let on = tile.is_some();
                    let seen = tile.is_some_and(|k| self.visited[k]);
                    img.data[r * side + c] = if on && !seen { 1.0 } else if on { 0.5 } else { 0.0 };
                    img.data[plane + r * side + c] = if on { 0.0 } else { 1.0 };
                    img.data[2 * plane + r * side + c] = if seen { 1.0 } else { 0.0 };
                }
            }
        }
        Observation::Image(img)
    }
}

impl Environment for TrackEnv {
    fn action_dim(&self) -> usize {
        3
    }

    fn reset(&mut self, seed: u64) -> Result<Observation> {
        let track = match &self.fixed {
            Some(t) => t.clone(),
            None => Arc::new(generate_track(seed, &self.params)?),
        };
        let g = track.grid_size;
        self.index = vec![-1; (g * g) as usize];
        for (k, &(x, y)) in track.tiles.iter().enumerate() {
            self.index[(y * g + x) as usize] = k as i32;
        }
        let (a, b) = (track.tiles[0], track.tiles[1]);
        self.x = a.0 as f64 + 0.5;
        self.y = a.1 as f64 + 0.5;
        self.heading = ((b.1 - a.1) as f64).atan2((b.0 - a.0) as f64);
        self.speed = 0.0;
        self.visited = vec![false; track.len()];
        self.visited[0] = true;
        self.visited_count = 0;
        self.t = 0;
        self.done = false;
        self.track = Some(track);
        Ok(self.render())
    }

    /// Action is `[steer, gas, brake]`; gas and brake use only their positive
    /// part.
    fn step(&mut self, action: &[f64]) -> Result<Transition> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        if action.len() != 3 {
            return Err(Error::shape("track action", 3, action.len()));
        }
        let p = &self.params;
        let steer = action[0].clamp(-1.0, 1.0);
        let gas = action[1].clamp(0.0, 1.0);
        let brake = action[2].clamp(0.0, 1.0);
        let on_track = self.tile_at(self.x, self.y).is_some();
        let friction = if on_track { p.friction } else { p.offtrack_friction };
        self.heading += p.turn_rate * steer;
        self.heading = (self.heading + PI).rem_euclid(2.0 * PI) - PI;
        self.speed += p.acceleration * gas - p.braking * brake - friction * self.speed;
        self.speed = self.speed.clamp(0.0, p.max_speed);
        self.x += self.speed * self.heading.cos();
        self.y += self.speed * self.heading.sin();
        self.t += 1;

        let total = self.visited.len();
        let mut reward = -0.1;
        if let Some(k) = self.tile_at(self.x, self.y) {
            if !self.visited[k] {
                self.visited[k] = true;
                self.visited_count += 1;
                reward += 1000.0 / total as f64;
            }
            // crossing back onto the start tile after the rest completes the lap
            if k == 0 && self.visited_count == total - 1 {
                self.visited_count = total;
                reward += 1000.0 / total as f64;
            }
        }
        let margin = 3.0;
        let g = p.grid_size as f64;
        let escaped = self.x < -margin || self.y < -margin || self.x > g + margin || self.y > g + margin;
        self.done = self.t >= self.horizon || self.visited_count == total || escaped;
        Ok(Transition {
            observation: self.render(),
            reward,
            done: self.done,
        })
    }
}

/// Heading from tile `a` to adjacent tile `b`, for scripted drivers.
pub fn heading_between(a: (i32, i32), b: (i32, i32)) -> f64 {
    match (b.0 - a.0, b.1 - a.1) {
        (1, 0) => 0.0,
        (0, 1) => FRAC_PI_2,
        (-1, 0) => PI,
        _ => -FRAC_PI_2,
    }
}
