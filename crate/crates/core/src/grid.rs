//! Shared-resource grid world.
//!
//! Agents roam a bounded grid of regenerating resource tiles. Harvesting
//! draws from the richest ready tile in the 3x3 neighbourhood; draining a
//! tile below its depletion threshold knocks it into a recovery cooldown
//! during which it yields nothing and does not regrow. Several agents
//! harvesting the same tile in the same step is a conflict: one uniformly
//! chosen contender collects, the rest walk away empty-handed.
//!
//! Step order is moves, then tile recovery/regrowth, then harvests, so a
//! tile freed from cooldown this step is immediately harvestable.

use std::collections::BTreeMap;

use crate::rng::RngStream;
use crate::signals::Observation;
use crate::sim::{AgentSlot, Environment, EpisodeDetail, PendingStep, StateKey};

pub const GRID_ACTIONS: usize = 6;

/// Action indices: four moves, stay, harvest.
pub const NORTH: usize = 0;
pub const SOUTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;
pub const STAY: usize = 4;
pub const HARVEST: usize = 5;

#[derive(Clone, Copy, Debug)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub n_agents: usize,
    /// Resource level every tile starts at, and regrows back toward.
    pub initial_amount: f64,
    /// Units removed by one successful harvest.
    pub harvest_yield: f64,
    /// Steps a depleted tile spends recovering.
    pub cooldown_steps: u32,
    /// Regrowth per step for ready tiles below the initial level.
    pub regrow_per_step: f64,
    pub steps_per_episode: usize,
    /// Resource level below which a tile counts as depleted.
    pub depleted_threshold: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            width: 15,
            height: 15,
            n_agents: 4,
            initial_amount: 5.0,
            harvest_yield: 1.0,
            cooldown_steps: 10,
            regrow_per_step: 0.05,
            steps_per_episode: 200,
            depleted_threshold: 0.5,
        }
    }
}

impl GridConfig {
    fn cells(&self) -> usize {
        self.width * self.height
    }

    fn validate(&self) {
        assert!(self.width > 0 && self.height > 0, "grid must be non-empty");
        assert!(self.n_agents >= 1 && self.n_agents <= self.cells(), "too many agents for the grid");
        assert!(self.initial_amount > 0.0);
        assert!(self.harvest_yield > 0.0);
        assert!(self.regrow_per_step >= 0.0);
        assert!(self.steps_per_episode > 0);
        assert!(
            (0.0..=self.initial_amount).contains(&self.depleted_threshold),
            "depletion threshold outside the tile range"
        );
    }
}

/// Aggregate outcome of one simultaneous step.
#[derive(Clone, Debug)]
pub struct StepEffects {
    pub rewards: Vec<f64>,
    /// Extra contenders across all contested tiles this step.
    pub conflicts: usize,
    /// Per-agent flag: took part in a contested harvest.
    pub conflict_flags: Vec<bool>,
    pub harvested: f64,
    pub regrown: f64,
}

pub struct GridEnv {
    cfg: GridConfig,
    amount: Vec<f64>,
    cooldown: Vec<u32>,
    /// occupant[cell] = agent id, if any.
    occupant: Vec<Option<usize>>,
    pos: Vec<(usize, usize)>,
    /// Tiles whose harvest was contested last step.
    contested_last: Vec<bool>,
    steps_taken: usize,
    conflicts_episode: usize,
}

impl GridEnv {
    pub fn new(cfg: GridConfig) -> Self {
        cfg.validate();
        let cells = cfg.cells();
        let mut env = GridEnv {
            cfg,
            amount: vec![cfg.initial_amount; cells],
            cooldown: vec![0; cells],
            occupant: vec![None; cells],
            pos: vec![(0, 0); cfg.n_agents],
            contested_last: vec![false; cells],
            steps_taken: 0,
            conflicts_episode: 0,
        };
        for i in 0..env.cfg.n_agents {
            env.pos[i] = (i % env.cfg.width, i / env.cfg.width);
            let cell = env.cell_of(env.pos[i]);
            env.occupant[cell] = Some(i);
        }
        env
    }

    pub fn config(&self) -> &GridConfig {
        &self.cfg
    }

    fn cell_of(&self, (x, y): (usize, usize)) -> usize {
        y * self.cfg.width + x
    }

    pub fn position(&self, agent: usize) -> (usize, usize) {
        self.pos[agent]
    }

    pub fn tile_amount(&self, x: usize, y: usize) -> f64 {
        self.amount[self.cell_of((x, y))]
    }

    pub fn tile_cooldown(&self, x: usize, y: usize) -> u32 {
        self.cooldown[self.cell_of((x, y))]
    }

    /// Scenario setup: place agents on explicit distinct cells.
    pub fn place_agents(&mut self, positions: &[(usize, usize)]) {
        assert_eq!(positions.len(), self.cfg.n_agents);
        self.occupant.fill(None);
        for (i, &(x, y)) in positions.iter().enumerate() {
            assert!(x < self.cfg.width && y < self.cfg.height, "position off the grid");
            let cell = self.cell_of((x, y));
            assert!(self.occupant[cell].is_none(), "two agents on one cell");
            self.occupant[cell] = Some(i);
            self.pos[i] = (x, y);
        }
    }

    /// Scenario setup: overwrite one tile's state.
    pub fn set_tile(&mut self, x: usize, y: usize, amount: f64, cooldown: u32) {
        assert!((0.0..=self.cfg.initial_amount).contains(&amount));
        let cell = self.cell_of((x, y));
        self.amount[cell] = amount;
        self.cooldown[cell] = cooldown;
    }

    pub fn total_resources(&self) -> f64 {
        self.amount.iter().sum()
    }

    pub fn fraction_on_cooldown(&self) -> f64 {
        let cooling = self.cooldown.iter().filter(|c| **c > 0).count();
        cooling as f64 / self.cfg.cells() as f64
    }

    fn window(&self, agent: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        let (x, y) = self.pos[agent];
        (-1i64..=1).flat_map(move |dy| {
            (-1i64..=1).map(move |dx| {
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx < 0 || ny < 0 || nx >= self.cfg.width as i64 || ny >= self.cfg.height as i64 {
                    None
                } else {
                    Some(self.cell_of((nx as usize, ny as usize)))
                }
            })
        })
    }

    /// Base-3 encoding of the 3x3 neighbourhood, row-major: 0 = ready tile,
    /// 1 = unavailable (cooling or off the grid), 2 = occupied by another
    /// agent.
    pub fn state_key(&self, agent: usize) -> StateKey {
        let mut key = 0u64;
        let mut scale = 1u64;
        for cell in self.window(agent) {
            let cat = match cell {
                None => 1,
                Some(c) => {
                    if self.occupant[c].is_some() && self.occupant[c] != Some(agent) {
                        2
                    } else if self.cooldown[c] > 0 {
                        1
                    } else {
                        0
                    }
                }
            };
            key += cat * scale;
            scale *= 3;
        }
        StateKey(key)
    }

    /// The tile a harvest from the agent's current position would target:
    /// the richest ready tile in the window, the agent's own tile winning
    /// ties, falling back to the own tile when everything is cooling.
    pub fn harvest_target(&self, agent: usize) -> usize {
        let own = self.cell_of(self.pos[agent]);
        let mut best: Option<usize> = None;
        let candidates = std::iter::once(Some(own))
            .chain(self.window(agent).filter(|c| *c != Some(own)));
        for cell in candidates.flatten() {
            if self.cooldown[cell] > 0 {
                continue;
            }
            if best.map_or(true, |b| self.amount[cell] > self.amount[b]) {
                best = Some(cell);
            }
        }
        best.unwrap_or(own)
    }

    /// Per-action greediness from the agent's current position: moving and
    /// waiting are neutral; harvesting is greedy when its target is
    /// cooling, depleted, or was contested last step.
    pub fn greediness(&self, agent: usize) -> Vec<f64> {
        let target = self.harvest_target(agent);
        let strained = self.cooldown[target] > 0
            || self.amount[target] < self.cfg.depleted_threshold
            || self.contested_last[target];
        let mut g = vec![0.0; GRID_ACTIONS];
        g[HARVEST] = if strained { 1.0 } else { 0.0 };
        g
    }

    /// Fraction of in-bounds window tiles not on cooldown.
    pub fn local_active_fraction(&self, agent: usize) -> f64 {
        let mut active = 0usize;
        let mut total = 0usize;
        for cell in self.window(agent).flatten() {
            total += 1;
            if self.cooldown[cell] == 0 {
                active += 1;
            }
        }
        active as f64 / total as f64
    }

    /// Resolve one simultaneous step: moves, tile recovery, harvests.
    pub fn apply_actions(&mut self, actions: &[usize], rng: &mut RngStream) -> StepEffects {
        assert_eq!(actions.len(), self.cfg.n_agents);
        let n = self.cfg.n_agents;
        let cells = self.cfg.cells();

        // Moves resolve against start-of-step occupancy; a move fails if
        // its target is occupied, off the grid, or wanted by anyone else.
        let occupied_at_start: Vec<bool> = self.occupant.iter().map(|o| o.is_some()).collect();
        let mut proposals = vec![0usize; n];
        let mut wants = vec![0u32; cells];
        for (i, &action) in actions.iter().enumerate() {
            assert!(action < GRID_ACTIONS, "invalid grid action {action}");
            let (x, y) = self.pos[i];
            let target = match action {
                NORTH if y > 0 => (x, y - 1),
                SOUTH if y + 1 < self.cfg.height => (x, y + 1),
                EAST if x + 1 < self.cfg.width => (x + 1, y),
                WEST if x > 0 => (x - 1, y),
                _ => (x, y),
            };
            let cell = self.cell_of(target);
            proposals[i] = cell;
            if cell != self.cell_of((x, y)) {
                wants[cell] += 1;
            }
        }
        for i in 0..n {
            let from = self.cell_of(self.pos[i]);
            let to = proposals[i];
            if to != from && !occupied_at_start[to] && wants[to] == 1 {
                self.occupant[from] = None;
                self.occupant[to] = Some(i);
                self.pos[i] = (to % self.cfg.width, to / self.cfg.width);
            }
        }

        // Tile recovery: cooling tiles count down, ready ones regrow.
        let mut regrown = 0.0;
        for cell in 0..cells {
            if self.cooldown[cell] > 0 {
                self.cooldown[cell] -= 1;
            } else if self.amount[cell] < self.cfg.initial_amount {
                let grow = self.cfg.regrow_per_step.min(self.cfg.initial_amount - self.amount[cell]);
                self.amount[cell] += grow;
                regrown += grow;
            }
        }

        // Harvests, grouped by target tile in cell order.
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &action) in actions.iter().enumerate() {
            if action == HARVEST {
                groups.entry(self.harvest_target(i)).or_default().push(i);
            }
        }
        let mut rewards = vec![0.0; n];
        let mut conflict_flags = vec![false; n];
        let mut conflicts = 0usize;
        let mut harvested = 0.0;
        let mut contested_now = vec![false; cells];
        for (&cell, contenders) in &groups {
            let winner = if contenders.len() == 1 {
                contenders[0]
            } else {
                conflicts += contenders.len() - 1;
                contested_now[cell] = true;
                for &a in contenders {
                    conflict_flags[a] = true;
                }
                contenders[rng.below(contenders.len() as u64) as usize]
            };
            if self.cooldown[cell] == 0 {
                if self.amount[cell] >= self.cfg.depleted_threshold {
                    let gain = self.cfg.harvest_yield.min(self.amount[cell]);
                    self.amount[cell] -= gain;
                    rewards[winner] = gain;
                    harvested += gain;
                }
                if self.amount[cell] < self.cfg.depleted_threshold {
                    self.cooldown[cell] = self.cfg.cooldown_steps;
                }
            }
        }
        self.contested_last = contested_now;
        self.steps_taken += 1;
        self.conflicts_episode += conflicts;
        StepEffects { rewards, conflicts, conflict_flags, harvested, regrown }
    }
}

impl Environment for GridEnv {
    fn n_agents(&self) -> usize {
        self.cfg.n_agents
    }

    fn n_actions(&self) -> usize {
        GRID_ACTIONS
    }

    fn reset(&mut self, rng: &mut RngStream) {
        self.amount.fill(self.cfg.initial_amount);
        self.cooldown.fill(0);
        self.occupant.fill(None);
        self.contested_last.fill(false);
        self.steps_taken = 0;
        self.conflicts_episode = 0;
        let cells = self.cfg.cells() as u64;
        for i in 0..self.cfg.n_agents {
            let cell = loop {
                let c = rng.below(cells) as usize;
                if self.occupant[c].is_none() {
                    break c;
                }
            };
            self.occupant[cell] = Some(i);
            self.pos[i] = (cell % self.cfg.width, cell / self.cfg.width);
        }
    }

    fn done(&self) -> bool {
        self.steps_taken >= self.cfg.steps_per_episode
    }

    fn step(&mut self, slots: &mut [AgentSlot], rng: &mut RngStream) {
        let n = self.cfg.n_agents;
        let mut states = Vec::with_capacity(n);
        let mut greeds = Vec::with_capacity(n);
        let mut actions = Vec::with_capacity(n);
        for i in 0..n {
            let state = self.state_key(i);
            let greediness = self.greediness(i);
            actions.push(slots[i].act(state, &greediness, rng));
            states.push(state);
            greeds.push(greediness);
        }
        let fx = self.apply_actions(&actions, rng);
        for i in 0..n {
            slots[i].record(PendingStep {
                state: states[i],
                action: actions[i],
                reward: fx.rewards[i],
                observation: Observation::Grid {
                    active_fraction: self.local_active_fraction(i),
                    conflict: fx.conflict_flags[i],
                    greediness: std::mem::take(&mut greeds[i]),
                },
            });
        }
    }

    fn episode_detail(&self) -> EpisodeDetail {
        EpisodeDetail::Grid {
            conflicts_per_step: self.conflicts_episode as f64 / self.steps_taken.max(1) as f64,
            cooldown_fraction: self.fraction_on_cooldown(),
            remaining_resources: self.total_resources(),
        }
    }
}
