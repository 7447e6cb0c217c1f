//! Vertical food-tower environment.
//!
//! One agent per floor. Each round a platform carrying a fixed amount of
//! food descends from the top floor; each agent in turn decides how many
//! units to take before the platform continues down. Hunger grows every
//! round and is relieved by eating; an agent whose hunger saturates dies.
//! Floor order is drawn once per episode, so an agent's vantage point is a
//! per-episode lottery rather than a per-round one.

use crate::rng::RngStream;
use crate::signals::{Observation, TOWER_GREEDINESS};
use crate::sim::{AgentSlot, Environment, EpisodeDetail, PendingStep, StateKey};

pub const TOWER_ACTIONS: usize = 3;

const HUNGER_BUCKETS: u64 = 5;
const FOOD_BUCKETS: u64 = 5;

#[derive(Clone, Copy, Debug)]
pub struct TowerConfig {
    pub floors: usize,
    pub platform_food: f64,
    pub hunger_max: f64,
    /// Hunger added to every living agent each round.
    pub hunger_growth: f64,
    /// Hunger removed per unit of food eaten.
    pub relief_per_unit: f64,
    pub rounds_per_episode: usize,
    pub initial_hunger: f64,
}

impl Default for TowerConfig {
    fn default() -> Self {
        TowerConfig {
            floors: 4,
            platform_food: 4.0,
            hunger_max: 10.0,
            hunger_growth: 1.0,
            relief_per_unit: 2.0,
            rounds_per_episode: 20,
            initial_hunger: 0.0,
        }
    }
}

impl TowerConfig {
    fn validate(&self) {
        assert!(self.floors > 0, "tower needs at least one floor");
        assert!(self.platform_food >= 0.0);
        assert!(self.hunger_max > 0.0);
        assert!(self.hunger_growth >= 0.0);
        assert!(self.relief_per_unit > 0.0);
        assert!(self.rounds_per_episode > 0);
        assert!((0.0..self.hunger_max).contains(&self.initial_hunger));
    }
}

/// Hunger after one round in which `consumed` units were eaten, clamped to
/// the survivable band.
pub fn hunger_after(hunger: f64, consumed: f64, cfg: &TowerConfig) -> f64 {
    (hunger + cfg.hunger_growth - cfg.relief_per_unit * consumed).clamp(0.0, cfg.hunger_max)
}

/// Round reward: units actually eaten, or the death penalty if hunger
/// saturated this round.
pub fn round_reward(consumed: f64, hunger_after: f64, cfg: &TowerConfig) -> f64 {
    if hunger_after >= cfg.hunger_max {
        -1.0
    } else {
        consumed
    }
}

/// Packs floor, a five-way hunger bucket, and the whole units of food left
/// on the platform (capped at four) into one key.
pub fn tower_state_key(floor: usize, hunger: f64, food_remaining: f64, cfg: &TowerConfig) -> StateKey {
    let hunger_bucket =
        (((hunger / cfg.hunger_max) * HUNGER_BUCKETS as f64) as u64).min(HUNGER_BUCKETS - 1);
    let food_bucket = (food_remaining.max(0.0).floor() as u64).min(FOOD_BUCKETS - 1);
    StateKey(floor as u64 * HUNGER_BUCKETS * FOOD_BUCKETS + hunger_bucket * FOOD_BUCKETS + food_bucket)
}

/// Everything that happened to one agent during one round.
#[derive(Clone, Debug)]
pub struct RoundRecord {
    pub agent: usize,
    pub state: StateKey,
    pub action: usize,
    /// Units actually eaten; can fall short of the chosen action when the
    /// platform runs dry.
    pub consumed: f64,
    pub reward: f64,
    pub food_on_arrival: f64,
    pub agents_below: usize,
    pub died: bool,
}

#[derive(Clone, Debug)]
pub struct RoundOutcome {
    /// Records in platform (top-to-bottom) order, living agents only.
    pub records: Vec<RoundRecord>,
    /// Food remaining after each living agent's turn, starting with the
    /// full platform.
    pub food_trace: Vec<f64>,
}

pub struct TowerEnv {
    cfg: TowerConfig,
    hunger: Vec<f64>,
    alive: Vec<bool>,
    /// agent_on_floor[f] = agent occupying floor f (0 = top).
    agent_on_floor: Vec<usize>,
    round: usize,
}

impl TowerEnv {
    pub fn new(cfg: TowerConfig) -> Self {
        cfg.validate();
        let n = cfg.floors;
        TowerEnv {
            cfg,
            hunger: vec![cfg.initial_hunger; n],
            alive: vec![true; n],
            agent_on_floor: (0..n).collect(),
            round: 0,
        }
    }

    pub fn config(&self) -> &TowerConfig {
        &self.cfg
    }

    pub fn hunger(&self, agent: usize) -> f64 {
        self.hunger[agent]
    }

    pub fn is_alive(&self, agent: usize) -> bool {
        self.alive[agent]
    }

    pub fn floor_assignment(&self) -> &[usize] {
        &self.agent_on_floor
    }

    pub fn survivors(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    /// Draw a fresh floor permutation.
    pub fn reassign_floors(&mut self, rng: &mut RngStream) {
        self.agent_on_floor = rng.permutation(self.cfg.floors);
    }

    fn living_below(&self, floor: usize) -> usize {
        (floor + 1..self.cfg.floors).filter(|&f| self.alive[self.agent_on_floor[f]]).count()
    }

    /// Run one platform descent. `choose` is queried once per living agent
    /// in floor order; hunger updates and deaths land after the platform
    /// clears the tower.
    pub fn play_round(
        &mut self,
        choose: &mut dyn FnMut(usize, StateKey, &[f64], &mut RngStream) -> usize,
        rng: &mut RngStream,
    ) -> RoundOutcome {
        assert!(!self.done(), "round played after the episode ended");
        let mut remaining = self.cfg.platform_food;
        let mut food_trace = vec![remaining];
        let mut records = Vec::new();
        for floor in 0..self.cfg.floors {
            let agent = self.agent_on_floor[floor];
            if !self.alive[agent] {
                continue;
            }
            let food_on_arrival = remaining;
            let agents_below = self.living_below(floor);
            let state = tower_state_key(floor, self.hunger[agent], remaining, &self.cfg);
            let action = choose(agent, state, &TOWER_GREEDINESS, rng);
            assert!(action < TOWER_ACTIONS, "invalid tower action {action}");
            let consumed = (action as f64).min(remaining);
            remaining -= consumed;
            food_trace.push(remaining);
            records.push(RoundRecord {
                agent,
                state,
                action,
                consumed,
                reward: 0.0,
                food_on_arrival,
                agents_below,
                died: false,
            });
        }
        for rec in &mut records {
            let h = hunger_after(self.hunger[rec.agent], rec.consumed, &self.cfg);
            self.hunger[rec.agent] = h;
            rec.reward = round_reward(rec.consumed, h, &self.cfg);
            if h >= self.cfg.hunger_max {
                rec.died = true;
                self.alive[rec.agent] = false;
            }
        }
        self.round += 1;
        RoundOutcome { records, food_trace }
    }

    fn done(&self) -> bool {
        self.round >= self.cfg.rounds_per_episode || self.alive.iter().all(|a| !a)
    }
}

impl Environment for TowerEnv {
    fn n_agents(&self) -> usize {
        self.cfg.floors
    }

    fn n_actions(&self) -> usize {
        TOWER_ACTIONS
    }

    fn reset(&mut self, rng: &mut RngStream) {
        self.hunger.fill(self.cfg.initial_hunger);
        self.alive.fill(true);
        self.round = 0;
        self.reassign_floors(rng);
    }

    fn done(&self) -> bool {
        TowerEnv::done(self)
    }

    fn step(&mut self, slots: &mut [AgentSlot], rng: &mut RngStream) {
        let outcome = self.play_round(
            &mut |agent, state, greediness, rng| slots[agent].act(state, greediness, rng),
            rng,
        );
        for rec in outcome.records {
            let observation = Observation::Tower {
                food_on_arrival: rec.food_on_arrival,
                agents_below: rec.agents_below,
                hunger: self.hunger[rec.agent],
                hunger_max: self.cfg.hunger_max,
            };
            slots[rec.agent].record(PendingStep {
                state: rec.state,
                action: rec.action,
                reward: rec.reward,
                observation,
            });
            if rec.died {
                slots[rec.agent].finish();
            }
        }
    }

    fn episode_detail(&self) -> EpisodeDetail {
        EpisodeDetail::Tower {
            success: self.alive.iter().all(|a| *a),
            deaths: self.cfg.floors - self.survivors(),
        }
    }
}
