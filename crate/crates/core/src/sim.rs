//! Simulation substrate shared by every environment: discrete state keys,
//! transitions, the policy interface, and the episode loop.
//!
//! Environments drive their own intra-step ordering (the tower is
//! sequential, the grid and the dilemma are simultaneous), so the episode
//! loop hands each environment the full set of [`AgentSlot`]s and lets it
//! query actions at the semantically correct moment.
//!
//! Transitions are delivered to a policy immediately before its next action
//! selection, once the successor state is actually known; the final
//! transition of an episode (or of a dead agent) is delivered with the
//! terminal flag set. Everything a policy reads at selection time therefore
//! reflects updates through the previous step and nothing newer.

use crate::rng::RngStream;
use crate::signals::Observation;

/// Opaque discrete state identifier. Each environment documents its own
/// packing; keys are only ever compared within a single environment.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct StateKey(pub u64);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: StateKey,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateKey,
    pub terminal: bool,
}

/// Index of the largest value, lowest index winning ties.
pub fn argmax_tiebreak(values: &[f64]) -> usize {
    assert!(!values.is_empty(), "argmax over an empty list");
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub trait Policy {
    /// Choose an action index given the current state key and the
    /// per-action greediness ratings supplied by the environment.
    fn select_action(&mut self, state: StateKey, greediness: &[f64], rng: &mut RngStream)
        -> usize;

    /// Digest one transition together with the raw observation it came from.
    fn observe(&mut self, transition: &Transition, observation: &Observation);

    /// Called once per episode after the terminal transition is delivered.
    fn end_episode(&mut self) {}

    /// Current trust level, for policies that track one.
    fn trust_level(&self) -> Option<f64> {
        None
    }
}

impl Policy for Box<dyn Policy> {
    fn select_action(
        &mut self,
        state: StateKey,
        greediness: &[f64],
        rng: &mut RngStream,
    ) -> usize {
        self.as_mut().select_action(state, greediness, rng)
    }

    fn observe(&mut self, transition: &Transition, observation: &Observation) {
        self.as_mut().observe(transition, observation)
    }

    fn end_episode(&mut self) {
        self.as_mut().end_episode()
    }

    fn trust_level(&self) -> Option<f64> {
        self.as_ref().trust_level()
    }
}

/// Outcome of one agent's step, parked until the successor state is known.
#[derive(Clone, Debug)]
pub struct PendingStep {
    pub state: StateKey,
    pub action: usize,
    pub reward: f64,
    pub observation: Observation,
}

/// A policy plus the per-episode bookkeeping the loop needs around it.
pub struct AgentSlot<'a> {
    policy: &'a mut dyn Policy,
    pending: Option<PendingStep>,
    total_reward: f64,
}

impl<'a> AgentSlot<'a> {
    pub fn new(policy: &'a mut dyn Policy) -> Self {
        AgentSlot { policy, pending: None, total_reward: 0.0 }
    }

    /// Deliver the parked transition (its successor state is `state`), then
    /// select the next action.
    pub fn act(&mut self, state: StateKey, greediness: &[f64], rng: &mut RngStream) -> usize {
        if let Some(p) = self.pending.take() {
            let t = Transition {
                state: p.state,
                action: p.action,
                reward: p.reward,
                next_state: state,
                terminal: false,
            };
            self.policy.observe(&t, &p.observation);
        }
        self.policy.select_action(state, greediness, rng)
    }

    /// Park the outcome of the step just taken.
    pub fn record(&mut self, step: PendingStep) {
        debug_assert!(self.pending.is_none(), "recorded twice without acting");
        self.total_reward += step.reward;
        self.pending = Some(step);
    }

    /// Flush the parked transition as terminal. Safe to call when nothing
    /// is parked (e.g. an agent that never acted).
    pub fn finish(&mut self) {
        if let Some(p) = self.pending.take() {
            let t = Transition {
                state: p.state,
                action: p.action,
                reward: p.reward,
                next_state: p.state,
                terminal: true,
            };
            self.policy.observe(&t, &p.observation);
        }
    }

    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }

    pub fn trust_level(&self) -> Option<f64> {
        self.policy.trust_level()
    }
}

/// Environment-specific slice of the per-episode metrics record.
#[derive(Clone, Debug, PartialEq)]
pub enum EpisodeDetail {
    Grid { conflicts_per_step: f64, cooldown_fraction: f64, remaining_resources: f64 },
    Tower { success: bool, deaths: usize },
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeMetrics {
    /// Summed rewards per agent, in agent-id order.
    pub returns: Vec<f64>,
    pub steps: usize,
    pub detail: EpisodeDetail,
}

pub trait Environment {
    fn n_agents(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn reset(&mut self, rng: &mut RngStream);
    fn done(&self) -> bool;
    /// Advance one step, querying each live agent through its slot.
    fn step(&mut self, slots: &mut [AgentSlot], rng: &mut RngStream);
    /// Metrics payload for the episode that just finished.
    fn episode_detail(&self) -> EpisodeDetail;
}

/// Reset the environment, run it to termination, flush terminal
/// transitions, then fire each policy's episode hook exactly once.
pub fn run_episode<E: Environment + ?Sized>(
    env: &mut E,
    policies: &mut [Box<dyn Policy>],
    rng: &mut RngStream,
) -> EpisodeMetrics {
    assert_eq!(
        policies.len(),
        env.n_agents(),
        "environment expects {} agents, got {}",
        env.n_agents(),
        policies.len()
    );
    env.reset(rng);
    let mut slots: Vec<AgentSlot> = policies.iter_mut().map(|p| AgentSlot::new(p.as_mut())).collect();
    let mut steps = 0;
    while !env.done() {
        env.step(&mut slots, rng);
        steps += 1;
    }
    for slot in &mut slots {
        slot.finish();
    }
    let returns: Vec<f64> = slots.iter().map(|s| s.total_reward()).collect();
    drop(slots);
    for p in policies.iter_mut() {
        p.end_episode();
    }
    EpisodeMetrics { returns, steps, detail: env.episode_detail() }
}
