//! Environment observations and their mapping onto the common signal
//! vocabulary (support, dissatisfaction, outcome stability, per-action
//! greediness) consumed by the trust-modulated agent.
//!
//! Mappers may consult the agent's own memory (e.g. reward volatility), and
//! do so *before* the current transition is recorded, so a sample always
//! reflects history up to and including the step it describes and nothing
//! newer.

use crate::memory::MemoryBuffers;

/// Raw per-step observation payload, environment-specific.
#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    Tower {
        /// Food units left when the platform reached this agent.
        food_on_arrival: f64,
        /// Living agents strictly below at that moment.
        agents_below: usize,
        /// Own hunger after the round resolved.
        hunger: f64,
        hunger_max: f64,
    },
    Grid {
        /// Fraction of non-cooling tiles in the local window after the step.
        active_fraction: f64,
        /// Whether this agent was in a harvest conflict this step.
        conflict: bool,
        /// Per-action greediness ratings for the state acted from.
        greediness: Vec<f64>,
    },
    Ipd {
        /// Own move this round; None only when no round has resolved.
        own_cooperated: Option<bool>,
        /// Opponent's move this round; None only when no round has resolved.
        opponent_cooperated: Option<bool>,
    },
    /// For policies and tests that need no observation payload.
    None,
}

/// One step's worth of social signals.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalSample {
    /// How supported the agent was by its situation, in [0, 1].
    pub support: f64,
    /// How badly the step went for it, non-negative.
    pub dissatisfaction: f64,
    /// How stable its recent outcomes look, in [0, 1].
    pub stability: f64,
    /// Greediness rating of each action, each in [0, 1].
    pub greediness: Vec<f64>,
}

/// Per-unit consumption greediness in the tower: taking nothing is neutral,
/// taking the maximum is fully greedy.
pub const TOWER_GREEDINESS: [f64; 3] = [0.0, 0.5, 1.0];

/// Cooperate is neutral, defect is fully greedy.
pub const IPD_GREEDINESS: [f64; 2] = [0.0, 1.0];

/// Highest single-round payoff in the dilemma; normalizes the stability
/// score.
const IPD_MAX_PAYOFF: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub enum SignalMapper {
    Tower,
    Grid {
        /// Reward-volatility level at which grid outcomes count as fully
        /// unstable.
        stability_scale: f64,
    },
    Ipd,
}

fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

impl SignalMapper {
    pub fn map(&self, obs: &Observation, memory: &MemoryBuffers) -> SignalSample {
        match (self, obs) {
            (SignalMapper::Tower, Observation::Tower { food_on_arrival, agents_below, hunger, hunger_max }) => {
                let share = *agents_below as f64 + 1.0;
                SignalSample {
                    support: clip01(food_on_arrival / share),
                    dissatisfaction: hunger / hunger_max,
                    stability: clip01(1.0 - hunger / hunger_max),
                    greediness: TOWER_GREEDINESS.to_vec(),
                }
            }
            (SignalMapper::Grid { stability_scale }, Observation::Grid { active_fraction, conflict, greediness }) => {
                SignalSample {
                    support: clip01(*active_fraction),
                    dissatisfaction: (*conflict as u8) as f64 + (1.0 - active_fraction),
                    stability: clip01(1.0 - memory.stm_reward_std() / stability_scale),
                    greediness: greediness.clone(),
                }
            }
            (SignalMapper::Ipd, Observation::Ipd { own_cooperated, opponent_cooperated }) => {
                let support = match opponent_cooperated {
                    Some(true) => 1.0,
                    Some(false) => 0.0,
                    None => 0.5,
                };
                let exploited =
                    *own_cooperated == Some(true) && *opponent_cooperated == Some(false);
                SignalSample {
                    support,
                    dissatisfaction: if exploited { 1.0 } else { 0.0 },
                    stability: clip01(memory.recent_avg_reward() / IPD_MAX_PAYOFF),
                    greediness: IPD_GREEDINESS.to_vec(),
                }
            }
            (mapper, obs) => panic!("mapper {mapper:?} fed mismatched observation {obs:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::sim::{StateKey, Transition};

    fn reward_memory(rewards: &[f64]) -> MemoryBuffers {
        let mut m = MemoryBuffers::new(20);
        for &r in rewards {
            m.record(Transition {
                state: StateKey(0),
                action: 0,
                reward: r,
                next_state: StateKey(0),
                terminal: false,
            });
        }
        m
    }

    #[test]
    fn tower_fair_share_is_full_support() {
        let m = reward_memory(&[]);
        let s = SignalMapper::Tower.map(
            &Observation::Tower { food_on_arrival: 3.0, agents_below: 2, hunger: 0.0, hunger_max: 10.0 },
            &m,
        );
        assert_eq!(s.support, 1.0);
        assert_eq!(s.dissatisfaction, 0.0);
        assert_eq!(s.stability, 1.0);
        assert_eq!(s.greediness, TOWER_GREEDINESS.to_vec());
    }

    #[test]
    fn tower_empty_platform_at_max_hunger() {
        let m = reward_memory(&[]);
        let s = SignalMapper::Tower.map(
            &Observation::Tower { food_on_arrival: 0.0, agents_below: 1, hunger: 10.0, hunger_max: 10.0 },
            &m,
        );
        assert_eq!(s.support, 0.0);
        assert_eq!(s.dissatisfaction, 1.0);
        assert_eq!(s.stability, 0.0);
    }

    #[test]
    fn tower_scarce_share() {
        let m = reward_memory(&[]);
        let s = SignalMapper::Tower.map(
            &Observation::Tower { food_on_arrival: 1.0, agents_below: 3, hunger: 0.0, hunger_max: 10.0 },
            &m,
        );
        assert_eq!(s.support, 0.25);
    }

    #[test]
    fn tower_bottom_agent_support_is_clipped_food() {
        let m = reward_memory(&[]);
        let s = SignalMapper::Tower.map(
            &Observation::Tower { food_on_arrival: 4.0, agents_below: 0, hunger: 2.0, hunger_max: 10.0 },
            &m,
        );
        assert_eq!(s.support, 1.0);
    }

    #[test]
    fn grid_healthy_neighbourhood() {
        let m = reward_memory(&[1.0, 1.0, 1.0]);
        let s = SignalMapper::Grid { stability_scale: 1.0 }.map(
            &Observation::Grid { active_fraction: 1.0, conflict: false, greediness: vec![0.0; 6] },
            &m,
        );
        assert_eq!(s.support, 1.0);
        assert_eq!(s.dissatisfaction, 0.0);
        assert_eq!(s.stability, 1.0);
    }

    #[test]
    fn grid_conflict_on_dead_neighbourhood() {
        let m = reward_memory(&[]);
        let s = SignalMapper::Grid { stability_scale: 1.0 }.map(
            &Observation::Grid { active_fraction: 0.0, conflict: true, greediness: vec![0.0; 6] },
            &m,
        );
        assert_eq!(s.support, 0.0);
        assert_eq!(s.dissatisfaction, 2.0);
    }

    #[test]
    fn grid_volatile_rewards_zero_stability() {
        // rewards {0, 2} have std 1.0 => stability clips to 0 at scale 1
        let m = reward_memory(&[0.0, 2.0]);
        let s = SignalMapper::Grid { stability_scale: 1.0 }.map(
            &Observation::Grid { active_fraction: 0.5, conflict: false, greediness: vec![0.0; 6] },
            &m,
        );
        assert_eq!(s.stability, 0.0);
    }

    #[test]
    fn ipd_opponent_cooperated() {
        let m = reward_memory(&[3.0]);
        let s = SignalMapper::Ipd.map(
            &Observation::Ipd { own_cooperated: Some(true), opponent_cooperated: Some(true) },
            &m,
        );
        assert_eq!(s.support, 1.0);
        assert_eq!(s.dissatisfaction, 0.0);
        assert_eq!(s.greediness, IPD_GREEDINESS.to_vec());
    }

    #[test]
    fn ipd_exploited_round() {
        let m = reward_memory(&[]);
        let s = SignalMapper::Ipd.map(
            &Observation::Ipd { own_cooperated: Some(true), opponent_cooperated: Some(false) },
            &m,
        );
        assert_eq!(s.support, 0.0);
        assert_eq!(s.dissatisfaction, 1.0);
    }

    #[test]
    fn ipd_no_history_is_neutral() {
        let m = reward_memory(&[]);
        let s = SignalMapper::Ipd.map(
            &Observation::Ipd { own_cooperated: None, opponent_cooperated: None },
            &m,
        );
        assert_eq!(s.support, 0.5);
        assert_eq!(s.dissatisfaction, 0.0);
        assert_eq!(s.stability, 0.0);
    }

    #[test]
    fn ipd_stability_is_scaled_mean_payoff() {
        let m = reward_memory(&[5.0, 5.0, 0.0, 0.0]);
        let s = SignalMapper::Ipd.map(
            &Observation::Ipd { own_cooperated: Some(false), opponent_cooperated: Some(false) },
            &m,
        );
        assert_eq!(s.stability, 0.5);
    }

    #[test]
    #[should_panic(expected = "mismatched observation")]
    fn mismatched_observation_panics() {
        let m = reward_memory(&[]);
        SignalMapper::Tower.map(&Observation::None, &m);
    }

    /// Signal ranges hold for arbitrary admissible observations.
    #[test]
    fn outputs_stay_in_range_on_random_observations() {
        let mut rng = RngStream::new(31);
        for _ in 0..2_000 {
            let m = reward_memory(&[rng.next_f64() * 5.0, rng.next_f64() * 5.0, rng.next_f64() * 5.0]);
            let obs = match rng.below(3) {
                0 => Observation::Tower {
                    food_on_arrival: rng.next_f64() * 6.0,
                    agents_below: rng.below(4) as usize,
                    hunger: rng.next_f64() * 10.0,
                    hunger_max: 10.0,
                },
                1 => Observation::Grid {
                    active_fraction: rng.next_f64(),
                    conflict: rng.chance(0.5),
                    greediness: vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
                },
                _ => Observation::Ipd {
                    own_cooperated: Some(rng.chance(0.5)),
                    opponent_cooperated: Some(rng.chance(0.5)),
                },
            };
            let mapper = match obs {
                Observation::Tower { .. } => SignalMapper::Tower,
                Observation::Grid { .. } => SignalMapper::Grid { stability_scale: 1.0 },
                _ => SignalMapper::Ipd,
            };
            let s = mapper.map(&obs, &m);
            assert!((0.0..=1.0).contains(&s.support));
            assert!(s.dissatisfaction >= 0.0);
            assert!((0.0..=1.0).contains(&s.stability));
            assert!(s.greediness.iter().all(|g| (0.0..=1.0).contains(g)));
        }
    }
}
