//! Adaptive exploration rate and the trust-gated exploit probability.
//!
//! The exploration rate grows multiplicatively while the agent's trust is
//! volatile and decays gently once it settles. Whether the agent actually
//! exploits is gated separately: only an agent that both trusts its
//! situation and sees a stable outcome score commits to greedy play with
//! probability 1 - epsilon; otherwise the greedy action keeps only epsilon
//! probability and the rest goes to uniform exploration.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplorationParams {
    pub epsilon_init: f64,
    pub epsilon_min: f64,
    pub epsilon_cap: f64,
    /// Multiplier applied while trust is volatile.
    pub growth: f64,
    /// Multiplier applied while trust is settled.
    pub decay: f64,
    /// Trust-volatility level above which exploration grows.
    pub variance_threshold: f64,
    /// Outcome-stability score the exploit gate requires.
    pub stability_threshold: f64,
    /// Trust level the exploit gate requires.
    pub trust_gate: f64,
}

impl Default for ExplorationParams {
    fn default() -> Self {
        ExplorationParams {
            epsilon_init: 0.3,
            epsilon_min: 0.01,
            epsilon_cap: 0.9,
            growth: 1.1,
            decay: 0.995,
            variance_threshold: 0.1,
            stability_threshold: 0.5,
            trust_gate: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExplorationState {
    epsilon: f64,
}

impl ExplorationState {
    pub fn new(params: &ExplorationParams) -> Self {
        ExplorationState { epsilon: params.epsilon_init.clamp(params.epsilon_min, params.epsilon_cap) }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Grow epsilon toward the cap while trust is volatile, decay it toward
    /// the floor once it settles.
    pub fn update(&mut self, trust_volatility: f64, params: &ExplorationParams) {
        assert!(trust_volatility >= 0.0, "volatility must be non-negative");
        self.epsilon = if trust_volatility > params.variance_threshold {
            (self.epsilon * params.growth).min(params.epsilon_cap)
        } else {
            (self.epsilon * params.decay).max(params.epsilon_min)
        };
    }
}

/// Probability of taking the greedy action this step.
pub fn exploit_probability(
    epsilon: f64,
    trust: f64,
    stability: f64,
    params: &ExplorationParams,
) -> f64 {
    if trust > params.trust_gate && stability > params.stability_threshold {
        1.0 - epsilon
    } else {
        epsilon
    }
}
