//! The trust-modulated tabular learner.
//!
//! A standard one-step TD value table is wrapped with three coupled pieces
//! of state: experience memory, scalar trust, and an adaptive exploration
//! rate. Trust biases greedy choice away from actions the environment rates
//! as greedy, and together with the outcome-stability score it gates how
//! much probability the greedy action receives at all.

use crate::exploration::{exploit_probability, ExplorationParams, ExplorationState};
use crate::memory::MemoryBuffers;
use crate::qtable::QTable;
use crate::rng::RngStream;
use crate::signals::{Observation, SignalMapper, SignalSample};
use crate::sim::{argmax_tiebreak, Policy, StateKey, Transition};
use crate::trust::{TrustParams, TrustState};

#[derive(Clone, Debug, PartialEq)]
pub struct EtlParams {
    pub trust: TrustParams,
    pub exploration: ExplorationParams,
    pub learn_rate: f64,
    pub discount: f64,
    /// Weight of the trust-scaled greediness penalty on action values.
    pub cooperation_weight: f64,
    /// Short-term memory capacity.
    pub stm_capacity: usize,
    /// Volatility scale for the grid outcome-stability score.
    pub grid_stability_scale: f64,
    /// Hold epsilon fixed (used to reduce the agent to a plain learner).
    pub freeze_epsilon: bool,
}

impl Default for EtlParams {
    fn default() -> Self {
        EtlParams {
            trust: TrustParams::default(),
            exploration: ExplorationParams::default(),
            learn_rate: 0.1,
            discount: 0.95,
            cooperation_weight: 3.0,
            stm_capacity: 20,
            grid_stability_scale: 1.0,
            freeze_epsilon: false,
        }
    }
}

/// One row of the optional per-step trace: the digested transition plus the
/// controller state right after the update.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub state: StateKey,
    pub action: usize,
    pub reward: f64,
    pub trust: f64,
    pub epsilon: f64,
    pub stability: f64,
}

/// Render trace rows as CSV, header included.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    use std::fmt::Write;
    let mut out = String::from("state,action,reward,trust,epsilon,stability\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.state.0, r.action, r.reward, r.trust, r.epsilon, r.stability
        );
    }
    out
}

pub struct EtlAgent {
    q: QTable,
    memory: MemoryBuffers,
    trust: TrustState,
    exploration: ExplorationState,
    mapper: SignalMapper,
    params: EtlParams,
    /// Outcome-stability score from the most recent observation; selection
    /// at step t uses the score produced by step t-1.
    last_stability: f64,
    trace: Option<Vec<TraceRow>>,
}

impl EtlAgent {
    pub fn new(n_actions: usize, mapper: SignalMapper, params: EtlParams) -> Self {
        EtlAgent {
            q: QTable::new(n_actions),
            memory: MemoryBuffers::new(params.stm_capacity),
            trust: TrustState::new(),
            exploration: ExplorationState::new(&params.exploration),
            mapper,
            params,
            last_stability: 0.0,
            trace: None,
        }
    }

    /// Start recording one trace row per digested transition.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceRow] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn trust(&self) -> &TrustState {
        &self.trust
    }

    pub fn epsilon(&self) -> f64 {
        self.exploration.epsilon()
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }

    pub fn memory(&self) -> &MemoryBuffers {
        &self.memory
    }

    /// Action values adjusted by the trust-scaled greediness penalty.
    /// Distrust (negative trust) leaves values untouched.
    fn adjusted_values(&self, state: StateKey, greediness: &[f64]) -> Vec<f64> {
        let penalty = self.params.cooperation_weight * self.trust.value().max(0.0);
        greediness
            .iter()
            .enumerate()
            .map(|(a, g)| self.q.value(state, a) - penalty * g)
            .collect()
    }

    /// Digest a transition whose signals have already been mapped.
    pub fn observe_signals(&mut self, t: &Transition, signals: &SignalSample) {
        self.q.td_update(t, self.params.learn_rate, self.params.discount);
        self.memory.record(*t);
        self.trust.update(&self.params.trust, signals.support, signals.dissatisfaction);
        if !self.params.freeze_epsilon {
            self.exploration.update(self.trust.recent_std(), &self.params.exploration);
        }
        self.last_stability = signals.stability;
        if let Some(rows) = &mut self.trace {
            rows.push(TraceRow {
                state: t.state,
                action: t.action,
                reward: t.reward,
                trust: self.trust.value(),
                epsilon: self.exploration.epsilon(),
                stability: signals.stability,
            });
        }
    }
}

impl Policy for EtlAgent {
    fn select_action(&mut self, state: StateKey, greediness: &[f64], rng: &mut RngStream) -> usize {
        assert_eq!(greediness.len(), self.q.n_actions(), "greediness length mismatch");
        let p_exploit = exploit_probability(
            self.exploration.epsilon(),
            self.trust.value(),
            self.last_stability,
            &self.params.exploration,
        );
        if rng.chance(p_exploit) {
            argmax_tiebreak(&self.adjusted_values(state, greediness))
        } else {
            rng.below(greediness.len() as u64) as usize
        }
    }

    fn observe(&mut self, t: &Transition, observation: &Observation) {
        let signals = self.mapper.map(observation, &self.memory);
        self.observe_signals(t, &signals);
    }

    fn trust_level(&self) -> Option<f64> {
        Some(self.trust.value())
    }
}
