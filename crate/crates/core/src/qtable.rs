//! Tabular action-value storage with the one-step temporal-difference
//! update shared by every learner in the workspace. Keeping the update in
//! one place guarantees the learners produce bit-identical value tables
//! when configured identically.

use std::collections::HashMap;

use crate::sim::{argmax_tiebreak, StateKey, Transition};

#[derive(Clone, Debug, Default)]
pub struct QTable {
    rows: HashMap<u64, Vec<f64>>,
    n_actions: usize,
}

impl QTable {
    pub fn new(n_actions: usize) -> Self {
        assert!(n_actions > 0, "action space must be non-empty");
        QTable { rows: HashMap::new(), n_actions }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Row for `state`, materialized with zeros on first touch.
    pub fn row_mut(&mut self, state: StateKey) -> &mut [f64] {
        let n = self.n_actions;
        self.rows.entry(state.0).or_insert_with(|| vec![0.0; n])
    }

    pub fn value(&self, state: StateKey, action: usize) -> f64 {
        self.rows.get(&state.0).map_or(0.0, |r| r[action])
    }

    /// Greedy value of `state`; unvisited states are worth 0.
    pub fn max_value(&self, state: StateKey) -> f64 {
        self.rows
            .get(&state.0)
            .map_or(0.0, |r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Greedy action for `state`, ties resolved toward the lowest index.
    pub fn greedy_action(&self, state: StateKey) -> usize {
        match self.rows.get(&state.0) {
            Some(row) => argmax_tiebreak(row),
            None => 0,
        }
    }

    /// One-step TD update toward `r + discount * max_a Q(s', a)`, with no
    /// bootstrap on terminal transitions.
    pub fn td_update(&mut self, t: &Transition, learn_rate: f64, discount: f64) {
        assert!(t.action < self.n_actions, "action out of range");
        let bootstrap = if t.terminal { 0.0 } else { discount * self.max_value(t.next_state) };
        let target = t.reward + bootstrap;
        let q = &mut self.row_mut(t.state)[t.action];
        *q += learn_rate * (target - *q);
    }
}
