//! Two-tier experience memory: a short-term ring buffer of recent
//! transitions and a long-term table of per-pair sufficient statistics
//! (visit counts and running mean rewards), so long-term memory stays O(1)
//! per record regardless of how much history accumulates.

use std::collections::{HashMap, VecDeque};

use crate::sim::{StateKey, Transition};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LtmStat {
    pub visits: u64,
    pub mean_reward: f64,
}

#[derive(Clone, Debug)]
pub struct MemoryBuffers {
    capacity: usize,
    stm: VecDeque<Transition>,
    ltm: HashMap<(StateKey, usize), LtmStat>,
    total: u64,
}

impl MemoryBuffers {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "short-term capacity must be at least 1");
        MemoryBuffers { capacity, stm: VecDeque::with_capacity(capacity), ltm: HashMap::new(), total: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn record(&mut self, t: Transition) {
        if self.stm.len() == self.capacity {
            self.stm.pop_front();
        }
        self.stm.push_back(t);
        let stat = self.ltm.entry((t.state, t.action)).or_insert(LtmStat { visits: 0, mean_reward: 0.0 });
        stat.visits += 1;
        stat.mean_reward += (t.reward - stat.mean_reward) / stat.visits as f64;
        self.total += 1;
    }

    /// Recent transitions, oldest first.
    pub fn recent(&self) -> impl Iterator<Item = &Transition> {
        self.stm.iter()
    }

    pub fn recent_len(&self) -> usize {
        self.stm.len()
    }

    /// Mean reward over the short-term buffer; 0.0 when empty.
    pub fn recent_avg_reward(&self) -> f64 {
        if self.stm.is_empty() {
            return 0.0;
        }
        self.stm.iter().map(|t| t.reward).sum::<f64>() / self.stm.len() as f64
    }

    /// Population standard deviation of short-term rewards; 0.0 with fewer
    /// than two entries.
    pub fn stm_reward_std(&self) -> f64 {
        if self.stm.len() < 2 {
            return 0.0;
        }
        let mean = self.recent_avg_reward();
        let var = self.stm.iter().map(|t| (t.reward - mean).powi(2)).sum::<f64>() / self.stm.len() as f64;
        var.sqrt()
    }

    pub fn ltm_stat(&self, state: StateKey, action: usize) -> Option<LtmStat> {
        self.ltm.get(&(state, action)).copied()
    }

    /// Total transitions ever recorded (not capped by the buffer).
    pub fn total_recorded(&self) -> u64 {
        self.total
    }
}
