//! Scalar trust state.
//!
//! Trust moves with each observed outcome: it grows with support, shrinks
//! with dissatisfaction, and is pulled toward its own slow-moving long-term
//! average. The long-term average is an exponential moving average updated
//! after clipping, and a sliding window of recent trust values backs the
//! volatility estimate that drives exploration.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrustParams {
    /// Gain per unit of support.
    pub support_rate: f64,
    /// Loss per unit of dissatisfaction. Deliberately larger than
    /// `support_rate` by default: trust is easier to lose than to win.
    pub dissatisfaction_rate: f64,
    /// Pull toward the long-term average.
    pub reversion_rate: f64,
    /// EMA rate of the long-term average.
    pub smoothing: f64,
    /// Sliding-window length for the volatility estimate.
    pub window: usize,
}

impl Default for TrustParams {
    fn default() -> Self {
        TrustParams {
            support_rate: 0.1,
            dissatisfaction_rate: 0.2,
            reversion_rate: 0.05,
            smoothing: 0.01,
            window: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrustState {
    value: f64,
    long_term: f64,
    history: VecDeque<f64>,
}

impl Default for TrustState {
    fn default() -> Self {
        Self::new()
    }
}

impl TrustState {
    /// Neutral initial trust.
    pub fn new() -> Self {
        TrustState { value: 0.0, long_term: 0.0, history: VecDeque::new() }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn long_term(&self) -> f64 {
        self.long_term
    }

    /// Apply one trust update for an observed outcome.
    pub fn update(&mut self, params: &TrustParams, support: f64, dissatisfaction: f64) {
        assert!(
            (0.0..=1.0).contains(&support),
            "support must lie in [0, 1], got {support}"
        );
        assert!(
            dissatisfaction >= 0.0,
            "dissatisfaction must be non-negative, got {dissatisfaction}"
        );
        let delta = params.support_rate * support
            - params.dissatisfaction_rate * dissatisfaction
            + params.reversion_rate * (self.long_term - self.value);
        self.value = (self.value + delta).clamp(-1.0, 1.0);
        self.long_term = (1.0 - params.smoothing) * self.long_term + params.smoothing * self.value;
        while self.history.len() >= params.window.max(1) {
            self.history.pop_front();
        }
        self.history.push_back(self.value);
    }

    /// Population standard deviation of the windowed trust history; 0.0
    /// with fewer than two recorded values.
    pub fn recent_std(&self) -> f64 {
        if self.history.len() < 2 {
            return 0.0;
        }
        let n = self.history.len() as f64;
        let mean = self.history.iter().sum::<f64>() / n;
        let var = self.history.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        var.sqrt()
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn initial_state_is_neutral() {
        let t = TrustState::new();
        assert_eq!(t.value(), 0.0);
        assert_eq!(t.long_term(), 0.0);
        assert_eq!(t.recent_std(), 0.0);
    }

    #[test]
    fn pure_support_step_from_zero() {
        let mut t = TrustState::new();
        t.update(&TrustParams::default(), 1.0, 0.0);
        assert_eq!(t.value(), 0.1);
        assert_eq!(t.long_term(), 0.001);
    }

    #[test]
    fn clips_at_the_upper_bound() {
        let params = TrustParams { support_rate: 0.2, dissatisfaction_rate: 0.0, reversion_rate: 0.0, ..TrustParams::default() };
        let mut t = TrustState::new();
        // drive the value to 0.95 first
        for _ in 0..100 {
            t.update(&params, 1.0, 0.0);
        }
        assert_eq!(t.value(), 1.0);
    }

    #[test]
    fn no_signals_at_equilibrium_is_a_fixed_point() {
        let mut t = TrustState::new();
        t.update(&TrustParams::default(), 0.0, 0.0);
        assert_eq!(t.value(), 0.0);
        assert_eq!(t.long_term(), 0.0);
    }

    #[test]
    fn reversion_pulls_toward_long_term() {
        let params = TrustParams::default();
        let mut t = TrustState::new();
        // build a positive long-term average, then crash the value
        for _ in 0..200 {
            t.update(&params, 1.0, 0.0);
        }
        for _ in 0..8 {
            t.update(&params, 0.0, 1.0);
        }
        let below = t.value();
        assert!(below < t.long_term());
        t.update(&params, 0.0, 0.0);
        assert!(t.value() > below, "reversion must pull the value back up");
    }

    #[test]
    fn recent_std_of_two_point_history() {
        // force history [0.0, 1.0]: population std = 0.5
        let params = TrustParams { support_rate: 1.0, dissatisfaction_rate: 1.0, reversion_rate: 0.0, ..TrustParams::default() };
        let mut t = TrustState::new();
        t.update(&params, 0.0, 0.0); // stays 0.0
        t.update(&params, 1.0, 0.0); // jumps to 1.0
        assert_eq!(t.recent_std(), 0.5);
    }

    #[test]
    fn constant_history_has_zero_std() {
        let mut t = TrustState::new();
        let params = TrustParams::default();
        for _ in 0..10 {
            t.update(&params, 0.0, 0.0);
        }
        assert_eq!(t.recent_std(), 0.0);
    }

    #[test]
    fn history_is_capped_at_window() {
        let params = TrustParams { window: 5, ..TrustParams::default() };
        let mut t = TrustState::new();
        for _ in 0..20 {
            t.update(&params, 1.0, 0.0);
        }
        assert_eq!(t.history_len(), 5);
    }

    #[test]
    #[should_panic(expected = "support")]
    fn support_above_one_rejected() {
        TrustState::new().update(&TrustParams::default(), 1.5, 0.0);
    }

    #[test]
    #[should_panic(expected = "dissatisfaction")]
    fn negative_dissatisfaction_rejected() {
        TrustState::new().update(&TrustParams::default(), 0.5, -0.1);
    }

    /// Bounds hold under arbitrary admissible signal sequences.
    #[test]
    fn bounded_under_random_signals() {
        let mut rng = RngStream::new(99);
        for _ in 0..200 {
            let params = TrustParams {
                support_rate: rng.next_f64() * 0.5,
                dissatisfaction_rate: rng.next_f64() * 0.5,
                reversion_rate: rng.next_f64() * 0.2,
                smoothing: rng.next_f64() * 0.5,
                window: 1 + rng.below(60) as usize,
            };
            let mut t = TrustState::new();
            for _ in 0..100 {
                t.update(&params, rng.next_f64(), rng.next_f64() * 2.0);
                assert!((-1.0..=1.0).contains(&t.value()));
                assert!((-1.0..=1.0).contains(&t.long_term()));
            }
        }
    }
}
