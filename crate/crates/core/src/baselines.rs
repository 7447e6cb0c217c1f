//! Comparison policies: a plain epsilon-greedy TD learner, a first-visit
//! Monte Carlo controller, the classic fixed dilemma strategies, and a
//! wrapper that forces maximally greedy play for a number of episodes.
//!
//! The TD learner deliberately shares its update and selection conventions
//! with the trust-modulated agent so the two coincide exactly when the
//! trust machinery is switched off.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::agent::{EtlAgent, EtlParams};
use crate::exploration::ExplorationParams;
use crate::ipd::{decode_ipd_state, Move};
use crate::qtable::QTable;
use crate::rng::RngStream;
use crate::signals::{Observation, SignalMapper};
use crate::sim::{Policy, StateKey, Transition};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QLearnerParams {
    pub epsilon: f64,
    pub learn_rate: f64,
    pub discount: f64,
}

impl Default for QLearnerParams {
    fn default() -> Self {
        QLearnerParams { epsilon: 0.1, learn_rate: 0.1, discount: 0.95 }
    }
}

pub struct QLearnerAgent {
    q: QTable,
    params: QLearnerParams,
}

impl QLearnerAgent {
    pub fn new(n_actions: usize, params: QLearnerParams) -> Self {
        assert!((0.0..=1.0).contains(&params.epsilon));
        QLearnerAgent { q: QTable::new(n_actions), params }
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }
}

impl Policy for QLearnerAgent {
    fn select_action(&mut self, state: StateKey, greediness: &[f64], rng: &mut RngStream) -> usize {
        debug_assert_eq!(greediness.len(), self.q.n_actions());
        if rng.chance(1.0 - self.params.epsilon) {
            self.q.greedy_action(state)
        } else {
            rng.below(self.q.n_actions() as u64) as usize
        }
    }

    fn observe(&mut self, t: &Transition, _: &Observation) {
        self.q.td_update(t, self.params.learn_rate, self.params.discount);
    }
}

/// Parameters that leave the trust-modulated agent with every trust
/// pathway disabled: no value penalty, no adaptive epsilon, and a gate
/// that never opens. With the gate permanently closed the greedy branch
/// is taken with probability epsilon itself, so matching a plain learner
/// that explores at rate `exploration_rate` means pinning epsilon at its
/// complement.
pub fn inert_etl_params(exploration_rate: f64) -> EtlParams {
    EtlParams {
        cooperation_weight: 0.0,
        freeze_epsilon: true,
        exploration: ExplorationParams {
            epsilon_init: 1.0 - exploration_rate,
            epsilon_min: 1.0 - exploration_rate,
            epsilon_cap: 1.0 - exploration_rate,
            trust_gate: f64::INFINITY,
            ..ExplorationParams::default()
        },
        ..EtlParams::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McParams {
    pub epsilon: f64,
    pub discount: f64,
}

impl Default for McParams {
    fn default() -> Self {
        McParams { epsilon: 0.1, discount: 0.95 }
    }
}

/// First-visit Monte Carlo control with a running-mean value table.
pub struct McControlAgent {
    q: QTable,
    visits: std::collections::HashMap<(StateKey, usize), u64>,
    episode: Vec<(StateKey, usize, f64)>,
    params: McParams,
}

impl McControlAgent {
    pub fn new(n_actions: usize, params: McParams) -> Self {
        assert!((0.0..=1.0).contains(&params.epsilon));
        McControlAgent {
            q: QTable::new(n_actions),
            visits: std::collections::HashMap::new(),
            episode: Vec::new(),
            params,
        }
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }
}

impl Policy for McControlAgent {
    fn select_action(&mut self, state: StateKey, greediness: &[f64], rng: &mut RngStream) -> usize {
        debug_assert_eq!(greediness.len(), self.q.n_actions());
        if rng.chance(1.0 - self.params.epsilon) {
            self.q.greedy_action(state)
        } else {
            rng.below(self.q.n_actions() as u64) as usize
        }
    }

    fn observe(&mut self, t: &Transition, _: &Observation) {
        self.episode.push((t.state, t.action, t.reward));
    }

    fn end_episode(&mut self) {
        let mut returns = vec![0.0; self.episode.len()];
        let mut g = 0.0;
        for (i, &(_, _, reward)) in self.episode.iter().enumerate().rev() {
            g = reward + self.params.discount * g;
            returns[i] = g;
        }
        let mut seen: HashSet<(StateKey, usize)> = HashSet::new();
        for (i, &(state, action, _)) in self.episode.iter().enumerate() {
            if !seen.insert((state, action)) {
                continue;
            }
            let n = self.visits.entry((state, action)).or_insert(0);
            *n += 1;
            let q = &mut self.q.row_mut(state)[action];
            *q += (returns[i] - *q) / *n as f64;
        }
        self.episode.clear();
    }
}

/// The classic fixed dilemma strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IpdStrategy {
    AlwaysCooperate,
    AlwaysDefect,
    Random,
    TitForTat,
    /// Defects for the first `defect_rounds` rounds, cooperates after.
    DelayedCooperator { defect_rounds: usize },
    /// Cooperates for the first `cooperate_rounds` rounds, defects after.
    DelayedDefector { cooperate_rounds: usize },
}

impl IpdStrategy {
    pub fn action(self, round: usize, opponent_last: Option<Move>, rng: &mut RngStream) -> Move {
        match self {
            IpdStrategy::AlwaysCooperate => Move::Cooperate,
            IpdStrategy::AlwaysDefect => Move::Defect,
            IpdStrategy::Random => {
                if rng.chance(0.5) {
                    Move::Cooperate
                } else {
                    Move::Defect
                }
            }
            IpdStrategy::TitForTat => opponent_last.unwrap_or(Move::Cooperate),
            IpdStrategy::DelayedCooperator { defect_rounds } => {
                if round < defect_rounds {
                    Move::Defect
                } else {
                    Move::Cooperate
                }
            }
            IpdStrategy::DelayedDefector { cooperate_rounds } => {
                if round < cooperate_rounds {
                    Move::Cooperate
                } else {
                    Move::Defect
                }
            }
        }
    }
}

/// Plays a fixed strategy through the [`Policy`] interface, reading the
/// opponent's last move out of the dilemma state key.
pub struct StrategyPlayer {
    strategy: IpdStrategy,
    round: usize,
}

impl StrategyPlayer {
    pub fn new(strategy: IpdStrategy) -> Self {
        StrategyPlayer { strategy, round: 0 }
    }
}

impl Policy for StrategyPlayer {
    fn select_action(&mut self, state: StateKey, _: &[f64], rng: &mut RngStream) -> usize {
        let opponent_last = decode_ipd_state(state).map(|(_, opp)| opp);
        let mv = self.strategy.action(self.round, opponent_last, rng);
        self.round += 1;
        mv.index()
    }

    fn observe(&mut self, _: &Transition, _: &Observation) {}

    fn end_episode(&mut self) {
        self.round = 0;
    }
}

/// Forces the most environment-rated-greedy action for the first
/// `forced_episodes` episodes, then hands control back to the wrapped
/// policy. The wrapped policy keeps observing throughout, so it learns
/// from (and reacts to) the forced behaviour.
pub struct ForcedGreedyWrapper<P: Policy> {
    inner: P,
    forced_episodes: usize,
    episode: usize,
}

impl<P: Policy> ForcedGreedyWrapper<P> {
    pub fn new(inner: P, forced_episodes: usize) -> Self {
        ForcedGreedyWrapper { inner, forced_episodes, episode: 0 }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn forcing(&self) -> bool {
        self.episode < self.forced_episodes
    }
}

/// Index of the largest rating, highest index winning ties, so an
/// all-neutral rating still resolves to the boldest action.
fn boldest_action(greediness: &[f64]) -> usize {
    assert!(!greediness.is_empty());
    let mut best = 0;
    for (i, g) in greediness.iter().enumerate() {
        if *g >= greediness[best] {
            best = i;
        }
    }
    best
}

impl<P: Policy> Policy for ForcedGreedyWrapper<P> {
    fn select_action(&mut self, state: StateKey, greediness: &[f64], rng: &mut RngStream) -> usize {
        if self.forcing() {
            boldest_action(greediness)
        } else {
            self.inner.select_action(state, greediness, rng)
        }
    }

    fn observe(&mut self, t: &Transition, observation: &Observation) {
        self.inner.observe(t, observation);
    }

    fn end_episode(&mut self) {
        self.inner.end_episode();
        self.episode += 1;
    }

    fn trust_level(&self) -> Option<f64> {
        self.inner.trust_level()
    }
}

/// Learning policies selectable from experiment configs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LearnerKind {
    Etl,
    QLearner,
    MonteCarlo,
}

/// Parameter bundle covering every learner kind.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LearnerParams {
    pub etl: EtlParams,
    pub q: QLearnerParams,
    pub mc: McParams,
}

impl LearnerKind {
    pub fn build(self, n_actions: usize, mapper: SignalMapper, params: &LearnerParams) -> Box<dyn Policy> {
        match self {
            LearnerKind::Etl => Box::new(EtlAgent::new(n_actions, mapper, params.etl.clone())),
            LearnerKind::QLearner => Box::new(QLearnerAgent::new(n_actions, params.q)),
            LearnerKind::MonteCarlo => Box::new(McControlAgent::new(n_actions, params.mc)),
        }
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "etl" => Ok(LearnerKind::Etl),
            "qlearn" => Ok(LearnerKind::QLearner),
            "mc" => Ok(LearnerKind::MonteCarlo),
            other => Err(format!("unknown learner '{other}' (expected etl, qlearn, or mc)")),
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LearnerKind::Etl => "etl",
            LearnerKind::QLearner => "qlearn",
            LearnerKind::MonteCarlo => "mc",
        };
        f.write_str(s)
    }
}

/// A tournament entrant: either a learner or a fixed strategy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StrategySpec {
    Learner(LearnerKind),
    Fixed(IpdStrategy),
}

impl StrategySpec {
    pub fn build_ipd(self, params: &LearnerParams) -> Box<dyn Policy> {
        match self {
            StrategySpec::Learner(kind) => kind.build(2, SignalMapper::Ipd, params),
            StrategySpec::Fixed(strategy) => Box::new(StrategyPlayer::new(strategy)),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(kind) = LearnerKind::from_str(s) {
            return Ok(StrategySpec::Learner(kind));
        }
        let fixed = match s {
            "allc" => Some(IpdStrategy::AlwaysCooperate),
            "alld" => Some(IpdStrategy::AlwaysDefect),
            "random" => Some(IpdStrategy::Random),
            "tft" => Some(IpdStrategy::TitForTat),
            _ => None,
        };
        if let Some(strategy) = fixed {
            return Ok(StrategySpec::Fixed(strategy));
        }
        if let Some(rounds) = s.strip_prefix("delayed_coop:") {
            let defect_rounds =
                rounds.parse().map_err(|_| format!("bad round count in '{s}'"))?;
            return Ok(StrategySpec::Fixed(IpdStrategy::DelayedCooperator { defect_rounds }));
        }
        if let Some(rounds) = s.strip_prefix("delayed_defect:") {
            let cooperate_rounds =
                rounds.parse().map_err(|_| format!("bad round count in '{s}'"))?;
            return Ok(StrategySpec::Fixed(IpdStrategy::DelayedDefector { cooperate_rounds }));
        }
        Err(format!(
            "unknown strategy '{s}' (expected a learner, allc, alld, random, tft, \
             delayed_coop:N, or delayed_defect:N)"
        ))
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::Learner(kind) => kind.fmt(f),
            StrategySpec::Fixed(IpdStrategy::AlwaysCooperate) => f.write_str("allc"),
            StrategySpec::Fixed(IpdStrategy::AlwaysDefect) => f.write_str("alld"),
            StrategySpec::Fixed(IpdStrategy::Random) => f.write_str("random"),
            StrategySpec::Fixed(IpdStrategy::TitForTat) => f.write_str("tft"),
            StrategySpec::Fixed(IpdStrategy::DelayedCooperator { defect_rounds }) => {
                write!(f, "delayed_coop:{defect_rounds}")
            }
            StrategySpec::Fixed(IpdStrategy::DelayedDefector { cooperate_rounds }) => {
                write!(f, "delayed_defect:{cooperate_rounds}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipd::{play_match, PayoffMatrix};

    #[test]
    fn q_learner_updates_values_like_the_shared_table() {
        let mut agent = QLearnerAgent::new(2, QLearnerParams::default());
        let t = Transition {
            state: StateKey(1),
            action: 0,
            reward: 1.0,
            next_state: StateKey(2),
            terminal: true,
        };
        agent.observe(&t, &Observation::None);
        assert_eq!(agent.q_table().value(StateKey(1), 0), 0.1);
    }

    #[test]
    fn q_learner_is_greedy_when_epsilon_is_zero() {
        let mut agent =
            QLearnerAgent::new(3, QLearnerParams { epsilon: 0.0, ..QLearnerParams::default() });
        agent.observe(
            &Transition {
                state: StateKey(0),
                action: 2,
                reward: 5.0,
                next_state: StateKey(0),
                terminal: true,
            },
            &Observation::None,
        );
        let mut rng = RngStream::new(1);
        for _ in 0..100 {
            assert_eq!(agent.select_action(StateKey(0), &[0.0; 3], &mut rng), 2);
        }
    }

    #[test]
    fn q_learner_explores_every_action_at_full_epsilon() {
        let mut agent =
            QLearnerAgent::new(4, QLearnerParams { epsilon: 1.0, ..QLearnerParams::default() });
        let mut rng = RngStream::new(2);
        let mut hit = [false; 4];
        for _ in 0..200 {
            hit[agent.select_action(StateKey(0), &[0.0; 4], &mut rng)] = true;
        }
        assert_eq!(hit, [true; 4]);
    }

    fn mc_transition(state: u64, action: usize, reward: f64) -> Transition {
        Transition {
            state: StateKey(state),
            action,
            reward,
            next_state: StateKey(0),
            terminal: false,
        }
    }

    #[test]
    fn mc_learns_nothing_until_the_episode_ends() {
        let mut agent = McControlAgent::new(2, McParams::default());
        agent.observe(&mc_transition(0, 0, 4.0), &Observation::None);
        assert_eq!(agent.q_table().value(StateKey(0), 0), 0.0);
        agent.end_episode();
        assert_eq!(agent.q_table().value(StateKey(0), 0), 4.0);
    }

    #[test]
    fn mc_first_visit_running_mean() {
        let mut agent = McControlAgent::new(2, McParams { epsilon: 0.1, discount: 1.0 });
        // (s0,a0) recurs within the episode: only the first visit counts,
        // with the return measured from that first visit
        agent.observe(&mc_transition(0, 0, 1.0), &Observation::None);
        agent.observe(&mc_transition(1, 1, 2.0), &Observation::None);
        agent.observe(&mc_transition(0, 0, 3.0), &Observation::None);
        agent.end_episode();
        assert_eq!(agent.q_table().value(StateKey(0), 0), 6.0);
        assert_eq!(agent.q_table().value(StateKey(1), 1), 5.0);
        // a second episode averages in
        agent.observe(&mc_transition(0, 0, 0.0), &Observation::None);
        agent.end_episode();
        assert_eq!(agent.q_table().value(StateKey(0), 0), 3.0);
    }

    #[test]
    fn mc_discounts_returns() {
        let mut agent = McControlAgent::new(2, McParams { epsilon: 0.1, discount: 0.5 });
        agent.observe(&mc_transition(0, 0, 0.0), &Observation::None);
        agent.observe(&mc_transition(1, 0, 8.0), &Observation::None);
        agent.end_episode();
        assert_eq!(agent.q_table().value(StateKey(0), 0), 4.0);
        assert_eq!(agent.q_table().value(StateKey(1), 0), 8.0);
    }

    #[test]
    fn fixed_strategy_reference_moves() {
        let mut rng = RngStream::new(3);
        let c = Move::Cooperate;
        let d = Move::Defect;
        assert_eq!(IpdStrategy::AlwaysCooperate.action(0, None, &mut rng), c);
        assert_eq!(IpdStrategy::AlwaysDefect.action(5, Some(c), &mut rng), d);
        assert_eq!(IpdStrategy::TitForTat.action(0, None, &mut rng), c);
        assert_eq!(IpdStrategy::TitForTat.action(3, Some(d), &mut rng), d);
        assert_eq!(IpdStrategy::TitForTat.action(4, Some(c), &mut rng), c);
        let dc = IpdStrategy::DelayedCooperator { defect_rounds: 3 };
        assert_eq!(dc.action(2, Some(c), &mut rng), d);
        assert_eq!(dc.action(3, Some(d), &mut rng), c);
        let dd = IpdStrategy::DelayedDefector { cooperate_rounds: 2 };
        assert_eq!(dd.action(1, Some(d), &mut rng), c);
        assert_eq!(dd.action(2, Some(c), &mut rng), d);
    }

    #[test]
    fn random_strategy_mixes() {
        let mut rng = RngStream::new(4);
        let mut coop = 0;
        for _ in 0..1000 {
            if IpdStrategy::Random.action(0, None, &mut rng).cooperated() {
                coop += 1;
            }
        }
        assert!((400..=600).contains(&coop), "random strategy is skewed: {coop}");
    }

    #[test]
    fn strategy_player_drives_a_match() {
        let mut rng = RngStream::new(5);
        let r = play_match(
            Box::new(StrategyPlayer::new(IpdStrategy::TitForTat)),
            Box::new(StrategyPlayer::new(IpdStrategy::AlwaysDefect)),
            PayoffMatrix::standard(),
            500,
            &mut rng,
        );
        // one sucker round, then mutual defection
        assert_eq!((r.total_a, r.total_b), (499.0, 504.0));
    }

    #[test]
    fn delayed_defector_betrays_on_schedule() {
        let mut rng = RngStream::new(6);
        let r = play_match(
            Box::new(StrategyPlayer::new(IpdStrategy::AlwaysCooperate)),
            Box::new(StrategyPlayer::new(IpdStrategy::DelayedDefector { cooperate_rounds: 50 })),
            PayoffMatrix::standard(),
            500,
            &mut rng,
        );
        assert_eq!(r.total_a, 50.0 * 3.0);
        assert_eq!(r.total_b, 50.0 * 3.0 + 450.0 * 5.0);
    }

    #[test]
    fn boldest_action_prefers_highest_index_on_ties() {
        assert_eq!(boldest_action(&[0.0, 0.5, 1.0]), 2);
        assert_eq!(boldest_action(&[0.0; 6]), 5);
        assert_eq!(boldest_action(&[1.0, 0.2]), 0);
    }

    #[test]
    fn forced_greedy_wrapper_releases_after_the_quota() {
        struct Marker;
        impl Policy for Marker {
            fn select_action(&mut self, _: StateKey, _: &[f64], _: &mut RngStream) -> usize {
                0
            }
            fn observe(&mut self, _: &Transition, _: &Observation) {}
        }
        let mut wrapped = ForcedGreedyWrapper::new(Marker, 2);
        let mut rng = RngStream::new(7);
        let g = [0.0, 0.5, 1.0];
        assert!(wrapped.forcing());
        assert_eq!(wrapped.select_action(StateKey(0), &g, &mut rng), 2);
        wrapped.end_episode();
        assert_eq!(wrapped.select_action(StateKey(0), &g, &mut rng), 2);
        wrapped.end_episode();
        assert!(!wrapped.forcing());
        assert_eq!(wrapped.select_action(StateKey(0), &g, &mut rng), 0);
    }

    #[test]
    fn spec_ids_round_trip() {
        let ids = [
            "etl",
            "qlearn",
            "mc",
            "allc",
            "alld",
            "random",
            "tft",
            "delayed_coop:50",
            "delayed_defect:7",
        ];
        for id in ids {
            let spec: StrategySpec = id.parse().unwrap();
            assert_eq!(spec.to_string(), id);
        }
        assert!("".parse::<StrategySpec>().is_err());
        assert!("grim".parse::<StrategySpec>().is_err());
        assert!("delayed_coop:x".parse::<StrategySpec>().is_err());
    }

    /// With the trust machinery inert the trust agent and the plain TD
    /// learner select identical actions from identical streams.
    #[test]
    fn inert_trust_agent_tracks_the_plain_learner() {
        let mut etl = EtlAgent::new(2, SignalMapper::Ipd, inert_etl_params(0.1));
        let mut ql = QLearnerAgent::new(2, QLearnerParams::default());
        let mut rng_a = RngStream::new(8);
        let mut rng_b = RngStream::new(8);
        let mut state = StateKey(0);
        let mut driver = RngStream::new(9);
        for _ in 0..2_000 {
            let a = etl.select_action(state, &[0.0, 1.0], &mut rng_a);
            let b = ql.select_action(state, &[0.0, 1.0], &mut rng_b);
            assert_eq!(a, b);
            let next = StateKey(driver.below(5));
            let t = Transition {
                state,
                action: a,
                reward: driver.next_f64() * 5.0,
                next_state: next,
                terminal: driver.chance(0.05),
            };
            let obs = Observation::Ipd {
                own_cooperated: Some(a == 0),
                opponent_cooperated: Some(driver.chance(0.5)),
            };
            etl.observe(&t, &obs);
            ql.observe(&t, &obs);
            assert_eq!(
                etl.q_table().value(state, a),
                ql.q_table().value(state, a),
                "value tables diverged"
            );
            state = next;
        }
    }
}
