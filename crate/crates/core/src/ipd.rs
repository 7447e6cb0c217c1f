//! Iterated prisoner's dilemma: payoff matrix, match engine, and the
//! round-robin tournament driver.
//!
//! Matches are symmetric simultaneous-move episodes. Each player sees only
//! its own history, encoded as the last joint move from its own
//! perspective, so any [`Policy`] can play.

use crate::rng::RngStream;
use crate::signals::{Observation, IPD_GREEDINESS};
use crate::sim::{run_episode, AgentSlot, Environment, EpisodeDetail, Policy, StateKey};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    Cooperate,
    Defect,
}

impl Move {
    pub fn index(self) -> usize {
        match self {
            Move::Cooperate => 0,
            Move::Defect => 1,
        }
    }

    pub fn from_action(action: usize) -> Move {
        match action {
            0 => Move::Cooperate,
            1 => Move::Defect,
            _ => panic!("invalid dilemma action {action}"),
        }
    }

    pub fn cooperated(self) -> bool {
        self == Move::Cooperate
    }
}

/// Average per-round payoff a player must exceed for a match to count as a
/// success.
pub const SUCCESS_THRESHOLD: f64 = 2.5;

/// Symmetric two-player payoff matrix, named by role.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PayoffMatrix {
    pub reward: f64,
    pub temptation: f64,
    pub sucker: f64,
    pub punishment: f64,
}

impl PayoffMatrix {
    /// Validates the dilemma ordering: temptation > reward > punishment >
    /// sucker, and mutual cooperation beating alternating exploitation.
    pub fn new(reward: f64, temptation: f64, sucker: f64, punishment: f64) -> Self {
        assert!(
            temptation > reward && reward > punishment && punishment > sucker,
            "payoffs do not form a dilemma: T={temptation} R={reward} P={punishment} S={sucker}"
        );
        assert!(
            2.0 * reward > temptation + sucker,
            "alternation must not beat mutual cooperation"
        );
        PayoffMatrix { reward, temptation, sucker, punishment }
    }

    pub fn standard() -> Self {
        PayoffMatrix::new(3.0, 5.0, 0.0, 1.0)
    }

    /// Payoffs for (a, b) given their simultaneous moves.
    pub fn payoff(&self, a: Move, b: Move) -> (f64, f64) {
        match (a, b) {
            (Move::Cooperate, Move::Cooperate) => (self.reward, self.reward),
            (Move::Cooperate, Move::Defect) => (self.sucker, self.temptation),
            (Move::Defect, Move::Cooperate) => (self.temptation, self.sucker),
            (Move::Defect, Move::Defect) => (self.punishment, self.punishment),
        }
    }
}

/// State key from one player's perspective: 0 before any round, otherwise
/// 1 + 2 * own_last + opponent_last.
pub fn ipd_state_key(last: Option<(Move, Move)>) -> StateKey {
    match last {
        None => StateKey(0),
        Some((own, opp)) => StateKey(1 + 2 * own.index() as u64 + opp.index() as u64),
    }
}

/// Inverse of [`ipd_state_key`].
pub fn decode_ipd_state(key: StateKey) -> Option<(Move, Move)> {
    match key.0 {
        0 => None,
        k @ 1..=4 => {
            let k = k - 1;
            Some((Move::from_action((k / 2) as usize), Move::from_action((k % 2) as usize)))
        }
        k => panic!("invalid dilemma state key {k}"),
    }
}

pub struct IpdEnv {
    payoff: PayoffMatrix,
    rounds: usize,
    played: usize,
    last: Option<(Move, Move)>,
    log: Vec<(Move, Move)>,
    totals: [f64; 2],
}

impl IpdEnv {
    pub fn new(payoff: PayoffMatrix, rounds: usize) -> Self {
        assert!(rounds > 0, "a match needs at least one round");
        IpdEnv { payoff, rounds, played: 0, last: None, log: Vec::new(), totals: [0.0, 0.0] }
    }

    pub fn log(&self) -> &[(Move, Move)] {
        &self.log
    }

    pub fn totals(&self) -> [f64; 2] {
        self.totals
    }

    fn key_for(&self, player: usize) -> StateKey {
        match self.last {
            None => ipd_state_key(None),
            Some((m0, m1)) => {
                if player == 0 {
                    ipd_state_key(Some((m0, m1)))
                } else {
                    ipd_state_key(Some((m1, m0)))
                }
            }
        }
    }
}

impl Environment for IpdEnv {
    fn n_agents(&self) -> usize {
        2
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn reset(&mut self, _rng: &mut RngStream) {
        self.played = 0;
        self.last = None;
        self.log.clear();
        self.totals = [0.0, 0.0];
    }

    fn done(&self) -> bool {
        self.played >= self.rounds
    }

    fn step(&mut self, slots: &mut [AgentSlot], rng: &mut RngStream) {
        let key0 = self.key_for(0);
        let key1 = self.key_for(1);
        let m0 = Move::from_action(slots[0].act(key0, &IPD_GREEDINESS, rng));
        let m1 = Move::from_action(slots[1].act(key1, &IPD_GREEDINESS, rng));
        let (r0, r1) = self.payoff.payoff(m0, m1);
        self.totals[0] += r0;
        self.totals[1] += r1;
        self.last = Some((m0, m1));
        self.log.push((m0, m1));
        self.played += 1;
        let moves = [(m0, m1, r0), (m1, m0, r1)];
        for (player, (own, opp, reward)) in moves.into_iter().enumerate() {
            let state = if player == 0 { key0 } else { key1 };
            slots[player].record(crate::sim::PendingStep {
                state,
                action: own.index(),
                reward,
                observation: Observation::Ipd {
                    own_cooperated: Some(own.cooperated()),
                    opponent_cooperated: Some(opp.cooperated()),
                },
            });
        }
    }

    fn episode_detail(&self) -> EpisodeDetail {
        EpisodeDetail::None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub total_a: f64,
    pub total_b: f64,
    pub rounds: usize,
    pub moves: Vec<(Move, Move)>,
}

impl MatchResult {
    /// Whether the given player's average payoff clears the success bar.
    pub fn success(&self, player: usize) -> bool {
        let total = if player == 0 { self.total_a } else { self.total_b };
        total / self.rounds as f64 > SUCCESS_THRESHOLD
    }

    /// Totals recomputed from the move log; must equal the recorded totals.
    pub fn replay_totals(&self, payoff: &PayoffMatrix) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for &(ma, mb) in &self.moves {
            let (ra, rb) = payoff.payoff(ma, mb);
            a += ra;
            b += rb;
        }
        (a, b)
    }
}

/// Play one match between two freshly constructed players.
pub fn play_match(
    a: Box<dyn Policy>,
    b: Box<dyn Policy>,
    payoff: PayoffMatrix,
    rounds: usize,
    rng: &mut RngStream,
) -> MatchResult {
    let mut env = IpdEnv::new(payoff, rounds);
    let mut players = vec![a, b];
    let metrics = run_episode(&mut env, &mut players, rng);
    debug_assert_eq!(metrics.returns, env.totals().to_vec());
    MatchResult {
        total_a: env.totals()[0],
        total_b: env.totals()[1],
        rounds,
        moves: env.log().to_vec(),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TournamentConfig {
    pub payoff: PayoffMatrix,
    pub rounds: usize,
    pub games_per_pair: usize,
    pub include_self_play: bool,
}

impl Default for TournamentConfig {
    fn default() -> Self {
        TournamentConfig {
            payoff: PayoffMatrix::standard(),
            rounds: 500,
            games_per_pair: 30,
            include_self_play: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatchRecord {
    pub strategy_a: usize,
    pub strategy_b: usize,
    pub game: usize,
    pub result: MatchResult,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Standing {
    pub successes: usize,
    pub games: usize,
}

impl Standing {
    pub fn rate(&self) -> f64 {
        if self.games == 0 {
            0.0
        } else {
            self.successes as f64 / self.games as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct TournamentResult {
    pub n_strategies: usize,
    pub rounds: usize,
    pub records: Vec<MatchRecord>,
}

impl TournamentResult {
    /// Per-strategy success counts aggregated over every game the strategy
    /// played, on either side of the pairing (self-play counts twice).
    pub fn standings(&self) -> Vec<Standing> {
        let mut out = vec![Standing { successes: 0, games: 0 }; self.n_strategies];
        for rec in &self.records {
            out[rec.strategy_a].games += 1;
            out[rec.strategy_b].games += 1;
            if rec.result.success(0) {
                out[rec.strategy_a].successes += 1;
            }
            if rec.result.success(1) {
                out[rec.strategy_b].successes += 1;
            }
        }
        out
    }

    /// Mean per-round payoffs over the games of one ordered pairing.
    pub fn mean_pair_payoff(&self, strategy_a: usize, strategy_b: usize) -> Option<(f64, f64)> {
        let mut a = 0.0;
        let mut b = 0.0;
        let mut n = 0usize;
        for rec in &self.records {
            if rec.strategy_a == strategy_a && rec.strategy_b == strategy_b {
                a += rec.result.total_a / rec.result.rounds as f64;
                b += rec.result.total_b / rec.result.rounds as f64;
                n += 1;
            }
        }
        if n == 0 {
            None
        } else {
            Some((a / n as f64, b / n as f64))
        }
    }
}

/// Round-robin over every ordered pairing of strategies. Each match gets
/// fresh player instances from the factory and its own random stream
/// derived from the master seed, so the schedule order cannot influence
/// outcomes.
pub fn round_robin(
    n_strategies: usize,
    factory: &mut dyn FnMut(usize) -> Box<dyn Policy>,
    cfg: &TournamentConfig,
    master_seed: u64,
) -> TournamentResult {
    let mut records = Vec::new();
    let mut ordinal = 0u64;
    for a in 0..n_strategies {
        for b in 0..n_strategies {
            if a == b && !cfg.include_self_play {
                continue;
            }
            for game in 0..cfg.games_per_pair {
                let mut rng = RngStream::derived(master_seed, ordinal);
                ordinal += 1;
                let result = play_match(factory(a), factory(b), cfg.payoff, cfg.rounds, &mut rng);
                records.push(MatchRecord { strategy_a: a, strategy_b: b, game, result });
            }
        }
    }
    TournamentResult { n_strategies, rounds: cfg.rounds, records }
}
