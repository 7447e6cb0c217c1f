//! With every trust pathway disabled, the trust-modulated agent must be
//! indistinguishable from the plain epsilon-greedy TD learner: identical
//! actions, rewards, and value tables over whole training runs, in every
//! environment, from identical random streams.

use std::cell::RefCell;
use std::rc::Rc;

use etl_core::baselines::{inert_etl_params, QLearnerAgent, QLearnerParams};
use etl_core::grid::{GridConfig, GridEnv};
use etl_core::ipd::{IpdEnv, PayoffMatrix};
use etl_core::rng::RngStream;
use etl_core::signals::{Observation, SignalMapper};
use etl_core::sim::{run_episode, Environment, Policy, StateKey, Transition};
use etl_core::tower::{TowerConfig, TowerEnv};
use etl_core::EtlAgent;

type Log = Rc<RefCell<Vec<(u64, usize, f64)>>>;

struct Recording {
    inner: Box<dyn Policy>,
    log: Log,
}

impl Policy for Recording {
    fn select_action(&mut self, state: StateKey, greediness: &[f64], rng: &mut RngStream) -> usize {
        let action = self.inner.select_action(state, greediness, rng);
        self.log.borrow_mut().push((state.0, action, f64::NAN));
        action
    }

    fn observe(&mut self, t: &Transition, observation: &Observation) {
        self.log.borrow_mut().push((t.state.0, t.action, t.reward));
        self.inner.observe(t, observation);
    }

    fn end_episode(&mut self) {
        self.inner.end_episode();
    }
}

enum Roster {
    PlainLearners,
    InertTrustAgents(SignalMapper),
}

/// Train a full roster for several episodes and return per-agent logs of
/// every selection and every observed transition.
fn trace<E: Environment>(env: &mut E, roster: Roster, episodes: usize, seed: u64) -> Vec<Vec<(u64, usize, f64)>> {
    let n = env.n_agents();
    let n_actions = env.n_actions();
    let logs: Vec<Log> = (0..n).map(|_| Rc::new(RefCell::new(Vec::new()))).collect();
    let mut policies: Vec<Box<dyn Policy>> = logs
        .iter()
        .map(|log| {
            let inner: Box<dyn Policy> = match &roster {
                Roster::PlainLearners => {
                    Box::new(QLearnerAgent::new(n_actions, QLearnerParams::default()))
                }
                Roster::InertTrustAgents(mapper) => {
                    Box::new(EtlAgent::new(n_actions, mapper.clone(), inert_etl_params(0.1)))
                }
            };
            Box::new(Recording { inner, log: Rc::clone(log) }) as Box<dyn Policy>
        })
        .collect();
    let mut rng = RngStream::new(seed);
    for _ in 0..episodes {
        run_episode(env, &mut policies, &mut rng);
    }
    logs.iter().map(|log| log.borrow().clone()).collect()
}

fn assert_traces_match(a: &[Vec<(u64, usize, f64)>], b: &[Vec<(u64, usize, f64)>]) {
    assert_eq!(a.len(), b.len());
    for (agent, (x, y)) in a.iter().zip(b).enumerate() {
        assert_eq!(x.len(), y.len(), "agent {agent}: log lengths differ");
        for (i, (p, q)) in x.iter().zip(y).enumerate() {
            let same = p.0 == q.0 && p.1 == q.1 && (p.2 == q.2 || (p.2.is_nan() && q.2.is_nan()));
            assert!(same, "agent {agent} diverges at log entry {i}: {p:?} vs {q:?}");
        }
    }
}

#[test]
fn inert_agent_matches_plain_learner_in_the_tower() {
    let mut env = TowerEnv::new(TowerConfig::default());
    let plain = trace(&mut env, Roster::PlainLearners, 40, 71);
    let mut env = TowerEnv::new(TowerConfig::default());
    let inert = trace(&mut env, Roster::InertTrustAgents(SignalMapper::Tower), 40, 71);
    assert!(plain.iter().map(|l| l.len()).sum::<usize>() > 1_000);
    assert_traces_match(&plain, &inert);
}

#[test]
fn inert_agent_matches_plain_learner_on_the_grid() {
    let cfg = GridConfig { width: 8, height: 8, steps_per_episode: 120, ..GridConfig::default() };
    let mut env = GridEnv::new(cfg);
    let plain = trace(&mut env, Roster::PlainLearners, 8, 72);
    let mut env = GridEnv::new(cfg);
    let inert = trace(
        &mut env,
        Roster::InertTrustAgents(SignalMapper::Grid { stability_scale: 1.0 }),
        8,
        72,
    );
    assert!(plain.iter().map(|l| l.len()).sum::<usize>() > 1_000);
    assert_traces_match(&plain, &inert);
}

#[test]
fn inert_agent_matches_plain_learner_in_the_dilemma() {
    let mut env = IpdEnv::new(PayoffMatrix::standard(), 400);
    let plain = trace(&mut env, Roster::PlainLearners, 6, 73);
    let mut env = IpdEnv::new(PayoffMatrix::standard(), 400);
    let inert = trace(&mut env, Roster::InertTrustAgents(SignalMapper::Ipd), 6, 73);
    assert!(plain.iter().map(|l| l.len()).sum::<usize>() > 1_000);
    assert_traces_match(&plain, &inert);
}
