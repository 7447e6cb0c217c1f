//! Whole training runs replay exactly from a seed, and distinct seeds
//! genuinely change the course of training.

use etl_core::agent::{EtlAgent, EtlParams};
use etl_core::grid::{GridConfig, GridEnv};
use etl_core::ipd::{IpdEnv, PayoffMatrix};
use etl_core::rng::RngStream;
use etl_core::signals::SignalMapper;
use etl_core::sim::{run_episode, Environment, EpisodeMetrics, Policy};
use etl_core::tower::{TowerConfig, TowerEnv};

fn train<E: Environment>(env: &mut E, mapper: SignalMapper, episodes: usize, seed: u64) -> Vec<EpisodeMetrics> {
    let mut policies: Vec<Box<dyn Policy>> = (0..env.n_agents())
        .map(|_| {
            Box::new(EtlAgent::new(env.n_actions(), mapper.clone(), EtlParams::default()))
                as Box<dyn Policy>
        })
        .collect();
    let mut rng = RngStream::new(seed);
    (0..episodes).map(|_| run_episode(env, &mut policies, &mut rng)).collect()
}

#[test]
fn tower_training_replays_exactly() {
    let run = |seed| train(&mut TowerEnv::new(TowerConfig::default()), SignalMapper::Tower, 60, seed);
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}

#[test]
fn grid_training_replays_exactly() {
    let cfg = GridConfig { width: 8, height: 8, steps_per_episode: 80, ..GridConfig::default() };
    let mapper = SignalMapper::Grid { stability_scale: 1.0 };
    let run = |seed| train(&mut GridEnv::new(cfg), mapper.clone(), 10, seed);
    assert_eq!(run(7), run(7));
    assert_ne!(run(7), run(8));
}

#[test]
fn dilemma_training_replays_exactly() {
    let run = |seed| train(&mut IpdEnv::new(PayoffMatrix::standard(), 300), SignalMapper::Ipd, 8, seed);
    assert_eq!(run(9), run(9));
    assert_ne!(run(9), run(10));
}
