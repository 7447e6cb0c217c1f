//! Executes a configured experiment and writes its results.
//!
//! Every run emits one CSV of raw per-episode (or per-match) rows plus a
//! `.meta.toml` sidecar holding the content fingerprint and the fully
//! normalized settings, so any results file can be traced back to an exact,
//! re-runnable configuration. The same rows are returned in typed form for
//! in-process analysis.
//!
//! Output is deterministic: seeds are derived from the master seed by
//! index, rows are emitted in a fixed order, and nothing time- or
//! machine-dependent is written.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use etl_core::baselines::{ForcedGreedyWrapper, LearnerKind, LearnerParams, StrategySpec};
use etl_core::grid::{GridConfig, GridEnv, GRID_ACTIONS};
use etl_core::ipd::{round_robin, TournamentConfig, TournamentResult};
use etl_core::signals::SignalMapper;
use etl_core::sim::EpisodeDetail;
use etl_core::tower::{TowerConfig, TowerEnv, TOWER_ACTIONS};
use etl_core::{run_episode, Policy, RngStream};

use crate::config::{Payload, Settings};
use crate::error::LabError;

#[derive(Clone, Debug)]
pub struct TowerRow {
    pub seed: u64,
    pub episode: usize,
    pub success: bool,
    pub deaths: usize,
    pub returns: Vec<f64>,
    /// Mean trust across roster members that track one; `None` when none do.
    pub mean_trust: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct GridRow {
    pub seed: u64,
    pub episode: usize,
    pub conflicts_per_step: f64,
    pub cooldown_fraction: f64,
    pub remaining_resources: f64,
    pub returns: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MatchRow {
    /// Game index within the ordered pairing; doubles as the match seed id.
    pub seed: usize,
    /// Global match ordinal across the whole tournament.
    pub game: usize,
    pub strategy_a: String,
    pub strategy_b: String,
    pub total_a: f64,
    pub total_b: f64,
    pub success_a: bool,
    pub success_b: bool,
}

#[derive(Clone, Debug)]
pub struct StandingRow {
    pub strategy: String,
    pub games: usize,
    pub successes: usize,
    pub success_rate: f64,
}

pub struct IpdReport {
    pub names: Vec<String>,
    pub result: TournamentResult,
    pub rows: Vec<MatchRow>,
    pub table: Vec<StandingRow>,
}

pub enum ReportData {
    Tower(Vec<TowerRow>),
    Grid(Vec<GridRow>),
    Ipd(IpdReport),
}

pub struct Report {
    pub kind: String,
    pub fingerprint: String,
    /// Everything written, CSVs first, sidecar last.
    pub files: Vec<PathBuf>,
    pub data: ReportData,
}

#[derive(Serialize)]
struct Meta<'a> {
    fingerprint: &'a str,
    settings: &'a Settings,
}

pub fn run_experiment(settings: &Settings, out_dir: &Path) -> Result<Report, LabError> {
    let normalized = settings.normalized()?;
    let fingerprint = normalized.fingerprint()?;
    let experiment = normalized.build()?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| LabError::Io { path: out_dir.to_path_buf(), source: e })?;
    let kind = normalized.kind.clone();

    let (data, mut files) = match &experiment.payload {
        Payload::Tower { cfg, roster, episodes, forced_episodes, params } => {
            let rows = run_tower(
                cfg,
                roster,
                *episodes,
                *forced_episodes,
                params,
                experiment.n_seeds,
                experiment.master_seed,
            );
            let path = out_dir.join(format!("{kind}.csv"));
            write_file(&path, &tower_csv(&rows, roster.len()))?;
            (ReportData::Tower(rows), vec![path])
        }
        Payload::Grid { cfg, roster, episodes, params } => {
            let rows = run_grid(
                cfg,
                roster,
                *episodes,
                params,
                experiment.n_seeds,
                experiment.master_seed,
            );
            let path = out_dir.join(format!("{kind}.csv"));
            write_file(&path, &grid_csv(&rows, roster.len()))?;
            (ReportData::Grid(rows), vec![path])
        }
        Payload::Ipd { tournament, strategies, params } => {
            let report = run_ipd(tournament, strategies, params, experiment.master_seed);
            let matches_path = out_dir.join(format!("{kind}.csv"));
            write_file(&matches_path, &ipd_csv(&report.rows))?;
            let table_path = out_dir.join(format!("{kind}_success.csv"));
            write_file(&table_path, &standings_csv(&report.table))?;
            (ReportData::Ipd(report), vec![matches_path, table_path])
        }
    };

    let meta_path = out_dir.join(format!("{kind}.meta.toml"));
    let meta = toml::to_string(&Meta { fingerprint: &fingerprint, settings: &normalized })
        .expect("normalized settings serialize");
    write_file(&meta_path, &meta)?;
    files.push(meta_path);

    Ok(Report { kind, fingerprint, files, data })
}

fn build_roster(
    roster: &[LearnerKind],
    n_actions: usize,
    mapper: &SignalMapper,
    params: &LearnerParams,
    forced_episodes: Option<usize>,
) -> Vec<Box<dyn Policy>> {
    roster
        .iter()
        .map(|kind| {
            let inner = kind.build(n_actions, mapper.clone(), params);
            match forced_episodes {
                Some(n) => Box::new(ForcedGreedyWrapper::new(inner, n)) as Box<dyn Policy>,
                None => inner,
            }
        })
        .collect()
}

fn mean_trust(policies: &[Box<dyn Policy>]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for p in policies {
        if let Some(t) = p.trust_level() {
            sum += t;
            n += 1;
        }
    }
    if n == 0 {
        None
    } else {
        Some(sum / n as f64)
    }
}

fn run_tower(
    cfg: &TowerConfig,
    roster: &[LearnerKind],
    episodes: usize,
    forced_episodes: Option<usize>,
    params: &LearnerParams,
    n_seeds: u64,
    master_seed: u64,
) -> Vec<TowerRow> {
    let mut rows = Vec::with_capacity(n_seeds as usize * episodes);
    for seed in 0..n_seeds {
        let mut rng = RngStream::derived(master_seed, seed);
        let mut policies =
            build_roster(roster, TOWER_ACTIONS, &SignalMapper::Tower, params, forced_episodes);
        let mut env = TowerEnv::new(cfg.clone());
        for episode in 0..episodes {
            let metrics = run_episode(&mut env, &mut policies, &mut rng);
            let (success, deaths) = match metrics.detail {
                EpisodeDetail::Tower { success, deaths } => (success, deaths),
                _ => unreachable!("tower env reports tower detail"),
            };
            rows.push(TowerRow {
                seed,
                episode,
                success,
                deaths,
                returns: metrics.returns,
                mean_trust: mean_trust(&policies),
            });
        }
    }
    rows
}

fn run_grid(
    cfg: &GridConfig,
    roster: &[LearnerKind],
    episodes: usize,
    params: &LearnerParams,
    n_seeds: u64,
    master_seed: u64,
) -> Vec<GridRow> {
    let mapper = SignalMapper::Grid { stability_scale: params.etl.grid_stability_scale };
    let mut rows = Vec::with_capacity(n_seeds as usize * episodes);
    for seed in 0..n_seeds {
        let mut rng = RngStream::derived(master_seed, seed);
        let mut policies = build_roster(roster, GRID_ACTIONS, &mapper, params, None);
        let mut env = GridEnv::new(cfg.clone());
        for episode in 0..episodes {
            let metrics = run_episode(&mut env, &mut policies, &mut rng);
            let (conflicts_per_step, cooldown_fraction, remaining_resources) = match metrics.detail
            {
                EpisodeDetail::Grid {
                    conflicts_per_step,
                    cooldown_fraction,
                    remaining_resources,
                } => (conflicts_per_step, cooldown_fraction, remaining_resources),
                _ => unreachable!("grid env reports grid detail"),
            };
            rows.push(GridRow {
                seed,
                episode,
                conflicts_per_step,
                cooldown_fraction,
                remaining_resources,
                returns: metrics.returns,
            });
        }
    }
    rows
}

fn run_ipd(
    cfg: &TournamentConfig,
    strategies: &[StrategySpec],
    params: &LearnerParams,
    master_seed: u64,
) -> IpdReport {
    let names: Vec<String> = strategies.iter().map(|s| s.to_string()).collect();
    let specs: Vec<StrategySpec> = strategies.to_vec();
    let params = params.clone();
    let mut factory = |i: usize| specs[i].build_ipd(&params);
    let result = round_robin(strategies.len(), &mut factory, cfg, master_seed);

    let rows: Vec<MatchRow> = result
        .records
        .iter()
        .enumerate()
        .map(|(ordinal, rec)| MatchRow {
            seed: rec.game,
            game: ordinal,
            strategy_a: names[rec.strategy_a].clone(),
            strategy_b: names[rec.strategy_b].clone(),
            total_a: rec.result.total_a,
            total_b: rec.result.total_b,
            success_a: rec.result.success(0),
            success_b: rec.result.success(1),
        })
        .collect();
    let table: Vec<StandingRow> = result
        .standings()
        .iter()
        .enumerate()
        .map(|(i, s)| StandingRow {
            strategy: names[i].clone(),
            games: s.games,
            successes: s.successes,
            success_rate: s.rate(),
        })
        .collect();
    IpdReport { names, result, rows, table }
}

fn tower_csv(rows: &[TowerRow], n_agents: usize) -> String {
    let mut out = String::from("seed,episode,success,deaths");
    for i in 0..n_agents {
        let _ = write!(out, ",return_agent{i}");
    }
    out.push_str(",mean_trust\n");
    for r in rows {
        let _ = write!(out, "{},{},{},{}", r.seed, r.episode, r.success as u8, r.deaths);
        for v in &r.returns {
            let _ = write!(out, ",{v}");
        }
        match r.mean_trust {
            Some(t) => {
                let _ = writeln!(out, ",{t}");
            }
            None => out.push_str(",\n"),
        }
    }
    out
}

fn grid_csv(rows: &[GridRow], n_agents: usize) -> String {
    let mut out = String::from("seed,episode,conflicts_per_step,cooldown_fraction,remaining_resources");
    for i in 0..n_agents {
        let _ = write!(out, ",return_agent{i}");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            r.seed, r.episode, r.conflicts_per_step, r.cooldown_fraction, r.remaining_resources
        );
        for v in &r.returns {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn ipd_csv(rows: &[MatchRow]) -> String {
    let mut out = String::from("seed,game,strategy_a,strategy_b,total_a,total_b,success_a,success_b\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.seed,
            r.game,
            r.strategy_a,
            r.strategy_b,
            r.total_a,
            r.total_b,
            r.success_a as u8,
            r.success_b as u8
        );
    }
    out
}

fn standings_csv(rows: &[StandingRow]) -> String {
    let mut out = String::from("strategy,games,successes,success_rate\n");
    for r in rows {
        let _ =
            writeln!(out, "{},{},{},{}", r.strategy, r.games, r.successes, r.success_rate);
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<(), LabError> {
    std::fs::write(path, text)
        .map_err(|e| LabError::Io { path: path.to_path_buf(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn settings(text: &str) -> Settings {
        Settings::from_toml_str(text, &PathBuf::from("test.toml")).unwrap()
    }

    fn tower_text(extra: &str) -> String {
        format!("kind = \"tower\"\nn_seeds = 2\nepisodes = 3\n{extra}")
    }

    #[test]
    fn tower_run_emits_expected_rows_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&settings(&tower_text("")), dir.path()).unwrap();
        let rows = match &report.data {
            ReportData::Tower(rows) => rows,
            _ => panic!("wrong report kind"),
        };
        assert_eq!(rows.len(), 2 * 3);
        assert_eq!(rows[0].returns.len(), 4);
        assert!(rows.iter().all(|r| r.mean_trust.is_some()));
        assert!(rows.iter().all(|r| r.deaths <= 4));

        let text = std::fs::read_to_string(&report.files[0]).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "seed,episode,success,deaths,return_agent0,return_agent1,return_agent2,return_agent3,mean_trust"
        );
        assert_eq!(text.lines().count(), 1 + 6);
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,0,"));
        assert!(!first.ends_with(','), "mean_trust column filled for trust rosters");
    }

    #[test]
    fn trustless_roster_leaves_mean_trust_empty() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tower_text("roster = [\"qlearn\", \"qlearn\", \"mc\", \"qlearn\"]");
        let report = run_experiment(&settings(&cfg), dir.path()).unwrap();
        let text = std::fs::read_to_string(&report.files[0]).unwrap();
        for line in text.lines().skip(1) {
            assert!(line.ends_with(','));
        }
        match &report.data {
            ReportData::Tower(rows) => assert!(rows.iter().all(|r| r.mean_trust.is_none())),
            _ => panic!("wrong report kind"),
        }
    }

    #[test]
    fn recovery_kind_forces_early_greed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = "kind = \"tower_recovery\"\nn_seeds = 1\nepisodes = 4\nforced_episodes = 3";
        let report = run_experiment(&settings(cfg), dir.path()).unwrap();
        let rows = match &report.data {
            ReportData::Tower(rows) => rows,
            _ => panic!("wrong report kind"),
        };
        // while forced, everyone grabs the maximum and the bottom floors starve
        assert!(rows[..3].iter().all(|r| !r.success && r.deaths > 0));
        assert!(report.files[0].ends_with("tower_recovery.csv"));
    }

    #[test]
    fn grid_run_emits_expected_rows_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = "kind = \"grid\"\nn_seeds = 1\nepisodes = 2\n[grid]\nwidth = 6\nheight = 6\nsteps_per_episode = 40";
        let report = run_experiment(&settings(cfg), dir.path()).unwrap();
        let rows = match &report.data {
            ReportData::Grid(rows) => rows,
            _ => panic!("wrong report kind"),
        };
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.remaining_resources >= 0.0));
        let text = std::fs::read_to_string(&report.files[0]).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "seed,episode,conflicts_per_step,cooldown_fraction,remaining_resources,return_agent0,return_agent1,return_agent2,return_agent3"
        );
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn ipd_run_matches_closed_forms() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = "kind = \"ipd\"\n[ipd]\nrounds = 10\ngames_per_pair = 2\nstrategies = [\"allc\", \"alld\"]";
        let report = run_experiment(&settings(cfg), dir.path()).unwrap();
        let ipd = match &report.data {
            ReportData::Ipd(ipd) => ipd,
            _ => panic!("wrong report kind"),
        };
        // 2x2 ordered pairs (self-play on) x 2 games each
        assert_eq!(ipd.rows.len(), 8);
        let exploited: Vec<&MatchRow> =
            ipd.rows.iter().filter(|r| r.strategy_a == "allc" && r.strategy_b == "alld").collect();
        assert_eq!(exploited.len(), 2);
        for row in exploited {
            assert_eq!(row.total_a, 0.0);
            assert_eq!(row.total_b, 50.0);
            assert!(!row.success_a && row.success_b);
        }
        assert_eq!(ipd.table.len(), 2);
        // alld: 2 self games (punishment, fail) + 4 exploit games (win)
        assert_eq!(ipd.table[1].games, 8);
        assert_eq!(ipd.table[1].successes, 4);
        let table_text = std::fs::read_to_string(&report.files[1]).unwrap();
        assert_eq!(table_text.lines().next().unwrap(), "strategy,games,successes,success_rate");
        assert_eq!(table_text.lines().count(), 3);
    }

    #[test]
    fn sidecar_records_fingerprint_and_normalized_settings() {
        let dir = tempfile::tempdir().unwrap();
        let raw = settings(&tower_text(""));
        let report = run_experiment(&raw, dir.path()).unwrap();
        let meta_path = report.files.last().unwrap();
        assert!(meta_path.ends_with("tower.meta.toml"));
        let text = std::fs::read_to_string(meta_path).unwrap();
        let value: toml::Value = text.parse().unwrap();
        assert_eq!(
            value["fingerprint"].as_str().unwrap(),
            raw.fingerprint().unwrap()
        );
        let embedded = toml::to_string(&value["settings"]).unwrap();
        let back = Settings::from_toml_str(&embedded, meta_path).unwrap();
        assert_eq!(back, raw.normalized().unwrap());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cfg = settings(&tower_text(""));
        let a = run_experiment(&cfg, dir_a.path()).unwrap();
        let b = run_experiment(&cfg, dir_b.path()).unwrap();
        for (fa, fb) in a.files.iter().zip(&b.files) {
            assert_eq!(std::fs::read(fa).unwrap(), std::fs::read(fb).unwrap());
        }
    }
}
