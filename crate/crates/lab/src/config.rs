//! Experiment configuration: a TOML schema in which every field is
//! optional, a normalization pass that makes every relevant default
//! explicit, and builders producing the concrete environment and learner
//! parameter structs.
//!
//! Normalized settings are what run sidecars record, so a sidecar is
//! always a complete, re-runnable config regardless of how sparse the
//! original file was.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use etl_core::agent::EtlParams;
use etl_core::baselines::{LearnerKind, LearnerParams, McParams, QLearnerParams, StrategySpec};
use etl_core::exploration::ExplorationParams;
use etl_core::grid::GridConfig;
use etl_core::ipd::{PayoffMatrix, TournamentConfig};
use etl_core::tower::TowerConfig;
use etl_core::trust::TrustParams;

use crate::error::LabError;

pub const DEFAULT_SEEDS: u64 = 30;
pub const DEFAULT_MASTER_SEED: u64 = 42;
pub const DEFAULT_TOWER_EPISODES: usize = 5_000;
pub const DEFAULT_GRID_EPISODES: usize = 500;
pub const DEFAULT_FORCED_EPISODES: usize = 200;

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// One of: tower, tower_recovery, grid, ipd.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_seeds: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episodes: Option<usize>,
    /// Learner id per agent slot (tower and grid kinds).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roster: Option<Vec<String>>,
    /// Episodes of forced greedy play (tower_recovery only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forced_episodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tower: Option<TowerSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ipd: Option<IpdSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSection>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct TowerSection {
    pub floors: Option<usize>,
    pub platform_food: Option<f64>,
    pub hunger_max: Option<f64>,
    pub hunger_growth: Option<f64>,
    pub relief_per_unit: Option<f64>,
    pub rounds_per_episode: Option<usize>,
    pub initial_hunger: Option<f64>,
}

impl TowerSection {
    fn filled(&self) -> Self {
        let d = TowerConfig::default();
        TowerSection {
            floors: self.floors.or(Some(d.floors)),
            platform_food: self.platform_food.or(Some(d.platform_food)),
            hunger_max: self.hunger_max.or(Some(d.hunger_max)),
            hunger_growth: self.hunger_growth.or(Some(d.hunger_growth)),
            relief_per_unit: self.relief_per_unit.or(Some(d.relief_per_unit)),
            rounds_per_episode: self.rounds_per_episode.or(Some(d.rounds_per_episode)),
            initial_hunger: self.initial_hunger.or(Some(d.initial_hunger)),
        }
    }

    fn build(&self) -> TowerConfig {
        let f = self.filled();
        TowerConfig {
            floors: f.floors.unwrap(),
            platform_food: f.platform_food.unwrap(),
            hunger_max: f.hunger_max.unwrap(),
            hunger_growth: f.hunger_growth.unwrap(),
            relief_per_unit: f.relief_per_unit.unwrap(),
            rounds_per_episode: f.rounds_per_episode.unwrap(),
            initial_hunger: f.initial_hunger.unwrap(),
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        let f = self.filled();
        if f.floors.unwrap() == 0 {
            return Err(LabError::config("tower.floors", "must be at least 1"));
        }
        if f.hunger_max.unwrap() <= 0.0 {
            return Err(LabError::config("tower.hunger_max", "must be positive"));
        }
        if f.relief_per_unit.unwrap() <= 0.0 {
            return Err(LabError::config("tower.relief_per_unit", "must be positive"));
        }
        if f.rounds_per_episode.unwrap() == 0 {
            return Err(LabError::config("tower.rounds_per_episode", "must be at least 1"));
        }
        let h0 = f.initial_hunger.unwrap();
        if !(0.0..f.hunger_max.unwrap()).contains(&h0) {
            return Err(LabError::config("tower.initial_hunger", "must lie in [0, hunger_max)"));
        }
        if f.platform_food.unwrap() < 0.0 {
            return Err(LabError::config("tower.platform_food", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub n_agents: Option<usize>,
    pub initial_amount: Option<f64>,
    pub harvest_yield: Option<f64>,
    pub cooldown_steps: Option<u32>,
    pub regrow_per_step: Option<f64>,
    pub steps_per_episode: Option<usize>,
    pub depleted_threshold: Option<f64>,
}

impl GridSection {
    fn filled(&self) -> Self {
        let d = GridConfig::default();
        GridSection {
            width: self.width.or(Some(d.width)),
            height: self.height.or(Some(d.height)),
            n_agents: self.n_agents.or(Some(d.n_agents)),
            initial_amount: self.initial_amount.or(Some(d.initial_amount)),
            harvest_yield: self.harvest_yield.or(Some(d.harvest_yield)),
            cooldown_steps: self.cooldown_steps.or(Some(d.cooldown_steps)),
            regrow_per_step: self.regrow_per_step.or(Some(d.regrow_per_step)),
            steps_per_episode: self.steps_per_episode.or(Some(d.steps_per_episode)),
            depleted_threshold: self.depleted_threshold.or(Some(d.depleted_threshold)),
        }
    }

    fn build(&self) -> GridConfig {
        let f = self.filled();
        GridConfig {
            width: f.width.unwrap(),
            height: f.height.unwrap(),
            n_agents: f.n_agents.unwrap(),
            initial_amount: f.initial_amount.unwrap(),
            harvest_yield: f.harvest_yield.unwrap(),
            cooldown_steps: f.cooldown_steps.unwrap(),
            regrow_per_step: f.regrow_per_step.unwrap(),
            steps_per_episode: f.steps_per_episode.unwrap(),
            depleted_threshold: f.depleted_threshold.unwrap(),
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        let f = self.filled();
        if f.width.unwrap() == 0 || f.height.unwrap() == 0 {
            return Err(LabError::config("grid.width", "grid must be non-empty"));
        }
        let cells = f.width.unwrap() * f.height.unwrap();
        let n = f.n_agents.unwrap();
        if n == 0 || n > cells {
            return Err(LabError::config("grid.n_agents", "must fit on the grid"));
        }
        if f.initial_amount.unwrap() <= 0.0 {
            return Err(LabError::config("grid.initial_amount", "must be positive"));
        }
        if f.harvest_yield.unwrap() <= 0.0 {
            return Err(LabError::config("grid.harvest_yield", "must be positive"));
        }
        if f.regrow_per_step.unwrap() < 0.0 {
            return Err(LabError::config("grid.regrow_per_step", "must be non-negative"));
        }
        if f.steps_per_episode.unwrap() == 0 {
            return Err(LabError::config("grid.steps_per_episode", "must be at least 1"));
        }
        let threshold = f.depleted_threshold.unwrap();
        if !(0.0..=f.initial_amount.unwrap()).contains(&threshold) {
            return Err(LabError::config(
                "grid.depleted_threshold",
                "must lie in [0, initial_amount]",
            ));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct IpdSection {
    pub rounds: Option<usize>,
    pub games_per_pair: Option<usize>,
    pub include_self_play: Option<bool>,
    pub strategies: Option<Vec<String>>,
    pub reward: Option<f64>,
    pub temptation: Option<f64>,
    pub sucker: Option<f64>,
    pub punishment: Option<f64>,
}

fn default_strategies() -> Vec<String> {
    ["etl", "allc", "alld", "random", "tft", "delayed_coop:50", "delayed_defect:50"]
        .map(String::from)
        .to_vec()
}

impl IpdSection {
    fn filled(&self) -> Self {
        let d = TournamentConfig::default();
        let p = PayoffMatrix::standard();
        IpdSection {
            rounds: self.rounds.or(Some(d.rounds)),
            games_per_pair: self.games_per_pair.or(Some(d.games_per_pair)),
            include_self_play: self.include_self_play.or(Some(d.include_self_play)),
            strategies: self.strategies.clone().or_else(|| Some(default_strategies())),
            reward: self.reward.or(Some(p.reward)),
            temptation: self.temptation.or(Some(p.temptation)),
            sucker: self.sucker.or(Some(p.sucker)),
            punishment: self.punishment.or(Some(p.punishment)),
        }
    }

    fn build(&self) -> (TournamentConfig, Vec<StrategySpec>) {
        let f = self.filled();
        let payoff = PayoffMatrix::new(
            f.reward.unwrap(),
            f.temptation.unwrap(),
            f.sucker.unwrap(),
            f.punishment.unwrap(),
        );
        let cfg = TournamentConfig {
            payoff,
            rounds: f.rounds.unwrap(),
            games_per_pair: f.games_per_pair.unwrap(),
            include_self_play: f.include_self_play.unwrap(),
        };
        let strategies = f
            .strategies
            .unwrap()
            .iter()
            .map(|s| StrategySpec::from_str(s).expect("validated strategy id"))
            .collect();
        (cfg, strategies)
    }

    fn validate(&self) -> Result<(), LabError> {
        let f = self.filled();
        if f.rounds.unwrap() == 0 {
            return Err(LabError::config("ipd.rounds", "must be at least 1"));
        }
        if f.games_per_pair.unwrap() == 0 {
            return Err(LabError::config("ipd.games_per_pair", "must be at least 1"));
        }
        let strategies = f.strategies.as_ref().unwrap();
        if strategies.is_empty() {
            return Err(LabError::config("ipd.strategies", "must name at least one strategy"));
        }
        for s in strategies {
            StrategySpec::from_str(s)
                .map_err(|e| LabError::config("ipd.strategies", e))?;
        }
        let (r, t) = (f.reward.unwrap(), f.temptation.unwrap());
        let (s, p) = (f.sucker.unwrap(), f.punishment.unwrap());
        if !(t > r && r > p && p > s) {
            return Err(LabError::config(
                "ipd.reward",
                "payoffs must satisfy temptation > reward > punishment > sucker",
            ));
        }
        if 2.0 * r <= t + s {
            return Err(LabError::config(
                "ipd.reward",
                "mutual cooperation must beat alternating exploitation",
            ));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub etl: Option<EtlSection>,
    pub qlearn: Option<QlearnSection>,
    pub mc: Option<McSection>,
}

impl ParamsSection {
    fn filled(&self) -> Self {
        ParamsSection {
            etl: Some(self.etl.clone().unwrap_or_default().filled()),
            qlearn: Some(self.qlearn.unwrap_or_default().filled()),
            mc: Some(self.mc.unwrap_or_default().filled()),
        }
    }

    fn build(&self) -> LearnerParams {
        let f = self.filled();
        LearnerParams {
            etl: f.etl.unwrap().build(),
            q: f.qlearn.unwrap().build(),
            mc: f.mc.unwrap().build(),
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        self.etl.clone().unwrap_or_default().validate()?;
        self.qlearn.unwrap_or_default().validate()?;
        self.mc.unwrap_or_default().validate()
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct EtlSection {
    pub support_rate: Option<f64>,
    pub dissatisfaction_rate: Option<f64>,
    pub reversion_rate: Option<f64>,
    pub smoothing: Option<f64>,
    pub trust_window: Option<usize>,
    pub epsilon_init: Option<f64>,
    pub epsilon_min: Option<f64>,
    pub epsilon_cap: Option<f64>,
    pub epsilon_growth: Option<f64>,
    pub epsilon_decay: Option<f64>,
    pub variance_threshold: Option<f64>,
    pub stability_threshold: Option<f64>,
    pub trust_gate: Option<f64>,
    pub learn_rate: Option<f64>,
    pub discount: Option<f64>,
    pub cooperation_weight: Option<f64>,
    pub stm_capacity: Option<usize>,
    pub grid_stability_scale: Option<f64>,
    pub freeze_epsilon: Option<bool>,
}

impl EtlSection {
    fn filled(&self) -> Self {
        let d = EtlParams::default();
        EtlSection {
            support_rate: self.support_rate.or(Some(d.trust.support_rate)),
            dissatisfaction_rate: self.dissatisfaction_rate.or(Some(d.trust.dissatisfaction_rate)),
            reversion_rate: self.reversion_rate.or(Some(d.trust.reversion_rate)),
            smoothing: self.smoothing.or(Some(d.trust.smoothing)),
            trust_window: self.trust_window.or(Some(d.trust.window)),
            epsilon_init: self.epsilon_init.or(Some(d.exploration.epsilon_init)),
            epsilon_min: self.epsilon_min.or(Some(d.exploration.epsilon_min)),
            epsilon_cap: self.epsilon_cap.or(Some(d.exploration.epsilon_cap)),
            epsilon_growth: self.epsilon_growth.or(Some(d.exploration.growth)),
            epsilon_decay: self.epsilon_decay.or(Some(d.exploration.decay)),
            variance_threshold: self.variance_threshold.or(Some(d.exploration.variance_threshold)),
            stability_threshold: self
                .stability_threshold
                .or(Some(d.exploration.stability_threshold)),
            trust_gate: self.trust_gate.or(Some(d.exploration.trust_gate)),
            learn_rate: self.learn_rate.or(Some(d.learn_rate)),
            discount: self.discount.or(Some(d.discount)),
            cooperation_weight: self.cooperation_weight.or(Some(d.cooperation_weight)),
            stm_capacity: self.stm_capacity.or(Some(d.stm_capacity)),
            grid_stability_scale: self.grid_stability_scale.or(Some(d.grid_stability_scale)),
            freeze_epsilon: self.freeze_epsilon.or(Some(d.freeze_epsilon)),
        }
    }

    fn build(&self) -> EtlParams {
        let f = self.filled();
        EtlParams {
            trust: TrustParams {
                support_rate: f.support_rate.unwrap(),
                dissatisfaction_rate: f.dissatisfaction_rate.unwrap(),
                reversion_rate: f.reversion_rate.unwrap(),
                smoothing: f.smoothing.unwrap(),
                window: f.trust_window.unwrap(),
            },
            exploration: ExplorationParams {
                epsilon_init: f.epsilon_init.unwrap(),
                epsilon_min: f.epsilon_min.unwrap(),
                epsilon_cap: f.epsilon_cap.unwrap(),
                growth: f.epsilon_growth.unwrap(),
                decay: f.epsilon_decay.unwrap(),
                variance_threshold: f.variance_threshold.unwrap(),
                stability_threshold: f.stability_threshold.unwrap(),
                trust_gate: f.trust_gate.unwrap(),
            },
            learn_rate: f.learn_rate.unwrap(),
            discount: f.discount.unwrap(),
            cooperation_weight: f.cooperation_weight.unwrap(),
            stm_capacity: f.stm_capacity.unwrap(),
            grid_stability_scale: f.grid_stability_scale.unwrap(),
            freeze_epsilon: f.freeze_epsilon.unwrap(),
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        let f = self.filled();
        let unit = |name: &str, v: f64| -> Result<(), LabError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(LabError::config(name, "must lie in [0, 1]"))
            }
        };
        unit("params.etl.support_rate", f.support_rate.unwrap())?;
        unit("params.etl.dissatisfaction_rate", f.dissatisfaction_rate.unwrap())?;
        unit("params.etl.reversion_rate", f.reversion_rate.unwrap())?;
        unit("params.etl.smoothing", f.smoothing.unwrap())?;
        unit("params.etl.epsilon_init", f.epsilon_init.unwrap())?;
        unit("params.etl.epsilon_min", f.epsilon_min.unwrap())?;
        unit("params.etl.epsilon_cap", f.epsilon_cap.unwrap())?;
        unit("params.etl.learn_rate", f.learn_rate.unwrap())?;
        unit("params.etl.discount", f.discount.unwrap())?;
        if f.epsilon_min.unwrap() > f.epsilon_cap.unwrap() {
            return Err(LabError::config("params.etl.epsilon_min", "exceeds epsilon_cap"));
        }
        if f.epsilon_growth.unwrap() < 1.0 {
            return Err(LabError::config("params.etl.epsilon_growth", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&f.epsilon_decay.unwrap()) {
            return Err(LabError::config("params.etl.epsilon_decay", "must lie in [0, 1]"));
        }
        if f.trust_window.unwrap() == 0 {
            return Err(LabError::config("params.etl.trust_window", "must be at least 1"));
        }
        if f.stm_capacity.unwrap() == 0 {
            return Err(LabError::config("params.etl.stm_capacity", "must be at least 1"));
        }
        if f.cooperation_weight.unwrap() < 0.0 {
            return Err(LabError::config("params.etl.cooperation_weight", "must be non-negative"));
        }
        if f.grid_stability_scale.unwrap() <= 0.0 {
            return Err(LabError::config("params.etl.grid_stability_scale", "must be positive"));
        }
        if f.variance_threshold.unwrap() < 0.0 {
            return Err(LabError::config("params.etl.variance_threshold", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct QlearnSection {
    pub epsilon: Option<f64>,
    pub learn_rate: Option<f64>,
    pub discount: Option<f64>,
}

impl QlearnSection {
    fn filled(&self) -> Self {
        let d = QLearnerParams::default();
        QlearnSection {
            epsilon: self.epsilon.or(Some(d.epsilon)),
            learn_rate: self.learn_rate.or(Some(d.learn_rate)),
            discount: self.discount.or(Some(d.discount)),
        }
    }

    fn build(&self) -> QLearnerParams {
        let f = self.filled();
        QLearnerParams {
            epsilon: f.epsilon.unwrap(),
            learn_rate: f.learn_rate.unwrap(),
            discount: f.discount.unwrap(),
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        let f = self.filled();
        for (name, v) in [
            ("params.qlearn.epsilon", f.epsilon.unwrap()),
            ("params.qlearn.learn_rate", f.learn_rate.unwrap()),
            ("params.qlearn.discount", f.discount.unwrap()),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LabError::config(name, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub epsilon: Option<f64>,
    pub discount: Option<f64>,
}

impl McSection {
    fn filled(&self) -> Self {
        let d = McParams::default();
        McSection {
            epsilon: self.epsilon.or(Some(d.epsilon)),
            discount: self.discount.or(Some(d.discount)),
        }
    }

    fn build(&self) -> McParams {
        let f = self.filled();
        McParams { epsilon: f.epsilon.unwrap(), discount: f.discount.unwrap() }
    }

    fn validate(&self) -> Result<(), LabError> {
        let f = self.filled();
        for (name, v) in [
            ("params.mc.epsilon", f.epsilon.unwrap()),
            ("params.mc.discount", f.discount.unwrap()),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LabError::config(name, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// A fully resolved experiment ready to run.
pub struct Experiment {
    pub n_seeds: u64,
    pub master_seed: u64,
    pub payload: Payload,
}

pub enum Payload {
    Tower {
        cfg: TowerConfig,
        roster: Vec<LearnerKind>,
        episodes: usize,
        forced_episodes: Option<usize>,
        params: LearnerParams,
    },
    Grid {
        cfg: GridConfig,
        roster: Vec<LearnerKind>,
        episodes: usize,
        params: LearnerParams,
    },
    Ipd {
        tournament: TournamentConfig,
        strategies: Vec<StrategySpec>,
        params: LearnerParams,
    },
}

impl Settings {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Settings, LabError> {
        toml::from_str(text)
            .map_err(|e| LabError::Parse { path: origin.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Settings, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Io { path: path.to_path_buf(), source: e })?;
        Settings::from_toml_str(&text, path)
    }

    fn is_tower_kind(&self) -> bool {
        self.kind == "tower" || self.kind == "tower_recovery"
    }

    /// Validate and make every relevant default explicit; sections that do
    /// not apply to the kind are rejected rather than silently ignored.
    pub fn normalized(&self) -> Result<Settings, LabError> {
        match self.kind.as_str() {
            "tower" | "tower_recovery" | "grid" | "ipd" => {}
            other => {
                return Err(LabError::config(
                    "kind",
                    format!("unknown kind '{other}' (expected tower, tower_recovery, grid, or ipd)"),
                ))
            }
        }
        let mut out = self.clone();
        out.master_seed = Some(self.master_seed.unwrap_or(DEFAULT_MASTER_SEED));
        if self.n_seeds == Some(0) {
            return Err(LabError::config("n_seeds", "must be at least 1"));
        }

        if self.is_tower_kind() {
            if self.grid.is_some() {
                return Err(LabError::config("grid", "not used by tower kinds"));
            }
            if self.ipd.is_some() {
                return Err(LabError::config("ipd", "not used by tower kinds"));
            }
            let section = self.tower.clone().unwrap_or_default();
            section.validate()?;
            out.tower = Some(section.filled());
            out.n_seeds = Some(self.n_seeds.unwrap_or(DEFAULT_SEEDS));
            out.episodes = Some(self.episodes.unwrap_or(DEFAULT_TOWER_EPISODES));
            let n = out.tower.as_ref().unwrap().floors.unwrap();
            out.roster = Some(resolve_roster(self.roster.as_ref(), n)?);
            if self.kind == "tower_recovery" {
                out.forced_episodes =
                    Some(self.forced_episodes.unwrap_or(DEFAULT_FORCED_EPISODES));
            } else if self.forced_episodes.is_some() {
                return Err(LabError::config(
                    "forced_episodes",
                    "only used by the tower_recovery kind",
                ));
            }
        } else if self.kind == "grid" {
            if self.tower.is_some() {
                return Err(LabError::config("tower", "not used by the grid kind"));
            }
            if self.ipd.is_some() {
                return Err(LabError::config("ipd", "not used by the grid kind"));
            }
            if self.forced_episodes.is_some() {
                return Err(LabError::config(
                    "forced_episodes",
                    "only used by the tower_recovery kind",
                ));
            }
            let section = self.grid.clone().unwrap_or_default();
            section.validate()?;
            out.grid = Some(section.filled());
            out.n_seeds = Some(self.n_seeds.unwrap_or(DEFAULT_SEEDS));
            out.episodes = Some(self.episodes.unwrap_or(DEFAULT_GRID_EPISODES));
            let n = out.grid.as_ref().unwrap().n_agents.unwrap();
            out.roster = Some(resolve_roster(self.roster.as_ref(), n)?);
        } else {
            // ipd
            if self.n_seeds.is_some() {
                return Err(LabError::config(
                    "n_seeds",
                    "not used by the ipd kind (set ipd.games_per_pair)",
                ));
            }
            if self.tower.is_some() {
                return Err(LabError::config("tower", "not used by the ipd kind"));
            }
            if self.grid.is_some() {
                return Err(LabError::config("grid", "not used by the ipd kind"));
            }
            if self.roster.is_some() {
                return Err(LabError::config("roster", "not used by the ipd kind"));
            }
            if self.forced_episodes.is_some() {
                return Err(LabError::config(
                    "forced_episodes",
                    "only used by the tower_recovery kind",
                ));
            }
            if self.episodes.is_some() {
                return Err(LabError::config(
                    "episodes",
                    "not used by the ipd kind (set ipd.rounds and ipd.games_per_pair)",
                ));
            }
            let section = self.ipd.clone().unwrap_or_default();
            section.validate()?;
            out.ipd = Some(section.filled());
        }
        if out.episodes == Some(0) {
            return Err(LabError::config("episodes", "must be at least 1"));
        }

        let params = self.params.clone().unwrap_or_default();
        params.validate()?;
        out.params = Some(params.filled());
        Ok(out)
    }

    /// Build the concrete experiment from normalized settings.
    pub fn build(&self) -> Result<Experiment, LabError> {
        let n = self.normalized()?;
        let params = n.params.as_ref().unwrap().build();
        let payload = match n.kind.as_str() {
            "tower" | "tower_recovery" => Payload::Tower {
                cfg: n.tower.as_ref().unwrap().build(),
                roster: parse_roster(n.roster.as_ref().unwrap()),
                episodes: n.episodes.unwrap(),
                forced_episodes: n.forced_episodes,
                params,
            },
            "grid" => Payload::Grid {
                cfg: n.grid.as_ref().unwrap().build(),
                roster: parse_roster(n.roster.as_ref().unwrap()),
                episodes: n.episodes.unwrap(),
                params,
            },
            _ => {
                let (tournament, strategies) = n.ipd.as_ref().unwrap().build();
                Payload::Ipd { tournament, strategies, params }
            }
        };
        Ok(Experiment {
            n_seeds: n.n_seeds.unwrap_or(1),
            master_seed: n.master_seed.unwrap(),
            payload,
        })
    }

    /// Short content hash of the normalized settings.
    pub fn fingerprint(&self) -> Result<String, LabError> {
        let n = self.normalized()?;
        let text = toml::to_string(&n).expect("normalized settings serialize");
        let digest = Sha256::digest(text.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(hex[..16].to_string())
    }
}

fn resolve_roster(roster: Option<&Vec<String>>, n_agents: usize) -> Result<Vec<String>, LabError> {
    let ids = match roster {
        None => vec!["etl".to_string(); n_agents],
        Some(ids) => ids.clone(),
    };
    if ids.len() != n_agents {
        return Err(LabError::config(
            "roster",
            format!("expected {n_agents} entries, got {}", ids.len()),
        ));
    }
    for id in &ids {
        LearnerKind::from_str(id).map_err(|e| LabError::config("roster", e))?;
    }
    Ok(ids)
}

fn parse_roster(ids: &[String]) -> Vec<LearnerKind> {
    ids.iter().map(|id| LearnerKind::from_str(id).expect("validated roster id")).collect()
}
