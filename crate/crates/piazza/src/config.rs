//! Experiment configuration: a single JSON document with defaults for
//! every field, echoed back fully resolved so a run can be reproduced
//! from its own output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Coalition, Topic, TopicId};
use crate::engine::SimulationConfig;
use crate::opinion::{FjParams, StanceLabel};
use crate::seeding::{CoalitionPriors, Demographics, OpinionPrior, SeedingConfig};
use crate::toxicity::LexiconScorer;

/// The four default discussion topics.
pub fn default_topics() -> Vec<Topic> {
    vec![
        Topic {
            id: TopicId::from("civil_rights"),
            description: "Civil rights policy: same-sex marriage and adoption, \
                          anti-discrimination law, gender identity recognition, and the \
                          legal status of different family models."
                .into(),
            supportive_meaning: "expanding legal rights and protections for LGBTQIA+ people \
                                 and non-traditional families"
                .into(),
            opposed_meaning: "keeping the current family-law framework and resisting new \
                              rights around gender and family"
                .into(),
        },
        Topic {
            id: TopicId::from("immigration"),
            description: "Immigration policy: border control, sea arrivals and rescue, \
                          bilateral agreements with countries of origin, and the management \
                          of irregular migration."
                .into(),
            supportive_meaning: "reception and integration policies, humanitarian corridors, \
                                 and shared European management of migration"
                .into(),
            opposed_meaning: "stricter border enforcement, fewer arrivals, and tighter \
                              conditions for residence"
                .into(),
        },
        Topic {
            id: TopicId::from("nuclear_energy"),
            description: "Nuclear energy policy: whether next-generation nuclear power \
                          should enter the national energy mix alongside renewables."
                .into(),
            supportive_meaning: "including nuclear power in the national energy strategy".into(),
            opposed_meaning: "excluding nuclear power in favour of renewables and \
                              efficiency"
                .into(),
        },
        Topic {
            id: TopicId::from("reddito_di_cittadinanza"),
            description: "Reddito di cittadinanza: the conditional minimum-income subsidy \
                          for households in poverty, debated between keeping, reforming, or \
                          abolishing it."
                .into(),
            supportive_meaning: "keeping and strengthening the subsidy".into(),
            opposed_meaning: "restricting or abolishing the subsidy in favour of other \
                              support measures"
                .into(),
        },
    ]
}

/// Default per-coalition starting positions on the four topics.
pub fn default_priors() -> CoalitionPriors {
    fn prior(label: StanceLabel, justification: &str) -> OpinionPrior {
        OpinionPrior { label, justification: justification.to_string() }
    }
    let mut priors: BTreeMap<Coalition, BTreeMap<TopicId, OpinionPrior>> = BTreeMap::new();

    priors.insert(
        Coalition::Right,
        BTreeMap::from([
            (
                TopicId::from("civil_rights"),
                prior(
                    StanceLabel::StronglyOpposed,
                    "New rights around family and gender identity should be avoided; \
                     the traditional family deserves defence.",
                ),
            ),
            (
                TopicId::from("immigration"),
                prior(
                    StanceLabel::StronglyOpposed,
                    "Illegal immigration must stop, with strict controls, naval blockades, \
                     bilateral agreements with countries of origin, and asylum processing \
                     outside Europe.",
                ),
            ),
            (
                TopicId::from("nuclear_energy"),
                prior(
                    StanceLabel::StronglySupportive,
                    "Next-generation nuclear power deserves investment in research and \
                     plants, integrated with renewables for energy security and less \
                     dependence on imports.",
                ),
            ),
            (
                TopicId::from("reddito_di_cittadinanza"),
                prior(
                    StanceLabel::StronglyOpposed,
                    "The subsidy should be abolished in favour of targeted employment \
                     support for vulnerable groups, preventing abuse.",
                ),
            ),
        ]),
    );

    priors.insert(
        Coalition::CentreLeft,
        BTreeMap::from([
            (
                TopicId::from("civil_rights"),
                prior(
                    StanceLabel::StronglySupportive,
                    "Equal marriage and adoption rights for same-sex couples, laws against \
                     homotransphobia, and recognition of LGBTQIA+ rights.",
                ),
            ),
            (
                TopicId::from("immigration"),
                prior(
                    StanceLabel::Supportive,
                    "Reception and inclusion policies with integration pathways, guaranteed \
                     migrant rights, solidarity-based European management, and expanded \
                     humanitarian corridors.",
                ),
            ),
            (
                TopicId::from("nuclear_energy"),
                prior(
                    StanceLabel::StronglyOpposed,
                    "The ecological transition must prioritise renewables and efficiency; \
                     nuclear power is too expensive, too slow for 2030 targets, and leaves \
                     environmental concerns unresolved.",
                ),
            ),
            (
                TopicId::from("reddito_di_cittadinanza"),
                prior(
                    StanceLabel::Supportive,
                    "Keep the subsidy while fixing its distortions: recalibrate the benefit, \
                     support large families, add a minimum wage, and pay internships.",
                ),
            ),
        ]),
    );

    priors.insert(
        Coalition::ThirdPole,
        BTreeMap::from([
            (
                TopicId::from("civil_rights"),
                prior(
                    StanceLabel::Supportive,
                    "Laws against homophobia and transphobia are needed, plus an \
                     anti-discrimination authority.",
                ),
            ),
            (
                TopicId::from("immigration"),
                prior(
                    StanceLabel::Supportive,
                    "A regulated, planned immigration system with integration policies, \
                     regularisation for workers, training pathways, wider humanitarian \
                     corridors, and a dedicated ministry.",
                ),
            ),
            (
                TopicId::from("nuclear_energy"),
                prior(
                    StanceLabel::Supportive,
                    "Nuclear energy belongs in the mix to reach net-zero by 2050, meeting \
                     future energy needs safely and efficiently.",
                ),
            ),
            (
                TopicId::from("reddito_di_cittadinanza"),
                prior(
                    StanceLabel::Opposed,
                    "The current system is ineffective: reserve it for those unfit to work, \
                     revoke it after a first refused job offer, and cap its duration.",
                ),
            ),
        ]),
    );

    priors.insert(
        Coalition::M5s,
        BTreeMap::from([
            (
                TopicId::from("civil_rights"),
                prior(
                    StanceLabel::StronglySupportive,
                    "Support for equal marriage and legislation against homotransphobia.",
                ),
            ),
            (
                TopicId::from("immigration"),
                prior(
                    StanceLabel::Supportive,
                    "A humanitarian approach with integration policies and mandatory \
                     redistribution of migrants across Europe.",
                ),
            ),
            (
                TopicId::from("nuclear_energy"),
                prior(
                    StanceLabel::StronglyOpposed,
                    "Nuclear power carries high costs and safety risks; a decentralised \
                     model of self-production and local efficiency is the way forward.",
                ),
            ),
            (
                TopicId::from("reddito_di_cittadinanza"),
                prior(
                    StanceLabel::StronglySupportive,
                    "The subsidy must be defended strongly, with more efficient active \
                     labour policies and anti-fraud monitoring.",
                ),
            ),
        ]),
    );

    CoalitionPriors(priors)
}

fn default_runs() -> usize {
    10
}

fn default_language() -> String {
    "Italian".to_string()
}

fn default_true() -> bool {
    true
}

/// Friedkin–Johnsen baseline settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FjConfig {
    /// Uniform susceptibility applied to every agent.
    pub susceptibility: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    /// Unset: iterate to convergence within each day.
    pub steps_per_day: Option<usize>,
}

impl Default for FjConfig {
    fn default() -> Self {
        FjConfig { susceptibility: 0.5, tolerance: 1e-8, max_iters: 10_000, steps_per_day: None }
    }
}

impl FjConfig {
    pub fn params(&self, n: usize) -> FjParams {
        FjParams {
            susceptibility: vec![self.susceptibility; n],
            tolerance: self.tolerance,
            max_iters: self.max_iters,
            steps_per_day: self.steps_per_day,
        }
    }
}

/// Seed-controlled bootstrap settings for confidence intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { bootstrap_resamples: 1000, bootstrap_seed: 1917 }
    }
}

/// Top-level configuration: the simulation settings plus topics, priors,
/// seeding inputs and analysis knobs. Every field has a default, and the
/// resolved struct serialises back to a complete, re-runnable document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub simulation: SimulationConfig,
    pub runs: usize,
    pub topics: Vec<Topic>,
    pub priors: CoalitionPriors,
    /// Optional explicit coalition mix; unset reproduces the seed corpus's
    /// empirical distribution.
    pub coalition_distribution: Option<BTreeMap<Coalition, f64>>,
    pub demographics: Demographics,
    pub language: String,
    pub sample_with_replacement: bool,
    pub seeds_path: Option<PathBuf>,
    pub reference_path: Option<PathBuf>,
    pub toxicity: LexiconScorer,
    pub fj: FjConfig,
    pub analysis: AnalysisConfig,
    /// Echoed for reproducibility; the crate computes every percentile
    /// (activity threshold, toxicity, bootstrap bounds) this way.
    pub percentile_convention: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            simulation: SimulationConfig::default(),
            runs: default_runs(),
            topics: default_topics(),
            priors: default_priors(),
            coalition_distribution: None,
            demographics: Demographics::default(),
            language: default_language(),
            sample_with_replacement: default_true(),
            seeds_path: None,
            reference_path: None,
            toxicity: LexiconScorer::default(),
            fj: FjConfig::default(),
            analysis: AnalysisConfig::default(),
            percentile_convention: "linear interpolation between closest ranks".to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.to_path_buf(), e.to_string()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| ConfigError::Parse(path.to_path_buf(), e.to_string()))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs == 0 {
            return Err(ConfigError::Invalid("runs must be at least 1".into()));
        }
        if self.simulation.days == 0 {
            return Err(ConfigError::Invalid("days must be at least 1".into()));
        }
        self.simulation
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.topics.is_empty() {
            return Err(ConfigError::Invalid("at least one topic is required".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for topic in &self.topics {
            topic.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if !ids.insert(topic.id.clone()) {
                return Err(ConfigError::Invalid(format!("duplicate topic id {}", topic.id)));
            }
        }
        self.priors
            .validate_covers(&self.topics)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.demographics
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(dist) = &self.coalition_distribution {
            crate::seeding::validate_distribution(dist)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if self.fj.params(2).validate().is_err() {
            return Err(ConfigError::Invalid("invalid fj parameters".into()));
        }
        if self.analysis.bootstrap_resamples == 0 {
            return Err(ConfigError::Invalid("bootstrap_resamples must be at least 1".into()));
        }
        Ok(())
    }

    /// The seeding view of this configuration.
    pub fn seeding(&self) -> SeedingConfig {
        SeedingConfig {
            population_size: self.simulation.population_size,
            sample_with_replacement: self.sample_with_replacement,
            coalition_distribution: self.coalition_distribution.clone(),
            demographics: self.demographics.clone(),
            language: self.language.clone(),
            topics: self.topics.clone(),
            priors: self.priors.clone(),
        }
    }

    /// Fully resolved JSON echo; parsing it back yields an identical config.
    pub fn echo(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(PathBuf, String),
    #[error("cannot parse config {0}: {1}")]
    Parse(PathBuf, String),
    #[error("invalid config: {0}")]
    Invalid(String),
}
