use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use peba::classifier::{Classifier, RuleClassifier, RuleConfig};
use peba::layout::Layout;
use peba::llm::{CacheMode, Gateway, GatewayConfig, LlmClassifier, LlmPolicy, ReplayCache};
use peba::persona::{base_pool, parse_pool, Persona};
use peba::pevo::PevoConfig;
use peba::sim::{ExplicitPolicy, Policy, PolicyMode, TraitPolicy, TraitPolicyTable};
use peba::writer::{ArchetypeTable, LlmWriter, PersonaWriter, TraitWriter, WriterMode};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierMode {
    #[default]
    Rule,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayConfig {
    pub path: PathBuf,
    pub mode: CacheMode,
}

/// Everything a command reads from `--config`, with defaults for the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub pevo: PevoConfig,
    pub gateway: GatewayConfig,
    pub rules: RuleConfig,
    pub trait_policy: Option<PathBuf>,
    pub archetypes: Option<PathBuf>,
    pub replay: Option<ReplayConfig>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn policy_table(&self) -> Result<TraitPolicyTable, CliError> {
        match &self.trait_policy {
            Some(p) => TraitPolicyTable::load(p).map_err(CliError::usage),
            None => Ok(TraitPolicyTable::default()),
        }
    }

    pub fn archetype_table(&self) -> Result<ArchetypeTable, CliError> {
        match &self.archetypes {
            Some(p) => ArchetypeTable::load(p).map_err(CliError::usage),
            None => Ok(ArchetypeTable::default()),
        }
    }

    /// Built only when some component needs the chat model; fails before
    /// any simulation when the credential is missing.
    pub fn gateway(&self) -> Result<Arc<Gateway>, CliError> {
        let gw = match &self.replay {
            Some(r) if r.mode == CacheMode::Replay => {
                let cache = ReplayCache::open(&r.path, CacheMode::Replay).map_err(CliError::usage)?;
                Gateway::replay_only(self.gateway.clone(), cache)
            }
            Some(r) => {
                let cache = ReplayCache::open(&r.path, CacheMode::Record).map_err(CliError::usage)?;
                Gateway::from_env(self.gateway.clone()).map(|g| g.with_cache(cache))
            }
            None => Gateway::from_env(self.gateway.clone()),
        };
        gw.map(Arc::new).map_err(CliError::usage)
    }
}

pub fn load_layout(name_or_path: &str) -> Result<Layout, CliError> {
    Layout::resolve(name_or_path).map_err(CliError::usage)
}

/// `base` is the bundled pool; anything else is a path.
pub fn load_pool(name_or_path: &str) -> Result<Vec<Persona>, CliError> {
    if name_or_path == "base" {
        return Ok(base_pool());
    }
    let text = std::fs::read_to_string(name_or_path).map_err(|e| CliError::Usage(format!("personas {name_or_path}: {e}")))?;
    parse_pool(&text).map_err(CliError::usage)
}

/// The components a run uses, resolved once.
pub struct Components {
    pub gateway: Option<Arc<Gateway>>,
    pub policy: Box<dyn Policy>,
    pub classifier: Box<dyn Classifier>,
    pub writer: Box<dyn PersonaWriter>,
}

impl Components {
    pub fn build(cfg: &RunConfig, mode: PolicyMode, classifier: ClassifierMode, writer: WriterMode) -> Result<Self, CliError> {
        let needs_llm = mode == PolicyMode::Llm || classifier == ClassifierMode::Llm || writer == WriterMode::Llm;
        let gateway = if needs_llm { Some(cfg.gateway()?) } else { None };
        let table = cfg.policy_table()?;
        let policy: Box<dyn Policy> = match mode {
            PolicyMode::Trait => Box::new(TraitPolicy::new(table)),
            PolicyMode::Explicit => Box::new(ExplicitPolicy::new(table)),
            PolicyMode::Llm => Box::new(LlmPolicy::new(gateway.clone().expect("built above"))),
        };
        let classifier: Box<dyn Classifier> = match classifier {
            ClassifierMode::Rule => Box::new(RuleClassifier { config: cfg.rules }),
            ClassifierMode::Llm => Box::new(LlmClassifier {
                gateway: gateway.clone().expect("built above"),
            }),
        };
        let writer: Box<dyn PersonaWriter> = match writer {
            WriterMode::Trait => Box::new(TraitWriter::new(cfg.archetype_table()?, cfg.pevo.step).map_err(CliError::usage)?),
            WriterMode::Llm => Box::new(LlmWriter::new(gateway.clone().expect("built above"))),
        };
        Ok(Self {
            gateway,
            policy,
            classifier,
            writer,
        })
    }
}
