//! Persona update rules: a deterministic trait shift and an LLM rewrite of
//! the descriptive fields.

mod llm;

pub use llm::{LlmWriter, WriterGuard, DEFAULT_DENYLIST};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorLabel;
use crate::error::{Error, Result};
use crate::persona::{Persona, Traits};
use crate::rng::SimRng;

pub const DEFAULT_STEP: f64 = 0.5;

/// Trait anchor per behavior label.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchetypeTable {
    anchors: [[f64; 5]; 6],
}

impl Default for ArchetypeTable {
    fn default() -> Self {
        Self::from_json(include_str!("../../data/archetypes.json")).expect("bundled archetypes are valid")
    }
}

impl ArchetypeTable {
    pub fn new(anchors: [[f64; 5]; 6]) -> Result<Self> {
        for (label, a) in BehaviorLabel::ALL.iter().zip(&anchors) {
            if a.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Config(format!("archetype {label} outside [0,1]")));
            }
        }
        Ok(Self { anchors })
    }

    /// `{"FIGHT": [..5 values..], ...}` with all six labels present.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: std::collections::BTreeMap<String, [f64; 5]> = serde_json::from_str(text)?;
        let mut anchors = [[f64::NAN; 5]; 6];
        for (key, a) in raw {
            let label: BehaviorLabel = key.parse()?;
            anchors[label.index()] = a;
        }
        if let Some(missing) = BehaviorLabel::ALL.iter().find(|l| anchors[l.index()][0].is_nan()) {
            return Err(Error::Config(format!("archetype table missing {missing}")));
        }
        Self::new(anchors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, label: BehaviorLabel) -> Traits {
        Traits::from_array(self.anchors[label.index()])
    }
}

/// traits' = traits + step·(archetype − traits), clamped to [0, 1].
pub fn rewrite_trait(persona: &Persona, target: BehaviorLabel, step: f64, table: &ArchetypeTable) -> Result<Persona> {
    check_step(step)?;
    let anchor = table.get(target).to_array();
    let mut t = persona.traits.to_array();
    for (v, a) in t.iter_mut().zip(anchor) {
        *v = (*v + step * (a - *v)).clamp(0.0, 1.0);
    }
    let mut out = persona.clone();
    out.traits = Traits::from_array(t);
    Ok(out)
}

pub fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("writer step must be in (0, 1], got {step}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WriterMode {
    #[default]
    Trait,
    Llm,
}

impl std::str::FromStr for WriterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trait" => Ok(WriterMode::Trait),
            "llm" => Ok(WriterMode::Llm),
            other => Err(Error::Config(format!("unknown writer mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rewrite {
    pub persona: Persona,
    /// False when the writer kept the original persona.
    pub accepted: bool,
    pub warning: Option<String>,
}

pub trait PersonaWriter: Sync {
    fn mode(&self) -> WriterMode;

    fn rewrite(&self, persona: &Persona, current: BehaviorLabel, target: BehaviorLabel, rng: &mut SimRng) -> Result<Rewrite>;
}

#[derive(Debug, Clone)]
pub struct TraitWriter {
    pub table: ArchetypeTable,
    pub step: f64,
}

impl Default for TraitWriter {
    fn default() -> Self {
        Self {
            table: ArchetypeTable::default(),
            step: DEFAULT_STEP,
        }
    }
}

impl TraitWriter {
    pub fn new(table: ArchetypeTable, step: f64) -> Result<Self> {
        check_step(step)?;
        Ok(Self { table, step })
    }
}

impl PersonaWriter for TraitWriter {
    fn mode(&self) -> WriterMode {
        WriterMode::Trait
    }

    fn rewrite(&self, persona: &Persona, _current: BehaviorLabel, target: BehaviorLabel, _rng: &mut SimRng) -> Result<Rewrite> {
        Ok(Rewrite {
            persona: rewrite_trait(persona, target, self.step, &self.table)?,
            accepted: true,
            warning: None,
        })
    }
}

/// One line of the per-agent evolution log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionEntry {
    pub iteration: usize,
    pub agent: String,
    pub current: BehaviorLabel,
    pub target: BehaviorLabel,
    pub mode: WriterMode,
    pub accepted: bool,
    #[serde(default)]
    pub warning: Option<String>,
    pub old: Persona,
    pub new: Persona,
}

pub fn write_evolution_jsonl(entries: &[EvolutionEntry], mut out: impl Write) -> Result<()> {
    for e in entries {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
