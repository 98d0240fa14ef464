//! Trajectory → behavior label: the rule oracle, LLM response parsing and the
//! evaluation harness.

mod eval;
mod parse;
mod rules;

pub use eval::{evaluate_classifier, ClassifierEvalReport, LabelMetrics};
pub use parse::{parse_classifier_response, trajectory_prompt_blocks, ParsedClassification};
pub use rules::{classify_rule, rule_features, RuleConfig, RuleFeatures};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorLabel;
use crate::error::{Error, Result};
use crate::sim::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub label: BehaviorLabel,
    pub ranking: Vec<BehaviorLabel>,
    #[serde(default)]
    pub reasoning: String,
}

impl ClassificationResult {
    /// Checks the ranking is a permutation led by the label.
    pub fn validate(&self) -> Result<()> {
        check_permutation(&self.ranking)?;
        if self.ranking[0] != self.label {
            return Err(Error::Parse(format!(
                "ranking starts with {} but label is {}",
                self.ranking[0], self.label
            )));
        }
        Ok(())
    }

    /// 1-based position of `label` in the ranking.
    pub fn rank_of(&self, label: BehaviorLabel) -> Option<usize> {
        self.ranking.iter().position(|l| *l == label).map(|i| i + 1)
    }
}

pub(crate) fn check_permutation(ranking: &[BehaviorLabel]) -> Result<()> {
    if ranking.len() != BehaviorLabel::COUNT {
        return Err(Error::Parse(format!("ranking has {} labels, expected 6", ranking.len())));
    }
    let mut seen = [false; BehaviorLabel::COUNT];
    for l in ranking {
        if std::mem::replace(&mut seen[l.index()], true) {
            return Err(Error::Parse(format!("ranking repeats {l}")));
        }
    }
    Ok(())
}

/// A trajectory → label map.
pub trait Classifier: Sync {
    fn classify(&self, traj: &Trajectory) -> Result<ClassificationResult>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleClassifier {
    pub config: RuleConfig,
}

impl Classifier for RuleClassifier {
    fn classify(&self, traj: &Trajectory) -> Result<ClassificationResult> {
        classify_rule(traj, &self.config)
    }
}

/// Label file entry: `{agent_id: {label, ranking}}`.
pub fn labels_document(ids: &[String], results: &[ClassificationResult]) -> BTreeMap<String, ClassificationResult> {
    ids.iter().cloned().zip(results.iter().cloned()).collect()
}
