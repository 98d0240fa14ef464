//! The six-class behavior taxonomy and distributions over it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance used when validating that a distribution sums to one.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BehaviorLabel {
    RunFollowingCrowd,
    HideInPlace,
    HideAfterRunning,
    RunIndependently,
    Freeze,
    Fight,
}

impl BehaviorLabel {
    /// Fixed taxonomy order; every per-label vector in the crate is indexed by it.
    pub const ALL: [BehaviorLabel; 6] = [
        BehaviorLabel::RunFollowingCrowd,
        BehaviorLabel::HideInPlace,
        BehaviorLabel::HideAfterRunning,
        BehaviorLabel::RunIndependently,
        BehaviorLabel::Freeze,
        BehaviorLabel::Fight,
    ];

    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorLabel::RunFollowingCrowd => "RUN_FOLLOWING_CROWD",
            BehaviorLabel::HideInPlace => "HIDE_IN_PLACE",
            BehaviorLabel::HideAfterRunning => "HIDE_AFTER_RUNNING",
            BehaviorLabel::RunIndependently => "RUN_INDEPENDENTLY",
            BehaviorLabel::Freeze => "FREEZE",
            BehaviorLabel::Fight => "FIGHT",
        }
    }

    /// Lower-case phrase used inside prompts.
    pub fn phrase(self) -> &'static str {
        match self {
            BehaviorLabel::RunFollowingCrowd => "run following crowd",
            BehaviorLabel::HideInPlace => "hide in place",
            BehaviorLabel::HideAfterRunning => "hide after running",
            BehaviorLabel::RunIndependently => "run independently",
            BehaviorLabel::Freeze => "freeze",
            BehaviorLabel::Fight => "fight",
        }
    }

    /// Definition text inlined into the classifier and persona-writer prompts.
    pub fn description(self) -> &'static str {
        match self {
            BehaviorLabel::RunFollowingCrowd => {
                "Fleeing alongside a group, driven by the instinct to follow others without \
                 independently evaluating the safest route; behavior is driven by herding panic."
            }
            BehaviorLabel::HideInPlace => {
                "Taking cover immediately at the current location, usually from fear or confusion."
            }
            BehaviorLabel::HideAfterRunning => {
                "Running first to gain distance, then switching to concealment when further \
                 flight seems unsafe."
            }
            BehaviorLabel::RunIndependently => {
                "Escaping in a self-chosen direction based on rapid environmental assessment \
                 or prior knowledge."
            }
            BehaviorLabel::Freeze => {
                "Becoming immobilised (tonic immobility) under extreme stress, unable to flee or hide."
            }
            BehaviorLabel::Fight => {
                "Actively confronting or attempting to disarm the shooter as a last resort."
            }
        }
    }

    /// Bullet list of all labels with their definitions.
    pub fn taxonomy_block() -> String {
        Self::ALL
            .iter()
            .map(|b| format!("- {}: {}", b.as_str(), b.description()))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl fmt::Display for BehaviorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BehaviorLabel {
    type Err = Error;

    /// Accepts the canonical identifiers as well as the lower-case phrases
    /// LLMs tend to echo back ("hide in place", "Run-Independently", ...).
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .trim_matches(|c: char| c == '"' || c == '\'' || c == '`' || c == '*' || c == '.')
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_uppercase() })
            .collect();
        let label = match norm.as_str() {
            "RUN_FOLLOWING_CROWD" | "RUN_FOLLOWING_A_CROWD" | "FOLLOW_CROWD" => {
                BehaviorLabel::RunFollowingCrowd
            }
            "HIDE_IN_PLACE" => BehaviorLabel::HideInPlace,
            "HIDE_AFTER_RUNNING" | "RUN_THEN_HIDE" => BehaviorLabel::HideAfterRunning,
            "RUN_INDEPENDENTLY" => BehaviorLabel::RunIndependently,
            "FREEZE" => BehaviorLabel::Freeze,
            "FIGHT" => BehaviorLabel::Fight,
            _ => return Err(Error::Parse(format!("unknown behavior label {s:?}"))),
        };
        Ok(label)
    }
}

/// Probability vector over the six labels, indexed in taxonomy order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorDistribution {
    probs: [f64; 6],
}

impl BehaviorDistribution {
    /// Validates non-negativity and unit mass.
    pub fn new(probs: [f64; 6]) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("probability {p} out of range")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Rescales arbitrary non-negative weights to unit mass.
    pub fn from_weights(weights: [f64; 6]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidDistribution("weights must be non-negative with positive sum".into()));
        }
        Ok(Self {
            probs: weights.map(|w| w / sum),
        })
    }

    pub fn uniform() -> Self {
        Self { probs: [1.0 / 6.0; 6] }
    }

    pub fn one_hot(label: BehaviorLabel) -> Self {
        let mut probs = [0.0; 6];
        probs[label.index()] = 1.0;
        Self { probs }
    }

    /// Expert-elicited reference: 28 / 26 / 12 / 12 / 12 / 10 percent.
    pub fn expert_reference() -> Self {
        Self {
            probs: [0.28, 0.26, 0.12, 0.12, 0.12, 0.10],
        }
    }

    pub fn get(&self, label: BehaviorLabel) -> f64 {
        self.probs[label.index()]
    }

    pub fn as_array(&self) -> &[f64; 6] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (BehaviorLabel, f64)> + '_ {
        BehaviorLabel::ALL.iter().map(move |b| (*b, self.probs[b.index()]))
    }

    /// Add `alpha` to every class and renormalize.
    pub fn smoothed(&self, alpha: f64) -> Self {
        if alpha <= 0.0 {
            return *self;
        }
        let total = 1.0 + 6.0 * alpha;
        Self {
            probs: self.probs.map(|p| (p + alpha) / total),
        }
    }

    /// Largest-remainder rounding of this distribution to `n` integer counts.
    /// Ties in the remainder go to the earlier label in taxonomy order.
    pub fn quota_counts(&self, n: usize) -> [usize; 6] {
        let exact = self.probs.map(|p| p * n as f64);
        let mut counts = exact.map(|x| x.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..6).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        counts
    }
}

impl Serialize for BehaviorDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(6))?;
        for (label, p) in self.iter() {
            map.serialize_entry(label.as_str(), &p)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for BehaviorDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = BTreeMap::<String, f64>::deserialize(deserializer)?;
        let mut probs = [f64::NAN; 6];
        for (key, value) in raw {
            let label = BehaviorLabel::ALL
                .iter()
                .find(|b| b.as_str() == key)
                .ok_or_else(|| D::Error::custom(format!("unknown behavior label key {key:?}")))?;
            probs[label.index()] = value;
        }
        if let Some(missing) = BehaviorLabel::ALL.iter().find(|b| probs[b.index()].is_nan()) {
            return Err(D::Error::custom(format!("missing behavior label key {missing}")));
        }
        BehaviorDistribution::new(probs).map_err(D::Error::custom)
    }
}

/// Fraction of agents carrying each label.
pub fn empirical_distribution(labels: &[BehaviorLabel]) -> Result<BehaviorDistribution> {
    if labels.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let mut counts = [0usize; 6];
    for label in labels {
        counts[label.index()] += 1;
    }
    let n = labels.len() as f64;
    Ok(BehaviorDistribution {
        probs: counts.map(|c| c as f64 / n),
    })
}
