//! Civilian agent simulation: observations, actions, policies, stepping and
//! trajectory recording.

mod actions;
mod config;
mod episode;
mod explicit;
mod observation;
mod policy;
#[cfg(test)]
pub(crate) mod testkit;
mod trait_policy;
mod trajectory;

pub use actions::{offered_actions, Action, FIGHT_ID, STAY_ID};
pub use config::{SimConfig, SpawnWeights};
pub use episode::{
    run_episode, spawn_positions, AgentState, AgentStatus, Episode, EpisodeOutput, Goal, ObservationAudit,
    TickReport,
};
pub use explicit::{assign_directives, decide_explicit, DirectivePlan, ExplicitPolicy};
pub use observation::{
    build_observation, HeardUtterance, NearbyAgent, NeighborRegion, Observation, PoiView, ThreatInfo,
    GUNSHOT_NOTICE,
};
pub use policy::{ActionDecision, DecisionRequest, Policy};
pub use trait_policy::{decide_trait_policy, Intent, TraitPolicy, TraitPolicyTable};
pub use trajectory::{
    read_trajectories_jsonl, write_trajectories_jsonl, DecisionRecord, EpisodeSummary, TerminalRecord, TerminalStatus,
    Trajectory,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Movement {
    #[default]
    StayStill,
    Walk,
    Sprint,
}

impl Movement {
    pub fn speed(self) -> f64 {
        match self {
            Movement::StayStill => 0.0,
            Movement::Walk => 2.5,
            Movement::Sprint => 5.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Movement::StayStill => "stay_still",
            Movement::Walk => "walk",
            Movement::Sprint => "sprint",
        }
    }
}

impl std::str::FromStr for Movement {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "stay_still" | "stay" | "still" => Ok(Movement::StayStill),
            "walk" => Ok(Movement::Walk),
            "sprint" | "run" => Ok(Movement::Sprint),
            other => Err(crate::error::Error::Parse(format!("unknown movement {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Posture {
    #[default]
    Standing,
    Crouching,
    Hiding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VocalMode {
    OutLoud,
    Whisper,
    #[default]
    Silent,
}

impl std::str::FromStr for VocalMode {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "out_loud" | "outloud" | "loud" => Ok(VocalMode::OutLoud),
            "whisper" => Ok(VocalMode::Whisper),
            "silent" | "none" => Ok(VocalMode::Silent),
            other => Err(crate::error::Error::Parse(format!("unknown vocal mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    PreIncident,
    PostIncident,
}

/// Why a decision was taken at this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Initial,
    Reached,
    Timeout,
    Cooldown,
    Incident,
    ShooterEntered,
}

impl Trigger {
    /// Interrupts that bypass the reach/timeout/cooldown cadence.
    pub fn is_forced(self) -> bool {
        matches!(self, Trigger::Initial | Trigger::Incident | Trigger::ShooterEntered)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    #[default]
    Trait,
    Explicit,
    Llm,
}

impl std::str::FromStr for PolicyMode {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "trait" => Ok(PolicyMode::Trait),
            "explicit" => Ok(PolicyMode::Explicit),
            "llm" => Ok(PolicyMode::Llm),
            other => Err(crate::error::Error::Config(format!("unknown policy mode {other:?}"))),
        }
    }
}
