use serde::{Deserialize, Serialize};

use super::actions::STAY_ID;
use super::observation::Observation;
use super::{Movement, VocalMode};
use crate::behavior::BehaviorLabel;
use crate::layout::Layout;
use crate::persona::Persona;
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDecision {
    pub thought: String,
    pub vocal_mode: VocalMode,
    pub utterance: String,
    pub movement: Movement,
    pub action_id: String,
    pub mood: String,
    pub memory: String,
    /// Policy-internal intent label, if the policy has one.
    #[serde(default)]
    pub intent: Option<String>,
    /// Exit the agent is making for, when the policy knows it.
    #[serde(default)]
    pub heading_exit: Option<String>,
    /// Set when the decision is a stand-in after a failed or invalid reply.
    #[serde(default)]
    pub fallback: bool,
}

impl ActionDecision {
    pub fn stay(thought: impl Into<String>, mood: impl Into<String>) -> Self {
        Self {
            thought: thought.into(),
            vocal_mode: VocalMode::Silent,
            utterance: String::new(),
            movement: Movement::StayStill,
            action_id: STAY_ID.to_string(),
            mood: mood.into(),
            memory: String::new(),
            intent: None,
            heading_exit: None,
            fallback: false,
        }
    }

    /// Flagged stay_still used when a policy cannot produce a valid action.
    pub fn fallback(reason: impl Into<String>, mood: &str) -> Self {
        Self {
            fallback: true,
            ..Self::stay(reason, mood)
        }
    }

    /// Silent vocal mode implies an empty utterance.
    pub fn normalized(mut self) -> Self {
        if self.vocal_mode == VocalMode::Silent {
            self.utterance.clear();
        }
        self
    }
}

/// Everything a policy may look at when choosing an action.
pub struct DecisionRequest<'a> {
    pub agent: usize,
    pub persona: &'a Persona,
    pub observation: Observation,
    pub offered: Vec<String>,
    pub directive: Option<BehaviorLabel>,
    /// The building map is common knowledge; shooter state is not part of it.
    pub layout: &'a Layout,
}

pub trait Policy: Sync {
    /// Whether due decisions within a tick are requested together and
    /// applied afterwards in agent order.
    fn concurrent(&self) -> bool {
        false
    }

    fn decide(&self, request: &DecisionRequest<'_>, rng: &mut SimRng) -> ActionDecision;
}
