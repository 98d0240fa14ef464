use std::sync::Arc;

use serde::Deserialize;

use super::templates::{decision_bindings, render_template, TemplateId};
use super::{Gateway, ResponseFormat};
use crate::classifier::{parse_classifier_response, trajectory_prompt_blocks, ClassificationResult, Classifier};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::sim::{ActionDecision, DecisionRequest, Policy};
use crate::sim::{Movement, Trajectory, VocalMode};

/// Text between the first `{` and the last `}`, tolerating code fences.
fn json_span(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    (end > start).then(|| &text[start..=end])
}

#[derive(Deserialize)]
struct RawAction {
    vocal_mode: VocalMode,
    #[serde(default)]
    utterance: String,
    movement: Movement,
    action_id: String,
}

#[derive(Deserialize)]
struct RawUpdate {
    mood: String,
    memory: String,
}

#[derive(Deserialize)]
struct RawDecision {
    thought: String,
    action: RawAction,
    update: RawUpdate,
}

/// Parses an agent reply and checks the action id against `offered`.
pub fn parse_decision(text: &str, offered: &[String]) -> Result<ActionDecision> {
    let span = json_span(text).ok_or_else(|| Error::Parse("no JSON object in reply".into()))?;
    let raw: RawDecision = serde_json::from_str(span).map_err(|e| Error::Parse(e.to_string()))?;
    if !offered.contains(&raw.action.action_id) {
        return Err(Error::Parse(format!("action_id {:?} is not offered", raw.action.action_id)));
    }
    Ok(ActionDecision {
        thought: raw.thought,
        vocal_mode: raw.action.vocal_mode,
        utterance: raw.action.utterance,
        movement: raw.action.movement,
        action_id: raw.action.action_id,
        mood: raw.update.mood,
        memory: raw.update.memory,
        intent: None,
        heading_exit: None,
        fallback: false,
    }
    .normalized())
}

fn retry_note(user: &str, err: &Error) -> String {
    format!("{user}\n\nYour previous reply was rejected ({err}). Reply again in the required format.")
}

/// Agent decisions from the chat model: one reprompt on an invalid reply,
/// then a flagged stay_still.
pub struct LlmPolicy {
    pub gateway: Arc<Gateway>,
    pub temperature: f64,
}

impl LlmPolicy {
    pub fn new(gateway: Arc<Gateway>) -> Self {
        Self { gateway, temperature: 1.0 }
    }

    fn ask(&self, system: &str, user: &str, offered: &[String]) -> Result<ActionDecision> {
        let req = self
            .gateway
            .request(system.to_string(), user.to_string(), self.temperature, ResponseFormat::Json);
        let resp = self.gateway.chat(&req, "agent_decision")?;
        parse_decision(&resp.content, offered)
    }
}

impl Policy for LlmPolicy {
    fn concurrent(&self) -> bool {
        true
    }

    fn decide(&self, request: &DecisionRequest<'_>, _rng: &mut SimRng) -> ActionDecision {
        let mood = request.observation.mood.clone();
        let (system, user) = match render_template(TemplateId::AgentDecision, &decision_bindings(request)) {
            Ok(p) => p,
            Err(e) => return ActionDecision::fallback(format!("prompt error: {e}"), &mood),
        };
        match self.ask(&system, &user, &request.offered) {
            Ok(d) => d,
            Err(e @ (Error::ChatFailed { .. } | Error::ReplayMiss(_) | Error::GatewayConfig(_))) => {
                log::warn!("{}: gateway failure, staying still: {e}", request.persona.id);
                ActionDecision::fallback(format!("gateway failure: {e}"), &mood)
            }
            Err(first) => match self.ask(&system, &retry_note(&user, &first), &request.offered) {
                Ok(d) => d,
                Err(e) => {
                    log::warn!("{}: invalid reply after reprompt, staying still: {e}", request.persona.id);
                    ActionDecision::fallback(format!("invalid reply: {e}"), &mood)
                }
            },
        }
    }
}

fn classify_once(gateway: &Gateway, system: &str, user: &str) -> Result<ClassificationResult> {
    let req = gateway.request(system.to_string(), user.to_string(), 0.0, ResponseFormat::Text);
    let resp = gateway.chat(&req, "classifier")?;
    Ok(parse_classifier_response(&resp.content)?.result)
}

/// Classifier prompt at temperature 0; one reprompt on a bad reply.
pub fn classify_llm(traj: &Trajectory, gateway: &Gateway) -> Result<ClassificationResult> {
    let (states, actions, memories) = trajectory_prompt_blocks(traj);
    let bindings = [("states_text", states), ("actions_text", actions), ("memories_text", memories)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let (system, user) = render_template(TemplateId::Classifier, &bindings)?;
    let failure = |e: Error| Error::ClassifierFailure {
        agent: traj.agent_id.clone(),
        reason: e.to_string(),
    };
    match classify_once(gateway, &system, &user) {
        Ok(r) => Ok(r),
        Err(e @ (Error::ChatFailed { .. } | Error::ReplayMiss(_) | Error::GatewayConfig(_))) => Err(failure(e)),
        Err(first) => classify_once(gateway, &system, &retry_note(&user, &first)).map_err(failure),
    }
}

pub struct LlmClassifier {
    pub gateway: Arc<Gateway>,
}

impl Classifier for LlmClassifier {
    fn classify(&self, traj: &Trajectory) -> Result<ClassificationResult> {
        classify_llm(traj, &self.gateway)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offered() -> Vec<String> {
        vec!["stay_still".into(), "hide_spot_12".into()]
    }

    const GOOD: &str = r#"{"thought": "hide", "action": {"vocal_mode": "whisper", "utterance": "shh",
        "movement": "walk", "action_id": "hide_spot_12"}, "update": {"mood": "scared", "memory": "hid"}}"#;

    #[test]
    fn well_formed_reply() {
        let d = parse_decision(GOOD, &offered()).unwrap();
        assert_eq!(d.action_id, "hide_spot_12");
        assert_eq!(d.vocal_mode, VocalMode::Whisper);
        assert_eq!(d.mood, "scared");
    }

    #[test]
    fn fenced_reply_is_accepted() {
        let fenced = format!("```json\n{GOOD}\n```");
        assert!(parse_decision(&fenced, &offered()).is_ok());
    }

    #[test]
    fn unknown_action_rejected() {
        let bad = GOOD.replace("hide_spot_12", "hide_spot_99");
        assert!(parse_decision(&bad, &offered()).is_err());
    }

    #[test]
    fn missing_mood_rejected() {
        let bad = GOOD.replace(r#""mood": "scared", "#, "");
        assert!(matches!(parse_decision(&bad, &offered()), Err(Error::Parse(_))));
    }

    #[test]
    fn silent_clears_utterance() {
        let quiet = GOOD.replace("whisper", "silent");
        assert_eq!(parse_decision(&quiet, &offered()).unwrap().utterance, "");
    }
}
