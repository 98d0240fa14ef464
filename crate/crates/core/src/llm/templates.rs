//! Prompt templates. `{name}` is a placeholder, `{{` and `}}` are literal braces.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorLabel;
use crate::error::{Error, Result};
use crate::persona::Persona;
use crate::sim::DecisionRequest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Classifier,
    PersonaWriter,
    AgentDecision,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Classifier => "classifier",
            TemplateId::PersonaWriter => "persona_writer",
            TemplateId::AgentDecision => "agent_decision",
        }
    }

    fn parts(self) -> (&'static str, &'static str) {
        match self {
            TemplateId::Classifier => (CLASSIFIER_SYSTEM, CLASSIFIER_USER),
            TemplateId::PersonaWriter => (WRITER_SYSTEM, WRITER_USER),
            TemplateId::AgentDecision => (DECISION_SYSTEM, DECISION_USER),
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classifier" => Ok(TemplateId::Classifier),
            "persona_writer" => Ok(TemplateId::PersonaWriter),
            "agent_decision" => Ok(TemplateId::AgentDecision),
            other => Err(Error::Config(format!("unknown template {other:?}"))),
        }
    }
}

const CLASSIFIER_SYSTEM: &str = "\
You are a behavior analyst categorizing how individuals responded during an active shooter incident.
Based on the agent's memories, actions, moods, plans, and dialog, classify its behavior into exactly ONE of these categories that best describes its behavior:

Behavior labels with descriptions:
{taxonomy}";

const CLASSIFIER_USER: &str = "\
Agent's trajectory data:
States: {states_text}
Actions: {actions_text}
Memories: {memories_text}

Output:
Reasoning: Your reasoning for the classification.
Classification: A single behavior label from the list of behaviors.
Ranking: A list of behaviors ranked by likelihood.";

const WRITER_SYSTEM: &str = "\
You are an expert in human behavior during crisis situations. Your task is to adjust a person's personality traits to make them more likely to exhibit a specific behavior during an active shooter incident.

Behavior labels with descriptions:
{taxonomy}";

const WRITER_USER: &str = "\
Current persona:
Name: {name}
Role: {role}
Age: {age}
Gender: {gender}
Pronouns: {pronouns}
Personality traits: {personality_traits}
Emotional disposition: {emotional_disposition}
Motivations and goals: {motivations_goals}
Communication style: {communication_style}
Knowledge scope: {knowledge_scope}
Backstory: {backstory}

Current behavior: {current_behavior}

Target behavior: {target_behavior}

Please suggest adjustments to the persona's traits that would make this person more likely to exhibit a target behavior during a crisis.
Reply with a JSON object holding the full persona using the keys name, role, age, gender, pronouns, personality_traits, emotional_disposition, motivations_goals, communication_style, knowledge_scope, backstory. Keep name, role, age, gender and pronouns unchanged and keep each text field under {char_cap} characters.";

const DECISION_SYSTEM: &str = "\
You are {name}, {role}, age {age} ({pronouns}). Stay in character.
Personality traits: {personality_traits}
Emotional disposition: {emotional_disposition}
Motivations and goals: {motivations_goals}
Communication style: {communication_style}
Knowledge scope: {knowledge_scope}
Backstory: {backstory}";

const DECISION_USER: &str = "\
{observation}
Available actions (use one id exactly as written):
{offered}

Decide what you do next. Reply with a JSON object:
{{\"thought\": \"...\", \"action\": {{\"vocal_mode\": \"out_loud|whisper|silent\", \"utterance\": \"...\", \"movement\": \"stay_still|walk|sprint\", \"action_id\": \"...\"}}, \"update\": {{\"mood\": \"...\", \"memory\": \"...\"}}}}";

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn pieces(template: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let bytes = template.as_bytes();
    let mut i = 0;
    let mut start = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                out.push(Piece::Text(&template[start..i + 1]));
                i += 2;
                start = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                out.push(Piece::Text(&template[start..i + 1]));
                i += 2;
                start = i;
            }
            b'{' => {
                let close = template[i..].find('}').map(|j| i + j).expect("templates are well formed");
                out.push(Piece::Text(&template[start..i]));
                out.push(Piece::Slot(&template[i + 1..close]));
                i = close + 1;
                start = i;
            }
            _ => i += 1,
        }
    }
    out.push(Piece::Text(&template[start..]));
    out
}

fn fill(template: &str, bindings: &BTreeMap<String, String>) -> Result<String> {
    let mut s = String::with_capacity(template.len() * 2);
    for p in pieces(template) {
        match p {
            Piece::Text(t) => s.push_str(t),
            Piece::Slot(name) => match bindings.get(name) {
                Some(v) => s.push_str(v),
                None => return Err(Error::UnboundPlaceholder(name.to_string())),
            },
        }
    }
    Ok(s)
}

/// Placeholders of a template in order of first appearance.
pub fn template_placeholders(id: TemplateId) -> Vec<&'static str> {
    let (sys, user) = id.parts();
    let mut names: Vec<&'static str> = Vec::new();
    for t in [sys, user] {
        for p in pieces(t) {
            if let Piece::Slot(n) = p {
                if !names.contains(&n) {
                    names.push(n);
                }
            }
        }
    }
    names
}

/// (system prompt, user prompt). `taxonomy` and `char_cap` are bound
/// automatically unless supplied.
pub fn render_template(id: TemplateId, bindings: &BTreeMap<String, String>) -> Result<(String, String)> {
    let mut b = bindings.clone();
    b.entry("taxonomy".into()).or_insert_with(BehaviorLabel::taxonomy_block);
    b.entry("char_cap".into())
        .or_insert_with(|| crate::persona::DESCRIPTIVE_CHAR_CAP.to_string());
    let (sys, user) = id.parts();
    Ok((fill(sys, &b)?, fill(user, &b)?))
}

/// Identity and descriptive fields of a persona as template bindings.
pub fn persona_bindings(p: &Persona) -> BTreeMap<String, String> {
    let mut b = BTreeMap::new();
    b.insert("name".into(), p.identity.name.clone());
    b.insert("role".into(), p.identity.role.clone());
    b.insert("age".into(), p.identity.age.to_string());
    b.insert("gender".into(), p.identity.gender.clone());
    b.insert("pronouns".into(), p.identity.pronouns.clone());
    for field in crate::persona::Descriptive::FIELDS {
        b.insert(field.into(), p.descriptive.get(field).unwrap_or_default().to_string());
    }
    b
}

pub fn decision_bindings(request: &DecisionRequest<'_>) -> BTreeMap<String, String> {
    let mut b = persona_bindings(request.persona);
    b.insert("observation".into(), request.observation.render());
    let offered: Vec<String> = request.offered.iter().map(|id| format!("- {id}")).collect();
    b.insert("offered".into(), offered.join("\n"));
    b
}
