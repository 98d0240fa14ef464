use std::sync::Arc;

use super::{PersonaWriter, Rewrite, WriterMode};
use crate::behavior::BehaviorLabel;
use crate::error::{Error, Result};
use crate::llm::{persona_bindings, render_template, Gateway, ResponseFormat, TemplateId};
use crate::persona::{Descriptive, Persona, DESCRIPTIVE_CHAR_CAP};
use crate::rng::SimRng;

pub const DEFAULT_DENYLIST: [&str; 3] = ["always choose", "always fight", "you must"];

/// Acceptance rules for a rewritten persona.
#[derive(Debug, Clone, PartialEq)]
pub struct WriterGuard {
    pub denylist: Vec<String>,
    pub char_cap: usize,
}

impl Default for WriterGuard {
    fn default() -> Self {
        Self {
            denylist: DEFAULT_DENYLIST.iter().map(|s| s.to_string()).collect(),
            char_cap: DESCRIPTIVE_CHAR_CAP,
        }
    }
}

impl WriterGuard {
    /// Merges the reply into `persona`, or says why it is rejected.
    pub fn apply(&self, persona: &Persona, reply: &str) -> Result<Persona> {
        let start = reply.find('{').ok_or_else(|| Error::Parse("no JSON object in reply".into()))?;
        let end = reply.rfind('}').filter(|e| *e > start).ok_or_else(|| Error::Parse("unterminated JSON".into()))?;
        let v: serde_json::Value = serde_json::from_str(&reply[start..=end]).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = v.as_object().ok_or_else(|| Error::Parse("reply is not an object".into()))?;

        let id = &persona.identity;
        let same_text = |key: &str, want: &str| match obj.get(key) {
            None => true,
            Some(serde_json::Value::String(s)) => s.trim() == want,
            Some(_) => false,
        };
        let age_same = match obj.get("age") {
            None => true,
            Some(a) => a.as_u64() == Some(u64::from(id.age)) || a.as_str().map(str::trim) == Some(&id.age.to_string()),
        };
        for (key, ok) in [
            ("name", same_text("name", &id.name)),
            ("role", same_text("role", &id.role)),
            ("occupation", same_text("occupation", &id.role)),
            ("gender", same_text("gender", &id.gender)),
            ("pronouns", same_text("pronouns", &id.pronouns)),
            ("id", same_text("id", &persona.id)),
            ("age", age_same),
        ] {
            if !ok {
                return Err(Error::Persona(format!("identity field {key} altered")));
            }
        }

        let mut out = persona.clone();
        for field in Descriptive::FIELDS {
            let Some(value) = obj.get(field) else { continue };
            let text = value
                .as_str()
                .ok_or_else(|| Error::Parse(format!("{field} is not text")))?
                .trim()
                .to_string();
            let n = text.chars().count();
            if n > self.char_cap {
                return Err(Error::Persona(format!("{field} has {n} characters (cap {})", self.char_cap)));
            }
            let lower = text.to_lowercase();
            if let Some(bad) = self.denylist.iter().find(|d| lower.contains(&d.to_lowercase())) {
                return Err(Error::Persona(format!("{field} contains directive phrase {bad:?}")));
            }
            *out.descriptive.get_mut(field).expect("known field") = text;
        }
        Ok(out)
    }
}

/// Descriptive-field rewrite through the persona-writer prompt.
pub struct LlmWriter {
    pub gateway: Arc<Gateway>,
    pub guard: WriterGuard,
}

impl LlmWriter {
    pub fn new(gateway: Arc<Gateway>) -> Self {
        Self {
            gateway,
            guard: WriterGuard::default(),
        }
    }
}

impl PersonaWriter for LlmWriter {
    fn mode(&self) -> WriterMode {
        WriterMode::Llm
    }

    fn rewrite(&self, persona: &Persona, current: BehaviorLabel, target: BehaviorLabel, _rng: &mut SimRng) -> Result<Rewrite> {
        let mut b = persona_bindings(persona);
        b.insert("current_behavior".into(), current.phrase().to_string());
        b.insert("target_behavior".into(), target.phrase().to_string());
        let (system, user) = render_template(TemplateId::PersonaWriter, &b)?;
        let mut prompt = user.clone();
        let mut last = None;
        for _ in 0..2 {
            let req = self.gateway.request(system.clone(), prompt.clone(), 1.0, ResponseFormat::Json);
            let reply = self.gateway.chat(&req, "persona_writer")?;
            match self.guard.apply(persona, &reply.content) {
                Ok(p) => {
                    return Ok(Rewrite {
                        persona: p,
                        accepted: true,
                        warning: None,
                    })
                }
                Err(e) => {
                    prompt = format!("{user}\n\nYour previous reply was rejected ({e}). Keep identity fields unchanged and avoid explicit behavioral directives.");
                    last = Some(e);
                }
            }
        }
        let warning = format!("{}: rewrite rejected twice, keeping original: {}", persona.id, last.expect("two failures"));
        log::warn!("{warning}");
        Ok(Rewrite {
            persona: persona.clone(),
            accepted: false,
            warning: Some(warning),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persona::base_pool;

    #[test]
    fn partial_reply_keeps_other_fields() {
        let p = base_pool()[0].clone();
        let reply = r#"{"personality_traits": "Protective and commanding", "backstory": "Served as a medic."}"#;
        let out = WriterGuard::default().apply(&p, reply).unwrap();
        assert_eq!(out.descriptive.personality_traits, "Protective and commanding");
        assert_eq!(out.descriptive.backstory, "Served as a medic.");
        assert_eq!(out.descriptive.communication_style, p.descriptive.communication_style);
        assert_eq!(out.identity, p.identity);
    }

    #[test]
    fn echoed_identity_is_fine_changed_identity_is_not() {
        let p = base_pool()[0].clone();
        let echo = format!(r#"{{"name": "{}", "age": {}, "backstory": "x"}}"#, p.identity.name, p.identity.age);
        assert!(WriterGuard::default().apply(&p, &echo).is_ok());
        let renamed = r#"{"name": "Someone Else", "backstory": "x"}"#;
        assert!(WriterGuard::default().apply(&p, renamed).is_err());
        let older = format!(r#"{{"age": {}}}"#, p.identity.age + 1);
        assert!(WriterGuard::default().apply(&p, &older).is_err());
    }

    #[test]
    fn denylist_and_cap() {
        let p = base_pool()[0].clone();
        let g = WriterGuard::default();
        assert!(g.apply(&p, r#"{"motivations_goals": "She will ALWAYS FIGHT back."}"#).is_err());
        let long = format!(r#"{{"backstory": "{}"}}"#, "a".repeat(501));
        assert!(g.apply(&p, &long).is_err());
        let edge = format!(r#"{{"backstory": "{}"}}"#, "a".repeat(500));
        assert!(g.apply(&p, &edge).is_ok());
    }
}
