//! Persona records: identity, descriptive text, and the numeric trait vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rewrite cap on each descriptive field, in characters.
pub const DESCRIPTIVE_CHAR_CAP: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identity {
    pub name: String,
    pub role: String,
    pub age: u32,
    pub gender: String,
    pub pronouns: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Descriptive {
    pub personality_traits: String,
    pub emotional_disposition: String,
    pub motivations_goals: String,
    pub communication_style: String,
    pub knowledge_scope: String,
    pub backstory: String,
}

impl Descriptive {
    pub const FIELDS: [&'static str; 6] = [
        "personality_traits",
        "emotional_disposition",
        "motivations_goals",
        "communication_style",
        "knowledge_scope",
        "backstory",
    ];

    pub fn get(&self, field: &str) -> Option<&str> {
        Some(match field {
            "personality_traits" => &self.personality_traits,
            "emotional_disposition" => &self.emotional_disposition,
            "motivations_goals" => &self.motivations_goals,
            "communication_style" => &self.communication_style,
            "knowledge_scope" => &self.knowledge_scope,
            "backstory" => &self.backstory,
            _ => return None,
        })
    }

    pub fn get_mut(&mut self, field: &str) -> Option<&mut String> {
        Some(match field {
            "personality_traits" => &mut self.personality_traits,
            "emotional_disposition" => &mut self.emotional_disposition,
            "motivations_goals" => &mut self.motivations_goals,
            "communication_style" => &mut self.communication_style,
            "knowledge_scope" => &mut self.knowledge_scope,
            "backstory" => &mut self.backstory,
            _ => return None,
        })
    }

    /// All six fields joined with spaces, in schema order.
    pub fn joined(&self) -> String {
        Self::FIELDS
            .iter()
            .filter_map(|f| self.get(f))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Traits {
    pub risk_tolerance: f64,
    pub sociability: f64,
    pub assertiveness: f64,
    pub composure: f64,
    pub initiative: f64,
}

impl Traits {
    pub const NAMES: [&'static str; 5] = [
        "risk_tolerance",
        "sociability",
        "assertiveness",
        "composure",
        "initiative",
    ];

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            risk_tolerance: a[0],
            sociability: a[1],
            assertiveness: a[2],
            composure: a[3],
            initiative: a[4],
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.risk_tolerance,
            self.sociability,
            self.assertiveness,
            self.composure,
            self.initiative,
        ]
    }

    pub fn splat(v: f64) -> Self {
        Self::from_array([v; 5])
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::NAMES.iter().zip(self.to_array()) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Persona(format!("trait {name} = {v} outside [0,1]")));
            }
        }
        Ok(())
    }
}

impl Default for Traits {
    fn default() -> Self {
        Self::splat(0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    /// Stable agent identifier, also used as the "approach" action id.
    pub id: String,
    #[serde(flatten)]
    pub identity: Identity,
    #[serde(flatten)]
    pub descriptive: Descriptive,
    #[serde(default)]
    pub traits: Traits,
}

/// Lower-case ASCII slug of a name: "Robert Chen" → "robert_chen".
pub fn slugify(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') && !out.is_empty() {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

impl Persona {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::Persona("empty id".into()));
        }
        let who = &self.id;
        for (field, value) in [
            ("name", &self.identity.name),
            ("role", &self.identity.role),
            ("gender", &self.identity.gender),
            ("pronouns", &self.identity.pronouns),
        ] {
            if value.trim().is_empty() {
                return Err(Error::Persona(format!("{who}: identity field {field} is empty")));
            }
        }
        if self.identity.age == 0 {
            return Err(Error::Persona(format!("{who}: age must be positive")));
        }
        for field in Descriptive::FIELDS {
            let text = self.descriptive.get(field).unwrap_or_default();
            let n = text.chars().count();
            if n > DESCRIPTIVE_CHAR_CAP {
                return Err(Error::Persona(format!(
                    "{who}: {field} has {n} characters (cap {DESCRIPTIVE_CHAR_CAP})"
                )));
            }
        }
        self.traits
            .validate()
            .map_err(|e| Error::Persona(format!("{who}: {e}")))
    }

    pub fn first_name(&self) -> &str {
        self.identity.name.split_whitespace().next().unwrap_or(&self.identity.name)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PoolDocument {
    Wrapped { personas: Vec<Persona> },
    Bare(Vec<Persona>),
}

/// Parse a persona pool from either `[...]` or `{"personas": [...]}` and validate it.
pub fn parse_pool(text: &str) -> Result<Vec<Persona>> {
    let doc: PoolDocument = serde_json::from_str(text)?;
    let pool = match doc {
        PoolDocument::Wrapped { personas } | PoolDocument::Bare(personas) => personas,
    };
    validate_pool(&pool)?;
    Ok(pool)
}

pub fn validate_pool(pool: &[Persona]) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let mut seen = std::collections::BTreeSet::new();
    for p in pool {
        p.validate()?;
        if !seen.insert(p.id.as_str()) {
            return Err(Error::Persona(format!("duplicate persona id {}", p.id)));
        }
    }
    Ok(())
}

pub fn pool_to_json(pool: &[Persona]) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        personas: &'a [Persona],
    }
    Ok(serde_json::to_string_pretty(&Doc { personas: pool })?)
}

const BASE_POOL: &str = include_str!("../data/personas_base.json");

/// The bundled 80-persona starting pool.
pub fn base_pool() -> Vec<Persona> {
    parse_pool(BASE_POOL).expect("bundled persona pool is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> Persona {
        Persona {
            id: "robert_chen".into(),
            identity: Identity {
                name: "Robert Chen".into(),
                role: "Math Teacher".into(),
                age: 45,
                gender: "Male".into(),
                pronouns: "he/him".into(),
            },
            descriptive: Descriptive {
                personality_traits: "Analytical, patient, methodical, dry humor".into(),
                emotional_disposition: "Calm and measured".into(),
                motivations_goals: "Help students think clearly".into(),
                communication_style: "Precise and structured".into(),
                knowledge_scope: "Mathematics, statistics".into(),
                backstory: "Former engineer".into(),
            },
            traits: Traits::default(),
        }
    }

    #[test]
    fn slug() {
        assert_eq!(slugify("Robert Chen"), "robert_chen");
        assert_eq!(slugify("  Mary-Ann O'Neil "), "mary_ann_o_neil");
    }

    #[test]
    fn flat_json_roundtrip() {
        let p = sample();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["name"], "Robert Chen");
        assert_eq!(v["traits"]["composure"], 0.5);
        let back: Persona = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn validation_rules() {
        let mut p = sample();
        p.validate().unwrap();
        p.traits.composure = 1.2;
        assert!(p.validate().is_err());
        let mut p = sample();
        p.identity.name = " ".into();
        assert!(p.validate().is_err());
        let mut p = sample();
        p.descriptive.backstory = "x".repeat(501);
        assert!(p.validate().is_err());
        p.descriptive.backstory = "é".repeat(500);
        p.validate().unwrap();
    }

    #[test]
    fn base_pool_has_eighty_unique_agents() {
        let pool = base_pool();
        assert_eq!(pool.len(), 80);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let pool = vec![sample(), sample()];
        assert!(validate_pool(&pool).is_err());
    }
}
