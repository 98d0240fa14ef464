use std::sync::OnceLock;

use regex::Regex;

use super::{check_permutation, ClassificationResult};
use crate::behavior::BehaviorLabel;
use crate::error::{Error, Result};
use crate::sim::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedClassification {
    pub result: ClassificationResult,
    /// Set when the ranking had to be reordered to lead with the label.
    pub reconciled: bool,
}

fn section(text: &str, key: &str) -> Option<String> {
    static KEYS: OnceLock<Regex> = OnceLock::new();
    let keys = KEYS.get_or_init(|| {
        Regex::new(r"(?im)^[\s*#>\-]*\**\s*(reasoning|classification|ranking)\s*\**\s*:\**").expect("static regex")
    });
    let mut hits: Vec<(String, usize, usize)> = keys
        .captures_iter(text)
        .filter_map(|c| {
            let m = c.get(0)?;
            Some((c[1].to_lowercase(), m.start(), m.end()))
        })
        .collect();
    hits.sort_by_key(|h| h.1);
    let idx = hits.iter().position(|h| h.0 == key)?;
    let end = hits.get(idx + 1).map(|h| h.1).unwrap_or(text.len());
    Some(text[hits[idx].2..end].trim().to_string())
}

fn labels_in(text: &str) -> Vec<BehaviorLabel> {
    static LABEL: OnceLock<Regex> = OnceLock::new();
    let label = LABEL.get_or_init(|| {
        Regex::new(
            r"(?i)\b(run[ _-]following[ _-](?:a[ _-])?crowd|hide[ _-]in[ _-]place|hide[ _-]after[ _-]running|run[ _-]independently|freeze|fight)\b",
        )
        .expect("static regex")
    });
    label.find_iter(text).filter_map(|m| m.as_str().parse().ok()).collect()
}

fn from_json(text: &str) -> Option<(String, String, Vec<String>)> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    let v: serde_json::Value = serde_json::from_str(text.get(start..=end)?).ok()?;
    let get = |k: &str| {
        v.as_object()?
            .iter()
            .find(|(key, _)| key.eq_ignore_ascii_case(k))
            .map(|(_, val)| val.clone())
    };
    let reasoning = get("reasoning").and_then(|r| r.as_str().map(str::to_string)).unwrap_or_default();
    let class = get("classification")?.as_str()?.to_string();
    let ranking = get("ranking")?
        .as_array()?
        .iter()
        .filter_map(|x| x.as_str().map(str::to_string))
        .collect();
    Some((reasoning, class, ranking))
}

/// Parse a classifier reply given either as "Reasoning: / Classification: /
/// Ranking:" sections or as a JSON object with those keys. A ranking that
/// does not start with the classification is reordered so it does.
pub fn parse_classifier_response(text: &str) -> Result<ParsedClassification> {
    let (reasoning, label, ranking) = if let Some((reasoning, class, ranking)) = from_json(text) {
        let label: BehaviorLabel = class.trim().parse()?;
        let ranking = ranking.iter().map(|r| r.trim().parse()).collect::<Result<Vec<BehaviorLabel>>>()?;
        (reasoning, label, ranking)
    } else {
        let class = section(text, "classification").ok_or_else(|| Error::Parse("missing Classification".into()))?;
        let label = *labels_in(&class)
            .first()
            .ok_or_else(|| Error::Parse(format!("no behavior label in {class:?}")))?;
        let rank_text = section(text, "ranking").ok_or_else(|| Error::Parse("missing Ranking".into()))?;
        (section(text, "reasoning").unwrap_or_default(), label, labels_in(&rank_text))
    };
    check_permutation(&ranking)?;
    let mut reconciled = false;
    let mut ranking = ranking;
    if ranking[0] != label {
        log::warn!("ranking leads with {} but classification is {label}; reordering", ranking[0]);
        ranking.retain(|l| *l != label);
        ranking.insert(0, label);
        reconciled = true;
    }
    Ok(ParsedClassification { result: ClassificationResult { label, ranking, reasoning }, reconciled })
}

/// The states, actions and memories text blocks of a trajectory.
pub fn trajectory_prompt_blocks(traj: &Trajectory) -> (String, String, String) {
    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut memories = Vec::new();
    for r in &traj.records {
        let shooter = r.shooter_region.as_deref().unwrap_or("-");
        states.push(format!(
            "t={:.1}s location={} mood={} health={:.0} posture={:?} shooter_region={}",
            r.time_s, r.location, r.mood, r.health, r.posture, shooter
        ));
        let mut a = format!("t={:.1}s {} ({})", r.time_s, r.action_id, r.movement.as_str());
        if !r.thought.is_empty() {
            a.push_str(&format!(" plan: {}", r.thought));
        }
        if !r.utterance.is_empty() {
            a.push_str(&format!(" said: \"{}\"", r.utterance));
        }
        actions.push(a);
        if !r.memory_update.is_empty() {
            memories.push(format!("t={:.1}s {}", r.time_s, r.memory_update));
        }
    }
    let t = &traj.terminal;
    states.push(format!(
        "end t={:.1}s status={:?} location={} posture={:?} health={:.0}",
        t.time_s, t.status, t.region, t.posture, t.health
    ));
    (states.join("\n"), actions.join("\n"), memories.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use BehaviorLabel::*;

    #[test]
    fn section_reply() {
        let text = "Reasoning: never moved.\nClassification: FREEZE\nRanking: [FREEZE, HIDE_IN_PLACE, HIDE_AFTER_RUNNING, RUN_INDEPENDENTLY, RUN_FOLLOWING_CROWD, FIGHT]";
        let p = parse_classifier_response(text).unwrap();
        assert_eq!(p.result.label, Freeze);
        assert_eq!(p.result.ranking[1], HideInPlace);
        assert_eq!(p.result.reasoning, "never moved.");
        assert!(!p.reconciled);
    }

    #[test]
    fn json_reply() {
        let text = r#"{"reasoning": "r", "classification": "fight", "ranking": ["FIGHT","FREEZE","HIDE_IN_PLACE","HIDE_AFTER_RUNNING","RUN_INDEPENDENTLY","RUN_FOLLOWING_CROWD"]}"#;
        assert_eq!(parse_classifier_response(text).unwrap().result.label, Fight);
    }

    #[test]
    fn duplicate_ranking_rejected() {
        let text = "Classification: FREEZE\nRanking: FREEZE, FREEZE, HIDE_IN_PLACE, RUN_INDEPENDENTLY, RUN_FOLLOWING_CROWD, FIGHT";
        assert!(parse_classifier_response(text).is_err());
    }

    #[test]
    fn classification_wins_over_ranking_head() {
        let text = "Classification: HIDE_IN_PLACE\nRanking: FREEZE, HIDE_IN_PLACE, HIDE_AFTER_RUNNING, RUN_INDEPENDENTLY, RUN_FOLLOWING_CROWD, FIGHT";
        let p = parse_classifier_response(text).unwrap();
        assert!(p.reconciled);
        assert_eq!(p.result.ranking[..2], [HideInPlace, Freeze]);
        p.result.validate().unwrap();
    }

    #[test]
    fn missing_classification() {
        assert!(parse_classifier_response("Ranking: FREEZE").is_err());
    }
}
