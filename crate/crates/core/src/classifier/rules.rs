use serde::{Deserialize, Serialize};

use super::ClassificationResult;
use crate::behavior::BehaviorLabel;
use crate::error::{Error, Result};
use crate::sim::{Posture, TerminalStatus, Trajectory, FIGHT_ID};

/// Thresholds of the rule oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Net post-incident displacement under which a non-hider froze.
    pub freeze_displacement_m: f64,
    /// Co-movers a flight decision needs to count as crowd-following.
    pub min_co_movers: usize,
    /// Share of flight decisions that must be crowd-following.
    pub co_move_fraction: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self { freeze_displacement_m: 2.0, min_co_movers: 2, co_move_fraction: 0.5 }
    }
}

/// Trajectory facts the rules read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleFeatures {
    pub fought: bool,
    pub hiding_at_end: bool,
    pub ever_hid: bool,
    pub region_changes: usize,
    pub exited: bool,
    pub flight_decisions: usize,
    pub crowded_flight_decisions: usize,
    pub displacement_m: f64,
}

impl RuleFeatures {
    pub fn crowd_fraction(&self) -> f64 {
        if self.flight_decisions == 0 {
            0.0
        } else {
            self.crowded_flight_decisions as f64 / self.flight_decisions as f64
        }
    }
}

pub fn rule_features(traj: &Trajectory, cfg: &RuleConfig) -> Result<RuleFeatures> {
    let post: Vec<_> = traj.post_incident().collect();
    if post.is_empty() {
        return Err(Error::PreIncidentOnly(traj.agent_id.clone()));
    }
    let fought = post.iter().any(|r| r.action_id == FIGHT_ID);
    let hiding_at_end = traj.terminal.posture == Posture::Hiding;
    let ever_hid = hiding_at_end || post.iter().any(|r| r.posture == Posture::Hiding);

    let mut locations: Vec<&str> = Vec::new();
    if let Some(r) = traj.incident_region.as_deref() {
        locations.push(r);
    }
    locations.extend(post.iter().map(|r| r.location.as_str()));
    locations.push(traj.terminal.region.as_str());
    let transitions = locations.windows(2).filter(|w| w[0] != w[1]).count();
    let region_changes = transitions.max(traj.terminal.region_changes_post);

    let flight: Vec<_> = post.iter().filter(|r| r.heading_exit.is_some()).collect();
    let crowded = flight.iter().filter(|r| r.co_movers >= cfg.min_co_movers).count();

    let start = traj.incident_position.unwrap_or(post[0].position);
    Ok(RuleFeatures {
        fought,
        hiding_at_end,
        ever_hid,
        region_changes,
        exited: traj.terminal.status == TerminalStatus::Exited,
        flight_decisions: flight.len(),
        crowded_flight_decisions: crowded,
        displacement_m: start.dist(traj.terminal.position),
    })
}

fn scores(f: &RuleFeatures, cfg: &RuleConfig) -> [f64; 6] {
    let crowd = f.crowd_fraction();
    let moved = if f.region_changes > 0 { 1.0 } else { 0.0 };
    let still = (1.0 - f.displacement_m / (5.0 * cfg.freeze_displacement_m)).max(0.0);
    let hid = if f.hiding_at_end { 1.0 } else if f.ever_hid { 0.5 } else { 0.0 };
    let exit = if f.exited { 1.0 } else { 0.0 };
    let mut s = [0.0; 6];
    s[BehaviorLabel::Fight.index()] = if f.fought { 1.0 } else { 0.0 };
    s[BehaviorLabel::HideAfterRunning.index()] = 0.6 * hid + 0.3 * moved;
    s[BehaviorLabel::HideInPlace.index()] = 0.6 * hid + 0.3 * (1.0 - moved);
    s[BehaviorLabel::RunFollowingCrowd.index()] = 0.6 * exit + 0.3 * crowd + 0.1 * moved;
    s[BehaviorLabel::RunIndependently.index()] = 0.6 * exit + 0.3 * (1.0 - crowd) * moved + 0.1 * moved;
    s[BehaviorLabel::Freeze.index()] = if f.ever_hid { 0.0 } else { 0.5 * still };
    s
}

/// Rule oracle; the first matching rule wins and the rest are ranked by
/// their soft scores.
pub fn classify_rule(traj: &Trajectory, cfg: &RuleConfig) -> Result<ClassificationResult> {
    let f = rule_features(traj, cfg)?;
    let label = if f.fought {
        BehaviorLabel::Fight
    } else if f.hiding_at_end && f.region_changes >= 1 {
        BehaviorLabel::HideAfterRunning
    } else if f.hiding_at_end {
        BehaviorLabel::HideInPlace
    } else if f.exited && f.flight_decisions > 0 && f.crowd_fraction() >= cfg.co_move_fraction {
        BehaviorLabel::RunFollowingCrowd
    } else if f.exited {
        BehaviorLabel::RunIndependently
    } else {
        // Covers both the still non-hider and the fallback.
        BehaviorLabel::Freeze
    };
    let s = scores(&f, cfg);
    let mut rest: Vec<BehaviorLabel> = BehaviorLabel::ALL.into_iter().filter(|l| *l != label).collect();
    rest.sort_by(|a, b| s[b.index()].total_cmp(&s[a.index()]).then(a.index().cmp(&b.index())));
    let mut ranking = vec![label];
    ranking.extend(rest);
    Ok(ClassificationResult { label, ranking, reasoning: String::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::Point;
    use crate::sim::{DecisionRecord, Movement, Phase, TerminalRecord, Trigger, VocalMode};

    fn rec(t: f64, loc: &str, pos: [f64; 2], action: &str) -> DecisionRecord {
        DecisionRecord {
            agent: "a".into(),
            time_s: t,
            trigger: Trigger::Reached,
            phase: if t >= 10.0 { Phase::PostIncident } else { Phase::PreIncident },
            location: loc.into(),
            position: pos.into(),
            mood: "calm".into(),
            health: 100.0,
            posture: Posture::Standing,
            shooter_region: None,
            shooter_visible: false,
            thought: String::new(),
            action_id: action.into(),
            intent: None,
            movement: Movement::StayStill,
            vocal_mode: VocalMode::Silent,
            utterance: String::new(),
            memory_update: String::new(),
            heading_exit: None,
            co_movers: 0,
            fallback: false,
            offered: vec![],
        }
    }

    fn traj(records: Vec<DecisionRecord>, status: TerminalStatus, region: &str, pos: [f64; 2], posture: Posture) -> Trajectory {
        Trajectory {
            agent_id: "a".into(),
            persona: None,
            incident_time_s: Some(10.0),
            incident_region: Some(records[0].location.clone()),
            incident_position: Some(records[0].position),
            records,
            terminal: TerminalRecord {
                status,
                time_s: 120.0,
                region: region.into(),
                position: Point::from(pos),
                posture,
                exit_id: None,
                health: 100.0,
                region_changes_post: 0,
            },
        }
    }

    #[test]
    fn stationary_non_hider_freezes() {
        let t = traj(
            vec![rec(10.0, "lounge", [20.0, 26.0], "stay_still"), rec(40.0, "lounge", [20.0, 26.0], "stay_still")],
            TerminalStatus::Timeout,
            "lounge",
            [20.0, 26.0],
            Posture::Standing,
        );
        let f = rule_features(&t, &RuleConfig::default()).unwrap();
        assert_eq!(f.displacement_m, 0.0);
        assert_eq!(classify_rule(&t, &RuleConfig::default()).unwrap().label, BehaviorLabel::Freeze);
    }

    #[test]
    fn fight_beats_hiding() {
        let mut hide = rec(20.0, "lounge", [20.0, 26.0], "hide_spot_35");
        hide.posture = Posture::Hiding;
        let t = traj(
            vec![rec(10.0, "lounge", [20.0, 26.0], FIGHT_ID), hide],
            TerminalStatus::Hiding,
            "lounge",
            [20.0, 26.0],
            Posture::Hiding,
        );
        assert_eq!(classify_rule(&t, &RuleConfig::default()).unwrap().label, BehaviorLabel::Fight);
    }

    #[test]
    fn hiding_with_and_without_region_change() {
        let here = traj(vec![rec(10.0, "lounge", [20.0, 26.0], "hide_spot_35")], TerminalStatus::Hiding, "lounge", [15.0, 23.0], Posture::Hiding);
        assert_eq!(classify_rule(&here, &RuleConfig::default()).unwrap().label, BehaviorLabel::HideInPlace);
        let moved = traj(vec![rec(10.0, "lounge", [20.0, 26.0], "hallway2")], TerminalStatus::Hiding, "classroom_5", [24.0, 38.0], Posture::Hiding);
        assert_eq!(classify_rule(&moved, &RuleConfig::default()).unwrap().label, BehaviorLabel::HideAfterRunning);
    }

    #[test]
    fn crowd_share_splits_runners() {
        let mut a = rec(10.0, "cafeteria", [36.0, 12.0], "entrance_south");
        a.heading_exit = Some("exit_south".into());
        a.co_movers = 3;
        let mut b = a.clone();
        b.time_s = 12.0;
        b.co_movers = 1;
        let run = |recs: Vec<DecisionRecord>| {
            let t = traj(recs, TerminalStatus::Exited, "south_yard", [44.0, 1.0], Posture::Standing);
            classify_rule(&t, &RuleConfig::default()).unwrap().label
        };
        // One of two flight decisions is crowded: exactly the 50% threshold.
        assert_eq!(run(vec![a.clone(), b.clone()]), BehaviorLabel::RunFollowingCrowd);
        let mut c = b.clone();
        c.time_s = 13.0;
        assert_eq!(run(vec![a, b, c]), BehaviorLabel::RunIndependently);
    }

    #[test]
    fn pre_incident_only_is_an_error() {
        let t = traj(vec![rec(0.0, "lounge", [20.0, 26.0], "stay_still")], TerminalStatus::Timeout, "lounge", [20.0, 26.0], Posture::Standing);
        assert!(matches!(classify_rule(&t, &RuleConfig::default()), Err(Error::PreIncidentOnly(_))));
    }

    #[test]
    fn ranking_is_a_permutation_led_by_label() {
        let t = traj(vec![rec(10.0, "lounge", [20.0, 26.0], "hide_spot_35")], TerminalStatus::Hiding, "lounge", [15.0, 23.0], Posture::Hiding);
        let r = classify_rule(&t, &RuleConfig::default()).unwrap();
        r.validate().unwrap();
        // Hiding scores rank the other hide label second.
        assert_eq!(r.ranking[1], BehaviorLabel::HideAfterRunning);
    }
}
