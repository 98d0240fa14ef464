use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Movement, Phase, Posture, Trigger, VocalMode};
use crate::error::{Error, Result};
use crate::layout::Point;
use crate::persona::Persona;

/// One decision point, mirroring the columns of a printed trajectory table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub agent: String,
    pub time_s: f64,
    pub trigger: Trigger,
    pub phase: Phase,
    pub location: String,
    pub position: Point,
    pub mood: String,
    pub health: f64,
    pub posture: Posture,
    /// Last known shooter region (post-incident only).
    pub shooter_region: Option<String>,
    pub shooter_visible: bool,
    pub thought: String,
    pub action_id: String,
    #[serde(default)]
    pub intent: Option<String>,
    pub movement: Movement,
    pub vocal_mode: VocalMode,
    #[serde(default)]
    pub utterance: String,
    #[serde(default)]
    pub memory_update: String,
    #[serde(default)]
    pub heading_exit: Option<String>,
    /// Other agents within the crowd radius moving to the same exit.
    #[serde(default)]
    pub co_movers: usize,
    #[serde(default)]
    pub fallback: bool,
    #[serde(default)]
    pub offered: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Exited,
    Hiding,
    Incapacitated,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalRecord {
    pub status: TerminalStatus,
    pub time_s: f64,
    pub region: String,
    pub position: Point,
    pub posture: Posture,
    #[serde(default)]
    pub exit_id: Option<String>,
    #[serde(default = "full_health")]
    pub health: f64,
    /// Door crossings after the incident, including ones between decisions.
    #[serde(default)]
    pub region_changes_post: usize,
}

fn full_health() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub agent_id: String,
    #[serde(default)]
    pub persona: Option<Persona>,
    #[serde(default)]
    pub incident_time_s: Option<f64>,
    #[serde(default)]
    pub incident_region: Option<String>,
    #[serde(default)]
    pub incident_position: Option<Point>,
    pub records: Vec<DecisionRecord>,
    pub terminal: TerminalRecord,
}

impl Trajectory {
    pub fn post_incident(&self) -> impl Iterator<Item = &DecisionRecord> {
        self.records.iter().filter(|r| r.phase == Phase::PostIncident)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub layout: String,
    pub seed: u64,
    pub mode: super::PolicyMode,
    pub agents: usize,
    pub end_time_s: f64,
    pub incident_time_s: f64,
    pub exited: usize,
    pub hiding: usize,
    pub incapacitated: usize,
    pub timeout: usize,
    pub shots_fired: u64,
    pub reloads_completed: u64,
    pub decisions: usize,
    pub fallbacks: usize,
    pub terminal: Vec<(String, TerminalStatus)>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LogLine {
    Decision(DecisionRecord),
    Terminal(TerminalLine),
}

#[derive(Serialize, Deserialize)]
struct TerminalLine {
    agent: String,
    #[serde(default)]
    persona: Option<Persona>,
    #[serde(default)]
    incident_time_s: Option<f64>,
    #[serde(default)]
    incident_region: Option<String>,
    #[serde(default)]
    incident_position: Option<Point>,
    terminal: TerminalRecord,
}

/// Decision lines in time order, then one terminal line per agent.
pub fn write_trajectories_jsonl(trajectories: &[Trajectory], mut out: impl Write) -> Result<()> {
    let mut decisions: Vec<&DecisionRecord> = trajectories.iter().flat_map(|t| t.records.iter()).collect();
    decisions.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    for d in decisions {
        serde_json::to_writer(&mut out, &LogLine::Decision(d.clone()))?;
        out.write_all(b"\n")?;
    }
    for t in trajectories {
        let line = LogLine::Terminal(TerminalLine {
            agent: t.agent_id.clone(),
            persona: t.persona.clone(),
            incident_time_s: t.incident_time_s,
            incident_region: t.incident_region.clone(),
            incident_position: t.incident_position,
            terminal: t.terminal.clone(),
        });
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Inverse of [`write_trajectories_jsonl`]; agents keep terminal-line order.
pub fn read_trajectories_jsonl(input: impl BufRead) -> Result<Vec<Trajectory>> {
    let mut records: std::collections::BTreeMap<String, Vec<DecisionRecord>> = Default::default();
    let mut terminals = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine =
            serde_json::from_str(&line).map_err(|e| Error::Parse(format!("trajectory line {}: {e}", n + 1)))?;
        match parsed {
            LogLine::Decision(d) => records.entry(d.agent.clone()).or_default().push(d),
            LogLine::Terminal(t) => terminals.push(t),
        }
    }
    let out = terminals
        .into_iter()
        .map(|t| {
            let mut recs = records.remove(&t.agent).unwrap_or_default();
            recs.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
            Trajectory {
                agent_id: t.agent,
                persona: t.persona,
                incident_time_s: t.incident_time_s,
                incident_region: t.incident_region,
                incident_position: t.incident_position,
                records: recs,
                terminal: t.terminal,
            }
        })
        .collect::<Vec<_>>();
    if let Some(agent) = records.keys().next() {
        return Err(Error::Parse(format!("decisions for {agent} have no terminal line")));
    }
    Ok(out)
}
