use serde::{Deserialize, Serialize};

use super::episode::{AgentStatus, Episode};
use super::{Movement, Phase, Posture, VocalMode};
use crate::layout::Point;

pub const GUNSHOT_NOTICE: &str = "I hear a loud gunshot.";
pub const GUNFIRE_NEARBY_NOTICE: &str = "I hear gunfire nearby.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearbyAgent {
    pub id: String,
    pub name: String,
    pub health_status: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborRegion {
    pub id: String,
    pub distance: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeardUtterance {
    pub speaker: String,
    pub text: String,
    pub vocal_mode: VocalMode,
    pub distance: f64,
    pub age_s: f64,
    pub exit_hint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiView {
    pub id: String,
    pub descriptor: String,
    pub distance: f64,
    #[serde(default)]
    pub occupied: bool,
}

/// Post-incident additions. Absent from pre-incident observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreatInfo {
    pub shooter_visible: bool,
    pub shooter_distance: Option<f64>,
    pub shooter_last_known_region: Option<String>,
    pub gunfire_heard: bool,
    pub regions_moved_since_incident: usize,
    pub hiding_spots: Vec<PoiView>,
    pub exits: Vec<PoiView>,
    /// Same-region agents currently moving toward each exit.
    pub crowd_flow: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time_s: f64,
    pub phase: Phase,
    pub agent_id: String,
    pub region: String,
    pub position: Point,
    pub movement: Movement,
    pub mood: String,
    pub health: f64,
    pub posture: Posture,
    pub heading_exit: Option<String>,
    pub notices: Vec<String>,
    pub nearby_agents: Vec<NearbyAgent>,
    pub same_region_agents: Vec<String>,
    pub neighboring_regions: Vec<NeighborRegion>,
    pub recent_utterances: Vec<HeardUtterance>,
    pub memory: Vec<String>,
    pub threat: Option<ThreatInfo>,
}

impl Observation {
    /// Plain-text rendering used in agent prompts.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let phase = match self.phase {
            Phase::PreIncident => "normal school day",
            Phase::PostIncident => "active shooter incident",
        };
        s.push_str(&format!("Time: {:.1} s ({phase})\n", self.time_s));
        for n in &self.notices {
            s.push_str(&format!("Notice: {n}\n"));
        }
        s.push_str(&format!(
            "You are in {} at {}, movement {}, mood {}, health {:.0}, posture {:?}.\n",
            self.region,
            self.position,
            self.movement.as_str(),
            self.mood,
            self.health,
            self.posture
        ));
        if self.nearby_agents.is_empty() {
            s.push_str("Nobody is within 3 m.\n");
        } else {
            s.push_str("Nearby people:\n");
            for a in &self.nearby_agents {
                s.push_str(&format!("- {} ({}), {}, {:.1} m\n", a.name, a.id, a.health_status, a.distance));
            }
        }
        s.push_str("Neighboring regions:\n");
        for r in &self.neighboring_regions {
            s.push_str(&format!("- {} ({:.1} m): {}\n", r.id, r.distance, r.notes.join("; ")));
        }
        if !self.recent_utterances.is_empty() {
            s.push_str("Recently heard:\n");
            for u in &self.recent_utterances {
                s.push_str(&format!("- {} said \"{}\" ({:.1} m away)\n", u.speaker, u.text, u.distance));
            }
        }
        if let Some(t) = &self.threat {
            match (t.shooter_visible, t.shooter_distance) {
                (true, Some(d)) => s.push_str(&format!("The shooter is visible, {d:.1} m away.\n")),
                _ => s.push_str("The shooter is not in sight.\n"),
            }
            if let Some(r) = &t.shooter_last_known_region {
                s.push_str(&format!("Shooter last known region: {r}\n"));
            }
            if t.gunfire_heard {
                s.push_str("Gunfire was heard recently.\n");
            }
            for h in &t.hiding_spots {
                let occ = if h.occupied { ", occupied" } else { "" };
                s.push_str(&format!("- hiding spot {}: {} ({:.1} m{occ})\n", h.id, h.descriptor, h.distance));
            }
            for e in &t.exits {
                s.push_str(&format!("- exit {}: {} ({:.1} m)\n", e.id, e.descriptor, e.distance));
            }
            for (e, n) in &t.crowd_flow {
                s.push_str(&format!("- {n} people here are heading for {e}\n"));
            }
        }
        if !self.memory.is_empty() {
            s.push_str("Memory:\n");
            for m in &self.memory {
                s.push_str(&format!("- {m}\n"));
            }
        }
        s
    }
}

/// Observation for `agent` given the episode's current state.
pub fn build_observation(episode: &Episode<'_>, agent: usize) -> Observation {
    episode.observe(agent, false)
}

fn health_status(health: f64, status: AgentStatus) -> &'static str {
    match status {
        AgentStatus::Incapacitated => "incapacitated",
        _ if health >= 100.0 => "unhurt",
        _ => "injured",
    }
}

impl Episode<'_> {
    pub(crate) fn observe(&self, agent: usize, incident_notice: bool) -> Observation {
        let me = &self.agents[agent];
        let layout = self.layout;
        let now = self.time;
        let cfg = &self.config;

        let mut nearby = Vec::new();
        let mut same_region = Vec::new();
        for (j, other) in self.agents.iter().enumerate() {
            if j == agent || other.status == AgentStatus::Exited {
                continue;
            }
            let d = me.position.dist(other.position);
            if d <= cfg.nearby_radius_m && other.region == me.region {
                nearby.push(NearbyAgent {
                    id: other.id.clone(),
                    name: self.personas[j].identity.name.clone(),
                    health_status: health_status(other.health, other.status).to_string(),
                    distance: d,
                });
            }
            if other.status == AgentStatus::Active && other.region == me.region {
                same_region.push(other.id.clone());
            }
        }

        let neighboring_regions = layout
            .neighbors(me.region)
            .iter()
            .map(|&(nb, door)| {
                let region = &layout.regions[nb];
                let mut notes = vec![format!("{:?}", region.kind).to_lowercase()];
                let spots = layout.spots_in(nb).len();
                if spots > 0 {
                    notes.push(format!("{spots} hiding spots"));
                }
                for &e in layout.exits_in(nb) {
                    notes.push(format!("exit {}", layout.exits[e].id));
                }
                for e in &layout.exits {
                    if e.region != me.region && e.region != nb && layout.first_door(me.region, me.position, e.region, Some(e.pos)) == Some(door) {
                        notes.push(format!("toward {}", e.id));
                    }
                }
                NeighborRegion {
                    id: region.id.clone(),
                    distance: me.position.dist(layout.doors[door].pos),
                    notes,
                }
            })
            .collect();

        let recent_utterances = self
            .utterances
            .iter()
            .filter(|u| u.speaker != agent && now - u.time_s <= cfg.utterance_window_s + 1e-9)
            .filter_map(|u| {
                let d = me.position.dist(u.position);
                let radius = match u.vocal_mode {
                    VocalMode::Whisper => cfg.whisper_radius_m.min(cfg.utterance_radius_m),
                    _ => cfg.utterance_radius_m,
                };
                (d <= radius).then(|| HeardUtterance {
                    speaker: self.agents[u.speaker].id.clone(),
                    text: u.text.clone(),
                    vocal_mode: u.vocal_mode,
                    distance: d,
                    age_s: now - u.time_s,
                    exit_hint: u.exit_hint.map(|e| layout.exits[e].id.clone()),
                })
            })
            .collect();

        let phase = if self.incident { Phase::PostIncident } else { Phase::PreIncident };
        let mut notices = Vec::new();
        let threat = if self.incident {
            if incident_notice {
                notices.push(GUNSHOT_NOTICE.to_string());
            }
            let gunfire_heard = me
                .last_gunfire_heard
                .is_some_and(|t| now - t <= cfg.utterance_window_s + 1e-9);
            if gunfire_heard && !incident_notice {
                notices.push(GUNFIRE_NEARBY_NOTICE.to_string());
            }
            let visible = self.shooter_visible_to(agent);
            let hiding_spots = layout
                .spots_in(me.region)
                .iter()
                .map(|&s| PoiView {
                    id: layout.spots[s].id.clone(),
                    descriptor: layout.spots[s].descriptor.clone(),
                    distance: me.position.dist(layout.spots[s].pos),
                    occupied: self.spot_owner[s].is_some_and(|o| o != agent),
                })
                .collect();
            let exits = layout
                .exits_in(me.region)
                .iter()
                .map(|&e| PoiView {
                    id: layout.exits[e].id.clone(),
                    descriptor: layout.exits[e].descriptor.clone(),
                    distance: me.position.dist(layout.exits[e].pos),
                    occupied: false,
                })
                .collect();
            let mut flow = vec![0usize; layout.exits.len()];
            for (j, other) in self.agents.iter().enumerate() {
                if j != agent
                    && other.status == AgentStatus::Active
                    && other.region == me.region
                    && other.movement != Movement::StayStill
                {
                    if let Some(e) = other.heading_exit {
                        flow[e] += 1;
                    }
                }
            }
            let crowd_flow = flow
                .iter()
                .enumerate()
                .filter(|(_, n)| **n > 0)
                .map(|(e, n)| (layout.exits[e].id.clone(), *n))
                .collect();
            Some(ThreatInfo {
                shooter_visible: visible,
                shooter_distance: visible.then(|| me.position.dist(self.shooter.state.position)),
                shooter_last_known_region: me.shooter_last_known.map(|r| layout.region_id(r).to_string()),
                gunfire_heard,
                regions_moved_since_incident: me.region_changes_post,
                hiding_spots,
                exits,
                crowd_flow,
            })
        } else {
            None
        };

        Observation {
            time_s: now,
            phase,
            agent_id: me.id.clone(),
            region: layout.region_id(me.region).to_string(),
            position: me.position,
            movement: me.movement,
            mood: me.mood.clone(),
            health: me.health,
            posture: me.posture,
            heading_exit: me.heading_exit.map(|e| layout.exits[e].id.clone()),
            notices,
            nearby_agents: nearby,
            same_region_agents: same_region,
            neighboring_regions,
            recent_utterances,
            memory: me.memory.clone(),
            threat,
        }
    }
}
