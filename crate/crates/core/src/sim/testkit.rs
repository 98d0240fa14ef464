//! Hand-built observations for policy unit tests.

use super::observation::{Observation, PoiView, ThreatInfo};
use super::{Movement, Phase, Posture};
use crate::layout::{Layout, Point};

pub(crate) fn observation(layout: &Layout, region: &str, position: Point, threat: Option<ThreatInfo>) -> Observation {
    let r = layout.region_index(region).expect("known region");
    let spots = layout
        .spots_in(r)
        .iter()
        .map(|&s| PoiView {
            id: layout.spots[s].id.clone(),
            descriptor: layout.spots[s].descriptor.clone(),
            distance: position.dist(layout.spots[s].pos),
            occupied: false,
        })
        .collect();
    let exits = layout
        .exits_in(r)
        .iter()
        .map(|&e| PoiView {
            id: layout.exits[e].id.clone(),
            descriptor: layout.exits[e].descriptor.clone(),
            distance: position.dist(layout.exits[e].pos),
            occupied: false,
        })
        .collect();
    let threat = threat.map(|mut t| {
        t.hiding_spots = spots;
        t.exits = exits;
        t
    });
    Observation {
        time_s: 12.0,
        phase: if threat.is_some() { Phase::PostIncident } else { Phase::PreIncident },
        agent_id: "tester".into(),
        region: region.into(),
        position,
        movement: Movement::StayStill,
        mood: "neutral".into(),
        health: 100.0,
        posture: Posture::Standing,
        heading_exit: None,
        notices: vec![],
        nearby_agents: vec![],
        same_region_agents: vec![],
        neighboring_regions: vec![],
        recent_utterances: vec![],
        memory: vec![],
        threat,
    }
}

pub(crate) fn threat(visible: bool, shooter_region: &str, distance: Option<f64>) -> ThreatInfo {
    ThreatInfo {
        shooter_visible: visible,
        shooter_distance: distance,
        shooter_last_known_region: Some(shooter_region.into()),
        gunfire_heard: true,
        regions_moved_since_incident: 0,
        hiding_spots: vec![],
        exits: vec![],
        crowd_flow: vec![],
    }
}

/// What the episode would offer in `region` post-incident, with no other agents.
pub(crate) fn offered(layout: &Layout, region: &str, fight: bool) -> Vec<String> {
    let r = layout.region_index(region).expect("known region");
    let mut out = vec![super::STAY_ID.to_string()];
    out.extend(layout.neighbors(r).iter().map(|&(nb, _)| layout.region_id(nb).to_string()));
    out.extend(layout.spots_in(r).iter().map(|&s| layout.spots[s].id.clone()));
    out.extend(layout.exits_in(r).iter().map(|&e| layout.exits[e].id.clone()));
    if fight {
        out.push(super::FIGHT_ID.to_string());
    }
    out
}
