use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::actions::{FIGHT_ID, STAY_ID};
use super::observation::{Observation, ThreatInfo};
use super::policy::{ActionDecision, DecisionRequest, Policy};
use super::{Movement, Phase, Posture, VocalMode};
use crate::error::{Error, Result};
use crate::layout::{Layout, Point};
use crate::persona::Traits;
use crate::rng::{mix_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    FollowGroup,
    HideHere,
    RunThenHide,
    FleeToExit,
    Freeze,
    Fight,
    ApproachAgent,
}

impl Intent {
    pub const ALL: [Intent; 7] = [
        Intent::FollowGroup,
        Intent::HideHere,
        Intent::RunThenHide,
        Intent::FleeToExit,
        Intent::Freeze,
        Intent::Fight,
        Intent::ApproachAgent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::FollowGroup => "follow_group",
            Intent::HideHere => "hide_here",
            Intent::RunThenHide => "run_then_hide",
            Intent::FleeToExit => "flee_to_exit",
            Intent::Freeze => "freeze",
            Intent::Fight => "fight",
            Intent::ApproachAgent => "approach_agent",
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Intent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Intent::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown intent {s:?}")))
    }
}

/// Observation features the scoring table may weight.
pub const FEATURES: [&str; 9] = [
    "shooter_visible",
    "shooter_proximity",
    "gunfire_heard",
    "free_spot_here",
    "exit_here",
    "crowd_flow_here",
    "heard_exit_hint",
    "hiding_now",
    "moved_since_incident",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentRow {
    pub name: Intent,
    /// Trait-space anchor; rows without one score only bias and features.
    pub anchor: Option<[f64; 5]>,
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub features: BTreeMap<String, f64>,
    pub movement: Movement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearScore {
    pub bias: f64,
    pub weights: [f64; 5],
}

impl LinearScore {
    fn eval(&self, t: &[f64; 5]) -> f64 {
        self.bias + self.weights.iter().zip(t).map(|(w, x)| w * x).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreIncidentTable {
    pub stay: LinearScore,
    pub approach: LinearScore,
    pub wander: LinearScore,
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitChoice {
    /// Added to an exit's route length when the route crosses the shooter's
    /// last known region.
    pub shooter_region_penalty_m: f64,
    /// Per co-moving agent, scaled by (1 - sociability).
    pub crowd_penalty_m: f64,
    /// Added to every exit other than the current heading.
    pub stickiness_m: f64,
    /// Weight of a heard exit hint relative to one co-mover.
    pub hint_weight: f64,
    /// Upper bound of a fixed per-agent, per-exit preference offset, scaled
    /// by the same aversion factor as the crowd penalty.
    #[serde(default)]
    pub route_preference_m: f64,
}

/// The scoring constants of the deterministic trait policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitPolicyTable {
    pub beta: f64,
    pub intents: Vec<IntentRow>,
    pub pre_incident: PreIncidentTable,
    pub exit_choice: ExitChoice,
}

impl Default for TraitPolicyTable {
    fn default() -> Self {
        Self::from_json(include_str!("../../data/trait_policy.json")).expect("bundled trait policy table")
    }
}

impl TraitPolicyTable {
    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::Config(format!("beta {} must be finite and non-negative", self.beta)));
        }
        for row in &self.intents {
            for k in row.features.keys() {
                if !FEATURES.contains(&k.as_str()) {
                    return Err(Error::Config(format!("unknown feature {k:?} for {}", row.name)));
                }
            }
        }
        for i in Intent::ALL {
            if self.intents.iter().filter(|r| r.name == i).count() > 1 {
                return Err(Error::Config(format!("intent {i} listed twice")));
            }
        }
        Ok(())
    }

    pub fn row(&self, intent: Intent) -> Option<&IntentRow> {
        self.intents.iter().find(|r| r.name == intent)
    }

    /// Score of every listed intent for the given traits and features.
    pub fn scores(&self, traits: &Traits, features: &BTreeMap<&'static str, f64>) -> Vec<(Intent, f64)> {
        let t = traits.to_array();
        self.intents
            .iter()
            .map(|row| {
                let mut s = row.bias;
                if let Some(a) = row.anchor {
                    let dot: f64 = t.iter().zip(&a).map(|(x, y)| x * y).sum();
                    let norm: f64 = a.iter().map(|y| y * y).sum();
                    s += self.beta * (2.0 * dot - norm);
                }
                for (k, w) in &row.features {
                    s += w * features.get(k.as_str()).copied().unwrap_or(0.0);
                }
                (row.name, s)
            })
            .collect()
    }
}

/// Feature values extracted from a post-incident observation.
pub fn observation_features(obs: &Observation) -> BTreeMap<&'static str, f64> {
    let mut f = BTreeMap::new();
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    if let Some(t) = &obs.threat {
        f.insert("shooter_visible", flag(t.shooter_visible));
        let prox = t.shooter_distance.map(|d| (1.0 - d / 20.0).clamp(0.0, 1.0)).unwrap_or(0.0);
        f.insert("shooter_proximity", prox);
        f.insert("gunfire_heard", flag(t.gunfire_heard));
        f.insert("free_spot_here", flag(t.hiding_spots.iter().any(|s| !s.occupied)));
        f.insert("exit_here", flag(!t.exits.is_empty()));
        let flow: usize = t.crowd_flow.iter().map(|(_, n)| n).sum();
        f.insert("crowd_flow_here", (flow as f64 / 3.0).min(1.0));
        f.insert("moved_since_incident", flag(t.regions_moved_since_incident > 0));
    }
    f.insert("heard_exit_hint", flag(obs.recent_utterances.iter().any(|u| u.exit_hint.is_some())));
    f.insert("hiding_now", flag(obs.posture == Posture::Hiding));
    f
}

/// A concrete move produced by an intent planner.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Plan {
    pub action_id: String,
    pub heading_exit: Option<usize>,
    pub utterance: Option<(VocalMode, String)>,
    pub note: Option<String>,
}

impl Plan {
    fn stay() -> Self {
        Plan { action_id: STAY_ID.to_string(), heading_exit: None, utterance: None, note: None }
    }

    fn to(id: impl Into<String>) -> Self {
        Plan { action_id: id.into(), heading_exit: None, utterance: None, note: None }
    }
}

const FULL_NOTE: &str = "No free hiding spot in ";

/// Resolves intents to offered action ids from what one agent can observe.
pub(crate) struct Planner<'a> {
    pub obs: &'a Observation,
    pub layout: &'a Layout,
    pub offered: &'a [String],
    pub region: usize,
    pub choice: ExitChoice,
}

impl<'a> Planner<'a> {
    pub fn new(obs: &'a Observation, layout: &'a Layout, offered: &'a [String], choice: ExitChoice) -> Option<Self> {
        let region = layout.region_index(&obs.region)?;
        Some(Planner { obs, layout, offered, region, choice })
    }

    fn threat(&self) -> Option<&'a ThreatInfo> {
        self.obs.threat.as_ref()
    }

    fn is_offered(&self, id: &str) -> bool {
        self.offered.iter().any(|o| o == id)
    }

    fn shooter_region(&self) -> Option<usize> {
        self.threat()
            .and_then(|t| t.shooter_last_known_region.as_deref())
            .and_then(|r| self.layout.region_index(r))
    }

    fn hiding(&self) -> bool {
        self.obs.posture == Posture::Hiding
    }

    /// Offered id for the first hop toward `target` region.
    fn hop_toward(&self, target: usize, at: Option<Point>) -> Option<String> {
        if target == self.region {
            return None;
        }
        let door = self.layout.first_door(self.region, self.obs.position, target, at)?;
        let id = self.layout.region_id(self.layout.doors[door].other(self.region));
        self.is_offered(id).then(|| id.to_string())
    }

    fn toward_exit(&self, exit: usize) -> Plan {
        let e = &self.layout.exits[exit];
        let id = if e.region == self.region {
            Some(e.id.clone()).filter(|id| self.is_offered(id))
        } else {
            self.hop_toward(e.region, Some(e.pos))
        };
        match id {
            Some(id) => Plan { action_id: id, heading_exit: Some(exit), utterance: None, note: None },
            None => Plan::stay(),
        }
    }

    fn flow_toward(&self, exit: usize) -> f64 {
        let id = &self.layout.exits[exit].id;
        self.threat()
            .and_then(|t| t.crowd_flow.iter().find(|(e, _)| e == id))
            .map(|(_, n)| *n as f64)
            .unwrap_or(0.0)
    }

    fn exit_length(&self, exit: usize) -> f64 {
        let e = &self.layout.exits[exit];
        self.layout.path_length(self.region, self.obs.position, e.region, e.pos)
    }

    /// Stable value in [0, 1) per (agent, exit).
    fn preference(&self, exit: usize) -> f64 {
        let h = self.obs.agent_id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
        });
        (mix_seed(h, exit as u64) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn passes_shooter(&self, exit: usize) -> bool {
        let Some(s) = self.shooter_region() else { return false };
        let e = &self.layout.exits[exit];
        let path = self.layout.route(self.region, self.obs.position, e.region, Some(e.pos)).regions;
        path.iter().skip(1).any(|&r| r == s)
    }

    /// Exit with the lowest route cost for an independent runner.
    pub fn best_exit(&self, crowd_aversion: f64) -> Option<usize> {
        let current = self.obs.heading_exit.as_deref().and_then(|h| self.layout.exit_index(h));
        let c = self.choice;
        (0..self.layout.exits.len())
            .map(|e| {
                let mut cost = self.exit_length(e);
                if self.passes_shooter(e) {
                    cost += c.shooter_region_penalty_m;
                }
                cost += c.crowd_penalty_m * crowd_aversion * self.flow_toward(e);
                cost += c.route_preference_m * crowd_aversion * self.preference(e);
                if current.is_some_and(|h| h != e) {
                    cost += c.stickiness_m;
                }
                (e, cost)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(e, _)| e)
    }

    pub fn flee(&self, crowd_aversion: f64) -> Plan {
        let Some(exit) = self.best_exit(crowd_aversion) else { return Plan::stay() };
        let mut plan = self.toward_exit(exit);
        if plan.action_id != STAY_ID {
            let place = self.layout.region_id(self.layout.exits[exit].region).replace('_', " ");
            plan.utterance = Some((VocalMode::OutLoud, format!("Run to the {place}!")));
        }
        plan
    }

    /// Exit most others are heading for, then any exit someone called out.
    pub fn follow(&self) -> Plan {
        let hinted: Vec<usize> = self
            .obs
            .recent_utterances
            .iter()
            .filter_map(|u| u.exit_hint.as_deref())
            .filter_map(|h| self.layout.exit_index(h))
            .collect();
        let current = self.obs.heading_exit.as_deref().and_then(|h| self.layout.exit_index(h));
        let pull = |e: usize| {
            let mut v = self.flow_toward(e) + self.choice.hint_weight * hinted.iter().filter(|&&h| h == e).count() as f64;
            if current == Some(e) {
                v += 0.5;
            }
            v
        };
        let best = (0..self.layout.exits.len())
            .map(|e| (e, pull(e), self.exit_length(e)))
            .min_by(|a, b| b.1.total_cmp(&a.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)))
            .map(|(e, _, _)| e);
        let Some(exit) = best else { return Plan::stay() };
        let mut plan = self.toward_exit(exit);
        if plan.action_id != STAY_ID {
            plan.utterance = Some((VocalMode::OutLoud, "Stay together, follow me!".to_string()));
        }
        plan
    }

    fn nearest_free_spot_here(&self) -> Option<String> {
        self.threat()?
            .hiding_spots
            .iter()
            .filter(|s| !s.occupied && self.is_offered(&s.id))
            .min_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)))
            .map(|s| s.id.clone())
    }

    fn whisper(mut plan: Plan) -> Plan {
        if plan.action_id != STAY_ID {
            plan.utterance = Some((VocalMode::Whisper, "Hide, stay quiet.".to_string()));
        }
        plan
    }

    /// Hide at the current location only; never leaves the region.
    pub fn hide_in_place(&self) -> Plan {
        if self.hiding() {
            return Plan::stay();
        }
        Self::whisper(self.nearest_free_spot_here().map(Plan::to).unwrap_or_else(Plan::stay))
    }

    /// Regions this agent has already found fully occupied.
    fn known_full(&self) -> Vec<usize> {
        self.obs
            .memory
            .iter()
            .filter_map(|m| m.strip_prefix(FULL_NOTE))
            .filter_map(|r| self.layout.region_index(r.trim_end_matches('.')))
            .collect()
    }

    /// Nearest hiding spot, walking to the closest region with spots when
    /// there are none here.
    pub fn hide_here(&self) -> Plan {
        if self.hiding() {
            return Plan::stay();
        }
        if let Some(id) = self.nearest_free_spot_here() {
            return Self::whisper(Plan::to(id));
        }
        let mut full = self.known_full();
        let note = if self.layout.spots_in(self.region).is_empty() || full.contains(&self.region) {
            None
        } else {
            full.push(self.region);
            Some(format!("{FULL_NOTE}{}.", self.layout.region_id(self.region)))
        };
        let shooter = self.shooter_region();
        let target = (0..self.layout.region_count())
            .filter(|&r| r != self.region && Some(r) != shooter && !self.layout.spots_in(r).is_empty())
            .filter(|r| !full.contains(r))
            .map(|r| (r, self.layout.route(self.region, self.obs.position, r, None)))
            .filter(|(_, route)| shooter.is_none_or(|s| !route.regions.contains(&s)))
            .min_by(|(a, x), (b, y)| x.length.total_cmp(&y.length).then(a.cmp(b)))
            .map(|(r, _)| r);
        let mut plan = target.and_then(|r| self.hop_toward(r, None)).map(Plan::to).unwrap_or_else(Plan::stay);
        plan.note = note;
        plan
    }

    /// Leave the current region first, then hide.
    pub fn run_then_hide(&self) -> Plan {
        if self.hiding() {
            return Plan::stay();
        }
        let moved = self.threat().is_some_and(|t| t.regions_moved_since_incident > 0);
        if moved {
            return self.hide_here();
        }
        let shooter = self.shooter_region();
        let next = self
            .layout
            .neighbors(self.region)
            .iter()
            .copied()
            .filter(|&(nb, _)| Some(nb) != shooter && self.is_offered(self.layout.region_id(nb)))
            .min_by(|&(a, da), &(b, db)| {
                let sa = self.layout.spots_in(a).is_empty();
                let sb = self.layout.spots_in(b).is_empty();
                let ca = self.obs.position.dist(self.layout.doors[da].pos);
                let cb = self.obs.position.dist(self.layout.doors[db].pos);
                sa.cmp(&sb).then(ca.total_cmp(&cb)).then(a.cmp(&b))
            });
        match next {
            Some((nb, _)) => Plan::to(self.layout.region_id(nb)),
            None => self.hide_here(),
        }
    }

    pub fn fight(&self) -> Plan {
        if self.is_offered(FIGHT_ID) {
            let mut plan = Plan::to(FIGHT_ID);
            plan.utterance = Some((VocalMode::OutLoud, "Get down, I will stop him!".to_string()));
            return plan;
        }
        self.shooter_region()
            .and_then(|s| self.hop_toward(s, None))
            .map(Plan::to)
            .unwrap_or_else(Plan::stay)
    }

    pub fn approach(&self) -> Plan {
        let id = self
            .obs
            .nearby_agents
            .iter()
            .filter(|a| self.is_offered(&a.id))
            .min_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)))
            .map(|a| a.id.clone())
            .or_else(|| self.obs.same_region_agents.iter().find(|a| self.is_offered(a)).cloned());
        id.map(Plan::to).unwrap_or_else(Plan::stay)
    }

    pub fn plan(&self, intent: Intent, sociability: f64) -> Plan {
        match intent {
            Intent::FollowGroup => self.follow(),
            Intent::HideHere => self.hide_here(),
            Intent::RunThenHide => self.run_then_hide(),
            Intent::FleeToExit => self.flee(1.0 - sociability),
            Intent::Freeze => Plan::stay(),
            Intent::Fight => self.fight(),
            Intent::ApproachAgent => self.approach(),
        }
    }
}

fn mood_for(intent: Intent) -> &'static str {
    match intent {
        Intent::FollowGroup => "anxious",
        Intent::HideHere | Intent::RunThenHide => "afraid",
        Intent::FleeToExit => "urgent",
        Intent::Freeze => "paralyzed",
        Intent::Fight => "determined",
        Intent::ApproachAgent => "calm",
    }
}

pub(crate) fn decision_from_plan(
    plan: Plan,
    intent: Intent,
    movement: Movement,
    layout: &Layout,
    thought: String,
) -> ActionDecision {
    let (vocal_mode, utterance) = plan.utterance.unwrap_or((VocalMode::Silent, String::new()));
    let movement = match (plan.action_id == STAY_ID, movement) {
        (true, _) => Movement::StayStill,
        (false, Movement::StayStill) => Movement::Walk,
        (false, m) => m,
    };
    ActionDecision {
        thought,
        vocal_mode,
        utterance,
        movement,
        action_id: plan.action_id,
        mood: mood_for(intent).to_string(),
        memory: plan.note.unwrap_or_else(|| format!("Chose to {}", intent.as_str().replace('_', " "))),
        intent: Some(intent.as_str().to_string()),
        heading_exit: plan.heading_exit.map(|e| layout.exits[e].id.clone()),
        fallback: false,
    }
    .normalized()
}

fn pre_incident(
    obs: &Observation,
    traits: &Traits,
    table: &TraitPolicyTable,
    layout: &Layout,
    offered: &[String],
    rng: &mut SimRng,
) -> ActionDecision {
    let t = traits.to_array();
    let pre = &table.pre_incident;
    let mut noise = || rng.unit() * pre.noise;
    let stay = pre.stay.eval(&t) + noise();
    let approach = pre.approach.eval(&t) + noise();
    let wander = pre.wander.eval(&t) + noise();
    let neighbors: Vec<&String> = obs
        .neighboring_regions
        .iter()
        .map(|n| &n.id)
        .filter(|id| offered.contains(id))
        .collect();
    let has_peer = obs.same_region_agents.iter().any(|a| offered.contains(a));
    let mut best = ("stay", stay);
    if has_peer && approach > best.1 {
        best = ("approach", approach);
    }
    if !neighbors.is_empty() && wander > best.1 {
        best = ("wander", wander);
    }
    let (action_id, movement, thought) = match best.0 {
        "approach" => {
            let planner = Planner::new(obs, layout, offered, table.exit_choice);
            let id = planner.map(|p| p.approach().action_id).unwrap_or_else(|| STAY_ID.to_string());
            (id, Movement::Walk, "I'll go say hello.")
        }
        "wander" => {
            let id = neighbors[rng.index(neighbors.len())].clone();
            (id, Movement::Walk, "I'll stretch my legs.")
        }
        _ => (STAY_ID.to_string(), Movement::StayStill, "Nothing unusual, I'll stay here."),
    };
    let movement = if action_id == STAY_ID { Movement::StayStill } else { movement };
    ActionDecision {
        thought: thought.to_string(),
        vocal_mode: VocalMode::Silent,
        utterance: String::new(),
        movement,
        action_id,
        mood: "relaxed".to_string(),
        memory: String::new(),
        intent: None,
        heading_exit: None,
        fallback: false,
    }
}

/// Deterministic stand-in for an LLM decision: score intents from traits and
/// observation features, take the best, map it to an offered action.
pub fn decide_trait_policy(
    obs: &Observation,
    traits: &Traits,
    table: &TraitPolicyTable,
    layout: &Layout,
    offered: &[String],
    rng: &mut SimRng,
) -> ActionDecision {
    if offered.is_empty() {
        return ActionDecision::fallback("no actions offered", &obs.mood);
    }
    if obs.phase == Phase::PreIncident {
        return pre_incident(obs, traits, table, layout, offered, rng);
    }
    let Some(planner) = Planner::new(obs, layout, offered, table.exit_choice) else {
        return ActionDecision::fallback("unknown region", &obs.mood);
    };
    let features = observation_features(obs);
    let scores = table.scores(traits, &features);
    let Some(top) = scores.iter().map(|(_, s)| *s).max_by(f64::total_cmp) else {
        return ActionDecision::stay("No intents configured.", &obs.mood);
    };
    let (intent, plan) = scores
        .iter()
        .filter(|(_, s)| (top - s).abs() <= 1e-12)
        .map(|&(i, _)| (i, planner.plan(i, traits.sociability)))
        .min_by(|a, b| a.1.action_id.cmp(&b.1.action_id))
        .expect("at least one intent at the maximum");
    let movement = table.row(intent).map(|r| r.movement).unwrap_or(Movement::Walk);
    let thought = format!("Scores favor {intent}.");
    decision_from_plan(plan, intent, movement, layout, thought)
}

/// Trait-mode policy.
#[derive(Debug, Clone, Default)]
pub struct TraitPolicy {
    pub table: TraitPolicyTable,
}

impl TraitPolicy {
    pub fn new(table: TraitPolicyTable) -> Self {
        Self { table }
    }
}

impl Policy for TraitPolicy {
    fn decide(&self, req: &DecisionRequest<'_>, rng: &mut SimRng) -> ActionDecision {
        decide_trait_policy(&req.observation, &req.persona.traits, &self.table, req.layout, &req.offered, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::testkit::{observation, offered, threat};

    /// Score by the squared-distance form: beta * (|t|^2 - |t - a|^2) + bias + features.
    fn oracle(t: [f64; 5], a: [f64; 5], beta: f64, extra: f64) -> f64 {
        let tt: f64 = t.iter().map(|x| x * x).sum();
        let d: f64 = t.iter().zip(&a).map(|(x, y)| (x - y) * (x - y)).sum();
        beta * (tt - d) + extra
    }

    fn rng() -> SimRng {
        SimRng::new(7)
    }

    #[test]
    fn scores_match_distance_form() {
        let table = TraitPolicyTable::default();
        let t = [0.5, 0.5, 0.5, 0.1, 0.1];
        let features = BTreeMap::from([("gunfire_heard", 1.0), ("free_spot_here", 1.0)]);
        for (intent, s) in table.scores(&Traits::from_array(t), &features) {
            let row = table.row(intent).unwrap();
            let Some(a) = row.anchor else { continue };
            let extra = row.bias + row.features.get("free_spot_here").copied().unwrap_or(0.0);
            assert!((s - oracle(t, a, table.beta, extra)).abs() < 1e-12, "{intent}");
        }
    }

    #[test]
    fn low_composure_low_initiative_freezes_when_shooter_heard() {
        let layout = Layout::school();
        let obs = observation(&layout, "classroom_1", Point::new(12.0, 12.0), Some(threat(false, "cafeteria", None)));
        let traits = Traits { composure: 0.1, initiative: 0.1, ..Traits::splat(0.5) };
        let d = decide_trait_policy(&obs, &traits, &TraitPolicyTable::default(), &layout, &offered(&layout, "classroom_1", false), &mut rng());
        assert_eq!(d.intent.as_deref(), Some("freeze"));
        assert_eq!(d.action_id, STAY_ID);
        assert_eq!(d.movement, Movement::StayStill);
    }

    #[test]
    fn assertive_composed_agent_fights_visible_shooter() {
        let layout = Layout::school();
        let obs = observation(&layout, "hallway1", Point::new(30.0, 20.0), Some(threat(true, "hallway1", Some(6.0))));
        let traits = Traits::from_array([0.5, 0.5, 0.9, 0.8, 0.5]);
        let d = decide_trait_policy(&obs, &traits, &TraitPolicyTable::default(), &layout, &offered(&layout, "hallway1", true), &mut rng());
        assert_eq!(d.action_id, FIGHT_ID);
    }

    #[test]
    fn ties_go_to_smallest_action_id() {
        let layout = Layout::school();
        let table = TraitPolicyTable {
            intents: [Intent::Freeze, Intent::HideHere]
                .into_iter()
                .map(|name| IntentRow { name, anchor: None, bias: 0.0, features: BTreeMap::new(), movement: Movement::Walk })
                .collect(),
            ..TraitPolicyTable::default()
        };
        let obs = observation(&layout, "classroom_1", Point::new(12.0, 12.0), Some(threat(false, "cafeteria", None)));
        let d = decide_trait_policy(&obs, &Traits::splat(0.5), &table, &layout, &offered(&layout, "classroom_1", false), &mut rng());
        // "hide_spot_…" < "stay_still".
        assert!(d.action_id.starts_with("hide_spot_"));
    }

    #[test]
    fn no_actions_gives_flagged_fallback() {
        let layout = Layout::school();
        let obs = observation(&layout, "lounge", Point::new(20.0, 26.0), Some(threat(false, "hallway1", None)));
        let d = decide_trait_policy(&obs, &Traits::splat(0.5), &TraitPolicyTable::default(), &layout, &[], &mut rng());
        assert!(d.fallback);
        assert_eq!(d.action_id, STAY_ID);
    }

    #[test]
    fn table_rejects_unknown_feature() {
        let mut v: serde_json::Value = serde_json::from_str(include_str!("../../data/trait_policy.json")).unwrap();
        v["intents"][0]["features"]["telepathy"] = 1.0.into();
        assert!(TraitPolicyTable::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn decisions_are_offered_and_silent_means_no_utterance() {
        let layout = Layout::school();
        let table = TraitPolicyTable::default();
        let mut r = SimRng::new(3);
        for region in ["classroom_1", "hallway2", "north_yard", "lounge"] {
            let here = layout.region_index(region).unwrap();
            let pos = layout.regions[here].rect.center();
            let obs = observation(&layout, region, pos, Some(threat(false, "kitchen", None)));
            let offered = offered(&layout, region, false);
            for _ in 0..50 {
                let t = Traits::from_array([r.unit(), r.unit(), r.unit(), r.unit(), r.unit()]);
                let d = decide_trait_policy(&obs, &t, &table, &layout, &offered, &mut r);
                assert!(offered.contains(&d.action_id), "{region}: {}", d.action_id);
                if d.vocal_mode == VocalMode::Silent {
                    assert!(d.utterance.is_empty());
                }
            }
        }
    }
}
