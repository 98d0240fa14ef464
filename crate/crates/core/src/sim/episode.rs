use std::collections::HashMap;

use super::actions::Action;
use super::config::SimConfig;
use super::observation::Observation;
use super::policy::{ActionDecision, DecisionRequest, Policy};
use super::trajectory::{DecisionRecord, EpisodeSummary, TerminalRecord, TerminalStatus, Trajectory};
use super::{Movement, Phase, PolicyMode, Posture, Trigger, VocalMode};
use crate::behavior::BehaviorLabel;
use crate::error::{Error, Result};
use crate::layout::{Layout, Point};
use crate::persona::Persona;
use crate::rng::SimRng;
use crate::shooter::{Shooter, Shot};

const EPS: f64 = 1e-9;
const STREAM_PLACEMENT: u64 = 0x504c_4143;
const STREAM_SHOOTER: u64 = 0x5348_4f4f;
const STREAM_POLICY: u64 = 0x504f_4c49;
const STREAM_NAV: u64 = 0x4e41_5649;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentStatus {
    Active,
    Exited,
    Incapacitated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Goal {
    Point { region: usize, pos: Point },
    Spot(usize),
    Exit(usize),
    Agent(usize),
    Shooter,
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: String,
    pub position: Point,
    pub region: usize,
    pub movement: Movement,
    pub mood: String,
    pub health: f64,
    pub posture: Posture,
    pub memory: Vec<String>,
    pub goal: Option<Goal>,
    pub status: AgentStatus,
    pub exit_id: Option<usize>,
    pub heading_exit: Option<usize>,
    pub claimed_spot: Option<usize>,
    pub last_decision_time: Option<f64>,
    pub last_action_stay: bool,
    pub reached: bool,
    pub in_reach: bool,
    pub forced: Option<Trigger>,
    pub shooter_last_known: Option<usize>,
    pub last_gunfire_heard: Option<f64>,
    pub incident_position: Option<Point>,
    pub incident_region: Option<usize>,
    pub region_changes_post: usize,
    pub directive: Option<BehaviorLabel>,
    pub end_time: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Utterance {
    pub speaker: usize,
    pub time_s: f64,
    pub position: Point,
    pub text: String,
    pub vocal_mode: VocalMode,
    pub exit_hint: Option<usize>,
}

/// What an observation revealed about the shooter versus the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationAudit {
    pub time_s: f64,
    pub agent: usize,
    pub agent_region: usize,
    pub agent_hidden: bool,
    pub phase: Phase,
    pub shooter_region: Option<usize>,
    pub reported_visible: bool,
    pub reported_distance: bool,
    pub has_threat_fields: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TickReport {
    pub time_s: f64,
    /// (agent, straight-line displacement, speed in effect) for every agent.
    pub moves: Vec<(usize, f64, f64)>,
    pub active: usize,
    pub exited: usize,
    pub incapacitated: usize,
    pub shots: Vec<Shot>,
    pub decisions: usize,
}

pub struct EpisodeOutput {
    pub trajectories: Vec<Trajectory>,
    pub summary: EpisodeSummary,
}

/// Initial (region, position) per agent from a seeded placement stream.
pub fn spawn_positions(layout: &Layout, n: usize, config: &SimConfig, seed: u64) -> Vec<(usize, Point)> {
    let mut rng = SimRng::new(config.placement_seed.unwrap_or(seed)).derive(STREAM_PLACEMENT);
    let weights: Vec<f64> = layout
        .regions
        .iter()
        .map(|r| config.spawn.weight(r.kind) * r.rect.area().sqrt())
        .collect();
    let usable = weights.iter().any(|w| *w > 0.0);
    (0..n)
        .map(|_| {
            let region = if usable { rng.weighted(&weights) } else { 0 };
            (region, layout.random_point(region, &mut rng))
        })
        .collect()
}

pub struct Episode<'a> {
    pub(crate) layout: &'a Layout,
    pub(crate) personas: &'a [Persona],
    pub(crate) config: SimConfig,
    pub(crate) agents: Vec<AgentState>,
    pub(crate) shooter: Shooter,
    pub(crate) time: f64,
    pub(crate) entry_time: f64,
    pub(crate) incident: bool,
    pub(crate) utterances: Vec<Utterance>,
    pub(crate) spot_owner: Vec<Option<usize>>,
    seed: u64,
    mode: PolicyMode,
    action_map: HashMap<String, Action>,
    policy_rngs: Vec<SimRng>,
    nav_rngs: Vec<SimRng>,
    shooter_rng: SimRng,
    records: Vec<Vec<DecisionRecord>>,
    audit: Vec<ObservationAudit>,
    shots: Vec<Shot>,
    decisions: usize,
}

impl<'a> Episode<'a> {
    pub fn new(
        layout: &'a Layout,
        personas: &'a [Persona],
        config: SimConfig,
        seed: u64,
        mode: PolicyMode,
        directives: Option<&[BehaviorLabel]>,
    ) -> Result<Self> {
        config.validate()?;
        if personas.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        if let Some(d) = directives {
            if d.len() != personas.len() {
                return Err(Error::Config(format!(
                    "{} directives for {} personas",
                    d.len(),
                    personas.len()
                )));
            }
        }
        let mut action_map = HashMap::new();
        action_map.insert(super::STAY_ID.to_string(), Action::StayStill);
        action_map.insert(super::FIGHT_ID.to_string(), Action::Fight);
        for (i, r) in layout.regions.iter().enumerate() {
            action_map.insert(r.id.clone(), Action::Region(i));
        }
        for (i, s) in layout.spots.iter().enumerate() {
            action_map.insert(s.id.clone(), Action::Spot(i));
        }
        for (i, e) in layout.exits.iter().enumerate() {
            action_map.insert(e.id.clone(), Action::Exit(i));
        }
        for (i, p) in personas.iter().enumerate() {
            if action_map.insert(p.id.clone(), Action::Agent(i)).is_some() {
                return Err(Error::Config(format!("persona id {} collides with another action id", p.id)));
            }
        }

        let spawn = spawn_positions(layout, personas.len(), &config, seed);
        let agents = personas
            .iter()
            .zip(&spawn)
            .enumerate()
            .map(|(i, (p, &(region, position)))| AgentState {
                id: p.id.clone(),
                position,
                region,
                movement: Movement::StayStill,
                mood: "neutral".into(),
                health: 100.0,
                posture: Posture::Standing,
                memory: Vec::new(),
                goal: None,
                status: AgentStatus::Active,
                exit_id: None,
                heading_exit: None,
                claimed_spot: None,
                last_decision_time: None,
                last_action_stay: false,
                reached: false,
                in_reach: false,
                forced: None,
                shooter_last_known: None,
                last_gunfire_heard: None,
                incident_position: None,
                incident_region: None,
                region_changes_post: 0,
                directive: directives.map(|d| d[i]),
                end_time: None,
            })
            .collect();

        let root = SimRng::new(seed);
        let entry_time = config.shooter_entry_time_s.unwrap_or(layout.shooter_entry_time_s);
        if !(entry_time >= 0.0 && entry_time < config.horizon_s) {
            return Err(Error::Config(format!("shooter entry time {entry_time} outside [0, horizon)")));
        }
        let shooter = Shooter::new(layout, config.shooter);
        Ok(Episode {
            layout,
            personas,
            shooter,
            time: 0.0,
            entry_time,
            incident: false,
            utterances: Vec::new(),
            spot_owner: vec![None; layout.spots.len()],
            seed,
            mode,
            action_map,
            policy_rngs: (0..personas.len()).map(|i| root.derive(STREAM_POLICY).derive(i as u64)).collect(),
            nav_rngs: (0..personas.len()).map(|i| root.derive(STREAM_NAV).derive(i as u64)).collect(),
            shooter_rng: root.derive(STREAM_SHOOTER),
            records: vec![Vec::new(); personas.len()],
            audit: Vec::new(),
            shots: Vec::new(),
            decisions: 0,
            agents,
            config,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn shooter(&self) -> &Shooter {
        &self.shooter
    }

    pub fn layout(&self) -> &Layout {
        self.layout
    }

    pub fn incident_started(&self) -> bool {
        self.incident
    }

    pub fn audit(&self) -> &[ObservationAudit] {
        &self.audit
    }

    pub fn records(&self, agent: usize) -> &[DecisionRecord] {
        &self.records[agent]
    }

    pub fn is_finished(&self) -> bool {
        self.time >= self.config.horizon_s - EPS
            || self.agents.iter().all(|a| a.status != AgentStatus::Active)
    }

    /// Line of sight is same-region co-presence; a hidden civilian neither
    /// sees nor is seen.
    pub(crate) fn shooter_visible_to(&self, agent: usize) -> bool {
        let a = &self.agents[agent];
        self.incident
            && self.shooter.is_active()
            && a.status == AgentStatus::Active
            && a.posture != Posture::Hiding
            && a.region == self.shooter.state.current_region
    }

    fn visible_in(&self, region: usize) -> Vec<usize> {
        self.agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.status == AgentStatus::Active && a.region == region && a.posture != Posture::Hiding)
            .map(|(i, _)| i)
            .collect()
    }

    fn start_incident(&mut self) {
        self.incident = true;
        self.shooter.activate(self.time);
        let entry_region = self.shooter.state.current_region;
        let heard = self.layout.within_hops(entry_region, self.config.hearing_hops);
        for a in self.agents.iter_mut().filter(|a| a.status == AgentStatus::Active) {
            a.forced = Some(Trigger::Incident);
            a.incident_position = Some(a.position);
            a.incident_region = Some(a.region);
            if self.config.entry_shot_global || heard.contains(&a.region) {
                a.shooter_last_known = Some(entry_region);
            }
            a.last_gunfire_heard = Some(self.time);
        }
    }

    fn due(&self, agent: usize) -> Option<Trigger> {
        let a = &self.agents[agent];
        if a.status != AgentStatus::Active {
            return None;
        }
        if let Some(f) = a.forced {
            return Some(f);
        }
        let Some(last) = a.last_decision_time else {
            return Some(Trigger::Initial);
        };
        let since = self.time - last;
        if a.reached {
            Some(Trigger::Reached)
        } else if a.last_action_stay {
            (since >= self.config.stay_cooldown_s - EPS).then_some(Trigger::Cooldown)
        } else {
            (since >= self.config.pursuit_timeout_s - EPS).then_some(Trigger::Timeout)
        }
    }

    fn request(&mut self, agent: usize, trigger: Trigger) -> DecisionRequest<'a> {
        let observation = self.observe(agent, trigger == Trigger::Incident);
        self.audit.push(ObservationAudit {
            time_s: self.time,
            agent,
            agent_region: self.agents[agent].region,
            agent_hidden: self.agents[agent].posture == Posture::Hiding,
            phase: observation.phase,
            shooter_region: self.shooter.is_active().then_some(self.shooter.state.current_region),
            reported_visible: observation.threat.as_ref().is_some_and(|t| t.shooter_visible),
            reported_distance: observation.threat.as_ref().is_some_and(|t| t.shooter_distance.is_some()),
            has_threat_fields: observation.threat.is_some(),
        });
        DecisionRequest {
            agent,
            persona: &self.personas[agent],
            offered: super::offered_actions(self, agent),
            observation,
            directive: self.agents[agent].directive,
            layout: self.layout,
        }
    }

    fn run_decisions(&mut self, policy: &dyn Policy) -> usize {
        let due: Vec<(usize, Trigger)> = (0..self.agents.len())
            .filter_map(|i| self.due(i).map(|t| (i, t)))
            .collect();
        if due.is_empty() {
            return 0;
        }
        let mut made = Vec::with_capacity(due.len());
        if policy.concurrent() {
            let requests: Vec<(DecisionRequest<'a>, Trigger)> =
                due.iter().map(|&(i, t)| (self.request(i, t), t)).collect();
            let limit = self.config.in_flight_limit.max(1);
            let mut decisions: Vec<ActionDecision> = Vec::with_capacity(requests.len());
            for chunk in requests.chunks(limit) {
                let mut rngs: Vec<SimRng> = chunk.iter().map(|(r, _)| self.policy_rngs[r.agent].clone()).collect();
                let results: Vec<(ActionDecision, SimRng)> = std::thread::scope(|s| {
                    let handles: Vec<_> = chunk
                        .iter()
                        .zip(rngs.drain(..))
                        .map(|((req, _), mut rng)| {
                            s.spawn(move || {
                                let d = policy.decide(req, &mut rng);
                                (d, rng)
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().unwrap_or_else(|_| (ActionDecision::fallback("decision thread panicked", "confused"), SimRng::new(0))))
                        .collect()
                });
                for ((req, _), (d, rng)) in chunk.iter().zip(results) {
                    self.policy_rngs[req.agent] = rng;
                    decisions.push(d);
                }
            }
            for ((req, trigger), decision) in requests.into_iter().zip(decisions) {
                let idx = self.apply(req.agent, trigger, &req.offered, decision);
                made.push((req.agent, idx));
            }
        } else {
            for (agent, trigger) in due {
                let req = self.request(agent, trigger);
                let mut rng = std::mem::replace(&mut self.policy_rngs[agent], SimRng::new(0));
                let decision = policy.decide(&req, &mut rng);
                self.policy_rngs[agent] = rng;
                let idx = self.apply(agent, trigger, &req.offered, decision);
                made.push((agent, idx));
            }
        }
        // Co-movement is measured once every due agent has committed.
        for (agent, idx) in &made {
            let co = self.co_movers(*agent);
            self.records[*agent][*idx].co_movers = co;
        }
        made.len()
    }

    fn co_movers(&self, agent: usize) -> usize {
        let me = &self.agents[agent];
        let Some(exit) = me.heading_exit else { return 0 };
        if me.status != AgentStatus::Active {
            return 0;
        }
        self.agents
            .iter()
            .enumerate()
            .filter(|(j, o)| {
                *j != agent
                    && o.status == AgentStatus::Active
                    && o.heading_exit == Some(exit)
                    && o.movement != Movement::StayStill
                    && o.position.dist(me.position) <= self.config.co_mover_radius_m
            })
            .count()
    }

    /// Exit whose route starts through `region` and is shortest, for moves
    /// whose policy did not name one.
    fn infer_heading(&self, agent: usize, action: Action) -> Option<usize> {
        let a = &self.agents[agent];
        match action {
            Action::Exit(e) => Some(e),
            Action::Agent(j) => self.agents[j].heading_exit,
            Action::Region(r) => self
                .layout
                .exits
                .iter()
                .enumerate()
                .filter(|(_, e)| {
                    e.region == r
                        || self
                            .layout
                            .first_door(a.region, a.position, e.region, Some(e.pos))
                            .is_some_and(|d| self.layout.doors[d].other(a.region) == r)
                })
                .min_by(|(_, x), (_, y)| {
                    let dx = self.layout.path_length(a.region, a.position, x.region, x.pos);
                    let dy = self.layout.path_length(a.region, a.position, y.region, y.pos);
                    dx.total_cmp(&dy)
                })
                .map(|(i, _)| i),
            _ => None,
        }
    }

    fn release_spot(&mut self, agent: usize) {
        if let Some(s) = self.agents[agent].claimed_spot.take() {
            if self.spot_owner[s] == Some(agent) {
                self.spot_owner[s] = None;
            }
        }
    }

    fn exit_hint_in(&self, text: &str) -> Option<usize> {
        let lower = text.to_lowercase();
        self.layout.exits.iter().position(|e| {
            lower.contains(&e.id.to_lowercase())
                || lower.contains(&self.layout.region_id(e.region).replace('_', " "))
                || lower.contains(self.layout.region_id(e.region))
        })
    }

    /// Commit a decision; returns the index of the record written.
    fn apply(&mut self, agent: usize, trigger: Trigger, offered: &[String], decision: ActionDecision) -> usize {
        let mut decision = decision.normalized();
        let mut action = self.action_map.get(&decision.action_id).copied();
        if action.is_none() || !offered.contains(&decision.action_id) {
            log::debug!("{}: action {:?} not offered, staying", self.agents[agent].id, decision.action_id);
            decision = ActionDecision { fallback: true, ..ActionDecision::stay(decision.thought, decision.mood) };
            action = Some(Action::StayStill);
        }
        let mut action = action.unwrap_or(Action::StayStill);
        if let Action::Spot(s) = action {
            if self.spot_owner[s].is_some_and(|o| o != agent) {
                decision = ActionDecision { fallback: true, ..ActionDecision::stay(decision.thought, decision.mood) };
                action = Action::StayStill;
            }
        }
        let now = self.time;
        let incident = self.incident;
        let heading = match action {
            Action::Exit(e) => Some(e),
            Action::Region(_) | Action::Agent(_) => decision
                .heading_exit
                .as_deref()
                .and_then(|h| self.layout.exit_index(h))
                .or_else(|| self.infer_heading(agent, action)),
            _ => None,
        };

        let keep_spot = matches!(action, Action::StayStill) || action == Action::Spot(self.agents[agent].claimed_spot.unwrap_or(usize::MAX));
        if !keep_spot {
            self.release_spot(agent);
        }

        let goal = match action {
            Action::StayStill => None,
            Action::Region(r) => {
                let from = self.agents[agent].region;
                let door = self.layout.first_door(from, self.agents[agent].position, r, None);
                let pos = match door {
                    Some(d) => self.layout.entry_point(d, r, &mut self.nav_rngs[agent]),
                    None => self.layout.random_point(r, &mut self.nav_rngs[agent]),
                };
                Some(Goal::Point { region: r, pos })
            }
            Action::Spot(s) => {
                self.spot_owner[s] = Some(agent);
                self.agents[agent].claimed_spot = Some(s);
                Some(Goal::Spot(s))
            }
            Action::Exit(e) => Some(Goal::Exit(e)),
            Action::Agent(j) => Some(Goal::Agent(j)),
            Action::Fight => Some(Goal::Shooter),
        };

        let exit_hint = if decision.utterance.is_empty() { None } else { self.exit_hint_in(&decision.utterance) };
        let a = &mut self.agents[agent];
        let movement = match (action, decision.movement) {
            (Action::StayStill, _) => Movement::StayStill,
            (_, Movement::StayStill) => Movement::Walk,
            (_, m) => m,
        };
        a.movement = movement;
        a.goal = goal;
        a.heading_exit = heading;
        a.reached = false;
        a.in_reach = false;
        a.forced = None;
        a.last_decision_time = Some(now);
        a.last_action_stay = action == Action::StayStill;
        if action == Action::StayStill {
            if a.posture != Posture::Hiding {
                a.posture = if incident { Posture::Crouching } else { Posture::Standing };
            }
        } else if !matches!(action, Action::Spot(s) if a.posture == Posture::Hiding && a.claimed_spot == Some(s)) {
            a.posture = Posture::Standing;
        }
        if !decision.mood.trim().is_empty() {
            a.mood = decision.mood.clone();
        }
        if !decision.memory.trim().is_empty() && a.memory.last() != Some(&decision.memory) {
            a.memory.push(decision.memory.clone());
            let cap = self.config.memory_cap;
            if a.memory.len() > cap {
                let drop = a.memory.len() - cap;
                a.memory.drain(..drop);
            }
        }
        let record = DecisionRecord {
            agent: a.id.clone(),
            time_s: now,
            trigger,
            phase: if incident { Phase::PostIncident } else { Phase::PreIncident },
            location: self.layout.region_id(a.region).to_string(),
            position: a.position,
            mood: a.mood.clone(),
            health: a.health,
            posture: a.posture,
            shooter_region: if incident {
                a.shooter_last_known.map(|r| self.layout.region_id(r).to_string())
            } else {
                None
            },
            shooter_visible: false,
            thought: decision.thought.clone(),
            action_id: self.action_id(action),
            intent: decision.intent.clone(),
            movement,
            vocal_mode: decision.vocal_mode,
            utterance: decision.utterance.clone(),
            memory_update: decision.memory.clone(),
            heading_exit: heading.map(|e| self.layout.exits[e].id.clone()),
            co_movers: 0,
            fallback: decision.fallback,
            offered: offered.to_vec(),
        };
        let visible = self.shooter_visible_to(agent);
        if decision.vocal_mode != VocalMode::Silent && !decision.utterance.is_empty() {
            self.utterances.push(Utterance {
                speaker: agent,
                time_s: now,
                position: self.agents[agent].position,
                text: decision.utterance,
                vocal_mode: decision.vocal_mode,
                exit_hint,
            });
        }
        self.decisions += 1;
        let recs = &mut self.records[agent];
        recs.push(DecisionRecord { shooter_visible: visible, ..record });
        recs.len() - 1
    }

    fn goal_target(&self, goal: Goal) -> Option<(usize, Point, f64)> {
        let reach = self.config.reach_radius_m;
        match goal {
            Goal::Point { region, pos } => Some((region, pos, 0.0)),
            Goal::Spot(s) => Some((self.layout.spots[s].region, self.layout.spots[s].pos, 0.0)),
            Goal::Exit(e) => Some((self.layout.exits[e].region, self.layout.exits[e].pos, 0.0)),
            Goal::Agent(j) => {
                let o = &self.agents[j];
                (o.status != AgentStatus::Exited).then_some((o.region, o.position, reach))
            }
            Goal::Shooter => self
                .shooter
                .is_active()
                .then_some((self.shooter.state.current_region, self.shooter.state.position, reach)),
        }
    }

    fn on_arrival(&mut self, agent: usize, goal: Goal) {
        let now = self.time + self.config.dt;
        let a = &mut self.agents[agent];
        match goal {
            Goal::Point { .. } => {
                a.reached = true;
                a.goal = None;
                a.movement = Movement::StayStill;
            }
            Goal::Spot(_) => {
                a.reached = true;
                a.posture = Posture::Hiding;
                a.movement = Movement::StayStill;
            }
            Goal::Exit(e) => {
                a.status = AgentStatus::Exited;
                a.exit_id = Some(e);
                a.end_time = Some(now);
                a.movement = Movement::StayStill;
                a.goal = None;
                self.release_spot(agent);
            }
            Goal::Agent(_) | Goal::Shooter => {
                if !a.in_reach {
                    a.reached = true;
                    a.in_reach = true;
                }
            }
        }
    }

    /// Move one agent for a tick; returns straight-line displacement.
    fn move_agent(&mut self, agent: usize) -> f64 {
        let start = self.agents[agent].position;
        let speed = self.agents[agent].movement.speed();
        let Some(goal) = self.agents[agent].goal else { return 0.0 };
        if self.agents[agent].status != AgentStatus::Active {
            return 0.0;
        }
        let mut budget = speed * self.config.dt;
        let mut guard = 0;
        loop {
            guard += 1;
            let Some((target_region, target_pos, radius)) = self.goal_target(goal) else {
                let a = &mut self.agents[agent];
                a.reached = true;
                a.goal = None;
                a.movement = Movement::StayStill;
                break;
            };
            let region = self.agents[agent].region;
            if region != target_region {
                let here = self.agents[agent].position;
                let Some(door) = self.layout.first_door(region, here, target_region, Some(target_pos)) else { break };
                if budget <= EPS || guard > 64 {
                    break;
                }
                let wp = self.layout.doors[door].pos;
                let (np, hit) = self.agents[agent].position.step_toward(wp, budget);
                budget -= self.agents[agent].position.dist(np);
                self.agents[agent].position = np;
                if hit {
                    let a = &mut self.agents[agent];
                    a.region = self.layout.doors[door].other(region);
                    if self.incident {
                        a.region_changes_post += 1;
                    }
                    continue;
                }
                break;
            }
            let pos = self.agents[agent].position;
            let d = pos.dist(target_pos);
            if d <= radius + EPS {
                self.on_arrival(agent, goal);
                break;
            }
            self.agents[agent].in_reach = false;
            if budget <= EPS {
                break;
            }
            let travel = (d - radius).min(budget);
            let (np, _) = pos.step_toward(target_pos, travel);
            self.agents[agent].position = np;
            if d - travel <= radius + EPS {
                if radius == 0.0 {
                    self.agents[agent].position = target_pos;
                }
                self.on_arrival(agent, goal);
            }
            break;
        }
        start.dist(self.agents[agent].position)
    }

    fn shooter_phase(&mut self) -> Vec<Shot> {
        if !self.shooter.is_active() {
            return Vec::new();
        }
        let dt = self.config.dt;
        let before = self.shooter.state.current_region;
        self.shooter.advance(dt);
        let region = self.shooter.state.current_region;
        let visible = self.visible_in(region);
        let shots = self.shooter.fire(&visible, self.time, dt, &mut self.shooter_rng);
        let now = self.time;

        if region != before {
            for a in self.agents.iter_mut() {
                if a.status == AgentStatus::Active && a.region == region {
                    a.forced = Some(Trigger::ShooterEntered);
                    a.shooter_last_known = Some(region);
                }
            }
        }
        for &i in &self.visible_in(region) {
            self.agents[i].shooter_last_known = Some(region);
        }
        if !shots.is_empty() {
            let heard = self.layout.within_hops(region, self.config.hearing_hops);
            for a in self.agents.iter_mut() {
                if a.status == AgentStatus::Active && heard.contains(&a.region) {
                    a.shooter_last_known = Some(region);
                    a.last_gunfire_heard = Some(now);
                }
            }
        }
        for shot in &shots {
            if !shot.hit {
                continue;
            }
            let damage = self.config.shooter.damage;
            let a = &mut self.agents[shot.target];
            if a.status != AgentStatus::Active {
                continue;
            }
            a.health = (a.health - damage).max(0.0);
            if a.health <= 0.0 {
                a.status = AgentStatus::Incapacitated;
                a.end_time = Some(shot.time_s);
                a.movement = Movement::StayStill;
                a.goal = None;
            }
        }
        self.shots.extend(shots.iter().copied());
        shots
    }

    /// Advance one tick: incident onset, due decisions, shooter, movement.
    pub fn step(&mut self, policy: &dyn Policy) -> TickReport {
        let mut report = TickReport { time_s: self.time, ..Default::default() };
        if !self.incident && self.time >= self.entry_time - EPS {
            self.start_incident();
        }
        report.decisions = self.run_decisions(policy);
        report.shots = self.shooter_phase();
        for i in 0..self.agents.len() {
            let speed = self.agents[i].movement.speed();
            let d = self.move_agent(i);
            report.moves.push((i, d, speed));
        }
        let horizon = self.time - self.config.utterance_window_s - EPS;
        self.utterances.retain(|u| u.time_s >= horizon);
        self.time += self.config.dt;
        for a in &self.agents {
            match a.status {
                AgentStatus::Active => report.active += 1,
                AgentStatus::Exited => report.exited += 1,
                AgentStatus::Incapacitated => report.incapacitated += 1,
            }
        }
        report
    }

    pub fn run(&mut self, policy: &dyn Policy) {
        while !self.is_finished() {
            self.step(policy);
        }
    }

    pub fn finish(self) -> EpisodeOutput {
        let end = self.time.min(self.config.horizon_s);
        let mut trajectories = Vec::with_capacity(self.agents.len());
        let mut counts = [0usize; 4];
        for (i, (a, records)) in self.agents.iter().zip(self.records).enumerate() {
            let status = match a.status {
                AgentStatus::Exited => TerminalStatus::Exited,
                AgentStatus::Incapacitated => TerminalStatus::Incapacitated,
                AgentStatus::Active if a.posture == Posture::Hiding => TerminalStatus::Hiding,
                AgentStatus::Active => TerminalStatus::Timeout,
            };
            counts[status as usize] += 1;
            trajectories.push(Trajectory {
                agent_id: a.id.clone(),
                persona: Some(self.personas[i].clone()),
                incident_time_s: self.incident.then_some(self.entry_time),
                incident_region: a.incident_region.map(|r| self.layout.region_id(r).to_string()),
                incident_position: a.incident_position,
                records,
                terminal: TerminalRecord {
                    status,
                    time_s: a.end_time.unwrap_or(end).min(self.config.horizon_s),
                    region: self.layout.region_id(a.region).to_string(),
                    position: a.position,
                    posture: a.posture,
                    exit_id: a.exit_id.map(|e| self.layout.exits[e].id.clone()),
                    health: a.health,
                    region_changes_post: a.region_changes_post,
                },
            });
        }
        let fallbacks = trajectories
            .iter()
            .flat_map(|t| t.records.iter())
            .filter(|r| r.fallback)
            .count();
        let summary = EpisodeSummary {
            layout: self.layout.name.clone(),
            seed: self.seed,
            mode: self.mode,
            agents: trajectories.len(),
            end_time_s: end,
            incident_time_s: self.entry_time,
            exited: counts[TerminalStatus::Exited as usize],
            hiding: counts[TerminalStatus::Hiding as usize],
            incapacitated: counts[TerminalStatus::Incapacitated as usize],
            timeout: counts[TerminalStatus::Timeout as usize],
            shots_fired: self.shooter.state.shots_fired,
            reloads_completed: self.shooter.state.reloads_completed,
            decisions: self.decisions,
            fallbacks,
            terminal: trajectories.iter().map(|t| (t.agent_id.clone(), t.terminal.status)).collect(),
        };
        EpisodeOutput { trajectories, summary }
    }

    /// Observation as the agent would receive it now, without side effects.
    pub fn peek_observation(&self, agent: usize) -> Observation {
        self.observe(agent, false)
    }
}

/// Simulate one episode to the horizon and return every agent's trajectory.
pub fn run_episode(
    layout: &Layout,
    personas: &[Persona],
    policy: &dyn Policy,
    mode: PolicyMode,
    seed: u64,
    config: &SimConfig,
    directives: Option<&[BehaviorLabel]>,
) -> Result<EpisodeOutput> {
    let mut ep = Episode::new(layout, personas, config.clone(), seed, mode, directives)?;
    ep.run(policy);
    Ok(ep.finish())
}
