#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use peba::layout::Layout;
use peba::llm::{Gateway, GatewayConfig, Transport, TransportError};
use peba::persona::{base_pool, Descriptive, Persona, DESCRIPTIVE_CHAR_CAP};
use peba::rng::SimRng;
use peba::writer::{LlmWriter, PersonaWriter, Rewrite, DEFAULT_DENYLIST};
use peba::BehaviorLabel;
use peba::sim::{
    read_trajectories_jsonl, write_trajectories_jsonl, Episode, Phase, Policy, PolicyMode, SimConfig, Trajectory,
};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn trajectories(name: &str) -> Vec<Trajectory> {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    read_trajectories_jsonl(text.as_bytes()).unwrap()
}

pub fn completion(content: &str) -> String {
    serde_json::json!({
        "model": "test-model",
        "choices": [{"message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": 100, "completion_tokens": 20}
    })
    .to_string()
}

/// Answers every request with `reply(call_index, body)`.
pub struct FnTransport<F> {
    pub reply: F,
    pub calls: Arc<AtomicUsize>,
}

impl<F> Transport for FnTransport<F>
where
    F: Fn(usize, &serde_json::Value) -> String + Send + Sync,
{
    fn post(&self, _url: &str, _key: &str, body: &serde_json::Value) -> Result<(u16, String), TransportError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        Ok((200, completion(&(self.reply)(n, body))))
    }
}

pub fn test_config() -> GatewayConfig {
    GatewayConfig {
        model: "test-model".into(),
        prices: [("test-model".to_string(), peba::llm::Price { prompt: 0.15, completion: 0.6 })].into(),
        ..GatewayConfig::default()
    }
}

/// Gateway whose replies come from a closure instead of the network.
pub fn scripted_gateway<F>(reply: F) -> Gateway
where
    F: Fn(usize, &serde_json::Value) -> String + Send + Sync + 'static,
{
    let transport = FnTransport { reply, calls: Arc::new(AtomicUsize::new(0)) };
    Gateway::new(test_config(), "test-key", Box::new(transport)).unwrap()
}

/// Runs one episode tick by tick, checking the per-tick invariants; returns
/// the trajectory log bytes.
pub fn audited_episode(
    layout: &Layout,
    pool: &[Persona],
    policy: &dyn Policy,
    seed: u64,
    config: &SimConfig,
) -> Result<Vec<u8>, String> {
    let mut ep = Episode::new(layout, pool, config.clone(), seed, PolicyMode::Trait, None).map_err(|e| e.to_string())?;
    let n = pool.len();
    while !ep.is_finished() {
        let tick = ep.step(policy);
        for &(agent, d, speed) in &tick.moves {
            if d > speed * config.dt + 1e-9 {
                return Err(format!("t={} agent {agent} moved {d} at speed {speed}", tick.time_s));
            }
        }
        if tick.active + tick.exited + tick.incapacitated != n {
            return Err(format!("t={} population {:?}", tick.time_s, (tick.active, tick.exited, tick.incapacitated)));
        }
    }
    for a in ep.audit() {
        let should_see = a.phase == Phase::PostIncident && a.shooter_region == Some(a.agent_region) && !a.agent_hidden;
        if a.reported_visible != should_see {
            return Err(format!("t={} agent {} visibility {} expected {should_see}", a.time_s, a.agent, a.reported_visible));
        }
        if a.reported_distance && !a.reported_visible {
            return Err(format!("t={} agent {} got a distance without sight", a.time_s, a.agent));
        }
        if a.phase == Phase::PreIncident && a.has_threat_fields {
            return Err(format!("t={} agent {} saw threat fields before the incident", a.time_s, a.agent));
        }
    }
    let s = &ep.shooter().state;
    let m = u64::from(ep.shooter().params.magazine_size);
    if s.shots_fired != m * s.reloads_completed + m - u64::from(s.magazine) {
        return Err(format!("shots {} reloads {} magazine {}", s.shots_fired, s.reloads_completed, s.magazine));
    }
    let out = ep.finish();
    let mut bytes = Vec::new();
    write_trajectories_jsonl(&out.trajectories, &mut bytes).map_err(|e| e.to_string())?;
    Ok(bytes)
}

pub fn hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100000001b3))
}

/// A reply chosen from the request text alone, so a replay sees the same one.
pub fn fuzzed_reply(body: &serde_json::Value) -> String {
    let user = body["messages"][1]["content"].as_str().unwrap_or_default();
    let mut rng = SimRng::new(hash(user));
    let field = Descriptive::FIELDS[rng.index(6)];
    let text = format!("Rewritten {field} number {}.", rng.index(1000));
    let mut obj = serde_json::Map::new();
    obj.insert(field.into(), text.into());
    match rng.index(9) {
        0 => {
            obj.insert("name".into(), "Impostor Name".into());
        }
        1 => {
            obj.insert("age".into(), 7.into());
        }
        2 => {
            obj.insert("gender".into(), "unknown".into());
        }
        3 => {
            obj.insert("backstory".into(), "They always fight first.".into());
        }
        4 => {
            obj.insert("knowledge_scope".into(), "x".repeat(501).into());
        }
        5 => return "no json here".into(),
        6 => {
            obj.insert("extra_field".into(), "ignored".into());
        }
        _ => {}
    }
    let s = serde_json::Value::Object(obj).to_string();
    if rng.chance(0.2) {
        format!("Here you go:\n```json\n{s}\n```")
    } else {
        s
    }
}

pub fn fuzz_run(writer: &LlmWriter, rounds: usize) -> Vec<(Persona, Rewrite)> {
    let mut pool = base_pool();
    let mut out = Vec::new();
    for round in 0..rounds {
        for (i, p) in pool.iter_mut().enumerate() {
            let target = BehaviorLabel::ALL[(i + round) % 6];
            let current = BehaviorLabel::ALL[(i + round + 1) % 6];
            let rw = writer.rewrite(p, current, target, &mut SimRng::new(0)).unwrap();
            out.push((p.clone(), rw.clone()));
            *p = rw.persona;
        }
    }
    out
}

pub fn check_identity(results: &[(Persona, Rewrite)]) -> Result<(), String> {
    for (old, rw) in results {
        if rw.persona.id != old.id || rw.persona.identity != old.identity || rw.persona.traits != old.traits {
            return Err(format!("{}: identity or traits changed", old.id));
        }
        for f in Descriptive::FIELDS {
            let v = rw.persona.descriptive.get(f).unwrap_or_default();
            if v.chars().count() > DESCRIPTIVE_CHAR_CAP {
                return Err(format!("{}: {f} over the cap", old.id));
            }
            if DEFAULT_DENYLIST.iter().any(|d| v.to_lowercase().contains(d)) {
                return Err(format!("{}: {f} carries a directive phrase", old.id));
            }
        }
        if !rw.accepted && (&rw.persona != old || rw.warning.is_none()) {
            return Err(format!("{}: rejected rewrite changed the persona", old.id));
        }
    }
    Ok(())
}
