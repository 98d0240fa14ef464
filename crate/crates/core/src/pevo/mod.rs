//! The alignment loop: simulate, classify, measure the gap to the target
//! distribution, pick agents from over-represented classes and rewrite them
//! toward under-represented ones.

mod cost;
mod history;

pub use cost::{cost_report, rank_by_efficiency, CostReport, CostRow};
pub use history::{read_history_jsonl, write_history_csv, write_history_jsonl, CSV_HEADER};

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorDistribution, BehaviorLabel};
use crate::classifier::{classify_rule, Classifier, RuleConfig};
use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::llm::{Gateway, UsageEntry, UsageTotals};
use crate::metrics::{signed_gaps, AlignmentReport, MetricsOptions, SignedGapVector};
use crate::persona::Persona;
use crate::rng::{mix_seed, SimRng};
use crate::sim::{run_episode, Policy, PolicyMode, SimConfig, Trajectory};
use crate::writer::{EvolutionEntry, PersonaWriter, WriterMode, DEFAULT_STEP};

const STREAM_ASSIGN: u64 = 0xA551;
const STREAM_WRITER: u64 = 0x3817;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PevoConfig {
    /// Convergence tolerance on KL(p_sim ‖ p_real).
    pub epsilon: f64,
    pub max_iterations: usize,
    pub seeds: Vec<u64>,
    pub policy_mode: PolicyMode,
    pub writer_mode: WriterMode,
    pub step: f64,
    pub metrics: MetricsOptions,
    pub target: BehaviorDistribution,
    pub sim: SimConfig,
}

impl Default for PevoConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            max_iterations: 15,
            seeds: vec![1, 2, 3, 4, 5],
            policy_mode: PolicyMode::Trait,
            writer_mode: WriterMode::Trait,
            step: DEFAULT_STEP,
            metrics: MetricsOptions::default(),
            target: BehaviorDistribution::expert_reference(),
            sim: SimConfig::default(),
        }
    }
}

impl PevoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.policy_mode == PolicyMode::Explicit {
            return Err(Error::Config("explicit directives are a baseline, not an optimizer mode".into()));
        }
        crate::writer::check_step(self.step)?;
        self.sim.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub agent: usize,
    pub source: BehaviorLabel,
    pub target: BehaviorLabel,
}

/// Agents chosen for rewriting, in agent order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentMap {
    pub entries: Vec<Assignment>,
}

impl AssignmentMap {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, agent: usize) -> Option<&Assignment> {
        self.entries
            .binary_search_by_key(&agent, |a| a.agent)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Sources all have gap < 0 and targets gap > 0.
    pub fn is_feasible(&self, gaps: &SignedGapVector) -> bool {
        self.entries
            .iter()
            .all(|a| gaps.get(a.source) < 0.0 && gaps.get(a.target) > 0.0)
    }
}

/// k = ⌈|g[b]|·N⌉ agents per over-represented class b, capped at the class
/// size; each gets a target drawn with probability g⁺[b'] / Σ g⁺.
pub fn select_and_assign(labels: &[BehaviorLabel], gaps: &SignedGapVector, rng: &mut SimRng) -> AssignmentMap {
    let n = labels.len();
    let plus = gaps.positive();
    if plus.iter().sum::<f64>() <= 0.0 {
        return AssignmentMap::default();
    }
    let minus = gaps.negative();
    let mut entries = Vec::new();
    for source in BehaviorLabel::ALL {
        let g = minus[source.index()];
        if g <= 0.0 {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == source).collect();
        // The tolerance keeps products like 0.05·80 = 4.000000000000001 at 4.
        let k = ((g * n as f64 - 1e-9).ceil().max(0.0) as usize).min(members.len());
        for pick in rng.sample_indices(members.len(), k) {
            let target = BehaviorLabel::ALL[rng.weighted(&plus)];
            entries.push(Assignment {
                agent: members[pick],
                source,
                target,
            });
        }
    }
    entries.sort_by_key(|a| a.agent);
    AssignmentMap { entries }
}

pub fn label_counts(labels: &[BehaviorLabel]) -> [usize; 6] {
    let mut c = [0; 6];
    for l in labels {
        c[l.index()] += 1;
    }
    c
}

pub fn distribution_of(labels: &[BehaviorLabel]) -> Result<BehaviorDistribution> {
    if labels.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    BehaviorDistribution::from_weights(label_counts(labels).map(|c| c as f64))
}

/// What the loop needs besides the pool.
pub struct PevoContext<'a> {
    pub layout: &'a Layout,
    pub policy: &'a dyn Policy,
    pub classifier: &'a dyn Classifier,
    pub writer: &'a dyn PersonaWriter,
    /// Present in LLM modes; its ledger feeds per-iteration usage.
    pub gateway: Option<&'a Gateway>,
    pub config: &'a PevoConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub ids: Vec<String>,
    pub labels: Vec<BehaviorLabel>,
    pub counts: [usize; 6],
    pub p_sim: BehaviorDistribution,
    pub report: AlignmentReport,
    /// Trajectories the classifier failed on and the rule oracle labelled.
    pub classifier_fallbacks: usize,
}

fn classify_all(trajectories: &[Trajectory], classifier: &dyn Classifier) -> Result<(Vec<BehaviorLabel>, usize)> {
    let results: Vec<Result<BehaviorLabel>> = std::thread::scope(|s| {
        let handles: Vec<_> = trajectories
            .chunks(trajectories.len().div_ceil(8).max(1))
            .map(|chunk| s.spawn(move || chunk.iter().map(|t| classifier.classify(t).map(|r| r.label)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("classifier thread panicked")).collect()
    });
    let mut labels = Vec::with_capacity(results.len());
    let mut fallbacks = 0;
    for (t, r) in trajectories.iter().zip(results) {
        match r {
            Ok(l) => labels.push(l),
            Err(e @ Error::ClassifierFailure { .. }) => {
                log::warn!("{e}; using the rule oracle");
                fallbacks += 1;
                labels.push(classify_rule(t, &RuleConfig::default())?.label);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((labels, fallbacks))
}

/// One episode with `pool` on `layout`, classified and scored against the target.
pub fn evaluate_pool(
    layout: &Layout,
    pool: &[Persona],
    policy: &dyn Policy,
    classifier: &dyn Classifier,
    config: &PevoConfig,
    seed: u64,
    iteration: usize,
) -> Result<Evaluation> {
    let out = run_episode(layout, pool, policy, config.policy_mode, seed, &config.sim, None)?;
    let (labels, classifier_fallbacks) = classify_all(&out.trajectories, classifier)?;
    let p_sim = distribution_of(&labels)?;
    let report = AlignmentReport::compute(iteration, &p_sim, &config.target, labels.len(), &config.metrics)?;
    Ok(Evaluation {
        ids: pool.iter().map(|p| p.id.clone()).collect(),
        counts: label_counts(&labels),
        labels,
        p_sim,
        report,
        classifier_fallbacks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub seed: u64,
    pub p_sim: BehaviorDistribution,
    pub counts: [usize; 6],
    pub report: AlignmentReport,
    pub gaps: SignedGapVector,
    pub assignment: AssignmentMap,
    /// (agent id, label) in pool order.
    pub labels: Vec<(String, BehaviorLabel)>,
    /// Usage per model id during this iteration.
    pub usage: BTreeMap<String, UsageTotals>,
    pub rejected_rewrites: usize,
    pub classifier_fallbacks: usize,
    /// True when KL was already within tolerance and nothing was rewritten.
    pub converged: bool,
    pub wall_ms: u64,
}

impl IterationRecord {
    pub fn kl(&self) -> f64 {
        self.report.kl
    }
}

#[derive(Debug)]
pub struct IterationOutput {
    pub pool: Vec<Persona>,
    pub record: IterationRecord,
    pub evolution: Vec<EvolutionEntry>,
}

/// A failed iteration; `record` is present when the failure came after
/// classification.
#[derive(Debug)]
pub struct IterationFailure {
    pub error: Error,
    pub record: Option<IterationRecord>,
}

fn usage_by_model(entries: &[UsageEntry]) -> BTreeMap<String, UsageTotals> {
    let mut m: BTreeMap<String, UsageTotals> = BTreeMap::new();
    for e in entries {
        let t = m.entry(e.model.clone()).or_default();
        t.calls += 1;
        t.prompt_tokens += e.prompt_tokens;
        t.completion_tokens += e.completion_tokens;
    }
    m
}

/// One pass of the loop. With `stop_at` set and KL within it, nothing is
/// rewritten and the record is marked converged.
#[allow(clippy::result_large_err)]
pub fn pevo_iterate(
    ctx: &PevoContext<'_>,
    pool: &[Persona],
    iteration: usize,
    seed: u64,
    stop_at: Option<f64>,
) -> std::result::Result<IterationOutput, IterationFailure> {
    let started = Instant::now();
    let ledger_start = ctx.gateway.map_or(0, Gateway::ledger_len);
    let fail = |error: Error| IterationFailure { error, record: None };
    ctx.config.validate().map_err(fail)?;
    let eval = evaluate_pool(ctx.layout, pool, ctx.policy, ctx.classifier, ctx.config, seed, iteration).map_err(fail)?;
    let gaps = signed_gaps(&eval.p_sim, &ctx.config.target);
    let converged = stop_at.is_some_and(|eps| eval.report.kl <= eps);
    let assignment = if converged {
        AssignmentMap::default()
    } else {
        let mut rng = SimRng::new(mix_seed(seed, STREAM_ASSIGN)).derive(iteration as u64);
        select_and_assign(&eval.labels, &gaps, &mut rng)
    };
    let mut record = IterationRecord {
        iteration,
        seed,
        p_sim: eval.p_sim,
        counts: eval.counts,
        report: eval.report.clone(),
        gaps,
        assignment,
        labels: eval.ids.iter().cloned().zip(eval.labels.iter().copied()).collect(),
        usage: BTreeMap::new(),
        rejected_rewrites: 0,
        classifier_fallbacks: eval.classifier_fallbacks,
        converged,
        wall_ms: 0,
    };

    let rewrites = rewrite_assigned(ctx, pool, &record.assignment, seed, iteration);
    let mut new_pool = pool.to_vec();
    let mut evolution = Vec::new();
    for (a, r) in record.assignment.entries.iter().zip(rewrites) {
        match r {
            Ok(rw) => {
                if !rw.accepted {
                    record.rejected_rewrites += 1;
                }
                evolution.push(EvolutionEntry {
                    iteration,
                    agent: pool[a.agent].id.clone(),
                    current: a.source,
                    target: a.target,
                    mode: ctx.writer.mode(),
                    accepted: rw.accepted,
                    warning: rw.warning,
                    old: pool[a.agent].clone(),
                    new: rw.persona.clone(),
                });
                new_pool[a.agent] = rw.persona;
            }
            Err(error) => {
                record.usage = usage_by_model(&ctx.gateway.map(|g| g.ledger_since(ledger_start)).unwrap_or_default());
                record.wall_ms = started.elapsed().as_millis() as u64;
                return Err(IterationFailure {
                    error: Error::IterationAborted {
                        iteration,
                        source: Box::new(error),
                    },
                    record: Some(record),
                });
            }
        }
    }
    record.usage = usage_by_model(&ctx.gateway.map(|g| g.ledger_since(ledger_start)).unwrap_or_default());
    record.wall_ms = started.elapsed().as_millis() as u64;
    Ok(IterationOutput {
        pool: new_pool,
        record,
        evolution,
    })
}

/// Rewrites in assignment order; LLM rewrites run concurrently.
fn rewrite_assigned(
    ctx: &PevoContext<'_>,
    pool: &[Persona],
    assignment: &AssignmentMap,
    seed: u64,
    iteration: usize,
) -> Vec<Result<crate::writer::Rewrite>> {
    let base = SimRng::new(mix_seed(seed, STREAM_WRITER)).derive(iteration as u64);
    let one = |a: &Assignment| {
        let mut rng = base.derive(a.agent as u64);
        ctx.writer.rewrite(&pool[a.agent], a.source, a.target, &mut rng)
    };
    if ctx.writer.mode() == WriterMode::Trait {
        return assignment.entries.iter().map(one).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = assignment.entries.iter().map(|a| s.spawn(move || one(a))).collect();
        handles.into_iter().map(|h| h.join().expect("writer thread panicked")).collect()
    })
}

#[derive(Debug)]
pub struct OptimizeOutcome {
    pub pool: Vec<Persona>,
    pub history: Vec<IterationRecord>,
    pub evolution: Vec<EvolutionEntry>,
    /// True iff the last record's KL is within epsilon.
    pub converged: bool,
}

#[derive(Debug)]
pub struct OptimizeFailure {
    pub error: Error,
    pub history: Vec<IterationRecord>,
    pub pool: Vec<Persona>,
}

/// Iterates until KL ≤ epsilon or the iteration budget is spent.
pub fn optimize(ctx: &PevoContext<'_>, pool: &[Persona], seed: u64) -> std::result::Result<OptimizeOutcome, Box<OptimizeFailure>> {
    let mut pool = pool.to_vec();
    let mut history = Vec::new();
    let mut evolution = Vec::new();
    if let Err(error) = ctx.config.validate() {
        return Err(Box::new(OptimizeFailure { error, history, pool }));
    }
    for k in 1..=ctx.config.max_iterations {
        match pevo_iterate(ctx, &pool, k, seed, Some(ctx.config.epsilon)) {
            Ok(out) => {
                let done = out.record.converged;
                log::info!("seed {seed} iteration {k}: kl {:.4} tv {:.4}", out.record.report.kl, out.record.report.tv);
                history.push(out.record);
                evolution.extend(out.evolution);
                pool = out.pool;
                if done {
                    break;
                }
            }
            Err(f) => {
                history.extend(f.record);
                return Err(Box::new(OptimizeFailure {
                    error: f.error,
                    history,
                    pool,
                }));
            }
        }
    }
    let converged = history.last().is_some_and(|r| r.report.kl <= ctx.config.epsilon);
    Ok(OptimizeOutcome {
        pool,
        history,
        evolution,
        converged,
    })
}

/// Scores a pool on a layout with no rewriting.
pub fn transfer_evaluate(
    pool: &[Persona],
    layout: &Layout,
    policy: &dyn Policy,
    classifier: &dyn Classifier,
    config: &PevoConfig,
    seed: u64,
) -> Result<AlignmentReport> {
    Ok(evaluate_pool(layout, pool, policy, classifier, config, seed, 0)?.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use BehaviorLabel::*;

    fn gaps(pairs: &[(BehaviorLabel, f64)]) -> SignedGapVector {
        let mut g = [0.0; 6];
        for (l, v) in pairs {
            g[l.index()] = *v;
        }
        SignedGapVector::from_array(g)
    }

    #[test]
    fn zero_gaps_give_empty_map() {
        let labels = vec![Freeze; 10];
        assert!(select_and_assign(&labels, &gaps(&[]), &mut SimRng::new(1)).is_empty());
    }

    #[test]
    fn k_is_ceiling_of_gap_times_n() {
        let mut labels = vec![HideInPlace; 60];
        labels.extend(vec![Freeze; 20]);
        let g = gaps(&[(HideInPlace, -0.24), (Freeze, 0.16), (Fight, 0.08)]);
        let m = select_and_assign(&labels, &g, &mut SimRng::new(7));
        assert_eq!(m.len(), 20);
        assert!(m.is_feasible(&g));
        assert!(m.entries.iter().all(|a| labels[a.agent] == HideInPlace));
    }

    #[test]
    fn k_capped_by_class_size() {
        let mut labels = vec![Fight; 3];
        labels.extend(vec![Freeze; 7]);
        let g = gaps(&[(Fight, -0.5), (Freeze, 0.5)]);
        assert_eq!(select_and_assign(&labels, &g, &mut SimRng::new(1)).len(), 3);
    }

    #[test]
    fn exact_products_do_not_round_up() {
        let labels = vec![Freeze; 80];
        let g = gaps(&[(Freeze, -0.05), (Fight, 0.05)]);
        assert_eq!(select_and_assign(&labels, &g, &mut SimRng::new(1)).len(), 4);
    }

    #[test]
    fn config_invariants() {
        assert!(PevoConfig::default().validate().is_ok());
        assert!(PevoConfig { max_iterations: 0, ..Default::default() }.validate().is_err());
        assert!(PevoConfig { epsilon: 0.0, ..Default::default() }.validate().is_err());
        assert!(PevoConfig { step: 0.0, ..Default::default() }.validate().is_err());
        assert!(PevoConfig { policy_mode: PolicyMode::Explicit, ..Default::default() }.validate().is_err());
        assert!(PevoConfig { epsilon: f64::INFINITY, ..Default::default() }.validate().is_ok());
    }

    #[test]
    fn map_lookup() {
        let m = AssignmentMap {
            entries: vec![
                Assignment { agent: 2, source: Freeze, target: Fight },
                Assignment { agent: 5, source: Freeze, target: Fight },
            ],
        };
        assert!(m.get(5).is_some());
        assert!(m.get(3).is_none());
    }
}
