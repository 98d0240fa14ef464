use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::episode::spawn_positions;
use super::observation::Observation;
use super::policy::{ActionDecision, DecisionRequest, Policy};
use super::trait_policy::{decide_trait_policy, decision_from_plan, Intent, Planner, TraitPolicyTable};
use super::{Movement, Phase};
use crate::behavior::{BehaviorDistribution, BehaviorLabel};
use crate::layout::Layout;
use crate::persona::Traits;
use crate::rng::SimRng;

/// Per-agent directives for an explicit-enforcing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectivePlan {
    pub directives: Vec<BehaviorLabel>,
    pub counts: [usize; 6],
}

/// Split `n` agents across labels by largest-remainder quotas of `target`.
/// Hide-in-place goes to agents spawned next to free hiding spots and
/// run-following-crowd to agents in the busiest regions; the remaining
/// labels are dealt out in agent order.
pub fn assign_directives(
    layout: &Layout,
    n: usize,
    target: &BehaviorDistribution,
    config: &SimConfig,
    seed: u64,
) -> DirectivePlan {
    let counts = target.quota_counts(n);
    let spawn = spawn_positions(layout, n, config, seed);
    let mut out: Vec<Option<BehaviorLabel>> = vec![None; n];

    let mut capacity: Vec<usize> = (0..layout.region_count()).map(|r| layout.spots_in(r).len()).collect();
    let mut hip = counts[BehaviorLabel::HideInPlace.index()];
    for (i, &(region, _)) in spawn.iter().enumerate() {
        if hip == 0 {
            break;
        }
        if capacity[region] > 0 {
            capacity[region] -= 1;
            out[i] = Some(BehaviorLabel::HideInPlace);
            hip -= 1;
        }
    }

    let mut population = vec![0usize; layout.region_count()];
    for &(region, _) in &spawn {
        population[region] += 1;
    }
    let mut crowded: Vec<usize> = (0..n).filter(|&i| out[i].is_none()).collect();
    crowded.sort_by(|&a, &b| population[spawn[b].0].cmp(&population[spawn[a].0]).then(a.cmp(&b)));
    for &i in crowded.iter().take(counts[BehaviorLabel::RunFollowingCrowd.index()]) {
        out[i] = Some(BehaviorLabel::RunFollowingCrowd);
    }

    let free: Vec<usize> = (0..n).filter(|&i| out[i].is_none()).collect();
    let mut rest = free.into_iter();
    let mut remaining = counts;
    remaining[BehaviorLabel::HideInPlace.index()] = hip;
    remaining[BehaviorLabel::RunFollowingCrowd.index()] = 0;
    for label in BehaviorLabel::ALL {
        for _ in 0..remaining[label.index()] {
            if let Some(i) = rest.next() {
                out[i] = Some(label);
            }
        }
    }
    let directives: Vec<BehaviorLabel> = out.into_iter().map(|d| d.unwrap_or(BehaviorLabel::Freeze)).collect();
    let mut counts = [0usize; 6];
    for d in &directives {
        counts[d.index()] += 1;
    }
    DirectivePlan { directives, counts }
}

/// Post-incident action most consistent with `directive`; pre-incident the
/// trait policy decides.
pub fn decide_explicit(
    obs: &Observation,
    directive: BehaviorLabel,
    traits: &Traits,
    table: &TraitPolicyTable,
    layout: &Layout,
    offered: &[String],
    rng: &mut SimRng,
) -> ActionDecision {
    if obs.phase == Phase::PreIncident || offered.is_empty() {
        return decide_trait_policy(obs, traits, table, layout, offered, rng);
    }
    let Some(planner) = Planner::new(obs, layout, offered, table.exit_choice) else {
        return ActionDecision::fallback("unknown region", &obs.mood);
    };
    let (intent, plan) = match directive {
        BehaviorLabel::RunFollowingCrowd => (Intent::FollowGroup, planner.follow()),
        BehaviorLabel::HideInPlace => (Intent::HideHere, planner.hide_in_place()),
        BehaviorLabel::HideAfterRunning => (Intent::RunThenHide, planner.run_then_hide()),
        BehaviorLabel::RunIndependently => (Intent::FleeToExit, planner.flee(1.0)),
        BehaviorLabel::Freeze => (Intent::Freeze, planner.plan(Intent::Freeze, 0.0)),
        BehaviorLabel::Fight => (Intent::Fight, planner.fight()),
    };
    let movement = match intent {
        Intent::Freeze => Movement::StayStill,
        _ => Movement::Sprint,
    };
    let thought = format!("Always {}.", directive.phrase().to_lowercase());
    decision_from_plan(plan, intent, movement, layout, thought)
}

/// Explicit-enforcing policy. Agents without a directive use the trait policy.
#[derive(Debug, Clone, Default)]
pub struct ExplicitPolicy {
    pub table: TraitPolicyTable,
}

impl ExplicitPolicy {
    pub fn new(table: TraitPolicyTable) -> Self {
        Self { table }
    }
}

impl Policy for ExplicitPolicy {
    fn decide(&self, req: &DecisionRequest<'_>, rng: &mut SimRng) -> ActionDecision {
        let traits = &req.persona.traits;
        match req.directive {
            Some(d) => decide_explicit(&req.observation, d, traits, &self.table, req.layout, &req.offered, rng),
            None => decide_trait_policy(&req.observation, traits, &self.table, req.layout, &req.offered, rng),
        }
    }
}
