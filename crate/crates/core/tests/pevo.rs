use proptest::prelude::*;

use peba::classifier::RuleClassifier;
use peba::layout::Layout;
use peba::metrics::SignedGapVector;
use peba::persona::base_pool;
use peba::pevo::{optimize, pevo_iterate, select_and_assign, transfer_evaluate, PevoConfig, PevoContext};
use peba::rng::SimRng;
use peba::sim::TraitPolicy;
use peba::writer::{ArchetypeTable, TraitWriter};
use peba::BehaviorLabel;

struct Fixture {
    layout: Layout,
    policy: TraitPolicy,
    classifier: RuleClassifier,
    writer: TraitWriter,
}

impl Fixture {
    fn new() -> Self {
        Self {
            layout: Layout::school(),
            policy: TraitPolicy::default(),
            classifier: RuleClassifier::default(),
            writer: TraitWriter::default(),
        }
    }

    fn ctx<'a>(&'a self, config: &'a PevoConfig) -> PevoContext<'a> {
        PevoContext {
            layout: &self.layout,
            policy: &self.policy,
            classifier: &self.classifier,
            writer: &self.writer,
            gateway: None,
            config,
        }
    }
}

fn labels_and_gaps() -> impl Strategy<Value = (Vec<BehaviorLabel>, SignedGapVector)> {
    (prop::collection::vec(0usize..6, 1..120), prop::array::uniform6(0u32..10)).prop_filter_map("no gap", |(idx, w)| {
        let labels: Vec<_> = idx.iter().map(|i| BehaviorLabel::ALL[*i]).collect();
        let p_sim = peba::pevo::distribution_of(&labels).ok()?;
        let target = peba::BehaviorDistribution::from_weights(w.map(f64::from)).ok()?;
        Some((labels, peba::metrics::signed_gaps(&p_sim, &target)))
    })
}

proptest! {
    #[test]
    fn assignment_is_feasible_with_expected_counts((labels, gaps) in labels_and_gaps(), seed in any::<u64>()) {
        let m = select_and_assign(&labels, &gaps, &mut SimRng::new(seed));
        prop_assert!(m.is_feasible(&gaps));
        let n = labels.len() as f64;
        let any_positive = gaps.positive().iter().any(|g| *g > 0.0);
        for b in BehaviorLabel::ALL {
            let class = labels.iter().filter(|l| **l == b).count();
            let chosen = m.entries.iter().filter(|a| a.source == b).count();
            let g = gaps.get(b);
            let want = if g < 0.0 && any_positive {
                ((-g * n - 1e-9).ceil() as usize).min(class)
            } else {
                0
            };
            prop_assert_eq!(chosen, want, "class {}", b);
        }
        for a in &m.entries {
            prop_assert_eq!(labels[a.agent], a.source);
        }
        let mut agents: Vec<_> = m.entries.iter().map(|a| a.agent).collect();
        agents.dedup();
        prop_assert_eq!(agents.len(), m.len());
    }
}

#[test]
fn targets_follow_positive_gap_proportions() {
    let labels = vec![BehaviorLabel::HideInPlace; 60];
    let mut g = [0.0; 6];
    g[BehaviorLabel::HideInPlace.index()] = -0.24;
    g[BehaviorLabel::Freeze.index()] = 0.16;
    g[BehaviorLabel::Fight.index()] = 0.08;
    let gaps = SignedGapVector::from_array(g);
    let mut rng = SimRng::new(11);
    let (mut freeze, mut total) = (0usize, 0usize);
    for _ in 0..2000 {
        let m = select_and_assign(&labels, &gaps, &mut rng);
        assert_eq!(m.len(), 15);
        for a in &m.entries {
            total += 1;
            freeze += usize::from(a.target == BehaviorLabel::Freeze);
        }
    }
    assert!((freeze as f64 / total as f64 - 2.0 / 3.0).abs() < 0.02);
}

#[test]
fn all_hiding_pool_rewrites_only_hiders() {
    let fx = Fixture::new();
    let anchor = ArchetypeTable::default().get(BehaviorLabel::HideInPlace);
    let pool: Vec<_> = base_pool()
        .into_iter()
        .map(|mut p| {
            p.traits = anchor;
            p
        })
        .collect();
    let config = PevoConfig::default();
    let out = pevo_iterate(&fx.ctx(&config), &pool, 1, 1, None).unwrap();
    let r = &out.record;
    let hip = r.counts[BehaviorLabel::HideInPlace.index()];
    assert!(hip * 2 > pool.len(), "counts {:?}", r.counts);
    assert!(r.assignment.is_feasible(&r.gaps));
    assert!(!r.assignment.is_empty());
    for a in &r.assignment.entries {
        assert!(r.gaps.get(a.source) < 0.0);
        assert_ne!(out.pool[a.agent].traits, pool[a.agent].traits);
    }
    for (i, p) in out.pool.iter().enumerate() {
        if r.assignment.get(i).is_none() {
            assert_eq!(p, &pool[i]);
        }
    }
}

#[test]
fn optimize_is_deterministic() {
    let fx = Fixture::new();
    let config = PevoConfig { max_iterations: 3, ..Default::default() };
    let a = optimize(&fx.ctx(&config), &base_pool(), 4).unwrap();
    let b = optimize(&fx.ctx(&config), &base_pool(), 4).unwrap();
    let strip = |h: &[peba::pevo::IterationRecord]| {
        h.iter()
            .cloned()
            .map(|mut r| {
                r.wall_ms = 0;
                r
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a.history), strip(&b.history));
    assert_eq!(a.pool, b.pool);
}

#[test]
fn infinite_tolerance_stops_after_one_iteration() {
    let fx = Fixture::new();
    let config = PevoConfig { epsilon: f64::INFINITY, ..Default::default() };
    let out = optimize(&fx.ctx(&config), &base_pool(), 1).unwrap();
    assert_eq!(out.history.len(), 1);
    assert!(out.converged);
    assert!(out.history[0].assignment.is_empty());
    assert_eq!(out.pool, base_pool());
}

#[test]
fn converged_pool_is_a_fixed_point_and_transfers_to_its_own_layout() {
    let fx = Fixture::new();
    let config = PevoConfig::default();
    let seed = 2;
    let out = optimize(&fx.ctx(&config), &base_pool(), seed).unwrap();
    assert!(out.converged, "kl {}", out.history.last().unwrap().kl());
    let again = pevo_iterate(&fx.ctx(&config), &out.pool, 99, seed, Some(config.epsilon)).unwrap();
    assert!(again.record.converged);
    assert!(again.record.assignment.is_empty());
    assert_eq!(again.pool, out.pool);
    let r = transfer_evaluate(&out.pool, &fx.layout, &fx.policy, &fx.classifier, &config, seed).unwrap();
    assert!(r.kl <= config.epsilon + 0.05, "own-layout kl {}", r.kl);
    assert_eq!(r.kl, out.history.last().unwrap().kl());
}

#[test]
fn history_kl_drops_below_tolerance() {
    let fx = Fixture::new();
    let config = PevoConfig::default();
    let out = optimize(&fx.ctx(&config), &base_pool(), 1).unwrap();
    let first = out.history.first().unwrap().kl();
    let last = out.history.last().unwrap().kl();
    assert!(first >= 1.0, "no-enforcing kl {first}");
    assert!(last <= config.epsilon);
    for (i, r) in out.history.iter().enumerate() {
        assert_eq!(r.iteration, i + 1);
        assert_eq!(r.seed, 1);
    }
}
