use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::IterationRecord;
use crate::error::{Error, Result};
use crate::llm::{Price, UsageTotals};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub iteration: usize,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub calls: u64,
    pub cost_usd: f64,
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub rows: Vec<CostRow>,
    pub totals: UsageTotals,
    pub total_cost_usd: f64,
    /// First-iteration KL minus last-iteration KL.
    pub kl_drop: f64,
    /// `None` when nothing was spent.
    pub kl_per_dollar: Option<f64>,
    pub prompt_share: f64,
}

pub fn cost_report(history: &[IterationRecord], prices: &BTreeMap<String, Price>) -> Result<CostReport> {
    let (first, last) = match (history.first(), history.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Config("cost report needs a non-empty history".into())),
    };
    let mut rows = Vec::with_capacity(history.len());
    let mut totals = UsageTotals::default();
    let mut total_cost = 0.0;
    for r in history {
        let mut t = UsageTotals::default();
        let mut cost = 0.0;
        for (model, u) in &r.usage {
            let p = prices.get(model).ok_or_else(|| Error::MissingPrice(model.clone()))?;
            cost += (u.prompt_tokens as f64 * p.prompt + u.completion_tokens as f64 * p.completion) / 1e6;
            t.add(u);
        }
        totals.add(&t);
        total_cost += cost;
        rows.push(CostRow {
            iteration: r.iteration,
            prompt_tokens: t.prompt_tokens,
            completion_tokens: t.completion_tokens,
            calls: t.calls,
            cost_usd: cost,
            kl: r.report.kl,
        });
    }
    let kl_drop = first.report.kl - last.report.kl;
    let tokens = totals.prompt_tokens + totals.completion_tokens;
    Ok(CostReport {
        rows,
        totals,
        total_cost_usd: total_cost,
        kl_drop,
        kl_per_dollar: (total_cost > 0.0).then(|| kl_drop / total_cost),
        prompt_share: if tokens == 0 { 0.0 } else { totals.prompt_tokens as f64 / tokens as f64 },
    })
}

/// Indices of `reports` from most to least KL reduction per dollar; reports
/// without spend go last.
pub fn rank_by_efficiency(reports: &[CostReport]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..reports.len()).collect();
    idx.sort_by(|&a, &b| {
        let ka = reports[a].kl_per_dollar.unwrap_or(f64::NEG_INFINITY);
        let kb = reports[b].kl_per_dollar.unwrap_or(f64::NEG_INFINITY);
        kb.total_cmp(&ka).then(a.cmp(&b))
    });
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::BehaviorDistribution;
    use crate::metrics::{signed_gaps, AlignmentReport, MetricsOptions};
    use crate::pevo::AssignmentMap;

    fn record(iteration: usize, p: BehaviorDistribution, usage: &[(&str, u64, u64)]) -> IterationRecord {
        let target = BehaviorDistribution::expert_reference();
        IterationRecord {
            iteration,
            seed: 1,
            p_sim: p,
            counts: [0; 6],
            report: AlignmentReport::compute(iteration, &p, &target, 80, &MetricsOptions::default()).unwrap(),
            gaps: signed_gaps(&p, &target),
            assignment: AssignmentMap::default(),
            labels: vec![],
            usage: usage
                .iter()
                .map(|(m, p, c)| (m.to_string(), UsageTotals { calls: 1, prompt_tokens: *p, completion_tokens: *c }))
                .collect(),
            rejected_rewrites: 0,
            classifier_fallbacks: 0,
            converged: false,
            wall_ms: 0,
        }
    }

    fn prices() -> BTreeMap<String, Price> {
        BTreeMap::from([("m".to_string(), Price { prompt: 0.15, completion: 0.6 })])
    }

    #[test]
    fn no_calls_no_cost() {
        let h = [record(1, BehaviorDistribution::uniform(), &[]), record(2, BehaviorDistribution::expert_reference(), &[])];
        let r = cost_report(&h, &prices()).unwrap();
        assert_eq!(r.total_cost_usd, 0.0);
        assert_eq!(r.totals.prompt_tokens + r.totals.completion_tokens, 0);
        assert_eq!(r.kl_per_dollar, None);
    }

    #[test]
    fn linear_cost() {
        let h = [record(1, BehaviorDistribution::uniform(), &[("m", 1_000_000, 10_000)])];
        let r = cost_report(&h, &prices()).unwrap();
        assert!((r.total_cost_usd - (0.15 + 0.006)).abs() < 1e-12);
        assert_eq!(r.rows[0].prompt_tokens, 1_000_000);
    }

    #[test]
    fn missing_price_is_an_error() {
        let h = [record(1, BehaviorDistribution::uniform(), &[("other", 1, 1)])];
        assert!(matches!(cost_report(&h, &prices()), Err(Error::MissingPrice(m)) if m == "other"));
        assert!(cost_report(&[], &prices()).is_err());
    }

    #[test]
    fn efficiency_ranks_by_kl_drop_per_dollar() {
        let spend = [("m", 1_000_000, 0)];
        let small = BehaviorDistribution::new([0.25, 0.25, 0.12, 0.12, 0.14, 0.12]).unwrap();
        let a = cost_report(
            &[record(1, BehaviorDistribution::uniform(), &spend), record(2, small, &[])],
            &prices(),
        )
        .unwrap();
        let b = cost_report(
            &[record(1, BehaviorDistribution::uniform(), &spend), record(2, BehaviorDistribution::expert_reference(), &[])],
            &prices(),
        )
        .unwrap();
        assert_eq!(a.total_cost_usd, b.total_cost_usd);
        assert!(b.kl_drop > a.kl_drop);
        assert_eq!(rank_by_efficiency(&[a, b]), vec![1, 0]);
    }
}
