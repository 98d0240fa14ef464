//! Acceptance criteria A1 to A9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use peba::classifier::{classify_rule, evaluate_classifier, ClassificationResult, RuleClassifier, RuleConfig};
use peba::layout::Layout;
use peba::llm::{CacheMode, Gateway, ReplayCache};
use peba::metrics::{entropy, js_distance, kl_divergence, signed_gaps, tv_distance, SignedGapVector};
use peba::persona::{base_pool, Persona, Traits};
use peba::pevo::{distribution_of, optimize, select_and_assign, transfer_evaluate, OptimizeOutcome, PevoConfig, PevoContext};
use peba::rng::SimRng;
use peba::classifier::Classifier;
use peba::sim::{assign_directives, run_episode, ExplicitPolicy, PolicyMode, SimConfig, TraitPolicy, TraitPolicyTable};
use peba::writer::{rewrite_trait, ArchetypeTable, LlmWriter, PersonaWriter, TraitWriter};
use peba::{BehaviorDistribution, BehaviorLabel};

use common::{audited_episode, check_identity, fixture, fuzz_run, fuzzed_reply, scripted_gateway, test_config, trajectories};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn oracle_kl(p: &[f64; 6], q: &[f64; 6], a: f64) -> f64 {
    let t = 1.0 + 6.0 * a;
    (0..6)
        .map(|i| ((p[i] + a) / t, (q[i] + a) / t))
        .filter(|(x, _)| *x > 0.0)
        .map(|(x, y)| x * (x / y).ln())
        .sum()
}

fn oracle_js(p: &[f64; 6], q: &[f64; 6]) -> f64 {
    let mut s = 0.0;
    for i in 0..6 {
        let m = (p[i] + q[i]) / 2.0;
        for x in [p[i], q[i]] {
            if x > 0.0 {
                s += 0.5 * x * (x / m).ln();
            }
        }
    }
    s.max(0.0).sqrt()
}

fn oracle_h(p: &[f64; 6]) -> f64 {
    -p.iter().filter(|x| **x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

fn random_dist(rng: &mut SimRng) -> BehaviorDistribution {
    let mut w = [0.0; 6];
    for x in &mut w {
        // Some exact zeros so support mismatches are exercised.
        *x = if rng.chance(0.15) { 0.0 } else { rng.unit() };
    }
    if w.iter().sum::<f64>() == 0.0 {
        w[0] = 1.0;
    }
    BehaviorDistribution::from_weights(w).unwrap()
}

fn a1() -> Outcome {
    let start = Instant::now();
    let mut rng = SimRng::new(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (p, q) = (random_dist(&mut rng), random_dist(&mut rng));
        let n = 1 + rng.index(200);
        let a = 1.0 / (10.0 * n as f64);
        let (pa, qa) = (p.as_array(), q.as_array());
        let tv_o = 0.5 * (0..6).map(|i| (pa[i] - qa[i]).abs()).sum::<f64>();
        let diffs = [
            kl_divergence(&p, &q, a).map_err(|e| e.to_string())? - oracle_kl(pa, qa, a),
            js_distance(&p, &q) - oracle_js(pa, qa),
            tv_distance(&p, &q) - tv_o,
            entropy(&p) - oracle_h(pa),
        ];
        worst = diffs.iter().fold(worst, |m, d| m.max(d.abs()));
        for d in [p, q] {
            ensure(kl_divergence(&d, &d, a).unwrap() == 0.0 && js_distance(&d, &d) == 0.0 && tv_distance(&d, &d) == 0.0, || {
                "identity pair not zero".into()
            })?;
        }
    }
    ensure(worst <= 1e-9, || format!("max oracle deviation {worst:e}"))?;
    let e = BehaviorDistribution::expert_reference();
    let kl = kl_divergence(&BehaviorDistribution::uniform(), &e, 0.0).unwrap();
    ensure((kl - 0.0888).abs() <= 1e-3, || format!("uniform vs expert KL {kl}"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.2}s"))?;
    Ok(format!("max deviation {worst:.1e}, uniform KL {kl:.4}, {secs:.3}s"))
}

fn a2() -> Outcome {
    let start = Instant::now();
    let mut labels = vec![BehaviorLabel::HideInPlace; 60];
    labels.extend(vec![BehaviorLabel::Freeze; 20]);
    let p_sim = distribution_of(&labels).unwrap();
    let mut g = [0.0; 6];
    g[BehaviorLabel::HideInPlace.index()] = -0.24;
    g[BehaviorLabel::Freeze.index()] = 0.16;
    g[BehaviorLabel::Fight.index()] = 0.08;
    let gaps = SignedGapVector::from_array(g);
    let mut rng = SimRng::new(77);
    let (mut freeze, mut fight) = (0usize, 0usize);
    for _ in 0..10_000 {
        let m = select_and_assign(&labels, &gaps, &mut rng);
        ensure(m.len() == 20, || format!("k = {}", m.len()))?;
        ensure(m.is_feasible(&gaps), || "infeasible map".into())?;
        ensure(m.entries.iter().all(|a| labels[a.agent] == BehaviorLabel::HideInPlace), || "non-HIP source".into())?;
        for a in &m.entries {
            match a.target {
                BehaviorLabel::Freeze => freeze += 1,
                BehaviorLabel::Fight => fight += 1,
                t => return Err(format!("target {t} has no positive gap")),
            }
        }
    }
    let total = (freeze + fight) as f64;
    let (pf, pg) = (freeze as f64 / total, fight as f64 / total);
    ensure((pf - 2.0 / 3.0).abs() <= 0.02 && (pg - 1.0 / 3.0).abs() <= 0.02, || format!("targets ({pf:.3}, {pg:.3})"))?;
    // The same selection driven by real distributions.
    let target = BehaviorDistribution::new([0.0, 0.60, 0.0, 0.0, 0.40, 0.0]).unwrap();
    let real = select_and_assign(&labels, &signed_gaps(&p_sim, &target), &mut rng);
    ensure(real.len() == 12, || format!("k from distributions = {}", real.len()))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2}s"))?;
    Ok(format!("k = 20, targets ({pf:.3}, {pg:.3}), {secs:.2}s"))
}

struct Runs {
    school: Vec<OptimizeOutcome>,
    seconds: Vec<f64>,
}

fn trait_ctx<'a>(
    layout: &'a Layout,
    policy: &'a TraitPolicy,
    classifier: &'a RuleClassifier,
    writer: &'a TraitWriter,
    config: &'a PevoConfig,
) -> PevoContext<'a> {
    PevoContext {
        layout,
        policy,
        classifier,
        writer,
        gateway: None,
        config,
    }
}

/// One optimize run per seed, with its wall time in seconds.
fn optimize_all(layout: &Layout, pool: &[Persona]) -> (Vec<OptimizeOutcome>, Vec<f64>) {
    let (policy, classifier, writer) = (TraitPolicy::default(), RuleClassifier::default(), TraitWriter::default());
    let config = PevoConfig::default();
    let ctx = trait_ctx(layout, &policy, &classifier, &writer, &config);
    SEEDS
        .iter()
        .map(|&s| {
            let start = Instant::now();
            let out = optimize(&ctx, pool, s).expect("optimize");
            (out, start.elapsed().as_secs_f64())
        })
        .unzip()
}

fn a3(runs: &Runs) -> Outcome {
    let mut ok = 0;
    let mut parts = Vec::new();
    for (seed, out) in SEEDS.iter().zip(&runs.school) {
        let first = out.history[0].report.kl;
        ensure(first >= 1.0, || format!("seed {seed}: no-enforcing KL {first:.3} < 1"))?;
        let last = out.history.last().unwrap();
        let hit = out.history.len() <= 15 && last.report.kl <= 0.1 && last.report.tv <= 0.15;
        ok += usize::from(hit);
        parts.push(format!("s{seed} {first:.2}->{:.3}/tv {:.3} in {}", last.report.kl, last.report.tv, out.history.len()));
    }
    ensure(ok >= 4, || format!("{ok}/5 seeds aligned: {}", parts.join(", ")))?;
    let slowest = runs.seconds.iter().copied().fold(0.0, f64::max);
    ensure(slowest < 60.0, || format!("slowest seed took {slowest:.1}s"))?;
    Ok(format!("{ok}/5 seeds, slowest {slowest:.2}s: {}", parts.join(", ")))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn a4(runs: &Runs) -> Outcome {
    let horizon = PevoConfig::default().max_iterations;
    let kl_at = |out: &OptimizeOutcome, k: usize| out.history[(k - 1).min(out.history.len() - 1)].report.kl;
    let med: Vec<f64> = (1..=horizon).map(|k| median(runs.school.iter().map(|o| kl_at(o, k)).collect())).collect();
    for k in 2..=horizon - 2 {
        let (a, b) = (med[k - 1], med[k + 1]);
        ensure(b <= a + 1e-12, || format!("median KL rose from {a:.4} at {k} to {b:.4} at {}", k + 2))?;
    }
    Ok(format!("median KL by iteration {:.3} {:.3} {:.3} {:.3}", med[0], med[1], med[2], med[3]))
}

fn a5(runs: &Runs) -> Outcome {
    let office = Layout::office();
    let (policy, classifier) = (TraitPolicy::default(), RuleClassifier::default());
    let config = PevoConfig::default();
    let (retrained, _) = optimize_all(&office, &base_pool());
    let (mut t, mut b, mut r) = (0.0, 0.0, 0.0);
    for ((&seed, trained), re) in SEEDS.iter().zip(&runs.school).zip(&retrained) {
        t += transfer_evaluate(&trained.pool, &office, &policy, &classifier, &config, seed).unwrap().kl;
        b += transfer_evaluate(&base_pool(), &office, &policy, &classifier, &config, seed).unwrap().kl;
        r += transfer_evaluate(&re.pool, &office, &policy, &classifier, &config, seed).unwrap().kl;
    }
    let n = SEEDS.len() as f64;
    let (t, b, r) = (t / n, b / n, r / n);
    ensure(t <= 0.5 * b, || format!("transferred {t:.3} > half of no-enforcing {b:.3}"))?;
    ensure(r <= t + 0.05, || format!("retrained {r:.3} > transferred {t:.3} + 0.05"))?;
    Ok(format!("office KL: no-enforcing {b:.3}, transferred {t:.3}, retrained {r:.3}"))
}

fn a6() -> Outcome {
    let gold: BTreeMap<String, BehaviorLabel> =
        serde_json::from_str(&std::fs::read_to_string(fixture("archetypes_gold.json")).unwrap()).unwrap();
    let mut right = 0;
    for t in trajectories("archetypes.jsonl") {
        let got = classify_rule(&t, &RuleConfig::default()).map_err(|e| e.to_string())?.label;
        ensure(got == gold[&t.agent_id], || format!("{} labelled {got}", t.agent_id))?;
        right += 1;
    }
    let preds: BTreeMap<String, ClassificationResult> =
        serde_json::from_str(&std::fs::read_to_string(fixture("rank_predictions.json")).unwrap()).unwrap();
    let rank_gold: BTreeMap<String, BehaviorLabel> =
        serde_json::from_str(&std::fs::read_to_string(fixture("rank_gold.json")).unwrap()).unwrap();
    let (p, g): (Vec<_>, Vec<_>) = rank_gold.iter().map(|(id, l)| (preds[id].clone(), *l)).unzip();
    let eval = evaluate_classifier(&p, &g).map_err(|e| e.to_string())?;
    ensure((eval.mean_true_label_rank - 1.11).abs() <= 0.005, || format!("mean rank {}", eval.mean_true_label_rank))?;
    Ok(format!("archetypes {right}/6, mean true-label rank {:.4}", eval.mean_true_label_rank))
}

fn a7() -> Outcome {
    let start = Instant::now();
    let pool = base_pool();
    let policy = TraitPolicy::default();
    let config = SimConfig::default();
    let layouts = [Layout::school(), Layout::office()];
    for seed in 1..=20u64 {
        let layout = &layouts[(seed % 2) as usize];
        let a = audited_episode(layout, &pool, &policy, seed, &config).map_err(|e| format!("seed {seed}: {e}"))?;
        let b = audited_episode(layout, &pool, &policy, seed, &config).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(a == b, || format!("seed {seed}: logs differ between runs"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("20 episodes run twice in {secs:.2}s: deterministic, speed, observability, population and ammunition checks hold"))
}

fn a8() -> Outcome {
    let rounds = 13;
    let gw = Arc::new(scripted_gateway(|_, body| fuzzed_reply(body)).with_cache(ReplayCache::in_memory(CacheMode::Record)));
    let recorded = fuzz_run(&LlmWriter::new(gw.clone()), rounds);
    check_identity(&recorded).map_err(|e| format!("record: {e}"))?;
    let replay = Arc::new(Gateway::replay_only(test_config(), gw.cache().unwrap().snapshot(CacheMode::Replay)).unwrap());
    let replayed = fuzz_run(&LlmWriter::new(replay), rounds);
    check_identity(&replayed).map_err(|e| format!("replay: {e}"))?;
    ensure(recorded == replayed, || "replay differs from record".into())?;
    let rejected = recorded.iter().filter(|(_, r)| !r.accepted).count();

    let table = ArchetypeTable::default();
    let mut rng = SimRng::new(8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut p = base_pool().remove(rng.index(80));
        p.traits = Traits::from_array([rng.unit(), rng.unit(), rng.unit(), rng.unit(), rng.unit()]);
        let label = BehaviorLabel::ALL[rng.index(6)];
        let step = rng.range(0.05, 1.0);
        let out = rewrite_trait(&p, label, step, &table).unwrap();
        ensure(out.identity == p.identity && out.descriptive == p.descriptive, || "trait rewrite touched text".into())?;
        let (old, new, anchor) = (p.traits.to_array(), out.traits.to_array(), table.get(label).to_array());
        for i in 0..5 {
            worst = worst.max(((new[i] - anchor[i]) - (1.0 - step) * (old[i] - anchor[i])).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("contraction error {worst:e}"))?;

    let persona = base_pool().remove(0);
    let deny = Arc::new(scripted_gateway(|_, _| r#"{"backstory": "They always fight."}"#.to_string()));
    let rw = LlmWriter::new(deny)
        .rewrite(&persona, BehaviorLabel::Freeze, BehaviorLabel::Fight, &mut SimRng::new(0))
        .map_err(|e| e.to_string())?;
    ensure(!rw.accepted && rw.persona == persona, || "denylisted rewrite accepted".into())?;
    ensure(rw.warning.as_deref().is_some_and(|w| w.contains("always fight")), || format!("warning {:?}", rw.warning))?;
    Ok(format!("{} fuzzed rewrites ({rejected} rejected) identical on replay, contraction error {worst:.1e}, denylist fired", recorded.len()))
}

fn a9() -> Outcome {
    let layout = Layout::school();
    let pool = base_pool();
    let config = PevoConfig::default();
    let policy = ExplicitPolicy::new(TraitPolicyTable::default());
    let classifier = RuleClassifier::default();
    let mut parts = Vec::new();
    for seed in SEEDS {
        let plan = assign_directives(&layout, pool.len(), &config.target, &config.sim, seed);
        let out = run_episode(&layout, &pool, &policy, PolicyMode::Explicit, seed, &config.sim, Some(&plan.directives))
            .map_err(|e| e.to_string())?;
        let labels: Vec<_> = out
            .trajectories
            .iter()
            .map(|t| classifier.classify(t).map(|r| r.label))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let tv = tv_distance(&distribution_of(&labels).unwrap(), &config.target);
        ensure(tv <= 0.10, || format!("seed {seed}: TV {tv:.4}"))?;
        parts.push(format!("{tv:.3}"));
    }
    Ok(format!("TV by seed {}", parts.join(" ")))
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(detail) => {
            println!("{name} PASS ({secs:.2}s) {detail}");
            true
        }
        Err(detail) => {
            println!("{name} FAIL ({secs:.2}s) {detail}");
            false
        }
    }
}

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let (school, seconds) = optimize_all(&Layout::school(), &base_pool());
    let runs = Runs { school, seconds };
    let results = [
        run("A1", a1),
        run("A2", a2),
        run("A3", || a3(&runs)),
        run("A4", || a4(&runs)),
        run("A5", || a5(&runs)),
        run("A6", a6),
        run("A7", a7),
        run("A8", a8),
        run("A9", a9),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
