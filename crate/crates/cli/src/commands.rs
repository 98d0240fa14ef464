use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use peba::behavior::BehaviorLabel;
use peba::classifier::{evaluate_classifier, labels_document, ClassificationResult};
use peba::metrics::AlignmentReport;
use peba::persona::{pool_to_json, Persona};
use peba::pevo::{
    cost_report, distribution_of, optimize, rank_by_efficiency, read_history_jsonl, transfer_evaluate,
    write_history_csv, write_history_jsonl, OptimizeOutcome, PevoConfig, PevoContext,
};
use peba::sim::{assign_directives, read_trajectories_jsonl, run_episode, write_trajectories_jsonl, PolicyMode};
use peba::tfidf::tfidf_analysis;
use peba::writer::{write_evolution_jsonl, WriterMode};

use crate::config::{load_layout, load_pool, ClassifierMode, Components, RunConfig};
use crate::{Cli, CliError, Command};

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    argv: Vec<String>,
    version: &'a str,
    seeds: &'a [u64],
    config: &'a RunConfig,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
    text.push('\n');
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Runtime)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(CliError::Runtime)
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn seeds_of(cli: &Cli, cfg: &RunConfig) -> Vec<u64> {
    match (&cli.global.seed, &cli.global.seeds) {
        (Some(s), _) => vec![*s],
        (None, Some(v)) if !v.is_empty() => v.clone(),
        _ => cfg.pevo.seeds.clone(),
    }
}

fn prepare(cli: &Cli, name: &str, cfg: &RunConfig, seeds: &[u64]) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.global.out)
        .with_context(|| format!("creating {}", cli.global.out.display()))
        .map_err(CliError::Runtime)?;
    let manifest = Manifest {
        command: name,
        argv: std::env::args().collect(),
        version: env!("CARGO_PKG_VERSION"),
        seeds,
        config: cfg,
    };
    write_json(&cli.global.out.join("manifest.json"), &manifest)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.global.config.as_deref())?;
    if let Some(mode) = cli.global.mode {
        cfg.pevo.policy_mode = mode;
    }
    let seeds = seeds_of(cli, &cfg);
    if seeds.is_empty() {
        return Err(CliError::Usage("no seeds given".into()));
    }
    cfg.pevo.seeds = seeds.clone();
    match &cli.command {
        Command::Simulate {
            layout,
            personas,
            directives,
            classifier,
        } => simulate(cli, &cfg, &seeds, layout, personas, directives, *classifier),
        Command::Optimize {
            layout,
            personas,
            writer,
            classifier,
            epsilon,
            max_iterations,
            parallel,
        } => {
            if let Some(e) = epsilon {
                cfg.pevo.epsilon = *e;
            }
            if let Some(t) = max_iterations {
                cfg.pevo.max_iterations = *t;
            }
            if let Some(w) = writer {
                cfg.pevo.writer_mode = *w;
            }
            optimize_cmd(cli, &cfg, &seeds, layout, personas, *classifier, *parallel)
        }
        Command::Transfer {
            trained,
            baseline,
            retrained,
            layout,
            writer,
            classifier,
        } => {
            if let Some(w) = writer {
                cfg.pevo.writer_mode = *w;
            }
            transfer(cli, &cfg, &seeds, trained, baseline, retrained.as_deref(), layout, *classifier)
        }
        Command::Classify { trajectories, classifier } => classify(cli, &cfg, &seeds, trajectories, *classifier),
        Command::EvalClassifier { predictions, gold } => eval_classifier(cli, &cfg, &seeds, predictions, gold),
        Command::Tfidf { personas, labels, top_k } => tfidf(cli, &cfg, &seeds, personas, labels, *top_k),
        Command::CostReport { history } => cost(cli, &cfg, &seeds, history),
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    cli: &Cli,
    cfg: &RunConfig,
    seeds: &[u64],
    layout: &str,
    personas: &str,
    directives: &str,
    classifier: ClassifierMode,
) -> Result<(), CliError> {
    let mode = cfg.pevo.policy_mode;
    let layout = load_layout(layout)?;
    let pool = load_pool(personas)?;
    cfg.pevo.sim.validate().map_err(CliError::usage)?;
    let parts = Components::build(cfg, mode, classifier, WriterMode::Trait)?;
    let seed = seeds[0];
    let plan = match directives {
        "quota" if mode == PolicyMode::Explicit => Some(assign_directives(&layout, pool.len(), &cfg.pevo.target, &cfg.pevo.sim, seed)),
        "quota" | "none" => None,
        _ => return Err(CliError::Usage(format!("unknown directive scheme {directives:?}"))),
    };
    prepare(cli, "simulate", cfg, &seeds[..1])?;
    let out = run_episode(
        &layout,
        &pool,
        parts.policy.as_ref(),
        mode,
        seed,
        &cfg.pevo.sim,
        plan.as_ref().map(|p| p.directives.as_slice()),
    )
    .map_err(CliError::runtime)?;
    let mut results: Vec<ClassificationResult> = Vec::with_capacity(out.trajectories.len());
    for t in &out.trajectories {
        results.push(parts.classifier.classify(t).map_err(CliError::runtime)?);
    }
    let labels: Vec<BehaviorLabel> = results.iter().map(|r| r.label).collect();
    let p_sim = distribution_of(&labels).map_err(CliError::runtime)?;
    let report = AlignmentReport::compute(0, &p_sim, &cfg.pevo.target, labels.len(), &cfg.pevo.metrics).map_err(CliError::runtime)?;

    let dir = &cli.global.out;
    let mut w = create(&dir.join("trajectories.jsonl"))?;
    write_trajectories_jsonl(&out.trajectories, &mut w).map_err(CliError::runtime)?;
    w.flush().map_err(CliError::runtime)?;
    let ids: Vec<String> = out.trajectories.iter().map(|t| t.agent_id.clone()).collect();
    write_json(&dir.join("labels.json"), &labels_document(&ids, &results))?;
    write_json(&dir.join("report.json"), &report)?;
    write_json(&dir.join("summary.json"), &out.summary)?;
    if let Some(plan) = &plan {
        let doc: BTreeMap<&str, BehaviorLabel> = ids.iter().map(String::as_str).zip(plan.directives.iter().copied()).collect();
        write_json(&dir.join("directives.json"), &doc)?;
    }
    println!(
        "{} agents: KL {:.4}  JS {:.4}  dH {:.4}  TV {:.4}",
        labels.len(),
        report.kl,
        report.js_distance,
        report.entropy_gap,
        report.tv
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
struct MeanSd {
    mean: f64,
    sd: f64,
}

fn mean_sd(xs: &[f64]) -> MeanSd {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MeanSd { mean, sd }
}

#[derive(Debug, Serialize)]
struct ConditionRow {
    condition: String,
    kl: MeanSd,
    js: MeanSd,
    entropy_gap: MeanSd,
    tv: MeanSd,
}

fn condition_row(name: &str, reports: &[&AlignmentReport]) -> ConditionRow {
    let col = |f: fn(&AlignmentReport) -> f64| mean_sd(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
    ConditionRow {
        condition: name.to_string(),
        kl: col(|r| r.kl),
        js: col(|r| r.js_distance),
        entropy_gap: col(|r| r.entropy_gap),
        tv: col(|r| r.tv),
    }
}

fn refs(v: &[AlignmentReport]) -> Vec<&AlignmentReport> {
    v.iter().collect()
}

fn write_rows_csv(path: &Path, rows: &[ConditionRow]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let mut out = String::from("condition,kl_mean,kl_sd,js_mean,js_sd,entropy_gap_mean,entropy_gap_sd,tv_mean,tv_sd\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.condition, r.kl.mean, r.kl.sd, r.js.mean, r.js.sd, r.entropy_gap.mean, r.entropy_gap.sd, r.tv.mean, r.tv.sd
        ));
    }
    w.write_all(out.as_bytes()).map_err(CliError::runtime)?;
    w.flush().map_err(CliError::runtime)
}

#[derive(Debug, Serialize)]
struct SeedSummary {
    seed: u64,
    iterations: usize,
    converged: bool,
    initial: AlignmentReport,
    last: AlignmentReport,
}

fn run_optimize(ctx: &PevoContext<'_>, pool: &[Persona], seeds: &[u64], parallel: bool) -> Vec<(u64, Result<OptimizeOutcome, CliError>)> {
    let one = |seed: u64| {
        let r = optimize(ctx, pool, seed).map_err(|f| {
            CliError::Runtime(anyhow::anyhow!("seed {seed}: {} (after {} iterations)", f.error, f.history.len()))
        });
        (seed, r)
    };
    if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = seeds.iter().map(|&seed| s.spawn(move || one(seed))).collect();
            handles.into_iter().map(|h| h.join().expect("seed thread panicked")).collect()
        })
    } else {
        seeds.iter().map(|&s| one(s)).collect()
    }
}

fn write_seed_artifacts(dir: &Path, out: &OptimizeOutcome) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::runtime)?;
    let mut w = create(&dir.join("history.jsonl"))?;
    write_history_jsonl(&out.history, &mut w).map_err(CliError::runtime)?;
    w.flush().map_err(CliError::runtime)?;
    let mut w = create(&dir.join("curve.csv"))?;
    write_history_csv(&out.history, &mut w).map_err(CliError::runtime)?;
    let mut w = create(&dir.join("evolution.jsonl"))?;
    write_evolution_jsonl(&out.evolution, &mut w).map_err(CliError::runtime)?;
    w.flush().map_err(CliError::runtime)?;
    let pool = pool_to_json(&out.pool).map_err(CliError::runtime)?;
    std::fs::write(dir.join("pool.json"), pool + "\n").map_err(CliError::runtime)
}

fn optimize_cmd(
    cli: &Cli,
    cfg: &RunConfig,
    seeds: &[u64],
    layout: &str,
    personas: &str,
    classifier: ClassifierMode,
    parallel: bool,
) -> Result<(), CliError> {
    cfg.pevo.validate().map_err(CliError::usage)?;
    let layout = load_layout(layout)?;
    let pool = load_pool(personas)?;
    let parts = Components::build(cfg, cfg.pevo.policy_mode, classifier, cfg.pevo.writer_mode)?;
    prepare(cli, "optimize", cfg, seeds)?;
    let ctx = PevoContext {
        layout: &layout,
        policy: parts.policy.as_ref(),
        classifier: parts.classifier.as_ref(),
        writer: parts.writer.as_ref(),
        gateway: parts.gateway.as_deref(),
        config: &cfg.pevo,
    };
    let mut summaries = Vec::new();
    let mut first_error = None;
    for (seed, result) in run_optimize(&ctx, &pool, seeds, parallel) {
        match result {
            Ok(out) => {
                write_seed_artifacts(&cli.global.out.join(format!("seed_{seed}")), &out)?;
                let first = out.history.first().expect("at least one iteration");
                let last = out.history.last().expect("at least one iteration");
                println!(
                    "seed {seed}: {} iterations, KL {:.4} -> {:.4}{}",
                    out.history.len(),
                    first.report.kl,
                    last.report.kl,
                    if out.converged { " (converged)" } else { "" }
                );
                summaries.push(SeedSummary {
                    seed,
                    iterations: out.history.len(),
                    converged: out.converged,
                    initial: first.report.clone(),
                    last: last.report.clone(),
                });
            }
            Err(e) => {
                log::error!("seed {seed} failed");
                first_error.get_or_insert(e);
            }
        }
    }
    if !summaries.is_empty() {
        let initial: Vec<&AlignmentReport> = summaries.iter().map(|s| &s.initial).collect();
        let last: Vec<&AlignmentReport> = summaries.iter().map(|s| &s.last).collect();
        let rows = vec![condition_row("No Enforcing", &initial), condition_row("PEvo", &last)];
        write_rows_csv(&cli.global.out.join("summary.csv"), &rows)?;
        write_json(
            &cli.global.out.join("summary.json"),
            &serde_json::json!({"rows": rows, "seeds": summaries}),
        )?;
        for r in &rows {
            println!(
                "{:<13} KL {:.4} ± {:.4}  JS {:.4} ± {:.4}  dH {:.4} ± {:.4}  TV {:.4} ± {:.4}",
                r.condition, r.kl.mean, r.kl.sd, r.js.mean, r.js.sd, r.entropy_gap.mean, r.entropy_gap.sd, r.tv.mean, r.tv.sd
            );
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn transfer(
    cli: &Cli,
    cfg: &RunConfig,
    seeds: &[u64],
    trained: &str,
    baseline: &str,
    retrained: Option<&str>,
    layout: &str,
    classifier: ClassifierMode,
) -> Result<(), CliError> {
    let trained = load_pool(trained)?;
    let baseline = load_pool(baseline)?;
    let retrained = retrained.map(load_pool).transpose()?;
    let layout = load_layout(layout)?;
    let config = PevoConfig { ..cfg.pevo.clone() };
    config.validate().map_err(CliError::usage)?;
    let parts = Components::build(cfg, config.policy_mode, classifier, config.writer_mode)?;
    prepare(cli, "transfer", cfg, seeds)?;
    let ctx = PevoContext {
        layout: &layout,
        policy: parts.policy.as_ref(),
        classifier: parts.classifier.as_ref(),
        writer: parts.writer.as_ref(),
        gateway: parts.gateway.as_deref(),
        config: &config,
    };
    let (mut tr, mut re, mut ne) = (Vec::new(), Vec::new(), Vec::new());
    for &seed in seeds {
        let eval = |pool: &[Persona]| {
            transfer_evaluate(pool, &layout, parts.policy.as_ref(), parts.classifier.as_ref(), &config, seed).map_err(CliError::runtime)
        };
        tr.push(eval(&trained)?);
        ne.push(eval(&baseline)?);
        re.push(match &retrained {
            Some(pool) => eval(pool)?,
            None => {
                let out = optimize(&ctx, &baseline, seed)
                    .map_err(|f| CliError::Runtime(anyhow::anyhow!("retraining seed {seed}: {}", f.error)))?;
                out.history.last().expect("at least one iteration").report.clone()
            }
        });
    }
    let rows = vec![
        condition_row("Transferred", &refs(&tr)),
        condition_row("Retrained", &refs(&re)),
        condition_row("No Enforcing", &refs(&ne)),
    ];
    let ok = rows[0].kl.mean < rows[2].kl.mean;
    write_rows_csv(&cli.global.out.join("transfer.csv"), &rows)?;
    write_json(
        &cli.global.out.join("transfer.json"),
        &serde_json::json!({"rows": rows, "transferred_below_no_enforcing": ok}),
    )?;
    for r in &rows {
        println!(
            "{:<13} KL {:.4} ± {:.4}  JS {:.4}  dH {:.4}  TV {:.4}",
            r.condition, r.kl.mean, r.kl.sd, r.js.mean, r.entropy_gap.mean, r.tv.mean
        );
    }
    if ok {
        println!("transferred KL < no-enforcing KL: yes");
    } else {
        println!("transferred KL < no-enforcing KL: NO");
    }
    Ok(())
}

fn classify(cli: &Cli, cfg: &RunConfig, seeds: &[u64], path: &Path, classifier: ClassifierMode) -> Result<(), CliError> {
    let trajectories = read_trajectories_jsonl(open(path)?).map_err(CliError::usage)?;
    let parts = Components::build(cfg, PolicyMode::Trait, classifier, WriterMode::Trait)?;
    prepare(cli, "classify", cfg, seeds)?;
    let mut results = Vec::with_capacity(trajectories.len());
    for t in &trajectories {
        results.push(parts.classifier.classify(t).map_err(CliError::runtime)?);
    }
    let ids: Vec<String> = trajectories.iter().map(|t| t.agent_id.clone()).collect();
    write_json(&cli.global.out.join("labels.json"), &labels_document(&ids, &results))?;
    let labels: Vec<BehaviorLabel> = results.iter().map(|r| r.label).collect();
    if let Ok(p) = distribution_of(&labels) {
        let report = AlignmentReport::compute(0, &p, &cfg.pevo.target, labels.len(), &cfg.pevo.metrics).map_err(CliError::runtime)?;
        write_json(&cli.global.out.join("report.json"), &report)?;
        println!("{} trajectories: KL {:.4}  TV {:.4}", labels.len(), report.kl, report.tv);
    }
    Ok(())
}

fn eval_classifier(cli: &Cli, cfg: &RunConfig, seeds: &[u64], predictions: &Path, gold: &Path) -> Result<(), CliError> {
    let preds: BTreeMap<String, ClassificationResult> = read_json(predictions)?;
    let gold: BTreeMap<String, BehaviorLabel> = read_json(gold)?;
    let mut p = Vec::new();
    let mut g = Vec::new();
    for (id, label) in &gold {
        let pred = preds
            .get(id)
            .ok_or_else(|| CliError::Usage(format!("no prediction for {id}")))?;
        p.push(pred.clone());
        g.push(*label);
    }
    if preds.len() != gold.len() {
        return Err(CliError::Usage(format!("{} predictions vs {} gold labels", preds.len(), gold.len())));
    }
    let report = evaluate_classifier(&p, &g).map_err(CliError::usage)?;
    prepare(cli, "eval-classifier", cfg, seeds)?;
    write_json(&cli.global.out.join("classifier_eval.json"), &report)?;
    println!(
        "n {}  accuracy {:.4}  kappa {:.4}  mean rank {:.4}",
        report.n, report.accuracy, report.cohen_kappa, report.mean_true_label_rank
    );
    Ok(())
}

fn tfidf(cli: &Cli, cfg: &RunConfig, seeds: &[u64], personas: &str, labels: &Path, top_k: usize) -> Result<(), CliError> {
    let pool = load_pool(personas)?;
    let labels: BTreeMap<String, ClassificationResult> = read_json(labels)?;
    let pairs: Vec<(String, BehaviorLabel)> = pool
        .iter()
        .filter_map(|p| labels.get(&p.id).map(|r| (p.descriptive.joined(), r.label)))
        .collect();
    if pairs.is_empty() {
        return Err(CliError::Usage("no persona ids match the labels file".into()));
    }
    prepare(cli, "tfidf", cfg, seeds)?;
    let table = tfidf_analysis(&pairs, top_k);
    write_json(&cli.global.out.join("tfidf.json"), &table)?;
    for (label, terms) in &table {
        let top: Vec<&str> = terms.iter().take(5).map(|t| t.term.as_str()).collect();
        println!("{label}: {}", top.join(", "));
    }
    Ok(())
}

fn cost(cli: &Cli, cfg: &RunConfig, seeds: &[u64], paths: &[std::path::PathBuf]) -> Result<(), CliError> {
    let mut reports = Vec::new();
    for path in paths {
        let history = read_history_jsonl(open(path)?).map_err(CliError::usage)?;
        reports.push(cost_report(&history, &cfg.gateway.prices).map_err(CliError::usage)?);
    }
    prepare(cli, "cost-report", cfg, seeds)?;
    let order = rank_by_efficiency(&reports);
    let named: Vec<_> = paths
        .iter()
        .zip(&reports)
        .map(|(p, r)| serde_json::json!({"history": p.display().to_string(), "report": r}))
        .collect();
    write_json(
        &cli.global.out.join("cost.json"),
        &serde_json::json!({"reports": named, "efficiency_order": order}),
    )?;
    let mut w = create(&cli.global.out.join("cost.csv"))?;
    let mut text = String::from("history,iteration,prompt_tokens,completion_tokens,calls,cost_usd,kl\n");
    for (p, r) in paths.iter().zip(&reports) {
        for row in &r.rows {
            text.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.display(),
                row.iteration,
                row.prompt_tokens,
                row.completion_tokens,
                row.calls,
                row.cost_usd,
                row.kl
            ));
        }
    }
    w.write_all(text.as_bytes()).map_err(CliError::runtime)?;
    w.flush().map_err(CliError::runtime)?;
    for (p, r) in paths.iter().zip(&reports) {
        let eff = r.kl_per_dollar.map_or("n/a".to_string(), |k| format!("{k:.4}"));
        println!(
            "{}: {} calls, {} prompt + {} completion tokens, ${:.4}, KL drop {:.4}, KL/$ {eff}",
            p.display(),
            r.totals.calls,
            r.totals.prompt_tokens,
            r.totals.completion_tokens,
            r.total_cost_usd,
            r.kl_drop
        );
    }
    Ok(())
}
