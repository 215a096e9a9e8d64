use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use mechrxn::chem::{parse_smiles, write_smiles, Molecule};
use mechrxn::dataio::{
    build_mixed, dataset_stats, load_dataset, save_dataset, split, top_n_accuracy, Dataset, SplitSpec,
};
use mechrxn::featurize::{reaction_fingerprint, write_fingerprint_dump};
use mechrxn::hybrid::{hybrid_predict, EchoPredictor, Predictor, ProcessAdapter, DEFAULT_DEADLINE};
use mechrxn::nn::MlpConfig;
use mechrxn::featurize::ATOM_FP_LEN;
use mechrxn::pathway::{
    eval_benchmark, read_benchmark, search, select_pathway, EnsemblePredictor, PredictorKind, SearchConfig,
    Selection, StepPredictor, TablePredictor, TargetSpec, TwoStepPredictor, DEFAULT_BRANCHING, DEFAULT_MAX_DEPTH,
    DEFAULT_TIME_BUDGET,
};
use mechrxn::ptgen::{read_inventory_file, sample_for_training, write_sharded, Cutoffs, Generator, PtgenConfig};
use mechrxn::twostep::{eval_reactive_sites, train_two_step, two_step_predict, TwoStepModels, TwoStepTrainConfig};

use crate::config::Config;
use crate::manifest::RunManifest;
use crate::serve::serve_echo;
use crate::{
    BenchmarkArgs, Cli, Command, EvalCommand, FingerprintArgs, Global, Mode, PathwayArgs, PathwayPredictor,
    PredictArgs, Profile, PtgenArgs, SelectionArg, SitesArgs, StatsArgs, TopnArgs, TrainArgs, EXIT_NONE,
};

const DEFAULT_K: usize = 10;
const DEFAULT_K_SITES: usize = 5;
const DEFAULT_SHARD_SIZE: usize = 100_000;

struct Ctx {
    global: Global,
    config: Config,
}

impl Ctx {
    fn jobs(&self) -> usize {
        self.global
            .jobs
            .or(self.config.jobs)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
            .max(1)
    }

    fn model_dir(&self) -> Option<PathBuf> {
        self.global.model_dir.clone().or_else(|| self.config.model_dir.clone())
    }

    fn models(&self) -> Result<TwoStepModels> {
        let dir = self
            .model_dir()
            .ok_or_else(|| anyhow!("no model directory: pass --model-dir or set MECHRXN_MODEL_DIR"))?;
        TwoStepModels::load(&dir).with_context(|| format!("loading models from {}", dir.display()))
    }

    /// Models when a directory is configured; a warning otherwise.
    fn optional_models(&self) -> Result<Option<TwoStepModels>> {
        if self.model_dir().is_none() {
            log::warn!("no two-step models configured; alchemical candidates are dropped, not replaced");
            return Ok(None);
        }
        self.models().map(Some)
    }

    fn print<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) {
        if self.global.json {
            println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
        } else {
            print!("{}", text());
        }
    }

    fn finish(&self, manifest: &RunManifest) -> Result<()> {
        if let Some(p) = &self.global.manifest {
            manifest.write(p)?;
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    let config = Config::load(cli.global.config.as_deref())?;
    let ctx = Ctx {
        global: cli.global,
        config,
    };
    match cli.command {
        Command::Predict(a) => cmd_predict(&ctx, a),
        Command::Pathway(a) => cmd_pathway(&ctx, a),
        Command::Ptgen(a) => cmd_ptgen(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Eval(EvalCommand::Topn(a)) => cmd_eval_topn(&ctx, a),
        Command::Eval(EvalCommand::Sites(a)) => cmd_eval_sites(&ctx, a),
        Command::Eval(EvalCommand::Benchmark(a)) => cmd_eval_benchmark(&ctx, a),
        Command::Stats(a) => cmd_stats(&ctx, a),
        Command::Fingerprints(a) => cmd_fingerprints(&ctx, a),
        Command::ServeEcho => serve_echo().map(|_| 0),
    }
}

fn parse_reactants(text: &str) -> Result<Molecule> {
    parse_smiles(text).with_context(|| format!("invalid reactants '{text}'"))
}

fn parse_duration(text: &str) -> Result<Duration> {
    humantime::parse_duration(text).with_context(|| format!("invalid duration '{text}'"))
}

fn parse_ns(text: &str) -> Result<Vec<usize>> {
    let ns: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("invalid N '{s}'")))
        .collect::<Result<_>>()?;
    if ns.is_empty() || ns.contains(&0) {
        bail!("N values must be positive");
    }
    Ok(ns)
}

fn load(path: &Path) -> Result<Dataset> {
    let (d, report) = load_dataset(path).with_context(|| format!("loading {}", path.display()))?;
    if !report.errors.is_empty() {
        log::warn!("{}: {} malformed line(s) skipped", path.display(), report.errors.len());
    }
    Ok(d)
}

/// Adapters from `--adapter` flags, else from the config. `builtin:echo` is
/// the in-process echo backend. Adapters that fail to start are skipped.
fn predictors(ctx: &Ctx, flags: &[String], deadline: Option<&str>) -> Result<Vec<Box<dyn Predictor>>> {
    let specs = if flags.is_empty() { &ctx.config.predict.adapters } else { flags };
    let deadline = match deadline.or(ctx.config.predict.deadline.as_deref()) {
        Some(d) => parse_duration(d)?,
        None => DEFAULT_DEADLINE,
    };
    let mut out: Vec<Box<dyn Predictor>> = Vec::new();
    for spec in specs {
        if spec == "builtin:echo" {
            out.push(Box::new(EchoPredictor));
            continue;
        }
        let mut words = spec.split_whitespace().map(String::from);
        let program = words.next().ok_or_else(|| anyhow!("empty adapter command"))?;
        let args: Vec<String> = words.collect();
        match ProcessAdapter::spawn(&program, &args, deadline) {
            Ok(a) => out.push(Box::new(a)),
            Err(e) => log::warn!("adapter '{spec}' unavailable: {e}"),
        }
    }
    if out.is_empty() {
        bail!("no external predictor available (pass --adapter)");
    }
    Ok(out)
}

#[derive(Serialize)]
struct PredictItem {
    rank: usize,
    products: String,
    arrow: Option<String>,
    score: Option<f64>,
    probability: Option<f64>,
    provenance: String,
    record: Option<String>,
}

#[derive(Serialize)]
struct PredictOutput {
    reactants: String,
    mode: &'static str,
    k: usize,
    candidates: Vec<PredictItem>,
    note: Option<String>,
    failures: Vec<String>,
}

fn cmd_predict(ctx: &Ctx, a: PredictArgs) -> Result<u8> {
    let mol = parse_reactants(&a.reactants)?;
    let k = a.k.or(ctx.config.predict.k).unwrap_or(DEFAULT_K);
    let k_sites = a.k_sites.or(ctx.config.predict.k_sites).unwrap_or(DEFAULT_K_SITES);
    let mode = match (a.mode, ctx.config.predict.mode.as_deref()) {
        (Some(m), _) => m,
        (None, Some("hybrid")) => Mode::Hybrid,
        (None, Some("twostep") | None) => Mode::Twostep,
        (None, Some(other)) => bail!("unknown predict mode '{other}' in config"),
    };
    let mut manifest = RunManifest::new("predict");
    manifest.settings = json!({"reactants": a.reactants, "k": k, "k_sites": k_sites, "mode": format!("{mode:?}").to_lowercase()});
    let out = match mode {
        Mode::Twostep => {
            let models = ctx.models()?;
            let p = two_step_predict(&models, &mol, k_sites, k)?;
            let candidates = p
                .candidates
                .iter()
                .enumerate()
                .map(|(i, c)| PredictItem {
                    rank: i + 1,
                    products: c.step.products.as_ref().map(write_smiles).unwrap_or_default(),
                    arrow: c.step.arrow.map(|x| x.to_string()),
                    score: c.score(),
                    probability: None,
                    provenance: c.step.provenance.to_string(),
                    record: Some(c.record()),
                })
                .collect();
            PredictOutput {
                reactants: a.reactants.clone(),
                mode: "twostep",
                k,
                candidates,
                note: p.note,
                failures: Vec::new(),
            }
        }
        Mode::Hybrid => {
            let preds = predictors(ctx, &a.adapters, a.deadline.as_deref())?;
            let models = ctx.optional_models()?;
            let h = hybrid_predict(&preds, models.as_ref(), &mol, k, k_sites)?;
            let candidates = h
                .candidates
                .iter()
                .enumerate()
                .map(|(i, c)| PredictItem {
                    rank: i + 1,
                    products: c.smiles(),
                    arrow: None,
                    score: None,
                    probability: Some(c.probability),
                    provenance: c.provenance.to_string(),
                    record: None,
                })
                .collect();
            PredictOutput {
                reactants: a.reactants.clone(),
                mode: "hybrid",
                k,
                candidates,
                note: None,
                failures: h.failures.iter().map(|(i, e)| format!("model {i}: {e}")).collect(),
            }
        }
    };
    ctx.print(&out, || {
        let mut s = String::new();
        for c in &out.candidates {
            match (&c.record, c.probability) {
                (Some(r), _) => s += &format!("{}. {r}\n", c.rank),
                (None, Some(p)) => s += &format!("{}. {} | p={p:.6} | {}\n", c.rank, c.products, c.provenance),
                (None, None) => s += &format!("{}. {}\n", c.rank, c.products),
            }
        }
        s
    });
    for f in &out.failures {
        eprintln!("warning: {f}");
    }
    manifest.results = json!({"candidates": out.candidates.len()});
    ctx.finish(&manifest)?;
    if out.candidates.is_empty() {
        eprintln!("no prediction{}", out.note.as_ref().map(|n| format!(": {n}")).unwrap_or_default());
        return Ok(EXIT_NONE);
    }
    Ok(0)
}

fn load_table(path: &Path) -> Result<TablePredictor> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut t = TablePredictor::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        t.add_record(line)
            .map_err(|e| anyhow!("{}:{}: {e}", path.display(), i + 1))?;
    }
    Ok(t)
}

struct PredictorSpec<'a> {
    kind: Option<PathwayPredictor>,
    table: Option<&'a Path>,
    adapters: &'a [String],
    k_sites: Option<usize>,
    deadline: Option<&'a str>,
}

/// Builds the step predictor for a search and hands it to `f`.
fn with_step_predictor<R>(
    ctx: &Ctx,
    spec: PredictorSpec,
    f: impl FnOnce(&dyn StepPredictor, PredictorKind) -> Result<R>,
) -> Result<R> {
    let kind = match (spec.kind, ctx.config.pathway.predictor.as_deref()) {
        (Some(k), _) => k,
        (None, Some("twostep")) => PathwayPredictor::Twostep,
        (None, Some("hybrid")) => PathwayPredictor::Hybrid,
        (None, Some("adapter_only" | "adapter-only")) => PathwayPredictor::AdapterOnly,
        (None, Some("table")) => PathwayPredictor::Table,
        (None, Some(other)) => bail!("unknown pathway predictor '{other}' in config"),
        (None, None) if spec.table.is_some() => PathwayPredictor::Table,
        (None, None) if !spec.adapters.is_empty() => PathwayPredictor::Hybrid,
        (None, None) => PathwayPredictor::Twostep,
    };
    let k_sites = spec.k_sites.or(ctx.config.predict.k_sites).unwrap_or(DEFAULT_K_SITES);
    match kind {
        PathwayPredictor::Table => {
            let path = spec.table.ok_or_else(|| anyhow!("--predictor table needs --table"))?;
            let t = load_table(path)?;
            f(&t, PredictorKind::Twostep)
        }
        PathwayPredictor::Twostep => {
            let models = ctx.models()?;
            f(&TwoStepPredictor { models: &models, k_sites }, PredictorKind::Twostep)
        }
        PathwayPredictor::Hybrid | PathwayPredictor::AdapterOnly => {
            let preds = predictors(ctx, spec.adapters, spec.deadline)?;
            let models = ctx.optional_models()?;
            let hybrid = kind == PathwayPredictor::Hybrid;
            let p = EnsemblePredictor {
                predictors: &preds,
                models: models.as_ref(),
                k_sites,
                filter: hybrid,
                pool: 20,
            };
            f(&p, if hybrid { PredictorKind::Hybrid } else { PredictorKind::AdapterOnly })
        }
    }
}

fn search_config(
    ctx: &Ctx,
    target: TargetSpec,
    branching: Option<usize>,
    max_depth: Option<usize>,
    budget: Option<&str>,
    selection: Option<SelectionArg>,
) -> Result<SearchConfig> {
    let c = &ctx.config.pathway;
    let mut cfg = SearchConfig::new(target);
    cfg.branching = branching.or(c.branching).unwrap_or(DEFAULT_BRANCHING);
    cfg.max_depth = max_depth.or(c.max_depth).unwrap_or(DEFAULT_MAX_DEPTH);
    cfg.time_budget = match budget.or(c.time_budget.as_deref()) {
        Some(b) => parse_duration(b)?,
        None => DEFAULT_TIME_BUDGET,
    };
    cfg.selection = match (selection, c.selection.as_deref()) {
        (Some(SelectionArg::FirstFound), _) | (None, Some("first_found") | None) => Selection::FirstFound,
        (Some(SelectionArg::MaxMinStep), _) | (None, Some("max_min_step")) => Selection::MaxMinStep,
        (None, Some(other)) => bail!("unknown selection '{other}' in config"),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_pathway(ctx: &Ctx, a: PathwayArgs) -> Result<u8> {
    let mol = parse_reactants(&a.reactants)?;
    let target = TargetSpec::parse(&a.target).with_context(|| format!("invalid target '{}'", a.target))?;
    let mut cfg = search_config(ctx, target, a.branching, a.max_depth, a.time_budget.as_deref(), a.selection)?;
    if let Some(list) = &a.intermediates {
        for s in list.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            cfg.known_intermediates
                .push(parse_smiles(s).with_context(|| format!("invalid intermediate '{s}'"))?);
        }
    }
    let spec = PredictorSpec {
        kind: a.predictor,
        table: a.table.as_deref(),
        adapters: &a.adapters,
        k_sites: a.k_sites,
        deadline: a.deadline.as_deref(),
    };
    let result = with_step_predictor(ctx, spec, |p, kind| {
        cfg.predictor = kind;
        Ok(search(&mol, &cfg, p))
    })?;
    let selected = select_pathway(&result.pathways, cfg.selection).ok().map(|p| p.order);
    let report = json!({"config": cfg, "result": result, "selected": selected});
    ctx.print(&report, || {
        let mut s = result.to_text();
        if let Some(i) = selected {
            s += &format!("selected: pathway {} ({:?})\n", i + 1, cfg.selection);
        }
        s
    });
    let mut manifest = RunManifest::new("pathway");
    if let Some(t) = &a.table {
        manifest.input(t)?;
    }
    manifest.settings = serde_json::to_value(&cfg)?;
    manifest.results = json!({"found": result.found(), "expanded": result.expanded, "stop": result.stop});
    ctx.finish(&manifest)?;
    Ok(if result.found() { 0 } else { EXIT_NONE })
}

fn cmd_ptgen(ctx: &Ctx, a: PtgenArgs) -> Result<u8> {
    let c = &ctx.config.ptgen;
    let defaults = Cutoffs::default();
    let cfg = PtgenConfig {
        cutoffs: Cutoffs {
            heteroatom: a.heteroatom_cutoff.or(c.heteroatom_cutoff).unwrap_or(defaults.heteroatom),
            carbon: a.carbon_cutoff.or(c.carbon_cutoff).unwrap_or(defaults.carbon),
        },
        intrinsic_log_k0: a
            .intrinsic_log_k0
            .or(c.intrinsic_log_k0)
            .unwrap_or(PtgenConfig::default().intrinsic_log_k0),
        smooth_eigen: a.smooth_eigen || c.smooth_eigen.unwrap_or(false),
    };
    let shard_size = a.shard_size.or(c.shard_size).unwrap_or(DEFAULT_SHARD_SIZE);
    let acids = read_inventory_file(&a.acids)?;
    let bases = read_inventory_file(&a.bases)?;
    let gen = Generator::new(&acids, &bases, cfg.clone());
    let jobs = ctx.jobs();
    let mut manifest = RunManifest::new("ptgen");
    manifest.seed = Some(a.seed);
    manifest.input(&a.acids)?;
    manifest.input(&a.bases)?;
    manifest.settings = json!({"ptgen": cfg, "shard_size": shard_size, "sample": a.sample, "jobs": jobs});
    let run = serde_json::to_value(&manifest)?;
    let written = match a.sample {
        Some(n) => {
            let picked = sample_for_training(gen.stream(jobs).map(|p| p.record), n, a.seed);
            write_sharded(picked, &a.out, shard_size, run)?
        }
        None => write_sharded(gen.stream(jobs).map(|p| p.record), &a.out, shard_size, run)?,
    };
    let summary = json!({
        "pairs": gen.pair_count(),
        "written": written.total,
        "shards": written.shards.len(),
        "skipped_acids": gen.skipped_acids,
        "skipped_bases": gen.skipped_bases,
    });
    ctx.print(&summary, || {
        format!(
            "{} of {} pairs admitted into {} shard(s) in {}; skipped {} acid(s), {} base(s)\n",
            written.total,
            gen.pair_count(),
            written.shards.len(),
            a.out.display(),
            gen.skipped_acids,
            gen.skipped_bases
        )
    });
    manifest.outputs = written.shards.iter().map(|s| a.out.join(&s.file).display().to_string()).collect();
    manifest.results = summary;
    ctx.finish(&manifest)?;
    Ok(0)
}

fn cmd_train(ctx: &Ctx, a: TrainArgs) -> Result<u8> {
    let c = &ctx.config.train;
    let seed = a.seed.or(c.seed).unwrap_or(0);
    let profile = match (a.profile, c.profile.as_deref()) {
        (Some(p), _) => p,
        (None, Some("standard") | None) => Profile::Standard,
        (None, Some("corrected")) => Profile::Corrected,
        (None, Some(other)) => bail!("unknown profile '{other}' in config"),
    };
    let mut cfg = TwoStepTrainConfig::default();
    let classifier = match profile {
        Profile::Standard => MlpConfig::site_classifier(ATOM_FP_LEN),
        Profile::Corrected => MlpConfig::site_classifier_corrected(ATOM_FP_LEN),
    };
    cfg.source = MlpConfig { seed, ..classifier.clone() };
    cfg.sink = MlpConfig { seed: seed.wrapping_add(1), ..classifier };
    cfg.ranker.seed = seed.wrapping_add(2);
    cfg.seed = seed;
    if let Some(e) = a.epochs.or(c.epochs) {
        cfg.source.epochs = e;
        cfg.sink.epochs = e;
        cfg.ranker.epochs = e;
    }
    if let Some(d) = a.decoys {
        cfg.decoys_per_step = d;
    }
    let mut manifest = RunManifest::new("train");
    manifest.seed = Some(seed);
    manifest.input(&a.data)?;
    let data = load(&a.data)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let (mut train, held) = if a.holdout {
        let (t, v, te) = split(&data, &SplitSpec { seed, ..SplitSpec::default() })?;
        for (name, part) in [("train", &t), ("val", &v), ("test", &te)] {
            let p = a.out.join(format!("split-{name}.steps"));
            save_dataset(&p, part)?;
            manifest.outputs.push(p.display().to_string());
        }
        (t, Some((v, te)))
    } else {
        (data, None)
    };
    if let Some(extra) = &a.extra {
        manifest.input(extra)?;
        let stream = load(extra)?;
        train = build_mixed(&train, stream.records, a.extra_n, seed);
    }
    log::info!("training on {} steps", train.len());
    let models = train_two_step(&train.records, &cfg)?;
    models.save(&a.out)?;
    for f in [mechrxn::twostep::SOURCE_FILE, mechrxn::twostep::SINK_FILE, mechrxn::twostep::RANKER_FILE] {
        manifest.outputs.push(a.out.join(f).display().to_string());
    }
    let mut results = json!({"train_steps": train.len()});
    if let Some((v, te)) = &held {
        let ns = [1, 2, 3, 5, 10];
        let va = eval_reactive_sites(&models, &v.records, &ns)?;
        let ta = eval_reactive_sites(&models, &te.records, &ns)?;
        results["val_sites"] = serde_json::to_value(&va)?;
        results["test_sites"] = serde_json::to_value(&ta)?;
    }
    manifest.settings = serde_json::to_value(&cfg)?;
    manifest.results = results.clone();
    manifest.write(&a.out.join("manifest.json"))?;
    ctx.print(&results, || {
        let mut s = format!("trained on {} steps; models in {}\n", train.len(), a.out.display());
        if let Some(v) = results.get("test_sites") {
            s += &format!("held-out joint site accuracy (N={:?}): {:?}\n", v["ns"], v["hits"]);
        }
        s
    });
    ctx.finish(&manifest)?;
    Ok(0)
}

fn read_predictions(path: &Path) -> Result<Vec<Vec<Molecule>>> {
    #[derive(serde::Deserialize)]
    struct Line {
        candidates: Vec<String>,
    }
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        out.push(
            l.candidates
                .iter()
                .filter_map(|s| match parse_smiles(s) {
                    Ok(m) => Some(m),
                    Err(e) => {
                        log::warn!("{}:{}: candidate '{s}' ignored: {e}", path.display(), i + 1);
                        None
                    }
                })
                .collect(),
        );
    }
    Ok(out)
}

fn cmd_eval_topn(ctx: &Ctx, a: TopnArgs) -> Result<u8> {
    let ns = parse_ns(&a.ns)?;
    let refs = load(&a.references)?;
    let mut manifest = RunManifest::new("eval topn");
    manifest.input(&a.references)?;
    let (records, references): (Vec<_>, Vec<Molecule>) = refs
        .records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.products.clone().map(|p| (i, p)))
        .unzip();
    if records.len() < refs.len() {
        log::warn!("{} reference record(s) without products skipped", refs.len() - records.len());
    }
    let predictions = match &a.predictions {
        Some(p) => {
            manifest.input(p)?;
            let all = read_predictions(p)?;
            if all.len() != refs.len() {
                bail!("{} prediction lines for {} references", all.len(), refs.len());
            }
            records.iter().map(|&i| all[i].clone()).collect::<Vec<_>>()
        }
        None => {
            let models = ctx.models()?;
            let k_sites = a.k_sites.unwrap_or(DEFAULT_K_SITES);
            let k = *ns.iter().max().expect("non-empty");
            records
                .iter()
                .map(|&i| {
                    let p = two_step_predict(&models, &refs.records[i].reactants, k_sites, k)?;
                    Ok(p.candidates.into_iter().filter_map(|c| c.step.products).collect())
                })
                .collect::<Result<Vec<Vec<Molecule>>>>()?
        }
    };
    let table = top_n_accuracy(&predictions, &references, &ns, a.resonance);
    if let Some(p) = &a.csv {
        std::fs::write(p, table.to_csv())?;
        manifest.outputs.push(p.display().to_string());
    }
    ctx.print(&table, || table.to_csv());
    manifest.settings = json!({"ns": ns, "resonance": a.resonance});
    manifest.results = serde_json::to_value(&table)?;
    ctx.finish(&manifest)?;
    Ok(0)
}

fn cmd_eval_sites(ctx: &Ctx, a: SitesArgs) -> Result<u8> {
    let ns = parse_ns(&a.ns)?;
    let data = load(&a.data)?;
    let models = ctx.models()?;
    let acc = eval_reactive_sites(&models, &data.records, &ns)?;
    ctx.print(&acc, || {
        let mut s = String::from("n,hits,total,percent\n");
        for ((n, h), p) in acc.ns.iter().zip(&acc.hits).zip(acc.percent()) {
            s += &format!("{n},{h},{},{p:.2}\n", acc.total);
        }
        s
    });
    let mut manifest = RunManifest::new("eval sites");
    manifest.input(&a.data)?;
    manifest.results = serde_json::to_value(&acc)?;
    ctx.finish(&manifest)?;
    Ok(0)
}

fn cmd_eval_benchmark(ctx: &Ctx, a: BenchmarkArgs) -> Result<u8> {
    let file = std::fs::File::open(&a.file).with_context(|| format!("opening {}", a.file.display()))?;
    let (records, errors) = read_benchmark(file)?;
    for e in &errors {
        eprintln!("warning: {}:{}: {}", a.file.display(), e.line, e.message);
    }
    let placeholder = TargetSpec::Formula("H".parse()?);
    let cfg = search_config(ctx, placeholder, a.branching, a.max_depth, a.time_budget.as_deref(), None)?;
    let spec = PredictorSpec {
        kind: a.predictor,
        table: a.table.as_deref(),
        adapters: &a.adapters,
        k_sites: a.k_sites,
        deadline: a.deadline.as_deref(),
    };
    let report = with_step_predictor(ctx, spec, |p, _| Ok(eval_benchmark(&records, &cfg, p, a.journal.as_deref())?))?;
    ctx.print(&report, || report.to_csv());
    let mut manifest = RunManifest::new("eval benchmark");
    manifest.input(&a.file)?;
    manifest.settings = serde_json::to_value(&cfg)?;
    manifest.results = json!({"recovered": report.recovered, "total": report.total, "skipped_lines": errors.len()});
    ctx.finish(&manifest)?;
    Ok(0)
}

fn cmd_stats(ctx: &Ctx, a: StatsArgs) -> Result<u8> {
    let data = load(&a.data)?;
    let st = dataset_stats(&data);
    match &a.out {
        Some(p) => std::fs::write(p, st.to_csv()).with_context(|| format!("writing {}", p.display()))?,
        None => ctx.print(&st, || st.to_csv()),
    }
    let mut manifest = RunManifest::new("stats");
    manifest.input(&a.data)?;
    manifest.results = json!({"records": st.records});
    ctx.finish(&manifest)?;
    Ok(0)
}

fn cmd_fingerprints(ctx: &Ctx, a: FingerprintArgs) -> Result<u8> {
    let data = load(&a.data)?;
    let mut rows = Vec::with_capacity(data.len());
    for (i, r) in data.records.iter().enumerate() {
        match reaction_fingerprint(r) {
            Ok(fp) => rows.push(fp.into_sparse()),
            Err(e) => bail!("record {}: {e}", i + 1),
        }
    }
    let file = std::fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = std::io::BufWriter::new(file);
    write_fingerprint_dump(&mut w, &rows)?;
    w.flush()?;
    let mut manifest = RunManifest::new("fingerprints");
    manifest.input(&a.data)?;
    manifest.outputs.push(a.out.display().to_string());
    manifest.results = json!({"rows": rows.len()});
    ctx.finish(&manifest)?;
    Ok(0)
}
