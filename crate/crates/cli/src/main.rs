//! `sagenet`: build graphs, train, evaluate and query multi-task GNN
//! models over metadata-linked collections.

mod config;
mod data;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use sagenet_core::graph::{build_adjacency, downsample_degrees, Split, DEFAULT_MAX_DEGREE};
use sagenet_core::io::{
    load_manifest, load_vocab, make_splits, save_checkpoint, save_manifest, save_vocab, write_features, write_graph,
    DEFAULT_FRACTIONS,
};
use sagenet_core::metrics::{cs_curve, write_cs_curve_csv, ThetaComparison};
use sagenet_core::model::{bow_features, Model, ModelConfig, Neighborhood, TagVocab, TaskKind, TaskSpec};
use sagenet_core::retrieval::{embed_all, knn};
use sagenet_core::synth::{generate, SynthConfig};
use sagenet_core::trainer::{evaluate_nodes, fit, regression_errors, FitOptions, EVAL_BATCH_SIZE};

use config::{RunInfo, TrainConfig};
use data::{Dataset, Session};

#[derive(Parser)]
#[command(name = "sagenet", version, about)]
struct Cli {
    /// Worker threads for batched inference (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true, env = "SAGENET_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Link records sharing a property and cap node degrees.
    BuildGraph(BuildGraphArgs),
    /// Assign train/val/test splits in a manifest.
    Split(SplitArgs),
    /// Build the tag vocabulary and optionally the bag-of-words features.
    BowVocab(BowVocabArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one split.
    Eval(EvalArgs),
    /// Nearest neighbors of a record in embedding space.
    Retrieve(RetrieveArgs),
    /// Cumulative score curve of a regression task.
    CsCurve(CsCurveArgs),
    /// Write a small synthetic collection.
    Synth(SynthArgs),
}

#[derive(Args)]
struct BuildGraphArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "school")]
    property: String,
    #[arg(long, default_value_t = DEFAULT_MAX_DEGREE)]
    max_degree: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Defaults to rewriting the input manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// train,val,test fractions.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FRACTIONS)]
    fractions: Vec<f64>,
    /// Label (or property) to stratify by; empty disables stratification.
    #[arg(long, default_value = "style")]
    stratify: String,
}

#[derive(Args)]
struct BowVocabArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "tags")]
    tags_key: String,
    /// Keep tags carried by more than this many records.
    #[arg(long, default_value_t = 10)]
    min_count: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write bag-of-words node features.
    #[arg(long)]
    features_out: Option<PathBuf>,
    /// Reuse an existing vocabulary instead of building one.
    #[arg(long, conflicts_with = "min_count")]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    /// Node features fed to the graph encoder.
    #[arg(long)]
    features: PathBuf,
    /// Precomputed visual features; defaults to `--features`.
    #[arg(long)]
    visual: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "style,artist,timeframe")]
    tasks: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint path; a `.json` sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch training log (CSV).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Sample the next batch on a helper thread.
    #[arg(long)]
    prefetch: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Count errors equal to θ in the cumulative score.
    #[arg(long)]
    inclusive: bool,
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Split to search; the query must belong to it.
    #[arg(long, default_value = "test")]
    split: Split,
    /// Labels compared between the query and each hit.
    #[arg(long, value_delimiter = ',', default_value = "style,artist,timeframe")]
    annotate: Vec<String>,
    /// Also save the embedding store.
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Args)]
struct CsCurveArgs {
    #[arg(long)]
    model: PathBuf,
    /// start:end:step in years, inclusive.
    #[arg(long, default_value = "0:50:1")]
    thetas: String,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Regression task; defaults to the only one.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    inclusive: bool,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    nodes: usize,
    #[arg(long, default_value_t = 4)]
    schools: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 16)]
    feature_dim: usize,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::BuildGraph(a) => build_graph(a, seed),
        Command::Split(a) => split(a, seed),
        Command::BowVocab(a) => bow_vocab(a),
        Command::Train(a) => train(a, seed),
        Command::Eval(a) => eval(a, seed),
        Command::Retrieve(a) => retrieve(a, seed),
        Command::CsCurve(a) => cs_curve_cmd(a, seed),
        Command::Synth(a) => synth(a, seed),
    }
}

fn theta_cmp(inclusive: bool) -> ThetaComparison {
    if inclusive {
        ThetaComparison::Inclusive
    } else {
        ThetaComparison::Strict
    }
}

fn build_graph(a: BuildGraphArgs, seed: u64) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let full = build_adjacency(&manifest, &a.property)?;
    let g = downsample_degrees(&full, a.max_degree, seed)?;
    write_graph(&a.out, &g)?;
    eprintln!(
        "{} nodes, {} edges ({} before capping at degree {}), max degree {}",
        g.node_count(),
        g.edge_count(),
        full.edge_count(),
        a.max_degree,
        g.max_degree()
    );
    Ok(())
}

fn split(a: SplitArgs, seed: u64) -> Result<()> {
    let mut manifest = load_manifest(&a.manifest)?;
    let fractions: [f64; 3] = a
        .fractions
        .as_slice()
        .try_into()
        .context("--fractions takes three values")?;
    let stratify = (!a.stratify.is_empty()).then_some(a.stratify.as_str());
    let assignment = make_splits(&manifest, fractions, seed, stratify)?;
    assignment.apply(&mut manifest);
    save_manifest(a.out.as_ref().unwrap_or(&a.manifest), &manifest)?;
    eprintln!(
        "train {} / val {} / test {}",
        assignment.count(Split::Train),
        assignment.count(Split::Val),
        assignment.count(Split::Test)
    );
    Ok(())
}

fn bow_vocab(a: BowVocabArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let vocab = match &a.vocab {
        Some(p) => load_vocab(p)?,
        None => TagVocab::build(&manifest, &a.tags_key, a.min_count),
    };
    save_vocab(&a.out, &vocab)?;
    eprintln!("{} tags (including the unknown tag)", vocab.tags.len());
    if let Some(path) = &a.features_out {
        let f = bow_features(&manifest, &vocab, &a.tags_key)?;
        let ids: Vec<String> = manifest.records().iter().map(|r| r.id.clone()).collect();
        write_features(path, &ids, f.data())?;
    }
    Ok(())
}

fn absolute(p: &Path) -> Result<PathBuf> {
    fs::canonicalize(p).with_context(|| format!("resolving {}", p.display()))
}

fn train(a: TrainArgs, seed: u64) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    let visual_path = a.visual.clone().unwrap_or_else(|| a.features.clone());
    let data = Dataset::load(&a.manifest, &a.graph, &a.features, &visual_path, &cfg)?;
    ensure!(!a.tasks.is_empty(), "at least one task is required");

    let train_nodes = data.manifest.nodes_in(Split::Train);
    let specs = a
        .tasks
        .iter()
        .map(|name| {
            let w = cfg.task_weights.get(name).copied().unwrap_or(1.0);
            TaskSpec::infer(&data.manifest, name, w, &train_nodes).with_context(|| format!("task `{name}`"))
        })
        .collect::<Result<Vec<_>>>()?;
    let tasks = data.tasks(specs.clone())?;

    let model_cfg = ModelConfig {
        input_dim: data.feats.dim(),
        visual_dim: data.visual.dim(),
        hidden_dim: cfg.hidden_dim,
        proj_dim: cfg.proj_dim,
        fanouts: cfg.fanouts.clone(),
        normalize: cfg.normalize,
    };
    let model = Model::new(model_cfg, specs, seed)?;
    eprintln!(
        "{} parameters, {} train / {} val records",
        model.params.parameter_count(),
        train_nodes.len(),
        data.manifest.nodes_in(Split::Val).len()
    );
    let opts = FitOptions {
        seed,
        prefetch: a.prefetch,
    };
    let result = fit(model, &data.train_data(&tasks, &cfg), &cfg.optim, &opts)?;

    for e in &result.log.epochs {
        let metrics: Vec<String> = e.metrics.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
        eprintln!(
            "epoch {:>3}  train {:.5}  val {:.5}  lr {:e}  {}",
            e.epoch,
            e.train_loss,
            e.val_loss,
            e.lr,
            metrics.join(" ")
        );
    }
    eprintln!("best epoch {}", result.best_epoch);

    let run = RunInfo {
        manifest: absolute(&a.manifest)?,
        graph: absolute(&a.graph)?,
        features: absolute(&a.features)?,
        visual: absolute(&visual_path)?,
        seed,
        config: cfg,
    };
    save_checkpoint(&a.out, &result.model, serde_json::to_value(run)?)?;
    if let Some(log) = &a.log {
        let mut w = BufWriter::new(File::create(log).with_context(|| format!("creating {}", log.display()))?);
        result.log.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn eval(a: EvalArgs, seed: u64) -> Result<()> {
    let s = Session::open(&a.model)?;
    let nodes = s.data.manifest.nodes_in(a.split);
    ensure!(!nodes.is_empty(), "split `{}` is empty", a.split);
    let view = s.data.view(a.split, &s.run.config)?;
    let data = s.data.train_data(&s.tasks, &s.run.config);
    let report = evaluate_nodes(
        &s.model,
        &view,
        &data,
        &nodes,
        a.split.as_str(),
        seed,
        theta_cmp(a.inclusive),
    )?;
    for (name, r) in &report.tasks {
        if let Some((k, v)) = r.headline() {
            eprintln!("{name:<12} {k} {v:.4}  (n={})", r.count);
        }
        if let Some(cs) = r.cs_at_5 {
            eprintln!("{name:<12} cs@5 {cs:.4}");
        }
    }
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &a.report {
        Some(p) => fs::write(p, json).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(json.as_bytes())?,
    }
    Ok(())
}

fn retrieve(a: RetrieveArgs, seed: u64) -> Result<()> {
    let s = Session::open(&a.model)?;
    let query_node = s
        .data
        .manifest
        .node_of(&a.query)
        .with_context(|| format!("unknown record `{}`", a.query))?;
    let query_split = s.data.manifest.split_of(query_node)?;
    if query_split != a.split {
        bail!("`{}` belongs to the {query_split} split, not {}", a.query, a.split);
    }
    let nodes = s.data.manifest.nodes_in(a.split);
    let view = s.data.view(a.split, &s.run.config)?;
    let nb = Neighborhood {
        graph: &view,
        artist_of: s.data.artist_of.as_deref(),
    };
    let store = embed_all(
        &s.model,
        nb,
        &s.data.manifest,
        &s.data.feats,
        &s.data.visual,
        &nodes,
        EVAL_BATCH_SIZE,
        seed,
    )?;
    if let Some(p) = &a.store {
        store.save(p)?;
    }
    let hits = knn(&store, &a.query, a.k)?;

    let mut out = io::stdout().lock();
    write!(out, "{:<5} {:<24} {:>9}", "rank", "id", "distance")?;
    for key in &a.annotate {
        write!(out, " {key:>10}")?;
    }
    writeln!(out)?;
    let query_labels: Vec<Option<String>> = a.annotate.iter().map(|k| s.data.label_text(query_node, k)).collect();
    write!(out, "{:<5} {:<24} {:>9}", "query", a.query, "")?;
    for v in &query_labels {
        write!(out, " {:>10}", v.as_deref().unwrap_or("-"))?;
    }
    writeln!(out)?;
    for (rank, hit) in hits.iter().enumerate() {
        let node = s
            .data
            .manifest
            .node_of(&hit.id)
            .expect("store ids come from the manifest");
        write!(out, "{:<5} {:<24} {:>9.6}", rank + 1, hit.id, hit.distance)?;
        for (key, q) in a.annotate.iter().zip(&query_labels) {
            let mark = match (q, s.data.label_text(node, key)) {
                (Some(q), Some(v)) if *q == v => "match",
                (Some(_), Some(_)) => "differs",
                _ => "-",
            };
            write!(out, " {mark:>10}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn parse_thetas(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad --thetas component `{p}`"))
        })
        .collect::<Result<_>>()?;
    let [start, end, step] = parts[..] else {
        bail!("--thetas expects start:end:step, got `{spec}`");
    };
    ensure!(step > 0.0 && end >= start, "--thetas needs step > 0 and end >= start");
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn cs_curve_cmd(a: CsCurveArgs, seed: u64) -> Result<()> {
    let thetas = parse_thetas(&a.thetas)?;
    let s = Session::open(&a.model)?;
    let regression: Vec<usize> = (0..s.tasks.len())
        .filter(|&t| s.tasks[t].spec.kind == TaskKind::Regression)
        .collect();
    let t = match &a.task {
        Some(name) => s
            .tasks
            .iter()
            .position(|t| &t.spec.name == name)
            .with_context(|| format!("model has no task `{name}`"))?,
        None => match regression[..] {
            [t] => t,
            [] => bail!("model has no regression task"),
            _ => bail!("model has several regression tasks; pick one with --task"),
        },
    };
    ensure!(
        regression.contains(&t),
        "task `{}` is not a regression task",
        s.tasks[t].spec.name
    );
    let nodes = s.data.manifest.nodes_in(a.split);
    let view = s.data.view(a.split, &s.run.config)?;
    let nb = Neighborhood {
        graph: &view,
        artist_of: s.data.artist_of.as_deref(),
    };
    let preds = s
        .model
        .predict(nb, &s.data.feats, &s.data.visual, &nodes, EVAL_BATCH_SIZE, seed)?;
    let errors = regression_errors(&s.model, &preds, t, &s.tasks[t]);
    ensure!(!errors.is_empty(), "no labeled records in the {} split", a.split);
    let curve = cs_curve(&errors, &thetas, theta_cmp(a.inclusive))?;
    match &a.out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            write_cs_curve_csv(&mut w, &curve)?;
            w.flush()?;
        }
        None => write_cs_curve_csv(io::stdout().lock(), &curve)?,
    }
    Ok(())
}

fn synth(a: SynthArgs, seed: u64) -> Result<()> {
    let cfg = SynthConfig {
        nodes: a.nodes,
        schools: a.schools,
        classes: a.classes,
        feature_dim: a.feature_dim,
        seed,
        ..SynthConfig::default()
    };
    let mut c = generate(&cfg)?;
    make_splits(&c.manifest, DEFAULT_FRACTIONS, seed, Some("style"))?.apply(&mut c.manifest);
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let ids: Vec<String> = c.manifest.records().iter().map(|r| r.id.clone()).collect();
    save_manifest(&a.out_dir.join("manifest.jsonl"), &c.manifest)?;
    write_features(&a.out_dir.join("visual.sgf"), &ids, &c.features)?;
    let vocab = TagVocab::build(&c.manifest, "tags", 0);
    save_vocab(&a.out_dir.join("vocab.json"), &vocab)?;
    let tags = bow_features(&c.manifest, &vocab, "tags")?;
    write_features(&a.out_dir.join("tags.sgf"), &ids, tags.data())?;
    eprintln!("wrote {} records to {}", c.manifest.len(), a.out_dir.display());
    Ok(())
}
