use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use khop::datasets::{
    derive_seed, gen_property_dataset_sized, gen_shape_cycle, tu_load, tu_write, ShapeConfig, Sidecar, PER_CLASS,
};
use khop::expressiveness::{
    audit_baseline_indistinguishability, audit_khop_separation, build_counterexamples, lemma2_exhaustive,
    lemma3_exhaustive, RootCoverage,
};
use khop::graph::GraphProperty;
use khop::harness::{
    cross_validate_graphs, cross_validate_nodes, read_jsonl, summarize, summary_csv, summary_markdown, with_workers,
    workers_from_env, write_jsonl, ExperimentConfig, ResultRecord,
};
use khop::model::{Mode, Model, ModelConfig, Task};
use khop::nn::Tape;
use khop::{Architecture, Graph64};

#[derive(Parser)]
#[command(name = "khop", version, about = "k-hop graph neural networks: data generation, training and audits")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset in the TU text layout.
    Gen(GenArgs),
    /// Cross-validate a model on a dataset directory.
    Train(TrainArgs),
    /// Run an expressiveness audit.
    Audit(AuditArgs),
    /// Time forward and backward passes.
    Bench(BenchArgs),
    /// Summarize a results file.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenTask {
    Roles,
    Property,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    task: GenTask,
    /// Roles: basic, basic-perturbed, varied, varied-perturbed.
    /// Property: connectivity, bipartiteness, triangle-freeness.
    #[arg(long)]
    config: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Roles: number of graphs (seeds seed, seed+1, ...).
    #[arg(long, default_value_t = 1)]
    graphs: usize,
    /// Property: graphs per label.
    #[arg(long, default_value_t = PER_CLASS)]
    per_class: usize,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Use the fixed hidden width and batch size instead of the grid.
    #[arg(long)]
    no_grid: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Lemma1,
    Theorem1,
    Lemma2,
    Lemma3,
}

#[derive(clap::Args)]
struct AuditArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Random weight draws per pair and model (lemma1, theorem1).
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest graph order for lemma3.
    #[arg(long, default_value_t = 7)]
    max_nodes: usize,
    /// lemma3: check every root instead of node 0 of every labeling.
    #[arg(long)]
    all_roots: bool,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "gnn-2,gnn-3,khop-2,khop-3")]
    models: Vec<String>,
    /// Graphs per label of a connectivity dataset.
    #[arg(long, default_value_t = 16)]
    per_class: usize,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(clap::Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = workers_from_env()
        .map_err(anyhow::Error::from)
        .and_then(|workers| with_workers(workers, || run(cli)).map_err(anyhow::Error::from))
        .and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Audit(a) => audit(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let (sidecar, graphs, n_nodes) = match a.task {
        GenTask::Roles => {
            let config: ShapeConfig = a.config.parse()?;
            if a.graphs == 0 {
                bail!("--graphs must be positive");
            }
            let mut graphs = Vec::new();
            let mut labels = Vec::new();
            let mut class_names = Vec::new();
            let mut num_classes = 0;
            for i in 0..a.graphs {
                let ds = gen_shape_cycle(config, a.seed + i as u64)?;
                labels.extend_from_slice(&ds.roles);
                num_classes = ds.num_classes;
                class_names = ds.class_names.clone();
                graphs.push(ds.graph.with_graph_label(0));
            }
            let name = format!("roles-{}", config.name());
            let meta = json!({ "task": "roles", "config": config.name(), "seed": a.seed, "graphs": a.graphs });
            let sc = Sidecar { name, task: "roles".into(), config: meta, seed: a.seed, labels, num_classes, class_names };
            let n = graphs.iter().map(|g| g.n()).sum::<usize>();
            (sc, graphs, n)
        }
        GenTask::Property => {
            let property: GraphProperty = a.config.parse().map_err(anyhow::Error::msg)?;
            let ds = gen_property_dataset_sized(property, a.seed, a.per_class)?;
            let name = format!("property-{}", property.name());
            let meta = json!({ "task": "property", "config": property.name(), "seed": a.seed, "per_class": a.per_class });
            let sc = Sidecar {
                name,
                task: "property".into(),
                config: meta,
                seed: a.seed,
                labels: ds.labels(),
                num_classes: 2,
                class_names: vec!["violated".into(), "satisfied".into()],
            };
            let n = ds.graphs.iter().map(|g| g.n()).sum::<usize>();
            (sc, ds.graphs, n)
        }
    };
    // graph labels are written as-is; node roles live only in the sidecar
    tu_write(&a.out, &sidecar.name, &graphs, &[], &[])?;
    sidecar.save(&a.out)?;
    println!(
        "{}",
        json!({ "out": a.out, "name": sidecar.name, "graphs": graphs.len(), "nodes": n_nodes, "config": sidecar.config })
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let sidecar = Sidecar::load(&a.data)?;
    let tu = tu_load(&a.data).with_context(|| format!("loading {}", a.data.display()))?;
    let task = sidecar.as_ref().map_or("benchmark", |s| s.task.as_str()).to_string();
    let mut cfg = match task.as_str() {
        "roles" => ExperimentConfig::roles(&a.model),
        "property" => ExperimentConfig::property(&a.model),
        _ => ExperimentConfig::benchmark(&a.model),
    };
    cfg.folds = a.folds;
    cfg.repeats = a.repeats;
    cfg.seed = a.seed;
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.hidden {
        cfg.hidden = v;
        cfg.grid = None;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
        cfg.grid = None;
    }
    if a.no_grid {
        cfg.grid = None;
    }
    cfg.validate()?;

    let name = sidecar.as_ref().map_or(tu.name.clone(), |s| s.name.clone());
    let start = Instant::now();
    let records = if task == "roles" {
        let sc = sidecar.as_ref().unwrap();
        if sc.labels.len() != tu.graphs.iter().map(|g| g.n()).sum::<usize>() {
            bail!("sidecar has {} role labels for {} nodes", sc.labels.len(), tu.graphs.len());
        }
        let mut out = Vec::new();
        let mut offset = 0;
        for (i, g) in tu.graphs.iter().enumerate() {
            let labels = &sc.labels[offset..offset + g.n()];
            offset += g.n();
            let c = ExperimentConfig { seed: derive_seed(a.seed, i as u64), ..cfg.clone() };
            for mut r in cross_validate_nodes(&c, &name, g, labels)? {
                r.graph = Some(i);
                out.push(r);
            }
        }
        out
    } else {
        let mut graphs = tu.graphs.clone();
        if let Some(sc) = &sidecar {
            if sc.labels.len() != graphs.len() {
                bail!("sidecar has {} labels for {} graphs", sc.labels.len(), graphs.len());
            }
            graphs = graphs.into_iter().zip(&sc.labels).map(|(g, &l)| g.with_graph_label(l)).collect();
        }
        cross_validate_graphs(&cfg, &name, &graphs)?
    };
    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_jsonl(BufWriter::new(file), &records)?;
    print!("{}", summary_markdown(&summarize(&records)));
    eprintln!("{} runs in {:.1}s, records in {}", records.len(), start.elapsed().as_secs_f64(), a.out.display());
    Ok(())
}

fn audit(a: AuditArgs) -> Result<()> {
    let header = json!({
        "suite": format!("{:?}", a.suite).to_lowercase(),
        "trials": a.trials,
        "seed": a.seed,
        "max_nodes": a.max_nodes,
        "all_roots": a.all_roots,
    });
    println!("{header}");
    let ok = match a.suite {
        Suite::Lemma1 | Suite::Theorem1 => {
            let mut ok = true;
            for (i, pair) in build_counterexamples().iter().enumerate() {
                let seed = derive_seed(a.seed, i as u64);
                for rep in audit_baseline_indistinguishability(pair, a.trials, seed)? {
                    let (count, what) = match a.suite {
                        Suite::Lemma1 => (rep.indistinguishable, "indistinguishable"),
                        _ => (rep.identical_readouts, "identical readouts"),
                    };
                    println!("{}", serde_json::to_string(&rep)?);
                    println!("{} {}: {count}/{} {what} (max diff {:.3e})", rep.pair, rep.model, rep.trials, rep.max_diff);
                    ok &= count == a.trials;
                }
                if matches!(a.suite, Suite::Theorem1) {
                    let rep = audit_khop_separation(pair, 2, a.trials, seed)?;
                    println!("{}", serde_json::to_string(&rep)?);
                    println!("{} {}: readouts differ in {:.0}% of draws", rep.pair, rep.model, 100.0 * rep.separation_rate);
                }
            }
            ok
        }
        Suite::Lemma2 => {
            let rep = lemma2_exhaustive(3, 4, 3)?;
            println!("{}", serde_json::to_string(&rep)?);
            println!("{} configurations, {} inputs, {} collisions", rep.configurations, rep.inputs, rep.collisions);
            rep.collisions == 0
        }
        Suite::Lemma3 => {
            let coverage = if a.all_roots { RootCoverage::All } else { RootCoverage::First };
            let rep = lemma3_exhaustive(a.max_nodes, coverage)?;
            println!("{}", serde_json::to_string(&rep)?);
            println!("{} graphs, {} cases, {} disagreements", rep.graphs, rep.cases, rep.disagreements);
            rep.disagreements == 0
        }
    };
    if !ok {
        bail!("audit failed");
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let ds = gen_property_dataset_sized(GraphProperty::Connectivity, a.seed, a.per_class)?;
    let refs: Vec<&Graph64> = ds.graphs.iter().collect();
    let labels = ds.labels();
    for name in &a.models {
        let arch = Architecture::preset(name)?;
        let config = ModelConfig {
            arch,
            task: Task::Graph,
            input_dim: 1,
            hidden: a.hidden,
            classes: 2,
            readout: Default::default(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let model = Model::<f64>::new(config, &mut rng)?;
        let t = Instant::now();
        let plan = model.compile(&refs)?;
        let compile = t.elapsed().as_secs_f64();
        let t = Instant::now();
        for _ in 0..a.reps.max(1) {
            let mut tape = Tape::new();
            let out = model.forward(&mut tape, &plan, Mode::Train)?;
            let loss = tape.softmax_cross_entropy(out.logits, labels.clone())?;
            tape.backward_scalar(loss)?;
        }
        let step = t.elapsed().as_secs_f64() / a.reps.max(1) as f64;
        println!(
            "{}",
            json!({
                "model": name,
                "graphs": ds.graphs.len(),
                "hidden": a.hidden,
                "seed": a.seed,
                "plan": plan.stats(),
                "compile_seconds": compile,
                "forward_backward_seconds": step,
            })
        );
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let records: Vec<ResultRecord> = read_jsonl(&a.input)?;
    if records.is_empty() {
        bail!("{} has no records", a.input.display());
    }
    let rows = summarize(&records);
    match a.format {
        Format::Csv => print!("{}", summary_csv(&rows)),
        Format::Md => print!("{}", summary_markdown(&rows)),
    }
    Ok(())
}
