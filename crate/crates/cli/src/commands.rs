use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};

use vsr_fault::dataset::{
    build_dataset, evaluate, read_dataset_csv, split, tree_sweep, write_dataset_csv,
    write_sweep_csv, Dataset,
};
use vsr_fault::diagnosis::{diagnose_stream, write_records_csv};
use vsr_fault::features::FeatureKind;
use vsr_fault::forest::{read_model, train_forest, write_model, ClassId, ForestModel, TrainParams};
use vsr_fault::signal::{
    read_stream_csv, synthesize_stream, write_stream_csv, Scenario, SignalConfig,
};

use crate::{
    Cli, Command, DiagnoseArgs, EvalArgs, ForestArgs, GenArgs, ScenarioArgs, SimulateArgs,
    SweepArgs, TrainArgs,
};

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Data(e) => {
                if f.alternate() {
                    write!(f, "{e:#}")
                } else {
                    write!(f, "{e}")
                }
            }
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Usage(e.into())
}

fn data<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Data(e.into())
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage(anyhow!("--threads must be >= 1")));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(data)?;
    pool.install(|| match cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Simulate(a) => simulate(a),
    })
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p)
                .with_context(|| format!("cannot create {}", p.display()))
                .map_err(data)?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(data)
}

fn signal_config(cfg: SignalConfig) -> CliResult<SignalConfig> {
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    read_dataset_csv(open(path)?)
        .with_context(|| format!("reading dataset {}", path.display()))
        .map_err(data)
}

fn load_model(path: &Path) -> CliResult<ForestModel> {
    read_model(open(path)?)
        .with_context(|| format!("reading model {}", path.display()))
        .map_err(data)
}

fn train_params(dim: usize, trees: usize, seed: u64, f: &ForestArgs) -> CliResult<TrainParams> {
    let mut p = TrainParams::new(dim).with_trees(trees).with_seed(seed);
    if let Some(m) = f.m_features {
        p.m_features = m;
    }
    p.min_leaf = f.min_leaf;
    p.max_depth = f.max_depth;
    p.validate(dim).map_err(usage)?;
    Ok(p)
}

fn finish(mut out: Box<dyn Write>) -> CliResult<()> {
    out.flush().context("flushing output").map_err(data)
}

fn gen(a: GenArgs) -> CliResult<()> {
    let kind: FeatureKind = a.features.parse().map_err(usage)?;
    let cfg = signal_config(a.signal.config())?;
    if a.per_class == 0 {
        return Err(usage(anyhow!("--per-class must be >= 1")));
    }
    let d = build_dataset(&cfg, a.per_class, kind, a.seed).map_err(data)?;
    let comments = [
        "vsrfault gen".to_string(),
        format!(
            "per_class={} features={} seed={}",
            a.per_class, kind, a.seed
        ),
        cfg.describe(),
    ];
    let mut out = output(a.out.as_deref())?;
    write_dataset_csv(&mut out, &d, &comments).map_err(data)?;
    finish(out)
}

fn train(a: TrainArgs) -> CliResult<()> {
    if !(a.train_frac > 0.0 && a.train_frac <= 1.0) {
        return Err(usage(anyhow!("--train-frac must lie in (0, 1]")));
    }
    let d = load_dataset(&a.data)?;
    let params = train_params(d.dim(), a.trees, a.seed, &a.forest)?;
    let (train_set, test_set) = if a.train_frac < 1.0 {
        let (tr, te) = split(&d, a.train_frac, a.seed).map_err(usage)?;
        (tr, Some(te))
    } else {
        (d, None)
    };
    let model = train_forest(&train_set.rows(), &params, train_set.kind()).map_err(data)?;

    let mut out = output(Some(&a.out))?;
    write_model(&mut out, &model).map_err(data)?;
    finish(out)?;

    println!(
        "trained {} trees on {} {} rows (dim {}, m_features {}, seed {})",
        model.n_trees(),
        train_set.len(),
        model.feature_kind(),
        model.dim(),
        params.m_features,
        params.seed
    );
    match test_set {
        Some(te) => {
            let r = evaluate(&model, &te).map_err(data)?;
            println!(
                "holdout accuracy {:.4} on {} rows",
                r.overall_accuracy(),
                te.len()
            );
        }
        None => {
            let r = evaluate(&model, &train_set).map_err(data)?;
            println!(
                "training accuracy {:.4} on {} rows",
                r.overall_accuracy(),
                train_set.len()
            );
        }
    }
    Ok(())
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let d = load_dataset(&a.data)?;
    let r = evaluate(&model, &d).map_err(data)?;
    let comments = [
        "vsrfault eval".to_string(),
        format!("model={} data={}", a.model.display(), a.data.display()),
        format!("overall_accuracy={}", r.overall_accuracy()),
    ];
    let mut out = output(a.report.as_deref())?;
    r.write_class_csv(&mut out, &comments).map_err(data)?;
    finish(out)?;
    if let Some(p) = &a.confusion {
        let mut out = output(Some(p))?;
        r.write_confusion_csv(&mut out, &comments).map_err(data)?;
        finish(out)?;
    }
    if a.report.is_some() {
        println!(
            "overall accuracy {:.4} on {} rows",
            r.overall_accuracy(),
            d.len()
        );
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    if a.trees.is_empty() || a.trees.contains(&0) {
        return Err(usage(anyhow!("--trees needs positive counts")));
    }
    let d = load_dataset(&a.data)?;
    let max = *a.trees.iter().max().expect("non-empty");
    let params = train_params(d.dim(), max, a.seed, &a.forest)?;
    let curve = tree_sweep(&d, &a.trees, &params, a.train_frac).map_err(usage)?;
    let comments = [
        "vsrfault sweep".to_string(),
        format!(
            "data={} seed={} train_frac={} m_features={} min_leaf={}",
            a.data.display(),
            a.seed,
            a.train_frac,
            params.m_features,
            params.min_leaf
        ),
    ];
    let mut out = output(a.out.as_deref())?;
    write_sweep_csv(&mut out, &curve, &comments).map_err(data)?;
    finish(out)
}

fn scenario(s: &ScenarioArgs, cfg: &SignalConfig) -> CliResult<Scenario> {
    let name = s
        .scenario
        .as_deref()
        .ok_or_else(|| usage(anyhow!("either --scenario or --stream is required")))?;
    let post: ClassId = name.parse().map_err(usage)?;
    let pre: ClassId = s.pre.parse().map_err(usage)?;
    if s.onset > s.cycles {
        return Err(usage(anyhow!(
            "--onset {} exceeds --cycles {}",
            s.onset,
            s.cycles
        )));
    }
    Ok(Scenario::draw(
        pre.conditions(),
        post.conditions(),
        s.cycles,
        s.onset,
        s.seed,
        cfg,
    ))
}

fn scenario_comments(cmd: &str, s: &ScenarioArgs, cfg: &SignalConfig) -> Vec<String> {
    vec![
        format!("vsrfault {cmd}"),
        format!(
            "scenario={} pre={} onset={} cycles={} seed={}",
            s.scenario.as_deref().unwrap_or(""),
            s.pre,
            s.onset,
            s.cycles,
            s.seed
        ),
        cfg.describe(),
    ]
}

fn diagnose(a: DiagnoseArgs) -> CliResult<()> {
    let cfg = signal_config(a.signal.config())?;
    let model = load_model(&a.model)?;
    let (cycles, comments) = match &a.stream {
        Some(p) => {
            let cycles = read_stream_csv(open(p)?)
                .with_context(|| format!("reading stream {}", p.display()))
                .map_err(data)?;
            (
                cycles,
                vec![
                    "vsrfault diagnose".to_string(),
                    format!("stream={}", p.display()),
                ],
            )
        }
        None => {
            let sc = scenario(&a.scenario, &cfg)?;
            let cycles = synthesize_stream(&sc, &cfg).map_err(usage)?;
            (cycles, scenario_comments("diagnose", &a.scenario, &cfg))
        }
    };
    let records = diagnose_stream(&model, &cycles, &cfg).map_err(data)?;
    let mut out = output(a.out.as_deref())?;
    write_records_csv(&mut out, &records, &comments).map_err(data)?;
    finish(out)
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let cfg = signal_config(a.signal.config())?;
    let sc = scenario(&a.scenario, &cfg)?;
    let cycles = synthesize_stream(&sc, &cfg).map_err(usage)?;
    let mut out = output(a.out.as_deref())?;
    write_stream_csv(
        &mut out,
        &cycles,
        &scenario_comments("simulate", &a.scenario, &cfg),
    )
    .map_err(data)?;
    finish(out)
}
