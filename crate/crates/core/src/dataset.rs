//! Labeled dataset generation and the evaluation protocol.
//!
//! A dataset holds `per_class` synthesized cycles for each of the ten sensor
//! states. Evaluation follows a Monte Carlo cross-validation scheme: random
//! 70/30 partitions, a forest trained on each, class-wise recall reported.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{extract, FeatureKind};
use crate::forest::{train_forest, ClassId, FeatureRows, ForestModel, TrainParams, N_CLASSES};
use crate::seed;
use crate::signal::{synthesize_cycle, FaultState, SignalConfig};

/// Stream index reserved for partitioning; tree streams count up from 0.
const SPLIT_STREAM: u64 = u64::MAX;

pub const DEFAULT_PER_CLASS: usize = 2_400;
pub const DEFAULT_TRAIN_FRAC: f64 = 0.7;
pub const DEFAULT_REPEATS: usize = 5;

/// How a dataset was generated.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub signal: SignalConfig,
    pub per_class: usize,
    pub seed: u64,
}

/// Row-major feature matrix with a class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<ClassId>,
    dim: usize,
    kind: FeatureKind,
    provenance: Option<Provenance>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<ClassId>,
        dim: usize,
        kind: FeatureKind,
    ) -> Result<Self> {
        FeatureRows::new(&features, &labels, dim)?;
        Ok(Self {
            features,
            labels,
            dim,
            kind,
            provenance: None,
        })
    }

    pub fn rows(&self) -> FeatureRows<'_> {
        FeatureRows::new(&self.features, &self.labels, self.dim).expect("validated at construction")
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
            kind: self.kind,
            provenance: None,
        }
    }

    /// Row count per class.
    pub fn class_counts(&self) -> [usize; N_CLASSES] {
        let mut c = [0; N_CLASSES];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }
}

/// Synthesizes `per_class` cycles for every class.
///
/// Sample `i` of class `c` gets its own RNG derived from `(seed, c, i)`: its
/// fault gains are drawn first, then its noise. Rows are ordered by class,
/// then sample index. The same seed yields the same cycles for either
/// feature kind.
pub fn build_dataset(
    cfg: &SignalConfig,
    per_class: usize,
    kind: FeatureKind,
    seed: u64,
) -> Result<Dataset> {
    cfg.validate()?;
    if per_class == 0 {
        return Err(Error::InvalidConfig("per_class must be >= 1".into()));
    }
    let dim = kind.dim(cfg.samples_per_cycle());
    let rows = (0..N_CLASSES * per_class)
        .into_par_iter()
        .map(|k| {
            let class = ClassId::new(k / per_class).expect("k / per_class < N_CLASSES");
            let mut rng = seed::rng_for(
                seed::derive_seed(seed, class.index() as u64),
                (k % per_class) as u64,
            );
            let fault = FaultState::draw(class.conditions(), cfg, &mut rng);
            let w = synthesize_cycle(cfg, &fault, 0, &mut rng);
            extract(kind, &w, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let features: Vec<f64> = rows.into_iter().flatten().collect();
    let labels = (0..N_CLASSES * per_class)
        .map(|k| ClassId::new(k / per_class).expect("in range"))
        .collect();
    let mut d = Dataset::new(features, labels, dim, kind)?;
    d.provenance = Some(Provenance {
        signal: cfg.clone(),
        per_class,
        seed,
    });
    Ok(d)
}

/// Uniform random partition into train and test sets; the train side gets
/// `round(n * train_frac)` rows. Each side keeps the original row order.
pub fn split(d: &Dataset, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must lie in (0, 1), got {train_frac}"
        )));
    }
    let n = d.len();
    let n_train = (n as f64 * train_frac).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidConfig(format!(
            "train fraction {train_frac} leaves one side of a {n}-row split empty"
        )));
    }
    let mut rng = seed::rng_for(seed, SPLIT_STREAM);
    let mut perm = rand::seq::index::sample(&mut rng, n, n).into_vec();
    let (train, test) = perm.split_at_mut(n_train);
    train.sort_unstable();
    test.sort_unstable();
    Ok((d.subset(train), d.subset(test)))
}

/// Confusion matrix and class-wise accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `confusion[truth][predicted]`.
    pub confusion: [[u64; N_CLASSES]; N_CLASSES],
}

impl EvalReport {
    pub fn from_confusion(confusion: [[u64; N_CLASSES]; N_CLASSES]) -> Self {
        Self { confusion }
    }

    pub fn from_pairs<I: IntoIterator<Item = (ClassId, ClassId)>>(pairs: I) -> Self {
        let mut confusion = [[0; N_CLASSES]; N_CLASSES];
        for (truth, pred) in pairs {
            confusion[truth.index()][pred.index()] += 1;
        }
        Self { confusion }
    }

    pub fn class_total(&self, c: ClassId) -> u64 {
        self.confusion[c.index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    /// Recall of class `c`; `None` when the class has no test rows.
    pub fn accuracy(&self, c: ClassId) -> Option<f64> {
        let n = self.class_total(c);
        (n > 0).then(|| self.confusion[c.index()][c.index()] as f64 / n as f64)
    }

    pub fn misdiagnosis(&self, c: ClassId) -> Option<f64> {
        self.accuracy(c).map(|a| 1.0 - a)
    }

    pub fn overall_accuracy(&self) -> f64 {
        let trace: u64 = (0..N_CLASSES).map(|i| self.confusion[i][i]).sum();
        trace as f64 / self.total() as f64
    }

    /// Writes `class,accuracy,misdiagnosis`; classes absent from the test set
    /// get empty cells.
    pub fn write_class_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        write_comments(&mut out, comments)?;
        writeln!(out, "class,accuracy,misdiagnosis")?;
        for c in ClassId::all() {
            match (self.accuracy(c), self.misdiagnosis(c)) {
                (Some(a), Some(m)) => writeln!(out, "{c},{a},{m}")?,
                _ => writeln!(out, "{c},,")?,
            }
        }
        Ok(())
    }

    /// Writes the confusion matrix, one row per true class.
    pub fn write_confusion_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        write_comments(&mut out, comments)?;
        write!(out, "true")?;
        for c in ClassId::all() {
            write!(out, ",p{c}")?;
        }
        writeln!(out)?;
        for c in ClassId::all() {
            write!(out, "{c}")?;
            for v in self.confusion[c.index()] {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn check_compatible(model: &ForestModel, d: &Dataset) -> Result<()> {
    if model.feature_kind() != d.kind() {
        return Err(Error::FeatureKindMismatch {
            model: model.feature_kind(),
            data: d.kind(),
        });
    }
    if model.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: d.dim(),
        });
    }
    Ok(())
}

/// Forest predictions for every row of `test`.
pub fn predict_all(model: &ForestModel, test: &Dataset) -> Result<Vec<ClassId>> {
    check_compatible(model, test)?;
    (0..test.len())
        .into_par_iter()
        .map(|i| model.predict_class(test.row(i)).map(|(c, _)| c))
        .collect()
}

pub fn evaluate(model: &ForestModel, test: &Dataset) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    let preds = predict_all(model, test)?;
    Ok(EvalReport::from_pairs(
        test.labels().iter().copied().zip(preds),
    ))
}

/// Summary of several independent split/train/evaluate runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedEval {
    pub runs: Vec<EvalReport>,
    pub mean: f64,
    /// Population standard deviation of overall accuracy across runs.
    pub std: f64,
    /// Mean class-wise accuracy over the runs where the class was tested.
    pub per_class_mean: [Option<f64>; N_CLASSES],
}

impl RepeatedEval {
    pub fn from_runs(runs: Vec<EvalReport>) -> Self {
        let accs: Vec<f64> = runs.iter().map(EvalReport::overall_accuracy).collect();
        let n = accs.len() as f64;
        let mean = accs.iter().sum::<f64>() / n;
        let std = (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n).sqrt();
        let per_class_mean = std::array::from_fn(|c| {
            let class = ClassId::new(c).expect("in range");
            let v: Vec<f64> = runs.iter().filter_map(|r| r.accuracy(class)).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        });
        Self {
            runs,
            mean,
            std,
            per_class_mean,
        }
    }
}

/// Seed of repeat `r`; it drives both that repeat's split and its forest.
pub fn repeat_seed(base: u64, r: usize) -> u64 {
    seed::derive_seed(base, r as u64)
}

/// Runs `repeats` rounds of split-then-`run`, where `run` receives the
/// train set, test set, and the round's seed.
pub fn repeated_eval_with<F>(
    d: &Dataset,
    repeats: usize,
    train_frac: f64,
    base_seed: u64,
    mut run: F,
) -> Result<RepeatedEval>
where
    F: FnMut(&Dataset, &Dataset, u64) -> Result<EvalReport>,
{
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be >= 1".into()));
    }
    let mut runs = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let s = repeat_seed(base_seed, r);
        let (train, test) = split(d, train_frac, s)?;
        runs.push(run(&train, &test, s)?);
    }
    Ok(RepeatedEval::from_runs(runs))
}

/// Repeated random-split evaluation of forests trained with `params`.
pub fn repeated_eval(
    d: &Dataset,
    params: &TrainParams,
    repeats: usize,
    train_frac: f64,
) -> Result<RepeatedEval> {
    repeated_eval_with(d, repeats, train_frac, params.seed, |train, test, s| {
        let p = TrainParams {
            seed: s,
            ..params.clone()
        };
        let model = train_forest(&train.rows(), &p, train.kind())?;
        evaluate(&model, test)
    })
}

/// Accuracy against tree count on one fixed split.
///
/// A single forest of `max(tree_counts)` trees is trained; smaller forests
/// are its prefixes, which per-tree seeding makes identical to forests
/// trained at that size.
pub fn tree_sweep(
    d: &Dataset,
    tree_counts: &[usize],
    params: &TrainParams,
    train_frac: f64,
) -> Result<Vec<(usize, f64)>> {
    let Some(&max) = tree_counts.iter().max() else {
        return Err(Error::InvalidConfig("no tree counts given".into()));
    };
    if tree_counts.contains(&0) {
        return Err(Error::InvalidConfig("tree counts must be >= 1".into()));
    }
    let (train, test) = split(d, train_frac, params.seed)?;
    let full = train_forest(&train.rows(), &params.clone().with_trees(max), train.kind())?;
    tree_counts
        .iter()
        .map(|&k| Ok((k, evaluate(&full.truncated(k)?, &test)?.overall_accuracy())))
        .collect()
}

pub fn write_sweep_csv<W: Write>(
    mut out: W,
    curve: &[(usize, f64)],
    comments: &[String],
) -> Result<()> {
    write_comments(&mut out, comments)?;
    writeln!(out, "n_trees,accuracy")?;
    for (k, a) in curve {
        writeln!(out, "{k},{a}")?;
    }
    Ok(())
}

fn write_comments<W: Write>(out: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    Ok(())
}

/// Writes `label,f0..f17` (texture) or `label,r0..` (raw) rows.
pub fn write_dataset_csv<W: Write>(mut out: W, d: &Dataset, comments: &[String]) -> Result<()> {
    write_comments(&mut out, comments)?;
    let prefix = d.kind().column_prefix();
    write!(out, "label")?;
    for j in 0..d.dim() {
        write!(out, ",{prefix}{j}")?;
    }
    writeln!(out)?;
    for i in 0..d.len() {
        write!(out, "{}", d.labels[i])?;
        for v in d.row(i) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a feature CSV; the column prefix decides the feature kind.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    let header_line = header.position().map_or(1, |p| p.line() as usize);
    if header.get(0) != Some("label") || header.len() < 2 {
        return Err(Error::parse(
            header_line,
            "expected header `label,f0,...` or `label,r0,...`",
        ));
    }
    let kind = match header.get(1).and_then(|h| h.chars().next()) {
        Some('f') => FeatureKind::Texture,
        Some('r') => FeatureKind::Raw,
        _ => {
            return Err(Error::parse(
                header_line,
                "feature columns must be named f<i> or r<i>",
            ))
        }
    };
    let prefix = kind.column_prefix();
    for (j, h) in header.iter().skip(1).enumerate() {
        if h != format!("{prefix}{j}") {
            return Err(Error::parse(
                header_line,
                format!("column {} should be {prefix}{j}, found {h:?}", j + 1),
            ));
        }
    }
    let dim = header.len() - 1;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != dim + 1 {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", dim + 1, rec.len()),
            ));
        }
        let label: usize = rec[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad label {:?}", &rec[0])))?;
        labels.push(ClassId::new(label).map_err(|e| Error::parse(line, e.to_string()))?);
        for field in rec.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(line, format!("bad feature value {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(line, "non-finite feature value"));
            }
            features.push(v);
        }
    }
    Dataset::new(features, labels, dim, kind)
}
