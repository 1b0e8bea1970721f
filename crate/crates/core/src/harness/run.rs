use std::cell::Cell;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{load_dataset, ExperimentConfig, Metric, SplitMode};
use super::metrics::{accuracy, pr_auc, Summary};
use crate::autodiff::save_checkpoint;
use crate::error::{Error, Result};
use crate::hypergraph::{split_dataset, DatasetSplit, Hypergraph, SparseMatrix};
use crate::training::{
    adapt, finetune, hyperedge_targets, joint_train, pretrain_hyperedge, pretrain_node, Classifier, LogRow,
    ModelState, Strategy, TrainConfig, TrainLog,
};

/// Downstream labels behind an access counter, so tests can check that
/// test labels are read only by the final evaluation.
#[derive(Debug)]
pub struct LabelStore {
    labels: Vec<usize>,
    split: DatasetSplit,
    test_reads: Cell<usize>,
}

impl LabelStore {
    pub fn new(hg: &Hypergraph, split: DatasetSplit) -> Result<Self> {
        let labels = hg
            .labels()
            .ok_or_else(|| Error::Data("hypergraph has no labels".into()))?
            .to_vec();
        Ok(LabelStore {
            labels,
            split,
            test_reads: Cell::new(0),
        })
    }

    pub fn split(&self) -> &DatasetSplit {
        &self.split
    }

    pub fn train_pairs(&self) -> Vec<(usize, usize)> {
        self.split.train.iter().map(|&i| (i, self.labels[i])).collect()
    }

    pub fn val_pairs(&self) -> Vec<(usize, usize)> {
        self.split.val.iter().map(|&i| (i, self.labels[i])).collect()
    }

    /// Test labels. Every call is counted.
    pub fn test_labels(&self) -> Vec<usize> {
        self.test_reads.set(self.test_reads.get() + 1);
        self.split.test.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn test_reads(&self) -> usize {
        self.test_reads.get()
    }
}

/// Wall-clock milliseconds spent in each phase of one repeat.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub node_ms: f64,
    pub partition_ms: f64,
    pub hyperedge_ms: f64,
    pub adapt_ms: f64,
    pub finetune_ms: f64,
    pub joint_ms: f64,
    pub evaluate_ms: f64,
}

impl PhaseTimings {
    /// Node pretext, self-labelling and hyperedge pretext (or adaptation).
    pub fn pretraining_ms(&self) -> f64 {
        self.node_ms + self.partition_ms + self.hyperedge_ms + self.adapt_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub num_nodes: usize,
    pub num_hyperedges: usize,
    pub num_classes: usize,
    pub min_hyperedge_size: usize,
    pub max_hyperedge_size: usize,
}

impl DatasetSummary {
    pub fn of(hg: &Hypergraph) -> Self {
        let (lo, hi) = hg.size_range().unwrap_or((0, 0));
        DatasetSummary {
            num_nodes: hg.num_nodes(),
            num_hyperedges: hg.num_hyperedges(),
            num_classes: hg.num_classes(),
            min_hyperedge_size: lo,
            max_hyperedge_size: hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub seed: u64,
    pub split_seed: u64,
    pub accuracy: f64,
    /// One-vs-rest PR-AUC per class; `None` when the class is absent from
    /// the test split (or present everywhere).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub pr_auc: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_pr_auc: Option<f64>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_accuracy: Option<f64>,
    pub test_label_reads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// The configuration with every default resolved.
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub transductive: bool,
    pub seeds: Vec<u64>,
    pub repeats: Vec<RepeatReport>,
    pub accuracy: Summary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pr_auc: Option<Summary>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub timings: Vec<PhaseTimings>,
    /// `(repeat, row)` training log.
    pub log: Vec<(usize, LogRow)>,
}

/// Configuration with cluster count and module mode made explicit.
pub fn resolve_config(config: &ExperimentConfig, hg: &Hypergraph) -> ExperimentConfig {
    let mut c = config.clone();
    c.train.clusters = Some(config.train.resolved_clusters(hg.num_classes()));
    c.train.module_mode = Some(config.train.resolved_module_mode());
    c
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed().as_secs_f64() * 1e3;
    out
}

fn checkpoint(dir: Option<&Path>, name: &str, state: &ModelState) -> Result<()> {
    if let Some(d) = dir {
        save_checkpoint(&state.store, d.join(format!("{name}.json")))?;
    }
    Ok(())
}

/// Pre-training phases of `config.strategy`, leaving the GNN ready for
/// fine-tuning. Joint training and no pre-training do nothing here.
#[allow(clippy::too_many_arguments)]
pub fn pretrain(
    state: &mut ModelState,
    hg: &Hypergraph,
    features: &SparseMatrix,
    split: &DatasetSplit,
    config: &TrainConfig,
    log: &mut TrainLog,
    timings: &mut PhaseTimings,
    checkpoints: Option<&Path>,
) -> Result<()> {
    let q = config.resolved_clusters(hg.num_classes());
    let node = matches!(
        config.strategy,
        Strategy::Traditional | Strategy::AdaptationAware | Strategy::NodeOnly
    );
    let hg_train = hg.restrict(&split.train);
    if node {
        timed(&mut timings.node_ms, || pretrain_node(state, &hg_train, features, config, log))
            .map_err(|e| e.in_phase("node pretext"))?;
        checkpoint(checkpoints, "node", state)?;
    }
    match config.strategy {
        Strategy::Traditional => {
            let targets = timed(&mut timings.partition_ms, || hyperedge_targets(&hg_train, config, q))
                .map_err(|e| e.in_phase("partition"))?;
            timed(&mut timings.hyperedge_ms, || {
                pretrain_hyperedge(state, &hg_train, features, &targets, config, log)
            })
            .map_err(|e| e.in_phase("hyperedge pretext"))?;
            checkpoint(checkpoints, "hyperedge", state)?;
        }
        Strategy::AdaptationAware | Strategy::HyperedgeOnly if config.adaptation_steps > 0 => {
            let hg_test = hg.restrict(&split.test);
            let targets = timed(&mut timings.partition_ms, || hyperedge_targets(&hg_test, config, q))
                .map_err(|e| e.in_phase("partition"))?;
            timed(&mut timings.adapt_ms, || adapt(state, &hg_test, features, &targets, config, log))
                .map_err(|e| e.in_phase("adaptation"))?;
            checkpoint(checkpoints, "adapt", state)?;
        }
        _ => {}
    }
    Ok(())
}

struct RepeatOutcome {
    report: RepeatReport,
    timings: PhaseTimings,
    log: TrainLog,
}

fn run_repeat(
    hg: &Hypergraph,
    features: &SparseMatrix,
    config: &ExperimentConfig,
    seed: u64,
    split_seed: u64,
    checkpoints: Option<&Path>,
) -> Result<RepeatOutcome> {
    let [a, b, c] = config.split.ratios;
    let split = split_dataset(hg, (a, b, c), split_seed).map_err(|e| e.in_phase("split"))?;
    let labels = LabelStore::new(hg, split)?;
    let mut train_cfg = config.train.clone();
    train_cfg.seed = seed;
    let mut state = ModelState::new(&train_cfg, hg.feature_dim()).map_err(|e| e.in_phase("init"))?;
    let mut log = TrainLog::default();
    let mut timings = PhaseTimings::default();
    let num_classes = hg.num_classes();
    let train = labels.train_pairs();
    let val = labels.val_pairs();

    let classifier: Classifier = if train_cfg.strategy == Strategy::Joint {
        let targets = if train_cfg.beta > 0.0 {
            let hg_train = hg.restrict(&labels.split().train);
            let q = train_cfg.resolved_clusters(num_classes);
            Some(
                timed(&mut timings.partition_ms, || hyperedge_targets(&hg_train, &train_cfg, q))
                    .map_err(|e| e.in_phase("partition"))?,
            )
        } else {
            None
        };
        let (clf, _) = timed(&mut timings.joint_ms, || {
            joint_train(&mut state, hg, features, &train, &val, num_classes, targets.as_ref(), &train_cfg, &mut log)
        })
        .map_err(|e| e.in_phase("joint training"))?;
        clf
    } else {
        pretrain(&mut state, hg, features, labels.split(), &train_cfg, &mut log, &mut timings, checkpoints)?;
        timed(&mut timings.finetune_ms, || {
            finetune(&mut state, hg, features, &train, &val, num_classes, &train_cfg, &mut log)
        })
        .map_err(|e| e.in_phase("fine-tuning"))?
    };
    checkpoint(checkpoints, "finetune", &state)?;

    let start = Instant::now();
    let test_ids = labels.split().test.clone();
    let probs = classifier
        .predict_proba(&state, features, hg, &test_ids)
        .map_err(|e| e.in_phase("evaluation"))?;
    let preds: Vec<usize> = (0..probs.rows())
        .map(|r| {
            let row = probs.row(r);
            (0..row.len()).fold(0, |best, c| if row[c] > row[best] { c } else { best })
        })
        .collect();
    let truth = labels.test_labels();
    let acc = accuracy(&preds, &truth).map_err(|e| e.in_phase("evaluation"))?;
    let mut per_class = Vec::new();
    if config.metrics.contains(&Metric::PrAuc) {
        for c in 0..num_classes {
            let scores: Vec<f64> = (0..probs.rows()).map(|r| probs.at(r, c)).collect();
            let binary: Vec<bool> = truth.iter().map(|&y| y == c).collect();
            per_class.push(pr_auc(&scores, &binary).ok());
        }
    }
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    timings.evaluate_ms = start.elapsed().as_secs_f64() * 1e3;

    Ok(RepeatOutcome {
        report: RepeatReport {
            seed,
            split_seed,
            accuracy: acc,
            mean_pr_auc: Summary::of(&defined).map(|s| s.mean),
            pr_auc: per_class,
            best_epoch: classifier.best_epoch,
            epochs_run: classifier.epochs_run,
            best_val_accuracy: classifier.best_val_accuracy,
            test_label_reads: labels.test_reads(),
        },
        timings,
        log,
    })
}

/// Run every repeat of `config` on an already loaded hypergraph.
///
/// Repeat `r` trains with seed `seed + r`. With per-seed splits the split
/// uses the same seed; with fixed splits every repeat uses the base seed.
pub fn run_on_hypergraph(hg: &Hypergraph, config: &ExperimentConfig, checkpoint_dir: Option<&Path>) -> Result<RunOutput> {
    config.train.validate()?;
    if config.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    if hg.labels().is_none() {
        return Err(Error::Data("the dataset has no hyperedge labels".into()));
    }
    let resolved = resolve_config(config, hg);
    let features = hg.sparse_features();
    let base = config.train.seed;
    let mut repeats = Vec::with_capacity(config.repeats);
    let mut timings = Vec::with_capacity(config.repeats);
    let mut log = Vec::new();
    let mut seeds = Vec::with_capacity(config.repeats);
    for r in 0..config.repeats {
        let seed = base.wrapping_add(r as u64);
        let split_seed = match config.split.mode {
            SplitMode::PerSeed => seed,
            SplitMode::Fixed => base,
        };
        let dir = checkpoint_dir.map(|d| d.join(format!("repeat{r}")));
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        let out = run_repeat(hg, &features, &resolved, seed, split_seed, dir.as_deref())?;
        log::info!(
            "repeat {r} (seed {seed}): accuracy {:.4}, best epoch {}",
            out.report.accuracy,
            out.report.best_epoch
        );
        seeds.push(seed);
        repeats.push(out.report);
        timings.push(out.timings);
        log.extend(out.log.rows.into_iter().map(|row| (r, row)));
    }
    let accs: Vec<f64> = repeats.iter().map(|r| r.accuracy).collect();
    let prs: Vec<f64> = repeats.iter().filter_map(|r| r.mean_pr_auc).collect();
    let report = RunReport {
        config: resolved,
        dataset: DatasetSummary::of(hg),
        transductive: config.train.strategy.is_transductive(),
        seeds,
        accuracy: Summary::of(&accs).expect("at least one repeat"),
        pr_auc: Summary::of(&prs),
        repeats,
    };
    Ok(RunOutput { report, timings, log })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    repeat: usize,
    epoch: usize,
    phase: &'a str,
    loss: f64,
    val_accuracy: Option<f64>,
    lr: f64,
    wall_ms: f64,
}

/// Write `config.json`, `report.json`, `log.csv` and `timing.json` into `dir`.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, output: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("config.json", serde_json::to_string_pretty(config)?)?;
    write("report.json", serde_json::to_string_pretty(&output.report)?)?;
    write(
        "timing.json",
        serde_json::to_string_pretty(&serde_json::json!({ "repeats": output.timings }))?,
    )?;
    let path = dir.join("log.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for (r, row) in &output.log {
        w.serialize(CsvRow {
            repeat: *r,
            epoch: row.epoch,
            phase: &row.phase,
            loss: row.loss,
            val_accuracy: row.val_accuracy,
            lr: row.lr,
            wall_ms: row.wall_ms,
        })?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Load the dataset, run all repeats and write outputs when an output
/// directory is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let hg = load_dataset(&config.dataset).map_err(|e| e.in_phase("ingest"))?;
    let ckpt: Option<PathBuf> = match (&config.output_dir, config.save_checkpoints) {
        (Some(d), true) => Some(d.join("checkpoints")),
        _ => None,
    };
    let out = run_on_hypergraph(&hg, config, ckpt.as_deref())?;
    if let Some(d) = &config.output_dir {
        write_outputs(d, config, &out)?;
    }
    Ok(out.report)
}
