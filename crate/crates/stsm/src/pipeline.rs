//! The self-training loop.
//!
//! Epoch 1 trains both models on the first data block (D2T on `(x, y)`,
//! T2D on `(y, x)`). Every later epoch draws its block and, for the
//! self-memory methods:
//!
//! 1. D2T infers `y′` from `x`; T2D infers `x′` from `y′`.
//! 2. The optimizer turns `y′` into `y″`; T2D infers `x″` from each `y″`
//!    that differs from `y′` (otherwise `x″ = x′`).
//! 3. Tuples are judged and a new subset of the block's size is assembled.
//! 4. D2T trains on it; T2D trains on the swapped subset for the
//!    `…+self-t2d` methods.
//!
//! The no-self-memory methods train both models on the raw block. After
//! every epoch both models are scored on the validation split and saved
//! when they strictly improve.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{load, DatasetFormat, DatasetSplit, LoadError, SplitName};
use crate::gateway::{CheckpointAction, Direction, GatewayError, ModelHandle, RuleLexicon};
use crate::linearize::{delinearize, LinearFormat};
use crate::metrics::slot::{osf_counts, OsfCounts};
use crate::metrics::{meteor_corpus, EvalItem, MetricError, MetricReport};
use crate::optimize::{optimize_target, OptimizeOptions};
use crate::record::{Example, Origin, Pair, RecordKind, RecordSet, SelfMemTuple};
use crate::seed::derive_seed;
use crate::select::{
    allocate, audit, build_subset, judge_pair, AllocationStrategy, Mix, SelectionError, SelectionOptions,
    SelectionStats, SelectionVerdict, SubsetPlan,
};
use crate::text::normalize_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    NoSelfMem1,
    NoSelfMem2,
    NoSelfMem3,
    SelfMem,
    SelfMemSelfT2D,
    SelfMemNewData,
    SelfMemNewDataSelfT2D,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::NoSelfMem1,
        Method::NoSelfMem2,
        Method::NoSelfMem3,
        Method::SelfMem,
        Method::SelfMemSelfT2D,
        Method::SelfMemNewData,
        Method::SelfMemNewDataSelfT2D,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::NoSelfMem1 => "no-self-mem-1",
            Method::NoSelfMem2 => "no-self-mem-2",
            Method::NoSelfMem3 => "no-self-mem-3",
            Method::SelfMem => "self-mem",
            Method::SelfMemSelfT2D => "self-mem+self-t2d",
            Method::SelfMemNewData => "self-mem+new-data",
            Method::SelfMemNewDataSelfT2D => "self-mem+new-data+self-t2d",
        }
    }

    pub fn uses_self_memory(self) -> bool {
        !matches!(self, Method::NoSelfMem1 | Method::NoSelfMem2 | Method::NoSelfMem3)
    }

    pub fn self_trains_t2d(self) -> bool {
        matches!(self, Method::SelfMemSelfT2D | Method::SelfMemNewDataSelfT2D)
    }

    /// Whether rejected tuples contribute their gold pair.
    pub fn mix(self) -> Mix {
        match self {
            Method::SelfMemNewData | Method::SelfMemNewDataSelfT2D => Mix::EliteAndRemaining,
            _ => Mix::EliteOnly,
        }
    }

    /// The no-self-memory baselines fix their own allocation; `data` only
    /// matters for the self-memory methods.
    pub fn strategy(self, data: DataRegime) -> AllocationStrategy {
        match (self, data) {
            (Method::NoSelfMem1, _) => AllocationStrategy::FixedNonOverlap,
            (Method::NoSelfMem2, _) => AllocationStrategy::FixedRepeated,
            (Method::NoSelfMem3, _) => AllocationStrategy::RandomPerEpoch,
            (_, DataRegime::Fixed) => AllocationStrategy::FixedNonOverlap,
            (_, DataRegime::Random) => AllocationStrategy::RandomPerEpoch,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            format!("unknown method {s:?}; expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataRegime {
    #[default]
    Fixed,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub data: DataRegime,
    pub epochs: usize,
    pub ratio: f64,
    pub seed: u64,
    /// Inputs per generate/train request.
    pub batch_size: usize,
    pub selection: SelectionOptions,
}

impl RunConfig {
    pub fn new(method: Method) -> Self {
        RunConfig {
            method,
            data: DataRegime::Fixed,
            epochs: 3,
            ratio: 0.3,
            seed: 42,
            batch_size: 32,
            selection: SelectionOptions::default(),
        }
    }

    pub fn strategy(&self) -> AllocationStrategy {
        self.method.strategy(self.data)
    }
}

/// The three splits of one dataset.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub train: DatasetSplit,
    pub validation: DatasetSplit,
    pub test: DatasetSplit,
}

impl From<[DatasetSplit; 3]> for Corpus {
    fn from([train, validation, test]: [DatasetSplit; 3]) -> Self {
        Corpus {
            train,
            validation,
            test,
        }
    }
}

impl Corpus {
    pub fn load(format: DatasetFormat, train: &Path, validation: &Path, test: &Path) -> Result<Self, LoadError> {
        Ok(Corpus {
            train: load(train, format, SplitName::Train)?,
            validation: load(validation, format, SplitName::Validation)?,
            test: load(test, format, SplitName::Test)?,
        })
    }

    pub fn splits(&self) -> [&DatasetSplit; 3] {
        [&self.train, &self.validation, &self.test]
    }

    /// Rule-based D2T and T2D models knowing every value in the corpus.
    pub fn rule_handles(&self) -> (ModelHandle, ModelHandle) {
        let kind = self.train.kind().unwrap_or(RecordKind::Tripleset);
        let lexicon = RuleLexicon::from_record_sets(kind, self.all_sources());
        (
            ModelHandle::rule_based(Direction::D2T, lexicon.clone()),
            ModelHandle::rule_based(Direction::T2D, lexicon),
        )
    }

    pub fn all_sources(&self) -> impl Iterator<Item = &RecordSet> {
        self.splits()
            .into_iter()
            .flat_map(|s| s.examples.iter().map(|e| &e.source))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("splits mix record kinds: {0} and {1}")]
    KindMismatch(RecordKind, RecordKind),
    #[error(transparent)]
    Allocation(SelectionError),
    #[error("epoch {epoch}: {source}")]
    Selection {
        epoch: usize,
        #[source]
        source: SelectionError,
    },
    #[error("epoch {epoch}, {step}: {source}")]
    Gateway {
        epoch: usize,
        step: &'static str,
        #[source]
        source: GatewayError,
    },
    #[error("{context}: {source}")]
    Metric {
        context: &'static str,
        #[source]
        source: MetricError,
    },
    #[error("all {0} epochs have already run")]
    Finished(usize),
    #[error("bootstrap has not run yet")]
    NotBootstrapped,
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Everything that happened in one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    /// 1-based.
    pub epoch: usize,
    /// Training indices drawn in step ①.
    pub indices: Vec<usize>,
    /// Empty for the bootstrap epoch and for the no-self-memory methods.
    pub tuples: Vec<SelfMemTuple>,
    pub verdicts: Vec<SelectionVerdict>,
    pub subset: Vec<Pair>,
    pub stats: SelectionStats,
    pub val_meteor_d2t: f64,
    pub val_osf_precision_t2d: f64,
    pub checkpoint_saved: bool,
    pub t2d_checkpoint_saved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCheckpoint {
    pub epoch: usize,
    pub score: f64,
    pub tag: String,
}

/// Strict-improvement bookkeeping for one model. Ties keep the earlier
/// checkpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointTracker {
    pub best: Option<BestCheckpoint>,
}

impl CheckpointTracker {
    pub fn improves(&self, score: f64) -> bool {
        self.best.as_ref().is_none_or(|b| score > b.score)
    }

    pub fn record(&mut self, epoch: usize, score: f64, tag: String) {
        self.best = Some(BestCheckpoint { epoch, score, tag });
    }
}

/// Wall-clock seconds per step of one epoch, keyed by step name.
pub type StepTimings = BTreeMap<String, f64>;

/// Counts of pairs in a subset by origin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginCounts {
    pub gold: usize,
    pub self_memory_y_prime: usize,
    pub self_memory_y_double_prime: usize,
    pub remaining: usize,
}

impl OriginCounts {
    pub fn of(pairs: &[Pair]) -> Self {
        let mut c = OriginCounts::default();
        for p in pairs {
            match p.origin() {
                Origin::Gold => c.gold += 1,
                Origin::SelfMemoryYPrime => c.self_memory_y_prime += 1,
                Origin::SelfMemoryYDoublePrime => c.self_memory_y_double_prime += 1,
                Origin::Remaining => c.remaining += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub drawn: usize,
    pub subset_size: usize,
    pub origins: OriginCounts,
    pub selection: SelectionStats,
    pub val_meteor_d2t: f64,
    pub val_osf_precision_t2d: f64,
    pub checkpoint_saved: bool,
    pub t2d_checkpoint_saved: bool,
}

impl From<&EpochTrace> for EpochSummary {
    fn from(t: &EpochTrace) -> Self {
        EpochSummary {
            epoch: t.epoch,
            drawn: t.indices.len(),
            subset_size: t.subset.len(),
            origins: OriginCounts::of(&t.subset),
            selection: t.stats,
            val_meteor_d2t: t.val_meteor_d2t,
            val_osf_precision_t2d: t.val_osf_precision_t2d,
            checkpoint_saved: t.checkpoint_saved,
            t2d_checkpoint_saved: t.t2d_checkpoint_saved,
        }
    }
}

/// Post-hoc check of every selection decision in a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub verdicts_checked: usize,
    pub verdicts_valid: usize,
    pub self_memory_pairs: usize,
    /// Self-memory pairs traced back to an accepted verdict that re-passes
    /// its conditions.
    pub self_memory_pairs_valid: usize,
}

impl AuditSummary {
    pub fn all_valid(&self) -> bool {
        self.verdicts_checked == self.verdicts_valid && self.self_memory_pairs == self.self_memory_pairs_valid
    }
}

/// Re-checks every verdict of a trace and traces each self-memory pair of
/// its subset back to the tuple that produced it.
pub fn audit_trace(trace: &EpochTrace, opts: SelectionOptions) -> AuditSummary {
    let mut summary = AuditSummary {
        verdicts_checked: trace.verdicts.len(),
        ..AuditSummary::default()
    };
    let fmt = LinearFormat::default();
    let mut accepted: HashMap<(String, String, Origin), bool> = HashMap::new();
    for (t, v) in trace.tuples.iter().zip(&trace.verdicts) {
        let ok = audit(t, v, opts);
        if ok {
            summary.verdicts_valid += 1;
        }
        let (Some(origin), Ok(src)) = (v.origin(), crate::linearize::linearize(&t.x, &fmt)) else {
            continue;
        };
        let target = match origin {
            Origin::SelfMemoryYDoublePrime => t.y_dprime.clone(),
            _ => t.y_prime.clone(),
        };
        if let Some(target) = target {
            let slot = accepted.entry((src, target, origin)).or_insert(false);
            *slot |= ok;
        }
    }
    for p in trace.subset.iter().filter(|p| p.origin().is_self_memory()) {
        summary.self_memory_pairs += 1;
        let key = (p.source_text.clone(), p.target_text.clone(), p.origin());
        if accepted.get(&key).copied().unwrap_or(false) {
            summary.self_memory_pairs_valid += 1;
        }
    }
    summary
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub kind: RecordKind,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub load_warnings: usize,
}

/// The deterministic part of a run's output. Timings are kept apart so
/// that identical runs produce identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub strategy: AllocationStrategy,
    pub dataset: DatasetSummary,
    pub checkpoint_cadence: String,
    pub epochs: Vec<EpochSummary>,
    pub best_d2t: Option<BestCheckpoint>,
    pub best_t2d: Option<BestCheckpoint>,
    pub test: MetricReport,
    pub selection: SelectionStats,
    pub audit: AuditSummary,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes the report and, next to it, the step timings.
    pub fn write(&self, path: &Path, timings: &[StepTimings]) -> Result<(), PipelineError> {
        let write = |p: &Path, body: String| {
            std::fs::write(p, body).map_err(|source| PipelineError::Write {
                path: p.to_path_buf(),
                source,
            })
        };
        write(path, self.to_json())?;
        let mut t = serde_json::to_string_pretty(timings).expect("timings serialize");
        t.push('\n');
        write(&timings_path(path), t)
    }
}

/// `report.json` → `report.timings.json`.
pub fn timings_path(report: &Path) -> PathBuf {
    report.with_extension("timings.json")
}

/// Written when an epoch aborts. All randomness is derived from the run
/// seed and the epoch number, so these fields are enough to restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResumeSnapshot {
    pub method: Method,
    pub seed: u64,
    pub failed_epoch: usize,
    pub completed_epochs: usize,
    pub best_d2t: Option<BestCheckpoint>,
    pub best_t2d: Option<BestCheckpoint>,
    pub error: String,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub traces: Vec<EpochTrace>,
    pub timings: Vec<StepTimings>,
}

/// One source with all of its gold targets.
#[derive(Debug, Clone)]
struct Grouped {
    source: RecordSet,
    source_text: String,
    references: Vec<String>,
}

fn group_by_source(examples: &[Example]) -> Vec<Grouped> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<Grouped> = Vec::new();
    for ex in examples {
        match index.get(ex.source_text.as_str()) {
            Some(&i) => groups[i].references.push(ex.target.clone()),
            None => {
                index.insert(&ex.source_text, groups.len());
                groups.push(Grouped {
                    source: ex.source.clone(),
                    source_text: ex.source_text.clone(),
                    references: vec![ex.target.clone()],
                });
            }
        }
    }
    groups
}

fn non_empty(text: String) -> Option<String> {
    let t = normalize_text(&text);
    (!t.is_empty()).then_some(t)
}

fn parse_records(text: &str, kind: RecordKind) -> Option<RecordSet> {
    delinearize(text, kind, &LinearFormat::default())
        .ok()
        .map(|d| d.records)
}

fn generate_all(handle: &mut ModelHandle, inputs: &[String], batch: usize) -> Result<Vec<String>, GatewayError> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(batch.max(1)) {
        out.extend(handle.generate_batch(chunk)?);
    }
    Ok(out)
}

fn train_all(handle: &mut ModelHandle, pairs: &[(String, String)], batch: usize) -> Result<(), GatewayError> {
    for chunk in pairs.chunks(batch.max(1)) {
        handle.train_batch(chunk)?;
    }
    Ok(())
}

/// `(first outputs, second outputs)`, `None` where a model produced nothing.
type ChainedOutputs = (Vec<Option<String>>, Vec<Option<String>>);

/// Runs `inputs` through `first` and the non-empty results through
/// `second`. The first model works on batch k+1 while the second handles
/// batch k.
fn generate_chained(
    first: &mut ModelHandle,
    second: &mut ModelHandle,
    inputs: &[String],
    batch: usize,
) -> Result<ChainedOutputs, (&'static str, GatewayError)> {
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::sync_channel::<Result<Vec<String>, GatewayError>>(2);
        scope.spawn(move || {
            for chunk in inputs.chunks(batch.max(1)) {
                let result = first.generate_batch(chunk);
                let failed = result.is_err();
                if tx.send(result).is_err() || failed {
                    break;
                }
            }
        });

        let mut firsts = Vec::with_capacity(inputs.len());
        let mut seconds = Vec::with_capacity(inputs.len());
        for result in rx {
            let outs: Vec<Option<String>> = result
                .map_err(|e| ("generating y'", e))?
                .into_iter()
                .map(non_empty)
                .collect();
            let present: Vec<String> = outs.iter().flatten().cloned().collect();
            let mut back = if present.is_empty() {
                Vec::new()
            } else {
                second.generate_batch(&present).map_err(|e| ("inferring x'", e))?
            }
            .into_iter();
            for o in &outs {
                seconds.push(o.as_ref().and_then(|_| back.next()).and_then(non_empty));
            }
            firsts.extend(outs);
        }
        Ok((firsts, seconds))
    })
}

pub struct Pipeline {
    cfg: RunConfig,
    corpus: Corpus,
    kind: RecordKind,
    plan: SubsetPlan,
    d2t: ModelHandle,
    t2d: ModelHandle,
    traces: Vec<EpochTrace>,
    timings: Vec<StepTimings>,
    best_d2t: CheckpointTracker,
    best_t2d: CheckpointTracker,
}

impl Pipeline {
    /// Checks the corpus and draws the epoch allocation.
    pub fn new(cfg: RunConfig, corpus: Corpus, d2t: ModelHandle, t2d: ModelHandle) -> Result<Self, PipelineError> {
        for split in corpus.splits() {
            split.require_non_empty()?;
        }
        let kind = corpus.train.kind().expect("non-empty");
        for split in [&corpus.validation, &corpus.test] {
            let k = split.kind().expect("non-empty");
            if k != kind {
                return Err(PipelineError::KindMismatch(kind, k));
            }
        }
        let plan = allocate(
            corpus.train.examples.len(),
            cfg.strategy(),
            cfg.ratio,
            cfg.epochs,
            cfg.seed,
        )
        .map_err(PipelineError::Allocation)?;
        Ok(Pipeline {
            cfg,
            corpus,
            kind,
            plan,
            d2t,
            t2d,
            traces: Vec::new(),
            timings: Vec::new(),
            best_d2t: CheckpointTracker::default(),
            best_t2d: CheckpointTracker::default(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn plan(&self) -> &SubsetPlan {
        &self.plan
    }

    pub fn traces(&self) -> &[EpochTrace] {
        &self.traces
    }

    pub fn timings(&self) -> &[StepTimings] {
        &self.timings
    }

    pub fn best_d2t(&self) -> Option<&BestCheckpoint> {
        self.best_d2t.best.as_ref()
    }

    pub fn best_t2d(&self) -> Option<&BestCheckpoint> {
        self.best_t2d.best.as_ref()
    }

    pub fn handles(&self) -> (&ModelHandle, &ModelHandle) {
        (&self.d2t, &self.t2d)
    }

    pub fn into_handles(self) -> (ModelHandle, ModelHandle) {
        (self.d2t, self.t2d)
    }

    fn gold(&self, indices: &[usize]) -> Vec<Example> {
        indices.iter().map(|&i| self.corpus.train.examples[i].clone()).collect()
    }

    fn train(&mut self, epoch: usize, subset: &[Pair], t2d_too: bool) -> Result<(), PipelineError> {
        let gateway = |step| move |source| PipelineError::Gateway { epoch, step, source };
        let forward: Vec<(String, String)> = subset
            .iter()
            .map(|p| (p.source_text.clone(), p.target_text.clone()))
            .collect();
        train_all(&mut self.d2t, &forward, self.cfg.batch_size).map_err(gateway("training D2T"))?;
        if t2d_too {
            let swapped: Vec<(String, String)> = subset.iter().map(Pair::swapped).collect();
            train_all(&mut self.t2d, &swapped, self.cfg.batch_size).map_err(gateway("training T2D"))?;
        }
        Ok(())
    }

    /// Epoch 1: trains D2T on the first block and T2D on its swap.
    pub fn bootstrap(&mut self) -> Result<&EpochTrace, PipelineError> {
        if !self.traces.is_empty() {
            return Err(PipelineError::Finished(self.traces.len()));
        }
        let mut timings = StepTimings::new();
        let clock = Instant::now();
        let indices = self.plan.epoch_indices[0].clone();
        let subset: Vec<Pair> = self
            .gold(&indices)
            .iter()
            .map(|e| Pair::new(&e.source_text, &e.target, Origin::Gold))
            .collect();
        self.train(1, &subset, true)?;
        timings.insert("0-bootstrap".into(), clock.elapsed().as_secs_f64());
        let trace = EpochTrace {
            epoch: 1,
            indices,
            tuples: Vec::new(),
            verdicts: Vec::new(),
            subset,
            stats: SelectionStats::default(),
            val_meteor_d2t: 0.0,
            val_osf_precision_t2d: 0.0,
            checkpoint_saved: false,
            t2d_checkpoint_saved: false,
        };
        self.finish_epoch(trace, timings)
    }

    /// Runs the next epoch after the bootstrap.
    pub fn run_epoch(&mut self) -> Result<&EpochTrace, PipelineError> {
        if self.traces.is_empty() {
            return Err(PipelineError::NotBootstrapped);
        }
        let epoch = self.traces.len() + 1;
        if epoch > self.cfg.epochs {
            return Err(PipelineError::Finished(self.cfg.epochs));
        }
        let mut timings = StepTimings::new();
        let mut clock = Instant::now();
        let mut lap = |timings: &mut StepTimings, step: &str| {
            timings.insert(step.to_string(), clock.elapsed().as_secs_f64());
            clock = Instant::now();
        };

        let indices = self.plan.epoch_indices[epoch - 1].clone();
        let gold = self.gold(&indices);
        lap(&mut timings, "1-draw");

        if !self.cfg.method.uses_self_memory() {
            let subset: Vec<Pair> = gold
                .iter()
                .map(|e| Pair::new(&e.source_text, &e.target, Origin::Gold))
                .collect();
            self.train(epoch, &subset, true)?;
            lap(&mut timings, "6-train");
            let trace = EpochTrace {
                epoch,
                indices,
                tuples: Vec::new(),
                verdicts: Vec::new(),
                subset,
                stats: SelectionStats::default(),
                val_meteor_d2t: 0.0,
                val_osf_precision_t2d: 0.0,
                checkpoint_saved: false,
                t2d_checkpoint_saved: false,
            };
            return self.finish_epoch(trace, timings);
        }

        let sources: Vec<String> = gold.iter().map(|e| e.source_text.clone()).collect();
        let (y_primes, x_prime_texts) = generate_chained(&mut self.d2t, &mut self.t2d, &sources, self.cfg.batch_size)
            .map_err(|(step, source)| PipelineError::Gateway { epoch, step, source })?;
        lap(&mut timings, "2-3-infer-y-prime-x-prime");

        let opts = OptimizeOptions {
            strict: self.cfg.selection.strict,
        };
        let mut tuples: Vec<SelfMemTuple> = Vec::with_capacity(gold.len());
        let mut changed: Vec<usize> = Vec::new();
        for (i, ((ex, yp), xp)) in gold.iter().zip(y_primes).zip(&x_prime_texts).enumerate() {
            let x_prime = xp.as_deref().and_then(|t| parse_records(t, self.kind));
            let y_dprime = yp.as_ref().map(|y| {
                let outcome = optimize_target(&ex.source, y, opts);
                if outcome.changed {
                    changed.push(i);
                    outcome.optimized
                } else {
                    y.clone()
                }
            });
            tuples.push(SelfMemTuple {
                x: ex.source.clone(),
                y: ex.target.clone(),
                y_prime: yp,
                x_dprime: x_prime.clone(),
                x_prime,
                y_dprime,
            });
        }
        if !changed.is_empty() {
            let inputs: Vec<String> = changed
                .iter()
                .map(|&i| tuples[i].y_dprime.clone().expect("changed implies present"))
                .collect();
            let outputs =
                generate_all(&mut self.t2d, &inputs, self.cfg.batch_size).map_err(|source| PipelineError::Gateway {
                    epoch,
                    step: "inferring x''",
                    source,
                })?;
            for (&i, out) in changed.iter().zip(outputs) {
                tuples[i].x_dprime = non_empty(out).and_then(|t| parse_records(&t, self.kind));
            }
        }
        lap(&mut timings, "4-optimize");

        let verdicts: Vec<SelectionVerdict> = tuples.iter().map(|t| judge_pair(t, self.cfg.selection)).collect();
        let reserve: Vec<Example> = self.gold(&self.plan.reserve(epoch - 1));
        let subset = build_subset(
            &gold,
            &tuples,
            &verdicts,
            indices.len(),
            derive_seed(self.cfg.seed, "epoch-subset", epoch as u64),
            &reserve,
            self.cfg.method.mix(),
        )
        .map_err(|source| PipelineError::Selection { epoch, source })?;
        lap(&mut timings, "5-select");

        self.train(epoch, &subset, self.cfg.method.self_trains_t2d())?;
        lap(&mut timings, "6-train");

        let trace = EpochTrace {
            epoch,
            indices,
            stats: SelectionStats::from_verdicts(&verdicts),
            tuples,
            verdicts,
            subset,
            val_meteor_d2t: 0.0,
            val_osf_precision_t2d: 0.0,
            checkpoint_saved: false,
            t2d_checkpoint_saved: false,
        };
        self.finish_epoch(trace, timings)
    }

    fn finish_epoch(&mut self, mut trace: EpochTrace, mut timings: StepTimings) -> Result<&EpochTrace, PipelineError> {
        let clock = Instant::now();
        let (meteor, osf_p) = self.validate(trace.epoch)?;
        trace.val_meteor_d2t = meteor;
        trace.val_osf_precision_t2d = osf_p;
        self.select_checkpoint(&mut trace)?;
        timings.insert("validate".into(), clock.elapsed().as_secs_f64());
        self.traces.push(trace);
        self.timings.push(timings);
        Ok(self.traces.last().expect("just pushed"))
    }

    /// D2T METEOR against all references per source, and micro-averaged
    /// OSF-precision of T2D run on the gold targets.
    pub fn validate(&mut self, epoch: usize) -> Result<(f64, f64), PipelineError> {
        let gateway = |step| move |source| PipelineError::Gateway { epoch, step, source };
        let groups = group_by_source(&self.corpus.validation.examples);
        let sources: Vec<String> = groups.iter().map(|g| g.source_text.clone()).collect();
        let candidates =
            generate_all(&mut self.d2t, &sources, self.cfg.batch_size).map_err(gateway("validating D2T"))?;
        let references: Vec<Vec<String>> = groups.iter().map(|g| g.references.clone()).collect();
        let meteor = meteor_corpus(&candidates, &references).map_err(|source| PipelineError::Metric {
            context: "validation METEOR",
            source,
        })?;

        let examples = &self.corpus.validation.examples;
        let targets: Vec<String> = examples.iter().map(|e| e.target.clone()).collect();
        let parsed = generate_all(&mut self.t2d, &targets, self.cfg.batch_size).map_err(gateway("validating T2D"))?;
        let mut counts = OsfCounts::default();
        for (ex, out) in examples.iter().zip(parsed) {
            let rec = parse_records(&out, self.kind);
            counts += osf_counts(&ex.source, rec.as_ref(), self.cfg.selection.strict).map_err(|source| {
                PipelineError::Metric {
                    context: "validation OSF",
                    source,
                }
            })?;
        }
        Ok((meteor, counts.score().precision))
    }

    /// Saves each model whose validation score strictly beats its best.
    pub fn select_checkpoint(&mut self, trace: &mut EpochTrace) -> Result<(), PipelineError> {
        let epoch = trace.epoch;
        let gateway = |step| move |source| PipelineError::Gateway { epoch, step, source };
        if self.best_d2t.improves(trace.val_meteor_d2t) {
            let tag = format!("d2t-epoch{epoch}");
            self.d2t
                .checkpoint(CheckpointAction::Save, &tag)
                .map_err(gateway("saving D2T checkpoint"))?;
            self.best_d2t.record(epoch, trace.val_meteor_d2t, tag);
            trace.checkpoint_saved = true;
        }
        if self.best_t2d.improves(trace.val_osf_precision_t2d) {
            let tag = format!("t2d-epoch{epoch}");
            self.t2d
                .checkpoint(CheckpointAction::Save, &tag)
                .map_err(gateway("saving T2D checkpoint"))?;
            self.best_t2d.record(epoch, trace.val_osf_precision_t2d, tag);
            trace.t2d_checkpoint_saved = true;
        }
        Ok(())
    }

    /// Loads the best checkpoints and scores D2T on the test split. OSF
    /// compares each source with T2D's reading of the generated text.
    pub fn evaluate_test(&mut self) -> Result<MetricReport, PipelineError> {
        let epoch = self.traces.len();
        let gateway = |step| move |source| PipelineError::Gateway { epoch, step, source };
        if let Some(b) = &self.best_d2t.best {
            self.d2t
                .checkpoint(CheckpointAction::Load, &b.tag)
                .map_err(gateway("loading best D2T"))?;
        }
        if let Some(b) = &self.best_t2d.best {
            self.t2d
                .checkpoint(CheckpointAction::Load, &b.tag)
                .map_err(gateway("loading best T2D"))?;
        }
        self.corpus.test.require_non_empty()?;
        let groups = group_by_source(&self.corpus.test.examples);
        let sources: Vec<String> = groups.iter().map(|g| g.source_text.clone()).collect();
        let candidates = generate_all(&mut self.d2t, &sources, self.cfg.batch_size).map_err(gateway("testing D2T"))?;
        let candidates: Vec<String> = candidates.into_iter().map(|c| normalize_text(&c)).collect();
        let present: Vec<String> = candidates.iter().filter(|c| !c.is_empty()).cloned().collect();
        let mut readings = if present.is_empty() {
            Vec::new()
        } else {
            generate_all(&mut self.t2d, &present, self.cfg.batch_size).map_err(gateway("testing T2D"))?
        }
        .into_iter();

        let items: Vec<EvalItem> = groups
            .into_iter()
            .zip(candidates)
            .map(|(g, candidate)| {
                let reading = if candidate.is_empty() { None } else { readings.next() };
                EvalItem {
                    reconstructed: Some(reading.and_then(|r| parse_records(&r, self.kind))),
                    candidate,
                    references: g.references,
                    source: Some(g.source),
                }
            })
            .collect();
        MetricReport::compute(&items).map_err(|source| PipelineError::Metric {
            context: "test metrics",
            source,
        })
    }

    fn snapshot(&self, error: &PipelineError) -> ResumeSnapshot {
        ResumeSnapshot {
            method: self.cfg.method,
            seed: self.cfg.seed,
            failed_epoch: self.traces.len() + 1,
            completed_epochs: self.traces.len(),
            best_d2t: self.best_d2t.best.clone(),
            best_t2d: self.best_t2d.best.clone(),
            error: error.to_string(),
        }
    }

    /// Runs every epoch and the test evaluation. If an epoch fails and
    /// `resume_path` is given, a [`ResumeSnapshot`] is written there before
    /// the error is returned.
    pub fn run(
        mut self,
        resume_path: Option<&Path>,
    ) -> Result<(RunOutcome, (ModelHandle, ModelHandle)), PipelineError> {
        let result = (|| {
            self.bootstrap()?;
            while self.traces.len() < self.cfg.epochs {
                self.run_epoch()?;
            }
            Ok(())
        })();
        if let Err(e) = result {
            if let Some(path) = resume_path {
                let body = serde_json::to_string_pretty(&self.snapshot(&e)).expect("snapshot serializes");
                std::fs::write(path, body + "\n").map_err(|source| PipelineError::Write {
                    path: path.to_path_buf(),
                    source,
                })?;
            }
            return Err(e);
        }

        let clock = Instant::now();
        let test = self.evaluate_test()?;
        if let Some(last) = self.timings.last_mut() {
            last.insert("test".into(), clock.elapsed().as_secs_f64());
        }

        let mut selection = SelectionStats::default();
        let mut audit = AuditSummary::default();
        for t in &self.traces {
            selection.merge(&t.stats);
            let a = audit_trace(t, self.cfg.selection);
            audit.verdicts_checked += a.verdicts_checked;
            audit.verdicts_valid += a.verdicts_valid;
            audit.self_memory_pairs += a.self_memory_pairs;
            audit.self_memory_pairs_valid += a.self_memory_pairs_valid;
        }
        let report = RunReport {
            config: self.cfg.clone(),
            strategy: self.plan.strategy,
            dataset: DatasetSummary {
                kind: self.kind,
                train: self.corpus.train.examples.len(),
                validation: self.corpus.validation.examples.len(),
                test: self.corpus.test.examples.len(),
                load_warnings: self.corpus.splits().iter().map(|s| s.load_warnings.len()).sum(),
            },
            checkpoint_cadence: "validated and checkpointed once per epoch, after training".into(),
            epochs: self.traces.iter().map(EpochSummary::from).collect(),
            best_d2t: self.best_d2t.best.clone(),
            best_t2d: self.best_t2d.best.clone(),
            test,
            selection,
            audit,
        };
        let outcome = RunOutcome {
            report,
            traces: std::mem::take(&mut self.traces),
            timings: std::mem::take(&mut self.timings),
        };
        Ok((outcome, (self.d2t, self.t2d)))
    }
}
