use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use stsm::dataset::{format_mr, parse_mr_set, parse_tripleset, tripleset_json, DatasetFormat};
use stsm::gateway::{DecodeLimits, Direction, ModelHandle};
use stsm::linearize::{delinearize, linearize, LinearFormat};
use stsm::metrics::{EvalItem, MetricReport};
use stsm::optimize::{optimize_target, OptimizeOptions};
use stsm::pipeline::{Corpus, DataRegime, Method, Pipeline, RunConfig};
use stsm::record::{RecordKind, RecordSet};
use stsm::synthetic::desk_corpus;

#[derive(Parser)]
#[command(
    name = "stsm",
    version,
    about = "Self-training data-to-text pipeline and evaluation tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Dart,
    E2e,
    /// The bundled seeded corpus; no paths needed.
    Synthetic,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Triple,
    Mr,
}

impl From<KindArg> for RecordKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Triple => RecordKind::Tripleset,
            KindArg::Mr => RecordKind::MrSet,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DataArg {
    Fixed,
    Random,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full self-training loop and write a JSON report.
    Run {
        #[arg(long, value_enum, default_value = "synthetic")]
        dataset: DatasetArg,
        #[arg(long, required_if_eq_any = [("dataset", "dart"), ("dataset", "e2e")])]
        train: Option<PathBuf>,
        #[arg(long, required_if_eq_any = [("dataset", "dart"), ("dataset", "e2e")])]
        val: Option<PathBuf>,
        #[arg(long, required_if_eq_any = [("dataset", "dart"), ("dataset", "e2e")])]
        test: Option<PathBuf>,
        /// One of: no-self-mem-1, no-self-mem-2, no-self-mem-3, self-mem,
        /// self-mem+self-t2d, self-mem+new-data, self-mem+new-data+self-t2d.
        #[arg(long, value_parser = parse_method)]
        method: Method,
        /// Fixed blocks or a fresh random sample per epoch (self-memory methods).
        #[arg(long, value_enum, default_value = "fixed")]
        data: DataArg,
        #[arg(long, default_value_t = 0.3)]
        ratio: f64,
        #[arg(long, default_value_t = 3)]
        epochs: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 256)]
        max_len: u32,
        #[arg(long, default_value_t = 4)]
        min_len: u32,
        /// `host:port` of an external D2T model server; rule-based if absent.
        #[arg(long)]
        d2t_endpoint: Option<String>,
        /// `host:port` of an external T2D model server; rule-based if absent.
        #[arg(long)]
        t2d_endpoint: Option<String>,
        #[arg(long)]
        report: PathBuf,
        /// Where to write a snapshot if an epoch fails.
        #[arg(long)]
        resume_file: Option<PathBuf>,
    },
    /// Score hypotheses against references.
    Eval {
        /// One hypothesis per line.
        #[arg(long)]
        hyp: PathBuf,
        /// One line per hypothesis; several references separated by tabs.
        #[arg(long = "ref")]
        refs: PathBuf,
        /// Linearized sources, one per line, to enable EPM.
        #[arg(long)]
        sources: Option<PathBuf>,
        /// Linearized text-to-data readings of the hypotheses, to enable OSF.
        #[arg(long, requires = "sources")]
        reconstructed: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "triple")]
        kind: KindArg,
        /// Report scores on a 0-100 scale.
        #[arg(long)]
        percent: bool,
    },
    /// Drop redundant sentences from a target while keeping every source value.
    Optimize {
        /// Linearized source.
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value = "triple")]
        kind: KindArg,
        #[arg(long)]
        strict: bool,
        /// Print the full outcome as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Record sets on stdin (JSON triple lists or `key[value]` MR strings),
    /// linearized text on stdout.
    Linearize {
        #[arg(long, value_enum, default_value = "triple")]
        kind: KindArg,
    },
    /// The inverse of `linearize`.
    Delinearize {
        #[arg(long, value_enum, default_value = "triple")]
        kind: KindArg,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

type AnyError = Box<dyn std::error::Error>;

fn read_lines(path: &PathBuf) -> Result<Vec<String>, AnyError> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn parse_source(line: &str, kind: RecordKind) -> Result<RecordSet, AnyError> {
    Ok(delinearize(line, kind, &LinearFormat::default())?.records)
}

fn run_cmd(cmd: Cmd) -> Result<(), AnyError> {
    match cmd {
        Cmd::Run {
            dataset,
            train,
            val,
            test,
            method,
            data,
            ratio,
            epochs,
            seed,
            batch_size,
            max_len,
            min_len,
            d2t_endpoint,
            t2d_endpoint,
            report,
            resume_file,
        } => {
            let corpus: Corpus = match dataset {
                DatasetArg::Synthetic => desk_corpus().into(),
                DatasetArg::Dart | DatasetArg::E2e => {
                    let format = if matches!(dataset, DatasetArg::Dart) {
                        DatasetFormat::Dart
                    } else {
                        DatasetFormat::E2e
                    };
                    let need = |p: Option<PathBuf>| p.expect("clap enforces paths");
                    Corpus::load(format, &need(train), &need(val), &need(test))?
                }
            };
            for split in corpus.splits() {
                for w in &split.load_warnings {
                    eprintln!("warning: {}: {w}", split.name);
                }
            }
            let limits = DecodeLimits { max_len, min_len };
            let (rule_d2t, rule_t2d) = corpus.rule_handles();
            let d2t = match d2t_endpoint {
                Some(ep) => ModelHandle::external(Direction::D2T, ep),
                None => rule_d2t,
            }
            .with_limits(limits);
            let t2d = match t2d_endpoint {
                Some(ep) => ModelHandle::external(Direction::T2D, ep),
                None => rule_t2d,
            }
            .with_limits(limits);

            let mut cfg = RunConfig::new(method);
            cfg.data = match data {
                DataArg::Fixed => DataRegime::Fixed,
                DataArg::Random => DataRegime::Random,
            };
            cfg.ratio = ratio;
            cfg.epochs = epochs;
            cfg.seed = seed;
            cfg.batch_size = batch_size;

            let (outcome, _) = Pipeline::new(cfg, corpus, d2t, t2d)?.run(resume_file.as_deref())?;
            outcome.report.write(&report, &outcome.timings)?;
            for e in &outcome.report.epochs {
                println!(
                    "epoch {}: {} pairs, case1 {}, case2 {}, rejected {}, val meteor {:.4}, val osf-p {:.4}{}",
                    e.epoch,
                    e.subset_size,
                    e.selection.accepted_case1,
                    e.selection.accepted_case2,
                    e.selection.rejected,
                    e.val_meteor_d2t,
                    e.val_osf_precision_t2d,
                    if e.checkpoint_saved { " (saved)" } else { "" }
                );
            }
            let t = &outcome.report.test;
            println!(
                "test: bleu {:.4} meteor {:.4} rouge-l {:.4} ter {:.4} epm {:.4}",
                t.bleu,
                t.meteor,
                t.rouge_l,
                t.ter,
                t.epm.unwrap_or(0.0)
            );
            println!("report written to {}", report.display());
        }
        Cmd::Eval {
            hyp,
            refs,
            sources,
            reconstructed,
            kind,
            percent,
        } => {
            let kind = RecordKind::from(kind);
            let hyps = read_lines(&hyp)?;
            let refs = read_lines(&refs)?;
            if hyps.len() != refs.len() {
                return Err(format!("{} hypotheses but {} reference lines", hyps.len(), refs.len()).into());
            }
            let sources = sources.map(|p| read_lines(&p)).transpose()?;
            let readings = reconstructed.map(|p| read_lines(&p)).transpose()?;
            for (name, lines) in [("sources", &sources), ("reconstructed", &readings)] {
                if let Some(l) = lines {
                    if l.len() != hyps.len() {
                        return Err(format!("{} {name} lines for {} hypotheses", l.len(), hyps.len()).into());
                    }
                }
            }
            let mut items = Vec::with_capacity(hyps.len());
            for (i, (candidate, r)) in hyps.into_iter().zip(refs).enumerate() {
                let source = match &sources {
                    Some(s) => Some(parse_source(&s[i], kind).map_err(|e| format!("source line {}: {e}", i + 1))?),
                    None => None,
                };
                items.push(EvalItem {
                    candidate,
                    references: r.split('\t').map(str::to_string).collect(),
                    source,
                    reconstructed: readings.as_ref().map(|l| parse_source(&l[i], kind).ok()),
                });
            }
            let report = MetricReport::compute(&items)?;
            let report = if percent { report.as_percent() } else { report };
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Cmd::Optimize {
            source,
            target,
            kind,
            strict,
            json,
        } => {
            let x = parse_source(&source, kind.into())?;
            let outcome = optimize_target(&x, &target, OptimizeOptions { strict });
            if json {
                println!("{}", serde_json::to_string_pretty(&outcome)?);
            } else {
                println!("{}", outcome.optimized);
            }
        }
        Cmd::Linearize { kind } => {
            let fmt = LinearFormat::default();
            let mut out = io::stdout().lock();
            for (i, line) in io::stdin().lock().lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rs = match kind {
                    KindArg::Triple => parse_tripleset(&serde_json::from_str(&line)?),
                    KindArg::Mr => parse_mr_set(&line),
                }
                .map_err(|e| format!("line {}: {e}", i + 1))?;
                writeln!(out, "{}", linearize(&rs, &fmt)?)?;
            }
        }
        Cmd::Delinearize { kind } => {
            let fmt = LinearFormat::default();
            let mut out = io::stdout().lock();
            for (i, line) in io::stdin().lock().lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed = delinearize(&line, kind.into(), &fmt).map_err(|e| format!("line {}: {e}", i + 1))?;
                if parsed.dropped > 0 {
                    eprintln!("line {}: dropped {} malformed segment(s)", i + 1, parsed.dropped);
                }
                match kind {
                    KindArg::Triple => writeln!(out, "{}", tripleset_json(&parsed.records))?,
                    KindArg::Mr => writeln!(out, "{}", format_mr(&parsed.records))?,
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run_cmd(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
