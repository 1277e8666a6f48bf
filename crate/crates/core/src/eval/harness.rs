//! Runs datasets through a context strategy and aggregates metrics.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::chunker::{ChunkConfig, ExtensionFilter};
use crate::context::{AssemblyOptions, ContextEngine, RetrievalConfig};
use crate::error::Result;
use crate::eval::dataset::EvalRecord;
use crate::eval::metrics::{chrf, context_recall, DEFAULT_CHRF_BETA, DEFAULT_CHRF_ORDER};
use crate::semantic::Embedder;

/// Everything an ablation can toggle.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub name: String,
    pub chunking: ChunkConfig,
    pub retrieval: RetrievalConfig,
    pub assembly: AssemblyOptions,
}

impl Strategy {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            chunking: ChunkConfig::default(),
            retrieval: RetrievalConfig::default(),
            assembly: AssemblyOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.chunking.validate()?;
        self.retrieval.validate()
    }

    fn variant(&self, suffix: &str, edit: impl FnOnce(&mut Strategy)) -> Strategy {
        let mut s = self.clone();
        s.name = format!("{}/{suffix}", self.name);
        edit(&mut s);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordMetrics {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chrf: Option<f64>,
    pub context_recall: Option<f64>,
    pub context_size_chars: Option<usize>,
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RecordMetrics {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub strategy: String,
    pub records: Vec<RecordMetrics>,
    /// Means over records that did not fail; absent when nothing to average.
    pub mean_chrf: Option<f64>,
    pub mean_context_recall: Option<f64>,
    pub mean_context_size_chars: Option<f64>,
    pub mean_wall_time_ms: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl EvalReport {
    fn from_records(strategy: &str, records: Vec<RecordMetrics>) -> Self {
        let ok = || records.iter().filter(|r| !r.failed());
        Self {
            strategy: strategy.to_owned(),
            mean_chrf: mean(ok().filter_map(|r| r.chrf)),
            mean_context_recall: mean(ok().filter_map(|r| r.context_recall)),
            mean_context_size_chars: mean(ok().filter_map(|r| r.context_size_chars.map(|s| s as f64))),
            mean_wall_time_ms: mean(ok().map(|r| r.wall_time_ms)),
            records,
        }
    }

    pub fn failed_count(&self) -> usize {
        self.records.iter().filter(|r| r.failed()).count()
    }

    /// The report with every timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut report = self.clone();
        for r in &mut report.records {
            r.wall_time_ms = 0.0;
        }
        if report.mean_wall_time_ms.is_some() {
            report.mean_wall_time_ms = Some(0.0);
        }
        report
    }
}

/// Builds a context for every record with `engine`, which must have been
/// indexed with `strategy.chunking`. A record that errors is marked failed and
/// the run continues.
pub fn run_eval(engine: &ContextEngine, dataset: &[EvalRecord], strategy: &Strategy) -> EvalReport {
    let records = dataset
        .iter()
        .enumerate()
        .map(|(index, record)| {
            let started = Instant::now();
            let mut query = record.query.clone();
            if query.repo_id.is_empty() {
                query.repo_id = engine.repo_id().to_owned();
            }
            let built = engine.build_context(&query, &strategy.retrieval, &strategy.assembly);
            let wall_time_ms = started.elapsed().as_secs_f64() * 1000.0;
            match built {
                Ok(context) => RecordMetrics {
                    index,
                    chrf: record
                        .model_output
                        .as_deref()
                        .map(|out| chrf(&record.middle, out, DEFAULT_CHRF_ORDER, DEFAULT_CHRF_BETA)),
                    context_recall: Some(context_recall(&context.rendered, &record.middle)),
                    context_size_chars: Some(context.size),
                    wall_time_ms,
                    error: None,
                },
                Err(err) => RecordMetrics {
                    index,
                    chrf: None,
                    context_recall: None,
                    context_size_chars: None,
                    wall_time_ms,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect();
    EvalReport::from_records(&strategy.name, records)
}

/// The sweep run by `ablate`: the full strategy, each section removed in turn,
/// neighbors detached, each retriever alone, and smaller/larger k and chunks.
pub fn ablation_strategies(base: &Strategy) -> Vec<Strategy> {
    let k = base.retrieval.k;
    let n = base.chunking.chunk_lines;
    let m = base.chunking.overlap_lines;
    vec![
        base.clone(),
        base.variant("no-completion-file", |s| s.assembly.include_completion_file = false),
        base.variant("no-recent-files", |s| s.assembly.include_recent_files = false),
        base.variant("no-prefix-hits", |s| s.assembly.include_prefix_hits = false),
        base.variant("no-suffix-hits", |s| s.assembly.include_suffix_hits = false),
        base.variant("no-neighbors", |s| s.assembly.attach_neighbors = false),
        base.variant("lexical-only", |s| s.retrieval.fusion.weights = vec![1.0, 0.0]),
        base.variant("semantic-only", |s| s.retrieval.fusion.weights = vec![0.0, 1.0]),
        base.variant(&format!("k={}", (k / 2).max(1)), |s| s.retrieval.k = (k / 2).max(1)),
        base.variant(&format!("k={}", k * 2), |s| s.retrieval.k = k * 2),
        base.variant(&format!("chunks={}/{}", n / 2, m / 2), |s| {
            s.chunking = ChunkConfig {
                chunk_lines: (n / 2).max(m / 2 + 1),
                overlap_lines: m / 2,
            }
        }),
        base.variant(&format!("chunks={}/{}", n * 2, m * 2), |s| {
            s.chunking = ChunkConfig {
                chunk_lines: n * 2,
                overlap_lines: m * 2,
            }
        }),
    ]
}

/// Runs each strategy, indexing the repository once per distinct chunking.
pub fn run_ablation(
    repo_root: &Path,
    filter: &ExtensionFilter,
    dataset: &[EvalRecord],
    strategies: &[Strategy],
    make_embedder: &dyn Fn() -> Result<Box<dyn Embedder>>,
) -> Result<Vec<EvalReport>> {
    for strategy in strategies {
        strategy.validate()?;
    }
    let mut engines: BTreeMap<(usize, usize), ContextEngine> = BTreeMap::new();
    let mut reports = Vec::with_capacity(strategies.len());
    for strategy in strategies {
        let key = (strategy.chunking.chunk_lines, strategy.chunking.overlap_lines);
        let engine = match engines.entry(key) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(ContextEngine::index_repository(
                repo_root,
                filter,
                &strategy.chunking,
                make_embedder()?,
                RetrievalConfig::default(),
            )?),
        };
        reports.push(run_eval(engine, dataset, strategy));
    }
    Ok(reports)
}

#[derive(Serialize)]
struct RecordLine<'a> {
    strategy: &'a str,
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    chrf: Option<f64>,
    context_recall: Option<f64>,
    context_size_chars: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    strategy: &'a str,
    summary: bool,
    records: usize,
    failed: usize,
    mean_chrf: Option<f64>,
    mean_context_recall: Option<f64>,
    mean_context_size_chars: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_wall_time_ms: Option<f64>,
}

/// One JSON line per record followed by one summary line per report. Timings
/// are written only when `with_timing` is set, so that reruns are
/// byte-identical by default.
pub fn write_report<W: Write>(reports: &[EvalReport], with_timing: bool, mut out: W) -> std::io::Result<()> {
    for report in reports {
        for r in &report.records {
            let line = RecordLine {
                strategy: &report.strategy,
                index: r.index,
                chrf: r.chrf,
                context_recall: r.context_recall,
                context_size_chars: r.context_size_chars,
                wall_time_ms: with_timing.then_some(r.wall_time_ms),
                error: r.error.as_deref(),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        let summary = SummaryLine {
            strategy: &report.strategy,
            summary: true,
            records: report.records.len(),
            failed: report.failed_count(),
            mean_chrf: report.mean_chrf,
            mean_context_recall: report.mean_context_recall,
            mean_context_size_chars: report.mean_context_size_chars,
            mean_wall_time_ms: report.mean_wall_time_ms.filter(|_| with_timing),
        };
        serde_json::to_writer(&mut out, &summary)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn summary_table(reports: &[EvalReport]) -> String {
    let fmt_opt = |v: Option<f64>, digits: usize| match v {
        Some(v) => format!("{v:.digits$}"),
        None => "-".to_owned(),
    };
    let width = reports
        .iter()
        .map(|r| r.strategy.len())
        .max()
        .unwrap_or(0)
        .max("strategy".len());
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:<width$}  {:>7}  {:>6}  {:>6}  {:>8}  {:>10}  {:>8}",
        "strategy", "records", "failed", "chrf", "recall", "size", "ms"
    );
    for r in reports {
        let _ = writeln!(
            table,
            "{:<width$}  {:>7}  {:>6}  {:>6}  {:>8}  {:>10}  {:>8}",
            r.strategy,
            r.records.len(),
            r.failed_count(),
            fmt_opt(r.mean_chrf, 3),
            fmt_opt(r.mean_context_recall, 4),
            fmt_opt(r.mean_context_size_chars, 0),
            fmt_opt(r.mean_wall_time_ms, 1),
        );
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::ChunkStore;
    use crate::lexical::Bm25Params;
    use crate::semantic::HashingEmbedder;

    fn empty_engine() -> ContextEngine {
        ContextEngine::new(
            "repo",
            ChunkStore::default(),
            Box::new(HashingEmbedder::default()),
            Bm25Params::default(),
            RetrievalConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn empty_dataset_has_no_means() {
        let report = run_eval(&empty_engine(), &[], &Strategy::new("full"));
        assert!(report.records.is_empty());
        assert_eq!(report.mean_context_recall, None);
        assert_eq!(report.mean_chrf, None);
        assert_eq!(report.mean_wall_time_ms, None);
    }

    #[test]
    fn sweep_names_are_unique() {
        let sweep = ablation_strategies(&Strategy::new("full"));
        let mut names: Vec<_> = sweep.iter().map(|s| s.name.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), sweep.len());
        assert!(sweep.iter().all(|s| s.validate().is_ok()));
    }

    #[test]
    fn report_lines_without_timing() {
        let report = EvalReport::from_records(
            "s",
            vec![RecordMetrics {
                index: 0,
                chrf: None,
                context_recall: Some(0.5),
                context_size_chars: Some(10),
                wall_time_ms: 3.25,
                error: None,
            }],
        );
        let mut buf = Vec::new();
        write_report(std::slice::from_ref(&report), false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("wall_time"));
        assert_eq!(text.lines().count(), 2);
        assert!(summary_table(&[report]).contains("0.5000"));
    }
}
