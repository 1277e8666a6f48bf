//! Command-line surface: `index`, `query`, `assemble`, `eval`, `synth` and
//! `ablate`.
//!
//! Exit codes are 0 on success, 1 on usage or configuration errors and 2 on
//! runtime errors. Every error is printed to stderr as a single line starting
//! with `error: <category>:`.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::chunker::{chunk_repository, ChunkConfig, ExtensionFilter, DEFAULT_EXTENSIONS};
use crate::context::{
    AssemblyOptions, CompletionQuery, ContextEngine, NeighborOrder, RecentFile, RetrievalConfig,
    Side,
};
use crate::error::{Error, Result};
use crate::eval::{
    ablation_strategies, generate_synthetic_repo, load_dataset, run_ablation, run_eval,
    save_dataset, summary_table, write_report, Strategy, SynthConfig,
};
use crate::fusion::FusionConfig;
use crate::lexical::Bm25Params;
use crate::semantic::{Embedder, HashingEmbedder, RemoteEmbedder, DEFAULT_REMOTE_TIMEOUT};
use crate::store::ChunkStore;

#[derive(Debug, Parser)]
#[command(name = "repoctx", version, about = "Repository context collection for code completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chunk a repository and write the chunk-store file.
    Index {
        repo_root: PathBuf,
        store: PathBuf,
        #[command(flatten)]
        chunking: ChunkArgs,
        #[command(flatten)]
        embedder: EmbedderArgs,
    },
    /// Print the fused hits for a prefix and suffix.
    Query {
        store: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[command(flatten)]
        embedder: EmbedderArgs,
    },
    /// Print the rendered context for a completion point.
    Assemble {
        store: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[command(flatten)]
        assembly: AssemblyArgs,
        #[command(flatten)]
        embedder: EmbedderArgs,
    },
    /// Evaluate a dataset against an indexed store and write a metrics report.
    Eval {
        store: PathBuf,
        dataset: PathBuf,
        report: PathBuf,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[command(flatten)]
        assembly: AssemblyArgs,
        #[command(flatten)]
        embedder: EmbedderArgs,
        /// Include per-record wall times in the report file.
        #[arg(long)]
        timings: bool,
    },
    /// Generate a synthetic repository (OUT/repo) and dataset (OUT/dataset.jsonl).
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        files: usize,
        #[arg(long, default_value_t = 40)]
        patterns: usize,
        /// Library copies of each pattern.
        #[arg(long, default_value_t = 6)]
        copies: usize,
    },
    /// Run the strategy sweep over a repository and dataset.
    Ablate {
        repo_root: PathBuf,
        dataset: PathBuf,
        report: PathBuf,
        #[command(flatten)]
        chunking: ChunkArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[command(flatten)]
        assembly: AssemblyArgs,
        #[command(flatten)]
        embedder: EmbedderArgs,
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Debug, Args)]
struct ChunkArgs {
    #[arg(long, default_value_t = crate::chunker::DEFAULT_CHUNK_LINES)]
    chunk_lines: usize,
    #[arg(long, default_value_t = crate::chunker::DEFAULT_OVERLAP_LINES)]
    overlap_lines: usize,
    /// File extensions to index.
    #[arg(long = "ext", value_delimiter = ',', default_values_t = DEFAULT_EXTENSIONS.map(String::from))]
    extensions: Vec<String>,
}

impl ChunkArgs {
    fn config(&self) -> Result<ChunkConfig> {
        ChunkConfig::new(self.chunk_lines, self.overlap_lines)
    }
}

#[derive(Debug, Args)]
struct RetrievalArgs {
    #[arg(long, default_value_t = crate::fusion::DEFAULT_LEXICAL_WEIGHT)]
    w_lexical: f64,
    #[arg(long, default_value_t = crate::fusion::DEFAULT_SEMANTIC_WEIGHT)]
    w_semantic: f64,
    #[arg(long, default_value_t = crate::fusion::DEFAULT_RRF_K)]
    rrf_k: f64,
    /// Candidates per retriever and length of each fused list.
    #[arg(long, default_value_t = crate::fusion::DEFAULT_FUSION_TOP_N)]
    fusion_top_n: usize,
    /// Hits kept per side.
    #[arg(long, default_value_t = crate::context::DEFAULT_K)]
    k: usize,
}

impl RetrievalArgs {
    fn config(&self) -> Result<RetrievalConfig> {
        let config = RetrievalConfig {
            fusion: FusionConfig {
                weights: vec![self.w_lexical, self.w_semantic],
                rrf_k: self.rrf_k,
                top_n: self.fusion_top_n,
            },
            candidate_pool: self.fusion_top_n,
            k: self.k,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NeighborOrderArg {
    SimilarFirst,
    NeighborFirst,
}

#[derive(Debug, Args)]
struct AssemblyArgs {
    #[arg(long, default_value_t = crate::context::DEFAULT_BUDGET_CHARS)]
    budget_chars: usize,
    #[arg(long, value_enum, default_value = "similar-first")]
    neighbor_order: NeighborOrderArg,
    #[arg(long)]
    no_completion_file: bool,
    #[arg(long)]
    no_recent_files: bool,
    #[arg(long)]
    no_prefix_hits: bool,
    #[arg(long)]
    no_suffix_hits: bool,
    /// Leave out the next/prev neighbor of each hit.
    #[arg(long)]
    no_neighbors: bool,
}

impl AssemblyArgs {
    fn options(&self) -> Result<AssemblyOptions> {
        if self.budget_chars == 0 {
            return Err(Error::Config("budget-chars must be positive".into()));
        }
        Ok(AssemblyOptions {
            include_completion_file: !self.no_completion_file,
            include_recent_files: !self.no_recent_files,
            include_prefix_hits: !self.no_prefix_hits,
            include_suffix_hits: !self.no_suffix_hits,
            attach_neighbors: !self.no_neighbors,
            neighbor_order: match self.neighbor_order {
                NeighborOrderArg::SimilarFirst => NeighborOrder::SimilarFirst,
                NeighborOrderArg::NeighborFirst => NeighborOrder::NeighborFirst,
            },
            budget_chars: self.budget_chars,
        })
    }
}

#[derive(Debug, Args)]
struct EmbedderArgs {
    /// `hashing`, or the base URL of an embedding service.
    #[arg(long, default_value = "hashing")]
    embedder: String,
    #[arg(long, default_value_t = crate::semantic::DEFAULT_DIMENSION)]
    dim: usize,
    /// Remote embedder timeout in seconds.
    #[arg(long, default_value_t = DEFAULT_REMOTE_TIMEOUT.as_secs())]
    embed_timeout: u64,
}

impl EmbedderArgs {
    fn build(&self) -> Result<Box<dyn Embedder>> {
        if self.embedder == "hashing" {
            Ok(Box::new(HashingEmbedder::new(self.dim)?))
        } else {
            Ok(Box::new(RemoteEmbedder::new(
                &self.embedder,
                self.dim,
                Duration::from_secs(self.embed_timeout),
            )?))
        }
    }

    fn validate(&self) -> Result<()> {
        self.build().map(drop)
    }
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long, conflicts_with = "prefix_file")]
    prefix: Option<String>,
    #[arg(long)]
    prefix_file: Option<PathBuf>,
    #[arg(long, conflicts_with = "suffix_file")]
    suffix: Option<String>,
    #[arg(long)]
    suffix_file: Option<PathBuf>,
    /// File holding the completion file's current content.
    #[arg(long)]
    completion_file: Option<PathBuf>,
    /// Repository-relative path of the completion file; defaults to
    /// `--completion-file` as given.
    #[arg(long)]
    completion_path: Option<String>,
    /// Recently opened files, in order.
    #[arg(long = "recent")]
    recent: Vec<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl QueryArgs {
    fn query(&self, repo_id: &str) -> Result<CompletionQuery> {
        let text = |inline: &Option<String>, file: &Option<PathBuf>| -> Result<String> {
            match (inline, file) {
                (Some(t), _) => Ok(t.clone()),
                (None, Some(p)) => read_text(p),
                (None, None) => Ok(String::new()),
            }
        };
        let completion_file_content = match &self.completion_file {
            Some(p) => read_text(p)?,
            None => String::new(),
        };
        let completion_file_path = self.completion_path.clone().unwrap_or_else(|| {
            self.completion_file
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        });
        let recent_files = self
            .recent
            .iter()
            .map(|p| {
                Ok(RecentFile {
                    path: p.display().to_string(),
                    content: read_text(p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompletionQuery {
            prefix: text(&self.prefix, &self.prefix_file)?,
            suffix: text(&self.suffix, &self.suffix_file)?,
            completion_file_path,
            completion_file_content,
            recent_files,
            repo_id: repo_id.to_owned(),
        })
    }
}

enum Failure {
    Usage(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure::Runtime(err)
    }
}

fn usage<T>(result: Result<T>) -> std::result::Result<T, Failure> {
    result.map_err(Failure::Usage)
}

fn write_out(out: &mut dyn Write, text: &str) -> std::result::Result<(), Failure> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::Runtime(Error::io("<stdout>", e)))
}

fn open_engine(store_path: &Path, embedder: Box<dyn Embedder>, retrieval: RetrievalConfig) -> Result<ContextEngine> {
    let store = ChunkStore::load(store_path)?;
    ContextEngine::new(
        store_path.display().to_string(),
        store,
        embedder,
        Bm25Params::default(),
        retrieval,
    )
}

fn write_report_file(path: &Path, reports: &[crate::eval::EvalReport], timings: bool) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_report(reports, timings, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

fn execute(cli: Cli, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Index {
            repo_root,
            store,
            chunking,
            embedder,
        } => {
            let config = usage(chunking.config())?;
            let embedder = usage(embedder.build())?;
            let filter = ExtensionFilter::new(&chunking.extensions);
            let repo = chunk_repository(&repo_root, &filter, &config)?;
            let (files_indexed, files_skipped) = (repo.files_indexed, repo.files_skipped);
            let chunk_store = ChunkStore::put_all(repo.chunks)?;
            chunk_store.save(&store)?;
            let engine = ContextEngine::new(
                repo_root.display().to_string(),
                chunk_store,
                embedder,
                Bm25Params::default(),
                RetrievalConfig::default(),
            )?;
            let stats = format!(
                "files indexed: {files_indexed}\nfiles skipped: {files_skipped}\nchunks: {}\nvocabulary: {}\nvectors: {} x {}\nstore: {}\n",
                engine.store().len(),
                engine.lexical().vocabulary_size(),
                engine.vectors().len(),
                engine.vectors().dimension(),
                store.display()
            );
            write_out(out, &stats)
        }
        Command::Query {
            store,
            query,
            retrieval,
            embedder,
        } => {
            let retrieval = usage(retrieval.config())?;
            let embedder = usage(embedder.build())?;
            let engine = open_engine(&store, embedder, retrieval.clone())?;
            let query = query.query(engine.repo_id())?;
            let mut table = format!(
                "{:<6}  {:>4}  {:>10}  {:<40}  {}\n",
                "side", "rank", "score", "chunk", "neighbor"
            );
            for side in [Side::Prefix, Side::Suffix] {
                for hit in engine.collect_hits(&query, side, &retrieval)? {
                    table.push_str(&format!(
                        "{:<6}  {:>4}  {:>10.6}  {:<40}  {}\n",
                        side.to_string(),
                        hit.rank,
                        hit.fused_score,
                        hit.similar.id,
                        hit.neighbor.as_ref().map_or("-", |c| c.id.as_str())
                    ));
                }
            }
            write_out(out, &table)
        }
        Command::Assemble {
            store,
            query,
            retrieval,
            assembly,
            embedder,
        } => {
            let retrieval = usage(retrieval.config())?;
            let options = usage(assembly.options())?;
            let embedder = usage(embedder.build())?;
            let engine = open_engine(&store, embedder, retrieval.clone())?;
            let query = query.query(engine.repo_id())?;
            let context = engine.build_context(&query, &retrieval, &options)?;
            write_out(out, &context.rendered)
        }
        Command::Eval {
            store,
            dataset,
            report,
            retrieval,
            assembly,
            embedder,
            timings,
        } => {
            let strategy = Strategy {
                retrieval: usage(retrieval.config())?,
                assembly: usage(assembly.options())?,
                ..Strategy::new("eval")
            };
            let embedder = usage(embedder.build())?;
            let records = load_dataset(&dataset)?;
            let engine = open_engine(&store, embedder, strategy.retrieval.clone())?;
            let result = run_eval(&engine, &records, &strategy);
            write_report_file(&report, std::slice::from_ref(&result), timings)?;
            write_out(out, &summary_table(&[result]))
        }
        Command::Synth {
            out_dir,
            seed,
            files,
            patterns,
            copies,
        } => {
            let config = SynthConfig {
                seed,
                file_count: files,
                pattern_count: patterns,
                copies,
            };
            let repo_dir = out_dir.join("repo");
            let repo = generate_synthetic_repo(&repo_dir, &config)?;
            let dataset = out_dir.join("dataset.jsonl");
            save_dataset(&repo.records, &dataset)?;
            write_out(
                out,
                &format!(
                    "repo: {} ({} files)\ndataset: {} ({} records)\n",
                    repo_dir.display(),
                    repo.files.len(),
                    dataset.display(),
                    repo.records.len()
                ),
            )
        }
        Command::Ablate {
            repo_root,
            dataset,
            report,
            chunking,
            retrieval,
            assembly,
            embedder,
            timings,
        } => {
            let base = Strategy {
                chunking: usage(chunking.config())?,
                retrieval: usage(retrieval.config())?,
                assembly: usage(assembly.options())?,
                ..Strategy::new("full")
            };
            usage(embedder.validate())?;
            let filter = ExtensionFilter::new(&chunking.extensions);
            let records = load_dataset(&dataset)?;
            let strategies = ablation_strategies(&base);
            let reports = run_ablation(&repo_root, &filter, &records, &strategies, &|| embedder.build())?;
            write_report_file(&report, &reports, timings)?;
            write_out(out, &summary_table(&reports))
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "error: usage: {}", first.trim_start_matches("error: "));
            let _ = writeln!(err, "{}", Cli::command().render_help());
            return 1;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
