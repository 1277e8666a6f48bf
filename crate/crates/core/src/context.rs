//! Context collection for a fill-in-the-middle completion point.
//!
//! The prefix is matched against the chunk index and every hit brings along
//! the chunk that follows it in its file; the suffix is matched the same way
//! and every hit brings along the chunk that precedes it. The final context is
//! the completion file, then the recent files, then the prefix-side chunks,
//! then the suffix-side chunks, cut to a character budget.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chunker::{chunk_repository, split_lines, Chunk, ChunkConfig, ExtensionFilter};
use crate::error::{Error, Result};
use crate::fusion::{rrf_fuse, FusionConfig, DEFAULT_FUSION_TOP_N};
use crate::lexical::{Bm25Params, LexicalIndex};
use crate::ranking::RankedHit;
use crate::semantic::{Embedder, VectorIndex};
use crate::store::ChunkStore;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_BUDGET_CHARS: usize = 32_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecentFile {
    pub path: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompletionQuery {
    pub prefix: String,
    pub suffix: String,
    pub completion_file_path: String,
    pub completion_file_content: String,
    pub recent_files: Vec<RecentFile>,
    pub repo_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Prefix,
    Suffix,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Prefix => "prefix",
            Side::Suffix => "suffix",
        })
    }
}

/// A retrieved chunk with its relative-position neighbor: the next chunk for
/// prefix-side hits, the previous chunk for suffix-side hits.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionedHit {
    pub similar: Chunk,
    pub neighbor: Option<Chunk>,
    pub side: Side,
    pub fused_score: f64,
    /// 1-based position among the kept hits of this side.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    /// Weights are `[lexical, semantic]`.
    pub fusion: FusionConfig,
    /// Candidates requested from each retriever before fusion.
    pub candidate_pool: usize,
    pub k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            fusion: FusionConfig::default(),
            candidate_pool: DEFAULT_FUSION_TOP_N,
            k: DEFAULT_K,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        self.fusion.validate()?;
        if self.fusion.weights.len() != 2 {
            return Err(Error::Config(format!(
                "expected 2 fusion weights (lexical, semantic), got {}",
                self.fusion.weights.len()
            )));
        }
        Ok(())
    }
}

pub struct ContextEngine {
    repo_id: String,
    store: ChunkStore,
    lexical: LexicalIndex,
    vectors: VectorIndex,
    embedder: Box<dyn Embedder>,
    retrieval: RetrievalConfig,
}

impl fmt::Debug for ContextEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContextEngine")
            .field("repo_id", &self.repo_id)
            .field("chunks", &self.store.len())
            .field("embedder", &self.embedder.kind())
            .finish_non_exhaustive()
    }
}

impl ContextEngine {
    /// Builds the lexical and vector indexes over every chunk of `store`.
    pub fn new(
        repo_id: impl Into<String>,
        store: ChunkStore,
        embedder: Box<dyn Embedder>,
        bm25: Bm25Params,
        retrieval: RetrievalConfig,
    ) -> Result<Self> {
        retrieval.validate()?;
        let chunks: Vec<Chunk> = store.chunks().cloned().collect();
        let lexical = LexicalIndex::build(&chunks, bm25);
        let vectors = VectorIndex::build(&chunks, embedder.as_ref())?;
        Ok(Self {
            repo_id: repo_id.into(),
            store,
            lexical,
            vectors,
            embedder,
            retrieval,
        })
    }

    /// Chunks every matching file under `repo_root` and indexes the result.
    /// The repository id is the root path as given.
    pub fn index_repository(
        repo_root: &Path,
        filter: &ExtensionFilter,
        chunking: &ChunkConfig,
        embedder: Box<dyn Embedder>,
        retrieval: RetrievalConfig,
    ) -> Result<Self> {
        let chunks = chunk_repository(repo_root, filter, chunking)?;
        let store = ChunkStore::put_all(chunks.chunks)?;
        Self::new(
            repo_root.display().to_string(),
            store,
            embedder,
            Bm25Params::default(),
            retrieval,
        )
    }

    pub fn repo_id(&self) -> &str {
        &self.repo_id
    }

    pub fn store(&self) -> &ChunkStore {
        &self.store
    }

    pub fn lexical(&self) -> &LexicalIndex {
        &self.lexical
    }

    pub fn vectors(&self) -> &VectorIndex {
        &self.vectors
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    pub fn retrieval(&self) -> &RetrievalConfig {
        &self.retrieval
    }

    /// Lexical and semantic candidates for `text`, fused.
    pub fn retrieve(&self, text: &str, retrieval: &RetrievalConfig) -> Result<Vec<RankedHit>> {
        retrieval.validate()?;
        if text.trim().is_empty() {
            return Ok(Vec::new());
        }
        let lexical = self.lexical.query(text, retrieval.candidate_pool);
        let semantic = self
            .vectors
            .query(text, self.embedder.as_ref(), retrieval.candidate_pool)?;
        rrf_fuse(&[lexical, semantic], &retrieval.fusion)
    }

    pub fn collect_prefix_hits(&self, query: &CompletionQuery, k: usize) -> Result<Vec<PositionedHit>> {
        let retrieval = RetrievalConfig {
            k,
            ..self.retrieval.clone()
        };
        self.collect_hits(query, Side::Prefix, &retrieval)
    }

    pub fn collect_suffix_hits(&self, query: &CompletionQuery, k: usize) -> Result<Vec<PositionedHit>> {
        let retrieval = RetrievalConfig {
            k,
            ..self.retrieval.clone()
        };
        self.collect_hits(query, Side::Suffix, &retrieval)
    }

    /// Top-k fused hits for one side of the query, excluding chunks of the
    /// completion file, each with its relative-position neighbor attached.
    pub fn collect_hits(
        &self,
        query: &CompletionQuery,
        side: Side,
        retrieval: &RetrievalConfig,
    ) -> Result<Vec<PositionedHit>> {
        if query.repo_id != self.repo_id {
            return Err(Error::Lookup(format!(
                "repository {:?} is not indexed (engine holds {:?})",
                query.repo_id, self.repo_id
            )));
        }
        let text = match side {
            Side::Prefix => &query.prefix,
            Side::Suffix => &query.suffix,
        };
        if retrieval.k == 0 {
            return Ok(Vec::new());
        }

        let mut hits = Vec::new();
        for fused in self.retrieve(text, retrieval)? {
            let similar = self
                .store
                .get(&fused.chunk_id)
                .ok_or_else(|| Error::Lookup(format!("unknown chunk id {}", fused.chunk_id)))?;
            if similar.file_path == query.completion_file_path {
                continue;
            }
            let neighbor = match side {
                Side::Prefix => self.store.next_of(&similar.id)?,
                Side::Suffix => self.store.prev_of(&similar.id)?,
            };
            hits.push(PositionedHit {
                similar: similar.clone(),
                neighbor: neighbor.cloned(),
                side,
                fused_score: fused.score,
                rank: hits.len() + 1,
            });
            if hits.len() == retrieval.k {
                break;
            }
        }
        Ok(hits)
    }

    /// Retrieval for both sides followed by assembly.
    pub fn build_context(
        &self,
        query: &CompletionQuery,
        retrieval: &RetrievalConfig,
        options: &AssemblyOptions,
    ) -> Result<AssembledContext> {
        let prefix_hits = if options.include_prefix_hits {
            self.collect_hits(query, Side::Prefix, retrieval)?
        } else {
            Vec::new()
        };
        let suffix_hits = if options.include_suffix_hits {
            self.collect_hits(query, Side::Suffix, retrieval)?
        } else {
            Vec::new()
        };
        Ok(assemble(query, &prefix_hits, &suffix_hits, options))
    }
}

/// Whether a hit's neighbor is rendered after (default) or before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborOrder {
    #[default]
    SimilarFirst,
    NeighborFirst,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub include_completion_file: bool,
    pub include_recent_files: bool,
    pub include_prefix_hits: bool,
    pub include_suffix_hits: bool,
    pub attach_neighbors: bool,
    pub neighbor_order: NeighborOrder,
    pub budget_chars: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            include_completion_file: true,
            include_recent_files: true,
            include_prefix_hits: true,
            include_suffix_hits: true,
            attach_neighbors: true,
            neighbor_order: NeighborOrder::SimilarFirst,
            budget_chars: DEFAULT_BUDGET_CHARS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionLabel {
    CompletionFile,
    RecentFile,
    PrefixHits,
    SuffixHits,
}

impl SectionLabel {
    /// Position in the fixed section order.
    pub fn priority(self) -> u8 {
        match self {
            SectionLabel::CompletionFile => 0,
            SectionLabel::RecentFile => 1,
            SectionLabel::PrefixHits => 2,
            SectionLabel::SuffixHits => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub label: SectionLabel,
    pub source_path: String,
    pub start_line: usize,
    pub end_line: usize,
    pub chunk_id: Option<String>,
    pub text: String,
    /// False only for a completion file truncated below its header length.
    pub has_header: bool,
}

impl Section {
    pub fn header(&self) -> String {
        format!(
            "### file: {} lines {}-{}",
            self.source_path, self.start_line, self.end_line
        )
    }

    pub fn render(&self) -> String {
        if self.has_header {
            format!("{}\n{}\n", self.header(), self.text)
        } else {
            self.text.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssembledContext {
    pub sections: Vec<Section>,
    pub rendered: String,
    /// Character count of `rendered`.
    pub size: usize,
}

fn whole_file_section(label: SectionLabel, path: &str, content: &str) -> Section {
    let lines = split_lines(content);
    let (start_line, end_line) = if lines.is_empty() { (0, 0) } else { (1, lines.len()) };
    Section {
        label,
        source_path: path.to_owned(),
        start_line,
        end_line,
        chunk_id: None,
        text: lines.join("\n"),
        has_header: true,
    }
}

fn chunk_section(label: SectionLabel, chunk: &Chunk) -> Section {
    Section {
        label,
        source_path: chunk.file_path.clone(),
        start_line: chunk.start_line,
        end_line: chunk.end_line,
        chunk_id: Some(chunk.id.clone()),
        text: chunk.text.clone(),
        has_header: true,
    }
}

/// Keeps the end of the completion file, which is nearest the completion
/// point, so that the rendered section is exactly `budget` characters.
fn truncate_completion(section: &Section, budget: usize) -> Section {
    let chars: Vec<char> = section.text.chars().collect();
    let with_tail = |body: usize, has_header: bool| -> Section {
        let skip = chars.len().saturating_sub(body);
        Section {
            text: chars[skip..].iter().collect(),
            start_line: 1 + chars[..skip].iter().filter(|&&c| c == '\n').count(),
            has_header,
            ..section.clone()
        }
    };

    // header, newline, at least one body char, trailing newline
    let header_len = section.header().chars().count();
    if header_len + 3 <= budget {
        let mut body = budget - header_len - 2;
        for _ in 0..32 {
            let candidate = with_tail(body, true);
            let size = candidate.render().chars().count();
            if size == budget {
                return candidate;
            }
            let header = candidate.header().chars().count();
            if header + 3 > budget {
                break;
            }
            body = budget - header - 2;
        }
        for body in (1..=budget.saturating_sub(header_len + 2)).rev().take(64) {
            let candidate = with_tail(body, true);
            if candidate.render().chars().count() == budget {
                return candidate;
            }
        }
    }
    with_tail(budget, false)
}

struct Budgeted {
    sections: Vec<Section>,
    used: usize,
    budget: usize,
}

impl Budgeted {
    fn try_push(&mut self, section: Section) -> bool {
        let size = section.render().chars().count();
        if self.used + size > self.budget {
            return false;
        }
        self.used += size;
        self.sections.push(section);
        true
    }
}

/// Builds the ordered, budgeted context. Sections are tried in priority order
/// and any section that does not fit is dropped whole; only an oversized
/// completion file is cut (to its tail).
pub fn assemble(
    query: &CompletionQuery,
    prefix_hits: &[PositionedHit],
    suffix_hits: &[PositionedHit],
    options: &AssemblyOptions,
) -> AssembledContext {
    let mut out = Budgeted {
        sections: Vec::new(),
        used: 0,
        budget: options.budget_chars,
    };

    if options.include_completion_file {
        let section = whole_file_section(
            SectionLabel::CompletionFile,
            &query.completion_file_path,
            &query.completion_file_content,
        );
        if !out.try_push(section.clone()) {
            out.try_push(truncate_completion(&section, options.budget_chars));
        }
    }

    let mut full_files: HashSet<String> = HashSet::new();
    full_files.insert(query.completion_file_path.clone());
    if options.include_recent_files {
        for recent in &query.recent_files {
            let section = whole_file_section(SectionLabel::RecentFile, &recent.path, &recent.content);
            if out.try_push(section) {
                full_files.insert(recent.path.clone());
            }
        }
    }

    let mut included: HashSet<String> = HashSet::new();
    let sides = [
        (SectionLabel::PrefixHits, prefix_hits, options.include_prefix_hits),
        (SectionLabel::SuffixHits, suffix_hits, options.include_suffix_hits),
    ];
    for (label, hits, enabled) in sides {
        if !enabled {
            continue;
        }
        for hit in hits {
            let neighbor = hit.neighbor.as_ref().filter(|_| options.attach_neighbors);
            let ordered: Vec<&Chunk> = match options.neighbor_order {
                NeighborOrder::SimilarFirst => std::iter::once(&hit.similar).chain(neighbor).collect(),
                NeighborOrder::NeighborFirst => neighbor.into_iter().chain([&hit.similar]).collect(),
            };
            for chunk in ordered {
                if included.contains(&chunk.id) || full_files.contains(&chunk.file_path) {
                    continue;
                }
                if out.try_push(chunk_section(label, chunk)) {
                    included.insert(chunk.id.clone());
                }
            }
        }
    }

    let rendered: String = out.sections.iter().map(Section::render).collect();
    let size = rendered.chars().count();
    AssembledContext {
        sections: out.sections,
        rendered,
        size,
    }
}
