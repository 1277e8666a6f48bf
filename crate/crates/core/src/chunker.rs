//! Fixed-size line chunking with overlap.
//!
//! Each source file is cut into windows of `chunk_lines` lines whose starts
//! advance by `chunk_lines - overlap_lines`. Windows are doubly linked in file
//! order so the neighbors of a retrieved chunk can be recovered later.

use std::collections::BTreeSet;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

pub const DEFAULT_CHUNK_LINES: usize = 20;
pub const DEFAULT_OVERLAP_LINES: usize = 5;
pub const DEFAULT_EXTENSIONS: [&str; 3] = ["py", "kt", "kts"];

/// Files with a NUL byte in this prefix are treated as binary.
const BINARY_SNIFF_BYTES: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub chunk_lines: usize,
    pub overlap_lines: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            chunk_lines: DEFAULT_CHUNK_LINES,
            overlap_lines: DEFAULT_OVERLAP_LINES,
        }
    }
}

impl ChunkConfig {
    pub fn new(chunk_lines: usize, overlap_lines: usize) -> Result<Self> {
        let config = Self {
            chunk_lines,
            overlap_lines,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk_lines == 0 {
            return Err(Error::Config("chunk_lines must be positive".into()));
        }
        if self.chunk_lines <= self.overlap_lines {
            return Err(Error::Config(format!(
                "chunk_lines ({}) must exceed overlap_lines ({})",
                self.chunk_lines, self.overlap_lines
            )));
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.chunk_lines - self.overlap_lines
    }
}

/// A contiguous, 1-based inclusive line range of one file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: String,
    pub file_path: String,
    pub start_line: usize,
    pub end_line: usize,
    pub text: String,
    pub prev_id: Option<String>,
    pub next_id: Option<String>,
}

impl Chunk {
    pub fn line_count(&self) -> usize {
        self.end_line + 1 - self.start_line
    }
}

pub fn chunk_id(file_path: &str, start_line: usize, end_line: usize) -> String {
    format!("{file_path}:{start_line}-{end_line}")
}

/// Splits on LF after normalizing CRLF. A trailing newline does not produce an
/// empty final line, and empty content has zero lines.
pub fn split_lines(content: &str) -> Vec<String> {
    let normalized = content.replace("\r\n", "\n");
    if normalized.is_empty() {
        return Vec::new();
    }
    let body = normalized.strip_suffix('\n').unwrap_or(&normalized);
    body.split('\n').map(str::to_owned).collect()
}

/// Start/end pairs (1-based, inclusive) of the chunks of a file with
/// `line_count` lines.
pub fn chunk_ranges(line_count: usize, config: &ChunkConfig) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    if line_count == 0 {
        return ranges;
    }
    let stride = config.stride();
    let mut start = 1;
    // every chunk after the first must contribute at least one new line
    while start == 1 || start + config.overlap_lines <= line_count {
        let end = (start + config.chunk_lines - 1).min(line_count);
        ranges.push((start, end));
        start += stride;
    }
    ranges
}

pub fn chunk_file(file_path: &str, content: &str, config: &ChunkConfig) -> Result<Vec<Chunk>> {
    config.validate()?;
    let lines = split_lines(content);
    let ranges = chunk_ranges(lines.len(), config);
    let ids: Vec<String> = ranges
        .iter()
        .map(|&(start, end)| chunk_id(file_path, start, end))
        .collect();

    let chunks = ranges
        .iter()
        .enumerate()
        .map(|(i, &(start, end))| Chunk {
            id: ids[i].clone(),
            file_path: file_path.to_owned(),
            start_line: start,
            end_line: end,
            text: lines[start - 1..end].join("\n"),
            prev_id: i.checked_sub(1).map(|p| ids[p].clone()),
            next_id: ids.get(i + 1).cloned(),
        })
        .collect();
    Ok(chunks)
}

/// Normalized extension set; entries may be given with or without the dot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionFilter(BTreeSet<String>);

impl ExtensionFilter {
    pub fn new<I, S>(extensions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(
            extensions
                .into_iter()
                .map(|e| e.as_ref().trim_start_matches('.').to_owned())
                .filter(|e| !e.is_empty())
                .collect(),
        )
    }

    pub fn matches(&self, path: &Path) -> bool {
        path.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| self.0.contains(e))
    }
}

impl Default for ExtensionFilter {
    fn default() -> Self {
        Self::new(DEFAULT_EXTENSIONS)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepoChunks {
    pub chunks: Vec<Chunk>,
    pub files_indexed: usize,
    /// Matching files that were binary, not UTF-8, or unreadable.
    pub files_skipped: usize,
}

/// Repository-relative paths (forward slashes) of matching files, in
/// lexicographic order.
pub fn list_source_files(repo_root: &Path, filter: &ExtensionFilter) -> Result<Vec<String>> {
    let meta = fs::metadata(repo_root).map_err(|e| Error::io(repo_root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            repo_root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let mut paths = Vec::new();
    for entry in WalkDir::new(repo_root) {
        let entry = match entry {
            Ok(entry) => entry,
            Err(err) if err.depth() == 0 => {
                let io = err
                    .into_io_error()
                    .unwrap_or_else(|| std::io::Error::other("walk failed"));
                return Err(Error::io(repo_root, io));
            }
            Err(err) => {
                log::warn!("skipping unreadable entry: {err}");
                continue;
            }
        };
        if !entry.file_type().is_file() || !filter.matches(entry.path()) {
            continue;
        }
        let Ok(rel) = entry.path().strip_prefix(repo_root) else {
            continue;
        };
        let rel: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        paths.push(rel.join("/"));
    }
    paths.sort();
    Ok(paths)
}

fn read_text_file(path: &Path) -> Option<String> {
    let mut bytes = Vec::new();
    fs::File::open(path).ok()?.read_to_end(&mut bytes).ok()?;
    let sniff = &bytes[..bytes.len().min(BINARY_SNIFF_BYTES)];
    if sniff.contains(&0) {
        return None;
    }
    String::from_utf8(bytes).ok()
}

pub fn chunk_repository(
    repo_root: &Path,
    filter: &ExtensionFilter,
    config: &ChunkConfig,
) -> Result<RepoChunks> {
    config.validate()?;
    let mut out = RepoChunks::default();
    for rel in list_source_files(repo_root, filter)? {
        match read_text_file(&repo_root.join(&rel)) {
            Some(content) => {
                out.chunks.extend(chunk_file(&rel, &content, config)?);
                out.files_indexed += 1;
            }
            None => {
                log::warn!("skipping non-text file {rel}");
                out.files_skipped += 1;
            }
        }
    }
    Ok(out)
}
