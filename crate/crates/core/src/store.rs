//! Immutable chunk database with id lookup and neighbor resolution.
//!
//! On disk a store is UTF-8 text with one JSON array per line:
//! `[id, file_path, start_line, end_line, text, prev_id, next_id]`, where an
//! absent link is the empty string.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::chunker::Chunk;
use crate::error::{Error, Result};

type Record = (String, String, usize, usize, String, String, String);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChunkStore {
    chunks: HashMap<String, Chunk>,
    order: Vec<String>,
    by_file: BTreeMap<String, Vec<String>>,
}

impl ChunkStore {
    pub fn put_all(chunks: Vec<Chunk>) -> Result<Self> {
        let mut store = ChunkStore::default();
        for chunk in chunks {
            if store.chunks.contains_key(&chunk.id) {
                return Err(Error::Integrity(format!("duplicate chunk id {}", chunk.id)));
            }
            store.order.push(chunk.id.clone());
            store
                .by_file
                .entry(chunk.file_path.clone())
                .or_default()
                .push(chunk.id.clone());
            store.chunks.insert(chunk.id.clone(), chunk);
        }
        store.check_links()?;
        Ok(store)
    }

    fn check_links(&mut self) -> Result<()> {
        let chunks = &self.chunks;
        for chunk in chunks.values() {
            for (kind, link) in [("prev", &chunk.prev_id), ("next", &chunk.next_id)] {
                let Some(target_id) = link else { continue };
                let target = chunks.get(target_id).ok_or_else(|| {
                    Error::Integrity(format!("{} has dangling {kind} link {target_id}", chunk.id))
                })?;
                if target.file_path != chunk.file_path {
                    return Err(Error::Integrity(format!(
                        "{} links across files to {target_id}",
                        chunk.id
                    )));
                }
                let back = if kind == "prev" {
                    &target.next_id
                } else {
                    &target.prev_id
                };
                if back.as_deref() != Some(chunk.id.as_str()) {
                    return Err(Error::Integrity(format!(
                        "{kind} link {} -> {target_id} is not mirrored",
                        chunk.id
                    )));
                }
            }
        }

        for (file, ids) in self.by_file.iter_mut() {
            ids.sort_by_key(|id| chunks[id].start_line);
            let mut expected_prev: Option<&String> = None;
            for id in ids.iter() {
                if chunks[id].prev_id.as_ref() != expected_prev {
                    return Err(Error::Integrity(format!(
                        "link order of {file} disagrees with line order at {id}"
                    )));
                }
                expected_prev = Some(id);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Chunk> {
        self.chunks.get(id)
    }

    /// Chunks in insertion order.
    pub fn chunks(&self) -> impl Iterator<Item = &Chunk> {
        self.order.iter().map(|id| &self.chunks[id])
    }

    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.by_file.keys().map(String::as_str)
    }

    /// Chunk ids of one file, ordered by start line.
    pub fn file_chunks(&self, file_path: &str) -> Option<&[String]> {
        self.by_file.get(file_path).map(Vec::as_slice)
    }

    fn require(&self, id: &str) -> Result<&Chunk> {
        self.chunks
            .get(id)
            .ok_or_else(|| Error::Lookup(format!("unknown chunk id {id}")))
    }

    pub fn next_of(&self, id: &str) -> Result<Option<&Chunk>> {
        Ok(self
            .require(id)?
            .next_id
            .as_deref()
            .and_then(|n| self.chunks.get(n)))
    }

    pub fn prev_of(&self, id: &str) -> Result<Option<&Chunk>> {
        Ok(self
            .require(id)?
            .prev_id
            .as_deref()
            .and_then(|p| self.chunks.get(p)))
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for chunk in self.chunks() {
            let record: Record = (
                chunk.id.clone(),
                chunk.file_path.clone(),
                chunk.start_line,
                chunk.end_line,
                chunk.text.clone(),
                chunk.prev_id.clone().unwrap_or_default(),
                chunk.next_id.clone().unwrap_or_default(),
            );
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_from<R: Read>(input: R, source_name: &str) -> Result<Self> {
        let mut chunks = Vec::new();
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let record_no = i + 1;
            let line = line.map_err(|e| Error::Parse {
                source_name: source_name.to_owned(),
                record: record_no,
                message: e.to_string(),
            })?;
            let (id, file_path, start_line, end_line, text, prev, next): Record =
                serde_json::from_str(&line).map_err(|e| Error::Parse {
                    source_name: source_name.to_owned(),
                    record: record_no,
                    message: e.to_string(),
                })?;
            if start_line == 0 || start_line > end_line {
                return Err(Error::Parse {
                    source_name: source_name.to_owned(),
                    record: record_no,
                    message: format!("invalid line range {start_line}-{end_line}"),
                });
            }
            chunks.push(Chunk {
                id,
                file_path,
                start_line,
                end_line,
                text,
                prev_id: Some(prev).filter(|s| !s.is_empty()),
                next_id: Some(next).filter(|s| !s.is_empty()),
            });
        }
        ChunkStore::put_all(chunks)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(file, &path.display().to_string())
    }

    /// Ids of every chunk whose file is in `paths`.
    pub fn ids_in_files<'a>(&'a self, paths: &HashSet<&str>) -> HashSet<&'a str> {
        paths
            .iter()
            .filter_map(|p| self.by_file.get(*p))
            .flatten()
            .map(String::as_str)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunker::{chunk_file, ChunkConfig};

    fn example_store() -> ChunkStore {
        let content: String = (1..=25).map(|i| format!("line {i}\n")).collect();
        let chunks = chunk_file("b.kt", &content, &ChunkConfig::new(10, 2).unwrap()).unwrap();
        ChunkStore::put_all(chunks).unwrap()
    }

    #[test]
    fn empty_store() {
        let store = ChunkStore::put_all(Vec::new()).unwrap();
        assert!(store.is_empty());
        let mut buf = Vec::new();
        store.write_to(&mut buf).unwrap();
        assert!(buf.is_empty());
        assert_eq!(ChunkStore::read_from(&buf[..], "mem").unwrap(), store);
    }

    #[test]
    fn by_file_groups_linked_chunks() {
        let store = example_store();
        assert_eq!(store.len(), 3);
        assert_eq!(store.file_chunks("b.kt").unwrap().len(), 3);
    }

    #[test]
    fn neighbor_lookup() {
        let store = example_store();
        assert_eq!(store.next_of("b.kt:1-10").unwrap().unwrap().id, "b.kt:9-18");
        assert_eq!(store.prev_of("b.kt:9-18").unwrap().unwrap().id, "b.kt:1-10");
        assert!(store.next_of("b.kt:17-25").unwrap().is_none());
        assert!(store.prev_of("b.kt:1-10").unwrap().is_none());
        assert!(matches!(store.next_of("nope"), Err(Error::Lookup(_))));
        assert!(store.get("nope").is_none());
        assert_eq!(store.get("b.kt:9-18").unwrap().start_line, 9);
    }

    #[test]
    fn dangling_link_rejected() {
        let mut chunks: Vec<Chunk> = example_store().chunks().cloned().collect();
        chunks.pop();
        assert!(matches!(
            ChunkStore::put_all(chunks),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn duplicate_id_rejected() {
        let chunks: Vec<Chunk> = example_store().chunks().cloned().collect();
        let mut doubled = chunks.clone();
        doubled.push(chunks[0].clone());
        assert!(matches!(
            ChunkStore::put_all(doubled),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn cross_file_link_rejected() {
        let mut chunks: Vec<Chunk> = example_store().chunks().cloned().collect();
        chunks[2].file_path = "other.kt".into();
        assert!(matches!(
            ChunkStore::put_all(chunks),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn round_trip_preserves_store() {
        let store = example_store();
        let mut buf = Vec::new();
        store.write_to(&mut buf).unwrap();
        let loaded = ChunkStore::read_from(&buf[..], "mem").unwrap();
        assert_eq!(loaded, store);
        assert_eq!(loaded.get("b.kt:1-10"), store.get("b.kt:1-10"));
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with(r#"["b.kt:1-10","b.kt",1,10,"line 1\nline 2"#));
        assert!(text.lines().next().unwrap().ends_with(r#","","b.kt:9-18"]"#));
    }

    #[test]
    fn truncated_record_names_its_index() {
        let mut buf = Vec::new();
        example_store().write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated = &text[..text.len() - 12];
        match ChunkStore::read_from(truncated.as_bytes(), "mem") {
            Err(Error::Parse { record, .. }) => assert_eq!(record, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
