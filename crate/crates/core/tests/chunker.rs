mod common;

use std::fs;

use proptest::prelude::*;
use repoctx::chunker::{chunk_ranges, list_source_files};
use repoctx::{chunk_file, chunk_repository, ChunkConfig, ExtensionFilter};

fn file_content(lines: &[String], trailing_newline: bool, crlf: bool) -> String {
    let sep = if crlf { "\r\n" } else { "\n" };
    let mut s = lines.join(sep);
    if trailing_newline && !lines.is_empty() {
        s.push_str(sep);
    }
    s
}

fn config_strategy() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=50).prop_flat_map(|n| (Just(n), 0..n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ranges_match_oracle(lines in 0usize..500, (n, m) in config_strategy()) {
        let config = ChunkConfig::new(n, m).unwrap();
        prop_assert_eq!(chunk_ranges(lines, &config), common::oracle_ranges(lines, n, m));
    }

    #[test]
    fn chunk_invariants(
        lines in proptest::collection::vec("[a-z =()]{0,12}", 0..200),
        (n, m) in config_strategy(),
        trailing in any::<bool>(),
        crlf in any::<bool>(),
    ) {
        let content = file_content(&lines, trailing, crlf);
        let config = ChunkConfig::new(n, m).unwrap();
        let chunks = chunk_file("src/a.py", &content, &config).unwrap();
        if let Err(msg) = common::check_chunks(&content, &chunks, n, m) {
            prop_assert!(false, "{}", msg);
        }
        prop_assert_eq!(chunks.clone(), chunk_file("src/a.py", &content, &config).unwrap());
    }

    #[test]
    fn small_files_are_one_chunk(len in 1usize..=50, (n, m) in config_strategy()) {
        prop_assume!(len <= n);
        let content: String = (0..len).map(|i| format!("l{i}\n")).collect();
        let chunks = chunk_file("f.kt", &content, &ChunkConfig::new(n, m).unwrap()).unwrap();
        prop_assert_eq!(chunks.len(), 1);
        prop_assert_eq!((chunks[0].start_line, chunks[0].end_line), (1, len));
    }
}

#[test]
fn crlf_and_lf_give_same_chunks() {
    let lines: Vec<String> = (1..=30).map(|i| format!("row {i}")).collect();
    let config = ChunkConfig::default();
    assert_eq!(
        chunk_file("x.py", &file_content(&lines, true, false), &config).unwrap(),
        chunk_file("x.py", &file_content(&lines, true, true), &config).unwrap()
    );
}

#[test]
fn repository_order_and_skips() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let numbered = |n: usize| (1..=n).map(|i| format!("line {i}\n")).collect::<String>();
    fs::write(root.join("b.kt"), numbered(25)).unwrap();
    fs::write(root.join("a.kt"), numbered(10)).unwrap();
    fs::create_dir(root.join("pkg")).unwrap();
    fs::write(root.join("pkg/c.py"), numbered(3)).unwrap();
    fs::write(root.join("pkg/blob.py"), b"abc\0def").unwrap();
    fs::write(root.join("notes.txt"), "ignored").unwrap();

    let filter = ExtensionFilter::default();
    assert_eq!(
        list_source_files(root, &filter).unwrap(),
        vec!["a.kt", "b.kt", "pkg/blob.py", "pkg/c.py"]
    );

    let config = ChunkConfig::new(10, 2).unwrap();
    let repo = chunk_repository(root, &filter, &config).unwrap();
    let ids: Vec<&str> = repo.chunks.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(
        ids,
        vec!["a.kt:1-10", "b.kt:1-10", "b.kt:9-18", "b.kt:17-25", "pkg/c.py:1-3"]
    );
    assert_eq!(repo.files_indexed, 3);
    assert_eq!(repo.files_skipped, 1);
    assert_eq!(repo.chunks, chunk_repository(root, &filter, &config).unwrap().chunks);
}

#[test]
fn empty_repository() {
    let dir = tempfile::tempdir().unwrap();
    let repo = chunk_repository(dir.path(), &ExtensionFilter::default(), &ChunkConfig::default()).unwrap();
    assert!(repo.chunks.is_empty());
}

#[test]
fn missing_root_is_io_error() {
    let err = chunk_repository(
        std::path::Path::new("/definitely/not/here"),
        &ExtensionFilter::default(),
        &ChunkConfig::default(),
    )
    .unwrap_err();
    assert_eq!(err.category(), "io");
}
