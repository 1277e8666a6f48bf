//! Line-delimited completion-point datasets.
//!
//! One JSON object per line with the fields `prefix`, `suffix`,
//! `completion_file_path`, `completion_file_content`, `recent_files`
//! (a list of `{path, content}`), `middle`, and an optional `model_output`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::context::{CompletionQuery, RecentFile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalRecord {
    pub query: CompletionQuery,
    /// The excised text the completion should reproduce.
    pub middle: String,
    pub model_output: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct DatasetLine {
    prefix: String,
    suffix: String,
    completion_file_path: String,
    completion_file_content: String,
    #[serde(default)]
    recent_files: Vec<RecentFile>,
    middle: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model_output: Option<String>,
}

impl From<&EvalRecord> for DatasetLine {
    fn from(record: &EvalRecord) -> Self {
        let q = &record.query;
        DatasetLine {
            prefix: q.prefix.clone(),
            suffix: q.suffix.clone(),
            completion_file_path: q.completion_file_path.clone(),
            completion_file_content: q.completion_file_content.clone(),
            recent_files: q.recent_files.clone(),
            middle: record.middle.clone(),
            model_output: record.model_output.clone(),
        }
    }
}

pub fn write_dataset<W: Write>(records: &[EvalRecord], mut out: W) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, &DatasetLine::from(record))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_dataset(records: &[EvalRecord], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(records, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset<R: Read>(input: R, source_name: &str) -> Result<Vec<EvalRecord>> {
    let parse_err = |record: usize, message: String| Error::Parse {
        source_name: source_name.to_owned(),
        record,
        message,
    };
    let mut records = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| parse_err(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: DatasetLine =
            serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?;
        if row.middle.is_empty() {
            return Err(parse_err(i + 1, "middle must not be empty".into()));
        }
        records.push(EvalRecord {
            query: CompletionQuery {
                prefix: row.prefix,
                suffix: row.suffix,
                completion_file_path: row.completion_file_path,
                completion_file_content: row.completion_file_content,
                recent_files: row.recent_files,
                repo_id: String::new(),
            },
            middle: row.middle,
            model_output: row.model_output,
        });
    }
    Ok(records)
}

pub fn load_dataset(path: &Path) -> Result<Vec<EvalRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> EvalRecord {
        EvalRecord {
            query: CompletionQuery {
                prefix: "def f(x):\n".into(),
                suffix: "    return y\n".into(),
                completion_file_path: "a.py".into(),
                completion_file_content: "def f(x):\n    return y\n".into(),
                recent_files: vec![RecentFile {
                    path: "b.py".into(),
                    content: "y = 1\n".into(),
                }],
                repo_id: String::new(),
            },
            middle: "    y = x + 1\n".into(),
            model_output: Some("    y = x\n".into()),
        }
    }

    #[test]
    fn round_trip() {
        let records = vec![record(), EvalRecord { model_output: None, ..record() }];
        let mut buf = Vec::new();
        write_dataset(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!text.lines().nth(1).unwrap().contains("model_output"));
        assert_eq!(read_dataset(&buf[..], "mem").unwrap(), records);
    }

    #[test]
    fn empty_middle_rejected() {
        let line = r#"{"prefix":"","suffix":"","completion_file_path":"a","completion_file_content":"","middle":""}"#;
        assert!(matches!(
            read_dataset(line.as_bytes(), "mem"),
            Err(Error::Parse { record: 1, .. })
        ));
    }

    #[test]
    fn malformed_line_reports_record() {
        let mut buf = Vec::new();
        write_dataset(&[record()], &mut buf).unwrap();
        buf.extend_from_slice(b"{\"prefix\": 3}\n");
        match read_dataset(&buf[..], "mem") {
            Err(Error::Parse { record, .. }) => assert_eq!(record, 2),
            other => panic!("{other:?}"),
        }
    }
}
