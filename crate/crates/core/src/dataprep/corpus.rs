use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Cell, CellKind, CorpusFile, DataprepError};

/// Per-file metadata, keyed by path relative to the corpus root.
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileMeta {
    pub last_updated: NaiveDate,
    #[serde(default)]
    pub official: bool,
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else if matches!(path.extension().and_then(|e| e.to_str()), Some("py" | "ipynb")) {
            out.push(path);
        }
    }
    Ok(())
}

fn parse_cells(path: &str, text: &str) -> Result<Vec<Cell>, DataprepError> {
    let malformed = |reason: String| DataprepError::MalformedNotebook {
        path: path.to_string(),
        reason,
    };
    let doc: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let cells = doc.get("cells").and_then(Value::as_array).ok_or_else(|| malformed("no `cells` array".into()))?;
    let mut out = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let kind = match cell.get("cell_type").and_then(Value::as_str) {
            Some("code") => CellKind::Code,
            Some("markdown") => CellKind::Markdown,
            Some("raw") => continue,
            other => return Err(malformed(format!("cell {i} has cell_type {other:?}"))),
        };
        let text = match cell.get("source") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Array(parts)) => parts
                .iter()
                .map(|p| p.as_str().ok_or_else(|| malformed(format!("cell {i} source is not text"))))
                .collect::<Result<String, _>>()?,
            _ => return Err(malformed(format!("cell {i} has no source"))),
        };
        out.push(Cell { kind, text });
    }
    Ok(out)
}

/// Every `.py` and `.ipynb` file under `dir`, sorted by relative path. Each
/// must have an entry in the root `metadata.json`.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<CorpusFile>, DataprepError> {
    let meta_text = std::fs::read_to_string(dir.join(METADATA_FILE))
        .map_err(|e| DataprepError::Metadata(format!("{}: {e}", dir.join(METADATA_FILE).display())))?;
    let meta: BTreeMap<String, FileMeta> = serde_json::from_str(&meta_text).map_err(|e| DataprepError::Metadata(e.to_string()))?;
    let mut paths = Vec::new();
    walk(dir, &mut paths)?;
    let mut rel: Vec<(String, PathBuf)> = paths
        .into_iter()
        .map(|p| {
            let r = p.strip_prefix(dir).unwrap_or(&p).to_string_lossy().replace('\\', "/");
            (r, p)
        })
        .collect();
    rel.sort();
    rel.par_iter()
        .map(|(r, p)| {
            let m = meta
                .get(r)
                .ok_or_else(|| DataprepError::Metadata(format!("no metadata entry for {r}")))?;
            let text = std::fs::read_to_string(p)?;
            Ok(if r.ends_with(".ipynb") {
                CorpusFile::notebook(r.clone(), m.last_updated, m.official, parse_cells(r, &text)?)
            } else {
                CorpusFile::source(r.clone(), m.last_updated, m.official, text)
            })
        })
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DataprepError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| DataprepError::InvalidArgs(format!("{} line {}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DataprepError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataprep::FileKind;

    #[test]
    fn loads_tree_with_metadata() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        std::fs::write(dir.path().join("a.py"), "import qiskit\n").unwrap();
        std::fs::write(
            dir.path().join("sub/n.ipynb"),
            r##"{"cells":[{"cell_type":"markdown","source":["# T","itle"]},{"cell_type":"raw","source":"r"},{"cell_type":"code","source":"x=1"}]}"##,
        )
        .unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        std::fs::write(
            dir.path().join(METADATA_FILE),
            r#"{"a.py":{"last_updated":"2024-05-01","official":true},"sub/n.ipynb":{"last_updated":"2023-01-01"}}"#,
        )
        .unwrap();
        let files = load_corpus_dir(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        assert_eq!(files[0].path, "a.py");
        assert!(files[0].official);
        assert_eq!(files[1].kind, FileKind::Notebook);
        assert_eq!(files[1].full_text(), "# Title\nx=1");
    }

    #[test]
    fn missing_metadata_and_bad_notebook() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.py"), "x").unwrap();
        std::fs::write(dir.path().join(METADATA_FILE), "{}").unwrap();
        assert_eq!(load_corpus_dir(dir.path()).unwrap_err().kind(), "metadata_error");
        assert_eq!(parse_cells("n", "{\"nope\":1}").unwrap_err().kind(), "malformed_notebook");
        assert!(parse_cells("n", "not json").is_err());
    }
}
