use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::model::KnowledgeGraph;

pub const GRAPH_SUFFIX: &str = ".kg.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Parses every non-blank line as JSON, returning the 1-based line number
/// alongside each record. All schema errors are collected before failing.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, Vec<IoError>> {
    let file = fs::File::open(path).map_err(|e| vec![IoError::io(path, e)])?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| vec![IoError::io(path, e)])?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(record) => records.push((idx + 1, record)),
            Err(e) => errors.push(IoError::Schema {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            }),
        }
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(errors)
    }
}

/// Writes to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| IoError::io(parent, e))?;
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| IoError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| IoError::io(&tmp, e))?;
    f.sync_all().map_err(|e| IoError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| IoError::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| IoError::Invalid {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Invalid {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// File-name-safe form of a sentence id: characters outside
/// `[A-Za-z0-9._-]` become `_`.
pub fn sanitize_id(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with('.') {
        format!("_{s}")
    } else {
        s
    }
}

pub fn graph_path(dir: &Path, sentence_id: &str) -> PathBuf {
    dir.join(format!("{}{GRAPH_SUFFIX}", sanitize_id(sentence_id)))
}

/// All graphs in `dir`, ordered by file name.
pub fn load_graphs(dir: &Path) -> Result<Vec<(PathBuf, KnowledgeGraph)>, IoError> {
    let entries = fs::read_dir(dir).map_err(|e| IoError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| IoError::io(dir, e))?.path();
        let is_graph = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(GRAPH_SUFFIX) && !n.starts_with('.'));
        if is_graph {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let kg: KnowledgeGraph = read_json(&p)?;
            kg.validate().map_err(|e| IoError::Invalid {
                path: p.clone(),
                message: e.to_string(),
            })?;
            Ok((p, kg))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitize() {
        assert_eq!(sanitize_id("task1/s-01"), "task1_s-01");
        assert_eq!(sanitize_id("..x"), "_..x");
        assert_eq!(sanitize_id(""), "_");
    }

    #[test]
    fn jsonl_collects_line_numbered_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        fs::write(&path, "{\"a\": 1}\n\nnot json\n{\"a\": 2}\n{\"b\": 3}\n").unwrap();
        #[derive(serde::Deserialize, Debug)]
        #[allow(dead_code)]
        struct A {
            a: u32,
        }
        let errs = read_jsonl::<A>(&path).unwrap_err();
        let lines: Vec<usize> = errs
            .iter()
            .map(|e| match e {
                IoError::Schema { line, .. } => *line,
                other => panic!("{other}"),
            })
            .collect();
        assert_eq!(lines, vec![3, 5]);
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn graphs_load_sorted() {
        let dir = tempfile::tempdir().unwrap();
        for id in ["b", "a"] {
            let mut kg = KnowledgeGraph::skeleton(2, &[(1, 2)]);
            kg.sentence_id = id.into();
            write_json(&graph_path(dir.path(), id), &kg).unwrap();
        }
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let ids: Vec<String> = load_graphs(dir.path())
            .unwrap()
            .into_iter()
            .map(|(_, g)| g.sentence_id)
            .collect();
        assert_eq!(ids, vec!["a", "b"]);
    }
}
