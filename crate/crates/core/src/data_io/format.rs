use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, Split};
use crate::error::{Error, Result};
use crate::graph::LabeledGraph;
use crate::numerics::{DenseMatrix, SparseMatrix};

pub const MANIFEST_FILE: &str = "meta.json";
const EDGES_FILE: &str = "edges.txt";
const FEATURES_FILE: &str = "features.txt";
const LABELS_FILE: &str = "labels.txt";

fn split_file(split: Split) -> &'static str {
    match split {
        Split::Train => "train.txt",
        Split::Val => "val.txt",
        Split::Test => "test.txt",
    }
}

/// Dataset manifest stored as `meta.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    /// Nodes.
    pub n: usize,
    /// Feature dimension.
    pub p: usize,
    /// Classes.
    pub d: usize,
    /// Edge lines in `edges.txt`, counted before deduplication.
    pub edges: usize,
    /// Lines in `labels.txt`.
    pub labeled: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// Free-form notes, e.g. documented preprocessing fixes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile {
            path: path.to_path_buf(),
        });
    }
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_index(path: &Path, line: usize, tok: &str, n: usize) -> Result<usize> {
    let index: usize = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("expected a node index, found {tok:?}")))?;
    if index >= n {
        return Err(Error::IndexOutOfRange {
            path: path.to_path_buf(),
            line,
            index,
            n,
        });
    }
    Ok(index)
}

fn check_count(path: &Path, line: usize, field: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::CountMismatch {
            path: path.to_path_buf(),
            line,
            field,
            expected,
            found,
        });
    }
    Ok(())
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let file = |name: &str| -> PathBuf { dir.join(name) };

    let manifest_path = file(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_str(&read_text(&manifest_path)?)
        .map_err(|e| parse_err(&manifest_path, e.line(), format!("invalid manifest: {e}")))?;
    let n = manifest.n;
    let mut warnings = Vec::new();

    // edges
    let path = file(EDGES_FILE);
    let text = read_text(&path)?;
    let mut triplets = Vec::new();
    let mut edge_lines = 0;
    let mut last_line = 0;
    for (line, content) in content_lines(&text) {
        last_line = line;
        edge_lines += 1;
        let mut toks = content.split_whitespace();
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(parse_err(&path, line, format!("expected `src dst`, found {content:?}")));
        };
        let a = parse_index(&path, line, a, n)?;
        let b = parse_index(&path, line, b, n)?;
        if a == b {
            let msg = format!("{}:{line}: self-loop on node {a} dropped", path.display());
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        triplets.push((a, b, 1.0));
        triplets.push((b, a, 1.0));
    }
    check_count(&path, last_line, "edges", manifest.edges, edge_lines)?;
    triplets.sort_by_key(|t| (t.0, t.1));
    triplets.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
    let adjacency = SparseMatrix::from_triplets(n, triplets)?;
    let undirected_edges = adjacency.nnz() / 2;

    // features
    let path = file(FEATURES_FILE);
    let text = read_text(&path)?;
    let mut features = DenseMatrix::zeros(n, manifest.p);
    let mut rows = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        rows += 1;
        if i >= n {
            continue;
        }
        for tok in raw.split_whitespace() {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(&path, line, format!("expected `idx:value`, found {tok:?}")))?;
            let idx = parse_index(&path, line, idx, manifest.p)?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(&path, line, format!("bad feature value {val:?}")))?;
            if !val.is_finite() {
                return Err(parse_err(&path, line, format!("non-finite feature value {val}")));
            }
            features.set(i, idx, val);
        }
    }
    check_count(&path, rows, "n", n, rows)?;

    // labels
    let path = file(LABELS_FILE);
    let text = read_text(&path)?;
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut labeled = 0;
    last_line = 0;
    for (line, content) in content_lines(&text) {
        last_line = line;
        labeled += 1;
        let mut toks = content.split_whitespace();
        let (Some(node), Some(class), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(parse_err(
                &path,
                line,
                format!("expected `node class`, found {content:?}"),
            ));
        };
        let node = parse_index(&path, line, node, n)?;
        let class = parse_index(&path, line, class, manifest.d)?;
        if labels[node].replace(class).is_some() {
            return Err(parse_err(&path, line, format!("node {node} labeled twice")));
        }
    }
    check_count(&path, last_line, "labeled", manifest.labeled, labeled)?;

    // splits
    let mut owner: Vec<Option<Split>> = vec![None; n];
    let mut splits: [Vec<usize>; 3] = Default::default();
    for (slot, split) in [Split::Train, Split::Val, Split::Test].into_iter().enumerate() {
        let path = file(split_file(split));
        let text = read_text(&path)?;
        last_line = 0;
        for (line, content) in content_lines(&text) {
            last_line = line;
            let node = parse_index(&path, line, content, n)?;
            if let Some(other) = owner[node] {
                return Err(Error::OverlappingSplits {
                    path: path.clone(),
                    line,
                    node,
                    other: other.to_string(),
                });
            }
            owner[node] = Some(split);
            if split == Split::Train && labels[node].is_none() {
                return Err(parse_err(&path, line, format!("training node {node} has no label")));
            }
            splits[slot].push(node);
        }
        let (field, expected) = match split {
            Split::Train => ("train", manifest.train),
            Split::Val => ("val", manifest.val),
            Split::Test => ("test", manifest.test),
        };
        check_count(&path, last_line, field, expected, splits[slot].len())?;
    }
    let [train, val, test] = splits;

    let graph = LabeledGraph::new(adjacency, features, labels, manifest.d)?;
    Ok(Dataset {
        name: manifest.name,
        graph,
        train,
        val,
        test,
        edge_lines,
        undirected_edges,
        warnings,
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `dataset` in the directory format read by [`load_dataset`].
/// Each undirected edge is written once, as `i j` with `i < j`.
pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let g = &dataset.graph;

    let path = dir.join(EDGES_FILE);
    let mut w = create(&path)?;
    let mut edges = 0;
    for (i, j, _) in g.adjacency.iter().filter(|&(i, j, _)| i < j) {
        writeln!(w, "{i} {j}").map_err(io_at(&path))?;
        edges += 1;
    }
    w.flush().map_err(io_at(&path))?;

    let path = dir.join(FEATURES_FILE);
    let mut w = create(&path)?;
    for row in g.features.row_iter() {
        let mut first = true;
        for (idx, &v) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            if !first {
                write!(w, " ").map_err(io_at(&path))?;
            }
            write!(w, "{idx}:{v}").map_err(io_at(&path))?;
            first = false;
        }
        writeln!(w).map_err(io_at(&path))?;
    }
    w.flush().map_err(io_at(&path))?;

    let path = dir.join(LABELS_FILE);
    let mut w = create(&path)?;
    let mut labeled = 0;
    for (i, c) in g.labels.iter().enumerate() {
        if let Some(c) = c {
            writeln!(w, "{i} {c}").map_err(io_at(&path))?;
            labeled += 1;
        }
    }
    w.flush().map_err(io_at(&path))?;

    for split in [Split::Train, Split::Val, Split::Test] {
        let path = dir.join(split_file(split));
        let mut w = create(&path)?;
        for i in dataset.split(split) {
            writeln!(w, "{i}").map_err(io_at(&path))?;
        }
        w.flush().map_err(io_at(&path))?;
    }

    let manifest = Manifest {
        name: dataset.name.clone(),
        n: g.num_nodes(),
        p: g.num_features(),
        d: g.num_classes,
        edges,
        labeled,
        train: dataset.train.len(),
        val: dataset.val.len(),
        test: dataset.test.len(),
        notes: Vec::new(),
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(io_at(&path))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        fs::write(dir.join(name), text).unwrap();
    }

    fn manifest(edges: usize) -> String {
        format!(r#"{{"name":"tiny","n":4,"p":3,"d":2,"edges":{edges},"labeled":4,"train":2,"val":1,"test":1}}"#)
    }

    fn tiny(dir: &Path, edges: &str, edge_count: usize) {
        write(dir, MANIFEST_FILE, &manifest(edge_count));
        write(dir, EDGES_FILE, edges);
        write(dir, FEATURES_FILE, "0:1 2:0.5\n\n1:2\n0:1 1:1 2:1\n");
        write(dir, LABELS_FILE, "0 0\n1 0\n2 1\n3 1\n");
        write(dir, "train.txt", "0\n2\n");
        write(dir, "val.txt", "1\n");
        write(dir, "test.txt", "3\n");
    }

    #[test]
    fn duplicate_and_reciprocal_edges_collapse() {
        let tmp = tempfile::tempdir().unwrap();
        tiny(tmp.path(), "0 1\n1 0\n0 1\n2 3\n", 4);
        let ds = load_dataset(tmp.path()).unwrap();
        assert_eq!(ds.graph.adjacency.nnz(), 4);
        assert_eq!(ds.graph.adjacency.get(0, 1), 1.0);
        assert_eq!(ds.undirected_edges, 2);
        assert_eq!(ds.edge_lines, 4);
        assert_eq!(ds.graph.features.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(ds.graph.features.get(0, 2), 0.5);
        assert!(ds.warnings.is_empty());
    }

    #[test]
    fn self_loops_are_dropped_with_warning() {
        let tmp = tempfile::tempdir().unwrap();
        tiny(tmp.path(), "0 1\n2 2\n", 2);
        let ds = load_dataset(tmp.path()).unwrap();
        assert_eq!(ds.graph.adjacency.nnz(), 2);
        assert_eq!(ds.warnings.len(), 1);
        assert!(ds.warnings[0].contains("edges.txt:2"));
    }

    #[test]
    fn diagnostics_are_distinct_and_located() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();

        tiny(dir, "0 1\n1 7\n", 2);
        let err = load_dataset(dir).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { line: 2, index: 7, .. }), "{err}");
        assert!(err.to_string().contains("edges.txt:2"));

        tiny(dir, "0 1\n", 3);
        let err = load_dataset(dir).unwrap_err();
        assert!(
            matches!(
                err,
                Error::CountMismatch {
                    field: "edges",
                    expected: 3,
                    found: 1,
                    ..
                }
            ),
            "{err}"
        );

        tiny(dir, "0 1\n", 1);
        write(dir, "test.txt", "2\n");
        let err = load_dataset(dir).unwrap_err();
        assert!(
            matches!(err, Error::OverlappingSplits { node: 2, line: 1, .. }),
            "{err}"
        );
        assert!(err.to_string().contains("test.txt:1"));

        tiny(dir, "0 1\n", 1);
        fs::remove_file(dir.join(LABELS_FILE)).unwrap();
        assert!(matches!(load_dataset(dir).unwrap_err(), Error::MissingFile { .. }));

        tiny(dir, "0 x\n", 1);
        let err = load_dataset(dir).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }
}
