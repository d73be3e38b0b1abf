//! Text formats: edge lists, labels, features, matrices and result tables.
//!
//! Edge list: one `u v` pair of 0-based node ids per line, separated by spaces or tabs.
//! Labels: whitespace-separated class ids in node order (any layout). Features: one row of
//! numbers per node, separated by whitespace or commas. Lines that are blank or start with
//! `#` are ignored everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::GapReport;
use crate::conv::ConvKind;
use crate::dcsbm::Graph;
use crate::kernel::KernelMatrix;
use crate::{Error, Mat, Real, Result};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Edge pairs in file order.
pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = read(path)?;
    let mut edges = Vec::new();
    for (no, line) in content_lines(&text) {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 2 {
            return Err(parse_err(path, no, format!("expected 2 node ids, found {}", tok.len())));
        }
        let id = |t: &str| t.parse::<usize>().map_err(|_| parse_err(path, no, format!("bad node id '{t}'")));
        edges.push((id(tok[0])?, id(tok[1])?));
    }
    Ok(edges)
}

/// Class ids in node order; they must cover `0..K` without gaps.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read(path)?;
    let mut labels = Vec::new();
    for (no, line) in content_lines(&text) {
        for t in line.split_whitespace() {
            labels.push(t.parse::<usize>().map_err(|_| parse_err(path, no, format!("bad label '{t}'")))?);
        }
    }
    check_label_cover(&labels).map_err(|msg| parse_err(path, 0, msg))?;
    Ok(labels)
}

fn check_label_cover(labels: &[usize]) -> std::result::Result<(), String> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; k];
    for &c in labels {
        seen[c] = true;
    }
    match seen.iter().position(|s| !s) {
        Some(c) => Err(format!("labels skip class {c}")),
        None => Ok(()),
    }
}

/// Numeric rows separated by whitespace or commas.
pub fn read_features<T: Real>(path: &Path) -> Result<Mat<T>> {
    let text = read(path)?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (no, line) in content_lines(&text) {
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map(T::lit).map_err(|_| parse_err(path, no, format!("bad number '{t}'"))))
            .collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(path, no, format!("{} columns, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, |r| r.len());
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Graph, labels and optional features of one dataset.
#[derive(Clone, Debug)]
pub struct Dataset<T: Real> {
    pub name: String,
    pub graph: Graph<T>,
    /// `None` selects orthonormal features (`X X^T = I`).
    pub features: Option<Mat<T>>,
    pub labels: Vec<usize>,
}

impl<T: Real> Dataset<T> {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn features_or_identity(&self) -> Mat<T> {
        self.features.clone().unwrap_or_else(|| Mat::identity(self.n(), self.n()))
    }
}

/// Symmetric 0/1 adjacency from an edge list. Duplicates and reversed duplicates collapse.
pub fn adjacency_from_edges<T: Real>(n: usize, edges: &[(usize, usize)]) -> Result<Mat<T>> {
    let mut a = Mat::zeros(n, n);
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::param(format!("edge ({u}, {v}) references a node outside 0..{n}")));
        }
        a[(u, v)] = T::one();
        a[(v, u)] = T::one();
    }
    Ok(a)
}

/// Node count comes from the label file.
pub fn load_dataset<T: Real>(edge_path: &Path, label_path: &Path, feature_path: Option<&Path>) -> Result<Dataset<T>> {
    let labels = read_labels(label_path)?;
    let n = labels.len();
    let edges = read_edge_list(edge_path)?;
    if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= n || v >= n) {
        return Err(Error::param(format!(
            "{}: edge ({u}, {v}) out of range for {n} labelled nodes",
            edge_path.display()
        )));
    }
    let graph = Graph::new(adjacency_from_edges(n, &edges)?, Some(labels.clone()))?;
    let features = match feature_path {
        Some(p) => {
            let x: Mat<T> = read_features(p)?;
            if x.nrows() != n {
                return Err(Error::dim(format!("{}: {} feature rows for {n} nodes", p.display(), x.nrows())));
            }
            Some(x)
        }
        None => None,
    };
    let name = edge_path
        .parent()
        .and_then(|d| d.file_name())
        .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Dataset { name, graph, features, labels })
}

/// `edges.txt`, `labels.txt` and optional `features.txt` inside `dir`.
pub fn load_dataset_dir<T: Real>(dir: &Path) -> Result<Dataset<T>> {
    let features = dir.join("features.txt");
    let mut d = load_dataset(&dir.join("edges.txt"), &dir.join("labels.txt"), features.exists().then_some(features.as_path()))?;
    if let Some(name) = dir.file_name() {
        d.name = name.to_string_lossy().into_owned();
    }
    Ok(d)
}

/// Writes the upper-triangle edges, labels and (optionally) degree corrections of a graph.
pub fn write_graph<T: Real>(dir: &Path, graph: &Graph<T>, pi: Option<&[T]>) -> Result<()> {
    let a = graph.adjacency();
    let mut edges = String::new();
    for i in 0..graph.n() {
        for j in i + 1..graph.n() {
            if a[(i, j)] != T::zero() {
                edges.push_str(&format!("{i}\t{j}\n"));
            }
        }
    }
    write(&dir.join("edges.txt"), &edges)?;
    if let Some(labels) = graph.labels() {
        let body: String = labels.iter().map(|c| format!("{c}\n")).collect();
        write(&dir.join("labels.txt"), &body)?;
    }
    if let Some(pi) = pi {
        let body: String = pi.iter().map(|v| format!("{v}\n")).collect();
        write(&dir.join("pi.txt"), &body)?;
    }
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Json,
}

impl std::str::FromStr for MatrixFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MatrixFormat::Csv),
            "json" => Ok(MatrixFormat::Json),
            _ => Err(Error::param(format!("unknown format '{s}' (csv|json)"))),
        }
    }
}

/// Shortest text that parses back to the same value (at most 17 significant digits).
/// Magnitudes outside `[1e-4, 1e16)` use exponent notation.
pub fn format_value<T: Real>(v: T) -> String {
    let a = v.abs().as_f64();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn matrix_to_csv<T: Real>(m: &Mat<T>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_value(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn matrix_rows<T: Real>(m: &Mat<T>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].as_f64()).collect()).collect()
}

pub fn export_matrix<T: Real>(m: &Mat<T>, path: &Path, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Csv => write(path, &matrix_to_csv(m)),
        MatrixFormat::Json => {
            let body = serde_json::json!({ "rows": m.nrows(), "cols": m.ncols(), "data": matrix_rows(m) });
            write(path, &format!("{body}\n"))
        }
    }
}

/// `<path>.meta.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Matrix payload plus a sidecar carrying convolution, depth, skip, activations and source.
pub fn export_kernel<T: Real>(k: &KernelMatrix<T>, path: &Path, format: MatrixFormat) -> Result<()> {
    export_matrix(&k.values, path, format)?;
    let meta = serde_json::to_string_pretty(&k.meta).map_err(|e| Error::Format(e.to_string()))?;
    write(&sidecar_path(path), &format!("{meta}\n"))
}

pub fn import_matrix_csv<T: Real>(path: &Path) -> Result<Mat<T>> {
    let text = read(path)?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (no, line) in content_lines(&text) {
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map(T::lit).map_err(|_| parse_err(path, no, format!("bad number '{t}'"))))
            .collect::<Result<Vec<T>>>()?;
        if rows.first().is_some_and(|f| f.len() != row.len()) {
            return Err(parse_err(path, no, "ragged row"));
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, |r| r.len());
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct PredictionRow {
    node_id: usize,
    predicted_class: usize,
    true_class: usize,
}

pub fn write_predictions(path: &Path, test: &[usize], pred: &[usize], truth: &[usize]) -> Result<()> {
    if test.len() != pred.len() {
        return Err(Error::dim(format!("{} test nodes, {} predictions", test.len(), pred.len())));
    }
    write_rows(
        path,
        test.iter().zip(pred).map(|(&i, &c)| PredictionRow { node_id: i, predicted_class: c, true_class: truth[i] }),
    )
}

#[derive(Serialize)]
struct GapRow<'a> {
    conv: &'a str,
    depth: usize,
    in_mean: String,
    out_mean: String,
    gap: String,
}

/// `conv,depth,in_mean,out_mean,gap`, one row per report.
pub fn write_gap_csv<T: Real + Serialize>(path: &Path, rows: &[(ConvKind, GapReport<T>)]) -> Result<()> {
    write_rows(
        path,
        rows.iter().map(|(c, r)| GapRow {
            conv: c.name(),
            depth: r.depth,
            in_mean: format_value(r.in_mean),
            out_mean: format_value(r.out_mean),
            gap: format_value(r.gap),
        }),
    )
}

pub fn write_gap_json<T: Real + Serialize>(path: &Path, rows: &[(ConvKind, GapReport<T>)]) -> Result<()> {
    let items: Vec<_> = rows.iter().map(|(c, r)| serde_json::json!({ "conv": c.name(), "report": r })).collect();
    let body = serde_json::to_string_pretty(&items).map_err(|e| Error::Format(e.to_string()))?;
    write(path, &format!("{body}\n"))
}

/// A headed CSV table of already formatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut body = header.join(",");
    body.push('\n');
    for r in rows {
        body.push_str(&r.join(","));
        body.push('\n');
    }
    write(path, &body)
}
