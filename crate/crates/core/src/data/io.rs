//! CSV and JSON file formats.
//!
//! * Dense matrices (signals, dense graphs, distances): one CSV row per
//!   matrix row, no header.
//! * Edge-list graphs: `src,dst,weight` rows (header optional), with a JSON
//!   sidecar next to the CSV (`graph.csv` -> `graph.json`) holding
//!   `{"n": N, "normalized": bool}`. A graph file with a sidecar is read as an
//!   edge list, without one as a dense matrix. An edge from `src` to `dst`
//!   becomes `A[dst, src]`.
//! * Masks: `row,col` pairs of accessible entries (header optional).
//! * Features: one row per node; empty cells mark missing values.
//!
//! Every reader rejects NaN and infinite values.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::knn::FeatureTable;
use super::synth::SyntheticInstance;
use crate::error::{GsrError, Result};
use crate::graph::GraphShift;
use crate::mask::IndexMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSidecar {
    pub n: usize,
    pub normalized: bool,
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?)
}

/// Records as strings, without a leading non-numeric header row.
fn records(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(rec.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    if let Some(first) = rows.first() {
        if first
            .iter()
            .any(|f| !f.is_empty() && f.parse::<f64>().is_err())
        {
            rows.remove(0);
        }
    }
    Ok(rows)
}

fn parse_value(field: &str, path: &Path, row: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| {
        GsrError::Parse(format!(
            "{}: row {}: bad number {field:?}",
            path.display(),
            row + 1
        ))
    })?;
    if !v.is_finite() {
        return Err(GsrError::NonFinite(format!(
            "{} row {}",
            path.display(),
            row + 1
        )));
    }
    Ok(v)
}

fn parse_index(field: &str, path: &Path, row: usize) -> Result<usize> {
    field.parse().map_err(|_| {
        GsrError::Parse(format!(
            "{}: row {}: bad index {field:?}",
            path.display(),
            row + 1
        ))
    })
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let rows = records(path)?;
    let ncols = rows.first().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(rows.len() * ncols);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(GsrError::Parse(format!(
                "{}: row {} has {} fields, expected {ncols}",
                path.display(),
                r + 1,
                row.len()
            )));
        }
        for f in row {
            data.push(parse_value(f, path, r)?);
        }
    }
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &data))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Reads a graph file (see the module docs for the two layouts). An edge
/// list is normalized if its sidecar says so; a dense matrix is marked
/// normalized when its spectral radius is 1.
pub fn read_graph(path: &Path) -> Result<GraphShift> {
    let sidecar = sidecar_path(path);
    if !sidecar.exists() {
        let a = GraphShift::new(read_matrix(path)?)?;
        let radius = crate::graph::spectral_radius(a.weights());
        return if (radius - 1.0).abs() <= 1e-9 {
            GraphShift::new_normalized(a.into_weights())
        } else {
            Ok(a)
        };
    }
    let meta: GraphSidecar = serde_json::from_str(&fs::read_to_string(&sidecar)?)?;
    let mut w = DMatrix::zeros(meta.n, meta.n);
    for (r, row) in records(path)?.iter().enumerate() {
        if row.len() != 3 {
            return Err(GsrError::Parse(format!(
                "{}: row {}: expected src,dst,weight",
                path.display(),
                r + 1
            )));
        }
        let src = parse_index(&row[0], path, r)?;
        let dst = parse_index(&row[1], path, r)?;
        if src >= meta.n || dst >= meta.n {
            return Err(GsrError::Parse(format!(
                "{}: row {}: node out of range for n = {}",
                path.display(),
                r + 1,
                meta.n
            )));
        }
        w[(dst, src)] = parse_value(&row[2], path, r)?;
    }
    if meta.normalized {
        GraphShift::new_normalized(w)
    } else {
        GraphShift::new(w)
    }
}

pub fn write_graph_dense(path: &Path, a: &GraphShift) -> Result<()> {
    write_matrix(path, a.weights())
}

/// Writes the nonzero weights as an edge list plus the JSON sidecar.
pub fn write_graph_edges(path: &Path, a: &GraphShift) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["src", "dst", "weight"])?;
    let m = a.weights();
    for dst in 0..a.size() {
        for src in 0..a.size() {
            let v = m[(dst, src)];
            if v != 0.0 {
                w.write_record([src.to_string(), dst.to_string(), v.to_string()])?;
            }
        }
    }
    w.flush()?;
    let meta = GraphSidecar {
        n: a.size(),
        normalized: a.is_normalized(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_mask(path: &Path, nrows: usize, ncols: usize) -> Result<IndexMask> {
    let mut entries = Vec::new();
    for (r, row) in records(path)?.iter().enumerate() {
        if row.len() != 2 {
            return Err(GsrError::Parse(format!(
                "{}: row {}: expected row,col",
                path.display(),
                r + 1
            )));
        }
        entries.push((
            parse_index(&row[0], path, r)?,
            parse_index(&row[1], path, r)?,
        ));
    }
    IndexMask::from_entries(nrows, ncols, entries)
}

pub fn write_mask(path: &Path, mask: &IndexMask) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "col"])?;
    for (i, j) in mask.entries() {
        w.write_record([i.to_string(), j.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads node features; empty cells are missing values.
pub fn read_features(path: &Path) -> Result<FeatureTable> {
    let rows = records(path)?;
    let ncols = rows.first().map_or(0, Vec::len);
    let n = rows.len();
    let mut values = DMatrix::zeros(n, ncols);
    let mut present = DMatrix::from_element(n, ncols, true);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(GsrError::Parse(format!(
                "{}: row {} has {} fields",
                path.display(),
                r + 1,
                row.len()
            )));
        }
        for (c, f) in row.iter().enumerate() {
            if f.is_empty() {
                present[(r, c)] = false;
            } else {
                values[(r, c)] = parse_value(f, path, r)?;
            }
        }
    }
    if present.iter().all(|p| *p) {
        FeatureTable::new(values)
    } else {
        FeatureTable::with_missing(values, present)
    }
}

/// File names inside a synthetic bundle directory.
pub mod bundle {
    pub const GRAPH: &str = "graph.csv";
    pub const X0: &str = "X0.csv";
    pub const W: &str = "W.csv";
    pub const E: &str = "E.csv";
    pub const T: &str = "T.csv";
    pub const MASK: &str = "mask.csv";
    pub const SPEC: &str = "spec.json";
}

/// Writes a synthetic instance as a bundle directory (dense graph, the four
/// signal matrices, the mask and the generating spec).
pub fn write_bundle<S: Serialize>(
    dir: &Path,
    a: &GraphShift,
    inst: &SyntheticInstance,
    mask: &IndexMask,
    spec: &S,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_graph_dense(&dir.join(bundle::GRAPH), a)?;
    write_matrix(&dir.join(bundle::X0), &inst.x0)?;
    write_matrix(&dir.join(bundle::W), &inst.w)?;
    write_matrix(&dir.join(bundle::E), &inst.e)?;
    write_matrix(&dir.join(bundle::T), &inst.t)?;
    write_mask(&dir.join(bundle::MASK), mask)?;
    fs::write(dir.join(bundle::SPEC), serde_json::to_string_pretty(spec)?)?;
    Ok(())
}

/// Contents of a bundle directory.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub graph: GraphShift,
    pub instance: SyntheticInstance,
    pub mask: IndexMask,
}

pub fn read_bundle(dir: &Path) -> Result<Bundle> {
    let graph = read_graph(&dir.join(bundle::GRAPH))?;
    let t = read_matrix(&dir.join(bundle::T))?;
    let instance = SyntheticInstance {
        x0: read_matrix(&dir.join(bundle::X0))?,
        w: read_matrix(&dir.join(bundle::W))?,
        e: read_matrix(&dir.join(bundle::E))?,
        t,
    };
    let (n, l) = instance.t.shape();
    for m in [&instance.x0, &instance.w, &instance.e] {
        if m.shape() != (n, l) {
            return Err(GsrError::DimensionMismatch(
                "bundle matrices differ in shape".into(),
            ));
        }
    }
    let mask = read_mask(&dir.join(bundle::MASK), n, l)?;
    Ok(Bundle {
        graph,
        instance,
        mask,
    })
}
