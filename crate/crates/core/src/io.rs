//! JSON and CSV formats for models, graphs, covariances and samples.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{Cpdag, DirectedTree, Skeleton, UndirectedTree};
use crate::model::{CovarianceMatrix, Dag, GaussianSem, SampleMatrix};

/// `{"d": 3, "edges": [[parent, child, beta], ...], "noise_var": [...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub d: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub noise_var: Vec<f64>,
}

impl From<&GaussianSem> for ModelJson {
    fn from(sem: &GaussianSem) -> Self {
        ModelJson {
            d: sem.d(),
            edges: sem.weighted_edges(),
            noise_var: sem.noise_var().to_vec(),
        }
    }
}

impl TryFrom<ModelJson> for GaussianSem {
    type Error = Error;

    fn try_from(m: ModelJson) -> Result<Self> {
        GaussianSem::new(m.d, &m.edges, m.noise_var)
    }
}

/// `{"d": 3, "root": 0, "edges": [[parent, child], ...]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub d: usize,
    pub root: usize,
    pub edges: Vec<(usize, usize)>,
}

impl From<&DirectedTree> for TreeJson {
    fn from(t: &DirectedTree) -> Self {
        TreeJson {
            d: t.d(),
            root: t.root(),
            edges: t.edges().to_vec(),
        }
    }
}

impl TryFrom<TreeJson> for DirectedTree {
    type Error = Error;

    fn try_from(t: TreeJson) -> Result<Self> {
        let tree = DirectedTree::new(Dag::new(t.d, t.edges)?)?;
        if tree.root() != t.root {
            return Err(Error::Format(format!("declared root {} but edges point away from {}", t.root, tree.root())));
        }
        Ok(tree)
    }
}

/// `{"d": 3, "edges": [[a, b], ...]}` with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonJson {
    pub d: usize,
    pub edges: Vec<(usize, usize)>,
}

impl From<&Skeleton> for SkeletonJson {
    fn from(s: &Skeleton) -> Self {
        SkeletonJson {
            d: s.d(),
            edges: s.edges().collect(),
        }
    }
}

impl From<&UndirectedTree> for SkeletonJson {
    fn from(t: &UndirectedTree) -> Self {
        SkeletonJson::from(t.skeleton())
    }
}

impl TryFrom<SkeletonJson> for Skeleton {
    type Error = Error;

    fn try_from(s: SkeletonJson) -> Result<Self> {
        Skeleton::new(s.d, s.edges)
    }
}

/// `{"d": 3, "directed": [[from, to], ...], "undirected": [[a, b], ...]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpdagJson {
    pub d: usize,
    pub directed: Vec<(usize, usize)>,
    pub undirected: Vec<(usize, usize)>,
}

impl From<&Cpdag> for CpdagJson {
    fn from(c: &Cpdag) -> Self {
        CpdagJson {
            d: c.d(),
            directed: c.directed().iter().copied().collect(),
            undirected: c.undirected().iter().copied().collect(),
        }
    }
}

impl TryFrom<CpdagJson> for Cpdag {
    type Error = Error;

    fn try_from(c: CpdagJson) -> Result<Self> {
        Cpdag::new(c.d, c.directed, c.undirected)
    }
}

/// `{"d": 3, "matrix": [[...], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceJson {
    pub d: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl From<&CovarianceMatrix> for CovarianceJson {
    fn from(c: &CovarianceMatrix) -> Self {
        CovarianceJson {
            d: c.d(),
            matrix: c.to_rows(),
        }
    }
}

impl TryFrom<CovarianceJson> for CovarianceMatrix {
    type Error = Error;

    fn try_from(c: CovarianceJson) -> Result<Self> {
        if c.matrix.len() != c.d {
            return Err(Error::DimensionMismatch {
                expected: c.d,
                found: c.matrix.len(),
            });
        }
        CovarianceMatrix::from_rows(&c.matrix)
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<GaussianSem> {
    read_json::<ModelJson>(path)?.try_into()
}

pub fn read_tree(path: impl AsRef<Path>) -> Result<DirectedTree> {
    read_json::<TreeJson>(path)?.try_into()
}

/// Writes samples as CSV, one row per sample, optionally preceded by a
/// header row `x0,x1,…`.
pub fn write_samples<W: Write>(writer: W, data: &SampleMatrix, header: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if header {
        w.write_record((0..data.d()).map(|k| format!("x{k}")))?;
    }
    let m = data.matrix();
    for i in 0..data.n() {
        w.write_record((0..data.d()).map(|k| m[(i, k)].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads CSV samples; a first row that does not parse as numbers is taken as
/// a header.
pub fn read_samples<R: Read>(reader: R) -> Result<SampleMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut values = Vec::new();
    let mut d = None;
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Format(format!("row {}: {e}", line + 1))),
        };
        match d {
            None => d = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Format(format!("row {} has {} columns, expected {d}", line + 1, row.len())))
            }
            _ => {}
        }
        values.extend(row);
    }
    let d = d.ok_or_else(|| Error::Format("no data rows".into()))?;
    let n = values.len() / d;
    SampleMatrix::new(DMatrix::from_row_slice(n, d, &values))
}

pub fn read_samples_file(path: impl AsRef<Path>) -> Result<SampleMatrix> {
    read_samples(BufReader::new(File::open(path)?))
}

pub fn write_samples_file(path: impl AsRef<Path>, data: &SampleMatrix, header: bool) -> Result<()> {
    write_samples(BufWriter::new(File::create(path)?), data, header)
}
