//! File formats: headed CSV matrices, JSON edge lists, posteriors and run
//! manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dag, Dataset};
use crate::posterior::NetworkPosterior;
use crate::scores::MetricKind;

/// Decimal form with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a comma-separated matrix with a header row of column names.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, crate::numerics::Matrix)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let names: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != names.len() {
            return Err(Error::Invalid(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                r + 1,
                record.len(),
                names.len()
            )));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Invalid(format!("{}: row {}, column `{}`: `{field}` is not a number", path.display(), r + 1, names[c]))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    Ok((names.clone(), crate::numerics::Matrix::from_row_slice(rows, names.len(), &values)))
}

pub fn write_matrix_csv(path: &Path, names: &[String], m: &crate::numerics::Matrix) -> Result<()> {
    if names.len() != m.ncols() {
        return Err(Error::dims("csv header", m.ncols(), names.len()));
    }
    if m.ncols() == 0 {
        // No columns: an empty file rather than rows of empty records.
        std::fs::write(path, "")?;
        return Ok(());
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names)?;
    for r in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|c| fmt_f64(m[(r, c)])))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `X.csv` and optionally `Q.csv` into a validated dataset.
pub fn read_dataset(x_path: &Path, q_path: Option<&Path>) -> Result<Dataset> {
    let (x_names, x) = read_matrix_csv(x_path)?;
    let (q_names, mut q) = match q_path {
        Some(p) => read_matrix_csv(p)?,
        None => (Vec::new(), crate::numerics::Matrix::zeros(x.nrows(), 0)),
    };
    if q.ncols() == 0 {
        q = crate::numerics::Matrix::zeros(x.nrows(), 0);
    }
    Dataset::new(x, q, x_names, q_names)
}

/// Writes `X.csv` and `Q.csv` into `dir`, returning their paths.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<(PathBuf, PathBuf)> {
    let xp = dir.join("X.csv");
    let qp = dir.join("Q.csv");
    write_matrix_csv(&xp, ds.variable_names(), ds.x())?;
    write_matrix_csv(&qp, ds.exogenous_names(), ds.q())?;
    Ok((xp, qp))
}

/// Writes rows of already formatted fields under a header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Edge list keyed by variable names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub variables: Vec<String>,
    /// `[parent, child]` pairs.
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
}

impl GraphDoc {
    pub fn from_dag(g: &Dag, names: &[String]) -> Self {
        GraphDoc {
            variables: names.to_vec(),
            edges: g.edges().into_iter().map(|(a, b)| (names[a].clone(), names[b].clone())).collect(),
            metric: None,
            score: None,
            manifest: None,
        }
    }

    /// Resolves the edge list against `names`, which need not be in the
    /// document's order.
    pub fn to_dag(&self, names: &[String]) -> Result<Dag> {
        let index = |v: &str| {
            names
                .iter()
                .position(|n| n == v)
                .ok_or_else(|| Error::InvalidGraph(format!("unknown variable `{v}` in graph")))
        };
        let edges = self
            .edges
            .iter()
            .map(|(a, b)| Ok((index(a)?, index(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Dag::from_edges(names.len(), &edges)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePosteriorDoc {
    pub node: String,
    pub parents: Vec<String>,
    pub mu: Vec<f64>,
    /// Rows of `A`; the conditional covariance of `γ` is `ψ A⁻¹`.
    pub precision: Vec<Vec<f64>>,
    pub shape: f64,
    pub rate: f64,
    pub m_used: usize,
    pub n_eff: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDoc {
    pub metric: MetricKind,
    pub nodes: Vec<NodePosteriorDoc>,
    pub manifest: String,
}

impl PosteriorDoc {
    pub fn new(net: &NetworkPosterior, names: &[String], manifest: &str) -> Self {
        let nodes = net
            .nodes
            .iter()
            .enumerate()
            .map(|(i, np)| {
                let a = np.precision.matrix();
                NodePosteriorDoc {
                    node: names[i].clone(),
                    parents: net.parents(i).iter().map(|&j| names[j].clone()).collect(),
                    mu: np.mu.iter().copied().collect(),
                    precision: (0..a.nrows()).map(|r| a.row(r).iter().copied().collect()).collect(),
                    shape: np.shape,
                    rate: np.rate,
                    m_used: np.m_used,
                    n_eff: np.n_eff,
                }
            })
            .collect();
        PosteriorDoc {
            metric: net.metric,
            nodes,
            manifest: manifest.to_owned(),
        }
    }
}

/// Seconds since the Unix epoch.
pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_file: Option<String>,
    /// Resolved parameters after applying defaults, config file and flags.
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn start(command: &str, config_file: Option<&Path>, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_owned(),
            config_file: config_file.map(|p| p.display().to_string()),
            parameters,
            seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            started_unix: unix_now(),
            finished_unix: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn finish(mut self, dir: &Path, outputs: &[PathBuf]) -> Result<PathBuf> {
        self.finished_unix = unix_now();
        self.outputs = outputs
            .iter()
            .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned()))
            .collect();
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, &self)?;
        Ok(path)
    }
}
