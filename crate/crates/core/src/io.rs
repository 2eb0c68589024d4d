//! File formats: CSV tables (17 significant digits, header row) and JSON
//! documents, written atomically through a temp file and rename.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hermite::QuadratureGrid;
use crate::operator::OperatorMatrix;
use crate::scalar::{Cx, Real};
use crate::state::{GridState, Perspective, StateVector};
use crate::symmetry::PropertyReport;

/// Round-trip-exact decimal for a double: 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| LabError::Config(format!("not a number: {s:?}")))
}

/// Writes `bytes` to `path` via a sibling temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| LabError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| LabError::io(path, e))
}

/// A CSV document held in memory until written.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner()
            .map_err(|e| LabError::Numerical(format!("csv buffer: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let got: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if got != header {
        return Err(LabError::Config(format!(
            "{}: expected header {header:?}, found {got:?}",
            path.display()
        )));
    }
    r.records().map(|rec| rec.map_err(LabError::from)).collect()
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// `name,residual,tolerance,pass`.
pub fn report_table(report: &PropertyReport) -> Table {
    let mut t = Table::new(&["name", "residual", "tolerance", "pass"]);
    for c in &report.checks {
        t.push(vec![c.name.clone(), fmt_num(c.residual), fmt_num(c.tolerance), c.pass.to_string()]);
    }
    t
}

/// `row,col,re,im` for nonzero entries.
pub fn operator_table<T: Real>(op: &OperatorMatrix<T>) -> Table {
    let mut t = Table::new(&["row", "col", "re", "im"]);
    for ((r, c), z) in op.entries().indexed_iter() {
        if z.re != T::zero() || z.im != T::zero() {
            t.push(vec![r.to_string(), c.to_string(), fmt_num(z.re.widen()), fmt_num(z.im.widen())]);
        }
    }
    t
}

/// `n,re,im`.
pub fn coefficient_table<T: Real>(s: &StateVector<T>) -> Table {
    let mut t = Table::new(&["n", "re", "im"]);
    for (n, z) in s.coeffs().iter().enumerate() {
        t.push(vec![n.to_string(), fmt_num(z.re.widen()), fmt_num(z.im.widen())]);
    }
    t
}

pub fn read_coefficients(path: &Path) -> Result<StateVector<f64>> {
    let rows = read_rows(path, &["n", "re", "im"])?;
    let mut coeffs = Vec::with_capacity(rows.len());
    for (k, rec) in rows.iter().enumerate() {
        let n: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| LabError::Config(format!("bad index {:?}", &rec[0])))?;
        if n != k {
            return Err(LabError::Config(format!("coefficient rows out of order at {n}")));
        }
        coeffs.push(Cx::new(parse_num(&rec[1])?, parse_num(&rec[2])?));
    }
    Ok(StateVector::from_coeffs(Array1::from(coeffs)))
}

/// Unfolded `x,re,im` samples of folded grid data.
pub fn grid_function_table<T: Real>(grid: &QuadratureGrid<T>, samples: &Array1<Cx<T>>) -> Result<Table> {
    let values = grid.unfold(samples)?;
    let mut t = Table::new(&["x", "re", "im"]);
    for (x, z) in grid.nodes().iter().zip(values) {
        t.push(vec![fmt_num(x.widen()), fmt_num(z.re.widen()), fmt_num(z.im.widen())]);
    }
    Ok(t)
}

/// JSON sidecar written next to a `x,rho,alpha` state table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSidecar {
    pub perspective: Perspective,
    pub dim: usize,
    pub leakage: f64,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `x,rho,alpha` plus the sidecar `<stem>.json`.
pub fn write_grid_state<T: Real>(path: &Path, state: &GridState<'_, T>, dim: usize, leakage: f64) -> Result<()> {
    let mut t = Table::new(&["x", "rho", "alpha"]);
    for ((x, r), a) in state.grid().nodes().iter().zip(state.rho()).zip(state.phase()) {
        t.push(vec![fmt_num(x.widen()), fmt_num(r.widen()), fmt_num(a.widen())]);
    }
    t.write(path)?;
    write_json(
        &sidecar_path(path),
        &StateSidecar {
            perspective: state.perspective(),
            dim,
            leakage,
        },
    )
}

/// Raw contents of a state table and its sidecar.
#[derive(Clone, Debug)]
pub struct StateFile {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub sidecar: StateSidecar,
}

pub fn read_grid_state(path: &Path) -> Result<StateFile> {
    let rows = read_rows(path, &["x", "rho", "alpha"])?;
    let mut f = StateFile {
        x: Vec::with_capacity(rows.len()),
        rho: Vec::with_capacity(rows.len()),
        alpha: Vec::with_capacity(rows.len()),
        sidecar: read_json(&sidecar_path(path))?,
    };
    for rec in &rows {
        f.x.push(parse_num(&rec[0])?);
        f.rho.push(parse_num(&rec[1])?);
        f.alpha.push(parse_num(&rec[2])?);
    }
    Ok(f)
}
