//! Experiment registry, configuration, and result emission.
//!
//! Each experiment is a pure function of its validated config: rerunning a
//! config with the same seed reproduces the output byte for byte. Tables
//! carry a provenance block (config echo, toolkit version, seed) in every
//! emission format.

pub mod checks;
mod experiments;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{build_exponent, lerner_grid, Exponent, ExponentSpec};
use crate::grid::Grid;

pub use experiments::{
    lerner_trend, run_experiment, shift_domination_constant, shift_lattice, TrendPoint,
};

/// One table cell: tagged so +-inf sentinels survive serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Real(f64),
    Int(i64),
}

impl Cell {
    pub fn s(v: impl Into<String>) -> Cell {
        Cell::Str(v.into())
    }

    pub fn r(v: f64) -> Cell {
        Cell::Real(v)
    }

    pub fn i(v: i64) -> Cell {
        Cell::Int(v)
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Str(s) => serde_json::Value::String(s.clone()),
            Cell::Int(i) => serde_json::Value::from(*i),
            Cell::Real(v) => {
                if v.is_finite() {
                    serde_json::Value::from(*v)
                } else if v.is_nan() {
                    serde_json::Value::String("nan".into())
                } else if *v > 0.0 {
                    serde_json::Value::String("inf".into())
                } else {
                    serde_json::Value::String("-inf".into())
                }
            }
        }
    }

    fn from_json(v: &serde_json::Value) -> Result<Cell> {
        match v {
            serde_json::Value::String(s) if s == "inf" => Ok(Cell::Real(f64::INFINITY)),
            serde_json::Value::String(s) if s == "-inf" => Ok(Cell::Real(f64::NEG_INFINITY)),
            serde_json::Value::String(s) if s == "nan" => Ok(Cell::Real(f64::NAN)),
            serde_json::Value::String(s) => Ok(Cell::Str(s.clone())),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Cell::Int(i))
                } else if let Some(f) = n.as_f64() {
                    Ok(Cell::Real(f))
                } else {
                    Err(Error::Config { fields: vec![format!("unrepresentable number {n}")] })
                }
            }
            other => Err(Error::Config { fields: vec![format!("bad cell {other}")] }),
        }
    }

    fn to_csv_field(&self) -> String {
        match self {
            Cell::Str(s) => {
                let escaped = s.replace('"', "\"\"");
                format!("\"{escaped}\"")
            }
            Cell::Int(i) => i.to_string(),
            Cell::Real(v) => fmt_real(*v),
        }
    }
}

/// Shortest round-trip decimal; non-finite values as bare words.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        let s = format!("{v}");
        if s.contains('.') || s.contains('e') {
            s
        } else {
            format!("{s}.0")
        }
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub experiment: String,
    pub seed: u64,
    pub version: String,
    /// Canonical echo of the validated config.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub provenance: Provenance,
}

impl ResultTable {
    pub fn new(columns: &[&str], provenance: Provenance) -> ResultTable {
        ResultTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            provenance,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match columns");
        self.rows.push(row);
    }

    pub fn has_sentinel(&self) -> bool {
        self.rows
            .iter()
            .flatten()
            .any(|c| matches!(c, Cell::Real(v) if !v.is_finite()))
    }

    /// CSV per RFC 4180 with `#`-prefixed provenance comment lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# experiment: {}\n", self.provenance.experiment));
        out.push_str(&format!("# seed: {}\n", self.provenance.seed));
        out.push_str(&format!("# version: {}\n", self.provenance.version));
        out.push_str(&format!("# config: {}\n", self.provenance.config));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::to_csv_field).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<serde_json::Value>> =
            self.rows.iter().map(|r| r.iter().map(Cell::to_json).collect()).collect();
        let doc = serde_json::json!({
            "provenance": self.provenance,
            "columns": self.columns,
            "rows": rows,
        });
        serde_json::to_string_pretty(&doc).expect("table serializes")
    }

    pub fn from_json(text: &str) -> Result<ResultTable> {
        #[derive(Deserialize)]
        struct Raw {
            provenance: Provenance,
            columns: Vec<String>,
            rows: Vec<Vec<serde_json::Value>>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        let mut rows = Vec::with_capacity(raw.rows.len());
        for r in &raw.rows {
            let row: Result<Vec<Cell>> = r.iter().map(Cell::from_json).collect();
            rows.push(row?);
        }
        Ok(ResultTable { columns: raw.columns, rows, provenance: raw.provenance })
    }
}

/// Grid recipe accepted in configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridSpec {
    Uniform1d { a: f64, b: f64, cells: usize },
    Boundaries { edges: Vec<f64> },
    Uniform2d { a: [f64; 2], b: [f64; 2], cells: [usize; 2] },
    /// Log-spaced grid resolving the lacunary intervals up to k_max.
    Lerner { k_max: u32, cells_per_unit_log: f64 },
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<Grid>> {
        match self {
            GridSpec::Uniform1d { a, b, cells } => Ok(Arc::new(Grid::uniform_1d(*a, *b, *cells)?)),
            GridSpec::Boundaries { edges } => Ok(Arc::new(Grid::new(1, vec![edges.clone()])?)),
            GridSpec::Uniform2d { a, b, cells } => Ok(Arc::new(Grid::uniform_2d(*a, *b, *cells)?)),
            GridSpec::Lerner { k_max, cells_per_unit_log } => {
                lerner_grid(*k_max, *cells_per_unit_log)
            }
        }
    }
}

/// A full experiment configuration: one JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<ExponentSpec>,
    /// Experiment-specific parameters; validated at dispatch.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config { fields: vec![e.to_string()] })
    }

    pub(crate) fn grid(&self) -> Result<Arc<Grid>> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config { fields: vec!["grid (missing)".into()] })?
            .build()
    }

    pub(crate) fn exponent(&self, grid: &Arc<Grid>) -> Result<Exponent> {
        let spec = self
            .exponent
            .as_ref()
            .ok_or_else(|| Error::Config { fields: vec!["exponent (missing)".into()] })?;
        build_exponent(grid, spec)
    }

    pub(crate) fn params<P: for<'de> Deserialize<'de>>(&self) -> Result<P> {
        let v = if self.params.is_null() {
            serde_json::Value::Object(serde_json::Map::new())
        } else {
            self.params.clone()
        };
        serde_json::from_value(v).map_err(|e| Error::Config { fields: vec![format!("params: {e}")] })
    }

    pub(crate) fn provenance(&self) -> Provenance {
        Provenance {
            experiment: self.experiment.clone(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(self).expect("config reserializes"),
        }
    }
}

/// Registry: experiment ids with one-line descriptions of what each measures.
pub fn experiments() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "partition-ratio",
            "partition-sum norm vs sequence-norm ratio brackets over sampled local partitions (primal and dual exponents)",
        ),
        (
            "local-global",
            "full-domain norm vs l^{p_inf} aggregate of per-cube norms over the origin-ordered equal-cube partition",
        ),
        (
            "lerner-scan",
            "averaging-operator probe on the lacunary-interval exponent: global-partition estimates per interval count vs local-partition stability, swept over beta",
        ),
        (
            "sf-equiv",
            "square-function norm equivalence bracket |S f|/|f| over a generated family",
        ),
        (
            "fs-vector",
            "vector-valued local maximal bound: l^q aggregate of maximal functions vs aggregate of inputs",
        ),
        ("apx-report", "cube-family probe of the indicator-norm product constant (global and local)"),
        (
            "shift-dyadic",
            "local maximal function against the shift-averaged dyadic maximal: empirical domination constant",
        ),
        (
            "nfun-checks",
            "N-function mean inequalities, conjugation identities, and alpha ratio brackets on sampled cubes",
        ),
        (
            "domination",
            "hypothesis-to-conclusion sum bound over sampled partitions, with level-integrated CZ sums",
        ),
    ]
}
