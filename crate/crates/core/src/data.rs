//! Reference tables: the simulated `(model, parameters, summaries)` records
//! every classifier trains on, plus their CSV form.
//!
//! The file format is one header line
//! `model[,param_<name>...][,stat_<name>...]` followed by one record per
//! line. Model indices are 1-based in files and in memory.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// 1-based model index.
pub type ModelIndex = usize;

const PARAM_PREFIX: &str = "param_";
const STAT_PREFIX: &str = "stat_";

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    pub model: ModelIndex,
    pub params: Vec<f64>,
    pub summaries: Vec<f64>,
}

impl SimulationRecord {
    pub fn new(model: ModelIndex, params: Vec<f64>, summaries: Vec<f64>) -> Self {
        SimulationRecord {
            model,
            params,
            summaries,
        }
    }
}

/// Immutable collection of simulation records sharing one summary layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    records: Vec<SimulationRecord>,
    param_names: Vec<String>,
    summary_names: Vec<String>,
    n_models: usize,
}

impl ReferenceTable {
    /// Builds a table, checking column counts, finiteness and model range.
    ///
    /// `n_models` is the size M of the model collection; every record must
    /// have `1 <= model <= M`.
    pub fn new(
        param_names: Vec<String>,
        summary_names: Vec<String>,
        n_models: usize,
        records: Vec<SimulationRecord>,
    ) -> Result<Self> {
        check_names(&param_names, "parameter")?;
        check_names(&summary_names, "summary")?;
        for (i, r) in records.iter().enumerate() {
            if r.model == 0 || r.model > n_models {
                return Err(Error::arg(format!(
                    "record {i}: model index {} outside 1..={n_models}",
                    r.model
                )));
            }
            if r.params.len() != param_names.len() {
                return Err(Error::arg(format!(
                    "record {i}: {} parameters, expected {}",
                    r.params.len(),
                    param_names.len()
                )));
            }
            if r.summaries.len() != summary_names.len() {
                return Err(Error::arg(format!(
                    "record {i}: {} summaries, expected {}",
                    r.summaries.len(),
                    summary_names.len()
                )));
            }
            if let Some(j) = r.summaries.iter().position(|v| !v.is_finite()) {
                return Err(Error::arg(format!(
                    "record {i}: summary {} is not finite",
                    summary_names[j]
                )));
            }
            if r.params.iter().any(|v| !v.is_finite()) {
                return Err(Error::arg(format!("record {i}: non-finite parameter")));
            }
        }
        Ok(ReferenceTable {
            records,
            param_names,
            summary_names,
            n_models,
        })
    }

    pub fn records(&self) -> &[SimulationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn n_summaries(&self) -> usize {
        self.summary_names.len()
    }

    pub fn summary_names(&self) -> &[String] {
        &self.summary_names
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn models(&self) -> Vec<ModelIndex> {
        self.records.iter().map(|r| r.model).collect()
    }

    /// Per-model record counts, indexed by `model - 1`.
    pub fn model_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_models];
        for r in &self.records {
            counts[r.model - 1] += 1;
        }
        counts
    }

    /// Summaries as rows.
    pub fn summary_rows(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.summaries.clone()).collect()
    }

    /// New table holding the records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<ReferenceTable> {
        let mut records = Vec::with_capacity(indices.len());
        for &i in indices {
            let r = self
                .records
                .get(i)
                .ok_or_else(|| Error::arg(format!("row {i} out of range")))?;
            records.push(r.clone());
        }
        Ok(ReferenceTable {
            records,
            param_names: self.param_names.clone(),
            summary_names: self.summary_names.clone(),
            n_models: self.n_models,
        })
    }

    /// New table with extra summary columns appended to every record.
    pub fn with_extra_summaries(
        &self,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<ReferenceTable> {
        if columns.len() != self.len() {
            return Err(Error::arg(format!(
                "{} extra rows for a table of {} records",
                columns.len(),
                self.len()
            )));
        }
        let mut summary_names = self.summary_names.clone();
        summary_names.extend(names);
        let records = self
            .records
            .iter()
            .zip(columns)
            .map(|(r, extra)| {
                let mut s = r.summaries.clone();
                s.extend(extra);
                SimulationRecord::new(r.model, r.params.clone(), s)
            })
            .collect();
        ReferenceTable::new(
            self.param_names.clone(),
            summary_names,
            self.n_models,
            records,
        )
    }

    /// Same records with every label replaced.
    pub fn relabel(&self, models: &[ModelIndex], n_models: usize) -> Result<ReferenceTable> {
        if models.len() != self.len() {
            return Err(Error::arg("label count differs from record count"));
        }
        let records = self
            .records
            .iter()
            .zip(models)
            .map(|(r, &m)| SimulationRecord::new(m, r.params.clone(), r.summaries.clone()))
            .collect();
        ReferenceTable::new(
            self.param_names.clone(),
            self.summary_names.clone(),
            n_models,
            records,
        )
    }
}

fn check_names(names: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if n.is_empty() || n.contains(['\n', '\r', ',', ' ', '\t']) {
            return Err(Error::arg(format!("bad {what} name {n:?}")));
        }
        if !seen.insert(n.as_str()) {
            return Err(Error::arg(format!("duplicate {what} name {n:?}")));
        }
    }
    Ok(())
}

/// Shortest decimal text that parses back to the same `f64`.
pub(crate) fn format_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Reads a reference table from CSV.
pub fn load_table(path: impl AsRef<Path>) -> Result<ReferenceTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };

    let header = reader
        .headers()
        .map_err(|e| parse_err(1, 0, e.to_string()))?
        .clone();
    if header.get(0) != Some("model") {
        return Err(parse_err(1, 1, "first column must be `model`".into()));
    }
    let mut param_names = Vec::new();
    let mut summary_names = Vec::new();
    for (j, name) in header.iter().enumerate().skip(1) {
        if let Some(p) = name.strip_prefix(PARAM_PREFIX) {
            if !summary_names.is_empty() {
                return Err(parse_err(
                    1,
                    j + 1,
                    format!("parameter column {name:?} after summary columns"),
                ));
            }
            param_names.push(p.to_string());
        } else if let Some(s) = name.strip_prefix(STAT_PREFIX) {
            summary_names.push(s.to_string());
        } else {
            return Err(parse_err(
                1,
                j + 1,
                format!("column {name:?} is neither param_* nor stat_*"),
            ));
        }
    }
    check_names(&param_names, "parameter").map_err(|e| parse_err(1, 0, e.to_string()))?;
    check_names(&summary_names, "summary").map_err(|e| parse_err(1, 0, e.to_string()))?;

    let n_cols = header.len();
    let n_params = param_names.len();
    let mut records = Vec::new();
    let mut n_models = 0;
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(line, 0, e.to_string()))?;
        if row.len() != n_cols {
            return Err(parse_err(
                line,
                row.len().min(n_cols) + 1,
                format!("{} columns, header has {n_cols}", row.len()),
            ));
        }
        let model: i64 = row[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, 1, format!("model index {:?} is not an integer", &row[0])))?;
        if model < 1 {
            return Err(parse_err(
                line,
                1,
                format!("model index {model} outside 1..=M"),
            ));
        }
        let model = model as usize;
        n_models = n_models.max(model);
        let mut params = Vec::with_capacity(n_params);
        let mut summaries = Vec::with_capacity(n_cols - 1 - n_params);
        for j in 1..n_cols {
            let cell = row[j].trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, j + 1, format!("{cell:?} is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, j + 1, format!("{cell:?} is not finite")));
            }
            if j <= n_params {
                params.push(v);
            } else {
                summaries.push(v);
            }
        }
        records.push(SimulationRecord::new(model, params, summaries));
    }
    ReferenceTable::new(param_names, summary_names, n_models, records)
}

/// Writes a table as CSV; every value round-trips exactly through [`load_table`].
pub fn save_table(table: &ReferenceTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_table(table, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_table(table: &ReferenceTable, w: &mut impl Write) -> std::io::Result<()> {
    let mut header = String::from("model");
    for p in &table.param_names {
        header.push(',');
        header.push_str(PARAM_PREFIX);
        header.push_str(p);
    }
    for s in &table.summary_names {
        header.push(',');
        header.push_str(STAT_PREFIX);
        header.push_str(s);
    }
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for r in &table.records {
        line.clear();
        line.push_str(&r.model.to_string());
        for &v in r.params.iter().chain(&r.summaries) {
            line.push(',');
            line.push_str(&format_f64(v));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Disjoint train/validation/test row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Uniformly random disjoint index sets of the requested sizes.
pub fn split(
    table: &ReferenceTable,
    sizes: (usize, usize, usize),
    seed: u64,
) -> Result<DataSplit> {
    let (n_train, n_valid, n_test) = sizes;
    let total = n_train + n_valid + n_test;
    if total > table.len() {
        return Err(Error::arg(format!(
            "split sizes sum to {total}, table has {} records",
            table.len()
        )));
    }
    let mut idx: Vec<usize> = (0..table.len()).collect();
    idx.shuffle(&mut rng::stream(seed, "split", 0));
    Ok(DataSplit {
        train_indices: idx[..n_train].to_vec(),
        validation_indices: idx[n_train..n_train + n_valid].to_vec(),
        test_indices: idx[n_train + n_valid..total].to_vec(),
    })
}
