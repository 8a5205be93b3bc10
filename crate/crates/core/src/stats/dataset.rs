use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::graph::NodeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    #[default]
    Continuous,
    Discrete,
}

/// Samples of a set of variables, some of which were set by intervention.
///
/// Stored column-major. Discrete columns hold dense codes `0..levels[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    targets: NodeSet,
    kind: ValueKind,
    levels: Vec<usize>,
}

impl Dataset {
    /// `columns[j]` holds all samples of variable `names[j]`. `targets` are
    /// indices into `names`.
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        targets: NodeSet,
        kind: ValueKind,
    ) -> Result<Dataset> {
        if names.is_empty() {
            return input("dataset has no variables");
        }
        if names.len() != columns.len() {
            return input(format!(
                "{} names but {} columns",
                names.len(),
                columns.len()
            ));
        }
        let rows = columns[0].len();
        if rows == 0 {
            return input("dataset has no rows");
        }
        let mut seen = std::collections::HashSet::new();
        for (name, col) in names.iter().zip(&columns) {
            if !seen.insert(name.as_str()) {
                return input(format!("duplicate variable '{name}'"));
            }
            if col.len() != rows {
                return input(format!(
                    "column '{name}' has {} rows, expected {rows}",
                    col.len()
                ));
            }
            if let Some(v) = col.iter().find(|v| !v.is_finite()) {
                return input(format!("column '{name}' holds non-finite value {v}"));
            }
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= names.len()) {
            return input(format!("intervention target index {t} out of range"));
        }
        let (columns, levels) = match kind {
            ValueKind::Continuous => (columns, Vec::new()),
            ValueKind::Discrete => {
                let mut coded = Vec::with_capacity(columns.len());
                let mut levels = Vec::with_capacity(columns.len());
                for (name, col) in names.iter().zip(columns) {
                    let (c, k) = dense_codes(name, &col)?;
                    coded.push(c);
                    levels.push(k);
                }
                (coded, levels)
            }
        };
        Ok(Dataset {
            names,
            columns,
            targets,
            kind,
            levels,
        })
    }

    /// Reads a CSV file with a header row of variable names and numeric cells.
    pub fn from_csv(
        path: impl AsRef<Path>,
        targets: &[String],
        kind: ValueKind,
    ) -> Result<Dataset> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| crate::Error::Input(format!("cannot open {}: {e}", path.display())))?;
        Self::from_reader(file, targets, kind)
    }

    pub fn from_reader(
        reader: impl std::io::Read,
        targets: &[String],
        kind: ValueKind,
    ) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != names.len() {
                return input(format!(
                    "row {} has {} cells, expected {}",
                    row + 1,
                    record.len(),
                    names.len()
                ));
            }
            for (j, cell) in record.iter().enumerate() {
                if cell.is_empty() {
                    return input(format!(
                        "missing value in row {}, column '{}'",
                        row + 1,
                        names[j]
                    ));
                }
                let v: f64 = cell.parse().map_err(|_| {
                    crate::Error::Input(format!(
                        "non-numeric cell '{cell}' in column '{}'",
                        names[j]
                    ))
                })?;
                columns[j].push(v);
            }
        }
        let mut idx = NodeSet::new();
        for t in targets {
            match names.iter().position(|n| n == t) {
                Some(i) => idx.insert(i),
                None => return input(format!("intervention target '{t}' is not a column")),
            };
        }
        Dataset::new(names, columns, idx, kind)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.names)?;
        for r in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| format_cell(c[r])))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn targets(&self) -> &NodeSet {
        &self.targets
    }

    pub fn target_names(&self) -> Vec<String> {
        self.targets
            .iter()
            .map(|&t| self.names[t].clone())
            .collect()
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    /// Number of categories per variable; empty for continuous data.
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Discretizes every column into at most `bins` equal-frequency bins.
    /// Tied values always share a bin.
    pub fn equal_frequency_bins(&self, bins: usize) -> Result<Dataset> {
        if bins < 2 {
            return input("need at least two bins");
        }
        let n = self.rows();
        let columns = self
            .columns
            .iter()
            .map(|col| {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
                let mut out = vec![0.0; n];
                let mut start = 0;
                while start < n {
                    let mut end = start;
                    while end + 1 < n && col[order[end + 1]] == col[order[start]] {
                        end += 1;
                    }
                    let bin = (start * bins / n) as f64;
                    for &i in &order[start..=end] {
                        out[i] = bin;
                    }
                    start = end + 1;
                }
                out
            })
            .collect();
        Dataset::new(
            self.names.clone(),
            columns,
            self.targets.clone(),
            ValueKind::Discrete,
        )
    }
}

fn format_cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

fn dense_codes(name: &str, col: &[f64]) -> Result<(Vec<f64>, usize)> {
    let mut codes = BTreeMap::new();
    for &v in col {
        if v < 0.0 || v.fract() != 0.0 {
            return input(format!(
                "discrete column '{name}' holds {v}, expected a non-negative integer"
            ));
        }
        codes.insert(v as u64, 0usize);
    }
    for (i, code) in codes.values_mut().enumerate() {
        *code = i;
    }
    let coded = col.iter().map(|&v| codes[&(v as u64)] as f64).collect();
    Ok((coded, codes.len()))
}
