use std::fmt::Write;

use crate::error::{Error, Result};
use crate::evidence::Assignment;
use crate::vtree::Var;

/// Binary feature table with an optional real target. Binary column `j` is
/// circuit variable `X{j+1}`; the target column does not count.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTable {
    columns: Vec<String>,
    rows: Vec<Vec<bool>>,
    target_name: Option<String>,
    target: Option<Vec<f64>>,
    class_column: Option<usize>,
}

impl DatasetTable {
    pub fn new(
        columns: Vec<String>,
        rows: Vec<Vec<bool>>,
        target: Option<(String, Vec<f64>)>,
        class_column: Option<usize>,
    ) -> Result<DatasetTable> {
        if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::Config(format!("row {i} has {} cells, expected {}", rows[i].len(), columns.len())));
        }
        if let Some((_, t)) = &target {
            if t.len() != rows.len() {
                return Err(Error::Config("target length differs from row count".into()));
            }
        }
        if class_column.is_some_and(|c| c >= columns.len()) {
            return Err(Error::Config("class column out of range".into()));
        }
        let (target_name, target) = match target {
            Some((n, t)) => (Some(n), Some(t)),
            None => (None, None),
        };
        Ok(DatasetTable {
            columns,
            rows,
            target_name,
            target,
            class_column,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn target(&self) -> Option<&[f64]> {
        self.target.as_deref()
    }

    pub fn target_name(&self) -> Option<&str> {
        self.target_name.as_deref()
    }

    pub fn class_column(&self) -> Option<usize> {
        self.class_column
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn var_of(&self, column: usize) -> Var {
        Var::new(column as u32 + 1).expect("column indices are small")
    }

    /// Row `i` as a complete assignment of `X1..X{columns}`.
    pub fn assignment(&self, i: usize) -> Assignment {
        Assignment::new(self.rows[i].clone())
    }

    /// Columns other than the class column.
    pub fn feature_columns(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&j| Some(j) != self.class_column).collect()
    }

    /// CSV text that `load_dataset` reads back unchanged; the target, if any,
    /// is the last column.
    pub fn to_csv(&self) -> String {
        let mut header = self.columns.clone();
        if let Some(n) = &self.target_name {
            header.push(n.clone());
        }
        let mut out = header.join(",");
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
            out.push_str(&cells.join(","));
            if let Some(t) = &self.target {
                write!(out, ",{}", super::format_real(t[i])).expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }
}

/// Reads comma-separated text with a header row. Every cell must be `0` or
/// `1` except in the `target` column, which holds reals. `class` names a
/// binary column used as the label.
pub fn load_dataset(text: &str, target: Option<&str>, class: Option<&str>) -> Result<DatasetTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header row"))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let target_col = match target {
        Some(t) => Some(
            names
                .iter()
                .position(|n| *n == t)
                .ok_or_else(|| Error::parse(1, format!("no target column {t:?}")))?,
        ),
        None => None,
    };
    let columns: Vec<String> = names
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != target_col)
        .map(|(_, n)| n.to_string())
        .collect();
    let class_column = match class {
        Some(c) => Some(
            columns
                .iter()
                .position(|n| n == c)
                .ok_or_else(|| Error::parse(1, format!("no binary class column {c:?}")))?,
        ),
        None => None,
    };

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != names.len() {
            return Err(Error::parse(
                lineno,
                format!("ragged row: {} cells, header has {}", cells.len(), names.len()),
            ));
        }
        let mut row = Vec::with_capacity(columns.len());
        for (j, cell) in cells.iter().enumerate() {
            if Some(j) == target_col {
                let t: f64 = cell
                    .parse()
                    .ok()
                    .filter(|t: &f64| t.is_finite())
                    .ok_or_else(|| Error::parse(lineno, format!("column {:?}: target {cell:?} is not a real", names[j])))?;
                targets.push(t);
                continue;
            }
            row.push(match *cell {
                "0" => false,
                "1" => true,
                _ => {
                    return Err(Error::parse(
                        lineno,
                        format!("row {}, column {:?}: cell {cell:?} is not 0 or 1", rows.len() + 1, names[j]),
                    ))
                }
            });
        }
        rows.push(row);
    }
    let target = target.map(|t| (t.to_string(), targets));
    DatasetTable::new(columns, rows, target, class_column)
}
