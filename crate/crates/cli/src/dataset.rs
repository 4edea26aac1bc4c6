use std::path::Path;

use crate::params::{schema, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    None,
    /// Each feature mapped affinely onto `[0, 1]`; a constant column maps to 0.
    MinMax,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    /// Label column by index or header name.
    pub label: Option<String>,
    /// `None` detects a header: the first row is one when some feature cell
    /// does not parse as a number.
    pub header: Option<bool>,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    /// Integer codes in order of first appearance.
    pub labels: Option<Vec<usize>>,
    pub label_names: Vec<String>,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.features.len()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }
}

pub fn ingest_csv(path: &Path, schema_: &Schema) -> CliResult<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, schema_)
}

pub fn parse_csv(text: &str, sch: &Schema) -> CliResult<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut records = Vec::new();
    for r in rdr.records() {
        let r = r.map_err(|e| schema(format!("unreadable CSV: {e}")))?;
        if r.len() == 1 && r[0].is_empty() {
            continue;
        }
        records.push(r.iter().map(str::to_string).collect::<Vec<_>>());
    }
    if records.is_empty() {
        return Err(schema("empty CSV file"));
    }
    let width = records[0].len();
    if let Some((i, r)) = records.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(schema(format!("ragged row {}: {} cells, expected {width}", i + 1, r.len())));
    }
    let label_ix = |names: Option<&[String]>| -> CliResult<Option<usize>> {
        let Some(l) = &sch.label else { return Ok(None) };
        if let Ok(i) = l.parse::<usize>() {
            if i >= width {
                return Err(schema(format!("label column {i} out of range for {width} columns")));
            }
            return Ok(Some(i));
        }
        names
            .and_then(|n| n.iter().position(|c| c == l))
            .map(Some)
            .ok_or_else(|| schema(format!("no column named `{l}`")))
    };
    let numeric = |s: &str| s.parse::<f64>().map(|v| v.is_finite()).unwrap_or(false);
    let header = match sch.header {
        Some(h) => h,
        None => {
            let li = label_ix(Some(&records[0])).ok().flatten();
            records[0].iter().enumerate().any(|(i, c)| Some(i) != li && !numeric(c))
        }
    };
    let names: Vec<String> = if header { records.remove(0) } else { (0..width).map(|i| format!("x{i}")).collect() };
    if records.is_empty() {
        return Err(schema("CSV has a header but no data rows"));
    }
    let li = label_ix(Some(&names))?;
    let mut features = Vec::with_capacity(records.len());
    let mut labels = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    for (r, rec) in records.iter().enumerate() {
        let mut row = Vec::with_capacity(width);
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == li {
                let code = match label_names.iter().position(|n| n == cell) {
                    Some(k) => k,
                    None => {
                        label_names.push(cell.clone());
                        label_names.len() - 1
                    }
                };
                labels.push(code);
            } else {
                let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                    schema(format!("non-numeric cell `{cell}` at row {}, column {}", r + 1 + header as usize, c + 1))
                })?;
                row.push(v);
            }
        }
        features.push(row);
    }
    if sch.normalization == Normalization::MinMax {
        minmax(&mut features);
    }
    Ok(Dataset {
        feature_names: names.into_iter().enumerate().filter(|(i, _)| Some(*i) != li).map(|(_, n)| n).collect(),
        features,
        labels: li.map(|_| labels),
        label_names,
    })
}

pub fn minmax(rows: &mut [Vec<f64>]) {
    let Some(first) = rows.first() else { return };
    for c in 0..first.len() {
        let lo = rows.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
        for r in rows.iter_mut() {
            r[c] = if hi > lo { (r[c] - lo) / (hi - lo) } else { 0.0 };
        }
    }
}
