use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::params::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "==")]
    Eq,
    /// Reported for reference only.
    #[serde(rename = "info")]
    Info,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Lt => "<",
            Relation::Eq => "==",
            Relation::Info => "info",
        }
    }
}

/// One summary line: a measured quantity next to the bound it is held to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub metric: String,
    pub measured: f64,
    pub relation: Relation,
    pub bound: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub experiment: String,
    pub rows: Vec<Map<String, Value>>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(experiment: &str) -> Self {
        Self { experiment: experiment.to_string(), ..Default::default() }
    }

    pub fn rows<R: Serialize>(&mut self, rows: &[R]) {
        for r in rows {
            match serde_json::to_value(r).expect("row serializes") {
                Value::Object(m) => self.rows.push(m),
                other => panic!("row must serialize to an object, got {other}"),
            }
        }
    }

    fn push(&mut self, metric: &str, measured: f64, relation: Relation, bound: Option<f64>) {
        let pass = bound.and_then(|b| match relation {
            Relation::Le => Some(measured <= b),
            Relation::Ge => Some(measured >= b),
            Relation::Lt => Some(measured < b),
            Relation::Eq => Some(measured == b),
            Relation::Info => None,
        });
        self.checks.push(Check { metric: metric.to_string(), measured, relation, bound, pass });
    }

    pub fn le(&mut self, metric: &str, measured: f64, bound: f64) {
        self.push(metric, measured, Relation::Le, Some(bound));
    }

    pub fn ge(&mut self, metric: &str, measured: f64, bound: f64) {
        self.push(metric, measured, Relation::Ge, Some(bound));
    }

    pub fn lt(&mut self, metric: &str, measured: f64, bound: f64) {
        self.push(metric, measured, Relation::Lt, Some(bound));
    }

    pub fn eq(&mut self, metric: &str, measured: f64, bound: f64) {
        self.push(metric, measured, Relation::Eq, Some(bound));
    }

    pub fn info(&mut self, metric: &str, measured: f64, bound: Option<f64>) {
        self.push(metric, measured, Relation::Info, bound);
    }

    pub fn check(&self, metric: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.metric == metric)
    }

    pub fn measured(&self, metric: &str) -> Option<f64> {
        self.check(metric).map(|c| c.measured)
    }

    /// False when any bounded check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.pass == Some(false)).collect()
    }

    /// Trial rows, then a blank line and the summary (CSV), or one JSON
    /// object per line tagged `trial` / `summary`.
    pub fn write(&self, w: &mut impl Write, format: Format, banner: Option<&str>) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                if let Some(b) = banner {
                    writeln!(w, "# {b}")?;
                }
                if let Some(first) = self.rows.first() {
                    let mut cw = csv::Writer::from_writer(&mut *w);
                    cw.write_record(first.keys())?;
                    for r in &self.rows {
                        cw.write_record(r.values().map(cell))?;
                    }
                    cw.flush()?;
                    drop(cw);
                    writeln!(w)?;
                }
                let mut cw = csv::Writer::from_writer(&mut *w);
                cw.write_record(["experiment", "metric", "measured", "relation", "bound", "pass"])?;
                for c in &self.checks {
                    let v = serde_json::to_value(c).expect("check serializes");
                    cw.write_record([
                        self.experiment.clone(),
                        c.metric.clone(),
                        cell(&v["measured"]),
                        cell(&v["relation"]),
                        cell(&v["bound"]),
                        cell(&v["pass"]),
                    ])?;
                }
                cw.flush()?;
            }
            Format::Jsonl => {
                if let Some(b) = banner {
                    writeln!(w, "{}", serde_json::json!({ "type": "banner", "banner": b }))?;
                }
                for r in &self.rows {
                    let mut o = Map::new();
                    o.insert("type".into(), "trial".into());
                    o.extend(r.clone());
                    writeln!(w, "{}", Value::Object(o))?;
                }
                for c in &self.checks {
                    let mut o = Map::new();
                    o.insert("type".into(), "summary".into());
                    o.insert("experiment".into(), self.experiment.clone().into());
                    if let Value::Object(m) = serde_json::to_value(c).expect("check serializes") {
                        o.extend(m);
                    }
                    writeln!(w, "{}", Value::Object(o))?;
                }
            }
        }
        Ok(())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
