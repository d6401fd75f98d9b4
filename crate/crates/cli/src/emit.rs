use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::CliError;

/// Single writer for all records of a run.
pub struct Emitter {
    out: Box<dyn Write>,
    config: Value,
    command: String,
    seed: Option<u64>,
    rows: Vec<Map<String, Value>>,
}

impl Emitter {
    pub fn new(config: &RunConfig, command: &str) -> Result<Self, CliError> {
        let out: Box<dyn Write> = match &config.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        let mut echo = config.clone();
        echo.command = Some(command.to_string());
        echo.out = None;
        echo.csv = None;
        Ok(Emitter { out, config: serde_json::to_value(&echo)?, command: command.to_string(), seed: config.seed, rows: Vec::new() })
    }

    pub fn emit<T: Serialize>(&mut self, kind: &str, result: &T) -> Result<(), CliError> {
        let result = serde_json::to_value(result)?;
        let record = json!({
            "command": self.command,
            "kind": kind,
            "config": self.config,
            "seed": self.seed,
            "versions": {
                "spinqaoa": env!("CARGO_PKG_VERSION"),
                "format": 1,
            },
            "result": result,
        });
        serde_json::to_writer(&mut self.out, &record)?;
        self.out.write_all(b"\n")?;
        let mut row = Map::new();
        row.insert("kind".into(), Value::String(kind.into()));
        if let Value::Object(fields) = result {
            row.extend(fields.into_iter().filter(|(_, v)| !v.is_array() && !v.is_object()));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Flushes the JSON lines and writes scalar fields as CSV, one row per
    /// record. Columns are the union of keys in first-seen order.
    pub fn finish(mut self, csv_path: Option<&Path>) -> Result<(), CliError> {
        self.out.flush()?;
        let Some(path) = csv_path else { return Ok(()) };
        let mut columns: Vec<String> = Vec::new();
        for row in &self.rows {
            for k in row.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&columns)?;
        for row in &self.rows {
            w.write_record(columns.iter().map(|c| match row.get(c) {
                None | Some(Value::Null) => String::new(),
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
            }))?;
        }
        w.flush()?;
        Ok(())
    }
}
