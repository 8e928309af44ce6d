//! Collates every stage's tables and summaries into one JSON document.

use std::collections::BTreeMap;
use std::fs;

use serde_json::{json, Value};

use crate::bundle::{Bundle, SCHEMA_VERSION};
use crate::config::PipelineConfig;
use crate::error::{CliError, Stage};

pub const REPORT: &str = "report.json";

fn read_table(text: &str) -> Result<Value, csv::Error> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let columns: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for row in rdr.records() {
        rows.push(row?.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    Ok(json!({ "columns": columns, "rows": rows }))
}

pub(crate) fn write_report(bundle: &Bundle, config: &PipelineConfig) -> Result<Value, CliError> {
    let stage = Stage::Report;
    let mut tables = BTreeMap::new();
    let mut summaries = BTreeMap::new();
    for upstream in &Stage::PIPELINE[..Stage::PIPELINE.len() - 1] {
        if !bundle.dir(*upstream).is_dir() {
            return Err(CliError::missing_upstream(stage, *upstream));
        }
        let files = bundle.stage_files(*upstream).map_err(|e| CliError::stage(stage, e))?;
        for rel in files {
            let path = bundle.root().join(&rel);
            let read = || fs::read_to_string(&path).map_err(|e| CliError::stage(stage, format!("{rel}: {e}")));
            if rel.ends_with(".csv") {
                let table = read_table(&read()?).map_err(|e| CliError::stage(stage, format!("{rel}: {e}")))?;
                tables.insert(rel, table);
            } else if rel.ends_with(".json") {
                let value: Value =
                    serde_json::from_str(&read()?).map_err(|e| CliError::stage(stage, format!("{rel}: {e}")))?;
                summaries.insert(rel, value);
            }
        }
    }
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config_sha256": config.digest(),
        "tables": tables,
        "summaries": summaries,
    });
    bundle.write_json(stage, REPORT, &doc)?;
    Ok(json!({ "tables": tables.len(), "summaries": summaries.len() }))
}
