use crate::config::RunConfig;
use anyhow::Result;
use serde::Serialize;
use std::path::Path;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize)]
pub struct Document<R: Serialize> {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub options: serde_json::Value,
    pub records: Vec<R>,
    pub summary: Summary,
}

#[derive(Debug, Default, Serialize)]
pub struct Summary {
    pub records: usize,
    pub failed: usize,
    pub errors: usize,
}

impl Summary {
    pub fn exit_code(&self) -> u8 {
        if self.failed > 0 || self.errors > 0 {
            1
        } else {
            0
        }
    }
}

/// Rows for the optional flat CSV table.
pub trait FlatRow {
    fn headers() -> Vec<&'static str>;
    fn row(&self) -> Vec<String>;
}

pub fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_json<R: Serialize>(doc: &Document<R>, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn write_csv<R: FlatRow>(records: &[R], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(R::headers())?;
    for r in records {
        w.write_record(r.row())?;
    }
    w.flush()?;
    Ok(())
}
