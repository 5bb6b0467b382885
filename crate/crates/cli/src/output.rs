use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::CliError;

/// Top-level JSON document shared by every subcommand. Outside
/// `--deterministic` it carries a timestamp and the host's thread count.
pub fn envelope(command: &str, config: Value, deterministic: bool) -> Map<String, Value> {
    let mut out = Map::new();
    out.insert("command".into(), json!(command));
    out.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    out.insert("config".into(), config);
    if !deterministic {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        out.insert("generated_at_unix".into(), json!(secs));
        let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        out.insert("host_threads".into(), json!(threads));
    }
    out
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json(path: Option<&Path>, value: &Value) -> Result<(), CliError> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn write_csv(
    path: Option<&Path>,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    let err = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Runtime(e.to_string()))
}
