//! Artifact formatting and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;

/// 17 significant digits, enough to round-trip any double.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV body preceded by a `#` line carrying the command and config hash.
pub fn csv_artifact(cfg: &ExperimentConfig, header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = format!("# rotlab {} config_hash={}\n", cfg.command.name(), cfg.hash()).into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    out.extend(w.into_inner().expect("in-memory flush"));
    out
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config_hash: String,
    config: serde_json::Map<String, serde_json::Value>,
    result: &'a T,
}

/// Pretty JSON with the command, config hash and full config around the result.
pub fn json_artifact<T: Serialize>(cfg: &ExperimentConfig, result: &T) -> Vec<u8> {
    let config = cfg.entries().into_iter().map(|(k, v)| (k, serde_json::Value::String(v))).collect();
    let env = Envelope { command: cfg.command.name(), config_hash: cfg.hash(), config, result };
    let mut out = serde_json::to_vec_pretty(&env).expect("results serialize");
    out.push(b'\n');
    out
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}
