use std::io::Write;
use std::path::{Path, PathBuf};

use super::{ExperimentReport, RunOutput};
use crate::error::{Error, Result};

/// Documentation of the config keys and of every CSV header.
pub const SCHEMA: &str = include_str!("schema.txt");

/// Process-level overrides read from `ANDERSON_LAB_OUT_DIR` and
/// `ANDERSON_LAB_WORKERS`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunOptions {
    pub fn from_env() -> Result<Self> {
        let out_dir = std::env::var_os("ANDERSON_LAB_OUT_DIR").map(PathBuf::from);
        let workers = match std::env::var("ANDERSON_LAB_WORKERS") {
            Ok(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&w| w >= 1)
                    .ok_or_else(|| Error::config("ANDERSON_LAB_WORKERS", format!("not a positive integer: {s:?}")))?,
            ),
            Err(_) => None,
        };
        Ok(Self { out_dir, workers })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputFiles {
    pub report: PathBuf,
    pub tables: Vec<PathBuf>,
    pub timing: PathBuf,
}

/// Writes `contents` to a temporary file beside `path` and renames it over
/// `path`.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Writes `<prefix>.json`, one `<prefix>.<table>.csv` per table and
/// `<prefix>.timing.json` into the output directory. The timing file is kept
/// apart so that reports of identical runs are byte-identical.
pub fn emit_report(out: &RunOutput, options: &RunOptions) -> Result<OutputFiles> {
    let cfg = &out.report.config.output;
    let dir = options
        .out_dir
        .clone()
        .or_else(|| cfg.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let prefix = cfg.prefix.clone().unwrap_or_else(|| out.report.experiment.name().to_string());
    std::fs::create_dir_all(&dir)?;
    let report = dir.join(format!("{prefix}.json"));
    let mut json = serde_json::to_string_pretty(&out.report).expect("report serializes to JSON");
    json.push('\n');
    write_atomic(&report, json.as_bytes())?;
    let mut tables = Vec::with_capacity(out.tables.len());
    for t in &out.tables {
        let path = dir.join(format!("{prefix}.{}.csv", t.name));
        write_atomic(&path, t.to_csv()?.as_bytes())?;
        tables.push(path);
    }
    let timing = dir.join(format!("{prefix}.timing.json"));
    let timing_json = serde_json::json!({
        "wall_time_seconds": out.wall_time,
        "workers": out.workers,
        "input_hash": out.report.input_hash,
    });
    write_atomic(&timing, format!("{timing_json:#}\n").as_bytes())?;
    Ok(OutputFiles { report, tables, timing })
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
}
