//! CSV and JSON outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use zomd::RunRecord;

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::runner::Outcome;
use crate::stats::{PowerFit, SummaryRow};

pub const CSV_HEADER: &str = "config_hash,trial,iter,queries,subopt,wall_ms";
pub const SCHEMA_VERSION: u32 = 1;

/// One line per checkpoint per trial; floats carry 17 significant digits.
pub fn csv_string(config_hash: &str, records: &[RunRecord]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        for c in &r.checkpoints {
            let _ = writeln!(
                out,
                "{config_hash},{},{},{},{:.16e},{:.16e}",
                r.stream, c.iter, c.queries, c.subopt, c.wall_ms
            );
        }
    }
    out
}

/// The CSV with the timing column removed, for byte comparisons.
pub fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub name: String,
    pub command: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub rows: Vec<SummaryRow>,
    pub rate: Option<PowerFit>,
    pub floor: Option<PowerFit>,
    pub files: Vec<String>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

/// Writes `<name>_<label>.csv` per point and `<name>_summary.json` into
/// `dir`; returns the summary path.
pub fn write_outputs(outcome: &Outcome, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let name = &outcome.config.name;
    let mut files = Vec::new();
    for p in &outcome.points {
        let file = format!("{name}_{}.csv", p.point.label);
        write(&dir.join(&file), &csv_string(&p.hash, &p.records))?;
        files.push(file);
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        created_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        name: name.clone(),
        command: if outcome.sweep { "sweep" } else { "run" }.into(),
        config_hash: outcome.config.hash(),
        config: outcome.config.clone(),
        rows: outcome.rows.clone(),
        rate: outcome.rate,
        floor: outcome.floor,
        files,
    };
    let path = dir.join(format!("{name}_summary.json"));
    let json = serde_json::to_string_pretty(&summary).expect("summary serialises");
    write(&path, &(json + "\n"))?;
    Ok(path)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    let summary: Summary = serde_json::from_str(&text).map_err(|e| BenchError::Parse {
        file: path.display().to_string(),
        message: e.to_string(),
    })?;
    if summary.schema_version != SCHEMA_VERSION {
        return Err(BenchError::Parse {
            file: path.display().to_string(),
            message: format!("unsupported schema version {}", summary.schema_version),
        });
    }
    Ok(summary)
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4e}"))
}

/// Plain-text table of every summary in `dir`, sorted by file name.
pub fn report_dir(dir: &Path) -> Result<String> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| BenchError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with("_summary.json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(BenchError::Stats(format!(
            "no summaries in {}",
            dir.display()
        )));
    }
    let mut out = String::new();
    for path in paths {
        let s = read_summary(&path)?;
        let _ = writeln!(out, "{} [{}] hash {}", s.name, s.command, s.config_hash);
        let _ = writeln!(
            out,
            "  {:<14} {:>9} {:>6} {:>11} {:>11} {:>11} {:>11} {:>11}",
            "point", "T", "trials", "mean", "median", "q90", "q99", "floor"
        );
        for r in &s.rows {
            let _ = writeln!(
                out,
                "  {:<14} {:>9} {:>6} {:>11.4e} {:>11.4e} {:>11} {:>11} {:>11.4e}",
                r.label,
                r.iterations,
                r.trials,
                r.mean,
                r.median,
                opt(r.q90),
                opt(r.q99),
                r.noise_floor
            );
        }
        if let Some(f) = s.rate {
            let _ = writeln!(
                out,
                "  rate slope {:.4} ± {:.4} ({} points)",
                f.slope, f.half_width, f.points
            );
        }
        if let Some(f) = s.floor {
            let _ = writeln!(
                out,
                "  floor slope {:.4} ± {:.4} ({} points)",
                f.slope, f.half_width, f.points
            );
        }
    }
    Ok(out)
}
