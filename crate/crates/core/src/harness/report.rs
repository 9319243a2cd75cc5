//! On-disk experiment reports: `summary.csv`, `records.jsonl` and one PNG per
//! targeted success.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::experiment::{ConfigSummary, ExperimentEntry, ExperimentSummary};
use super::export::export_png;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("I/O error writing report: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn adversarial_png_name(image_index: usize, true_label: usize, target: usize) -> String {
    format!("img{image_index}_true{true_label}_target{target}.png")
}

/// Directory holding the PNGs of one configuration, e.g. `circle_n100`.
fn config_dir(dir: &Path, cfg: &ConfigSummary) -> PathBuf {
    dir.join(format!("{}_n{}", cfg.kind, cfg.num_shapes))
}

/// Writes the report into `dir` (created if missing) and returns the paths
/// of the PNGs written.
pub fn write_report(summary: &ExperimentSummary, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ReportError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut csv = csv::Writer::from_path(dir.join(SUMMARY_FILE))?;
    csv.write_record(["kind", "N", "targeted_asr", "untargeted_asr", "mean_queries", "runs"])?;
    for c in &summary.configs {
        csv.write_record([
            c.kind.to_string(),
            c.num_shapes.to_string(),
            c.targeted_asr.to_string(),
            c.untargeted_asr.to_string(),
            c.mean_queries.map_or_else(|| "null".to_string(), |q| q.to_string()),
            c.runs.to_string(),
        ])?;
    }
    csv.flush()?;

    let mut jsonl = BufWriter::new(File::create(dir.join(RECORDS_FILE))?);
    for entry in &summary.entries {
        serde_json::to_writer(&mut jsonl, entry)?;
        jsonl.write_all(b"\n")?;
    }
    jsonl.flush()?;

    let mut pngs = Vec::new();
    for entry in summary.entries.iter().filter(|e| e.success_targeted()) {
        let record = entry.record.as_ref().expect("successful entries carry a record");
        let sub = config_dir(dir, &summary.configs[entry.config_index]);
        fs::create_dir_all(&sub)?;
        let path = sub.join(adversarial_png_name(entry.image_index, entry.true_label, entry.target_class));
        export_png(record.final_image(), &path)?;
        pngs.push(path);
    }
    Ok(pngs)
}

/// Parses a `records.jsonl` file back into entries.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ExperimentEntry>, ReportError> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(ReportError::from))
        .collect()
}
