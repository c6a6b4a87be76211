use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::batch::BatchResult;
use crate::scheduler::SchedulerKind;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, OutputError> {
    fs::write(&path, contents).map_err(|source| OutputError { path: path.clone(), source })?;
    Ok(path)
}

pub fn summary_csv(results: &[BatchResult]) -> String {
    let mut out = String::from("scenario,scheduler,mean,std\n");
    for r in results {
        let _ = writeln!(out, "{},{},{:?},{:?}", r.scenario, r.scheduler, r.occupancy.mean, r.occupancy.std);
    }
    out
}

/// Per-run means followed by one `all` row per batch.
pub fn runs_csv(results: &[BatchResult]) -> String {
    let mut out = String::from("scenario,scheduler,run,mean_occupancy\n");
    for r in results {
        for run in &r.runs {
            let _ = writeln!(out, "{},{},{},{:?}", r.scenario, r.scheduler, run.result.run_index, run.mean_occupancy);
        }
        let _ = writeln!(out, "{},{},all,{:?}", r.scenario, r.scheduler, r.occupancy.mean);
    }
    out
}

/// Scenarios as rows, schedulers as columns, `mean±std` cells.
pub fn occupancy_table(results: &[BatchResult]) -> String {
    let mut scenarios: Vec<&str> = Vec::new();
    for r in results {
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
    }
    let present: BTreeSet<SchedulerKind> = results.iter().map(|r| r.scheduler).collect();
    let columns: Vec<SchedulerKind> = SchedulerKind::ALL.into_iter().filter(|k| present.contains(k)).collect();

    let mut rows: Vec<Vec<String>> = vec![std::iter::once("Experiment".to_string())
        .chain(columns.iter().map(|k| k.name().to_string()))
        .collect()];
    for sc in &scenarios {
        let mut row = vec![sc.to_string()];
        for k in &columns {
            let cell = results
                .iter()
                .find(|r| r.scenario == *sc && r.scheduler == *k)
                .map_or("-".to_string(), |r| format!("{:.1}±{:.2}", r.occupancy.mean, r.occupancy.std));
            row.push(cell);
        }
        rows.push(row);
    }
    let ncol = rows[0].len();
    let widths: Vec<usize> = (0..ncol)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::from("Mean of buffer occupancy (in MSS)\n");
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            let _ = writeln!(out, "{}", rule.join("-+-"));
        }
    }
    out
}

/// Writes histograms, summaries and the occupancy table; returns the files
/// written, in order.
pub fn emit_outputs(results: &[BatchResult], out_dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(out_dir).map_err(|source| OutputError {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for r in results {
        let stem = format!("{}_{}", r.scenario, r.scheduler);
        files.push(write(out_dir.join(format!("rbd_{stem}.csv")), &r.rbd.to_csv())?);
        files.push(write(out_dir.join(format!("rd_{stem}.csv")), &r.rd.to_csv())?);
    }
    files.push(write(out_dir.join("summary.csv"), &summary_csv(results))?);
    files.push(write(out_dir.join("runs.csv"), &runs_csv(results))?);
    files.push(write(out_dir.join("table.txt"), &occupancy_table(results))?);
    Ok(files)
}
