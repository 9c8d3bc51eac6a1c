use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, FoldReport};
use crate::{Error, Result};

/// One JSON line of results: the fold outcome with the dataset name and the
/// full configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub dataset: String,
    /// Graph index within the dataset for node tasks over several graphs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<usize>,
    pub config: ExperimentConfig,
    #[serde(flatten)]
    pub report: FoldReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: String,
    pub model: String,
    pub runs: usize,
    pub accuracy_mean: f64,
    /// Population standard deviation over all folds and repeats.
    pub accuracy_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub seconds: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups records by (dataset, model) in first-seen order.
pub fn summarize(records: &[ResultRecord]) -> Vec<Summary> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in records {
        let k = (r.dataset.clone(), r.config.model.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(dataset, model)| {
            let group: Vec<&ResultRecord> =
                records.iter().filter(|r| r.dataset == dataset && r.config.model == model).collect();
            let acc: Vec<f64> = group.iter().map(|r| r.report.accuracy).collect();
            let f1: Vec<f64> = group.iter().map(|r| r.report.macro_f1).collect();
            let (accuracy_mean, accuracy_std) = mean_std(&acc);
            let (f1_mean, f1_std) = mean_std(&f1);
            Summary {
                dataset,
                model,
                runs: group.len(),
                accuracy_mean,
                accuracy_std,
                f1_mean,
                f1_std,
                seconds: group.iter().map(|r| r.report.seconds).sum(),
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[Summary]) -> String {
    let mut out = String::from("dataset,model,runs,accuracy_mean,accuracy_std,f1_mean,f1_std,seconds\n");
    for s in rows {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.1}\n",
            s.dataset, s.model, s.runs, s.accuracy_mean, s.accuracy_std, s.f1_mean, s.f1_std, s.seconds
        ));
    }
    out
}

/// Markdown table with percentages, `mean ± std`.
pub fn summary_markdown(rows: &[Summary]) -> String {
    let mut out = String::from("| dataset | model | runs | accuracy (%) | macro-F1 (%) |\n|---|---|---:|---:|---:|\n");
    for s in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {:.2} ± {:.2} | {:.2} ± {:.2} |\n",
            s.dataset,
            s.model,
            s.runs,
            100.0 * s.accuracy_mean,
            100.0 * s.accuracy_std,
            100.0 * s.f1_mean,
            100.0 * s.f1_std
        ));
    }
    out
}

pub fn write_jsonl<W: Write>(mut w: W, records: &[ResultRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<ResultRecord>> {
    let file = std::fs::File::open(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}
