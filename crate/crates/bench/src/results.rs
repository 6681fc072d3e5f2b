//! Result and method-weight CSV files.
//!
//! Result columns, in order:
//! `dataset,strategy,sampling_rate,beta,epoch,train_loss,test_loss,test_accuracy,backward_samples,wall_ms,seed,failed`.
//! `beta` is empty for strategies without one, `test_accuracy` is empty for regression, and a
//! failed run has empty metric columns.
//!
//! Weight log columns: `run_id,t,method,weight,avg_subset_loss`.

use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::BenchError;

pub const RESULT_COLUMNS: [&str; 12] = [
    "dataset",
    "strategy",
    "sampling_rate",
    "beta",
    "epoch",
    "train_loss",
    "test_loss",
    "test_accuracy",
    "backward_samples",
    "wall_ms",
    "seed",
    "failed",
];

pub const WEIGHT_COLUMNS: [&str; 5] = ["run_id", "t", "method", "weight", "avg_subset_loss"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub strategy: String,
    pub sampling_rate: f64,
    pub beta: Option<f64>,
    pub epoch: usize,
    pub train_loss: Option<f64>,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub backward_samples: usize,
    pub wall_ms: f64,
    pub seed: u64,
    pub failed: bool,
}

impl ResultRow {
    /// Strategy name with its beta, which is how ranking tables tell AdaSelect runs apart.
    pub fn label(&self) -> String {
        match self.beta {
            Some(beta) => format!("{}[beta={beta}]", self.strategy),
            None => self.strategy.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightLogRow {
    pub run_id: String,
    pub t: u64,
    pub method: String,
    pub weight: f64,
    pub avg_subset_loss: f64,
}

/// `results.csv` -> `results_<suffix>`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    path.with_file_name(format!("{stem}_{suffix}"))
}

/// Appends rows, writing the header first when the file is new or empty.
pub fn append_csv<T: Serialize>(path: &Path, columns: &[&str], rows: &[T]) -> Result<(), BenchError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        w.write_record(columns)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path, columns: &[&str]) -> Result<Vec<T>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != columns {
        return Err(BenchError::Config(format!(
            "{} has columns {header:?}, expected {columns:?}",
            path.display()
        )));
    }
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

pub fn append_results(path: &Path, rows: &[ResultRow]) -> Result<(), BenchError> {
    append_csv(path, &RESULT_COLUMNS, rows)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, BenchError> {
    read_csv(path, &RESULT_COLUMNS)
}

pub fn append_weight_log(path: &Path, rows: &[WeightLogRow]) -> Result<(), BenchError> {
    append_csv(path, &WEIGHT_COLUMNS, rows)
}

pub fn read_weight_log(path: &Path) -> Result<Vec<WeightLogRow>, BenchError> {
    read_csv(path, &WEIGHT_COLUMNS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(strategy: &str, beta: Option<f64>, acc: Option<f64>) -> ResultRow {
        ResultRow {
            dataset: "blobs".into(),
            strategy: strategy.into(),
            sampling_rate: 0.3,
            beta,
            epoch: 2,
            train_loss: Some(0.25),
            test_loss: Some(0.5),
            test_accuracy: acc,
            backward_samples: 600,
            wall_ms: 1.5,
            seed: 7,
            failed: false,
        }
    }

    #[test]
    fn header_and_empty_optionals() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        append_results(&path, &[row("adaselect", Some(0.5), Some(0.9))]).unwrap();
        append_results(&path, &[row("uniform", None, None)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RESULT_COLUMNS.join(","));
        assert_eq!(lines[1], "blobs,adaselect,0.3,0.5,2,0.25,0.5,0.9,600,1.5,7,false");
        assert_eq!(lines[2], "blobs,uniform,0.3,,2,0.25,0.5,,600,1.5,7,false");
        assert_eq!(lines.len(), 3);
        let back = read_results(&path).unwrap();
        assert_eq!(back, vec![row("adaselect", Some(0.5), Some(0.9)), row("uniform", None, None)]);
    }

    #[test]
    fn rejects_foreign_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_results(&path).is_err());
    }

    #[test]
    fn labels_and_sibling_paths() {
        assert_eq!(row("adaselect", Some(-0.5), None).label(), "adaselect[beta=-0.5]");
        assert_eq!(row("full", None, None).label(), "full");
        assert_eq!(sibling_path(Path::new("out/res.csv"), "weights.csv"), PathBuf::from("out/res_weights.csv"));
    }
}
