//! Datasets: the `y = 2x + 1` generator, Gaussian blobs and a CSV loader.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, RngStream, Sample, Target};

const DATA_STREAM: u64 = 10;
const SPLIT_STREAM: u64 = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            other => Err(Error::InvalidConfig(format!("unknown task `{other}`"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Regression => "regression",
            Task::Classification => "classification",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub task: Task,
    pub input_dim: usize,
    /// Number of classes for classification tasks.
    pub num_classes: Option<usize>,
    pub feature_names: Vec<String>,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl Dataset {
    pub fn output_dim(&self) -> usize {
        self.num_classes.unwrap_or(1)
    }
}

/// Size of the held-out fifth, rounded to nearest: `round(n / 5)`.
fn test_count(n: usize) -> usize {
    (2 * n + 5) / 10
}

fn names(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

/// `x ~ U[-1, 1]`, `y = 2x + 1 + N(0, sigma^2)`.
pub fn gen_regression_simple(n_train: usize, n_test: usize, noise_sigma: f64, seed: u64) -> Result<Dataset> {
    if n_train == 0 || n_test == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise sigma must be nonnegative, got {noise_sigma}")));
    }
    let mut rng = RngStream::new(seed, DATA_STREAM);
    let mut samples = (0..n_train + n_test)
        .map(|id| {
            let x: f64 = rng.random_range(-1.0..=1.0);
            let noise: f64 = rng.sample(StandardNormal);
            Sample::regression(id, vec![x], 2.0 * x + 1.0 + noise_sigma * noise)
        })
        .collect::<Result<Vec<_>>>()?;
    let test = samples.split_off(n_train);
    Ok(Dataset {
        name: "regression".into(),
        task: Task::Regression,
        input_dim: 1,
        num_classes: None,
        feature_names: names(1),
        train: samples,
        test,
    })
}

/// Unit-variance Gaussian clusters whose neighbouring centres are `separation` apart.
///
/// Centres sit on a circle in the first two coordinates (on a line when `dim == 1`). Each
/// class contributes the same number of test samples, so the test split is balanced.
pub fn gen_classification_blobs(
    n_classes: usize,
    n_per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_classes < 2 {
        return Err(Error::InvalidConfig("blobs need at least two classes".into()));
    }
    if n_per_class == 0 || dim == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::InvalidConfig(format!("separation must be nonnegative, got {separation}")));
    }
    let centre = |c: usize| -> Vec<f64> {
        let mut v = vec![0.0; dim];
        if dim == 1 {
            v[0] = separation * c as f64;
        } else {
            let angle = 2.0 * std::f64::consts::PI * c as f64 / n_classes as f64;
            let radius = separation / (2.0 * (std::f64::consts::PI / n_classes as f64).sin());
            v[0] = radius * angle.cos();
            v[1] = radius * angle.sin();
        }
        v
    };
    let mut rng = RngStream::new(seed, DATA_STREAM);
    let per_class_test = test_count(n_per_class);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut id = 0;
    for c in 0..n_classes {
        let mu = centre(c);
        for j in 0..n_per_class {
            let x = mu.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)).collect();
            let s = Sample::classification(id, x, c)?;
            id += 1;
            if j < per_class_test {
                test.push(s);
            } else {
                train.push(s);
            }
        }
    }
    let mut split_rng = RngStream::new(seed, SPLIT_STREAM);
    train.shuffle(&mut split_rng);
    test.shuffle(&mut split_rng);
    Ok(Dataset {
        name: "blobs".into(),
        task: Task::Classification,
        input_dim: dim,
        num_classes: Some(n_classes),
        feature_names: names(dim),
        train,
        test,
    })
}

pub fn load_csv_dataset(path: impl AsRef<Path>, target_column: &str, task: Task, seed: u64) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut ds = parse_csv_dataset(file, target_column, task, seed)?;
    if let Some(stem) = path.file_stem() {
        ds.name = stem.to_string_lossy().into_owned();
    }
    Ok(ds)
}

/// Parses a numeric CSV with a header row.
///
/// Every column except `target_column` is a feature. An 80/20 split is drawn from `seed`, and
/// features are standardized with mean and standard deviation of the train split only.
pub fn parse_csv_dataset<R: Read>(reader: R, target_column: &str, task: Task, seed: u64) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::MalformedCsv("empty file".into()));
    }
    if headers.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(Error::MalformedCsv("missing header row".into()));
    }
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_owned()))?;
    let feature_names: Vec<String> =
        headers.iter().enumerate().filter(|(i, _)| *i != target_idx).map(|(_, h)| h.clone()).collect();
    if feature_names.is_empty() {
        return Err(Error::MalformedCsv("no feature columns".into()));
    }

    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = r + 2;
        let mut features = Vec::with_capacity(feature_names.len());
        let mut target = 0.0;
        for (c, cell) in record.iter().enumerate() {
            let value: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::NonNumericCell { row: line, column: headers[c].clone(), value: cell.to_owned() })?;
            if c == target_idx {
                target = value;
            } else {
                features.push(value);
            }
        }
        rows.push((features, target));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let num_classes = match task {
        Task::Regression => None,
        Task::Classification => {
            let mut max = 0usize;
            for (i, (_, y)) in rows.iter().enumerate() {
                if *y < 0.0 || y.fract() != 0.0 {
                    return Err(Error::NonNumericCell {
                        row: i + 2,
                        column: target_column.to_owned(),
                        value: format!("{y} is not a class index"),
                    });
                }
                max = max.max(*y as usize);
            }
            Some((max + 1).max(2))
        }
    };

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut RngStream::new(seed, SPLIT_STREAM));
    let n_test = test_count(rows.len());
    let (test_idx, train_idx) = order.split_at(n_test);

    let dim = feature_names.len();
    let n_train = train_idx.len().max(1) as f64;
    let mut mean = vec![0.0; dim];
    for &i in train_idx {
        for (m, x) in mean.iter_mut().zip(&rows[i].0) {
            *m += x / n_train;
        }
    }
    let mut std = vec![0.0; dim];
    for &i in train_idx {
        for ((s, m), x) in std.iter_mut().zip(&mean).zip(&rows[i].0) {
            *s += (x - m).powi(2) / n_train;
        }
    }
    let std: Vec<f64> = std.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();

    let build = |idx: &[usize]| -> Result<Vec<Sample>> {
        idx.iter()
            .map(|&i| {
                let (x, y) = &rows[i];
                let x = x.iter().zip(&mean).zip(&std).map(|((v, m), s)| (v - m) / s).collect();
                let target = match task {
                    Task::Regression => Target::Value(*y),
                    Task::Classification => Target::Class(*y as usize),
                };
                Sample::new(i, x, target)
            })
            .collect()
    };
    Ok(Dataset {
        name: "csv".into(),
        task,
        input_dim: dim,
        num_classes,
        feature_names,
        train: build(train_idx)?,
        test: build(test_idx)?,
    })
}

/// Writes train then test samples as `feature..., target` with a header row.
pub fn write_dataset_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = dataset.feature_names.clone();
    header.push("target".into());
    w.write_record(&header)?;
    for s in dataset.train.iter().chain(&dataset.test) {
        let mut record: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
        record.push(match s.target {
            Target::Value(y) => y.to_string(),
            Target::Class(c) => c.to_string(),
        });
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
