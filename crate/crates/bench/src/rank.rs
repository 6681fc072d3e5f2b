//! Mean-rank tables across (dataset, sampling rate) tasks.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::config::StrategySpec;
use crate::results::ResultRow;
use crate::BenchError;

#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub dataset: String,
    pub sampling_rate: f64,
    /// `test_accuracy` (higher is better) or `test_loss` (lower is better).
    pub metric: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankTable {
    pub labels: Vec<String>,
    pub tasks: Vec<Task>,
    /// `ranks[task][label]`, 1 is best, ties share their mean rank.
    pub ranks: Vec<Vec<f64>>,
    /// Seed-averaged final metric, `None` for failed cells.
    pub values: Vec<Vec<Option<f64>>>,
    pub mean_rank: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct LabelKey {
    order: usize,
    beta: Option<OrdF64>,
    label: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn label_key(row: &ResultRow) -> LabelKey {
    let order = row.strategy.parse::<StrategySpec>().map(StrategySpec::order).unwrap_or(usize::MAX);
    LabelKey { order, beta: row.beta.map(OrdF64), label: row.label() }
}

type TaskKey = (String, OrdF64);

/// Final-epoch metric for one seed, `None` if the run failed.
fn final_metric(rows: &[&ResultRow]) -> Option<(f64, bool)> {
    if rows.iter().any(|r| r.failed) {
        return None;
    }
    let last = rows.iter().max_by_key(|r| r.epoch)?;
    match (last.test_accuracy, last.test_loss) {
        (Some(acc), _) => Some((acc, true)),
        (None, Some(loss)) => Some((loss, false)),
        (None, None) => None,
    }
}

/// 1-based ranks with ties resolved to their mean position. `None` ranks last.
fn mean_ranks(values: &[Option<f64>], higher_is_better: bool) -> Vec<f64> {
    let badness = |v: Option<f64>| match v {
        Some(x) if x.is_finite() => if higher_is_better { -x } else { x },
        _ => f64::INFINITY,
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| badness(values[a]).total_cmp(&badness(values[b])));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let here = badness(values[order[start]]);
        let mut end = start + 1;
        while end < order.len() && badness(values[order[end]]) == here {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Ranks every strategy label on every (dataset, rate) task using final-epoch metrics averaged
/// over seeds, then averages ranks across tasks.
///
/// The grid must be complete: every label needs every task and every seed seen for that task.
pub fn rank_table(rows: &[ResultRow]) -> Result<RankTable, BenchError> {
    let mut runs: BTreeMap<(TaskKey, LabelKey, u64), Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        let task = (row.dataset.clone(), OrdF64(row.sampling_rate));
        runs.entry((task, label_key(row), row.seed)).or_default().push(row);
    }
    let tasks: BTreeSet<TaskKey> = runs.keys().map(|(t, _, _)| t.clone()).collect();
    let labels: BTreeSet<LabelKey> = runs.keys().map(|(_, l, _)| l.clone()).collect();
    if labels.len() < 2 {
        return Err(BenchError::Config(format!("ranking needs at least two strategies, found {}", labels.len())));
    }

    let mut missing = Vec::new();
    let mut table_values = Vec::new();
    let mut table_tasks = Vec::new();
    let mut ranks = Vec::new();
    for task in &tasks {
        let seeds: BTreeSet<u64> =
            runs.keys().filter(|(t, _, _)| t == task).map(|(_, _, s)| *s).collect();
        let mut values = Vec::new();
        let mut higher = None;
        for label in &labels {
            let mut sum = 0.0;
            let mut failed = false;
            for &seed in &seeds {
                match runs.get(&(task.clone(), label.clone(), seed)) {
                    None => missing.push(format!("{} on {} at rate {} seed {seed}", label.label, task.0, task.1 .0)),
                    Some(cell) => match final_metric(cell) {
                        Some((v, is_acc)) => {
                            sum += v;
                            higher.get_or_insert(is_acc);
                        }
                        None => failed = true,
                    },
                }
            }
            values.push((!failed).then(|| sum / seeds.len() as f64));
        }
        let higher = higher.unwrap_or(false);
        ranks.push(mean_ranks(&values, higher));
        table_values.push(values);
        table_tasks.push(Task {
            dataset: task.0.clone(),
            sampling_rate: task.1 .0,
            metric: if higher { "test_accuracy" } else { "test_loss" },
        });
    }
    if !missing.is_empty() {
        return Err(BenchError::IncompleteGrid(missing));
    }

    let mean_rank = (0..labels.len())
        .map(|l| ranks.iter().map(|r| r[l]).sum::<f64>() / ranks.len() as f64)
        .collect();
    Ok(RankTable {
        labels: labels.into_iter().map(|l| l.label).collect(),
        tasks: table_tasks,
        ranks,
        values: table_values,
        mean_rank,
    })
}

impl RankTable {
    fn task_name(task: &Task) -> String {
        format!("{}@{}", task.dataset, task.sampling_rate)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| task |");
        for label in &self.labels {
            let _ = write!(out, " {label} |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(self.labels.len()));
        out.push('\n');
        for (task, ranks) in self.tasks.iter().zip(&self.ranks) {
            let _ = write!(out, "| {} |", Self::task_name(task));
            for r in ranks {
                let _ = write!(out, " {r} |");
            }
            out.push('\n');
        }
        out.push_str("| **mean rank** |");
        for r in &self.mean_rank {
            let _ = write!(out, " **{r:.3}** |");
        }
        out.push('\n');
        out
    }

    /// Long form: one line per (task, label) plus a `mean` line per label.
    pub fn to_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dataset", "sampling_rate", "metric", "strategy", "value", "rank"])?;
        for (t, task) in self.tasks.iter().enumerate() {
            for (l, label) in self.labels.iter().enumerate() {
                let value = self.values[t][l].map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    task.dataset.as_str(),
                    &task.sampling_rate.to_string(),
                    task.metric,
                    label,
                    &value,
                    &self.ranks[t][l].to_string(),
                ])?;
            }
        }
        for (label, r) in self.labels.iter().zip(&self.mean_rank) {
            w.write_record(["mean", "", "", label.as_str(), "", &r.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
