//! A matplotlib script that draws loss curves and method-weight evolution from the CSV outputs.

use std::path::Path;

use crate::BenchError;

const TEMPLATE: &str = r#"import sys
import pandas as pd
import matplotlib.pyplot as plt

results_path = sys.argv[1] if len(sys.argv) > 1 else "{results}"
weights_path = sys.argv[2] if len(sys.argv) > 2 else "{weights}"

res = pd.read_csv(results_path)
res = res[~res["failed"]]
res["label"] = res["strategy"].where(res["beta"].isna(), res["strategy"] + "[beta=" + res["beta"].astype(str) + "]")
for (dataset, rate), group in res.groupby(["dataset", "sampling_rate"]):
    fig, ax = plt.subplots()
    for label, curve in group.groupby("label"):
        curve = curve.groupby("epoch")["test_loss"].mean()
        ax.plot(curve.index, curve.values, label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel("test loss")
    ax.set_yscale("log")
    ax.set_title(f"{dataset}, sampling rate {rate}")
    ax.legend(fontsize="small")
    fig.savefig(f"loss_{dataset}_{rate}.png", dpi=120)
    plt.close(fig)

try:
    w = pd.read_csv(weights_path)
except FileNotFoundError:
    w = None
if w is not None:
    for run_id, group in w.groupby("run_id"):
        fig, ax = plt.subplots()
        for method, trace in group.groupby("method"):
            ax.plot(trace["t"], trace["weight"], label=method)
        ax.set_xlabel("iteration")
        ax.set_ylabel("method weight")
        ax.set_title(run_id)
        ax.legend(fontsize="small")
        fig.savefig(f"weights_{run_id}.png", dpi=120)
        plt.close(fig)
"#;

pub fn plot_script(results: &Path, weights: &Path) -> String {
    TEMPLATE
        .replace("{results}", &results.display().to_string())
        .replace("{weights}", &weights.display().to_string())
}

pub fn write_plot_script(path: &Path, results: &Path, weights: &Path) -> Result<(), BenchError> {
    std::fs::write(path, plot_script(results, weights))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_are_substituted() {
        let s = plot_script(Path::new("a/r.csv"), Path::new("a/r_weights.csv"));
        assert!(s.contains(r#"else "a/r.csv""#));
        assert!(s.contains(r#"else "a/r_weights.csv""#));
        assert!(s.contains("f\"loss_{dataset}_{rate}.png\""));
    }
}
