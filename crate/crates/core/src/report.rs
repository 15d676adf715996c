//! Versioned JSON reports and the benchmark accuracy table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::loss_grad::{GradCheckReport, Variant};
use crate::optim_train::{LambdaSearch, TrainConfig, TrainReport};

/// Bumped whenever a report's JSON layout changes incompatibly.
pub const SCHEMA_VERSION: u32 = 1;

/// Mean and sample standard deviation; the deviation of fewer than two
/// values is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub mean_test_accuracy: Option<f64>,
    pub std_test_accuracy: Option<f64>,
    pub mean_val_accuracy: f64,
    pub mean_train_accuracy: f64,
}

impl Summary {
    pub fn of(reports: &[TrainReport]) -> Summary {
        let val: Vec<f64> = reports.iter().map(|r| r.outcome.val_accuracy).collect();
        let train: Vec<f64> = reports.iter().map(|r| r.outcome.train_accuracy).collect();
        let test: Option<Vec<f64>> = reports.iter().map(|r| r.outcome.test_accuracy).collect();
        let (mean_test, std_test) = match test {
            Some(t) if !t.is_empty() => {
                let (m, s) = mean_std(&t);
                (Some(m), Some(s))
            }
            _ => (None, None),
        };
        Summary {
            runs: reports.len(),
            mean_test_accuracy: mean_test,
            std_test_accuracy: std_test,
            mean_val_accuracy: mean_std(&val).0,
            mean_train_accuracy: mean_std(&train).0,
        }
    }
}

/// Output of `glgcn train`: one report per seed plus their summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub dataset: String,
    pub seeds: Vec<u64>,
    pub summary: Summary,
    pub runs: Vec<TrainReport>,
}

impl RunReport {
    pub fn new(dataset: impl Into<String>, runs: Vec<TrainReport>) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            dataset: dataset.into(),
            seeds: runs.iter().map(|r| r.config.seed).collect(),
            summary: Summary::of(&runs),
            runs,
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for r in &self.runs {
            let o = &r.outcome;
            let test = o.test_accuracy.map_or("-".to_string(), |t| format!("{:.4}", t));
            let _ = writeln!(
                out,
                "{} seed={} epochs={} best_epoch={} train_acc={:.4} val_acc={:.4} test_acc={} ({:.2}s)",
                r.config.variant,
                r.config.seed,
                o.epochs_run,
                o.best_epoch,
                o.train_accuracy,
                o.val_accuracy,
                test,
                r.wall_clock_seconds
            );
        }
        if let (Some(m), Some(s)) = (self.summary.mean_test_accuracy, self.summary.std_test_accuracy) {
            let _ = writeln!(
                out,
                "{}: mean test accuracy {:.2} ± {:.2} over {} run(s)",
                self.dataset,
                100.0 * m,
                100.0 * s,
                self.summary.runs
            );
        }
        out
    }

    pub fn render_markdown(&self) -> String {
        let mut out = String::from("| Variant | Seed | Epochs | Best epoch | Train acc | Val acc | Test acc |\n|---|---|---|---|---|---|---|\n");
        for r in &self.runs {
            let o = &r.outcome;
            let test = o.test_accuracy.map_or("-".to_string(), |t| format!("{:.4}", t));
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {:.4} | {:.4} | {test} |",
                r.config.variant.display_name(),
                r.config.seed,
                o.epochs_run,
                o.best_epoch,
                o.train_accuracy,
                o.val_accuracy
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub dataset: String,
    pub split: crate::data_io::Split,
    pub accuracy: f64,
    pub nodes: usize,
    pub config: TrainConfig,
}

impl EvalReport {
    pub fn render_text(&self) -> String {
        format!(
            "{} {} accuracy {:.4} ({} nodes)\n",
            self.dataset, self.split, self.accuracy, self.nodes
        )
    }

    pub fn render_markdown(&self) -> String {
        format!(
            "| Dataset | Split | Nodes | Accuracy |\n|---|---|---|---|\n| {} | {} | {} | {:.4} |\n",
            self.dataset, self.split, self.nodes, self.accuracy
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckEntry {
    pub variant: Variant,
    pub config: TrainConfig,
    pub epsilon: f64,
    #[serde(flatten)]
    pub result: GradCheckReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckSuiteReport {
    pub schema_version: u32,
    pub threshold: f64,
    pub passed: bool,
    pub checks: Vec<GradCheckEntry>,
}

impl GradCheckSuiteReport {
    pub fn new(threshold: f64, checks: Vec<GradCheckEntry>) -> Self {
        GradCheckSuiteReport {
            schema_version: SCHEMA_VERSION,
            threshold,
            passed: checks.iter().all(|c| c.result.max_rel_error < threshold),
            checks,
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let ok = c.result.max_rel_error < self.threshold;
            let _ = writeln!(
                out,
                "{:<10} max_rel_error={:.3e} entries={} {}",
                c.variant.as_str(),
                c.result.max_rel_error,
                c.result.entries_checked,
                if ok { "ok" } else { "FAIL" }
            );
        }
        out
    }

    pub fn render_markdown(&self) -> String {
        let mut out = String::from("| Variant | Max relative error | Entries | Pass |\n|---|---|---|---|\n");
        for c in &self.checks {
            let ok = c.result.max_rel_error < self.threshold;
            let _ = writeln!(
                out,
                "| {} | {:.3e} | {} | {} |",
                c.variant.display_name(),
                c.result.max_rel_error,
                c.result.entries_checked,
                if ok { "yes" } else { "no" }
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearchReport {
    pub schema_version: u32,
    pub dataset: String,
    #[serde(flatten)]
    pub search: LambdaSearch,
}

impl LambdaSearchReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.search.table.iter().enumerate() {
            let mark = if i == self.search.best_cell { " *" } else { "" };
            let _ = writeln!(
                out,
                "lambda={:<8} alpha={:<5} val_acc={:.4} val_loss={:.4}{mark}",
                c.lambda, c.alpha, c.val_accuracy, c.val_loss
            );
        }
        out
    }

    pub fn render_markdown(&self) -> String {
        let mut out = String::from("| λ | α | Val acc | Val loss | Chosen |\n|---|---|---|---|---|\n");
        for (i, c) in self.search.table.iter().enumerate() {
            let mark = if i == self.search.best_cell { "*" } else { "" };
            let _ = writeln!(
                out,
                "| {} | {} | {:.4} | {:.4} | {mark} |",
                c.lambda, c.alpha, c.val_accuracy, c.val_loss
            );
        }
        out
    }
}

/// Row label of the benchmark table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lp,
    Model(Variant),
}

impl Method {
    /// Table order: label propagation first, then the variants.
    pub const ROWS: [Method; 5] = [
        Method::Lp,
        Method::Model(Variant::Gcn),
        Method::Model(Variant::GlgcnF),
        Method::Model(Variant::GlgcnL),
        Method::Model(Variant::GlgcnFl),
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Lp => "LP",
            Method::Model(v) => v.display_name(),
        }
    }
}

/// One (dataset, method) entry; accuracies are fractions in [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub dataset: String,
    pub method: Method,
    pub test_accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Configuration every run used, seed aside; absent for label propagation.
    pub config: Option<TrainConfig>,
    pub seeds: Vec<u64>,
    pub lambda_search: Option<LambdaSearch>,
}

impl BenchCell {
    pub fn new(
        dataset: impl Into<String>,
        method: Method,
        test_accuracies: Vec<f64>,
        config: Option<TrainConfig>,
        seeds: Vec<u64>,
        lambda_search: Option<LambdaSearch>,
    ) -> Self {
        let (mean, std) = mean_std(&test_accuracies);
        BenchCell {
            dataset: dataset.into(),
            method,
            test_accuracies,
            mean,
            std,
            config,
            seeds,
            lambda_search,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub datasets: Vec<String>,
    pub skipped: Vec<String>,
    pub cells: Vec<BenchCell>,
}

impl BenchReport {
    /// Sorts cells into table order so the output does not depend on the
    /// order in which they finished.
    pub fn new(datasets: Vec<String>, skipped: Vec<String>, mut cells: Vec<BenchCell>) -> Self {
        let row = |m: Method| Method::ROWS.iter().position(|&r| r == m).unwrap_or(usize::MAX);
        let col = |d: &str| datasets.iter().position(|x| x == d).unwrap_or(usize::MAX);
        cells.sort_by_key(|c| (row(c.method), col(&c.dataset)));
        BenchReport {
            schema_version: SCHEMA_VERSION,
            datasets,
            skipped,
            cells,
        }
    }

    pub fn cell(&self, dataset: &str, method: Method) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.dataset == dataset && c.method == method)
    }

    fn rows(&self) -> Vec<(Method, Vec<String>)> {
        Method::ROWS
            .iter()
            .filter(|&&m| self.cells.iter().any(|c| c.method == m))
            .map(|&m| {
                let entries = self
                    .datasets
                    .iter()
                    .map(|d| match self.cell(d, m) {
                        Some(c) => format!("{:.1} ± {:.1}", 100.0 * c.mean, 100.0 * c.std),
                        None => "-".to_string(),
                    })
                    .collect();
                (m, entries)
            })
            .collect()
    }

    /// Test accuracy ×100 as `mean ± std`, one row per method.
    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| Method | {} |", self.datasets.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(self.datasets.len()));
        for (m, entries) in self.rows() {
            let _ = writeln!(out, "| {} | {} |", m.label(), entries.join(" | "));
        }
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<10}", "Method");
        for d in &self.datasets {
            let _ = write!(out, " {d:>14}");
        }
        out.push('\n');
        for (m, entries) in self.rows() {
            let _ = write!(out, "{:<10}", m.label());
            for e in entries {
                let _ = write!(out, " {e:>14}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_cases() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    fn sample_bench() -> BenchReport {
        let cells = vec![
            BenchCell::new(
                "b",
                Method::Model(Variant::GlgcnFl),
                vec![0.8, 0.9],
                None,
                vec![0, 1],
                None,
            ),
            BenchCell::new("a", Method::Model(Variant::Gcn), vec![0.75], None, vec![0], None),
            BenchCell::new("a", Method::Lp, vec![0.453], None, vec![], None),
        ];
        BenchReport::new(vec!["a".into(), "b".into()], vec![], cells)
    }

    #[test]
    fn bench_rows_follow_table_order() {
        let r = sample_bench();
        let methods: Vec<Method> = r.cells.iter().map(|c| c.method).collect();
        assert_eq!(
            methods,
            [Method::Lp, Method::Model(Variant::Gcn), Method::Model(Variant::GlgcnFl)]
        );
        let md = r.render_markdown();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| Method | a | b |");
        assert_eq!(lines[2], "| LP | 45.3 ± 0.0 | - |");
        assert_eq!(lines[3], "| GCN | 75.0 ± 0.0 | - |");
        assert!(lines[4].starts_with("| gLGCN-F-L | - | 85.0 ± 7.1 |"), "{}", lines[4]);
    }

    #[test]
    fn bench_json_round_trips() {
        let r = sample_bench();
        let json = serde_json::to_string_pretty(&r).unwrap();
        let back: BenchReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), json);
    }
}
