//! Report emission: CSV and markdown tables comparing baseline and scaled
//! error rates, plus raw per-budget plot data.
//!
//! Conventions, also spelled out in each emitted file: the baseline column is
//! the average of the two strategies at budget 1; sigma columns are sample
//! standard deviations of the per-run indicator at the target budget; deltas
//! are baseline minus scaled (positive = improvement).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{Complexity, GroupStrategy, QerStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Plotdata,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "plotdata" => Ok(ReportFormat::Plotdata),
            other => Err(format!("unknown report format `{other}` (expected csv, markdown or plotdata)")),
        }
    }
}

/// One comparison row: a (dataset, model, complexity) population with its
/// baseline, scaled means and derived deltas at the target budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub model: String,
    pub complexity: Option<Complexity>,
    pub q1: Option<f64>,
    pub is_at_n: Option<f64>,
    pub ras_at_n: Option<f64>,
    pub delta_is: Option<f64>,
    pub delta_ras: Option<f64>,
    pub sigma_is: Option<f64>,
    pub sigma_ras: Option<f64>,
}

/// Build comparison rows at `target_budget` (the `@n` column).
pub fn build_rows(stats: &[QerStats], target_budget: u32) -> Vec<ReportRow> {
    let mut populations: Vec<(String, String, Option<Complexity>)> = stats
        .iter()
        .map(|s| {
            (
                s.group_key.dataset.clone(),
                s.group_key.model.clone(),
                s.group_key.complexity,
            )
        })
        .collect();
    populations.sort();
    populations.dedup();

    populations
        .into_iter()
        .map(|(dataset, model, complexity)| {
            let find = |strategy: GroupStrategy, budget: u32| {
                stats.iter().find(|s| {
                    s.group_key.dataset == dataset
                        && s.group_key.model == model
                        && s.group_key.complexity == complexity
                        && s.group_key.strategy == strategy
                        && s.group_key.budget == budget
                })
            };
            let q1 = find(GroupStrategy::Baseline, 1).map(|s| s.mean);
            let is_stats = find(GroupStrategy::Is, target_budget);
            let ras_stats = find(GroupStrategy::Ras, target_budget);
            ReportRow {
                dataset,
                model,
                complexity,
                q1,
                is_at_n: is_stats.map(|s| s.mean),
                ras_at_n: ras_stats.map(|s| s.mean),
                delta_is: q1.zip(is_stats).map(|(q, s)| q - s.mean),
                delta_ras: q1.zip(ras_stats).map(|(q, s)| q - s.mean),
                sigma_is: is_stats.map(|s| s.std_dev),
                sigma_ras: ras_stats.map(|s| s.std_dev),
            }
        })
        .collect()
}

/// Highest non-baseline budget present; the `@n` the report compares at.
pub fn target_budget(stats: &[QerStats]) -> Option<u32> {
    stats
        .iter()
        .filter(|s| s.group_key.strategy != GroupStrategy::Baseline)
        .map(|s| s.group_key.budget)
        .max()
}

/// Render `stats` in `format` and write the result to `path`.
pub fn emit_report(
    stats: &[QerStats],
    format: ReportFormat,
    target: Option<u32>,
    path: &Path,
) -> Result<(), ReportError> {
    if stats.is_empty() {
        return Err(ReportError::EmptyStats);
    }
    let budget = match target.or_else(|| target_budget(stats)) {
        Some(budget) => budget,
        None => return Err(ReportError::EmptyStats),
    };
    let content = match format {
        ReportFormat::Csv => render_csv(stats, budget),
        ReportFormat::Markdown => render_markdown(stats, budget),
        ReportFormat::Plotdata => render_plotdata(stats),
    };
    std::fs::write(path, content).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn fmt_opt(value: Option<f64>) -> String {
    // Shortest representation that parses back to the same f64, so the CSV
    // round-trips at full precision.
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn render_csv(stats: &[QerStats], budget: u32) -> String {
    let rows = build_rows(stats, budget);
    let mut out = String::from(
        "dataset,model,complexity,q1,is_at_n,ras_at_n,delta_is,delta_ras,sigma_is,sigma_ras\n",
    );
    for row in rows {
        let complexity = row
            .complexity
            .map(|c| c.to_string())
            .unwrap_or_else(|| "all".to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.dataset,
            row.model,
            complexity,
            fmt_opt(row.q1),
            fmt_opt(row.is_at_n),
            fmt_opt(row.ras_at_n),
            fmt_opt(row.delta_is),
            fmt_opt(row.delta_ras),
            fmt_opt(row.sigma_is),
            fmt_opt(row.sigma_ras),
        );
    }
    out
}

fn fmt_cell(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.2}")).unwrap_or_else(|| "—".to_string())
}

fn render_markdown(stats: &[QerStats], budget: u32) -> String {
    let rows = build_rows(stats, budget);
    let mut out = String::new();
    let _ = writeln!(out, "# Query execution error rates");
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "Q@1 is the single-pass baseline, averaged over IS@1 and RAS@1. \
         IS@{budget} and RAS@{budget} are error rates after scaling to {budget} attempts; \
         deltas are reductions relative to Q@1. Sigmas are sample standard deviations \
         of the per-run error indicator at budget {budget}."
    );

    let mut datasets: Vec<&str> = rows.iter().map(|r| r.dataset.as_str()).collect();
    datasets.dedup();
    for dataset in datasets {
        let _ = writeln!(out, "\n## {dataset}\n");
        let by_complexity = rows
            .iter()
            .any(|r| r.dataset == dataset && r.complexity.is_some());
        if by_complexity {
            let _ = writeln!(
                out,
                "| Model | Complexity | Q@1 | IS@{budget} | RAS@{budget} | ΔIS | ΔRAS | σIS | σRAS |"
            );
            let _ = writeln!(out, "|---|---|---|---|---|---|---|---|---|");
        } else {
            let _ = writeln!(out, "| Model | Q@1 | IS@{budget} | RAS@{budget} | ΔIS | ΔRAS | σIS | σRAS |");
            let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
        }
        for row in rows.iter().filter(|r| r.dataset == dataset) {
            if by_complexity {
                let complexity = row
                    .complexity
                    .map(|c| c.to_string())
                    .unwrap_or_else(|| "all".to_string());
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                    row.model,
                    complexity,
                    fmt_cell(row.q1),
                    fmt_cell(row.is_at_n),
                    fmt_cell(row.ras_at_n),
                    fmt_cell(row.delta_is),
                    fmt_cell(row.delta_ras),
                    fmt_cell(row.sigma_is),
                    fmt_cell(row.sigma_ras),
                );
            } else {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} | {} |",
                    row.model,
                    fmt_cell(row.q1),
                    fmt_cell(row.is_at_n),
                    fmt_cell(row.ras_at_n),
                    fmt_cell(row.delta_is),
                    fmt_cell(row.delta_ras),
                    fmt_cell(row.sigma_is),
                    fmt_cell(row.sigma_ras),
                );
            }
        }
    }
    out
}

/// Raw per-budget series, one row per (group, budget): ready for any
/// plotting tool that reads CSV.
fn render_plotdata(stats: &[QerStats]) -> String {
    let mut out = String::from("dataset,model,complexity,strategy,budget,qer,std_dev,n_runs\n");
    for s in stats {
        let complexity = s
            .group_key
            .complexity
            .map(|c| c.to_string())
            .unwrap_or_else(|| "all".to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.group_key.dataset,
            s.group_key.model,
            complexity,
            s.group_key.strategy,
            s.group_key.budget,
            s.mean,
            s.std_dev,
            s.n_runs,
        );
    }
    out
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no statistics to report")]
    EmptyStats,
    #[error("cannot write report {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GroupKey;

    fn stat(
        dataset: &str,
        complexity: Option<Complexity>,
        strategy: GroupStrategy,
        budget: u32,
        mean: f64,
        std_dev: f64,
    ) -> QerStats {
        QerStats {
            group_key: GroupKey {
                dataset: dataset.to_string(),
                model: "codellama-13b".to_string(),
                complexity,
                strategy,
                budget,
            },
            mean,
            std_dev,
            n_runs: 128,
        }
    }

    fn crime_stats() -> Vec<QerStats> {
        vec![
            stat("crime", None, GroupStrategy::Baseline, 1, 0.40, 0.0),
            stat("crime", None, GroupStrategy::Is, 5, 0.14, 0.04),
            stat("crime", None, GroupStrategy::Ras, 5, 0.05, 0.04),
        ]
    }

    #[test]
    fn deltas_match_reported_reductions() {
        let rows = build_rows(&crime_stats(), 5);
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert!((row.delta_is.unwrap() - 0.26).abs() < 1e-12);
        assert!((row.delta_ras.unwrap() - 0.35).abs() < 1e-12);
    }

    #[test]
    fn csv_roundtrips_at_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        emit_report(&crime_stats(), ReportFormat::Csv, None, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(
            header,
            "dataset,model,complexity,q1,is_at_n,ras_at_n,delta_is,delta_ras,sigma_is,sigma_ras"
        );
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields[0], "crime");
        assert_eq!(fields[2], "all");
        assert_eq!(fields[3].parse::<f64>().unwrap(), 0.40);
        assert_eq!(fields[4].parse::<f64>().unwrap(), 0.14);
        assert_eq!(fields[5].parse::<f64>().unwrap(), 0.05);
        let rows = build_rows(&crime_stats(), 5);
        assert_eq!(fields[6].parse::<f64>().unwrap(), rows[0].delta_is.unwrap());
        assert_eq!(fields[7].parse::<f64>().unwrap(), rows[0].delta_ras.unwrap());
    }

    #[test]
    fn markdown_mirrors_summary_table_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.md");
        emit_report(&crime_stats(), ReportFormat::Markdown, None, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("## crime"));
        assert!(text.contains("| Model | Q@1 | IS@5 | RAS@5 | ΔIS | ΔRAS | σIS | σRAS |"));
        assert!(text.contains("| codellama-13b | 0.40 | 0.14 | 0.05 | 0.26 | 0.35 |"));
    }

    #[test]
    fn markdown_per_complexity_adds_column() {
        let stats = vec![
            stat("crime", Some(Complexity::Easy), GroupStrategy::Baseline, 1, 0.17, 0.0),
            stat("crime", Some(Complexity::Easy), GroupStrategy::Is, 5, 0.04, 0.02),
            stat("crime", Some(Complexity::Easy), GroupStrategy::Ras, 5, 0.02, 0.02),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.md");
        emit_report(&stats, ReportFormat::Markdown, None, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("| Model | Complexity |"));
        assert!(text.contains("| codellama-13b | Easy | 0.17 | 0.04 | 0.02 |"));
    }

    #[test]
    fn plotdata_lists_every_group_budget_pair() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.csv");
        emit_report(&crime_stats(), ReportFormat::Plotdata, None, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4, "{text}");
        assert!(text.contains("crime,codellama-13b,all,Q,1,0.4,0,128"));
        assert!(text.contains("crime,codellama-13b,all,IS,5,0.14,0.04,128"));
    }

    #[test]
    fn empty_stats_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        assert!(matches!(
            emit_report(&[], ReportFormat::Csv, None, &path).unwrap_err(),
            ReportError::EmptyStats
        ));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert_eq!("Markdown".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
        assert!("svg".parse::<ReportFormat>().is_err());
    }
}
