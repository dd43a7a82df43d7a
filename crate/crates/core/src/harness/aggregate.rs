//! Log aggregation into grouped error-rate statistics, per-budget trajectory
//! curves, and knee-point budget selection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    qer, Complexity, GroupKey, GroupStrategy, QerStats, RunRecord, Strategy,
};

use super::log::LogEntry;
use super::HarnessError;

/// Whether aggregation keeps the complexity axis or pools across it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    PerComplexity,
    AcrossComplexities,
}

/// Group a run log into QER statistics.
///
/// Strategy rows are computed per (dataset, model, [complexity], strategy,
/// budget). Wherever both strategies are present at budget 1, a synthetic
/// baseline row is added whose mean is the arithmetic average of the IS and
/// RAS means at budget 1; its standard deviation is the sample deviation over
/// the pooled runs.
pub fn aggregate(entries: &[LogEntry], grouping: Grouping) -> Vec<QerStats> {
    type CellKey = (String, String, Option<Complexity>, Strategy, u32);
    let mut cells: BTreeMap<CellKey, Vec<&RunRecord>> = BTreeMap::new();
    for entry in entries {
        let complexity = match grouping {
            Grouping::PerComplexity => Some(entry.complexity),
            Grouping::AcrossComplexities => None,
        };
        let key = (
            entry.dataset.clone(),
            entry.model.clone(),
            complexity,
            entry.record.strategy,
            entry.record.budget,
        );
        cells.entry(key).or_default().push(&entry.record);
    }

    let mut stats = Vec::new();
    for ((dataset, model, complexity, strategy, budget), records) in &cells {
        let key = GroupKey {
            dataset: dataset.clone(),
            model: model.clone(),
            complexity: *complexity,
            strategy: (*strategy).into(),
            budget: *budget,
        };
        let owned: Vec<RunRecord> = records.iter().map(|r| (*r).clone()).collect();
        let cell_stats = qer(&owned, key).expect("grouped cells are non-empty and homogeneous");
        stats.push(cell_stats);
    }

    // Baseline rows: average of the two strategies' means at budget 1.
    let mut baselines = Vec::new();
    let populations: std::collections::BTreeSet<(String, String, Option<Complexity>)> = cells
        .keys()
        .map(|(d, m, c, _, _)| (d.clone(), m.clone(), *c))
        .collect();
    for (dataset, model, complexity) in populations {
        let is_key = (dataset.clone(), model.clone(), complexity, Strategy::Is, 1);
        let ras_key = (dataset.clone(), model.clone(), complexity, Strategy::Ras, 1);
        let (Some(is_records), Some(ras_records)) = (cells.get(&is_key), cells.get(&ras_key))
        else {
            continue;
        };
        let mean_of = |records: &[&RunRecord]| {
            records.iter().filter(|r| r.qee).count() as f64 / records.len() as f64
        };
        let mean = (mean_of(is_records) + mean_of(ras_records)) / 2.0;
        let pooled: Vec<f64> = is_records
            .iter()
            .chain(ras_records.iter())
            .map(|r| if r.qee { 1.0 } else { 0.0 })
            .collect();
        let n = pooled.len();
        let pooled_mean = pooled.iter().sum::<f64>() / n as f64;
        let std_dev = if n < 2 {
            0.0
        } else {
            (pooled.iter().map(|v| (v - pooled_mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        baselines.push(QerStats {
            group_key: GroupKey {
                dataset,
                model,
                complexity,
                strategy: GroupStrategy::Baseline,
                budget: 1,
            },
            mean,
            std_dev,
            n_runs: n,
        });
    }

    stats.extend(baselines);
    stats.sort_by(|a, b| a.group_key.cmp(&b.group_key));
    stats
}

/// Mean QER per budget for one (dataset, model, [complexity], strategy) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCurve {
    pub dataset: String,
    pub model: String,
    pub complexity: Option<Complexity>,
    pub strategy: GroupStrategy,
    /// `(budget, mean QER)`, budgets strictly increasing.
    pub points: Vec<(u32, f64)>,
}

impl TrajectoryCurve {
    /// Build a curve from raw points, enforcing the invariants: at least one
    /// point, strictly increasing budgets, values in [0, 1].
    pub fn from_points(
        strategy: GroupStrategy,
        mut points: Vec<(u32, f64)>,
    ) -> Result<Self, HarnessError> {
        points.sort_by_key(|(budget, _)| *budget);
        if points.is_empty() {
            return Err(HarnessError::EmptyCurve);
        }
        for window in points.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(HarnessError::DuplicateBudget { budget: window[0].0 });
            }
        }
        if let Some(&(budget, value)) = points.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
            return Err(HarnessError::ValueOutOfRange { budget, value });
        }
        Ok(TrajectoryCurve {
            dataset: String::new(),
            model: String::new(),
            complexity: None,
            strategy,
            points,
        })
    }

    /// Successive drops `(budget_n, mean_n - mean_{n-1})` for n >= 2; negative
    /// values are improvements. Useful for eyeballing concavity.
    pub fn first_differences(&self) -> Vec<(u32, f64)> {
        self.points
            .windows(2)
            .map(|w| (w[1].0, w[1].1 - w[0].1))
            .collect()
    }
}

/// Extract the per-budget trajectory for one group from a run log. Requires
/// every budget 1..=max to be present; a gap is an error naming the missing
/// budget.
pub fn trajectory(
    entries: &[LogEntry],
    dataset: &str,
    model: &str,
    complexity: Option<Complexity>,
    strategy: Strategy,
) -> Result<TrajectoryCurve, HarnessError> {
    let mut per_budget: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for entry in entries {
        if entry.dataset != dataset || entry.model != model {
            continue;
        }
        if let Some(c) = complexity {
            if entry.complexity != c {
                continue;
            }
        }
        if entry.record.strategy != strategy {
            continue;
        }
        let slot = per_budget.entry(entry.record.budget).or_insert((0, 0));
        slot.0 += 1;
        if entry.record.qee {
            slot.1 += 1;
        }
    }
    if per_budget.is_empty() {
        return Err(HarnessError::EmptyGroup {
            group: format!("{dataset}/{model}/{strategy}"),
        });
    }
    let max_budget = *per_budget.keys().last().expect("non-empty");
    for budget in 1..=max_budget {
        if !per_budget.contains_key(&budget) {
            return Err(HarnessError::MissingBudget { budget });
        }
    }
    let points = per_budget
        .into_iter()
        .map(|(budget, (n, failures))| (budget, failures as f64 / n as f64))
        .collect();
    let mut curve = TrajectoryCurve::from_points(strategy.into(), points)?;
    curve.dataset = dataset.to_string();
    curve.model = model.to_string();
    curve.complexity = complexity;
    Ok(curve)
}

/// Perpendicular distance of each interior curve point from the chord joining
/// the first and last points, in normalized (cost, error) space. Returned per
/// budget so callers can print the full table.
pub fn knee_distances(
    curve: &TrajectoryCurve,
    cost_per_attempt: f64,
) -> Result<Vec<(u32, f64)>, HarnessError> {
    if curve.points.len() < 3 {
        return Err(HarnessError::CurveTooShort { points: curve.points.len() });
    }
    let costs: Vec<f64> = curve.points.iter().map(|(b, _)| *b as f64 * cost_per_attempt).collect();
    let errors: Vec<f64> = curve.points.iter().map(|(_, e)| *e).collect();
    let (cost_lo, cost_hi) = (costs[0], *costs.last().expect("non-empty"));
    let (err_lo, err_hi) = errors.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
        (lo.min(e), hi.max(e))
    });
    let normalize = |value: f64, lo: f64, hi: f64| {
        if (hi - lo).abs() < f64::EPSILON {
            0.0
        } else {
            (value - lo) / (hi - lo)
        }
    };

    let first = (
        normalize(costs[0], cost_lo, cost_hi),
        normalize(errors[0], err_lo, err_hi),
    );
    let last = (
        normalize(*costs.last().expect("non-empty"), cost_lo, cost_hi),
        normalize(*errors.last().expect("non-empty"), err_lo, err_hi),
    );
    let chord = (last.0 - first.0, last.1 - first.1);
    let chord_len = (chord.0 * chord.0 + chord.1 * chord.1).sqrt();

    let distances = curve
        .points
        .iter()
        .zip(costs.iter().zip(errors.iter()))
        .map(|((budget, _), (&cost, &error))| {
            let point = (
                normalize(cost, cost_lo, cost_hi),
                normalize(error, err_lo, err_hi),
            );
            let distance = if chord_len < f64::EPSILON {
                0.0
            } else {
                // Cross-product magnitude over chord length.
                ((point.0 - first.0) * chord.1 - (point.1 - first.1) * chord.0).abs() / chord_len
            };
            (*budget, distance)
        })
        .collect();
    Ok(distances)
}

/// Budget at the knee of the cost/error curve: the interior point farthest
/// from the endpoint chord. Ties break toward the smaller budget, so a linear
/// curve selects the lowest interior budget.
pub fn knee_point(curve: &TrajectoryCurve, cost_per_attempt: f64) -> Result<u32, HarnessError> {
    let distances = knee_distances(curve, cost_per_attempt)?;
    let interior = &distances[1..distances.len() - 1];
    let mut best = interior[0];
    for &(budget, distance) in &interior[1..] {
        if distance > best.1 {
            best = (budget, distance);
        }
    }
    Ok(best.0)
}
