//! Repeated replay experiments and their comparison tables.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arm::{ensure_unique, ArmId};
use crate::bandit::{AggregatorKind, PolicyConfig};
use crate::dataset::{shuffle_modules, Dataset, Ordering};
use crate::error::{Error, Result};
use crate::replay::{
    run_fixed_arm, run_policy_replay_with_first_pick, run_random_baseline, summarize, ApproachSummary,
    RunTrace,
};
use crate::seed::derive_seed;

const ORDER_STREAM: u64 = 1;
const POLICY_STREAM: u64 = 2;
const RANDOM_STREAM: u64 = 3;

/// Fractional excess of `target` over `best`: `1 - best / target`.
///
/// Equal inputs give exactly 0.
pub fn relative_error(target: f64, best: f64) -> Result<f64> {
    if target == best {
        return Ok(0.0);
    }
    if !(target > 0.0 && best > 0.0) {
        return Err(Error::domain(format!(
            "relative error needs positive values, got target {target} and best {best}"
        )));
    }
    if best > target {
        return Err(Error::domain(format!("best {best} exceeds target {target}")));
    }
    Ok(1.0 - best / target)
}

/// Competition ranking, smaller is better: each rank is one plus the number
/// of strictly smaller values, so ties share the lowest rank of their group.
pub fn rank_scores(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|v| 1 + values.iter().filter(|w| *w < v).count())
        .collect()
}

/// Something whose EXAM scores are compared in a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Approach {
    /// A single technique used for every module.
    Fixed { arm: ArmId },
    /// The ε-greedy bandit with the given aggregator.
    Bandit { aggregator: AggregatorKind },
    /// A uniformly random technique per module.
    Random,
}

impl Approach {
    pub fn label(&self) -> String {
        match self {
            Approach::Fixed { arm } => arm.label(),
            Approach::Bandit { aggregator } => format!("BA-{}-EXAM", aggregator.short()),
            Approach::Random => "Random".into(),
        }
    }

    /// Every arm on its own, then both bandit variants, then the random
    /// baseline.
    pub fn default_set(arms: &[ArmId]) -> Vec<Approach> {
        arms.iter()
            .map(|arm| Approach::Fixed { arm: arm.clone() })
            .chain([
                Approach::Bandit { aggregator: AggregatorKind::Average },
                Approach::Bandit { aggregator: AggregatorKind::Median },
                Approach::Random,
            ])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Free-form name of the dataset, echoed in the report.
    pub dataset_label: Option<String>,
    /// Arms to compete; all dataset arms when `None`.
    pub arms: Option<Vec<ArmId>>,
    /// Approaches to run; [`Approach::default_set`] when `None`.
    pub approaches: Option<Vec<Approach>>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub epsilon: f64,
    /// Draw a fresh module order for every repetition instead of one shared
    /// order.
    pub reshuffle_per_rep: bool,
    /// Replay modules in dataset order instead of shuffling.
    pub preserve_order: bool,
    /// Force the bandit's first selection.
    pub first_pick: Option<ArmId>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset_label: None,
            arms: None,
            approaches: None,
            repetitions: 10,
            base_seed: 0,
            epsilon: 0.0,
            reshuffle_per_rep: true,
            preserve_order: false,
            first_pick: None,
        }
    }
}

impl ExperimentConfig {
    /// Seed of repetition `rep`.
    pub fn repetition_seed(&self, rep: usize) -> u64 {
        self.base_seed.wrapping_add(rep as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub average_exam: f64,
    pub median_exam: f64,
    /// `None` when the best value is 0 and this one is not.
    pub relative_error_avg: Option<f64>,
    pub relative_error_mdn: Option<f64>,
    pub rank_avg: usize,
    pub rank_mdn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dataset: Option<String>,
    pub modules: usize,
    pub arms: Vec<ArmId>,
    pub approaches: Vec<String>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub reshuffle_per_rep: bool,
    pub preserve_order: bool,
    pub first_pick: Option<ArmId>,
    /// How per-run statistics are combined across repetitions.
    pub cross_repetition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub approaches: Vec<ReportRow>,
    pub config: ConfigEcho,
}

impl Report {
    /// Ranks and relative errors for already summarized approaches.
    pub fn from_summaries(summaries: &[ApproachSummary], config: ConfigEcho) -> Result<Self> {
        if summaries.is_empty() {
            return Err(Error::NoObservations);
        }
        let averages: Vec<f64> = summaries.iter().map(|s| s.average_exam).collect();
        let medians: Vec<f64> = summaries.iter().map(|s| s.median_exam).collect();
        let best_avg = averages.iter().copied().fold(f64::INFINITY, f64::min);
        let best_mdn = medians.iter().copied().fold(f64::INFINITY, f64::min);
        let rank_avg = rank_scores(&averages);
        let rank_mdn = rank_scores(&medians);

        let approaches = summaries
            .iter()
            .enumerate()
            .map(|(i, s)| ReportRow {
                label: s.label.clone(),
                average_exam: s.average_exam,
                median_exam: s.median_exam,
                relative_error_avg: relative_error(s.average_exam, best_avg).ok(),
                relative_error_mdn: relative_error(s.median_exam, best_mdn).ok(),
                rank_avg: rank_avg[i],
                rank_mdn: rank_mdn[i],
            })
            .collect();
        Ok(Self { approaches, config })
    }

    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.approaches.iter().find(|r| r.label == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Markdown table with one column per approach and, for each criterion,
    /// rows for the EXAM value, rank score and relative error.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let cols = &self.approaches;
        let _ = write!(out, "| Evaluation criterion | Measurement |");
        for r in cols {
            let _ = write!(out, " {} |", r.label);
        }
        out.push_str("\n|---|---|");
        out.push_str(&"---:|".repeat(cols.len()));
        out.push('\n');

        type Pick = fn(&ReportRow) -> (f64, usize, Option<f64>);
        let criteria: [(&str, Pick); 2] = [
            ("Average EXAM", |r| (r.average_exam, r.rank_avg, r.relative_error_avg)),
            ("Median EXAM", |r| (r.median_exam, r.rank_mdn, r.relative_error_mdn)),
        ];
        for (name, pick) in criteria {
            let cells = |f: &dyn Fn((f64, usize, Option<f64>)) -> String| {
                cols.iter().map(|r| format!(" {} |", f(pick(r)))).collect::<String>()
            };
            let _ = writeln!(out, "| {name} | EXAM |{}", cells(&|(v, _, _)| format!("{v:.6}")));
            let _ = writeln!(out, "| | Rank score |{}", cells(&|(_, rank, _)| rank.to_string()));
            let _ = writeln!(out, "| | Relative error |{}", cells(&|(_, _, e)| format_relative(e)));
        }

        let c = &self.config;
        let _ = write!(
            out,
            "\n{} modules, {} repetitions, base seed {}, epsilon {}, order: {}.\n",
            c.modules,
            c.repetitions,
            c.base_seed,
            c.epsilon,
            if c.preserve_order {
                "as loaded"
            } else if c.reshuffle_per_rep {
                "reshuffled per repetition"
            } else {
                "one shuffle"
            }
        );
        out
    }
}

/// Relative error as a one-decimal percentage; the best entry renders `-`.
pub fn format_relative(e: Option<f64>) -> String {
    match e {
        Some(0.0) => "-".into(),
        Some(e) => format!("{:.1}%", e * 100.0),
        None => "n/a".into(),
    }
}

/// Runs every approach over `config.repetitions` orderings and assembles the
/// comparison report. Repetitions run in parallel; the result does not
/// depend on scheduling.
pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig) -> Result<Report> {
    if config.repetitions < 1 {
        return Err(Error::config("repetitions must be at least 1"));
    }
    let dataset = match &config.arms {
        Some(arms) => dataset.restrict_arms(arms)?,
        None => dataset.clone(),
    };
    if dataset.arms().len() < 2 {
        return Err(Error::config("an experiment needs at least 2 arms"));
    }
    let approaches = config
        .approaches
        .clone()
        .unwrap_or_else(|| Approach::default_set(dataset.arms()));
    if approaches.is_empty() {
        return Err(Error::config("no approaches to run"));
    }
    let labels: Vec<String> = approaches.iter().map(Approach::label).collect();
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::config(format!("approach {l} listed twice")));
        }
    }
    if let Some(arms) = &config.arms {
        ensure_unique(arms)?;
    }
    for approach in &approaches {
        if let Approach::Fixed { arm } = approach {
            if dataset.arm_index(arm).is_none() {
                return Err(Error::config(format!("arm {arm} not in dataset")));
            }
        }
    }
    PolicyConfig::new(config.epsilon, AggregatorKind::Average, 0)?;

    let seeds: Vec<u64> = (0..config.repetitions).map(|r| config.repetition_seed(r)).collect();

    let per_rep: Vec<Vec<RunTrace>> = seeds
        .par_iter()
        .map(|&rep_seed| {
            let ordering = if config.preserve_order {
                Ordering::identity(dataset.module_count())
            } else {
                let order_seed = if config.reshuffle_per_rep { rep_seed } else { config.base_seed };
                shuffle_modules(&dataset, derive_seed(order_seed, ORDER_STREAM))
            };
            approaches
                .iter()
                .map(|approach| match approach {
                    Approach::Fixed { arm } => run_fixed_arm(&dataset, &ordering, arm),
                    Approach::Bandit { aggregator } => {
                        let policy = PolicyConfig {
                            epsilon: config.epsilon,
                            aggregator: *aggregator,
                            seed: derive_seed(rep_seed, POLICY_STREAM),
                        };
                        run_policy_replay_with_first_pick(&dataset, &ordering, &policy, config.first_pick.as_ref())
                    }
                    Approach::Random => {
                        run_random_baseline(&dataset, &ordering, derive_seed(rep_seed, RANDOM_STREAM))
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let summaries = (0..approaches.len())
        .map(|a| {
            let traces: Vec<RunTrace> = per_rep.iter().map(|rep| rep[a].clone()).collect();
            summarize(&traces).map(|mut s| {
                s.label = labels[a].clone();
                s
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let echo = ConfigEcho {
        dataset: config.dataset_label.clone(),
        modules: dataset.module_count(),
        arms: dataset.arms().to_vec(),
        approaches: labels,
        repetitions: config.repetitions,
        base_seed: config.base_seed,
        seeds,
        epsilon: config.epsilon,
        reshuffle_per_rep: config.reshuffle_per_rep,
        preserve_order: config.preserve_order,
        first_pick: config.first_pick.clone(),
        cross_repetition: "mean".into(),
    };
    Report::from_summaries(&summaries, echo)
}
