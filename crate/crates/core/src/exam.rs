//! EXAM scores: the fraction of a module's source lines a developer reads,
//! in suspiciousness order, before reaching the fault. Lower is better.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An EXAM score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ExamScore(f64);

impl ExamScore {
    pub const WORST: ExamScore = ExamScore(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!("EXAM score {value} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ExamScore {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ExamScore> for f64 {
    fn from(score: ExamScore) -> f64 {
        score.0
    }
}

impl fmt::Display for ExamScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Position of the first faulty line in a suspiciousness ordering.
///
/// `rank` is real-valued so that tie-averaged ranks can be expressed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultRank {
    pub rank: f64,
    pub total_lines: usize,
}

impl FaultRank {
    pub fn new(rank: f64, total_lines: usize) -> Result<Self> {
        let fault = Self { rank, total_lines };
        fault.validate()?;
        Ok(fault)
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_lines < 1 {
            return Err(Error::domain("total_lines must be at least 1"));
        }
        if !self.rank.is_finite() || self.rank < 1.0 || self.rank > self.total_lines as f64 {
            return Err(Error::domain(format!(
                "rank {} outside [1, {}]",
                self.rank, self.total_lines
            )));
        }
        Ok(())
    }
}

/// How lines sharing the faulty line's suspiciousness are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieStrategy {
    /// The faulty line is examined first within its tie group.
    Best,
    /// The faulty line is examined last within its tie group.
    Worst,
    /// Midpoint of best and worst.
    #[default]
    Average,
}

/// EXAM score of a fault found at `fault.rank` out of `fault.total_lines`.
pub fn exam_score(fault: &FaultRank) -> Result<ExamScore> {
    fault.validate()?;
    ExamScore::new(fault.rank / fault.total_lines as f64)
}

/// Rank of the earliest-reached faulty line when lines are examined in
/// descending suspiciousness.
///
/// With several faulty lines, the one with the smallest rank under `tie`
/// wins.
pub fn rank_of_fault(
    suspiciousness: &[f64],
    faulty_indices: &[usize],
    tie: TieStrategy,
) -> Result<FaultRank> {
    if suspiciousness.is_empty() {
        return Err(Error::domain("suspiciousness list is empty"));
    }
    if faulty_indices.is_empty() {
        return Err(Error::domain("no faulty lines given"));
    }
    if let Some(bad) = suspiciousness.iter().find(|s| s.is_nan()) {
        return Err(Error::domain(format!("suspiciousness value {bad} is not a number")));
    }

    let mut best_rank = f64::INFINITY;
    for &idx in faulty_indices {
        let Some(&score) = suspiciousness.get(idx) else {
            return Err(Error::domain(format!(
                "faulty index {idx} out of range for {} lines",
                suspiciousness.len()
            )));
        };
        let above = suspiciousness.iter().filter(|&&s| s > score).count();
        let at_or_above = suspiciousness.iter().filter(|&&s| s >= score).count();
        let best = (above + 1) as f64;
        let worst = at_or_above as f64;
        let rank = match tie {
            TieStrategy::Best => best,
            TieStrategy::Worst => worst,
            TieStrategy::Average => (best + worst) / 2.0,
        };
        best_rank = best_rank.min(rank);
    }

    FaultRank::new(best_rank, suspiciousness.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exam_arithmetic() {
        assert_eq!(exam_score(&FaultRank::new(5.0, 100).unwrap()).unwrap().value(), 0.05);
        assert_eq!(exam_score(&FaultRank::new(7.0, 7).unwrap()).unwrap().value(), 1.0);
        assert_eq!(exam_score(&FaultRank::new(1.0, 1000).unwrap()).unwrap().value(), 0.001);
    }

    #[test]
    fn exam_rejects_bad_ranks() {
        let over = FaultRank { rank: 11.0, total_lines: 10 };
        assert!(matches!(exam_score(&over), Err(Error::Domain(_))));
        let empty = FaultRank { rank: 1.0, total_lines: 0 };
        assert!(exam_score(&empty).is_err());
        let zero = FaultRank { rank: 0.0, total_lines: 3 };
        assert!(exam_score(&zero).is_err());
    }

    #[test]
    fn score_bounds() {
        assert!(ExamScore::new(0.0).is_ok());
        assert!(ExamScore::new(1.0).is_ok());
        assert!(ExamScore::new(1.0001).is_err());
        assert!(ExamScore::new(-0.1).is_err());
        assert!(ExamScore::new(f64::NAN).is_err());
        assert!(serde_json::from_str::<ExamScore>("1.5").is_err());
    }

    #[test]
    fn tie_strategies_on_shared_top_score() {
        let susp = [0.9, 0.5, 0.9, 0.1];
        let avg = rank_of_fault(&susp, &[0], TieStrategy::Average).unwrap();
        assert_eq!(avg, FaultRank { rank: 1.5, total_lines: 4 });
        let worst = rank_of_fault(&susp, &[0], TieStrategy::Worst).unwrap();
        assert_eq!(worst.rank, 2.0);
        let best = rank_of_fault(&susp, &[0], TieStrategy::Best).unwrap();
        assert_eq!(best.rank, 1.0);
    }

    #[test]
    fn earliest_faulty_line_wins() {
        let susp = [0.2, 0.8, 0.5, 0.1];
        let r = rank_of_fault(&susp, &[3, 2], TieStrategy::Average).unwrap();
        assert_eq!(r.rank, 2.0);
    }

    #[test]
    fn rank_errors() {
        assert!(rank_of_fault(&[], &[0], TieStrategy::Best).is_err());
        assert!(rank_of_fault(&[0.3], &[], TieStrategy::Best).is_err());
        assert!(rank_of_fault(&[0.3, 0.2], &[2], TieStrategy::Best).is_err());
        assert!(rank_of_fault(&[0.3, f64::NAN], &[0], TieStrategy::Best).is_err());
    }

    proptest! {
        #[test]
        fn distinct_scores_make_strategies_agree(
            mut susp in prop::collection::vec(0u32..1_000_000, 1..40),
            pick in any::<prop::sample::Index>(),
        ) {
            susp.sort_unstable();
            susp.dedup();
            let susp: Vec<f64> = susp.into_iter().map(|v| v as f64 / 1e6).collect();
            let idx = pick.index(susp.len());
            let b = rank_of_fault(&susp, &[idx], TieStrategy::Best).unwrap();
            let w = rank_of_fault(&susp, &[idx], TieStrategy::Worst).unwrap();
            let a = rank_of_fault(&susp, &[idx], TieStrategy::Average).unwrap();
            prop_assert_eq!(b, w);
            prop_assert_eq!(b, a);
        }

        #[test]
        fn exam_is_monotone_in_rank(total in 1usize..5_000, r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
            let lo = 1.0 + r1.min(r2) * (total as f64 - 1.0);
            let hi = 1.0 + r1.max(r2) * (total as f64 - 1.0);
            let e_lo = exam_score(&FaultRank::new(lo, total).unwrap()).unwrap().value();
            let e_hi = exam_score(&FaultRank::new(hi, total).unwrap()).unwrap().value();
            prop_assert!(e_lo > 0.0 && e_hi <= 1.0);
            if lo < hi {
                prop_assert!(e_lo < e_hi);
            } else {
                prop_assert_eq!(e_lo, e_hi);
            }
        }
    }
}
