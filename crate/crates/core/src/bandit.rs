//! The ε-greedy engine.
//!
//! EXAM is a cost, so the greedy step picks the arm whose aggregated history
//! is smallest. Every arm observes a score each round (full feedback), which
//! keeps all histories the same length.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arm::{ensure_unique, ArmId};
use crate::error::{Error, Result};
use crate::exam::ExamScore;

/// Statistic used to turn an arm's history into its expected cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregatorKind {
    #[serde(alias = "avg", alias = "mean")]
    Average,
    #[serde(alias = "mdn")]
    Median,
}

impl AggregatorKind {
    /// Short tag used in approach labels (`avg` / `mdn`).
    pub fn short(self) -> &'static str {
        match self {
            AggregatorKind::Average => "avg",
            AggregatorKind::Median => "mdn",
        }
    }
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregatorKind::Average => "average",
            AggregatorKind::Median => "median",
        })
    }
}

impl FromStr for AggregatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "avg" | "average" | "mean" => Ok(AggregatorKind::Average),
            "mdn" | "median" => Ok(AggregatorKind::Median),
            other => Err(Error::config(format!(
                "unknown aggregator {other:?} (expected avg or median)"
            ))),
        }
    }
}

/// Mean or median of `samples`. An even-length median is the midpoint of
/// the two middle values.
pub fn aggregate(samples: &[ExamScore], kind: AggregatorKind) -> Result<ExamScore> {
    if samples.is_empty() {
        return Err(Error::NoObservations);
    }
    let value = match kind {
        AggregatorKind::Average => mean(samples.iter().map(|s| s.value())),
        AggregatorKind::Median => median(samples.iter().map(|s| s.value()).collect()),
    };
    ExamScore::new(value)
}

pub(crate) fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    values.sum::<f64>() / n as f64
}

/// Median by selection; `values` must be non-empty and NaN-free.
pub(crate) fn median(mut values: Vec<f64>) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Exploration probability in `[0, 1]`; 0 is pure greedy.
    pub epsilon: f64,
    pub aggregator: AggregatorKind,
    pub seed: u64,
}

impl PolicyConfig {
    pub fn new(epsilon: f64, aggregator: AggregatorKind, seed: u64) -> Result<Self> {
        let policy = Self { epsilon, aggregator, seed };
        policy.validate()?;
        Ok(policy)
    }

    /// Pure greedy selection, the setting used for the published runs.
    pub fn greedy(aggregator: AggregatorKind, seed: u64) -> Self {
        Self { epsilon: 0.0, aggregator, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.epsilon) {
            Ok(())
        } else {
            Err(Error::config(format!("epsilon {} outside [0, 1]", self.epsilon)))
        }
    }
}

/// One arm and every EXAM score it has been charged so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub arm: ArmId,
    pub history: Vec<ExamScore>,
}

impl ArmState {
    /// Aggregated history, or `None` before the first observation.
    pub fn expected(&self, kind: AggregatorKind) -> Option<ExamScore> {
        aggregate(&self.history, kind).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBanditState")]
pub struct BanditState {
    arms: Vec<ArmState>,
    rounds_completed: usize,
}

#[derive(Deserialize)]
struct RawBanditState {
    arms: Vec<ArmState>,
    rounds_completed: usize,
}

impl TryFrom<RawBanditState> for BanditState {
    type Error = Error;

    fn try_from(raw: RawBanditState) -> Result<Self> {
        let ids: Vec<ArmId> = raw.arms.iter().map(|a| a.arm.clone()).collect();
        check_arm_set(&ids)?;
        if let Some(bad) = raw.arms.iter().find(|a| a.history.len() != raw.rounds_completed) {
            return Err(Error::config(format!(
                "arm {} has {} observations but {} rounds are completed",
                bad.arm,
                bad.history.len(),
                raw.rounds_completed
            )));
        }
        Ok(Self { arms: raw.arms, rounds_completed: raw.rounds_completed })
    }
}

fn check_arm_set(arms: &[ArmId]) -> Result<()> {
    if arms.len() < 2 {
        return Err(Error::config(format!("need at least 2 arms, got {}", arms.len())));
    }
    ensure_unique(arms)
}

impl BanditState {
    /// Fresh state with empty histories.
    pub fn new(arms: Vec<ArmId>) -> Result<Self> {
        check_arm_set(&arms)?;
        Ok(Self {
            arms: arms.into_iter().map(|arm| ArmState { arm, history: Vec::new() }).collect(),
            rounds_completed: 0,
        })
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn arm_ids(&self) -> impl Iterator<Item = &ArmId> {
        self.arms.iter().map(|a| &a.arm)
    }

    pub fn rounds_completed(&self) -> usize {
        self.rounds_completed
    }

    pub fn arm(&self, id: &ArmId) -> Option<&ArmState> {
        self.arms.iter().find(|a| &a.arm == id)
    }

    /// ε-greedy choice of the next arm.
    ///
    /// The first round is always uniform. Afterwards a uniform arm is drawn
    /// with probability ε, otherwise the arm with the minimal aggregate is
    /// returned; equal minima are broken uniformly at random.
    pub fn select_arm<R: Rng + ?Sized>(&self, policy: &PolicyConfig, rng: &mut R) -> Result<ArmId> {
        let idx = self.select_index(policy, rng)?;
        Ok(self.arms[idx].arm.clone())
    }

    pub fn select_index<R: Rng + ?Sized>(&self, policy: &PolicyConfig, rng: &mut R) -> Result<usize> {
        policy.validate()?;
        let k = self.arms.len();
        if k < 2 {
            return Err(Error::config(format!("need at least 2 arms, got {k}")));
        }

        if self.rounds_completed == 0 {
            return Ok(rng.random_range(0..k));
        }
        if policy.epsilon > 0.0 && rng.random::<f64>() < policy.epsilon {
            return Ok(rng.random_range(0..k));
        }

        let costs = self
            .arms
            .iter()
            .map(|a| aggregate(&a.history, policy.aggregator).map(ExamScore::value))
            .collect::<Result<Vec<f64>>>()?;
        let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let tied: Vec<usize> = (0..k).filter(|&i| costs[i] == min).collect();
        Ok(match tied.as_slice() {
            [only] => *only,
            _ => tied[rng.random_range(0..tied.len())],
        })
    }

    /// Appends one full-feedback round. `rewards` must hold exactly one
    /// score per arm; on error the state is left untouched.
    pub fn update(&mut self, rewards: &BTreeMap<ArmId, ExamScore>) -> Result<()> {
        if let Some(missing) = self.arms.iter().find(|a| !rewards.contains_key(&a.arm)) {
            return Err(Error::IncompleteFeedback(format!("no score for arm {}", missing.arm)));
        }
        if let Some(extra) = rewards.keys().find(|id| self.arm(id).is_none()) {
            return Err(Error::IncompleteFeedback(format!("score for unknown arm {extra}")));
        }
        for arm in &mut self.arms {
            arm.history.push(rewards[&arm.arm]);
        }
        self.rounds_completed += 1;
        Ok(())
    }

    /// Appends one round given as scores in arm order.
    pub(crate) fn push_round(&mut self, scores: &[ExamScore]) -> Result<()> {
        if scores.len() != self.arms.len() {
            return Err(Error::IncompleteFeedback(format!(
                "{} scores for {} arms",
                scores.len(),
                self.arms.len()
            )));
        }
        for (arm, &score) in self.arms.iter_mut().zip(scores) {
            arm.history.push(score);
        }
        self.rounds_completed += 1;
        Ok(())
    }

    /// Value-style variant of [`BanditState::update`].
    pub fn updated(mut self, rewards: &BTreeMap<ArmId, ExamScore>) -> Result<Self> {
        self.update(rewards)?;
        Ok(self)
    }

    /// Aggregated cost per arm; arms without observations are absent.
    pub fn expected_rewards(&self, kind: AggregatorKind) -> BTreeMap<ArmId, ExamScore> {
        self.arms
            .iter()
            .filter_map(|a| a.expected(kind).map(|e| (a.arm.clone(), e)))
            .collect()
    }
}
