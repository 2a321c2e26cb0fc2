//! Session documents and the reports a developer submits after each module.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use flbandit_core::seed::{derive_seed, rng};
use flbandit_core::{
    aggregate, exam_score, rank_of_fault, AggregatorKind, ArmId, BanditState, ExamScore, FaultRank, PolicyConfig,
    TieStrategy,
};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SessionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Closed,
}

/// One completed round: the module debugged, the arm that was recommended
/// for it and the EXAM score every arm achieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLogEntry {
    pub module: String,
    pub recommended: ArmId,
    pub rewards: BTreeMap<ArmId, ExamScore>,
    pub timestamp: DateTime<Utc>,
}

/// The persisted document of a debugging session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub policy: PolicyConfig,
    pub bandit: BanditState,
    pub round_log: Vec<RoundLogEntry>,
    pub status: SessionStatus,
}

/// The arm to use on the next module, with the expected costs behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub arm: ArmId,
    /// 1-based number of the round this recommendation is for.
    pub round: usize,
    pub aggregator: AggregatorKind,
    pub expected_rewards: BTreeMap<ArmId, ExamScore>,
}

/// Where the fault was found relative to one arm's suggestions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArmLocation {
    /// Rank of the faulty line in the arm's list.
    Rank(FaultRank),
    /// The arm's full suspiciousness list and the faulty line indices.
    Suspiciousness {
        suspiciousness: Vec<f64>,
        faulty_lines: Vec<usize>,
        #[serde(default)]
        tie: TieStrategy,
    },
}

impl ArmLocation {
    pub fn exam(&self) -> flbandit_core::Result<ExamScore> {
        match self {
            ArmLocation::Rank(fault) => exam_score(fault),
            ArmLocation::Suspiciousness { suspiciousness, faulty_lines, tie } => {
                exam_score(&rank_of_fault(suspiciousness, faulty_lines, *tie)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundOutcome {
    /// EXAM score per arm, given directly.
    Exam(BTreeMap<ArmId, ExamScore>),
    /// Fault location per arm, from which EXAM is computed.
    Locations(BTreeMap<ArmId, ArmLocation>),
}

/// What the developer reports after debugging one module.
///
/// ```json
/// {"module": "closure-42", "exam": {"sbfl+ochiai": 0.003, "mbfl+ochiai": 0.011}}
/// {"module": "closure-43", "locations": {"sbfl+ochiai": {"rank": 5, "total_lines": 100}, ...}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub module: String,
    #[serde(flatten)]
    pub outcome: RoundOutcome,
}

impl RoundReport {
    pub fn exam(module: impl Into<String>, rewards: BTreeMap<ArmId, ExamScore>) -> Self {
        Self { module: module.into(), outcome: RoundOutcome::Exam(rewards) }
    }

    /// Per-arm EXAM scores for this round.
    pub fn rewards(&self) -> Result<BTreeMap<ArmId, ExamScore>> {
        match &self.outcome {
            RoundOutcome::Exam(map) => Ok(map.clone()),
            RoundOutcome::Locations(map) => map
                .iter()
                .map(|(arm, loc)| {
                    loc.exam()
                        .map(|e| (arm.clone(), e))
                        .map_err(|e| SessionError::Validation(format!("arm {arm}: {e}")))
                })
                .collect(),
        }
    }
}

impl SessionState {
    pub fn new(session_id: String, arms: Vec<ArmId>, policy: PolicyConfig, now: DateTime<Utc>) -> Result<Self> {
        policy.validate()?;
        Ok(Self {
            session_id,
            created_at: now,
            policy,
            bandit: BanditState::new(arms)?,
            round_log: Vec::new(),
            status: SessionStatus::Active,
        })
    }

    pub fn is_active(&self) -> bool {
        self.status == SessionStatus::Active
    }

    fn ensure_active(&self) -> Result<()> {
        if self.is_active() {
            Ok(())
        } else {
            Err(SessionError::Closed(self.session_id.clone()))
        }
    }

    /// The selection for the upcoming round.
    ///
    /// Round `n` draws from its own stream derived from the session seed, so
    /// repeated calls before the round is reported return the same arm.
    pub fn recommend(&self) -> Result<Recommendation> {
        self.ensure_active()?;
        let round = self.bandit.rounds_completed();
        let mut rng = rng(derive_seed(self.policy.seed, round as u64));
        let arm = self.bandit.select_arm(&self.policy, &mut rng)?;
        Ok(Recommendation {
            arm,
            round: round + 1,
            aggregator: self.policy.aggregator,
            expected_rewards: self.bandit.expected_rewards(self.policy.aggregator),
        })
    }

    /// New state with `report` applied; `self` is left untouched.
    pub fn with_report(&self, report: &RoundReport, now: DateTime<Utc>) -> Result<Self> {
        self.ensure_active()?;
        if report.module.trim().is_empty() {
            return Err(SessionError::Validation("module label is empty".into()));
        }
        let rewards = report.rewards()?;
        let recommended = self.recommend()?.arm;
        let mut next = self.clone();
        next.bandit.update(&rewards)?;
        next.round_log.push(RoundLogEntry {
            module: report.module.clone(),
            recommended,
            rewards,
            timestamp: now,
        });
        Ok(next)
    }

    pub fn closed(&self) -> Self {
        Self { status: SessionStatus::Closed, ..self.clone() }
    }

    /// Average and median of every arm's history (`None` before round 1).
    pub fn aggregates(&self) -> BTreeMap<ArmId, ArmAggregates> {
        self.bandit
            .arms()
            .iter()
            .map(|a| {
                let stat = |kind| aggregate(&a.history, kind).ok().map(ExamScore::value);
                (
                    a.arm.clone(),
                    ArmAggregates { average: stat(AggregatorKind::Average), median: stat(AggregatorKind::Median) },
                )
            })
            .collect()
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.session_id.clone(),
            created_at: self.created_at,
            status: self.status,
            arms: self.bandit.arm_ids().cloned().collect(),
            aggregator: self.policy.aggregator,
            rounds_completed: self.bandit.rounds_completed(),
        }
    }

    /// Session document plus everything a client needs to render it.
    pub fn view(&self) -> SessionView {
        SessionView {
            session: self.clone(),
            expected_rewards: self.bandit.expected_rewards(self.policy.aggregator),
            aggregates: self.aggregates(),
            recommendation: self.recommend().ok().map(|r| r.arm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmAggregates {
    pub average: Option<f64>,
    pub median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub status: SessionStatus,
    pub arms: Vec<ArmId>,
    pub aggregator: AggregatorKind,
    pub rounds_completed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    #[serde(flatten)]
    pub session: SessionState,
    /// Aggregates under the session's own aggregator.
    pub expected_rewards: BTreeMap<ArmId, ExamScore>,
    pub aggregates: BTreeMap<ArmId, ArmAggregates>,
    /// Next arm to use; absent once the session is closed.
    pub recommendation: Option<ArmId>,
}
