//! Dynamic selection of fault-localization techniques with an ε-greedy
//! bandit.
//!
//! Each technique (an [`ArmId`]) is charged its EXAM score on every debugged
//! module. The bandit recommends the technique with the smallest average or
//! median EXAM so far. [`report::run_experiment`] replays the procedure over
//! a recorded score matrix and compares it with fixed techniques and a
//! random baseline.

pub mod arm;
pub mod bandit;
pub mod dataset;
pub mod error;
pub mod exam;
pub mod replay;
pub mod report;
pub mod seed;

pub use arm::{ArmId, Method};
pub use bandit::{aggregate, AggregatorKind, ArmState, BanditState, PolicyConfig};
pub use dataset::{
    generate_synthetic, load_dataset, load_path, shuffle_modules, Dataset, MissingPolicy, Ordering, SynthArm,
    SynthConfig,
};
pub use error::{Error, Result};
pub use exam::{exam_score, rank_of_fault, ExamScore, FaultRank, TieStrategy};
pub use replay::{
    run_fixed_arm, run_policy_replay, run_policy_replay_with_first_pick, run_random_baseline, summarize,
    ApproachSummary, Round, RunTrace,
};
pub use report::{rank_scores, relative_error, run_experiment, Approach, ExperimentConfig, Report, ReportRow};
