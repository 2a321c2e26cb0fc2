use std::collections::BTreeMap;

use flbandit_core::{
    generate_synthetic, run_fixed_arm, run_policy_replay, shuffle_modules, summarize, AggregatorKind, ArmId,
    BanditState, ExamScore, Method, PolicyConfig, SynthArm, SynthConfig,
};
use proptest::prelude::*;

fn dataset(modules: usize, seed: u64) -> flbandit_core::Dataset {
    let arms = [("ochiai", Method::Mbfl, 0.02), ("tarantula", Method::Sbfl, 0.04), ("dstar2", Method::Sbfl, 0.05)];
    generate_synthetic(&SynthConfig {
        module_count: modules,
        arms: arms
            .iter()
            .map(|&(f, m, mean)| SynthArm { arm: ArmId::new(m, f).unwrap(), mean, spread: 0.015 })
            .collect(),
        seed,
    })
    .unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn achieved_scores_come_from_the_matrix(modules in 1usize..40, seed in any::<u64>(), eps in 0.0f64..=1.0, median in any::<bool>()) {
        let d = dataset(modules, seed);
        let kind = if median { AggregatorKind::Median } else { AggregatorKind::Average };
        let policy = PolicyConfig::new(eps, kind, seed).unwrap();
        let trace = run_policy_replay(&d, &shuffle_modules(&d, seed ^ 1), &policy).unwrap();
        prop_assert_eq!(trace.rounds.len(), modules);
        for r in &trace.rounds {
            let m = d.modules().iter().position(|x| x == &r.module).unwrap();
            let a = d.arm_index(&r.arm).unwrap();
            prop_assert_eq!(r.exam, d.score(m, a));
        }
    }

    #[test]
    fn fixed_arm_summary_ignores_order(modules in 1usize..40, seed in any::<u64>(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let d = dataset(modules, seed);
        for (a, arm) in d.arms().iter().enumerate() {
            let one = summarize(&[run_fixed_arm(&d, &shuffle_modules(&d, s1), arm).unwrap()]).unwrap();
            let two = summarize(&[run_fixed_arm(&d, &shuffle_modules(&d, s2), arm).unwrap()]).unwrap();
            let column: Vec<f64> = d.column(a).iter().map(|s| s.value()).collect();
            let col = sorted(column.clone());
            let mid = col.len() / 2;
            let med = if col.len() % 2 == 1 { col[mid] } else { (col[mid - 1] + col[mid]) / 2.0 };
            prop_assert_eq!(one.median_exam, med);
            prop_assert_eq!(two.median_exam, med);
            let mean = column.iter().sum::<f64>() / column.len() as f64;
            prop_assert!((one.average_exam - mean).abs() < 1e-12);
            prop_assert!((two.average_exam - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn full_feedback_sees_every_column(modules in 1usize..30, seed in any::<u64>()) {
        // Whatever the order, each arm's observed history is a permutation of
        // its dataset column.
        let d = dataset(modules, seed);
        let ordering = shuffle_modules(&d, seed);
        let mut state = BanditState::new(d.arms().to_vec()).unwrap();
        for &m in ordering.indices() {
            state.update(&d.rewards(m)).unwrap();
        }
        for (a, arm) in state.arms().iter().enumerate() {
            let seen = sorted(arm.history.iter().map(|s| s.value()).collect());
            let column = sorted(d.column(a).iter().map(|s| s.value()).collect());
            prop_assert_eq!(seen, column);
        }
    }
}

#[test]
fn update_leaves_state_alone_on_bad_feedback() {
    let d = dataset(3, 0);
    let mut state = BanditState::new(d.arms().to_vec()).unwrap();
    state.update(&d.rewards(0)).unwrap();
    let before = state.clone();
    let mut partial: BTreeMap<ArmId, ExamScore> = d.rewards(1);
    partial.pop_first();
    assert!(state.update(&partial).is_err());
    assert_eq!(state, before);
}
