use proptest::prelude::*;

use ratio_sparse::datagen::MatrixSpec;
use ratio_sparse::harness::{
    aggregate, heatmap, read_trial_csv, run_experiment, write_trial_csv, ExperimentPlan, Outcome,
    TrialRecord,
};

fn plan_json(extra: &str) -> String {
    format!(
        r#"{{
            "name": "it",
            "matrix": {{"kind": "correlated_gaussian", "m": 10, "n": 30, "r": 0.3}},
            "signal": {{"mag_low": 1, "mag_high": 1000}},
            "sparsity_grid": [1, 3],
            "trials_per_cell": 3,
            "base_seed": 12
            {extra}
        }}"#
    )
}

#[test]
fn plan_schema_is_strict() {
    let ok = plan_json(r#", "param_grid": [{"p": 0.5, "q": 1.5}]"#);
    assert!(ExperimentPlan::from_json(&ok).is_ok());
    let both = plan_json(r#", "param_grid": [{"p": 0.5, "q": 1.5}], "p_grid": [1], "q_grid": [2]"#);
    assert!(ExperimentPlan::from_json(&both).is_err());
    let unknown = plan_json(r#", "p_grid": [1], "q_grid": [2], "trails": 4"#);
    assert!(ExperimentPlan::from_json(&unknown).is_err());
    let none = plan_json("");
    assert!(ExperimentPlan::from_json(&none).is_err());
    let bad_solver = plan_json(r#", "p_grid": [1], "q_grid": [2], "solver": "cvx""#);
    assert!(ExperimentPlan::from_json(&bad_solver).is_err());
}

#[test]
fn experiment_records_are_ordered_and_round_trip() {
    let plan =
        ExperimentPlan::from_json(&plan_json(r#", "p_grid": [0.5, 1], "q_grid": [2]"#)).unwrap();
    let result = run_experiment(&plan, 2).unwrap();
    assert_eq!(result.records.len(), 2 * 2 * 3);
    assert_eq!(result.cells.len(), 2 * 2);
    assert_eq!(result.heatmap.len(), 2);
    // the same instances are shared across (p, q)
    let seeds = |p: f64| -> Vec<u64> {
        result
            .records
            .iter()
            .filter(|r| r.p == p)
            .map(|r| r.seed)
            .collect()
    };
    assert_eq!(seeds(0.5), seeds(1.0));

    let mut buf = Vec::new();
    write_trial_csv(&result.records, &mut buf).unwrap();
    let back = read_trial_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), result.records.len());
    for (a, b) in back.iter().zip(&result.records) {
        assert_eq!(
            (a.p, a.q, a.k, a.trial, a.seed, a.outcome),
            (b.p, b.q, b.k, b.trial, b.seed, b.outcome)
        );
        assert_eq!(a.rel_error.to_bits(), b.rel_error.to_bits());
        assert_eq!(a.snr_db.to_bits(), b.snr_db.to_bits());
    }
}

#[test]
fn easy_cells_succeed() {
    let mut plan =
        ExperimentPlan::from_json(&plan_json(r#", "param_grid": [{"p": 0.5, "q": 2}]"#)).unwrap();
    plan.matrix = MatrixSpec::gaussian(20, 40, 0.0, 0);
    plan.sparsity_grid = vec![1];
    let result = run_experiment(&plan, 1).unwrap();
    assert_eq!(result.cells[0].success_rate, 1.0);
}

fn outcome_strategy() -> impl Strategy<Value = Outcome> {
    prop_oneof![
        Just(Outcome::Success),
        Just(Outcome::ModelFailure),
        Just(Outcome::AlgorithmFailure)
    ]
}

proptest! {
    #[test]
    fn rates_partition_unity(
        outcomes in prop::collection::vec(outcome_strategy(), 1..40),
        ks in prop::collection::vec(1usize..5, 1..4),
    ) {
        let mut ks = ks;
        ks.sort_unstable();
        ks.dedup();
        let mut records = Vec::new();
        for &(p, q) in &[(0.5, 1.5), (1.0, 2.0)] {
            for &k in &ks {
                for (trial, &outcome) in outcomes.iter().enumerate() {
                    records.push(TrialRecord {
                        p, q, k, trial, seed: trial as u64, outcome,
                        rel_error: 0.1, snr_db: 20.0, alpha_final: 1.0,
                        outer_iters: 1, wall_ms: 0.0, diagnostic: None,
                    });
                }
            }
        }
        let cells = aggregate(&records);
        prop_assert_eq!(cells.len(), 2 * ks.len());
        for c in &cells {
            let sum = c.success_rate + c.model_failure_rate + c.algorithm_failure_rate;
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
        for h in heatmap(&cells) {
            let sum = h.success_rate + h.model_failure_rate + h.algorithm_failure_rate;
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
    }
}
