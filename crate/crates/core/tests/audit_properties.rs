use faircompass_core::audit::evaluate;
use faircompass_core::tradeoff::compatibility_report;
use faircompass_core::{
    AuditConfig, ConfusionMatrix, FairnessDefinition, Family, GroupedPredictions, OutcomeLabel,
    Verdict,
};
use proptest::prelude::*;
use std::collections::BTreeSet;

use FairnessDefinition::*;

const RATE_BASED: [FairnessDefinition; 10] = [
    DemographicParity,
    ConditionalUseAccuracyEquality,
    PredictiveParity,
    Calibration,
    EqualisedOdds,
    EqualisedOpportunities,
    PredictiveEquality,
    BalancePositive,
    BalanceNegative,
    // counts rather than rates, handled separately where it matters
    EqualSelectionParity,
];

fn matrix() -> impl Strategy<Value = ConfusionMatrix> {
    (0u64..25, 0u64..25, 0u64..25, 0u64..25)
        .prop_filter("non-empty", |(a, b, c, d)| a + b + c + d > 0)
        .prop_map(|(tp, fn_, fp, tn)| ConfusionMatrix::new(tp, fn_, fp, tn))
}

fn groups() -> impl Strategy<Value = Vec<ConfusionMatrix>> {
    prop::collection::vec(matrix(), 2..5)
}

fn tolerance() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.0, 0.01, 0.05, 0.2])
}

fn build(ms: &[ConfusionMatrix]) -> GroupedPredictions {
    let named: Vec<(String, ConfusionMatrix)> = ms
        .iter()
        .enumerate()
        .map(|(i, m)| (format!("g{i}"), *m))
        .collect();
    GroupedPredictions::from_matrices(&named, OutcomeLabel::Negative).unwrap()
}

fn config(tolerance: f64) -> AuditConfig {
    AuditConfig {
        tolerance,
        min_support: 1,
        ..AuditConfig::default()
    }
}

fn outcome(g: &GroupedPredictions, d: FairnessDefinition, c: &AuditConfig) -> (Verdict, Option<u64>) {
    let r = evaluate(g, d, c).unwrap();
    (r.verdict, r.max_gap.map(f64::to_bits))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn relaxations_follow(ms in groups(), tol in tolerance()) {
        let g = build(&ms);
        let c = config(tol);
        if evaluate(&g, EqualisedOdds, &c).unwrap().is_satisfied() {
            prop_assert!(evaluate(&g, EqualisedOpportunities, &c).unwrap().is_satisfied());
            prop_assert!(evaluate(&g, PredictiveEquality, &c).unwrap().is_satisfied());
        }
        if evaluate(&g, ConditionalUseAccuracyEquality, &c).unwrap().is_satisfied() {
            prop_assert!(evaluate(&g, PredictiveParity, &c).unwrap().is_satisfied());
        }
    }

    #[test]
    fn group_labels_do_not_matter(ms in groups(), rot in 0usize..4, tol in tolerance()) {
        let mut rotated = ms.clone();
        let k = rot % ms.len();
        rotated.rotate_left(k);
        rotated.reverse();
        let (a, b) = (build(&ms), build(&rotated));
        let c = config(tol);
        for d in RATE_BASED {
            prop_assert_eq!(outcome(&a, d, &c), outcome(&b, d, &c), "{}", d);
        }
    }

    #[test]
    fn scaling_preserves_rate_verdicts(ms in groups(), k in 2u64..5, tol in tolerance()) {
        let scaled: Vec<_> = ms.iter().map(|m| m.scaled(k)).collect();
        let (a, b) = (build(&ms), build(&scaled));
        let c = config(tol);
        for d in RATE_BASED.into_iter().filter(|d| *d != EqualSelectionParity) {
            prop_assert_eq!(outcome(&a, d, &c), outcome(&b, d, &c), "{}", d);
        }
        let gap = |g| evaluate(g, EqualSelectionParity, &c).unwrap().max_gap.unwrap();
        prop_assert_eq!(gap(&b), k as f64 * gap(&a));
    }

    #[test]
    fn aligned_groups_satisfy_every_rate_definition(
        base in matrix(),
        factors in prop::collection::vec(1u64..6, 2..5),
    ) {
        prop_assume!(base.positives() > 0 && base.negatives() > 0);
        prop_assume!(base.predicted_positives() > 0 && base.predicted_negatives() > 0);
        let ms: Vec<_> = factors.iter().map(|k| base.scaled(*k)).collect();
        let g = build(&ms);
        let c = config(0.0);
        for d in RATE_BASED.into_iter().filter(|d| *d != EqualSelectionParity) {
            let r = evaluate(&g, d, &c).unwrap();
            prop_assert_eq!(r.verdict, Verdict::Satisfied, "{} gap {:?}", d, r.max_gap);
        }
    }

    #[test]
    fn conflicts_are_order_free_and_monotone(
        ms in groups(),
        picks in prop::collection::vec(prop::sample::select(FairnessDefinition::ALL.to_vec()), 1..6),
        extra in prop::sample::select(FairnessDefinition::ALL.to_vec()),
    ) {
        let g = build(&ms);
        let set: BTreeSet<_> = picks.iter().copied().collect();
        let report = compatibility_report(&g, &set, 0.01, 0.5).unwrap();
        for c in &report.conflicts {
            prop_assert!(report.has_conflict(c.second, c.first));
        }
        let mut bigger = set.clone();
        bigger.insert(extra);
        let grown = compatibility_report(&g, &bigger, 0.01, 0.5).unwrap();
        for c in &report.conflicts {
            prop_assert!(grown.has_conflict(c.first, c.second));
            prop_assert!(grown.conflicts.contains(c));
        }
    }

    #[test]
    fn error_free_classifiers_never_conflict_on_error_rates(
        counts in prop::collection::vec((0u64..30, 0u64..30), 2..5),
    ) {
        prop_assume!(counts.iter().all(|(p, n)| p + n > 0));
        let ms: Vec<_> = counts.iter().map(|(p, n)| ConfusionMatrix::new(*p, 0, 0, *n)).collect();
        let g = build(&ms);
        let targets: BTreeSet<_> = FairnessDefinition::ALL
            .into_iter()
            .filter(|d| d.family() != Family::Independence)
            .collect();
        let report = compatibility_report(&g, &targets, 0.01, 0.5).unwrap();
        prop_assert!(report.perfect_classifier);
        prop_assert!(report.conflicts.is_empty());
    }
}
