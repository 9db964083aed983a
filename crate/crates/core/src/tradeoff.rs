//! Detection of fairness definitions that cannot hold together on the data.
//!
//! Calibration and equalised odds can only both hold when the groups have
//! identical base rates or the classifier makes no mistakes. This module
//! applies that rule to the sufficiency and separation families as a whole,
//! and flags independence-family targets against the other two families
//! whenever base rates differ. It only diagnoses; choosing which definition
//! to give up is left to the caller.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::audit::{AuditError, FairnessDefinition, Family, GroupedPredictions};
use crate::ratio::{self, Fraction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub first: FairnessDefinition,
    pub second: FairnessDefinition,
    pub explanation: String,
    /// True when the rule was extended beyond calibration vs equalised odds.
    pub heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub base_rate_gap: f64,
    pub tolerance: f64,
    pub equal_base_rates: bool,
    /// No misclassified record in any group. False when predictions are absent.
    pub perfect_classifier: bool,
    pub base_rates: BTreeMap<String, f64>,
    pub conflicts: Vec<Conflict>,
}

impl CompatibilityReport {
    pub fn has_conflict(&self, a: FairnessDefinition, b: FairnessDefinition) -> bool {
        self.conflicts
            .iter()
            .any(|c| (c.first == a && c.second == b) || (c.first == b && c.second == a))
    }
}

fn base_rate_fractions(
    grouped: &GroupedPredictions,
) -> Result<BTreeMap<String, Fraction>, AuditError> {
    grouped
        .groups()
        .iter()
        .map(|(name, recs)| {
            let mut positives = 0;
            for r in recs {
                let y = r
                    .y_true
                    .ok_or(AuditError::BaseRatesNeedGroundTruth)?;
                if y.is_positive() {
                    positives += 1;
                }
            }
            let frac = Fraction::new(positives, recs.len() as u64).expect("groups are non-empty");
            Ok((name.clone(), frac))
        })
        .collect()
}

/// Largest pairwise difference in base rate (share of actual positives).
pub fn base_rate_gap(grouped: &GroupedPredictions) -> Result<f64, AuditError> {
    let fractions: Vec<Fraction> = base_rate_fractions(grouped)?.into_values().collect();
    Ok(ratio::max_pairwise_gap(&fractions))
}

/// Flags every pair of `targets` that cannot be jointly satisfied on this data.
pub fn compatibility_report(
    grouped: &GroupedPredictions,
    targets: &BTreeSet<FairnessDefinition>,
    tolerance: f64,
    threshold: f64,
) -> Result<CompatibilityReport, AuditError> {
    if targets.is_empty() {
        return Err(AuditError::InvalidConfig(
            "compatibility check needs at least one target definition".into(),
        ));
    }
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(AuditError::InvalidConfig(format!(
            "tolerance must be a non-negative number, got {tolerance}"
        )));
    }
    let fractions = base_rate_fractions(grouped)?;
    let gap = ratio::max_pairwise_gap(&fractions.values().copied().collect::<Vec<_>>());
    let equal_base_rates = gap <= tolerance;

    let has_predictions = grouped
        .groups()
        .values()
        .flatten()
        .all(|r| r.predicted(threshold).is_some());
    let mut misclassifying = Vec::new();
    if has_predictions {
        let matrices = grouped.matrices(threshold, FairnessDefinition::EqualisedOdds)?;
        for (name, m) in &matrices {
            if m.errors() > 0 {
                misclassifying.push(format!(
                    "{name} MR {:.4}",
                    m.errors() as f64 / m.total() as f64
                ));
            }
        }
    }
    let perfect_classifier = has_predictions && misclassifying.is_empty();

    let rates_text = fractions
        .iter()
        .map(|(g, f)| format!("{g} {:.4}", f.value()))
        .collect::<Vec<_>>()
        .join(", ");

    let targets: Vec<FairnessDefinition> = targets.iter().copied().collect();
    let mut conflicts = Vec::new();
    for (i, &a) in targets.iter().enumerate() {
        for &b in &targets[i + 1..] {
            let families = (a.family(), b.family());
            use Family::*;
            match families {
                (Sufficiency, Separation) | (Separation, Sufficiency) => {
                    if equal_base_rates || perfect_classifier {
                        continue;
                    }
                    let exact = is_pair(a, b, FairnessDefinition::Calibration, FairnessDefinition::EqualisedOdds);
                    let prefix = if exact { "" } else { "heuristic: " };
                    let errors = if has_predictions {
                        format!("the classifier misclassifies ({})", misclassifying.join(", "))
                    } else {
                        "perfect classification cannot be confirmed without predictions".to_string()
                    };
                    conflicts.push(Conflict {
                        first: a,
                        second: b,
                        explanation: format!(
                            "{prefix}{a} ({}) and {b} ({}) cannot both hold: base-rate gap {gap:.4} exceeds tolerance {tolerance:.4} (base rates {rates_text}) and {errors}",
                            a.family(),
                            b.family()
                        ),
                        heuristic: !exact,
                    });
                }
                (Independence, Sufficiency | Separation) | (Sufficiency | Separation, Independence) => {
                    if equal_base_rates {
                        continue;
                    }
                    conflicts.push(Conflict {
                        first: a,
                        second: b,
                        explanation: format!(
                            "heuristic: {a} ({}) and {b} ({}) conflict: independence forces equal prediction rates while base rates differ by {gap:.4} (base rates {rates_text}, tolerance {tolerance:.4})",
                            a.family(),
                            b.family()
                        ),
                        heuristic: true,
                    });
                }
                _ => {}
            }
        }
    }

    Ok(CompatibilityReport {
        base_rate_gap: gap,
        tolerance,
        equal_base_rates,
        perfect_classifier,
        base_rates: fractions
            .into_iter()
            .map(|(g, f)| (g, f.value()))
            .collect(),
        conflicts,
    })
}

fn is_pair(
    a: FairnessDefinition,
    b: FairnessDefinition,
    x: FairnessDefinition,
    y: FairnessDefinition,
) -> bool {
    (a == x && b == y) || (a == y && b == x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ConfusionMatrix, OutcomeLabel};
    use FairnessDefinition::*;

    fn grouped(a: ConfusionMatrix, b: ConfusionMatrix) -> GroupedPredictions {
        GroupedPredictions::from_matrices(&[("a", a), ("b", b)], OutcomeLabel::Negative).unwrap()
    }

    fn targets(defs: &[FairnessDefinition]) -> BTreeSet<FairnessDefinition> {
        defs.iter().copied().collect()
    }

    #[test]
    fn sample_subgroups_share_base_rate() {
        let g = grouped(
            ConfusionMatrix::new(7, 7, 6, 22),
            ConfusionMatrix::new(2, 5, 6, 8),
        );
        assert_eq!(base_rate_gap(&g).unwrap(), 0.0);
    }

    #[test]
    fn constructed_base_rate_gap() {
        // BR 5/10 and 2/10
        let g = grouped(
            ConfusionMatrix::new(3, 2, 1, 4),
            ConfusionMatrix::new(1, 1, 2, 6),
        );
        assert!((base_rate_gap(&g).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn all_positive_groups() {
        let g = grouped(ConfusionMatrix::new(3, 1, 0, 0), ConfusionMatrix::new(1, 0, 0, 0));
        assert_eq!(base_rate_gap(&g).unwrap(), 0.0);
    }

    #[test]
    fn calibration_vs_equalised_odds_with_different_base_rates() {
        let g = grouped(
            ConfusionMatrix::new(3, 2, 1, 4),
            ConfusionMatrix::new(1, 1, 2, 6),
        );
        let r = compatibility_report(&g, &targets(&[Calibration, EqualisedOdds]), 0.01, 0.5)
            .unwrap();
        assert_eq!(r.conflicts.len(), 1);
        assert!(!r.conflicts[0].heuristic);
        assert!(r.conflicts[0].explanation.contains("0.3000"));
        assert!(r.has_conflict(EqualisedOdds, Calibration));
    }

    #[test]
    fn no_conflict_with_equal_base_rates() {
        let g = grouped(
            ConfusionMatrix::new(7, 7, 6, 22),
            ConfusionMatrix::new(2, 5, 6, 8),
        );
        let r = compatibility_report(&g, &targets(&[Calibration, EqualisedOdds]), 0.01, 0.5)
            .unwrap();
        assert!(r.equal_base_rates);
        assert!(r.conflicts.is_empty());
    }

    #[test]
    fn no_conflict_for_perfect_classifier() {
        let g = grouped(ConfusionMatrix::new(5, 0, 0, 5), ConfusionMatrix::new(2, 0, 0, 8));
        let r = compatibility_report(
            &g,
            &targets(&[Calibration, EqualisedOdds, PredictiveParity, BalancePositive]),
            0.01,
            0.5,
        )
        .unwrap();
        assert!(r.perfect_classifier);
        assert!(!r.equal_base_rates);
        assert!(r.conflicts.is_empty());
    }

    #[test]
    fn single_target_has_no_conflicts() {
        let g = grouped(
            ConfusionMatrix::new(3, 2, 1, 4),
            ConfusionMatrix::new(1, 1, 2, 6),
        );
        let r = compatibility_report(&g, &targets(&[DemographicParity]), 0.01, 0.5).unwrap();
        assert!(r.conflicts.is_empty());
        assert!(compatibility_report(&g, &BTreeSet::new(), 0.01, 0.5).is_err());
    }

    #[test]
    fn independence_conflicts_are_heuristic() {
        let g = grouped(
            ConfusionMatrix::new(3, 2, 1, 4),
            ConfusionMatrix::new(1, 1, 2, 6),
        );
        let r = compatibility_report(
            &g,
            &targets(&[DemographicParity, EqualisedOdds, PredictiveParity]),
            0.01,
            0.5,
        )
        .unwrap();
        assert_eq!(r.conflicts.len(), 3);
        assert!(r.conflicts.iter().all(|c| c.heuristic));
        assert!(r.has_conflict(DemographicParity, EqualisedOdds));
        assert!(r.has_conflict(DemographicParity, PredictiveParity));
        assert!(r.has_conflict(PredictiveParity, EqualisedOdds));
    }

    #[test]
    fn same_family_never_conflicts() {
        let g = grouped(
            ConfusionMatrix::new(3, 2, 1, 4),
            ConfusionMatrix::new(1, 1, 2, 6),
        );
        let r = compatibility_report(
            &g,
            &targets(&[EqualisedOdds, PredictiveEquality, EqualisedOpportunities]),
            0.01,
            0.5,
        )
        .unwrap();
        assert!(r.conflicts.is_empty());
    }
}
