//! Audit assembly and rendering.
//!
//! Text output is deterministic: groups and definitions appear in a fixed
//! order and every number is printed with four decimals.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::audit::{
    evaluate_all, split_by_group, AttributeSelector, AuditConfig, AuditError, FairnessDefinition,
    FairnessResult, PredictionRecord, UnknownDefinition, Verdict,
};
use crate::ingest::{parse_dataset, validate_dataset, Finding, IngestError, SchemaMapping};
use crate::metrics::{ConfusionMatrix, OutcomeLabel, Rate, RateName, RateSet};
use crate::tradeoff::{compatibility_report, CompatibilityReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub size: usize,
    /// Absent when some record lacks a true label or a prediction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<ConfusionMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub favourable_outcome: OutcomeLabel,
    pub tolerance: f64,
    pub threshold: f64,
    pub groups: Vec<GroupSummary>,
    pub results: Vec<FairnessResult>,
    /// Absent without ground truth, since base rates are then unknown.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compatibility: Option<CompatibilityReport>,
    #[serde(default)]
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Definition(#[from] UnknownDefinition),
    #[error("no fairness definitions requested")]
    NoDefinitions,
}

/// Parses a comma-separated list of definition names; `all` selects every definition.
pub fn parse_definitions(list: &str) -> Result<Vec<FairnessDefinition>, ReportError> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(FairnessDefinition::ALL);
        } else {
            out.push(item.parse()?);
        }
    }
    let mut seen = BTreeSet::new();
    out.retain(|d| seen.insert(*d));
    if out.is_empty() {
        return Err(ReportError::NoDefinitions);
    }
    Ok(out)
}

/// Groups records by sensitive attribute and evaluates every requested definition.
pub fn run_audit(
    records: Vec<PredictionRecord>,
    favourable_outcome: OutcomeLabel,
    definitions: &[FairnessDefinition],
    config: &AuditConfig,
) -> Result<AuditReport, ReportError> {
    if definitions.is_empty() {
        return Err(ReportError::NoDefinitions);
    }
    config.validate()?;
    let targets: BTreeSet<FairnessDefinition> = definitions.iter().copied().collect();
    let findings = validate_dataset(&records, &targets, config);
    let grouped = split_by_group(records, &AttributeSelector::Sensitive, favourable_outcome)?;

    let matrices = grouped
        .matrices(config.threshold, FairnessDefinition::EqualisedOdds)
        .ok();
    let groups = grouped
        .groups()
        .iter()
        .map(|(name, recs)| {
            let matrix = matrices.as_ref().map(|m| m[name]);
            GroupSummary {
                name: name.clone(),
                size: recs.len(),
                matrix,
                rates: matrix.and_then(|m| m.rates().ok()),
            }
        })
        .collect();

    let results = evaluate_all(&grouped, definitions, config)?;
    let compatibility = if grouped.has_ground_truth() {
        Some(compatibility_report(
            &grouped,
            &targets,
            config.tolerance,
            config.threshold,
        )?)
    } else {
        None
    };

    Ok(AuditReport {
        favourable_outcome,
        tolerance: config.tolerance,
        threshold: config.threshold,
        groups,
        results,
        compatibility,
        findings,
    })
}

/// Parses a delimited dataset and audits it. `favourable` overrides the mapping.
pub fn audit_source(
    source: &str,
    mapping: &SchemaMapping,
    definitions: &[FairnessDefinition],
    config: &AuditConfig,
    favourable: Option<OutcomeLabel>,
) -> Result<AuditReport, ReportError> {
    let mut config = config.clone();
    if config.explaining_variables.is_empty() {
        config.explaining_variables = mapping.legitimate.clone();
    }
    let records = parse_dataset(source, mapping)?;
    run_audit(
        records,
        favourable.unwrap_or(mapping.favourable_outcome),
        definitions,
        &config,
    )
}

impl AuditReport {
    /// True iff every requested definition is satisfied.
    pub fn passed(&self) -> bool {
        self.results.iter().all(FairnessResult::is_satisfied)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "Fairness audit");
        let _ = writeln!(w, "favourable outcome: {}", self.favourable_outcome);
        let _ = writeln!(w, "tolerance: {:.4}", self.tolerance);
        let _ = writeln!(w, "score threshold: {:.4}", self.threshold);

        let _ = writeln!(w, "\nGroups");
        for g in &self.groups {
            let _ = writeln!(w, "  {} ({} records)", g.name, g.size);
            match (&g.matrix, &g.rates) {
                (Some(m), Some(r)) => {
                    let _ = writeln!(w, "    {m}");
                    let _ = writeln!(w, "    P {}  N {}", r.p, r.n);
                    for chunk in RateName::ALL.chunks(5) {
                        let line: Vec<String> =
                            chunk.iter().map(|name| render_rate(*name, r.get(*name))).collect();
                        let _ = writeln!(w, "    {}", line.join("  "));
                    }
                }
                _ => {
                    let _ = writeln!(w, "    rates unavailable: labels or predictions missing");
                }
            }
        }

        let _ = writeln!(w, "\nResults");
        for r in &self.results {
            let gap = match r.max_gap {
                Some(g) => format!(", gap {g:.4}"),
                None => String::new(),
            };
            let _ = writeln!(
                w,
                "  {}: {}{gap} (tolerance {:.4})",
                r.definition, r.verdict, r.tolerance
            );
            for note in &r.notes {
                let _ = writeln!(w, "    note: {note}");
            }
        }
        let passed = self.results.iter().filter(|r| r.verdict == Verdict::Satisfied).count();
        let _ = writeln!(w, "  {passed} of {} satisfied", self.results.len());

        if let Some(c) = &self.compatibility {
            let _ = writeln!(w, "\nCompatibility");
            let rates: Vec<String> = c
                .base_rates
                .iter()
                .map(|(g, v)| format!("{g} {v:.4}"))
                .collect();
            let _ = writeln!(
                w,
                "  base-rate gap {:.4} ({})",
                c.base_rate_gap,
                rates.join(", ")
            );
            if c.conflicts.is_empty() {
                let _ = writeln!(w, "  no conflicts among the requested definitions");
            }
            for conflict in &c.conflicts {
                let _ = writeln!(w, "  - {}", conflict.explanation);
            }
        }

        if !self.findings.is_empty() {
            let _ = writeln!(w, "\nFindings");
            for f in &self.findings {
                let _ = writeln!(w, "  - {}", f.message);
            }
        }
        out
    }
}

fn render_rate(name: RateName, rate: Rate) -> String {
    match rate {
        Rate::Value(v) => format!("{name} {v:.4}"),
        Rate::Undefined { .. } => format!("{name} undefined"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::GroupedPredictions;

    fn sample_records() -> Vec<PredictionRecord> {
        let grouped = GroupedPredictions::from_matrices(
            &[
                ("men", ConfusionMatrix::new(7, 7, 6, 22)),
                ("women", ConfusionMatrix::new(2, 5, 6, 8)),
            ],
            OutcomeLabel::Negative,
        )
        .unwrap();
        grouped.into_groups().into_values().flatten().collect()
    }

    fn sample_report() -> AuditReport {
        run_audit(
            sample_records(),
            OutcomeLabel::Negative,
            &[FairnessDefinition::DemographicParity, FairnessDefinition::EqualisedOdds],
            &AuditConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn text_report_shows_rates() {
        let text = sample_report().render_text();
        assert!(text.contains("TNR 0.7857"), "{text}");
        assert!(text.contains("TNR 0.5714"));
        assert!(text.contains("FOR 0.2414"));
        assert!(text.contains("FOR 0.3846"));
        assert!(text.contains("DemographicParity: not satisfied, gap 0.0714"));
        assert!(text.contains("base-rate gap 0.0000"));
        assert!(!text.contains("Findings"));
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(sample_report().render_text(), sample_report().render_text());
    }

    #[test]
    fn findings_section_appears_when_needed() {
        let mut records = sample_records();
        records.push(PredictionRecord::labelled(
            "other",
            OutcomeLabel::Positive,
            OutcomeLabel::Positive,
        ));
        let report = run_audit(
            records,
            OutcomeLabel::Negative,
            &[FairnessDefinition::DemographicParity],
            &AuditConfig::default(),
        )
        .unwrap();
        let text = report.render_text();
        assert!(text.contains("Findings\n  - group \"other\" has 1 record(s)"));
    }

    #[test]
    fn json_report_round_trips_exactly() {
        let report = sample_report();
        let back: AuditReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
        assert!(!report.passed());
    }

    #[test]
    fn definition_lists() {
        assert_eq!(
            parse_definitions("DemographicParity, equalised_odds,DemographicParity").unwrap(),
            [FairnessDefinition::DemographicParity, FairnessDefinition::EqualisedOdds]
        );
        assert_eq!(parse_definitions("all").unwrap().len(), 11);
        assert!(matches!(parse_definitions(" , "), Err(ReportError::NoDefinitions)));
        assert!(matches!(parse_definitions("fairness"), Err(ReportError::Definition(_))));
    }

    #[test]
    fn undefined_rates_render_as_undefined() {
        assert_eq!(
            render_rate(RateName::Tpr, ConfusionMatrix::new(0, 0, 5, 5).rates().unwrap().tpr),
            "TPR undefined"
        );
    }
}
