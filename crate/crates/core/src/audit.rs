//! Group splitting and group-fairness definitions.
//!
//! Each definition compares one or more per-group statistics. Equality is
//! judged as "largest pairwise absolute gap ≤ tolerance", so any number of
//! groups (≥ 2) can be compared. Rate gaps are computed exactly from counts
//! (see `ratio`), so identical fractions give a gap of exactly zero.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::{
    check_threshold, ConfusionMatrix, MetricsError, OutcomeLabel, Rate, RateName, Score,
};
use crate::ratio::{self, Fraction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("nothing to compare: found {found} group(s), need at least 2")]
    NothingToCompare { found: usize },

    #[error("group {0:?} has no records")]
    EmptyGroup(String),

    #[error("ground truth required for {0}")]
    GroundTruthRequired(FairnessDefinition),

    #[error("ground truth required to compute base rates")]
    BaseRatesNeedGroundTruth,

    #[error("prediction required for {0}: record has neither a predicted label nor a score")]
    PredictionRequired(FairnessDefinition),

    #[error("score output required for {0}")]
    ScoreRequired(FairnessDefinition),

    #[error("record {index} has no value for attribute {attribute:?}")]
    MissingAttribute { attribute: String, index: usize },

    #[error("conditional statistical parity needs at least one explaining variable")]
    NoExplainingVariables,

    #[error("invalid audit configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// One scored or labelled instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_true: Option<OutcomeLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_pred: Option<OutcomeLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<Score>,
    pub sensitive: String,
    /// Named categorical attributes that may legitimately explain outcome gaps.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub legitimate: BTreeMap<String, String>,
}

impl PredictionRecord {
    pub fn labelled(
        sensitive: impl Into<String>,
        y_true: OutcomeLabel,
        y_pred: OutcomeLabel,
    ) -> Self {
        Self {
            y_true: Some(y_true),
            y_pred: Some(y_pred),
            score: None,
            sensitive: sensitive.into(),
            legitimate: BTreeMap::new(),
        }
    }

    pub fn with_score(mut self, score: Score) -> Self {
        self.score = Some(score);
        self
    }

    pub fn with_attribute(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.legitimate.insert(name.into(), value.into());
        self
    }

    /// The predicted label, falling back to the thresholded score.
    pub fn predicted(&self, threshold: f64) -> Option<OutcomeLabel> {
        self.y_pred
            .or_else(|| self.score.map(|s| OutcomeLabel::from_bit(s.value() >= threshold)))
    }
}

/// Which attribute defines the groups.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AttributeSelector {
    #[default]
    Sensitive,
    Legitimate(String),
}

impl AttributeSelector {
    fn select<'a>(&self, record: &'a PredictionRecord) -> Option<&'a str> {
        match self {
            Self::Sensitive => Some(record.sensitive.as_str()).filter(|s| !s.is_empty()),
            Self::Legitimate(name) => record.legitimate.get(name).map(String::as_str),
        }
    }
}

/// Records partitioned by sensitive-attribute value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedPredictions {
    groups: BTreeMap<String, Vec<PredictionRecord>>,
    favourable_outcome: OutcomeLabel,
}

impl GroupedPredictions {
    pub fn new(
        groups: BTreeMap<String, Vec<PredictionRecord>>,
        favourable_outcome: OutcomeLabel,
    ) -> Result<Self, AuditError> {
        if groups.len() < 2 {
            return Err(AuditError::NothingToCompare {
                found: groups.len(),
            });
        }
        if let Some((name, _)) = groups.iter().find(|(_, recs)| recs.is_empty()) {
            return Err(AuditError::EmptyGroup(name.clone()));
        }
        Ok(Self {
            groups,
            favourable_outcome,
        })
    }

    /// Builds labelled records reproducing the given per-group matrices.
    ///
    /// Each record also carries a degenerate score equal to its predicted
    /// label (0.0 or 1.0).
    pub fn from_matrices<S: AsRef<str>>(
        matrices: &[(S, ConfusionMatrix)],
        favourable_outcome: OutcomeLabel,
    ) -> Result<Self, AuditError> {
        use OutcomeLabel::{Negative, Positive};
        let mut groups: BTreeMap<String, Vec<PredictionRecord>> = BTreeMap::new();
        for (name, m) in matrices {
            let name = name.as_ref();
            let recs = groups.entry(name.to_string()).or_default();
            for (t, p, n) in [
                (Positive, Positive, m.tp),
                (Positive, Negative, m.fn_),
                (Negative, Positive, m.fp),
                (Negative, Negative, m.tn),
            ] {
                let score = Score::new(p.as_u8() as f64)?;
                for _ in 0..n {
                    recs.push(PredictionRecord::labelled(name, t, p).with_score(score));
                }
            }
        }
        Self::new(groups, favourable_outcome)
    }

    pub fn groups(&self) -> &BTreeMap<String, Vec<PredictionRecord>> {
        &self.groups
    }

    pub fn favourable_outcome(&self) -> OutcomeLabel {
        self.favourable_outcome
    }

    pub fn len(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_groups(self) -> BTreeMap<String, Vec<PredictionRecord>> {
        self.groups
    }

    pub fn has_ground_truth(&self) -> bool {
        self.records().all(|r| r.y_true.is_some())
    }

    fn records(&self) -> impl Iterator<Item = &PredictionRecord> {
        self.groups.values().flatten()
    }

    /// Per-group confusion matrices. Every record needs a true label and a
    /// prediction (label or thresholded score).
    pub fn matrices(
        &self,
        threshold: f64,
        definition: FairnessDefinition,
    ) -> Result<BTreeMap<String, ConfusionMatrix>, AuditError> {
        check_threshold(threshold)?;
        self.groups
            .iter()
            .map(|(name, recs)| {
                let mut m = ConfusionMatrix::default();
                for r in recs {
                    let t = r
                        .y_true
                        .ok_or(AuditError::GroundTruthRequired(definition))?;
                    let p = r
                        .predicted(threshold)
                        .ok_or(AuditError::PredictionRequired(definition))?;
                    m.record(t, p);
                }
                Ok((name.clone(), m))
            })
            .collect()
    }
}

/// Splits records into groups by the selected attribute.
pub fn split_by_group(
    records: Vec<PredictionRecord>,
    selector: &AttributeSelector,
    favourable_outcome: OutcomeLabel,
) -> Result<GroupedPredictions, AuditError> {
    let mut groups: BTreeMap<String, Vec<PredictionRecord>> = BTreeMap::new();
    for (index, record) in records.into_iter().enumerate() {
        let key = selector
            .select(&record)
            .ok_or_else(|| AuditError::MissingAttribute {
                attribute: match selector {
                    AttributeSelector::Sensitive => "sensitive".to_string(),
                    AttributeSelector::Legitimate(name) => name.clone(),
                },
                index,
            })?
            .to_string();
        groups.entry(key).or_default().push(record);
    }
    GroupedPredictions::new(groups, favourable_outcome)
}

/// Statistical criterion a definition belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Independence,
    Sufficiency,
    Separation,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FairnessDefinition {
    DemographicParity,
    ConditionalStatisticalParity,
    EqualSelectionParity,
    ConditionalUseAccuracyEquality,
    PredictiveParity,
    Calibration,
    EqualisedOdds,
    EqualisedOpportunities,
    PredictiveEquality,
    BalancePositive,
    BalanceNegative,
}

impl FairnessDefinition {
    pub const ALL: [FairnessDefinition; 11] = [
        Self::DemographicParity,
        Self::ConditionalStatisticalParity,
        Self::EqualSelectionParity,
        Self::ConditionalUseAccuracyEquality,
        Self::PredictiveParity,
        Self::Calibration,
        Self::EqualisedOdds,
        Self::EqualisedOpportunities,
        Self::PredictiveEquality,
        Self::BalancePositive,
        Self::BalanceNegative,
    ];

    pub fn family(self) -> Family {
        use FairnessDefinition::*;
        match self {
            DemographicParity | ConditionalStatisticalParity | EqualSelectionParity => {
                Family::Independence
            }
            ConditionalUseAccuracyEquality | PredictiveParity | Calibration => Family::Sufficiency,
            EqualisedOdds | EqualisedOpportunities | PredictiveEquality | BalancePositive
            | BalanceNegative => Family::Separation,
        }
    }

    pub fn name(self) -> &'static str {
        use FairnessDefinition::*;
        match self {
            DemographicParity => "DemographicParity",
            ConditionalStatisticalParity => "ConditionalStatisticalParity",
            EqualSelectionParity => "EqualSelectionParity",
            ConditionalUseAccuracyEquality => "ConditionalUseAccuracyEquality",
            PredictiveParity => "PredictiveParity",
            Calibration => "Calibration",
            EqualisedOdds => "EqualisedOdds",
            EqualisedOpportunities => "EqualisedOpportunities",
            PredictiveEquality => "PredictiveEquality",
            BalancePositive => "BalancePositive",
            BalanceNegative => "BalanceNegative",
        }
    }

    /// Whether the definition conditions on the true outcome.
    pub fn needs_ground_truth(self) -> bool {
        self.family() != Family::Independence
    }

    /// Whether the definition is computed on scores rather than labels.
    pub fn needs_scores(self) -> bool {
        matches!(
            self,
            Self::Calibration | Self::BalancePositive | Self::BalanceNegative
        )
    }
}

impl fmt::Display for FairnessDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown fairness definition {0:?}")]
pub struct UnknownDefinition(pub String);

impl FromStr for FairnessDefinition {
    type Err = UnknownDefinition;

    /// Accepts the canonical names in any case, with or without `_`/`-`
    /// separators, and the "equalized" spelling.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase()
            .replace("equalized", "equalised");
        Self::ALL
            .into_iter()
            .find(|d| d.name().to_ascii_lowercase() == key)
            .ok_or_else(|| UnknownDefinition(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    NotEvaluable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Satisfied => "satisfied",
            Self::Violated => "not satisfied",
            Self::NotEvaluable => "not evaluable",
        })
    }
}

/// Counts and rates a definition looked at for one group.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub counts: BTreeMap<String, u64>,
    pub rates: BTreeMap<String, Rate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessResult {
    pub definition: FairnessDefinition,
    pub verdict: Verdict,
    /// `None` when the definition could not be evaluated.
    pub max_gap: Option<f64>,
    pub tolerance: f64,
    pub per_group_stats: BTreeMap<String, GroupStats>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl FairnessResult {
    fn judged(
        definition: FairnessDefinition,
        gap: Option<f64>,
        tolerance: f64,
        per_group_stats: BTreeMap<String, GroupStats>,
        notes: Vec<String>,
    ) -> Self {
        let verdict = match gap {
            None => Verdict::NotEvaluable,
            Some(g) if g <= tolerance => Verdict::Satisfied,
            Some(_) => Verdict::Violated,
        };
        Self {
            definition,
            verdict,
            max_gap: gap,
            tolerance,
            per_group_stats,
            notes,
        }
    }

    pub fn is_satisfied(&self) -> bool {
        self.verdict == Verdict::Satisfied
    }
}

/// Knobs shared by every definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    /// Largest admissible gap between rates or mean scores.
    pub tolerance: f64,
    /// Largest admissible difference in absolute counts (equal selection parity).
    pub count_tolerance: u64,
    /// Score threshold used when a record has a score but no predicted label.
    pub threshold: f64,
    /// Number of equal-width score bins for calibration.
    pub bins: usize,
    /// Minimum records per group for a stratum or bin to be judged.
    pub min_support: usize,
    /// Legitimate attributes that define strata for conditional statistical parity.
    pub explaining_variables: Vec<String>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            tolerance: 0.01,
            count_tolerance: 0,
            threshold: 0.5,
            bins: 10,
            min_support: 5,
            explaining_variables: Vec::new(),
        }
    }
}

impl AuditConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AuditError> {
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(AuditError::InvalidConfig(format!(
                "tolerance must be a non-negative number, got {}",
                self.tolerance
            )));
        }
        if self.bins < 2 {
            return Err(AuditError::InvalidConfig(format!(
                "calibration needs at least 2 bins, got {}",
                self.bins
            )));
        }
        check_threshold(self.threshold)?;
        Ok(())
    }
}

/// Tests one definition on grouped predictions.
pub fn evaluate(
    grouped: &GroupedPredictions,
    definition: FairnessDefinition,
    config: &AuditConfig,
) -> Result<FairnessResult, AuditError> {
    use FairnessDefinition::*;
    config.validate()?;
    match definition {
        DemographicParity => demographic_parity(grouped, config),
        EqualSelectionParity => equal_selection_parity(grouped, config),
        ConditionalStatisticalParity => conditional_statistical_parity(grouped, config),
        ConditionalUseAccuracyEquality => {
            rate_gap(grouped, definition, &[RateName::Ppv, RateName::Npv], config)
        }
        PredictiveParity => rate_gap(grouped, definition, &[RateName::Ppv], config),
        EqualisedOdds => rate_gap(grouped, definition, &[RateName::Tpr, RateName::Tnr], config),
        EqualisedOpportunities => rate_gap(grouped, definition, &[RateName::Fnr], config),
        PredictiveEquality => rate_gap(grouped, definition, &[RateName::Fpr], config),
        Calibration => {
            calibration_gaps(grouped, config.bins, config.min_support, config.tolerance)
        }
        BalancePositive => balance_gap(grouped, OutcomeLabel::Positive, config.tolerance),
        BalanceNegative => balance_gap(grouped, OutcomeLabel::Negative, config.tolerance),
    }
}

pub fn evaluate_all(
    grouped: &GroupedPredictions,
    definitions: &[FairnessDefinition],
    config: &AuditConfig,
) -> Result<Vec<FairnessResult>, AuditError> {
    definitions
        .iter()
        .map(|d| evaluate(grouped, *d, config))
        .collect()
}

fn favourable_rate_name(favourable: OutcomeLabel) -> RateName {
    match favourable {
        OutcomeLabel::Positive => RateName::Pr,
        OutcomeLabel::Negative => RateName::Nr,
    }
}

/// (favourable predictions, group size) per group.
fn favourable_counts<'a>(
    records: impl Iterator<Item = &'a PredictionRecord>,
    favourable: OutcomeLabel,
    threshold: f64,
    definition: FairnessDefinition,
) -> Result<(u64, u64), AuditError> {
    let mut hits = 0;
    let mut size = 0;
    for r in records {
        let p = r
            .predicted(threshold)
            .ok_or(AuditError::PredictionRequired(definition))?;
        size += 1;
        if p == favourable {
            hits += 1;
        }
    }
    Ok((hits, size))
}

fn demographic_parity(
    grouped: &GroupedPredictions,
    config: &AuditConfig,
) -> Result<FairnessResult, AuditError> {
    let definition = FairnessDefinition::DemographicParity;
    let fav = grouped.favourable_outcome();
    let rate_name = favourable_rate_name(fav);
    let mut stats = BTreeMap::new();
    let mut fractions = Vec::new();
    for (name, recs) in grouped.groups() {
        let (hits, size) = favourable_counts(recs.iter(), fav, config.threshold, definition)?;
        let frac = Fraction::new(hits, size).expect("groups are non-empty");
        fractions.push(frac);
        let mut gs = GroupStats::default();
        gs.counts.insert("size".into(), size);
        gs.counts.insert("favourable".into(), hits);
        gs.rates
            .insert(rate_name.to_string(), Rate::Value(frac.value()));
        stats.insert(name.clone(), gs);
    }
    let gap = ratio::max_pairwise_gap(&fractions);
    let notes = vec![format!(
        "favourable outcome {fav}: compared {rate_name} across groups"
    )];
    Ok(FairnessResult::judged(
        definition,
        Some(gap),
        config.tolerance,
        stats,
        notes,
    ))
}

fn equal_selection_parity(
    grouped: &GroupedPredictions,
    config: &AuditConfig,
) -> Result<FairnessResult, AuditError> {
    let definition = FairnessDefinition::EqualSelectionParity;
    let fav = grouped.favourable_outcome();
    let mut stats = BTreeMap::new();
    let mut counts = Vec::new();
    for (name, recs) in grouped.groups() {
        let (hits, size) = favourable_counts(recs.iter(), fav, config.threshold, definition)?;
        counts.push(hits);
        let mut gs = GroupStats::default();
        gs.counts.insert("size".into(), size);
        gs.counts.insert("favourable".into(), hits);
        stats.insert(name.clone(), gs);
    }
    let max = counts.iter().max().copied().unwrap_or(0);
    let min = counts.iter().min().copied().unwrap_or(0);
    let gap = max - min;
    let verdict = if gap <= config.count_tolerance {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    Ok(FairnessResult {
        definition,
        verdict,
        max_gap: Some(gap as f64),
        tolerance: config.count_tolerance as f64,
        per_group_stats: stats,
        notes: vec![format!(
            "favourable outcome {fav}: compared absolute counts of favourable predictions"
        )],
    })
}

fn conditional_statistical_parity(
    grouped: &GroupedPredictions,
    config: &AuditConfig,
) -> Result<FairnessResult, AuditError> {
    let definition = FairnessDefinition::ConditionalStatisticalParity;
    if config.explaining_variables.is_empty() {
        return Err(AuditError::NoExplainingVariables);
    }
    let fav = grouped.favourable_outcome();
    let rate_name = favourable_rate_name(fav);

    // stratum -> group -> records
    let mut strata: BTreeMap<Vec<String>, BTreeMap<&str, Vec<&PredictionRecord>>> =
        BTreeMap::new();
    let mut index = 0;
    for (group, recs) in grouped.groups() {
        for r in recs {
            let key = config
                .explaining_variables
                .iter()
                .map(|var| {
                    r.legitimate
                        .get(var)
                        .cloned()
                        .ok_or_else(|| AuditError::MissingAttribute {
                            attribute: var.clone(),
                            index,
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            strata
                .entry(key)
                .or_default()
                .entry(group.as_str())
                .or_default()
                .push(r);
            index += 1;
        }
    }

    let mut stats: BTreeMap<String, GroupStats> = grouped
        .groups()
        .iter()
        .map(|(g, recs)| {
            let mut gs = GroupStats::default();
            gs.counts.insert("size".into(), recs.len() as u64);
            (g.clone(), gs)
        })
        .collect();
    let mut notes = vec![format!(
        "favourable outcome {fav}: compared {rate_name} within strata of {}",
        config.explaining_variables.join(", ")
    )];
    let mut worst: Option<f64> = None;

    for (key, by_group) in &strata {
        let label = config
            .explaining_variables
            .iter()
            .zip(key)
            .map(|(var, val)| format!("{var}={val}"))
            .collect::<Vec<_>>()
            .join(",");
        let mut fractions = Vec::new();
        let mut short = Vec::new();
        for (group, gs) in stats.iter_mut() {
            let members = by_group.get(group.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let (hits, size) =
                favourable_counts(members.iter().copied(), fav, config.threshold, definition)?;
            gs.counts.insert(format!("size[{label}]"), size);
            if let Some(frac) = Fraction::new(hits, size) {
                gs.rates
                    .insert(format!("{rate_name}[{label}]"), Rate::Value(frac.value()));
            }
            if (size as usize) < config.min_support {
                short.push(format!("{group} has {size}"));
            } else if let Some(frac) = Fraction::new(hits, size) {
                fractions.push(frac);
            }
        }
        if short.is_empty() {
            let gap = ratio::max_pairwise_gap(&fractions);
            notes.push(format!("stratum {label}: gap {gap:.4}"));
            worst = Some(worst.map_or(gap, |w| w.max(gap)));
        } else {
            notes.push(format!(
                "stratum {label} not judged: {} (minimum support {})",
                short.join(", "),
                config.min_support
            ));
        }
    }
    if worst.is_none() {
        notes.push("no stratum has enough support in every group".into());
    }
    Ok(FairnessResult::judged(
        definition,
        worst,
        config.tolerance,
        stats,
        notes,
    ))
}

/// Compares the named confusion-matrix rates; the gap is the largest over them.
fn rate_gap(
    grouped: &GroupedPredictions,
    definition: FairnessDefinition,
    names: &[RateName],
    config: &AuditConfig,
) -> Result<FairnessResult, AuditError> {
    let matrices = grouped.matrices(config.threshold, definition)?;
    let mut stats = BTreeMap::new();
    let mut notes = Vec::new();
    for (group, m) in &matrices {
        let mut gs = GroupStats::default();
        gs.counts.insert("tp".into(), m.tp);
        gs.counts.insert("fn".into(), m.fn_);
        gs.counts.insert("fp".into(), m.fp);
        gs.counts.insert("tn".into(), m.tn);
        let rates = m.rates()?;
        for name in names {
            let rate = rates.get(*name);
            if let Rate::Undefined { undefined } = rate {
                notes.push(format!("group {group}: {name} undefined ({undefined})"));
            }
            gs.rates.insert(name.to_string(), rate);
        }
        stats.insert(group.clone(), gs);
    }

    let mut gap = Some(0.0_f64);
    for name in names {
        let fractions: Option<Vec<Fraction>> =
            matrices.values().map(|m| name.fraction(m)).collect();
        gap = match (gap, fractions) {
            (Some(g), Some(f)) => Some(g.max(ratio::max_pairwise_gap(&f))),
            _ => None,
        };
    }
    Ok(FairnessResult::judged(
        definition,
        gap,
        config.tolerance,
        stats,
        notes,
    ))
}

fn bin_index(score: f64, bins: usize) -> usize {
    ((score * bins as f64).floor() as usize).min(bins - 1)
}

/// Compares the observed positive fraction per equal-width score bin.
///
/// Only bins where every group has at least `min_support` records are judged.
/// With scores restricted to {0, 1} this reduces to comparing FOR (bin 0) and
/// PPV (last bin) across groups.
pub fn calibration_gaps(
    grouped: &GroupedPredictions,
    bins: usize,
    min_support: usize,
    tolerance: f64,
) -> Result<FairnessResult, AuditError> {
    let definition = FairnessDefinition::Calibration;
    if bins < 2 {
        return Err(AuditError::InvalidConfig(format!(
            "calibration needs at least 2 bins, got {bins}"
        )));
    }
    // group -> per bin (positives, records)
    let mut tallies: BTreeMap<&str, Vec<(u64, u64)>> = BTreeMap::new();
    for (group, recs) in grouped.groups() {
        let t = tallies.entry(group.as_str()).or_insert_with(|| vec![(0, 0); bins]);
        for r in recs {
            let s = r.score.ok_or(AuditError::ScoreRequired(definition))?;
            let y = r.y_true.ok_or(AuditError::GroundTruthRequired(definition))?;
            let cell = &mut t[bin_index(s.value(), bins)];
            cell.1 += 1;
            if y.is_positive() {
                cell.0 += 1;
            }
        }
    }

    let width = 1.0 / bins as f64;
    let bin_label = |b: usize| {
        format!(
            "bin[{:.2},{:.2}{}",
            b as f64 * width,
            (b + 1) as f64 * width,
            if b + 1 == bins { "]" } else { ")" }
        )
    };

    let mut stats: BTreeMap<String, GroupStats> = BTreeMap::new();
    for (group, t) in &tallies {
        let mut gs = GroupStats::default();
        for (b, (pos, n)) in t.iter().enumerate() {
            if *n > 0 {
                let label = bin_label(b);
                gs.counts.insert(format!("{label} records"), *n);
                gs.rates.insert(
                    format!("{label} positive fraction"),
                    Rate::Value(*pos as f64 / *n as f64),
                );
            }
        }
        stats.insert(group.to_string(), gs);
    }

    let mut notes = Vec::new();
    let mut worst: Option<f64> = None;
    for b in 0..bins {
        let cells: Vec<(u64, u64)> = tallies.values().map(|t| t[b]).collect();
        if cells.iter().all(|(_, n)| *n == 0) {
            continue;
        }
        if cells.iter().any(|(_, n)| (*n as usize) < min_support) {
            notes.push(format!(
                "{} lacks support (fewer than {min_support} records in some group)",
                bin_label(b)
            ));
            continue;
        }
        let fractions: Vec<Fraction> = cells
            .iter()
            .map(|(pos, n)| Fraction::new(*pos, *n).expect("supported bins are non-empty"))
            .collect();
        let gap = ratio::max_pairwise_gap(&fractions);
        worst = Some(worst.map_or(gap, |w| w.max(gap)));
    }
    if worst.is_none() {
        notes.push("no score bin has enough support in every group".into());
    }
    Ok(FairnessResult::judged(
        definition, worst, tolerance, stats, notes,
    ))
}

/// Compares the mean score among records whose true label is `class`.
pub fn balance_gap(
    grouped: &GroupedPredictions,
    class: OutcomeLabel,
    tolerance: f64,
) -> Result<FairnessResult, AuditError> {
    let definition = match class {
        OutcomeLabel::Positive => FairnessDefinition::BalancePositive,
        OutcomeLabel::Negative => FairnessDefinition::BalanceNegative,
    };
    let mut stats = BTreeMap::new();
    let mut means = Vec::new();
    let mut notes = Vec::new();
    for (group, recs) in grouped.groups() {
        let mut scores = Vec::new();
        for r in recs {
            let s = r.score.ok_or(AuditError::ScoreRequired(definition))?;
            let y = r.y_true.ok_or(AuditError::GroundTruthRequired(definition))?;
            if y == class {
                scores.push(s.value());
            }
        }
        let mut gs = GroupStats::default();
        gs.counts.insert(format!("class {class} records"), scores.len() as u64);
        if scores.is_empty() {
            notes.push(format!("group {group}: no records of class {class}"));
            gs.rates.insert(
                "mean score".into(),
                Rate::Undefined {
                    undefined: match class {
                        OutcomeLabel::Positive => crate::metrics::Denominator::ActualPositives,
                        OutcomeLabel::Negative => crate::metrics::Denominator::ActualNegatives,
                    },
                },
            );
        } else {
            // sorted so the mean does not depend on record order
            scores.sort_by(f64::total_cmp);
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            means.push(mean);
            gs.rates.insert("mean score".into(), Rate::Value(mean));
        }
        stats.insert(group.clone(), gs);
    }
    let gap = (means.len() == grouped.groups().len()).then(|| ratio::max_pairwise_diff_f64(&means));
    Ok(FairnessResult::judged(
        definition, gap, tolerance, stats, notes,
    ))
}
