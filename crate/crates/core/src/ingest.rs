//! Delimited-text datasets mapped onto prediction records.
//!
//! Label columns are read through explicit spelling lists; a cell that matches
//! neither list is an error, never a guess. Empty label and score cells mean
//! "not recorded".

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::audit::{AuditConfig, FairnessDefinition, PredictionRecord};
use crate::metrics::{OutcomeLabel, Score};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaMapping {
    pub sensitive: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_true: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_pred: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<String>,
    #[serde(default)]
    pub legitimate: Vec<String>,
    #[serde(default = "default_favourable")]
    pub favourable_outcome: OutcomeLabel,
    #[serde(default = "default_positive")]
    pub positive_labels: Vec<String>,
    #[serde(default = "default_negative")]
    pub negative_labels: Vec<String>,
    /// Detected from the header among comma, semicolon and tab when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<char>,
}

fn default_favourable() -> OutcomeLabel {
    OutcomeLabel::Positive
}

fn default_positive() -> Vec<String> {
    vec!["1".into()]
}

fn default_negative() -> Vec<String> {
    vec!["0".into()]
}

impl SchemaMapping {
    pub fn new(sensitive: impl Into<String>) -> Self {
        Self {
            sensitive: sensitive.into(),
            y_true: None,
            y_pred: None,
            score: None,
            legitimate: Vec::new(),
            favourable_outcome: default_favourable(),
            positive_labels: default_positive(),
            negative_labels: default_negative(),
            delimiter: None,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::InvalidMapping(m));
        if self.y_pred.is_none() && self.score.is_none() {
            return bad("map at least one of y_pred and score".into());
        }
        let mut seen = BTreeSet::new();
        for column in self.columns() {
            if column.is_empty() {
                return bad("column names must not be empty".into());
            }
            if !seen.insert(column) {
                return bad(format!("column {column:?} is mapped more than once"));
            }
        }
        if self.positive_labels.is_empty() || self.negative_labels.is_empty() {
            return bad("positive and negative label spellings must not be empty".into());
        }
        if let Some(s) = self
            .positive_labels
            .iter()
            .find(|s| self.negative_labels.contains(s))
        {
            return bad(format!("label spelling {s:?} is both positive and negative"));
        }
        if let Some(d) = self.delimiter {
            if !d.is_ascii() || matches!(d, '"' | '\n' | '\r') {
                return bad(format!("unusable delimiter {d:?}"));
            }
        }
        Ok(())
    }

    /// Mapped column names in output order.
    pub fn columns(&self) -> Vec<&str> {
        let mut out = vec![self.sensitive.as_str()];
        out.extend(self.y_true.as_deref());
        out.extend(self.y_pred.as_deref());
        out.extend(self.score.as_deref());
        out.extend(self.legitimate.iter().map(String::as_str));
        out
    }

    fn parse_label(&self, cell: &str) -> Option<OutcomeLabel> {
        if self.positive_labels.iter().any(|s| s == cell) {
            Some(OutcomeLabel::Positive)
        } else if self.negative_labels.iter().any(|s| s == cell) {
            Some(OutcomeLabel::Negative)
        } else {
            None
        }
    }

    fn spell(&self, label: OutcomeLabel) -> &str {
        match label {
            OutcomeLabel::Positive => &self.positive_labels[0],
            OutcomeLabel::Negative => &self.negative_labels[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("invalid schema mapping: {0}")]
    InvalidMapping(String),

    #[error("missing header row")]
    MissingHeader,

    #[error("missing column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("row {row} (line {line}), column {column:?}: {message}")]
    InvalidValue {
        row: usize,
        line: u64,
        column: String,
        message: String,
    },

    #[error("no records")]
    NoRecords,
}

/// Picks the candidate delimiter that occurs most often in the header line.
pub fn detect_delimiter(source: &str) -> u8 {
    let header = source.lines().next().unwrap_or("");
    [b',', b';', b'\t']
        .into_iter()
        .rev()
        .max_by_key(|d| header.bytes().filter(|b| b == d).count())
        .expect("candidates are non-empty")
}

pub fn parse_dataset(
    source: &str,
    mapping: &SchemaMapping,
) -> Result<Vec<PredictionRecord>, IngestError> {
    mapping.validate()?;
    let delimiter = mapping
        .delimiter
        .map(|d| d as u8)
        .unwrap_or_else(|| detect_delimiter(source));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(source.as_bytes());

    let headers = reader.headers().map_err(malformed)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(IngestError::MissingHeader);
    }
    let mut position: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, h) in headers.iter().enumerate() {
        position.entry(h).or_insert(i);
    }
    let missing: Vec<String> = mapping
        .columns()
        .into_iter()
        .filter(|c| !position.contains_key(c))
        .map(String::from)
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::MissingColumns(missing));
    }
    let col = |name: &str| position[name];

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(malformed)?;
        let line = row.position().map_or(0, |p| p.line());
        let invalid = |column: &str, message: String| IngestError::InvalidValue {
            row: i + 1,
            line,
            column: column.to_string(),
            message,
        };
        let label = |column: &Option<String>| -> Result<Option<OutcomeLabel>, IngestError> {
            let Some(name) = column else { return Ok(None) };
            let cell = &row[col(name)];
            if cell.is_empty() {
                return Ok(None);
            }
            mapping.parse_label(cell).map(Some).ok_or_else(|| {
                invalid(
                    name,
                    format!(
                        "{cell:?} is not a configured label spelling (positive {:?}, negative {:?})",
                        mapping.positive_labels, mapping.negative_labels
                    ),
                )
            })
        };
        let y_true = label(&mapping.y_true)?;
        let y_pred = label(&mapping.y_pred)?;

        let score = match &mapping.score {
            Some(name) if !row[col(name)].is_empty() => {
                let cell = &row[col(name)];
                let value: f64 = cell
                    .parse()
                    .map_err(|_| invalid(name, format!("{cell:?} is not a number")))?;
                Some(
                    Score::new(value)
                        .map_err(|_| invalid(name, format!("score {cell} is outside [0, 1]")))?,
                )
            }
            _ => None,
        };

        let sensitive = row[col(&mapping.sensitive)].to_string();
        if sensitive.is_empty() {
            return Err(invalid(
                &mapping.sensitive,
                "sensitive attribute is empty".into(),
            ));
        }
        let legitimate = mapping
            .legitimate
            .iter()
            .filter(|name| !row[col(name)].is_empty())
            .map(|name| (name.clone(), row[col(name)].to_string()))
            .collect();

        records.push(PredictionRecord {
            y_true,
            y_pred,
            score,
            sensitive,
            legitimate,
        });
    }
    if records.is_empty() {
        return Err(IngestError::NoRecords);
    }
    Ok(records)
}

fn malformed(e: csv::Error) -> IngestError {
    IngestError::Malformed {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

/// Writes records with the mapped columns; the inverse of [`parse_dataset`].
pub fn write_dataset(
    records: &[PredictionRecord],
    mapping: &SchemaMapping,
) -> Result<String, IngestError> {
    mapping.validate()?;
    let mut writer = csv::WriterBuilder::new()
        .delimiter(mapping.delimiter.map_or(b',', |d| d as u8))
        .from_writer(Vec::new());
    let io = |e: csv::Error| IngestError::Malformed {
        line: 0,
        message: e.to_string(),
    };
    writer.write_record(mapping.columns()).map_err(io)?;
    for r in records {
        let mut row: Vec<String> = vec![r.sensitive.clone()];
        if mapping.y_true.is_some() {
            row.push(r.y_true.map_or(String::new(), |l| mapping.spell(l).into()));
        }
        if mapping.y_pred.is_some() {
            row.push(r.y_pred.map_or(String::new(), |l| mapping.spell(l).into()));
        }
        if mapping.score.is_some() {
            row.push(r.score.map_or(String::new(), |s| s.value().to_string()));
        }
        for name in &mapping.legitimate {
            row.push(r.legitimate.get(name).cloned().unwrap_or_default());
        }
        writer.write_record(&row).map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| IngestError::Malformed {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("input was UTF-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    GroundTruthRequired,
    PredictionRequired,
    ScoreRequired,
    ExplainingVariableMissing,
    TooFewGroups,
    SmallGroup,
    MissingClass,
}

/// A data problem that would make a requested definition unreliable or unevaluable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<FairnessDefinition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub message: String,
}

/// Checks records against what the target definitions need. Empty when nothing is wrong.
pub fn validate_dataset(
    records: &[PredictionRecord],
    targets: &BTreeSet<FairnessDefinition>,
    config: &AuditConfig,
) -> Vec<Finding> {
    let mut findings = Vec::new();
    let total = records.len();
    let count = |f: &dyn Fn(&PredictionRecord) -> bool| records.iter().filter(|r| f(r)).count();

    for &d in targets {
        if d.needs_ground_truth() {
            let missing = count(&|r| r.y_true.is_none());
            if missing > 0 {
                findings.push(Finding {
                    kind: FindingKind::GroundTruthRequired,
                    definition: Some(d),
                    group: None,
                    message: format!(
                        "ground truth required for {d}: {missing} of {total} records lack it"
                    ),
                });
            }
        }
        if d.needs_scores() {
            let missing = count(&|r| r.score.is_none());
            if missing > 0 {
                findings.push(Finding {
                    kind: FindingKind::ScoreRequired,
                    definition: Some(d),
                    group: None,
                    message: format!(
                        "score output required for {d}: {missing} of {total} records lack it"
                    ),
                });
            }
        } else {
            let missing = count(&|r| r.predicted(config.threshold).is_none());
            if missing > 0 {
                findings.push(Finding {
                    kind: FindingKind::PredictionRequired,
                    definition: Some(d),
                    group: None,
                    message: format!(
                        "prediction required for {d}: {missing} of {total} records have neither label nor score"
                    ),
                });
            }
        }
        if d == FairnessDefinition::ConditionalStatisticalParity {
            if config.explaining_variables.is_empty() {
                findings.push(Finding {
                    kind: FindingKind::ExplainingVariableMissing,
                    definition: Some(d),
                    group: None,
                    message: format!("{d} needs at least one explaining variable"),
                });
            }
            for v in &config.explaining_variables {
                let missing = count(&|r| !r.legitimate.contains_key(v));
                if missing > 0 {
                    findings.push(Finding {
                        kind: FindingKind::ExplainingVariableMissing,
                        definition: Some(d),
                        group: None,
                        message: format!(
                            "explaining variable {v:?} missing in {missing} of {total} records"
                        ),
                    });
                }
            }
        }
    }

    let mut groups: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.sensitive.as_str()).or_default().push(r);
    }
    if groups.len() < 2 {
        findings.push(Finding {
            kind: FindingKind::TooFewGroups,
            definition: None,
            group: None,
            message: format!(
                "found {} group(s); at least 2 are needed for a comparison",
                groups.len()
            ),
        });
    }
    let wants_classes = targets.iter().any(|d| d.needs_ground_truth());
    for (name, members) in &groups {
        if members.len() < config.min_support {
            findings.push(Finding {
                kind: FindingKind::SmallGroup,
                definition: None,
                group: Some(name.to_string()),
                message: format!(
                    "group {name:?} has {} record(s), below the minimum of {}",
                    members.len(),
                    config.min_support
                ),
            });
        }
        if !wants_classes {
            continue;
        }
        for class in [OutcomeLabel::Positive, OutcomeLabel::Negative] {
            let labelled = members.iter().filter(|r| r.y_true.is_some()).count();
            let n = members.iter().filter(|r| r.y_true == Some(class)).count();
            if labelled > 0 && n == 0 {
                let which = if class.is_positive() { "positives" } else { "negatives" };
                findings.push(Finding {
                    kind: FindingKind::MissingClass,
                    definition: None,
                    group: Some(name.to_string()),
                    message: format!("group {name:?} has no actual {which}"),
                });
            }
        }
    }
    findings
}
