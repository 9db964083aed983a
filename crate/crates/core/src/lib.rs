//! Fairness auditing for binary classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`metrics`]: confusion matrices and the rates derived from them.
//! - [`audit`]: per-group splitting and the group-fairness definitions.
//! - [`tradeoff`]: detection of definitions that cannot hold together on the data.
//! - [`compass`]: the decision tree that guides the choice of a definition.
//! - [`ingest`]: delimited-file parsing with an explicit schema mapping.
//! - [`report`]: audit assembly and deterministic text rendering.

#![forbid(unsafe_code)]

pub mod audit;
pub mod compass;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod tradeoff;

mod ratio;

pub use audit::{
    AuditConfig, AuditError, FairnessDefinition, FairnessResult, Family, GroupedPredictions,
    PredictionRecord, Verdict,
};
pub use compass::{CompassError, CompassSession, CompassTree, DecisionRecord};
pub use metrics::{ConfusionMatrix, MetricsError, OutcomeLabel, Rate, RateSet, Score};
pub use report::AuditReport;
pub use tradeoff::CompatibilityReport;
