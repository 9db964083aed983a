use std::collections::BTreeMap;
use std::path::PathBuf;

use faircompass_core::audit::{split_by_group, AttributeSelector};
use faircompass_core::ingest::{parse_dataset, write_dataset, SchemaMapping};
use faircompass_core::metrics::Score;
use faircompass_core::{ConfusionMatrix, FairnessDefinition, OutcomeLabel, PredictionRecord};
use proptest::prelude::*;

fn data(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    std::fs::read_to_string(path).unwrap()
}

fn schema() -> SchemaMapping {
    serde_json::from_str(&data("fraud_schema.json")).unwrap()
}

fn matrices(records: Vec<PredictionRecord>) -> BTreeMap<String, ConfusionMatrix> {
    split_by_group(records, &AttributeSelector::Sensitive, OutcomeLabel::Negative)
        .unwrap()
        .matrices(0.5, FairnessDefinition::EqualisedOdds)
        .unwrap()
}

#[test]
fn fraud_fixture_reproduces_subgroup_tables() {
    let records = parse_dataset(&data("fraud_claims.csv"), &schema()).unwrap();
    assert_eq!(records.len(), 63);
    let m = matrices(records);
    assert_eq!(m["men"], ConfusionMatrix::new(7, 7, 6, 22));
    assert_eq!(m["women"], ConfusionMatrix::new(2, 5, 6, 8));
}

#[test]
fn calibration_fixture_reproduces_tables() {
    let records = parse_dataset(&data("calibration_tables.csv"), &schema()).unwrap();
    assert!(records
        .iter()
        .all(|r| matches!(r.score.map(Score::value), Some(v) if v == 0.0 || v == 1.0)));
    let m = matrices(records);
    assert_eq!(m["men"], ConfusionMatrix::new(8, 4, 4, 20));
    assert_eq!(m["women"], ConfusionMatrix::new(6, 3, 3, 15));
}

#[test]
fn shuffled_rows_parse_to_the_same_multiset() {
    use rand::{seq::SliceRandom, SeedableRng};
    let text = data("fraud_claims.csv");
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.shuffle(&mut rand::rngs::StdRng::seed_from_u64(5));
    let shuffled = format!("{header}\n{}\n", lines.join("\n"));

    let key = |r: &PredictionRecord| serde_json::to_string(r).unwrap();
    let mut a: Vec<String> = parse_dataset(&text, &schema()).unwrap().iter().map(key).collect();
    let mut b: Vec<String> = parse_dataset(&shuffled, &schema()).unwrap().iter().map(key).collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

fn record() -> impl Strategy<Value = PredictionRecord> {
    let label = prop::option::of(any::<bool>().prop_map(OutcomeLabel::from_bit));
    (
        label.clone(),
        label,
        prop::option::of(0.0f64..=1.0),
        "[a-z]{1,6}( [a-z]{1,3})?",
        prop::option::of(prop::sample::select(vec!["yes", "no", "x,y", "say \"hi\""])),
    )
        .prop_map(|(y_true, y_pred, score, sensitive, prior)| PredictionRecord {
            y_true,
            y_pred,
            score: score.map(|s| Score::new(s).unwrap()),
            sensitive,
            legitimate: prior
                .map(|p| BTreeMap::from([("prior".to_string(), p.to_string())]))
                .unwrap_or_default(),
        })
}

proptest! {
    #[test]
    fn parse_write_parse_is_stable(
        records in prop::collection::vec(record(), 1..40),
        delimiter in prop::sample::select(vec![',', ';', '\t']),
    ) {
        let mapping = SchemaMapping {
            y_true: Some("truth".into()),
            y_pred: Some("pred".into()),
            score: Some("score".into()),
            legitimate: vec!["prior".into()],
            delimiter: Some(delimiter),
            ..SchemaMapping::new("group")
        };
        let text = write_dataset(&records, &mapping).unwrap();
        let parsed = parse_dataset(&text, &mapping).unwrap();
        prop_assert_eq!(parsed.len(), records.len());
        prop_assert_eq!(&parsed, &records);
        prop_assert_eq!(write_dataset(&parsed, &mapping).unwrap(), text);
    }
}
