//! Confusion matrices and the measures derived from them.
//!
//! A [`ConfusionMatrix`] holds the four cell counts of one population. The
//! fifteen derived measures live in a [`RateSet`]. A rate whose denominator is
//! zero is [`Rate::Undefined`] and carries the empty denominator; it is never
//! reported as `0`.

use std::fmt;
use std::ops::Add;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("label lists differ in length ({y_true} true labels, {y_pred} predictions)")]
    LengthMismatch { y_true: usize, y_pred: usize },

    #[error("no records")]
    Empty,

    #[error("confusion matrix is empty (all cells are zero)")]
    EmptyMatrix,

    #[error("threshold {0} is outside [0, 1]")]
    ThresholdOutOfRange(f64),

    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),

    #[error("label must be 0 or 1, got {0}")]
    InvalidLabel(i64),
}

/// Binary outcome. `Positive` is the class the classifier tries to detect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutcomeLabel {
    Negative = 0,
    Positive = 1,
}

impl OutcomeLabel {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Self::Positive
        } else {
            Self::Negative
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_positive(self) -> bool {
        self == Self::Positive
    }
}

impl TryFrom<i64> for OutcomeLabel {
    type Error = MetricsError;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Self::Negative),
            1 => Ok(Self::Positive),
            other => Err(MetricsError::InvalidLabel(other)),
        }
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl Serialize for OutcomeLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for OutcomeLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        OutcomeLabel::try_from(v).map_err(serde::de::Error::custom)
    }
}

/// Probability in `[0, 1]` that an instance belongs to the positive class.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Score(f64);

impl Score {
    pub fn new(value: f64) -> Result<Self, MetricsError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(MetricsError::ScoreOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Score::new(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Cell counts for one population.
///
/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub const fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Self { tp, fn_, fp, tn }
    }

    /// Actual positives, `P = TP + FN`.
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Actual negatives, `N = FP + TN`.
    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn predicted_positives(&self) -> u64 {
        self.tp + self.fp
    }

    pub fn predicted_negatives(&self) -> u64 {
        self.tn + self.fn_
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn errors(&self) -> u64 {
        self.fn_ + self.fp
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Adds one record to the matching cell.
    pub fn record(&mut self, y_true: OutcomeLabel, y_pred: OutcomeLabel) {
        use OutcomeLabel::*;
        match (y_true, y_pred) {
            (Positive, Positive) => self.tp += 1,
            (Positive, Negative) => self.fn_ += 1,
            (Negative, Positive) => self.fp += 1,
            (Negative, Negative) => self.tn += 1,
        }
    }

    /// Every cell multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self::new(
            self.tp * factor,
            self.fn_ * factor,
            self.fp * factor,
            self.tn * factor,
        )
    }

    pub fn rates(&self) -> Result<RateSet, MetricsError> {
        rates(self)
    }

    pub fn exact_rates(&self) -> Result<ExactRateSet, MetricsError> {
        ExactRateSet::from_matrix(self)
    }
}

impl Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.tp + rhs.tp,
            self.fn_ + rhs.fn_,
            self.fp + rhs.fp,
            self.tn + rhs.tn,
        )
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TP={} FN={} FP={} TN={}",
            self.tp, self.fn_, self.fp, self.tn
        )
    }
}

/// Which count was zero when a rate could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    Total,
    ActualPositives,
    ActualNegatives,
    PredictedPositives,
    PredictedNegatives,
}

impl fmt::Display for Denominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Total => "no records",
            Self::ActualPositives => "no actual positives",
            Self::ActualNegatives => "no actual negatives",
            Self::PredictedPositives => "no predicted positives",
            Self::PredictedNegatives => "no predicted negatives",
        };
        f.write_str(s)
    }
}

/// A derived measure, or the reason it does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Value(f64),
    Undefined { undefined: Denominator },
}

impl Rate {
    fn ratio(num: u64, den: u64, which: Denominator) -> Self {
        if den == 0 {
            Rate::Undefined { undefined: which }
        } else {
            Rate::Value(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Value(v) => Some(v),
            Rate::Undefined { .. } => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Rate::Value(_))
    }
}

/// Names of the thirteen fractional measures of a [`RateSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RateName {
    Br,
    Pr,
    Nr,
    Acc,
    Mr,
    Tpr,
    Tnr,
    Fpr,
    Fnr,
    Fdr,
    Ppv,
    For,
    Npv,
}

impl RateName {
    pub const ALL: [RateName; 13] = [
        Self::Br,
        Self::Pr,
        Self::Nr,
        Self::Acc,
        Self::Mr,
        Self::Tpr,
        Self::Tnr,
        Self::Fpr,
        Self::Fnr,
        Self::Fdr,
        Self::Ppv,
        Self::For,
        Self::Npv,
    ];

    pub fn abbreviation(self) -> &'static str {
        match self {
            Self::Br => "BR",
            Self::Pr => "PR",
            Self::Nr => "NR",
            Self::Acc => "ACC",
            Self::Mr => "MR",
            Self::Tpr => "TPR",
            Self::Tnr => "TNR",
            Self::Fpr => "FPR",
            Self::Fnr => "FNR",
            Self::Fdr => "FDR",
            Self::Ppv => "PPV",
            Self::For => "FOR",
            Self::Npv => "NPV",
        }
    }

    /// Numerator and denominator counts for this rate.
    pub(crate) fn parts(self, m: &ConfusionMatrix) -> (u64, u64, Denominator) {
        use Denominator::*;
        match self {
            Self::Br => (m.positives(), m.total(), Total),
            Self::Pr => (m.predicted_positives(), m.total(), Total),
            Self::Nr => (m.predicted_negatives(), m.total(), Total),
            Self::Acc => (m.tp + m.tn, m.total(), Total),
            Self::Mr => (m.errors(), m.total(), Total),
            Self::Tpr => (m.tp, m.positives(), ActualPositives),
            Self::Tnr => (m.tn, m.negatives(), ActualNegatives),
            Self::Fpr => (m.fp, m.negatives(), ActualNegatives),
            Self::Fnr => (m.fn_, m.positives(), ActualPositives),
            Self::Fdr => (m.fp, m.predicted_positives(), PredictedPositives),
            Self::Ppv => (m.tp, m.predicted_positives(), PredictedPositives),
            Self::For => (m.fn_, m.predicted_negatives(), PredictedNegatives),
            Self::Npv => (m.tn, m.predicted_negatives(), PredictedNegatives),
        }
    }

    pub(crate) fn fraction(self, m: &ConfusionMatrix) -> Option<crate::ratio::Fraction> {
        let (num, den, _) = self.parts(m);
        crate::ratio::Fraction::new(num, den)
    }
}

impl fmt::Display for RateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

/// Counts and the thirteen derived rates of one population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub p: u64,
    pub n: u64,
    pub br: Rate,
    pub pr: Rate,
    pub nr: Rate,
    pub acc: Rate,
    pub mr: Rate,
    pub tpr: Rate,
    pub tnr: Rate,
    pub fpr: Rate,
    pub fnr: Rate,
    pub fdr: Rate,
    pub ppv: Rate,
    #[serde(rename = "for")]
    pub for_: Rate,
    pub npv: Rate,
}

impl RateSet {
    pub fn get(&self, name: RateName) -> Rate {
        match name {
            RateName::Br => self.br,
            RateName::Pr => self.pr,
            RateName::Nr => self.nr,
            RateName::Acc => self.acc,
            RateName::Mr => self.mr,
            RateName::Tpr => self.tpr,
            RateName::Tnr => self.tnr,
            RateName::Fpr => self.fpr,
            RateName::Fnr => self.fnr,
            RateName::Fdr => self.fdr,
            RateName::Ppv => self.ppv,
            RateName::For => self.for_,
            RateName::Npv => self.npv,
        }
    }
}

/// Derives every measure of `m`. Fails only on an all-zero matrix.
pub fn rates(m: &ConfusionMatrix) -> Result<RateSet, MetricsError> {
    if m.is_empty() {
        return Err(MetricsError::EmptyMatrix);
    }
    let r = |name: RateName| {
        let (num, den, which) = name.parts(m);
        Rate::ratio(num, den, which)
    };
    Ok(RateSet {
        p: m.positives(),
        n: m.negatives(),
        br: r(RateName::Br),
        pr: r(RateName::Pr),
        nr: r(RateName::Nr),
        acc: r(RateName::Acc),
        mr: r(RateName::Mr),
        tpr: r(RateName::Tpr),
        tnr: r(RateName::Tnr),
        fpr: r(RateName::Fpr),
        fnr: r(RateName::Fnr),
        fdr: r(RateName::Fdr),
        ppv: r(RateName::Ppv),
        for_: r(RateName::For),
        npv: r(RateName::Npv),
    })
}

/// The same measures as [`RateSet`] in exact rational arithmetic.
///
/// Used to check algebraic identities without floating-point slack.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRateSet {
    rates: [Option<Ratio<u128>>; 13],
}

impl ExactRateSet {
    pub fn from_matrix(m: &ConfusionMatrix) -> Result<Self, MetricsError> {
        if m.is_empty() {
            return Err(MetricsError::EmptyMatrix);
        }
        let rates = RateName::ALL.map(|name| {
            let (num, den, _) = name.parts(m);
            (den > 0).then(|| Ratio::new(num as u128, den as u128))
        });
        Ok(Self { rates })
    }

    pub fn get(&self, name: RateName) -> Option<Ratio<u128>> {
        let idx = RateName::ALL
            .iter()
            .position(|n| *n == name)
            .expect("every name is listed");
        self.rates[idx]
    }
}

/// Tallies paired labels into a confusion matrix.
pub fn confusion_from_labels(
    y_true: &[OutcomeLabel],
    y_pred: &[OutcomeLabel],
) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            y_true: y_true.len(),
            y_pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut m = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        m.record(*t, *p);
    }
    Ok(m)
}

/// Thresholds scores into labels. A score equal to the threshold is positive.
pub fn binarize(scores: &[Score], threshold: f64) -> Result<Vec<OutcomeLabel>, MetricsError> {
    check_threshold(threshold)?;
    Ok(scores
        .iter()
        .map(|s| OutcomeLabel::from_bit(s.value() >= threshold))
        .collect())
}

pub(crate) fn check_threshold(threshold: f64) -> Result<(), MetricsError> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(MetricsError::ThresholdOutOfRange(threshold))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};
    use OutcomeLabel::{Negative as N0, Positive as P1};

    fn labels(bits: &[u8]) -> Vec<OutcomeLabel> {
        bits.iter()
            .map(|b| OutcomeLabel::try_from(*b as i64).unwrap())
            .collect()
    }

    fn v(r: Rate) -> f64 {
        r.value().expect("defined")
    }

    #[test]
    fn sample_data_counts() {
        // 9 TP, 12 FN, 12 FP, 30 TN as paired records
        let mut y_true = Vec::new();
        let mut y_pred = Vec::new();
        for (t, p, n) in [(P1, P1, 9), (P1, N0, 12), (N0, P1, 12), (N0, N0, 30)] {
            for _ in 0..n {
                y_true.push(t);
                y_pred.push(p);
            }
        }
        let m = confusion_from_labels(&y_true, &y_pred).unwrap();
        assert_eq!(m, ConfusionMatrix::new(9, 12, 12, 30));
        assert_eq!(m.total(), 63);
    }

    #[test]
    fn identity_predictions_fill_the_diagonal() {
        let y = labels(&[1, 1, 0]);
        let m = confusion_from_labels(&y, &y).unwrap();
        assert_eq!(m, ConfusionMatrix::new(2, 0, 0, 1));
    }

    #[test]
    fn random_labels_match_recount() {
        let mut rng = StdRng::seed_from_u64(7);
        let y_true: Vec<_> = (0..200).map(|_| OutcomeLabel::from_bit(rng.gen())).collect();
        let y_pred: Vec<_> = (0..200).map(|_| OutcomeLabel::from_bit(rng.gen())).collect();
        let m = confusion_from_labels(&y_true, &y_pred).unwrap();

        let count = |t: u8, p: u8| {
            y_true
                .iter()
                .zip(&y_pred)
                .filter(|(a, b)| a.as_u8() == t && b.as_u8() == p)
                .count() as u64
        };
        assert_eq!(m.tp, count(1, 1));
        assert_eq!(m.fn_, count(1, 0));
        assert_eq!(m.fp, count(0, 1));
        assert_eq!(m.tn, count(0, 0));
        assert_eq!(m.total(), 200);
    }

    #[test]
    fn confusion_rejects_bad_input() {
        assert_eq!(
            confusion_from_labels(&labels(&[1, 0]), &labels(&[1])),
            Err(MetricsError::LengthMismatch { y_true: 2, y_pred: 1 })
        );
        assert_eq!(confusion_from_labels(&[], &[]), Err(MetricsError::Empty));
    }

    #[test]
    fn sample_matrix_rates() {
        let r = rates(&ConfusionMatrix::new(9, 12, 12, 30)).unwrap();
        assert!((v(r.acc) - 39.0 / 63.0).abs() < 1e-12);
        assert!((v(r.acc) - 0.6190).abs() < 5e-5);
        assert!((v(r.br) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.p, 21);
        assert_eq!(r.n, 42);
    }

    #[test]
    fn subgroup_rates() {
        let men = rates(&ConfusionMatrix::new(7, 7, 6, 22)).unwrap();
        assert!((v(men.tnr) - 22.0 / 28.0).abs() < 1e-12);
        assert!((v(men.tnr) - 0.79).abs() < 0.005);
        assert!((v(men.for_) - 7.0 / 29.0).abs() < 1e-12);
        assert!((v(men.for_) - 0.24).abs() < 0.005);

        let women = rates(&ConfusionMatrix::new(2, 5, 6, 8)).unwrap();
        assert!((v(women.tnr) - 8.0 / 14.0).abs() < 1e-12);
        assert!((v(women.tnr) - 0.57).abs() < 0.005);
        assert!((v(women.for_) - 5.0 / 13.0).abs() < 1e-12);
        assert!((v(women.for_) - 0.38).abs() < 0.005);
    }

    #[test]
    fn zero_denominators_are_undefined() {
        let r = rates(&ConfusionMatrix::new(0, 0, 5, 5)).unwrap();
        assert_eq!(
            r.tpr,
            Rate::Undefined {
                undefined: Denominator::ActualPositives
            }
        );
        assert_eq!(r.fnr.value(), None);
        assert_eq!(r.tnr, Rate::Value(0.5));
        assert_eq!(rates(&ConfusionMatrix::default()), Err(MetricsError::EmptyMatrix));
    }

    #[test]
    fn undefined_rate_serializes_with_reason() {
        let r = rates(&ConfusionMatrix::new(0, 0, 5, 5)).unwrap();
        let json = serde_json::to_value(r).unwrap();
        assert_eq!(json["tpr"]["undefined"], "actual_positives");
        assert_eq!(json["tnr"], 0.5);
        let back: RateSet = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn binarize_is_inclusive() {
        let s: Vec<Score> = [0.2, 0.5, 0.9].iter().map(|x| Score::new(*x).unwrap()).collect();
        assert_eq!(binarize(&s, 0.5).unwrap(), labels(&[0, 1, 1]));
        assert!(binarize(&s, 0.0).unwrap().iter().all(|l| l.is_positive()));
        assert_eq!(
            binarize(&s, 1.5),
            Err(MetricsError::ThresholdOutOfRange(1.5))
        );
        assert!(binarize(&s, -0.1).is_err());
    }

    #[test]
    fn binarize_matches_elementwise_comparison() {
        let mut rng = StdRng::seed_from_u64(11);
        let raw: Vec<f64> = (0..500).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let scores: Vec<Score> = raw.iter().map(|x| Score::new(*x).unwrap()).collect();
        let out = binarize(&scores, 0.5).unwrap();
        assert_eq!(out.len(), raw.len());
        for (x, l) in raw.iter().zip(out) {
            assert_eq!(l.is_positive(), *x >= 0.5);
        }
    }

    #[test]
    fn score_bounds() {
        assert!(Score::new(0.0).is_ok());
        assert!(Score::new(1.0).is_ok());
        assert!(Score::new(1.0001).is_err());
        assert!(Score::new(f64::NAN).is_err());
        assert!(serde_json::from_str::<Score>("2.0").is_err());
    }

    #[test]
    fn label_serde_is_numeric() {
        assert_eq!(serde_json::to_string(&P1).unwrap(), "1");
        assert_eq!(serde_json::from_str::<OutcomeLabel>("0").unwrap(), N0);
        assert!(serde_json::from_str::<OutcomeLabel>("2").is_err());
    }

    #[test]
    fn matrix_serde_uses_fn_key() {
        let json = serde_json::to_string(&ConfusionMatrix::new(1, 2, 3, 4)).unwrap();
        assert_eq!(json, r#"{"tp":1,"fn":2,"fp":3,"tn":4}"#);
    }
}
