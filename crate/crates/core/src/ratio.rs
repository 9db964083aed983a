//! Exact comparison of count fractions.
//!
//! Gaps between two rates `a/b` and `c/d` are evaluated as `|ad - cb| / bd` in
//! integer arithmetic and rounded once. Two rates that are equal as fractions
//! therefore always produce a gap of exactly `0.0`, and complementary rates
//! (TPR/FNR, TNR/FPR, PPV/FDR, NPV/FOR) produce bit-identical gaps.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    /// `None` when the denominator is zero.
    pub fn new(num: u64, den: u64) -> Option<Self> {
        (den > 0).then_some(Self { num, den })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

pub(crate) fn gap(a: Fraction, b: Fraction) -> f64 {
    let lhs = a.num as u128 * b.den as u128;
    let rhs = b.num as u128 * a.den as u128;
    let diff = lhs.abs_diff(rhs);
    if diff == 0 {
        return 0.0;
    }
    diff as f64 / (a.den as u128 * b.den as u128) as f64
}

/// Largest absolute difference over all unordered pairs.
pub(crate) fn max_pairwise_gap(values: &[Fraction]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max(gap(*a, *b));
        }
    }
    worst
}

pub(crate) fn max_pairwise_diff_f64(values: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}
