use faircompass_core::metrics::{confusion_from_labels, RateName};
use faircompass_core::{ConfusionMatrix, OutcomeLabel};
use num_rational::Ratio;
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = ConfusionMatrix> {
    (0u64..200, 0u64..200, 0u64..200, 0u64..200)
        .prop_filter("non-empty", |(a, b, c, d)| a + b + c + d > 0)
        .prop_map(|(tp, fn_, fp, tn)| ConfusionMatrix::new(tp, fn_, fp, tn))
}

fn labels() -> impl Strategy<Value = Vec<(OutcomeLabel, OutcomeLabel)>> {
    prop::collection::vec(
        (any::<bool>(), any::<bool>())
            .prop_map(|(t, p)| (OutcomeLabel::from_bit(t), OutcomeLabel::from_bit(p))),
        1..120,
    )
}

fn value(m: &ConfusionMatrix, name: RateName) -> Option<f64> {
    m.rates().unwrap().get(name).value()
}

proptest! {
    #[test]
    fn complements_are_exact(m in matrix()) {
        let one = Ratio::from_integer(1u128);
        let e = m.exact_rates().unwrap();
        let pairs = [
            (RateName::Tpr, RateName::Fnr),
            (RateName::Tnr, RateName::Fpr),
            (RateName::Acc, RateName::Mr),
            (RateName::Pr, RateName::Nr),
            (RateName::Ppv, RateName::Fdr),
            (RateName::Npv, RateName::For),
        ];
        for (a, b) in pairs {
            match (e.get(a), e.get(b)) {
                (Some(x), Some(y)) => prop_assert_eq!(x + y, one),
                (None, None) => {}
                other => prop_assert!(false, "{a}/{b} definedness differs: {other:?}"),
            }
            if let (Some(x), Some(y)) = (value(&m, a), value(&m, b)) {
                prop_assert!((x + y - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn base_rate_is_total_probability(m in matrix()) {
        let e = m.exact_rates().unwrap();
        if let (Some(pr), Some(ppv), Some(nr), Some(for_)) = (
            e.get(RateName::Pr), e.get(RateName::Ppv), e.get(RateName::Nr), e.get(RateName::For),
        ) {
            prop_assert_eq!(e.get(RateName::Br).unwrap(), pr * ppv + nr * for_);
        }
        let v = |n| value(&m, n);
        let pr = v(RateName::Pr).unwrap();
        let nr = v(RateName::Nr).unwrap();
        let term = |rate: Option<f64>, weight: f64| rate.map_or(0.0, |r| r * weight);
        // an undefined PPV or FOR only occurs when its weight is zero
        let decomposed = term(v(RateName::Ppv), pr) + term(v(RateName::For), nr);
        prop_assert!((v(RateName::Br).unwrap() - decomposed).abs() < 1e-12);
    }

    #[test]
    fn counting_ignores_record_order(pairs in labels(), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let split = |v: &[(OutcomeLabel, OutcomeLabel)]| -> (Vec<_>, Vec<_>) { v.iter().copied().unzip() };
        let (t1, p1) = split(&pairs);
        let (t2, p2) = split(&shuffled);
        let m = confusion_from_labels(&t1, &p1).unwrap();
        prop_assert_eq!(m, confusion_from_labels(&t2, &p2).unwrap());
        prop_assert_eq!(m.total(), pairs.len() as u64);
    }

    #[test]
    fn identity_predictions_are_perfect(pairs in labels()) {
        let y: Vec<OutcomeLabel> = pairs.iter().map(|p| p.0).collect();
        prop_assume!(y.iter().any(|l| l.is_positive()) && y.iter().any(|l| !l.is_positive()));
        let r = confusion_from_labels(&y, &y).unwrap().rates().unwrap();
        prop_assert_eq!(r.acc.value(), Some(1.0));
        prop_assert_eq!(r.mr.value(), Some(0.0));
    }

    #[test]
    fn rates_match_direct_division(m in matrix()) {
        let r = m.rates().unwrap();
        let total = m.total() as f64;
        prop_assert_eq!(r.br.value(), Some((m.tp + m.fn_) as f64 / total));
        prop_assert_eq!(r.acc.value(), Some((m.tp + m.tn) as f64 / total));
        let p = m.tp + m.fn_;
        prop_assert_eq!(r.tpr.value(), (p > 0).then(|| m.tp as f64 / p as f64));
    }
}
