mod common;

use std::collections::HashMap;

use proptest::prelude::*;

use common::{exhaustive_lcs, oracle_lcs, oracle_rouge_l, oracle_rouge_n};
use projsum::evalmetrics::{
    classification_metrics, keyword_topic_similarity, lcs_len, length_averaged_score,
    length_penalty, rouge_l, rouge_n, topic_overlap, RougeScore,
};
use projsum::svm::KeywordLexicon;
use projsum::Error;

fn tokens(max: usize, alphabet: u8) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec((0..alphabet).prop_map(|c| format!("t{c}")), 0..=max)
}

fn in_unit(s: &RougeScore) -> bool {
    [s.precision, s.recall, s.f1]
        .iter()
        .all(|v| (0.0..=1.0).contains(v))
}

proptest! {
    #[test]
    fn rouge_matches_naive_oracle(a in tokens(20, 5), b in tokens(20, 5), n in 1usize..=3) {
        prop_assert_eq!(rouge_n(&a, &b, n).unwrap(), oracle_rouge_n(&a, &b, n));
        prop_assert_eq!(rouge_l(&a, &b), oracle_rouge_l(&a, &b));
    }

    #[test]
    fn lcs_matches_exhaustive_search(a in tokens(10, 3), b in tokens(12, 3)) {
        let got = lcs_len(&a, &b);
        prop_assert_eq!(got, exhaustive_lcs(&a, &b));
        prop_assert_eq!(got, oracle_lcs(&b, &a));
    }

    #[test]
    fn rouge_scores_are_bounded(a in tokens(20, 8), b in tokens(20, 8), n in 1usize..=4) {
        prop_assert!(in_unit(&rouge_n(&a, &b, n).unwrap()));
        prop_assert!(in_unit(&rouge_l(&a, &b)));
    }

    #[test]
    fn self_overlap_is_perfect(a in tokens(20, 8), n in 1usize..=3) {
        prop_assume!(a.len() >= n);
        let s = rouge_n(&a, &a, n).unwrap();
        prop_assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        prop_assert_eq!(rouge_l(&a, &a).f1, 1.0);
    }

    #[test]
    fn renaming_tokens_changes_nothing(a in tokens(20, 6), b in tokens(20, 6), shift in 1u8..50) {
        let mut map = HashMap::new();
        let mut rename = |t: &Vec<String>| -> Vec<String> {
            t.iter()
                .map(|w| map.entry(w.clone()).or_insert_with(|| format!("x{}_{shift}", w.len() * 31 + w.as_bytes()[1] as usize)).clone())
                .collect()
        };
        let (ra, rb) = (rename(&a), rename(&b));
        for n in 1..=2 {
            prop_assert_eq!(rouge_n(&a, &b, n).unwrap(), rouge_n(&ra, &rb, n).unwrap());
        }
        prop_assert_eq!(rouge_l(&a, &b), rouge_l(&ra, &rb));
    }

    #[test]
    fn length_averaged_score_is_linear_and_decreasing(doc in 1usize..500, frac in 0.0f64..1.0, h in 0.0f64..5.0) {
        let sum = (doc as f64 * frac) as usize;
        let s = length_averaged_score(doc, sum, h).unwrap();
        let s2 = length_averaged_score(doc, sum, 2.0 * h).unwrap();
        prop_assert!((s2 - 2.0 * s).abs() < 1e-12);
        if sum < doc {
            prop_assert!(length_averaged_score(doc, sum + 1, h).unwrap() <= s);
        }
    }

    #[test]
    fn length_penalty_is_bounded_and_nonincreasing(orig in 1usize..1000, sum in 1usize..1000) {
        let p = length_penalty(orig, sum);
        prop_assert!(p > 0.0 && p <= 1.0);
        prop_assert!(length_penalty(orig, sum + 1) <= p);
    }

    #[test]
    fn keyword_similarity_is_bounded(a in tokens(40, 30), b in tokens(40, 30)) {
        let lex = KeywordLexicon::parse("health\tt1, t2, t3\nenergy\tt4, t5\nwater\tt6, t7, t8\n").unwrap();
        let s = keyword_topic_similarity(&a, &b, &lex, 2);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(keyword_topic_similarity(&a, &a, &lex, 2), 1.0);
    }
}

#[test]
fn keyword_similarity_examples() {
    let lex = KeywordLexicon::parse("health\tclinic, doctor\nenergy\tsolar, wind\n").unwrap();
    let t = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
    let original = t("clinic doctor solar wind");
    assert_eq!(
        keyword_topic_similarity(&original, &t("clinic doctor"), &lex, 2),
        0.5
    );
    assert_eq!(
        keyword_topic_similarity(&t("nothing here"), &t("clinic"), &lex, 2),
        1.0
    );
    assert_eq!(topic_overlap(&[0, 1].into(), &[1].into()), 0.5);
}

#[test]
fn classification_examples() {
    let mut pred = vec![1i8; 10];
    pred.extend([-1, -1]);
    let mut gold = vec![1i8; 8];
    gold.extend([-1, -1, 1, 1]);
    let m = classification_metrics(&pred, &gold).unwrap();
    assert!(
        (m.precision - 0.8).abs() < 1e-12
            && (m.recall - 0.8).abs() < 1e-12
            && (m.f1 - 0.8).abs() < 1e-12
    );
    let m = classification_metrics(&[-1, -1], &[1, -1]).unwrap();
    assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    assert!(matches!(
        classification_metrics(&[1], &[1, 1]),
        Err(Error::LengthMismatch { .. })
    ));
    assert!(matches!(rouge_n(&[], &[], 0), Err(Error::InvalidN(0))));
}
