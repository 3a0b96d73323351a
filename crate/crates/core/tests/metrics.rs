//! Corpus metrics checked against a position-by-position recount.

use cec_core::metrics::Counts;
use cec_core::{evaluate_corpus, normalize_prediction, MetricsReport, RawTriple, Sentence};
use proptest::prelude::*;

#[derive(Default, Debug, PartialEq)]
struct Tally {
    cd: [u64; 3],
    cc: [u64; 3],
    sd: [u64; 3],
    sc: [u64; 3],
}

/// Recounts every family with explicit loops over positions.
fn oracle(triples: &[RawTriple]) -> Tally {
    let mut t = Tally::default();
    for raw in triples {
        let s: Vec<char> = raw.source.chars().collect();
        let r: Vec<char> = raw.reference.chars().collect();
        if s.len() != r.len() {
            continue;
        }
        let p: Vec<char> =
            normalize_prediction(&Sentence::new(raw.source.as_str()), &Sentence::new(raw.prediction.as_str()))
                .chars()
                .to_vec();
        let (mut any_gold, mut any_pred, mut same_positions) = (false, false, true);
        for i in 0..s.len() {
            let g = r[i] != s[i];
            let d = p[i] != s[i];
            any_gold |= g;
            any_pred |= d;
            same_positions &= g == d;
            match (g, d) {
                (true, true) => {
                    t.cd[0] += 1;
                    if p[i] == r[i] {
                        t.cc[0] += 1;
                    } else {
                        t.cc[1] += 1;
                        t.cc[2] += 1;
                    }
                }
                (false, true) => {
                    t.cd[1] += 1;
                    t.cc[1] += 1;
                }
                (true, false) => {
                    t.cd[2] += 1;
                    t.cc[2] += 1;
                }
                (false, false) => {}
            }
        }
        let fixed = p == r;
        if any_gold && same_positions {
            t.sd[0] += 1;
        }
        if any_pred && !same_positions {
            t.sd[1] += 1;
        }
        if any_gold && !same_positions {
            t.sd[2] += 1;
        }
        if any_pred {
            t.sc[if fixed { 0 } else { 1 }] += 1;
        }
        if any_gold && !fixed {
            t.sc[2] += 1;
        }
    }
    t
}

fn tally_of(report: &MetricsReport) -> Tally {
    let c = |s: &cec_core::metrics::Score| [s.tp, s.fp, s.fn_];
    Tally {
        cd: c(&report.char_detection),
        cc: c(&report.char_correction),
        sd: c(&report.sentence_detection),
        sc: c(&report.sentence_correction),
    }
}

fn triple(s: &str, r: &str, p: &str) -> RawTriple {
    RawTriple { source: s.into(), reference: r.into(), prediction: p.into() }
}

#[test]
fn three_triple_corpus_scores_half_everywhere() {
    let corpus = [
        triple("今天天汽很好", "今天天气很好", "今天天气很好"),
        triple("我爱北京", "我爱北京", "我爱南京"),
        triple("他在学效", "他在学校", "他在学效"),
    ];
    let report = evaluate_corpus(&corpus);
    assert_eq!(report.size, 3);
    for (name, s) in report.families() {
        assert_eq!((s.tp, s.fp, s.fn_), (1, 1, 1), "{name}");
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5), "{name}");
    }
}

#[test]
fn equal_length_prediction_is_positional() {
    // a shift is cheaper to align than three substitutions, but an
    // equal-length prediction is never realigned
    let report = evaluate_corpus(&[triple("天好气天", "天天好气", "天天好气")]);
    assert_eq!((report.char_correction.tp, report.char_correction.fn_), (3, 0));
    assert_eq!(report.sentence_correction.tp, 1);
}

#[test]
fn zero_denominators_score_zero() {
    let c = Counts::new(0, 0, 0);
    assert_eq!((c.precision(), c.recall(), c.f1()), (0.0, 0.0, 0.0));
    let report = evaluate_corpus(&[]);
    assert_eq!(report.size, 0);
    assert!(report.families().iter().all(|(_, s)| s.f1 == 0.0));
}

#[test]
fn length_violations_are_skipped() {
    let report =
        evaluate_corpus(&[triple("今天天汽", "今天天气很", "今天天气"), triple("今天天汽", "今天天气", "今天天气")]);
    assert_eq!((report.size, report.skipped), (1, 1));
    assert_eq!(report.char_correction.tp, 1);
}

#[test]
fn unequal_length_prediction_is_normalized() {
    // the trailing insertion is its own span and is dropped
    let report = evaluate_corpus(&[triple("预溜紧急", "预留紧急", "预留紧急啊")]);
    assert_eq!(report.char_detection.tp, 1);
    assert_eq!(report.sentence_correction.tp, 1);
}

const ALPHABET: [char; 5] = ['天', '气', '汽', '很', '好'];

fn corpus() -> impl Strategy<Value = Vec<RawTriple>> {
    let ch = prop::sample::select(ALPHABET.to_vec());
    let one = (1usize..=6).prop_flat_map(move |n| {
        (
            prop::collection::vec(ch.clone(), n),
            prop::collection::vec(ch.clone(), n),
            prop::collection::vec(ch.clone(), n.saturating_sub(1)..=n + 1),
            prop::collection::vec(prop::bool::weighted(0.7), n),
        )
            .prop_map(|(s, r, p, keep)| {
                // keep most reference characters equal to the source
                let r: String = s.iter().zip(&r).zip(&keep).map(|((a, b), k)| if *k { *a } else { *b }).collect();
                RawTriple { source: s.into_iter().collect(), reference: r, prediction: p.into_iter().collect() }
            })
    });
    prop::collection::vec(one, 0..=10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn counts_match_oracle(corpus in corpus()) {
        prop_assert_eq!(tally_of(&evaluate_corpus(&corpus)), oracle(&corpus));
    }

    #[test]
    fn perfect_predictor_is_perfect(corpus in corpus()) {
        let perfect: Vec<RawTriple> = corpus
            .iter()
            .map(|t| triple(&t.source, &t.reference, &t.reference))
            .collect();
        let report = evaluate_corpus(&perfect);
        for (name, s) in report.families() {
            prop_assert_eq!(s.fp, 0, "{}", name);
            prop_assert_eq!(s.fn_, 0, "{}", name);
        }
    }

    #[test]
    fn identity_predictor_finds_nothing(corpus in corpus()) {
        let identity: Vec<RawTriple> = corpus
            .iter()
            .map(|t| triple(&t.source, &t.reference, &t.source))
            .collect();
        let report = evaluate_corpus(&identity);
        for (name, s) in report.families() {
            prop_assert_eq!(s.tp, 0, "{}", name);
            prop_assert_eq!(s.fp, 0, "{}", name);
        }
    }

    #[test]
    fn true_negatives_change_nothing(corpus in corpus(), extra in "[天气很好]{1,6}") {
        let base = tally_of(&evaluate_corpus(&corpus));
        let mut padded = corpus.clone();
        padded.push(triple(&extra, &extra, &extra));
        prop_assert_eq!(tally_of(&evaluate_corpus(&padded)), base);
    }

    #[test]
    fn order_does_not_matter(corpus in corpus(), seed in any::<u64>()) {
        let mut shuffled = corpus.clone();
        let mut rng = cec_core::SplitMix64::new(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.next_below(i as u64 + 1) as usize);
        }
        prop_assert_eq!(tally_of(&evaluate_corpus(&shuffled)), tally_of(&evaluate_corpus(&corpus)));
    }
}
