//! Corpus BLEU: geometric mean of corpus-level modified n-gram
//! precisions (n = 1..4) times the exponential brevity penalty. No
//! smoothing; a zero precision at any order zeroes the score.

use std::collections::HashMap;
use std::hash::Hash;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BleuReport {
    /// 0..100.
    pub score: f64,
    /// Modified precisions p_1..p_4.
    pub precisions: [f64; 4],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

/// Corpus BLEU over parallel token sequences, one reference per hypothesis.
pub fn corpus_bleu<T: Eq + Hash>(hyps: &[Vec<T>], refs: &[Vec<T>]) -> Result<BleuReport> {
    if hyps.len() != refs.len() {
        return Err(Error::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut matched = [0u64; 4];
    let mut total = [0u64; 4];
    for (hyp, reference) in hyps.iter().zip(refs) {
        for n in 1..=4usize {
            if hyp.len() < n {
                continue;
            }
            let mut ref_counts: HashMap<&[T], u64> = HashMap::new();
            for gram in reference.windows(n) {
                *ref_counts.entry(gram).or_insert(0) += 1;
            }
            let mut hyp_counts: HashMap<&[T], u64> = HashMap::new();
            for gram in hyp.windows(n) {
                *hyp_counts.entry(gram).or_insert(0) += 1;
            }
            total[n - 1] += (hyp.len() - n + 1) as u64;
            for (gram, count) in hyp_counts {
                matched[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
            }
        }
    }

    let hyp_len: usize = hyps.iter().map(Vec::len).sum();
    let ref_len: usize = refs.iter().map(Vec::len).sum();
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };

    let mut precisions = [0.0f64; 4];
    for n in 0..4 {
        if total[n] > 0 {
            precisions[n] = matched[n] as f64 / total[n] as f64;
        }
    }

    let score = if precisions.contains(&0.0) {
        0.0
    } else {
        let mean_log: f64 = precisions.iter().map(|p| p.ln()).sum::<f64>() / 4.0;
        brevity_penalty * mean_log.exp() * 100.0
    };

    Ok(BleuReport {
        score,
        precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identical_corpora_score_100() {
        let sents = vec![toks("a b c d e"), toks("f g h i"), toks("a a b b c")];
        let report = corpus_bleu(&sents, &sents).unwrap();
        assert!((report.score - 100.0).abs() < 1e-12);
        assert_eq!(report.brevity_penalty, 1.0);
    }

    #[test]
    fn zero_fourgram_matches_zero_score() {
        let hyps = vec![toks("a b c x")];
        let refs = vec![toks("a b c d")];
        let report = corpus_bleu(&hyps, &refs).unwrap();
        assert_eq!(report.score, 0.0);
        assert!(report.precisions[0] > 0.0);
        assert_eq!(report.precisions[3], 0.0);
    }

    #[test]
    fn hand_computed_fixture() {
        // Pair 1 matches exactly. Pair 2 is a 3-token prefix of a 4-token
        // reference. Pair 3 exercises clipping: hyp "a b a b a" against
        // ref "a b a a b".
        //   p1 = (6+3+5)/(6+3+5) = 14/14
        //   p2 = (5+2+3)/(5+2+4) = 10/11   (clip: "a b"x2, "b a"x1)
        //   p3 = (4+1+1)/(4+1+3) = 6/8     (clip: "a b a"x1)
        //   p4 = (3+0+0)/(3+0+2) = 3/5     (pair 2 has no 4-grams)
        //   BP = exp(1 - 15/14)
        //   BLEU = BP * exp((ln p1 + ln p2 + ln p3 + ln p4)/4) * 100
        let hyps = vec![toks("the cat sat on the mat"), toks("the dog ran"), toks("a b a b a")];
        let refs = vec![
            toks("the cat sat on the mat"),
            toks("the dog ran fast"),
            toks("a b a a b"),
        ];
        let report = corpus_bleu(&hyps, &refs).unwrap();
        assert!((report.precisions[0] - 1.0).abs() < 1e-12);
        assert!((report.precisions[1] - 10.0 / 11.0).abs() < 1e-12);
        assert!((report.precisions[2] - 6.0 / 8.0).abs() < 1e-12);
        assert!((report.precisions[3] - 3.0 / 5.0).abs() < 1e-12);
        assert!((report.brevity_penalty - (-1.0f64 / 14.0).exp()).abs() < 1e-12);
        assert!(
            (report.score - 74.4618672649805).abs() < 1e-6,
            "got {}",
            report.score
        );
        assert_eq!(report.hyp_len, 14);
        assert_eq!(report.ref_len, 15);
    }

    #[test]
    fn errors() {
        let a = vec![toks("a b")];
        assert!(matches!(
            corpus_bleu(&a, &[]),
            Err(Error::LengthMismatch { .. })
        ));
        let empty: Vec<Vec<&str>> = Vec::new();
        assert!(matches!(corpus_bleu(&empty, &empty), Err(Error::EmptyCorpus)));
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed in 0u64..500) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let hyps = vec![
                toks("a b c d e f"),
                toks("b c d"),
                toks("a a b c d x"),
                toks("e f a b c d"),
            ];
            let refs = vec![
                toks("a b c d e g"),
                toks("b c d e"),
                toks("a b c d x"),
                toks("e f a b c d"),
            ];
            let base = corpus_bleu(&hyps, &refs).unwrap();
            let mut order: Vec<usize> = (0..hyps.len()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let h2: Vec<_> = order.iter().map(|&i| hyps[i].clone()).collect();
            let r2: Vec<_> = order.iter().map(|&i| refs[i].clone()).collect();
            let shuffled = corpus_bleu(&h2, &r2).unwrap();
            prop_assert!((base.score - shuffled.score).abs() < 1e-9);
        }
    }
}
