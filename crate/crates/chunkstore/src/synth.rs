//! Seeded synthetic corpora for desk-scale experiments.
//!
//! Two families: uniformly random pairs for structural and speed tests,
//! and phrase corpora, where each sentence concatenates multi-token
//! phrases drawn from a fixed bank and the source lists one topic token
//! per phrase. Phrase corpora give retrieval something real to exploit,
//! so they back the domain-adaptation experiments.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::vocab::{SentencePair, TokenId, Vocab, EOS, RESERVED};

/// Vocabulary of `n_words` generated word tokens (`w000`, `w001`, ...).
pub fn word_vocab(n_words: usize) -> Vocab {
    Vocab::new((0..n_words).map(|i| format!("w{i:03}"))).expect("generated vocab")
}

/// Vocabulary holding `n_topics` topic tokens followed by `n_words` word
/// tokens. Topic `i` is id `4 + i`, word `j` is id `4 + n_topics + j`.
pub fn topic_word_vocab(n_topics: usize, n_words: usize) -> Vocab {
    let topics = (0..n_topics).map(|i| format!("t{i:03}"));
    let words = (0..n_words).map(|i| format!("w{i:03}"));
    Vocab::new(topics.chain(words)).expect("generated vocab")
}

fn random_tokens(rng: &mut ChaCha8Rng, vocab: &Vocab, len: usize) -> Vec<TokenId> {
    let lo = RESERVED.len() as u32;
    let hi = vocab.size() as u32;
    (0..len).map(|_| TokenId(rng.random_range(lo..hi))).collect()
}

/// Random sentence pairs with source and target lengths drawn from the
/// given ranges (target length excludes the appended EOS).
pub fn random_pairs(
    vocab: &Vocab,
    n: usize,
    src_len: Range<usize>,
    tgt_len: Range<usize>,
    seed: u64,
) -> Vec<SentencePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let sl = rng.random_range(src_len.clone());
            let tl = rng.random_range(tgt_len.clone());
            let source = random_tokens(&mut rng, vocab, sl.max(1));
            let mut target = random_tokens(&mut rng, vocab, tl.max(1));
            target.push(EOS);
            SentencePair::new(source, target).expect("generated pair")
        })
        .collect()
}

/// Random source-side sentences only.
pub fn random_sources(vocab: &Vocab, n: usize, len: Range<usize>, seed: u64) -> Vec<Vec<TokenId>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let l = rng.random_range(len.clone());
            random_tokens(&mut rng, vocab, l.max(1))
        })
        .collect()
}

/// A fixed inventory of phrases, each announced by its own topic token.
#[derive(Clone, Debug)]
pub struct PhraseBank {
    pub topics: Vec<TokenId>,
    pub phrases: Vec<Vec<TokenId>>,
}

/// Builds one phrase per topic id, with phrase words drawn from
/// `word_ids` and lengths from `phrase_len`.
pub fn phrase_bank(
    topic_ids: Range<u32>,
    word_ids: Range<u32>,
    phrase_len: Range<usize>,
    seed: u64,
) -> PhraseBank {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topics: Vec<TokenId> = topic_ids.map(TokenId).collect();
    let phrases = topics
        .iter()
        .map(|_| {
            let len = rng.random_range(phrase_len.clone());
            (0..len)
                .map(|_| TokenId(rng.random_range(word_ids.clone())))
                .collect()
        })
        .collect();
    PhraseBank { topics, phrases }
}

/// Like [`phrase_bank`], but every word belongs to exactly one phrase,
/// so any n-gram pins down its phrase and position. Panics if the word
/// pool cannot cover all phrases.
pub fn disjoint_phrase_bank(
    topic_ids: Range<u32>,
    word_ids: Range<u32>,
    phrase_len: Range<usize>,
    seed: u64,
) -> PhraseBank {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topics: Vec<TokenId> = topic_ids.map(TokenId).collect();
    let mut pool: Vec<TokenId> = word_ids.map(TokenId).collect();
    pool.shuffle(&mut rng);
    let mut cursor = 0usize;
    let phrases = topics
        .iter()
        .map(|_| {
            let len = rng.random_range(phrase_len.clone());
            assert!(cursor + len <= pool.len(), "word pool exhausted");
            let phrase = pool[cursor..cursor + len].to_vec();
            cursor += len;
            phrase
        })
        .collect();
    PhraseBank { topics, phrases }
}

/// Knobs for phrase-corpus generation.
#[derive(Clone, Debug)]
pub struct PhraseCorpusParams {
    /// Phrases per sentence.
    pub phrases_per_sentence: Range<usize>,
    /// Chance that a slot repeats an earlier phrase of the same sentence.
    pub repeat_prob: f64,
    /// Chance that a target token is written twice, which breaks strict
    /// positional alignment between occurrences of the same phrase.
    pub duplicate_prob: f64,
}

impl Default for PhraseCorpusParams {
    fn default() -> Self {
        Self {
            phrases_per_sentence: 3..5,
            repeat_prob: 0.2,
            duplicate_prob: 0.08,
        }
    }
}

/// Generates sentences off a phrase bank: the source names the topics in
/// order, the target concatenates the corresponding phrases.
pub fn phrase_pairs(
    bank: &PhraseBank,
    n: usize,
    params: &PhraseCorpusParams,
    seed: u64,
) -> Vec<SentencePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let m = rng.random_range(params.phrases_per_sentence.clone()).max(1);
            let mut slots: Vec<usize> = Vec::with_capacity(m);
            for s in 0..m {
                if s > 0 && rng.random_bool(params.repeat_prob) {
                    let prior = slots[rng.random_range(0..slots.len())];
                    slots.push(prior);
                } else {
                    slots.push(rng.random_range(0..bank.phrases.len()));
                }
            }
            let source: Vec<TokenId> = slots.iter().map(|&i| bank.topics[i]).collect();
            let mut target = Vec::new();
            for &i in &slots {
                for &tok in &bank.phrases[i] {
                    target.push(tok);
                    if rng.random_bool(params.duplicate_prob) {
                        target.push(tok);
                    }
                }
            }
            target.push(EOS);
            SentencePair::new(source, target).expect("generated pair")
        })
        .collect()
}

/// Document-grouped phrase sentences: each consecutive group of
/// `sentences_per_doc` sentences draws its phrases from one small
/// per-document subset of the bank, the way sentences of a document
/// share vocabulary. Decoding such a group as one batch gives shared
/// caches real context to exploit.
pub fn document_phrase_pairs(
    bank: &PhraseBank,
    n_sentences: usize,
    sentences_per_doc: usize,
    phrases_per_doc: usize,
    params: &PhraseCorpusParams,
    seed: u64,
) -> Vec<SentencePair> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_sentences);
    while out.len() < n_sentences {
        let mut all: Vec<usize> = (0..bank.phrases.len()).collect();
        all.shuffle(&mut rng);
        let doc_phrases = &all[..phrases_per_doc.min(all.len())];
        for _ in 0..sentences_per_doc.min(n_sentences - out.len()) {
            let m = rng.random_range(params.phrases_per_sentence.clone()).max(1);
            let mut slots: Vec<usize> = Vec::with_capacity(m);
            for s in 0..m {
                if s > 0 && rng.random_bool(params.repeat_prob) {
                    slots.push(slots[rng.random_range(0..slots.len())]);
                } else {
                    slots.push(doc_phrases[rng.random_range(0..doc_phrases.len())]);
                }
            }
            let source: Vec<TokenId> = slots.iter().map(|&i| bank.topics[i]).collect();
            let mut target = Vec::new();
            for &i in &slots {
                for &tok in &bank.phrases[i] {
                    target.push(tok);
                    if rng.random_bool(params.duplicate_prob) {
                        target.push(tok);
                    }
                }
            }
            target.push(EOS);
            out.push(SentencePair::new(source, target).expect("generated pair"));
        }
    }
    out
}
