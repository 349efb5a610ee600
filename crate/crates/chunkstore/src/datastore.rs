//! The chunk-valued datastore.
//!
//! One entry per target position of every corpus pair: the key is the
//! PCA-reduced decoder state at that position, the value is the chunk of
//! the next `c` target tokens (PAD-completed at sentence end), and each
//! chunk position carries a reference into a shared array of
//! cache-reduced decoder states so the neighbors' cache can be filled
//! without re-running the model. Chunks from one sentence are sliding
//! windows: consecutive entries overlap in `c-1` positions.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::TranslationModel;
use crate::pca::{fit_pca, PcaTransform};
use crate::vocab::{SentencePair, TokenId, BOS, PAD};
use crate::{Error, Result};

/// State reference stored at PAD chunk positions.
pub const PAD_STATE_REF: u64 = u64::MAX;

/// Seed for the PCA fitting sample, fixed so builds are reproducible.
const PCA_SAMPLE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

const MAGIC: [u8; 4] = *b"CKDS";
const VERSION: u32 = 1;

/// Borrowed view of one entry's value.
#[derive(Clone, Copy, Debug)]
pub struct ChunkRef<'a> {
    pub tokens: &'a [u32],
    pub state_refs: &'a [u64],
}

impl ChunkRef<'_> {
    pub fn first_token(&self) -> TokenId {
        TokenId(self.tokens[0])
    }
}

/// Build-time parameters. Desk-scale defaults assume `d_full = 64`; the
/// reference configuration for 1024-dimensional models is `d_key = 256`,
/// `d_cache = 64`.
#[derive(Clone, Copy, Debug)]
pub struct BuildParams {
    pub c: usize,
    pub d_key: usize,
    pub d_cache: usize,
    /// Upper bound on raw states used to fit the two PCA transforms.
    pub pca_sample: usize,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            c: 16,
            d_key: 32,
            d_cache: 16,
            pca_sample: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Datastore {
    d_full: usize,
    d_key: usize,
    d_cache: usize,
    c: usize,
    /// `entry_count x d_key`, row-major.
    keys: Vec<f32>,
    /// `entry_count x c` token ids.
    values: Vec<u32>,
    /// `entry_count x c` indices into `state_array`, PAD positions sentinel.
    state_refs: Vec<u64>,
    /// `state_count x d_cache`, row-major.
    state_array: Vec<f32>,
    pca_key: PcaTransform,
    pca_cache: PcaTransform,
    /// Entry offsets at which appended segments begin. First epoch starts at 0.
    epochs: Vec<u64>,
}

impl Datastore {
    pub fn entry_count(&self) -> usize {
        self.values.len() / self.c
    }

    pub fn state_count(&self) -> usize {
        self.state_array.len() / self.d_cache
    }

    pub fn chunk_size(&self) -> usize {
        self.c
    }

    pub fn d_full(&self) -> usize {
        self.d_full
    }

    pub fn d_key(&self) -> usize {
        self.d_key
    }

    pub fn d_cache(&self) -> usize {
        self.d_cache
    }

    pub fn key(&self, entry: usize) -> &[f32] {
        &self.keys[entry * self.d_key..(entry + 1) * self.d_key]
    }

    pub fn chunk(&self, entry: usize) -> ChunkRef<'_> {
        let lo = entry * self.c;
        let hi = lo + self.c;
        ChunkRef {
            tokens: &self.values[lo..hi],
            state_refs: &self.state_refs[lo..hi],
        }
    }

    pub fn state(&self, state_ref: u64) -> &[f32] {
        let i = state_ref as usize * self.d_cache;
        &self.state_array[i..i + self.d_cache]
    }

    pub fn pca_key(&self) -> &PcaTransform {
        &self.pca_key
    }

    pub fn pca_cache(&self) -> &PcaTransform {
        &self.pca_cache
    }

    pub fn epochs(&self) -> &[u64] {
        &self.epochs
    }
}

/// Builds a datastore by forced decoding over the corpus.
///
/// The PCA transforms are fitted once, on a uniform sample of up to
/// `pca_sample` raw states, and reused verbatim by later appends so keys
/// stay comparable across epochs. Entry order follows corpus order.
pub fn build_datastore(
    model: &dyn TranslationModel,
    corpus: &[SentencePair],
    params: &BuildParams,
) -> Result<Datastore> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if params.c == 0 {
        return Err(Error::ChunkSizeZero);
    }
    let d_full = model.state_dim();
    for d in [params.d_key, params.d_cache] {
        if d > d_full {
            return Err(Error::ReducedDimExceedsFull {
                reduced: d,
                full: d_full,
            });
        }
    }

    let total_positions: usize = corpus.iter().map(SentencePair::target_len).sum();
    let sample_positions = sample_indices(total_positions, params.pca_sample);
    let samples = collect_states_at(model, corpus, &sample_positions)?;
    let pca_key = fit_pca(&samples, params.d_key)?.transform;
    let pca_cache = fit_pca(&samples, params.d_cache)?.transform;
    drop(samples);

    let mut ds = Datastore {
        d_full,
        d_key: params.d_key,
        d_cache: params.d_cache,
        c: params.c,
        keys: Vec::with_capacity(total_positions * params.d_key),
        values: Vec::with_capacity(total_positions * params.c),
        state_refs: Vec::with_capacity(total_positions * params.c),
        state_array: Vec::with_capacity(total_positions * params.d_cache),
        pca_key,
        pca_cache,
        epochs: vec![0],
    };
    extend_with_pairs(&mut ds, model, corpus)?;
    Ok(ds)
}

/// Appends new pairs as a fresh epoch, reusing the fitted PCAs.
/// Existing entries are untouched.
pub fn append_examples(
    ds: &mut Datastore,
    model: &dyn TranslationModel,
    pairs: &[SentencePair],
) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::EmptyAppend);
    }
    ds.epochs.push(ds.entry_count() as u64);
    extend_with_pairs(ds, model, pairs)
}

fn extend_with_pairs(
    ds: &mut Datastore,
    model: &dyn TranslationModel,
    pairs: &[SentencePair],
) -> Result<()> {
    let c = ds.c;
    for pair in pairs {
        let ctx = model.encode(&pair.source);
        let n = pair.target.len();
        let state_base = ds.state_count() as u64;
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(BOS);
        for t in 0..n {
            let (state, _) = model.decoder_step(&ctx, &prefix)?;
            ds.keys.extend(ds.pca_key.apply(&state)?);
            ds.state_array.extend(ds.pca_cache.apply(&state)?);
            for i in 0..c {
                if t + i < n {
                    ds.values.push(pair.target[t + i].0);
                    ds.state_refs.push(state_base + (t + i) as u64);
                } else {
                    ds.values.push(PAD.0);
                    ds.state_refs.push(PAD_STATE_REF);
                }
            }
            prefix.push(pair.target[t]);
        }
    }
    Ok(())
}

/// Uniform sample of `count` distinct indices out of `0..total`, sorted.
fn sample_indices(total: usize, count: usize) -> Vec<usize> {
    if count >= total {
        return (0..total).collect();
    }
    // Partial Fisher-Yates over a virtual 0..total array.
    let mut rng = ChaCha8Rng::seed_from_u64(PCA_SAMPLE_SEED);
    let mut swaps: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    let mut picked = Vec::with_capacity(count);
    for i in 0..count {
        let j = rng.random_range(i..total);
        let vj = *swaps.get(&j).unwrap_or(&j);
        let vi = *swaps.get(&i).unwrap_or(&i);
        picked.push(vj);
        swaps.insert(j, vi);
    }
    picked.sort_unstable();
    picked
}

/// Computes raw decoder states at the given global positions, where a
/// global position counts target positions in corpus order.
fn collect_states_at(
    model: &dyn TranslationModel,
    corpus: &[SentencePair],
    positions: &[usize],
) -> Result<Vec<Vec<f32>>> {
    let mut states = Vec::with_capacity(positions.len());
    let mut cursor = 0usize;
    let mut base = 0usize;
    for pair in corpus {
        let n = pair.target.len();
        let end = base + n;
        if cursor < positions.len() && positions[cursor] < end {
            let ctx = model.encode(&pair.source);
            let mut prefix = Vec::with_capacity(n + 1);
            prefix.push(BOS);
            for t in 0..n {
                if cursor < positions.len() && positions[cursor] == base + t {
                    let (state, _) = model.decoder_step(&ctx, &prefix)?;
                    states.push(state);
                    cursor += 1;
                }
                prefix.push(pair.target[t]);
            }
        }
        base = end;
        if cursor == positions.len() {
            break;
        }
    }
    Ok(states)
}

pub fn save(ds: &Datastore, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(ds, &mut w)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Datastore> {
    let mut r = BufReader::new(File::open(path)?);
    read_from(&mut r)
}

pub fn to_bytes(ds: &Datastore) -> Vec<u8> {
    let mut buf = Vec::new();
    write_to(ds, &mut buf).expect("in-memory write");
    buf
}

pub fn write_to<W: Write>(ds: &Datastore, w: &mut W) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(ds.d_full as u32)?;
    w.write_u32::<LittleEndian>(ds.d_key as u32)?;
    w.write_u32::<LittleEndian>(ds.d_cache as u32)?;
    w.write_u32::<LittleEndian>(ds.c as u32)?;
    w.write_u64::<LittleEndian>(ds.entry_count() as u64)?;
    w.write_u64::<LittleEndian>(ds.state_count() as u64)?;
    w.write_u32::<LittleEndian>(ds.epochs.len() as u32)?;
    write_pca(w, &ds.pca_key)?;
    write_pca(w, &ds.pca_cache)?;
    write_f32s(w, &ds.keys)?;
    for &v in &ds.values {
        w.write_u32::<LittleEndian>(v)?;
    }
    for &r in &ds.state_refs {
        w.write_u64::<LittleEndian>(r)?;
    }
    write_f32s(w, &ds.state_array)?;
    for &e in &ds.epochs {
        w.write_u64::<LittleEndian>(e)?;
    }
    Ok(())
}

pub fn read_from<R: Read>(r: &mut R) -> Result<Datastore> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::TruncatedFile { context: "datastore header" })?;
    if magic != MAGIC {
        return Err(Error::BadMagic { expected: MAGIC });
    }
    let version = read_u32(r, "datastore version")?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            expected: VERSION,
            got: version,
        });
    }
    let d_full = read_u32(r, "datastore dims")? as usize;
    let d_key = read_u32(r, "datastore dims")? as usize;
    let d_cache = read_u32(r, "datastore dims")? as usize;
    let c = read_u32(r, "datastore chunk size")? as usize;
    let entry_count = read_u64(r, "datastore counts")? as usize;
    let state_count = read_u64(r, "datastore counts")? as usize;
    let epoch_count = read_u32(r, "datastore counts")? as usize;
    if c == 0 {
        return Err(Error::ChunkSizeZero);
    }

    let pca_key = read_pca(r, d_full, d_key)?;
    let pca_cache = read_pca(r, d_full, d_cache)?;
    let keys = read_f32s(r, entry_count * d_key, "datastore keys")?;
    let mut values = Vec::with_capacity(entry_count * c);
    for _ in 0..entry_count * c {
        values.push(read_u32(r, "datastore values")?);
    }
    let mut state_refs = Vec::with_capacity(entry_count * c);
    for _ in 0..entry_count * c {
        state_refs.push(read_u64(r, "datastore state refs")?);
    }
    let state_array = read_f32s(r, state_count * d_cache, "datastore state array")?;
    let mut epochs = Vec::with_capacity(epoch_count);
    for _ in 0..epoch_count {
        epochs.push(read_u64(r, "datastore epochs")?);
    }

    Ok(Datastore {
        d_full,
        d_key,
        d_cache,
        c,
        keys,
        values,
        state_refs,
        state_array,
        pca_key,
        pca_cache,
        epochs,
    })
}

/// Number of bytes the serialized form of `ds` occupies, used to locate
/// trailing sections in a datastore file.
pub fn serialized_len(ds: &Datastore) -> u64 {
    let header = 4 + 4 + 4 * 4 + 8 + 8 + 4;
    let pca = |d_out: usize| 4 * (ds.d_full + d_out * ds.d_full) as u64;
    header as u64
        + pca(ds.d_key)
        + pca(ds.d_cache)
        + 4 * ds.keys.len() as u64
        + 4 * ds.values.len() as u64
        + 8 * ds.state_refs.len() as u64
        + 4 * ds.state_array.len() as u64
        + 8 * ds.epochs.len() as u64
}

fn write_pca<W: Write>(w: &mut W, pca: &PcaTransform) -> Result<()> {
    write_f32s(w, pca.mean())?;
    write_f32s(w, pca.projection())?;
    Ok(())
}

fn read_pca<R: Read>(r: &mut R, d_in: usize, d_out: usize) -> Result<PcaTransform> {
    let mean = read_f32s(r, d_in, "PCA mean")?;
    let projection = read_f32s(r, d_out * d_in, "PCA projection")?;
    Ok(PcaTransform::new(d_in, d_out, mean, projection))
}

fn write_f32s<W: Write>(w: &mut W, xs: &[f32]) -> Result<()> {
    for &x in xs {
        w.write_f32::<LittleEndian>(x)?;
    }
    Ok(())
}

fn read_f32s<R: Read>(r: &mut R, n: usize, context: &'static str) -> Result<Vec<f32>> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(
            r.read_f32::<LittleEndian>()
                .map_err(|_| Error::TruncatedFile { context })?,
        );
    }
    Ok(out)
}

fn read_u32<R: Read>(r: &mut R, context: &'static str) -> Result<u32> {
    r.read_u32::<LittleEndian>()
        .map_err(|_| Error::TruncatedFile { context })
}

fn read_u64<R: Read>(r: &mut R, context: &'static str) -> Result<u64> {
    r.read_u64::<LittleEndian>()
        .map_err(|_| Error::TruncatedFile { context })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ToyModel;
    use crate::prob::sq_l2_raw;
    use crate::synth;
    use crate::vocab::EOS;

    fn tid(i: u32) -> TokenId {
        TokenId(i)
    }

    fn model_for(corpus: &[SentencePair], vocab_size: usize) -> ToyModel {
        ToyModel::train(corpus, vocab_size, 1, 0.1, 16).unwrap()
    }

    fn small_params(c: usize) -> BuildParams {
        BuildParams {
            c,
            d_key: 8,
            d_cache: 4,
            pca_sample: 10_000,
        }
    }

    /// For corpora with only a handful of positions to sample from.
    fn tiny_params(c: usize) -> BuildParams {
        BuildParams {
            c,
            d_key: 2,
            d_cache: 2,
            pca_sample: 10_000,
        }
    }

    #[test]
    fn chunks_follow_padding_rule() {
        // target "a b c </s>" with c=2 gives [a,b],[b,c],[c,</s>],[</s>,PAD]
        let corpus =
            vec![SentencePair::new(vec![tid(4)], vec![tid(4), tid(5), tid(6), EOS]).unwrap()];
        let model = model_for(&corpus, 8);
        let ds = build_datastore(&model, &corpus, &tiny_params(2)).unwrap();
        assert_eq!(ds.entry_count(), 4);
        let expect = [[4, 5], [5, 6], [6, EOS.0], [EOS.0, PAD.0]];
        for (entry, want) in expect.iter().enumerate() {
            assert_eq!(ds.chunk(entry).tokens, want);
        }
        let last = ds.chunk(3);
        assert_ne!(last.state_refs[0], PAD_STATE_REF);
        assert_eq!(last.state_refs[1], PAD_STATE_REF);
    }

    #[test]
    fn degenerate_chunk_size_one() {
        let corpus =
            vec![SentencePair::new(vec![tid(4)], vec![tid(4), tid(5), EOS]).unwrap()];
        let model = model_for(&corpus, 8);
        let ds = build_datastore(&model, &corpus, &tiny_params(1)).unwrap();
        assert_eq!(ds.entry_count(), 3);
        for (entry, want) in [[4u32], [5], [EOS.0]].iter().enumerate() {
            assert_eq!(ds.chunk(entry).tokens, want);
        }
    }

    #[test]
    fn entry_count_and_overlap_match_corpus_scan() {
        let vocab = synth::word_vocab(30);
        let corpus = synth::random_pairs(&vocab, 100, 2..6, 3..12, 42);
        let model = model_for(&corpus, vocab.size());
        let c = 3;
        let ds = build_datastore(&model, &corpus, &small_params(c)).unwrap();

        // Independent recount straight off the corpus.
        let expected: usize = corpus.iter().map(|p| p.target.len()).sum();
        assert_eq!(ds.entry_count(), expected);
        assert_eq!(ds.state_count(), expected);

        let mut entry = 0;
        for pair in &corpus {
            let n = pair.target.len();
            for t in 0..n {
                let chunk = ds.chunk(entry + t);
                for i in 0..c {
                    let want = if t + i < n { pair.target[t + i].0 } else { PAD.0 };
                    assert_eq!(chunk.tokens[i], want);
                }
                if t + 1 < n {
                    let next = ds.chunk(entry + t + 1);
                    assert_eq!(&chunk.tokens[1..], &next.tokens[..c - 1]);
                }
            }
            entry += n;
        }
    }

    #[test]
    fn pad_never_precedes_tokens() {
        let vocab = synth::word_vocab(20);
        let corpus = synth::random_pairs(&vocab, 40, 1..4, 1..9, 7);
        let model = model_for(&corpus, vocab.size());
        let ds = build_datastore(&model, &corpus, &small_params(4)).unwrap();
        for entry in 0..ds.entry_count() {
            let chunk = ds.chunk(entry);
            let mut seen_pad = false;
            for (i, &tok) in chunk.tokens.iter().enumerate() {
                if tok == PAD.0 {
                    seen_pad = true;
                    assert_eq!(chunk.state_refs[i], PAD_STATE_REF);
                } else {
                    assert!(!seen_pad, "PAD before token in entry {entry}");
                    assert_ne!(chunk.state_refs[i], PAD_STATE_REF);
                }
            }
        }
    }

    #[test]
    fn keys_match_recomputed_states() {
        let vocab = synth::word_vocab(20);
        let corpus = synth::random_pairs(&vocab, 20, 2..5, 3..8, 3);
        let model = model_for(&corpus, vocab.size());
        let ds = build_datastore(&model, &corpus, &small_params(2)).unwrap();
        let mut entry = 0;
        for pair in &corpus {
            let ctx = model.encode(&pair.source);
            let mut prefix = vec![BOS];
            for t in 0..pair.target.len() {
                let (state, _) = model.decoder_step(&ctx, &prefix).unwrap();
                let key = ds.pca_key().apply(&state).unwrap();
                assert!(sq_l2_raw(&key, ds.key(entry)) <= 1e-6);
                prefix.push(pair.target[t]);
                entry += 1;
            }
        }
    }

    #[test]
    fn append_grows_and_preserves() {
        let vocab = synth::word_vocab(20);
        let corpus = synth::random_pairs(&vocab, 30, 2..5, 3..8, 11);
        let model = model_for(&corpus, vocab.size());
        let mut ds = build_datastore(&model, &corpus, &small_params(2)).unwrap();
        let before = ds.clone();

        let extra =
            vec![SentencePair::new(vec![tid(4)], vec![tid(5), tid(6), tid(7), tid(8), EOS]).unwrap()];
        append_examples(&mut ds, &model, &extra).unwrap();
        assert_eq!(ds.entry_count(), before.entry_count() + 5);
        assert_eq!(ds.epochs(), &[0, before.entry_count() as u64]);

        // Old entries byte-identical.
        for entry in 0..before.entry_count() {
            assert_eq!(ds.key(entry), before.key(entry));
            assert_eq!(ds.chunk(entry).tokens, before.chunk(entry).tokens);
        }

        // The appended key is retrievable at distance zero.
        let ctx = model.encode(&extra[0].source);
        let (state, _) = model.decoder_step(&ctx, &[BOS]).unwrap();
        let query = ds.pca_key().apply(&state).unwrap();
        let first_new = before.entry_count();
        assert_eq!(sq_l2_raw(&query, ds.key(first_new)), 0.0);
    }

    #[test]
    fn append_twice_equals_append_once_except_epochs() {
        let vocab = synth::word_vocab(20);
        let base = synth::random_pairs(&vocab, 10, 2..5, 3..8, 5);
        let extra_a = synth::random_pairs(&vocab, 4, 2..5, 3..8, 6);
        let extra_b = synth::random_pairs(&vocab, 4, 2..5, 3..8, 7);
        let model = model_for(&base, vocab.size());

        let mut twice = build_datastore(&model, &base, &small_params(2)).unwrap();
        append_examples(&mut twice, &model, &extra_a).unwrap();
        append_examples(&mut twice, &model, &extra_b).unwrap();

        let mut once = build_datastore(&model, &base, &small_params(2)).unwrap();
        let combined: Vec<_> = extra_a.iter().chain(&extra_b).cloned().collect();
        append_examples(&mut once, &model, &combined).unwrap();

        assert_ne!(twice.epochs(), once.epochs());
        let strip = |ds: &Datastore| {
            let mut ds = ds.clone();
            ds.epochs = vec![0];
            to_bytes(&ds)
        };
        assert_eq!(strip(&twice), strip(&once));
    }

    #[test]
    fn empty_append_rejected() {
        let vocab = synth::word_vocab(20);
        let corpus = synth::random_pairs(&vocab, 5, 2..5, 3..8, 5);
        let model = model_for(&corpus, vocab.size());
        let mut ds = build_datastore(&model, &corpus, &small_params(2)).unwrap();
        assert!(matches!(
            append_examples(&mut ds, &model, &[]),
            Err(Error::EmptyAppend)
        ));
    }

    #[test]
    fn build_rejects_bad_params() {
        let vocab = synth::word_vocab(20);
        let corpus = synth::random_pairs(&vocab, 5, 2..5, 3..8, 5);
        let model = model_for(&corpus, vocab.size());
        assert!(matches!(
            build_datastore(&model, &[], &small_params(2)),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            build_datastore(&model, &corpus, &small_params(0)),
            Err(Error::ChunkSizeZero)
        ));
        let bad = BuildParams {
            d_key: 64,
            ..small_params(2)
        };
        assert!(matches!(
            build_datastore(&model, &corpus, &bad),
            Err(Error::ReducedDimExceedsFull { .. })
        ));
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let vocab = synth::word_vocab(20);
        let corpus = synth::random_pairs(&vocab, 10, 2..5, 3..8, 9);
        let model = model_for(&corpus, vocab.size());
        let ds = build_datastore(&model, &corpus, &small_params(3)).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.ckds");
        save(&ds, &path).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(ds, loaded);
        assert_eq!(to_bytes(&ds), to_bytes(&loaded));
        assert_eq!(
            std::fs::metadata(&path).unwrap().len(),
            serialized_len(&ds)
        );
    }

    #[test]
    fn corrupt_and_truncated_files_rejected() {
        let vocab = synth::word_vocab(20);
        let corpus = synth::random_pairs(&vocab, 5, 2..5, 3..8, 9);
        let model = model_for(&corpus, vocab.size());
        let ds = build_datastore(&model, &corpus, &small_params(2)).unwrap();
        let bytes = to_bytes(&ds);

        let mut corrupt = bytes.clone();
        corrupt[0] = b'Z';
        assert!(matches!(
            read_from(&mut corrupt.as_slice()),
            Err(Error::BadMagic { .. })
        ));

        let mut versioned = bytes.clone();
        versioned[4] = 99;
        assert!(matches!(
            read_from(&mut versioned.as_slice()),
            Err(Error::VersionMismatch { .. })
        ));

        // Cut inside the key block.
        let cut = 4 + 4 + 16 + 8 + 8 + 4 + 8;
        assert!(matches!(
            read_from(&mut &bytes[..cut]),
            Err(Error::TruncatedFile { .. })
        ));
    }
}
