//! Vocabularies, token ids, and parallel corpora.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Index into a [`Vocab`]. Dense, starting at 0.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub const PAD: TokenId = TokenId(0);
pub const BOS: TokenId = TokenId(1);
pub const EOS: TokenId = TokenId(2);
pub const UNK: TokenId = TokenId(3);

pub const RESERVED: [&str; 4] = ["<pad>", "<s>", "</s>", "<unk>"];

/// Ordered token inventory with the four reserved ids fixed up front.
#[derive(Clone, Debug)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl Vocab {
    /// Builds a vocab from the non-reserved surface strings, in order.
    pub fn new<I, S>(extra: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        tokens.extend(extra.into_iter().map(Into::into));
        Self::from_tokens(tokens)
    }

    fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < RESERVED.len() {
            return Err(Error::InvalidVocab("fewer than 4 lines".into()));
        }
        for (i, want) in RESERVED.iter().enumerate() {
            if tokens[i] != *want {
                return Err(Error::InvalidVocab(format!(
                    "line {i} must be the literal `{want}`, got `{}`",
                    tokens[i]
                )));
            }
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if ids.insert(tok.clone(), TokenId(i as u32)).is_some() {
                return Err(Error::InvalidVocab(format!("duplicate token `{tok}`")));
            }
        }
        Ok(Self { tokens, ids })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(UNK)
    }

    /// Whitespace-splits a line into token ids, unknowns mapped to UNK.
    pub fn encode_line(&self, line: &str) -> Vec<TokenId> {
        line.split_whitespace().map(|t| self.id_or_unk(t)).collect()
    }

    /// Joins ids back into a space-separated line. Unknown ids render as `<unk>`.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .map(|&id| self.token(id).unwrap_or(RESERVED[UNK.index()]))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// One token per line, line number = id.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_tokens(text.lines().map(str::to_string).collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = self.tokens.join("\n");
        out.push('\n');
        fs::write(path, out)?;
        Ok(())
    }
}

/// A source sentence and its EOS-terminated target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentencePair {
    pub source: Vec<TokenId>,
    pub target: Vec<TokenId>,
}

impl SentencePair {
    /// `target` must already end with EOS.
    pub fn new(source: Vec<TokenId>, target: Vec<TokenId>) -> Result<Self> {
        if source.is_empty() || target.is_empty() {
            return Err(Error::InvalidPair("empty side".into()));
        }
        if source.contains(&PAD) || target.contains(&PAD) {
            return Err(Error::InvalidPair("PAD inside a sentence".into()));
        }
        if *target.last().unwrap() != EOS {
            return Err(Error::InvalidPair("target not EOS-terminated".into()));
        }
        if target[..target.len() - 1].contains(&EOS) {
            return Err(Error::InvalidPair("EOS before the end of the target".into()));
        }
        Ok(Self { source, target })
    }

    /// Target length including the terminal EOS.
    pub fn target_len(&self) -> usize {
        self.target.len()
    }
}

/// Reads a parallel corpus from two line-aligned text files, appending EOS
/// to every target sentence.
pub fn read_parallel_corpus(
    vocab: &Vocab,
    src_path: impl AsRef<Path>,
    tgt_path: impl AsRef<Path>,
) -> Result<Vec<SentencePair>> {
    let src_text = fs::read_to_string(src_path)?;
    let tgt_text = fs::read_to_string(tgt_path)?;
    let src_lines: Vec<&str> = src_text.lines().collect();
    let tgt_lines: Vec<&str> = tgt_text.lines().collect();
    if src_lines.len() != tgt_lines.len() {
        return Err(Error::LengthMismatch {
            hyps: src_lines.len(),
            refs: tgt_lines.len(),
        });
    }
    src_lines
        .iter()
        .zip(&tgt_lines)
        .map(|(s, t)| {
            let source = vocab.encode_line(s);
            let mut target = vocab.encode_line(t);
            target.push(EOS);
            SentencePair::new(source, target)
        })
        .collect()
}
