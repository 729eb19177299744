//! WordPiece tokenization against a pretrained vocabulary file.
//!
//! Text is cleaned, optionally lowercased with accents stripped, split on
//! whitespace and punctuation, and each word is segmented greedily into the
//! longest vocabulary pieces, continuation pieces carrying a `##` prefix.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub const CLS_TOKEN: &str = "[CLS]";
pub const SEP_TOKEN: &str = "[SEP]";
pub const PAD_TOKEN: &str = "[PAD]";
pub const UNK_TOKEN: &str = "[UNK]";
const CONTINUATION: &str = "##";
const MAX_WORD_CHARS: usize = 100;

/// Subword vocabulary; line index in the vocabulary file is the token ID.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    pub cls_id: u32,
    pub sep_id: u32,
    pub pad_id: u32,
    pub unk_id: u32,
}

impl Vocab {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            // first occurrence wins for duplicated lines
            index.entry(t.clone()).or_insert(i as u32);
        }
        let special = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::config(format!("vocabulary lacks special token {name}")))
        };
        Ok(Self {
            cls_id: special(CLS_TOKEN)?,
            sep_id: special(SEP_TOKEN)?,
            pad_id: special(PAD_TOKEN)?,
            unk_id: special(UNK_TOKEN)?,
            tokens,
            index,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_tokens(
            text.lines()
                .map(|l| l.trim_end_matches('\r').to_string())
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn is_special(&self, id: u32) -> bool {
        id == self.cls_id || id == self.sep_id || id == self.pad_id
    }
}

/// Fixed-length encoder input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of attended positions.
    pub fn content_len(&self) -> usize {
        self.attention_mask.iter().filter(|&&m| m == 1).count()
    }

    /// Checks the layout contract against a vocabulary.
    pub fn validate(&self, vocab: &Vocab) -> Result<()> {
        if self.ids.len() != self.attention_mask.len() {
            return Err(Error::shape(format!(
                "ids length {} != mask length {}",
                self.ids.len(),
                self.attention_mask.len()
            )));
        }
        if self.ids.first() != Some(&vocab.cls_id) {
            return Err(Error::invalid("sequence does not start with the start token"));
        }
        let content = self.content_len();
        if self.attention_mask[..content].iter().any(|&m| m != 1)
            || self.ids[content..].iter().any(|&id| id != vocab.pad_id)
        {
            return Err(Error::invalid("padding is not a contiguous suffix"));
        }
        if self.ids[content - 1] != vocab.sep_id {
            return Err(Error::invalid("last content token is not the separator"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WordPieceTokenizer {
    vocab: Vocab,
    lowercase: bool,
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control() && !is_combining(c))
}

fn is_combining(c: char) -> bool {
    matches!(c as u32, 0x0300..=0x036F | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF | 0x20D0..=0x20FF | 0xFE20..=0xFE2F)
}

impl WordPieceTokenizer {
    pub fn new(vocab: Vocab, lowercase: bool) -> Self {
        Self { vocab, lowercase }
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Whitespace/punctuation split after cleaning and optional lowercasing.
    pub fn basic_tokens(&self, text: &str) -> Vec<String> {
        let cleaned: String = text
            .chars()
            .filter(|&c| c != '\u{0}' && c != '\u{FFFD}')
            .map(|c| if c.is_whitespace() || c.is_control() { ' ' } else { c })
            .collect();
        let normalized: String = if self.lowercase {
            cleaned.to_lowercase().nfd().filter(|&c| !is_combining(c)).collect()
        } else {
            cleaned
        };
        let mut out = Vec::new();
        for word in normalized.split_whitespace() {
            let mut current = String::new();
            for c in word.chars() {
                if is_punctuation(c) {
                    if !current.is_empty() {
                        out.push(std::mem::take(&mut current));
                    }
                    out.push(c.to_string());
                } else {
                    current.push(c);
                }
            }
            if !current.is_empty() {
                out.push(current);
            }
        }
        out
    }

    /// Greedy longest-match-first segmentation of one word.
    fn word_pieces(&self, word: &str, out: &mut Vec<u32>) {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > MAX_WORD_CHARS {
            out.push(self.vocab.unk_id);
            return;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let mut piece: String = chars[start..end].iter().collect();
                if start > 0 {
                    piece.insert_str(0, CONTINUATION);
                }
                if let Some(id) = self.vocab.id(&piece) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    pieces.push(id);
                    start = end;
                }
                None => {
                    out.push(self.vocab.unk_id);
                    return;
                }
            }
        }
        out.extend(pieces);
    }

    /// Subword IDs of `text` without special tokens.
    pub fn encode_pieces(&self, text: &str) -> Vec<u32> {
        let mut ids = Vec::new();
        for word in self.basic_tokens(text) {
            self.word_pieces(&word, &mut ids);
        }
        ids
    }

    /// `[CLS] pieces [SEP]` truncated and padded to exactly `max_length`.
    /// On truncation the separator stays as the last content token.
    pub fn tokenize(&self, text: &str, max_length: usize) -> Result<TokenSequence> {
        if max_length < 3 {
            return Err(Error::config(format!(
                "max_length {max_length} leaves no room for start, content and separator tokens"
            )));
        }
        let mut pieces = self.encode_pieces(text);
        pieces.truncate(max_length - 2);
        let mut ids = Vec::with_capacity(max_length);
        ids.push(self.vocab.cls_id);
        ids.extend(pieces);
        ids.push(self.vocab.sep_id);
        let content = ids.len();
        ids.resize(max_length, self.vocab.pad_id);
        let mut attention_mask = vec![1u8; content];
        attention_mask.resize(max_length, 0);
        Ok(TokenSequence { ids, attention_mask })
    }

    /// Whether `text` would be truncated at `max_length`.
    pub fn would_truncate(&self, text: &str, max_length: usize) -> bool {
        self.encode_pieces(text).len() + 2 > max_length
    }

    /// Joins pieces back into space-separated words, dropping special tokens.
    pub fn detokenize(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        for &id in ids {
            if self.vocab.is_special(id) {
                continue;
            }
            let token = self.vocab.token(id).unwrap_or(UNK_TOKEN);
            match token.strip_prefix(CONTINUATION) {
                Some(rest) if !out.is_empty() => out.push_str(rest),
                _ => {
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(token);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> WordPieceTokenizer {
        let vocab = Vocab::parse("[CLS]\n[SEP]\n[PAD]\n[UNK]\ndrug\nworks").unwrap();
        WordPieceTokenizer::new(vocab, true)
    }

    #[test]
    fn toy_vocabulary_example() {
        let seq = toy().tokenize("drug works", 6).unwrap();
        assert_eq!(seq.ids, [0, 4, 5, 1, 2, 2]);
        assert_eq!(seq.attention_mask, [1, 1, 1, 1, 0, 0]);
    }

    #[test]
    fn unknown_and_truncation() {
        let t = toy();
        let seq = t.tokenize("drug aspirin works works", 4).unwrap();
        assert_eq!(seq.ids, [0, 4, 3, 1]);
        assert!(t.tokenize("drug", 2).is_err());
    }

    #[test]
    fn continuation_pieces() {
        let vocab = Vocab::parse("[PAD]\n[UNK]\n[CLS]\n[SEP]\nplace\n##bo\n##b\n.\n").unwrap();
        let t = WordPieceTokenizer::new(vocab, true);
        assert_eq!(t.encode_pieces("Placebo."), [4, 5, 7]);
        assert_eq!(t.detokenize(&t.tokenize("Placebo.", 8).unwrap().ids), "placebo .");
        // a word that cannot be fully segmented becomes a single [UNK]
        assert_eq!(t.encode_pieces("placex"), [1]);
    }

    #[test]
    fn missing_special_token_is_config_error() {
        assert!(matches!(Vocab::parse("[CLS]\n[SEP]\n[PAD]\n"), Err(Error::Config(_))));
    }

    #[test]
    fn cased_mode_keeps_case() {
        let vocab = Vocab::parse("[PAD]\n[UNK]\n[CLS]\n[SEP]\nDrug\n").unwrap();
        let cased = WordPieceTokenizer::new(vocab, false);
        assert_eq!(cased.encode_pieces("Drug drug"), [4, 1]);
    }

    #[test]
    fn accents_stripped_when_lowercasing() {
        assert_eq!(toy().basic_tokens("Café, naïve"), ["cafe", ",", "naive"]);
    }

    #[test]
    fn validate_layout() {
        let t = toy();
        let seq = t.tokenize("drug works", 6).unwrap();
        seq.validate(t.vocab()).unwrap();
        let mut bad = seq.clone();
        bad.ids[0] = 4;
        assert!(bad.validate(t.vocab()).is_err());
    }
}
