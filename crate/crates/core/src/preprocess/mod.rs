//! Conclusion extraction and fixed-length subword encoding.

mod conclusion;
mod sentences;
mod wordpiece;

use serde::{Deserialize, Serialize};
use tracing::info;

pub use conclusion::{
    extract_conclusion, trailing_sentence_count, ConclusionText, SourceRule, TRAILING_FRACTION,
};
pub use sentences::{segment_sentences, SentenceList};
pub use wordpiece::{
    TokenSequence, Vocab, WordPieceTokenizer, CLS_TOKEN, PAD_TOKEN, SEP_TOKEN, UNK_TOKEN,
};

use crate::error::Result;
use crate::ingest::{AbstractRecord, HeadingLexicon};
use crate::label::SentimentLabel;

pub const DEFAULT_MAX_LENGTH: usize = 128;

/// One row of the tokenized-dataset JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenizedExample {
    pub pmid: String,
    pub ids: Vec<u32>,
    pub mask: Vec<u8>,
    pub label: SentimentLabel,
}

impl TokenizedExample {
    pub fn new(pmid: impl Into<String>, tokens: TokenSequence, label: SentimentLabel) -> Self {
        Self {
            pmid: pmid.into(),
            ids: tokens.ids,
            mask: tokens.attention_mask,
            label,
        }
    }

    pub fn tokens(&self) -> TokenSequence {
        TokenSequence {
            ids: self.ids.clone(),
            attention_mask: self.mask.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub records: usize,
    pub structured_heading: usize,
    pub trailing_fraction: usize,
    pub truncated: usize,
}

/// Extracts and tokenizes the conclusion of every record. Output rows carry
/// the unlabeled sentinel; gold labels are attached by the corpus stage.
pub fn preprocess_records(
    records: &[AbstractRecord],
    tokenizer: &WordPieceTokenizer,
    lexicon: &HeadingLexicon,
    max_length: usize,
) -> Result<(Vec<TokenizedExample>, PreprocessStats)> {
    let mut stats = PreprocessStats::default();
    let mut out = Vec::with_capacity(records.len());
    for record in records {
        let conclusion = extract_conclusion(record, lexicon)?;
        match conclusion.source_rule {
            SourceRule::StructuredHeading => stats.structured_heading += 1,
            SourceRule::TrailingFraction => stats.trailing_fraction += 1,
        }
        if tokenizer.would_truncate(&conclusion.text, max_length) {
            stats.truncated += 1;
        }
        let tokens = tokenizer.tokenize(&conclusion.text, max_length)?;
        out.push(TokenizedExample::new(
            record.pmid.clone(),
            tokens,
            SentimentLabel::Unlabeled,
        ));
        stats.records += 1;
    }
    info!(
        records = stats.records,
        structured = stats.structured_heading,
        trailing = stats.trailing_fraction,
        truncated = stats.truncated,
        "preprocessed"
    );
    Ok((out, stats))
}
