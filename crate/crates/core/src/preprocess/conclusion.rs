use serde::{Deserialize, Serialize};
use tracing::warn;

use super::sentences::segment_sentences;
use crate::error::{Error, Result};
use crate::ingest::{AbstractRecord, HeadingLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SourceRule {
    StructuredHeading,
    TrailingFraction,
}

/// The part of an abstract carrying the authors' verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConclusionText {
    pub text: String,
    pub n_sentences: usize,
    pub source_rule: SourceRule,
}

/// Fraction of an unstructured abstract's sentences treated as conclusion.
pub const TRAILING_FRACTION: f64 = 0.125;

/// Number of trailing sentences taken from an unstructured abstract of
/// `total` sentences: `max(1, ceil(total / 8))`.
pub fn trailing_sentence_count(total: usize) -> usize {
    total.div_ceil(8).max(1)
}

/// Selects the conclusion of an abstract: the text under the last
/// conclusion-family heading when one exists, otherwise the trailing
/// fraction of its sentences.
pub fn extract_conclusion(record: &AbstractRecord, lexicon: &HeadingLexicon) -> Result<ConclusionText> {
    if record.abstract_text.trim().is_empty() {
        return Err(Error::invalid(format!("record {} has an empty abstract", record.pmid)));
    }
    if record.is_structured {
        let conclusion = record
            .sections
            .iter()
            .rev()
            .find(|(heading, text)| lexicon.is_conclusion(heading) && !text.trim().is_empty());
        match conclusion {
            Some((_, text)) => {
                let n = segment_sentences(text).total().max(1);
                return Ok(ConclusionText {
                    text: text.trim().to_string(),
                    n_sentences: n,
                    source_rule: SourceRule::StructuredHeading,
                });
            }
            None => warn!(
                pmid = %record.pmid,
                "structured abstract without a conclusion heading; using trailing sentences"
            ),
        }
    }
    let sentences = segment_sentences(&record.abstract_text);
    let n = trailing_sentence_count(sentences.total()).min(sentences.total());
    Ok(ConclusionText {
        text: sentences.tail(n),
        n_sentences: n,
        source_rule: SourceRule::TrailingFraction,
    })
}
