use serde::{Deserialize, Serialize};

/// One parsed bibliographic citation.
///
/// Field names on the wire follow the corpus JSONL layout
/// (`abstract`, `structured`, `sections` as `[[heading, text], ...]`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractRecord {
    pub pmid: String,
    pub title: String,
    pub journal_id: String,
    pub field: String,
    pub year: i32,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(rename = "structured")]
    pub is_structured: bool,
    pub sections: Vec<(String, String)>,
}

/// Verbatim tagged-line MEDLINE payload for one citation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMedlineRecord {
    pub record_text: String,
}

impl RawMedlineRecord {
    pub fn new(record_text: impl Into<String>) -> Self {
        Self {
            record_text: record_text.into(),
        }
    }
}
