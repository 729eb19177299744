//! Parser for the tagged-line MEDLINE text format returned by `efetch`
//! with `rettype=medline`.
//!
//! Each line is `TAG - value` where the tag occupies the first four columns.
//! Lines beginning with whitespace continue the previous tag. Records are
//! separated by blank lines.

use tracing::warn;

use super::headings::HeadingLexicon;
use super::record::{AbstractRecord, RawMedlineRecord};
use crate::error::{Error, Result};

/// Splits a multi-record MEDLINE payload into one raw record per citation.
pub fn split_records(payload: &str) -> Vec<RawMedlineRecord> {
    let mut records = Vec::new();
    let mut current = String::new();
    for line in payload.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.trim().is_empty() {
                records.push(RawMedlineRecord::new(std::mem::take(&mut current)));
            }
            current.clear();
            continue;
        }
        // a new PMID line always opens a new record, even without a blank separator
        if tag_of(line) == Some("PMID") && !current.trim().is_empty() {
            records.push(RawMedlineRecord::new(std::mem::take(&mut current)));
        }
        current.push_str(line);
        current.push('\n');
    }
    if !current.trim().is_empty() {
        records.push(RawMedlineRecord::new(current));
    }
    records
}

fn tag_of(line: &str) -> Option<&str> {
    if line.starts_with(char::is_whitespace) || line.len() < 5 {
        return None;
    }
    let (head, rest) = line.split_at(line.find('-')?);
    let tag = head.trim();
    if tag.is_empty() || tag.len() > 4 || !tag.chars().all(|c| c.is_ascii_alphanumeric()) {
        return None;
    }
    // "- " follows the padded tag
    rest.strip_prefix('-')?;
    Some(tag)
}

/// Tag/value pairs in document order with continuation lines joined by a
/// single space.
pub fn fields(raw: &RawMedlineRecord) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for line in raw.record_text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match tag_of(line) {
            Some(tag) => {
                let value = line[line.find('-').unwrap_or(0) + 1..].trim();
                out.push((tag.to_string(), value.to_string()));
            }
            None => {
                if let Some((_, value)) = out.last_mut() {
                    let cont = line.trim();
                    if !cont.is_empty() {
                        if !value.is_empty() {
                            value.push(' ');
                        }
                        value.push_str(cont);
                    }
                }
            }
        }
    }
    out
}

fn first<'a>(fields: &'a [(String, String)], tag: &str) -> Option<&'a str> {
    fields
        .iter()
        .find(|(t, _)| t == tag)
        .map(|(_, v)| v.as_str())
}

fn leading_year(value: &str) -> Option<i32> {
    let digits: String = value.chars().take(4).collect();
    if digits.len() == 4 && digits.chars().all(|c| c.is_ascii_digit()) {
        digits.parse().ok()
    } else {
        None
    }
}

fn record_name(raw: &RawMedlineRecord) -> String {
    let first_line = raw.record_text.lines().next().unwrap_or("").trim();
    let mut name: String = first_line.chars().take(60).collect();
    if name.is_empty() {
        name = "<empty record>".to_string();
    }
    name
}

/// Parses one record. Returns `Ok(None)` (with a warning) when the record has
/// no abstract, since large harvests routinely contain such citations.
pub fn parse_medline_record(
    raw: &RawMedlineRecord,
    field: &str,
    lexicon: &HeadingLexicon,
) -> Result<Option<AbstractRecord>> {
    let fields = fields(raw);
    let pmid = first(&fields, "PMID")
        .filter(|p| !p.is_empty())
        .ok_or_else(|| Error::Parse {
            record: record_name(raw),
            message: "missing PMID tag".to_string(),
        })?
        .to_string();

    let abstract_text = fields
        .iter()
        .filter(|(t, _)| t == "AB")
        .map(|(_, v)| v.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    if abstract_text.trim().is_empty() {
        warn!(pmid = %pmid, "record has no abstract; skipping");
        return Ok(None);
    }

    let year = first(&fields, "DP")
        .and_then(leading_year)
        .or_else(|| first(&fields, "DEP").and_then(leading_year))
        .or_else(|| first(&fields, "EDAT").and_then(leading_year))
        .ok_or_else(|| Error::Parse {
            record: pmid.clone(),
            message: "no publication year (DP/DEP/EDAT)".to_string(),
        })?;

    let title = first(&fields, "TI")
        .or_else(|| first(&fields, "BTI"))
        .unwrap_or("")
        .to_string();
    let journal_id = first(&fields, "JID").unwrap_or("").to_string();

    let sections = lexicon.split_sections(&abstract_text);
    Ok(Some(AbstractRecord {
        pmid,
        title,
        journal_id,
        field: field.to_string(),
        year,
        is_structured: !sections.is_empty(),
        sections,
        abstract_text,
    }))
}

/// Parses every record in a payload, skipping abstract-less citations.
pub fn parse_medline_payload(
    payload: &str,
    field: &str,
    lexicon: &HeadingLexicon,
) -> Result<Vec<AbstractRecord>> {
    let mut out = Vec::new();
    for raw in split_records(payload) {
        if let Some(record) = parse_medline_record(&raw, field, lexicon)? {
            out.push(record);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const STRUCTURED: &str = "PMID- 31000001
OWN - NLM
STAT- MEDLINE
DP  - 2019 Mar 5
TI  - A randomized trial of drug X for postoperative
      pain.
AB  - BACKGROUND: Pain after surgery is common. METHODS: We randomized 40
      adults. RESULTS: Scores fell by 3.5 points. CONCLUSIONS: Drug X reduced pain.
FAU - Doe, Jane
JT  - Journal of Testing
JID - 0123456
PT  - Randomized Controlled Trial
";

    #[test]
    fn parses_structured_record() {
        let raw = RawMedlineRecord::new(STRUCTURED);
        let rec = parse_medline_record(&raw, "Anesthesiology", &HeadingLexicon::default())
            .unwrap()
            .unwrap();
        assert_eq!(rec.pmid, "31000001");
        assert_eq!(rec.year, 2019);
        assert_eq!(rec.journal_id, "0123456");
        assert_eq!(rec.title, "A randomized trial of drug X for postoperative pain.");
        assert!(rec.is_structured);
        let last = rec.sections.last().unwrap();
        assert_eq!(last.0, "CONCLUSIONS");
        assert_eq!(last.1, "Drug X reduced pain.");
        assert!(rec.abstract_text.contains("randomized 40 adults."));
    }

    #[test]
    fn unstructured_record_has_no_sections() {
        let raw = RawMedlineRecord::new(
            "PMID- 5\nDP  - 2001\nTI  - T\nAB  - We gave a drug. It worked well.\nJID - 9\n",
        );
        let rec = parse_medline_record(&raw, "Pediatrics", &HeadingLexicon::default())
            .unwrap()
            .unwrap();
        assert!(!rec.is_structured);
        assert!(rec.sections.is_empty());
    }

    #[test]
    fn missing_pmid_is_an_error_naming_the_record() {
        let raw = RawMedlineRecord::new("TI  - Orphan title\nAB  - Text.\n");
        let err = parse_medline_record(&raw, "x", &HeadingLexicon::default()).unwrap_err();
        match err {
            Error::Parse { record, .. } => assert!(record.contains("Orphan title")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_abstract_is_skipped() {
        let raw = RawMedlineRecord::new("PMID- 77\nDP  - 2010\nTI  - No abstract here\n");
        assert!(parse_medline_record(&raw, "x", &HeadingLexicon::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn split_handles_blank_lines_and_back_to_back_pmids() {
        let payload = format!("\n{STRUCTURED}\n\nPMID- 2\nAB  - x.\nDP  - 2000\nPMID- 3\nAB  - y.\nDP  - 2000\n");
        let records = split_records(&payload);
        assert_eq!(records.len(), 3);
    }
}
