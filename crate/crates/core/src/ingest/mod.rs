//! Citation harvesting: catalog-driven search, MEDLINE fetch and parsing.

mod client;
mod headings;
mod medline;
mod ratelimit;
mod record;
mod transport;

use std::collections::HashSet;

use tracing::warn;

pub use client::{ClientOptions, EntrezClient, FieldQuery, PUBLICATION_TYPE_FILTER};
pub use headings::HeadingLexicon;
pub use medline::{fields as medline_fields, parse_medline_payload, parse_medline_record, split_records};
pub use ratelimit::{Clock, RateLimiter, SystemClock, RATE_WITHOUT_KEY, RATE_WITH_KEY};
pub use record::{AbstractRecord, RawMedlineRecord};
pub use transport::{
    Endpoint, FixtureTransport, HttpTransport, RecordingTransport, Request, Transport,
    DEFAULT_BASE_URL,
};

use crate::error::Result;

/// Fetches and parses one field's records. Citations without an abstract
/// are dropped and duplicate PMIDs keep their first occurrence.
pub fn harvest<T: Transport>(
    client: &EntrezClient<T>,
    query: &FieldQuery,
    lexicon: &HeadingLexicon,
) -> Result<Vec<AbstractRecord>> {
    let raw = client.fetch_records(query)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for record in &raw {
        if let Some(parsed) = parse_medline_record(record, &query.field_name, lexicon)? {
            if seen.insert(parsed.pmid.clone()) {
                out.push(parsed);
            } else {
                warn!(pmid = %parsed.pmid, "duplicate PMID dropped");
            }
        }
    }
    Ok(out)
}
