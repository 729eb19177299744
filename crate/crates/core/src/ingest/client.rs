//! Search/fetch client: resolves a medical field to its journal identifier
//! set through the catalog database, then pages through clinical-trial
//! citations in those journals and fetches their MEDLINE records.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tracing::{info, warn};

use super::medline::split_records;
use super::record::RawMedlineRecord;
use super::transport::{Endpoint, Request, Transport};
use crate::error::{Error, Result};

/// Publication-type restriction applied to every citation query.
pub const PUBLICATION_TYPE_FILTER: &str = "clinical trial";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldQuery {
    pub field_name: String,
    pub date_range: Option<(i32, i32)>,
    pub max_records: usize,
}

impl FieldQuery {
    pub fn new(field_name: impl Into<String>, max_records: usize) -> Self {
        Self {
            field_name: field_name.into(),
            date_range: None,
            max_records,
        }
    }

    pub fn with_years(mut self, from: i32, to: i32) -> Self {
        self.date_range = Some((from, to));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.field_name.trim().is_empty() {
            return Err(Error::invalid("field name must be non-empty"));
        }
        if self.max_records == 0 {
            return Err(Error::invalid("max_records must be at least 1"));
        }
        if let Some((from, to)) = self.date_range {
            if from > to {
                return Err(Error::invalid(format!("year range {from}..{to} is reversed")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ClientOptions {
    /// Identifiers requested per search page.
    pub page_size: usize,
    /// Identifiers per fetch request.
    pub fetch_chunk: usize,
    /// Concurrent fetch workers; all share the transport's rate gate.
    pub workers: usize,
}

impl Default for ClientOptions {
    fn default() -> Self {
        Self {
            page_size: 500,
            fetch_chunk: 200,
            workers: 2,
        }
    }
}

pub struct EntrezClient<T: Transport> {
    transport: T,
    options: ClientOptions,
    journal_cache: Mutex<HashMap<String, BTreeSet<String>>>,
}

impl<T: Transport> EntrezClient<T> {
    pub fn new(transport: T) -> Self {
        Self::with_options(transport, ClientOptions::default())
    }

    pub fn with_options(transport: T, options: ClientOptions) -> Self {
        Self {
            transport,
            options,
            journal_cache: Mutex::new(HashMap::new()),
        }
    }

    fn get_json(&self, request: &Request) -> Result<Value> {
        let body = self.transport.get(request)?;
        serde_json::from_str(&body).map_err(|e| Error::json(request.key(), e))
    }

    /// Pages through an esearch result; returns at most `limit` identifiers.
    fn search_ids(&self, db: &str, term: &str, limit: usize) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        let mut start = 0usize;
        loop {
            let page = self.options.page_size.min(limit - ids.len());
            let request = Request::new(Endpoint::ESearch)
                .param("db", db)
                .param("term", term)
                .param("retmode", "json")
                .param("retstart", start.to_string())
                .param("retmax", page.to_string());
            let json = self.get_json(&request)?;
            let result = json.get("esearchresult").ok_or_else(|| Error::Transport {
                message: format!("malformed search response for {request}"),
                retryable: false,
            })?;
            let total: usize = match result.get("count") {
                Some(Value::String(s)) => s.parse().unwrap_or(0),
                Some(Value::Number(n)) => n.as_u64().unwrap_or(0) as usize,
                _ => 0,
            };
            let batch: Vec<String> = result
                .get("idlist")
                .and_then(Value::as_array)
                .map(|a| {
                    a.iter()
                        .filter_map(|v| v.as_str().map(str::to_string))
                        .collect()
                })
                .unwrap_or_default();
            let got = batch.len();
            ids.extend(batch);
            start += got;
            if got == 0 || ids.len() >= limit || start >= total {
                break;
            }
        }
        ids.truncate(limit);
        Ok(ids)
    }

    /// Journal identifiers whose catalog subject term matches the field.
    /// Results are cached per field name for the client's lifetime.
    pub fn resolve_field_journals(&self, field_name: &str) -> Result<BTreeSet<String>> {
        let field = field_name.trim();
        if field.is_empty() {
            return Err(Error::invalid("field name must be non-empty"));
        }
        if let Some(hit) = self.journal_cache.lock().unwrap().get(field) {
            return Ok(hit.clone());
        }

        let term = format!("\"{field}\"[st] AND ncbijournals[filter]");
        let uids = self.search_ids("nlmcatalog", &term, 100_000)?;
        let mut journals = BTreeSet::new();
        for chunk in uids.chunks(self.options.fetch_chunk.max(1)) {
            let request = Request::new(Endpoint::ESummary)
                .param("db", "nlmcatalog")
                .param("id", chunk.join(","))
                .param("retmode", "json");
            let json = self.get_json(&request)?;
            let result = json.get("result");
            for uid in chunk {
                let nlm_id = result
                    .and_then(|r| r.get(uid))
                    .and_then(|doc| doc.get("nlmuniqueid"))
                    .and_then(Value::as_str);
                match nlm_id {
                    Some(id) if !id.is_empty() => {
                        journals.insert(id.to_string());
                    }
                    _ => warn!(uid = %uid, "catalog summary lacks an NLM unique id"),
                }
            }
        }
        if journals.is_empty() {
            warn!(field = %field, "no journals matched this field");
        }
        self.journal_cache
            .lock()
            .unwrap()
            .insert(field.to_string(), journals.clone());
        Ok(journals)
    }

    /// The citation search term for a query over the given journals.
    pub fn citation_term(query: &FieldQuery, journals: &BTreeSet<String>) -> String {
        let jids = journals
            .iter()
            .map(|j| format!("\"{j}\"[jid]"))
            .collect::<Vec<_>>()
            .join(" OR ");
        let mut term = format!("({jids}) AND \"{PUBLICATION_TYPE_FILTER}\"[pt]");
        if let Some((from, to)) = query.date_range {
            term.push_str(&format!(" AND (\"{from}\"[dp] : \"{to}\"[dp])"));
        }
        term
    }

    /// Fetches up to `max_records` MEDLINE records for the query.
    pub fn fetch_records(&self, query: &FieldQuery) -> Result<Vec<RawMedlineRecord>> {
        query.validate()?;
        let journals = self.resolve_field_journals(&query.field_name)?;
        if journals.is_empty() {
            return Ok(Vec::new());
        }
        let term = Self::citation_term(query, &journals);
        let pmids = self.search_ids("pubmed", &term, query.max_records)?;
        if pmids.is_empty() {
            return Ok(Vec::new());
        }

        let chunks: Vec<&[String]> = pmids.chunks(self.options.fetch_chunk.max(1)).collect();
        let results: Vec<Mutex<Option<Result<String>>>> =
            chunks.iter().map(|_| Mutex::new(None)).collect();
        let next = Mutex::new(0usize);
        std::thread::scope(|s| {
            for _ in 0..self.options.workers.max(1).min(chunks.len()) {
                s.spawn(|| loop {
                    let i = {
                        let mut n = next.lock().unwrap();
                        let i = *n;
                        *n += 1;
                        i
                    };
                    if i >= chunks.len() {
                        break;
                    }
                    let request = Request::new(Endpoint::EFetch)
                        .param("db", "pubmed")
                        .param("id", chunks[i].join(","))
                        .param("rettype", "medline")
                        .param("retmode", "text");
                    *results[i].lock().unwrap() = Some(self.transport.get(&request));
                });
            }
        });

        let mut records = Vec::new();
        for slot in results {
            let body = slot.into_inner().unwrap().expect("every chunk fetched")?;
            records.extend(split_records(&body));
        }
        records.truncate(query.max_records);
        info!(field = %query.field_name, n = records.len(), "fetched records");
        Ok(records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// In-memory catalog/citation service.
    struct Fake {
        journals: Vec<(&'static str, &'static str)>,
        pmids: Vec<String>,
        calls: AtomicUsize,
    }

    impl Transport for Fake {
        fn get(&self, r: &Request) -> Result<String> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let p = |k: &str| r.params.get(k).cloned().unwrap_or_default();
            match (r.endpoint, p("db").as_str()) {
                (Endpoint::ESearch, "nlmcatalog") => {
                    let ids: Vec<&str> = if p("term").contains("Anesthesiology") {
                        self.journals.iter().map(|(u, _)| *u).collect()
                    } else {
                        vec![]
                    };
                    Ok(serde_json::json!({"esearchresult": {"count": ids.len().to_string(), "idlist": ids}}).to_string())
                }
                (Endpoint::ESummary, _) => {
                    let mut result = serde_json::Map::new();
                    for (u, n) in &self.journals {
                        result.insert(u.to_string(), serde_json::json!({"uid": u, "nlmuniqueid": n}));
                    }
                    Ok(serde_json::json!({"result": result}).to_string())
                }
                (Endpoint::ESearch, "pubmed") => {
                    let start: usize = p("retstart").parse().unwrap();
                    let max: usize = p("retmax").parse().unwrap();
                    let ids: Vec<&String> = self.pmids.iter().skip(start).take(max).collect();
                    Ok(serde_json::json!({"esearchresult": {"count": self.pmids.len().to_string(), "idlist": ids}}).to_string())
                }
                (Endpoint::EFetch, _) => Ok(p("id")
                    .split(',')
                    .map(|id| format!("PMID- {id}\nDP  - 2020\nAB  - Text {id}.\n\n"))
                    .collect()),
                _ => unreachable!(),
            }
        }
    }

    fn fake(n: usize) -> Fake {
        Fake {
            journals: vec![("1001", "0001001"), ("1002", "0001002")],
            pmids: (0..n).map(|i| (1000 + i).to_string()).collect(),
            calls: AtomicUsize::new(0),
        }
    }

    #[test]
    fn resolves_and_caches_journals() {
        let client = EntrezClient::new(fake(0));
        let j = client.resolve_field_journals("Anesthesiology").unwrap();
        assert_eq!(j.into_iter().collect::<Vec<_>>(), ["0001001", "0001002"]);
        let calls = client.transport.calls.load(Ordering::SeqCst);
        client.resolve_field_journals("Anesthesiology").unwrap();
        assert_eq!(client.transport.calls.load(Ordering::SeqCst), calls);
        assert!(client.resolve_field_journals("Basket Weaving").unwrap().is_empty());
        assert!(client.resolve_field_journals("").is_err());
    }

    #[test]
    fn truncates_and_paginates() {
        let opts = ClientOptions {
            page_size: 7,
            fetch_chunk: 5,
            workers: 3,
        };
        let client = EntrezClient::with_options(fake(50), opts);
        let records = client
            .fetch_records(&FieldQuery::new("Anesthesiology", 12))
            .unwrap();
        assert_eq!(records.len(), 12);
        assert!(records[0].record_text.starts_with("PMID- 1000"));
        assert!(records[11].record_text.starts_with("PMID- 1011"));
    }

    #[test]
    fn empty_results_are_not_errors() {
        let client = EntrezClient::new(fake(0));
        assert!(client
            .fetch_records(&FieldQuery::new("Anesthesiology", 12))
            .unwrap()
            .is_empty());
        assert!(client
            .fetch_records(&FieldQuery::new("Unknown", 12))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn query_validation() {
        assert!(FieldQuery::new("x", 0).validate().is_err());
        assert!(FieldQuery::new("x", 1).with_years(2020, 2010).validate().is_err());
        assert!(FieldQuery::new(" ", 1).validate().is_err());
    }

    #[test]
    fn term_includes_filters() {
        let journals: BTreeSet<String> = ["A".to_string()].into();
        let term = EntrezClient::<Fake>::citation_term(&FieldQuery::new("x", 1).with_years(2010, 2020), &journals);
        assert_eq!(
            term,
            "(\"A\"[jid]) AND \"clinical trial\"[pt] AND (\"2010\"[dp] : \"2020\"[dp])"
        );
    }
}
