use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::Deserialize;
use trialsent_core::ingest::{
    harvest, parse_medline_payload, AbstractRecord, EntrezClient, FieldQuery, FixtureTransport, HeadingLexicon,
};
use trialsent_core::jsonl::{read_jsonl, write_jsonl};
use trialsent_core::preprocess::{extract_conclusion, segment_sentences, SourceRule, WordPieceTokenizer, Vocab};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn entrez_store() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/entrez")
}

fn medline_20() -> Vec<AbstractRecord> {
    let text = std::fs::read_to_string(fixture("medline_20.txt")).unwrap();
    parse_medline_payload(&text, "Anesthesiology", &HeadingLexicon::default()).unwrap()
}

#[test]
fn twenty_record_file_matches_extracted_pmids() {
    let records = medline_20();
    let expected: Vec<String> = std::fs::read_to_string(fixture("medline_20_pmids.txt"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    assert_eq!(records.len(), 20);
    assert_eq!(records.iter().map(|r| r.pmid.clone()).collect::<Vec<_>>(), expected);
    assert!(records.iter().all(|r| r.year >= 2005 && !r.title.is_empty() && !r.journal_id.is_empty()));
    // Record 8 only carries an electronic publication date.
    assert_eq!(records[7].year, 2012);
}

#[test]
fn records_survive_corpus_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let records = medline_20();
    write_jsonl(&path, &records).unwrap();
    let back: Vec<AbstractRecord> = read_jsonl(&path).unwrap();
    assert_eq!(back, records);
}

fn client() -> EntrezClient<FixtureTransport> {
    EntrezClient::new(FixtureTransport::open(&entrez_store()).unwrap())
}

#[test]
fn catalog_fixture_resolves_two_journals() {
    let journals = client().resolve_field_journals("Anesthesiology").unwrap();
    let expected: BTreeSet<String> = ["8802345", "9104567"].map(String::from).into();
    assert_eq!(journals, expected);
}

#[test]
fn fetch_honours_record_limit() {
    let lexicon = HeadingLexicon::default();
    let twelve = harvest(&client(), &FieldQuery::new("Anesthesiology", 12), &lexicon).unwrap();
    assert_eq!(twelve.len(), 12);
    let all = harvest(&client(), &FieldQuery::new("Anesthesiology", 50), &lexicon).unwrap();
    assert_eq!(all.len(), 50);
    assert_eq!(&all[..12], &twelve[..]);
    let unique: BTreeSet<&str> = all.iter().map(|r| r.pmid.as_str()).collect();
    assert_eq!(unique.len(), 50);
}

#[test]
fn unrecorded_query_fails_without_network() {
    let err = harvest(&client(), &FieldQuery::new("Cardiology", 5), &HeadingLexicon::default()).unwrap_err();
    assert!(matches!(err, trialsent_core::Error::Transport { retryable: false, .. }), "{err}");
}

#[derive(Deserialize)]
struct Golden {
    id: usize,
    text: String,
    sentences: usize,
}

#[test]
fn sentence_counts_match_golden_file() {
    let golden: Vec<Golden> = read_jsonl(&fixture("sentences_25.jsonl")).unwrap();
    assert_eq!(golden.len(), 25);
    for g in golden {
        assert_eq!(segment_sentences(&g.text).total(), g.sentences, "abstract {}: {}", g.id, g.text);
    }
}

#[test]
fn structured_fixtures_use_heading_rule() {
    let lexicon = HeadingLexicon::default();
    let all = harvest(&client(), &FieldQuery::new("Anesthesiology", 50), &lexicon).unwrap();
    let mut structured = 0;
    for record in all.iter().chain(&medline_20()) {
        let c = extract_conclusion(record, &lexicon).unwrap();
        if record.is_structured {
            structured += 1;
            assert_eq!(c.source_rule, SourceRule::StructuredHeading, "{}", record.pmid);
            let (_, last) = record.sections.last().unwrap();
            assert_eq!(c.text, last.trim());
        } else {
            assert_eq!(c.source_rule, SourceRule::TrailingFraction);
            let total = segment_sentences(&record.abstract_text).total();
            assert_eq!(c.n_sentences, total.div_ceil(8).max(1));
        }
    }
    assert!(structured >= 30);
}

#[test]
fn fixture_vocabulary_covers_conclusions() {
    let vocab = Vocab::load(&entrez_store().join("../vocab.txt")).unwrap();
    let tokenizer = WordPieceTokenizer::new(vocab, true);
    let lexicon = HeadingLexicon::default();
    for record in harvest(&client(), &FieldQuery::new("Anesthesiology", 50), &lexicon).unwrap() {
        let text = extract_conclusion(&record, &lexicon).unwrap().text;
        let seq = tokenizer.tokenize(&text, 64).unwrap();
        assert!(!seq.ids.contains(&tokenizer.vocab().unk_id), "{text}");
    }
}
