//! Labeled/unlabeled example management: gold-label aggregation, class
//! balancing, hold-out splitting and training-corpus assembly.

mod annotations;
mod sampling;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use annotations::{
    aggregate, gold_panel, majority_label, Aggregation, GoldLabel, RaterAnnotation, GOLD_PANEL_SIZE,
};
pub use sampling::{balance_classes, holdout_size, median_count, split, DatasetSplit};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::label::{Provenance, SentimentLabel, NUM_CLASSES};
use crate::preprocess::TokenizedExample;

/// A training row and whether it came from the labeled or unlabeled pool.
/// Provenance, not the stored label, decides how the row is used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusExample {
    pub example: TokenizedExample,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainingCorpus {
    pub examples: Vec<CorpusExample>,
}

impl TrainingCorpus {
    pub fn labeled(&self) -> impl Iterator<Item = &CorpusExample> {
        self.examples
            .iter()
            .filter(|e| e.provenance == Provenance::Labeled)
    }

    pub fn unlabeled(&self) -> impl Iterator<Item = &CorpusExample> {
        self.examples
            .iter()
            .filter(|e| e.provenance == Provenance::Unlabeled)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Labeled examples per class in the fixed class order.
    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for e in self.labeled() {
            if let Some(c) = e.example.label.class_index() {
                counts[c] += 1;
            }
        }
        counts
    }

    /// Reads a tokenized-dataset file; rows labeled `UNK_UNK` are unlabeled.
    pub fn load(path: &Path) -> Result<Self> {
        let rows: Vec<TokenizedExample> = jsonl::read_jsonl(path)?;
        Ok(Self::from_rows(rows))
    }

    pub fn from_rows(rows: Vec<TokenizedExample>) -> Self {
        let examples = rows
            .into_iter()
            .map(|example| CorpusExample {
                provenance: if example.label.is_real() {
                    Provenance::Labeled
                } else {
                    Provenance::Unlabeled
                },
                example,
            })
            .collect();
        Self { examples }
    }

    /// Tokenized-dataset rows; unlabeled rows always serialize as `UNK_UNK`.
    pub fn rows(&self) -> Vec<TokenizedExample> {
        self.examples
            .iter()
            .map(|e| {
                let mut row = e.example.clone();
                if e.provenance != Provenance::Labeled {
                    row.label = SentimentLabel::Unlabeled;
                }
                row
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        jsonl::write_jsonl(path, &self.rows())
    }
}

/// Combines the labeled training split with the unlabeled pool. The two PMID
/// sets must be disjoint; unlabeled rows are given the unlabeled sentinel.
pub fn assemble_training_corpus(
    labeled: Vec<TokenizedExample>,
    unlabeled: Vec<TokenizedExample>,
) -> Result<TrainingCorpus> {
    for row in &labeled {
        if !row.label.is_real() {
            return Err(Error::invalid(format!(
                "labeled row {} carries the unlabeled sentinel",
                row.pmid
            )));
        }
    }
    let labeled_ids: BTreeSet<&str> = labeled.iter().map(|r| r.pmid.as_str()).collect();
    let overlap: BTreeSet<&str> = unlabeled
        .iter()
        .map(|r| r.pmid.as_str())
        .filter(|p| labeled_ids.contains(p))
        .collect();
    if !overlap.is_empty() {
        return Err(Error::invalid(format!(
            "PMIDs present in both labeled and unlabeled sets: {}",
            overlap.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let mut examples: Vec<CorpusExample> = labeled
        .into_iter()
        .map(|example| CorpusExample {
            example,
            provenance: Provenance::Labeled,
        })
        .collect();
    examples.extend(unlabeled.into_iter().map(|mut example| {
        example.label = SentimentLabel::Unlabeled;
        CorpusExample {
            example,
            provenance: Provenance::Unlabeled,
        }
    }));
    Ok(TrainingCorpus { examples })
}

/// Partition of tokenized rows by gold-label status.
#[derive(Debug, Clone, Default)]
pub struct GoldJoin {
    pub labeled: Vec<TokenizedExample>,
    pub unlabeled: Vec<TokenizedExample>,
    /// Rated abstracts whose vote was a three-way tie.
    pub unresolved: Vec<String>,
}

/// Attaches resolved gold labels to tokenized rows. Rated-but-tied abstracts
/// are set aside; everything never rated becomes unlabeled.
pub fn join_gold(rows: &[TokenizedExample], gold: &[GoldLabel]) -> GoldJoin {
    let by_pmid: HashMap<&str, &GoldLabel> = gold.iter().map(|g| (g.pmid.as_str(), g)).collect();
    let mut out = GoldJoin::default();
    for row in rows {
        match by_pmid.get(row.pmid.as_str()) {
            Some(GoldLabel {
                label: Some(label),
                resolved: true,
                ..
            }) => {
                let mut r = row.clone();
                r.label = *label;
                out.labeled.push(r);
            }
            Some(_) => out.unresolved.push(row.pmid.clone()),
            None => {
                let mut r = row.clone();
                r.label = SentimentLabel::Unlabeled;
                out.unlabeled.push(r);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(pmid: &str, label: SentimentLabel) -> TokenizedExample {
        TokenizedExample {
            pmid: pmid.into(),
            ids: vec![0, 1],
            mask: vec![1, 1],
            label,
        }
    }

    #[test]
    fn assemble_flags_unlabeled() {
        let labeled: Vec<_> = (0..54)
            .map(|i| row(&format!("L{i}"), SentimentLabel::CLASSES[i % 3]))
            .collect();
        let unlabeled: Vec<_> = (0..2000)
            .map(|i| row(&format!("U{i}"), SentimentLabel::Positive))
            .collect();
        let corpus = assemble_training_corpus(labeled, unlabeled).unwrap();
        assert_eq!(corpus.len(), 2054);
        assert_eq!(corpus.unlabeled().count(), 2000);
        assert!(corpus
            .unlabeled()
            .all(|e| e.example.label == SentimentLabel::Unlabeled));
        assert_eq!(corpus.class_counts(), [18, 18, 18]);
    }

    #[test]
    fn assemble_allows_no_unlabeled() {
        let corpus =
            assemble_training_corpus(vec![row("a", SentimentLabel::Neutral)], vec![]).unwrap();
        assert_eq!(corpus.unlabeled().count(), 0);
    }

    #[test]
    fn assemble_rejects_overlap() {
        let err = assemble_training_corpus(
            vec![row("42", SentimentLabel::Neutral), row("7", SentimentLabel::Neutral)],
            vec![row("42", SentimentLabel::Unlabeled), row("9", SentimentLabel::Unlabeled)],
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("42") && !msg.contains('9'), "{msg}");
    }

    #[test]
    fn file_round_trip_keeps_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        let corpus = assemble_training_corpus(
            vec![row("a", SentimentLabel::Negative)],
            vec![row("b", SentimentLabel::Unlabeled)],
        )
        .unwrap();
        corpus.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"label\":\"UNK_UNK\""));
        assert_eq!(TrainingCorpus::load(&path).unwrap(), corpus);
    }

    #[test]
    fn join_gold_partitions_rows() {
        let gold = vec![
            majority_label(&[
                RaterAnnotation { rater_id: "a".into(), pmid: "1".into(), label: SentimentLabel::Positive },
                RaterAnnotation { rater_id: "b".into(), pmid: "1".into(), label: SentimentLabel::Positive },
                RaterAnnotation { rater_id: "c".into(), pmid: "1".into(), label: SentimentLabel::Neutral },
            ])
            .unwrap(),
            majority_label(&[
                RaterAnnotation { rater_id: "a".into(), pmid: "2".into(), label: SentimentLabel::Positive },
                RaterAnnotation { rater_id: "b".into(), pmid: "2".into(), label: SentimentLabel::Negative },
                RaterAnnotation { rater_id: "c".into(), pmid: "2".into(), label: SentimentLabel::Neutral },
            ])
            .unwrap(),
        ];
        let rows = vec![
            row("1", SentimentLabel::Unlabeled),
            row("2", SentimentLabel::Unlabeled),
            row("3", SentimentLabel::Unlabeled),
        ];
        let j = join_gold(&rows, &gold);
        assert_eq!(j.labeled.len(), 1);
        assert_eq!(j.labeled[0].label, SentimentLabel::Positive);
        assert_eq!(j.unresolved, ["2"]);
        assert_eq!(j.unlabeled[0].pmid, "3");
    }
}
