//! Confusion matrices, accuracy and F1 for model or rater labels against
//! gold labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::RaterAnnotation;
use crate::error::{Error, Result};
use crate::label::{SentimentLabel, NUM_CLASSES};

/// Rows are gold classes, columns predicted classes, both in
/// POSITIVE, NEGATIVE, NEUTRAL order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix {
    pub counts: [[usize; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn gold_count(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    pub fn predicted_count(&self, class: usize) -> usize {
        self.counts.iter().map(|row| row[class]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
    pub per_class_f1: [f64; NUM_CLASSES],
    pub macro_f1: f64,
    pub n: usize,
}

pub fn confusion(pairs: &[(SentimentLabel, SentimentLabel)]) -> Result<ConfusionMatrix> {
    let mut m = ConfusionMatrix::default();
    for (i, &(gold, pred)) in pairs.iter().enumerate() {
        let (Some(g), Some(p)) = (gold.class_index(), pred.class_index()) else {
            return Err(Error::invalid(format!(
                "pair {i} contains the unlabeled sentinel ({gold}, {pred})"
            )));
        };
        m.counts[g][p] += 1;
    }
    Ok(m)
}

pub fn metrics(matrix: &ConfusionMatrix) -> Result<EvalReport> {
    let n = matrix.total();
    if n == 0 {
        return Err(Error::invalid("cannot compute metrics over zero examples"));
    }
    let mut per_class_f1 = [0.0; NUM_CLASSES];
    for (c, f1) in per_class_f1.iter_mut().enumerate() {
        let tp = matrix.counts[c][c] as f64;
        let predicted = matrix.predicted_count(c) as f64;
        let gold = matrix.gold_count(c) as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if gold > 0.0 { tp / gold } else { 0.0 };
        *f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
    }
    Ok(EvalReport {
        matrix: *matrix,
        accuracy: matrix.trace() as f64 / n as f64,
        per_class_f1,
        macro_f1: per_class_f1.iter().sum::<f64>() / NUM_CLASSES as f64,
        n,
    })
}

/// Any labeled row keyed by PMID. Accepts gold-label documents (whose label
/// may be null for unresolved abstracts), tokenized rows and prediction rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRef {
    pub pmid: String,
    pub label: Option<SentimentLabel>,
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub pmid: String,
    pub label: SentimentLabel,
    pub probs: [f64; NUM_CLASSES],
}

impl From<&PredictionRow> for LabeledRef {
    fn from(p: &PredictionRow) -> Self {
        LabeledRef {
            pmid: p.pmid.clone(),
            label: Some(p.label),
        }
    }
}

/// Usable gold labels: resolved and not the unlabeled sentinel.
fn gold_map(gold: &[LabeledRef]) -> Result<BTreeMap<&str, SentimentLabel>> {
    let mut out = BTreeMap::new();
    for g in gold {
        if let Some(label) = g.label.filter(|l| l.is_real()) {
            if out.insert(g.pmid.as_str(), label).is_some() {
                return Err(Error::invalid(format!("gold label for {} appears twice", g.pmid)));
            }
        }
    }
    Ok(out)
}

/// Scores `predicted` against every usable gold label. Every gold PMID must
/// be covered; predictions for PMIDs without gold are ignored.
pub fn evaluate_labels(predicted: &[LabeledRef], gold: &[LabeledRef]) -> Result<EvalReport> {
    let gold = gold_map(gold)?;
    let mut pred: BTreeMap<&str, SentimentLabel> = BTreeMap::new();
    for p in predicted {
        let label = p
            .label
            .filter(|l| l.is_real())
            .ok_or_else(|| Error::invalid(format!("prediction for {} has no class", p.pmid)))?;
        if pred.insert(p.pmid.as_str(), label).is_some() {
            return Err(Error::invalid(format!("{} is labeled more than once", p.pmid)));
        }
    }
    let gaps: Vec<&str> = gold.keys().filter(|k| !pred.contains_key(*k)).copied().collect();
    if !gaps.is_empty() {
        return Err(Error::invalid(format!(
            "no label for {} gold abstract(s): {}",
            gaps.len(),
            gaps.join(", ")
        )));
    }
    let pairs: Vec<_> = gold.iter().map(|(k, g)| (*g, pred[k])).collect();
    metrics(&confusion(&pairs)?)
}

/// Treats one rater's annotations as predictions.
pub fn compare_rater(rater: &[RaterAnnotation], gold: &[LabeledRef]) -> Result<EvalReport> {
    let raters: BTreeSet<&str> = rater.iter().map(|a| a.rater_id.as_str()).collect();
    if raters.len() > 1 {
        return Err(Error::invalid(format!(
            "expected one rater's annotations, found {}",
            raters.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let predicted: Vec<LabeledRef> = rater
        .iter()
        .map(|a| LabeledRef {
            pmid: a.pmid.clone(),
            label: Some(a.label),
        })
        .collect();
    evaluate_labels(&predicted, gold)
}

/// Aligned plain-text comparison table.
pub fn render_table(rows: &[(String, EvalReport)]) -> String {
    let width = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(std::iter::once("Classifier".len()))
        .max()
        .unwrap_or(10);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>5}", "Classifier", "Accuracy", "F1-Score", "n");
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>7.1}%  {:>8.3}  {:>5}",
            name,
            100.0 * r.accuracy,
            r.macro_f1,
            r.n
        );
    }
    out
}

/// Plain-text confusion matrix with class names.
pub fn render_matrix(matrix: &ConfusionMatrix) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<10}", "gold\\pred");
    for c in SentimentLabel::CLASSES {
        let _ = write!(out, " {:>9}", c.as_str());
    }
    out.push('\n');
    for (g, row) in matrix.counts.iter().enumerate() {
        let _ = write!(out, "{:<10}", SentimentLabel::CLASSES[g].as_str());
        for v in row {
            let _ = write!(out, " {v:>9}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentimentLabel::*;

    #[test]
    fn diagonal_matrix() {
        let pairs = [(Positive, Positive), (Negative, Negative), (Neutral, Neutral)].repeat(2);
        let m = confusion(&pairs).unwrap();
        assert_eq!(m.counts, [[2, 0, 0], [0, 2, 0], [0, 0, 2]]);
        let r = metrics(&m).unwrap();
        assert_eq!((r.accuracy, r.macro_f1), (1.0, 1.0));
    }

    #[test]
    fn hand_computed_f1() {
        let m = ConfusionMatrix {
            counts: [[5, 0, 0], [0, 0, 5], [0, 0, 5]],
        };
        let r = metrics(&m).unwrap();
        assert!((r.accuracy - 10.0 / 15.0).abs() < 1e-12);
        assert_eq!(r.per_class_f1[0], 1.0);
        assert_eq!(r.per_class_f1[1], 0.0);
        assert!((r.per_class_f1[2] - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.macro_f1 - 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_sentinel_inputs() {
        let m = confusion(&[]).unwrap();
        assert_eq!(m.total(), 0);
        assert!(metrics(&m).is_err());
        assert!(confusion(&[(Unlabeled, Positive)]).is_err());
    }

    #[test]
    fn rater_gaps_are_listed() {
        let gold = vec![
            LabeledRef { pmid: "1".into(), label: Some(Positive) },
            LabeledRef { pmid: "2".into(), label: Some(Negative) },
            LabeledRef { pmid: "3".into(), label: None },
        ];
        let rater = vec![RaterAnnotation { rater_id: "r4".into(), pmid: "1".into(), label: Positive }];
        let err = compare_rater(&rater, &gold).unwrap_err().to_string();
        assert!(err.contains('2') && !err.contains("3"), "{err}");
    }

    #[test]
    fn table_has_all_rows() {
        let r = metrics(&ConfusionMatrix { counts: [[1, 0, 0], [0, 1, 0], [0, 0, 1]] }).unwrap();
        let t = render_table(&[("model".into(), r.clone()), ("rater".into(), r)]);
        assert_eq!(t.lines().count(), 3);
        assert!(t.contains("100.0%"));
    }
}
