use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::error::{Error, Result};
use crate::label::SentimentLabel;

/// One rater's label for one abstract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaterAnnotation {
    #[serde(rename = "rater")]
    pub rater_id: String,
    pub pmid: String,
    pub label: SentimentLabel,
}

/// Majority-vote outcome for one abstract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub pmid: String,
    /// `None` when the raters split three ways.
    pub label: Option<SentimentLabel>,
    pub vote_counts: BTreeMap<SentimentLabel, usize>,
    pub resolved: bool,
}

/// Number of designated gold raters per abstract.
pub const GOLD_PANEL_SIZE: usize = 3;

/// Strict-plurality vote over exactly three annotations of one abstract.
pub fn majority_label(annotations: &[RaterAnnotation]) -> Result<GoldLabel> {
    if annotations.len() != GOLD_PANEL_SIZE {
        return Err(Error::invalid(format!(
            "majority vote needs exactly {GOLD_PANEL_SIZE} annotations, got {}",
            annotations.len()
        )));
    }
    let pmid = &annotations[0].pmid;
    let mut raters = BTreeSet::new();
    let mut vote_counts: BTreeMap<SentimentLabel, usize> = BTreeMap::new();
    for a in annotations {
        if &a.pmid != pmid {
            return Err(Error::invalid(format!(
                "annotations mix PMIDs {pmid} and {}",
                a.pmid
            )));
        }
        if !raters.insert(a.rater_id.as_str()) {
            return Err(Error::invalid(format!(
                "rater {} annotated {pmid} more than once",
                a.rater_id
            )));
        }
        if !a.label.is_real() {
            return Err(Error::invalid(format!(
                "rater {} gave {pmid} the unlabeled sentinel",
                a.rater_id
            )));
        }
        *vote_counts.entry(a.label).or_default() += 1;
    }
    let max = vote_counts.values().copied().max().unwrap_or(0);
    let leaders: Vec<SentimentLabel> = vote_counts
        .iter()
        .filter(|(_, &c)| c == max)
        .map(|(l, _)| *l)
        .collect();
    let label = (leaders.len() == 1).then(|| leaders[0]);
    Ok(GoldLabel {
        pmid: pmid.clone(),
        label,
        vote_counts,
        resolved: label.is_some(),
    })
}

/// Result of aggregating an annotations file.
#[derive(Debug, Clone, Default)]
pub struct Aggregation {
    /// One entry per abstract, in PMID order, including unresolved ones.
    pub gold: Vec<GoldLabel>,
    /// Annotations from raters outside the gold panel, kept for comparison.
    pub held_out: Vec<RaterAnnotation>,
}

impl Aggregation {
    pub fn resolved(&self) -> impl Iterator<Item = &GoldLabel> {
        self.gold.iter().filter(|g| g.resolved)
    }

    /// Three-way ties awaiting adjudication.
    pub fn unresolved(&self) -> impl Iterator<Item = &GoldLabel> {
        self.gold.iter().filter(|g| !g.resolved)
    }
}

/// Chooses the gold panel: the configured raters, or every rater when the
/// file holds exactly three.
pub fn gold_panel(annotations: &[RaterAnnotation], configured: &[String]) -> Result<Vec<String>> {
    if !configured.is_empty() {
        if configured.len() != GOLD_PANEL_SIZE {
            return Err(Error::config(format!(
                "gold panel must name exactly {GOLD_PANEL_SIZE} raters, got {}",
                configured.len()
            )));
        }
        return Ok(configured.to_vec());
    }
    let raters: BTreeSet<&str> = annotations.iter().map(|a| a.rater_id.as_str()).collect();
    if raters.len() == GOLD_PANEL_SIZE {
        Ok(raters.into_iter().map(str::to_string).collect())
    } else {
        Err(Error::config(format!(
            "{} raters present; designate the {GOLD_PANEL_SIZE} gold raters explicitly",
            raters.len()
        )))
    }
}

/// Groups annotations by abstract and majority-votes the gold panel's labels.
pub fn aggregate(annotations: &[RaterAnnotation], gold_raters: &[String]) -> Result<Aggregation> {
    let panel: BTreeSet<&str> = gold_raters.iter().map(String::as_str).collect();
    let mut by_pmid: BTreeMap<&str, Vec<RaterAnnotation>> = BTreeMap::new();
    let mut held_out = Vec::new();
    for a in annotations {
        if panel.contains(a.rater_id.as_str()) {
            by_pmid.entry(a.pmid.as_str()).or_default().push(a.clone());
        } else {
            held_out.push(a.clone());
        }
    }
    let mut gold = Vec::with_capacity(by_pmid.len());
    for (pmid, group) in by_pmid {
        let g = majority_label(&group).map_err(|e| Error::invalid(format!("{pmid}: {e}")))?;
        if !g.resolved {
            warn!(pmid, "three-way tie; queued for adjudication");
        }
        gold.push(g);
    }
    Ok(Aggregation { gold, held_out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentimentLabel::*;

    fn ann(r: &str, l: SentimentLabel) -> RaterAnnotation {
        RaterAnnotation {
            rater_id: r.into(),
            pmid: "1".into(),
            label: l,
        }
    }

    #[test]
    fn majority_examples() {
        let g = majority_label(&[ann("a", Positive), ann("b", Positive), ann("c", Neutral)]).unwrap();
        assert_eq!(g.label, Some(Positive));
        assert!(g.resolved);
        assert_eq!(g.vote_counts[&Positive], 2);

        let g = majority_label(&[ann("a", Neutral), ann("b", Neutral), ann("c", Neutral)]).unwrap();
        assert_eq!(g.label, Some(Neutral));

        let g = majority_label(&[ann("a", Positive), ann("b", Negative), ann("c", Neutral)]).unwrap();
        assert!(!g.resolved);
        assert_eq!(g.label, None);
        assert_eq!(g.vote_counts.len(), 3);
    }

    #[test]
    fn majority_input_errors() {
        assert!(majority_label(&[ann("a", Positive), ann("b", Positive)]).is_err());
        assert!(majority_label(&[ann("a", Positive), ann("a", Positive), ann("c", Neutral)]).is_err());
        assert!(majority_label(&[ann("a", Positive), ann("b", Unlabeled), ann("c", Neutral)]).is_err());
        let mut other = ann("c", Neutral);
        other.pmid = "2".into();
        assert!(majority_label(&[ann("a", Positive), ann("b", Positive), other]).is_err());
    }

    #[test]
    fn aggregate_separates_held_out_rater() {
        let mut anns = Vec::new();
        for (pmid, labels) in [("1", [Positive, Positive, Negative, Neutral]), ("2", [Neutral, Negative, Positive, Neutral])] {
            for (r, l) in ["a", "b", "c", "d"].iter().zip(labels) {
                anns.push(RaterAnnotation {
                    rater_id: r.to_string(),
                    pmid: pmid.into(),
                    label: l,
                });
            }
        }
        let panel = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let agg = aggregate(&anns, &panel).unwrap();
        assert_eq!(agg.gold.len(), 2);
        assert_eq!(agg.resolved().count(), 1);
        assert_eq!(agg.unresolved().next().unwrap().pmid, "2");
        assert_eq!(agg.held_out.len(), 2);
        assert!(gold_panel(&anns, &[]).is_err());
        assert_eq!(gold_panel(&anns, &panel).unwrap(), panel);
    }

    #[test]
    fn gold_label_json_shape() {
        let g = majority_label(&[ann("a", Positive), ann("b", Positive), ann("c", Neutral)]).unwrap();
        let json = serde_json::to_value(&g).unwrap();
        assert_eq!(json["label"], "POSITIVE");
        assert_eq!(json["vote_counts"]["NEUTRAL"], 1);
    }
}
