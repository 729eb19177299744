//! Sentiment proportions grouped by publication year or medical field.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::PredictionRow;
use crate::ingest::AbstractRecord;
use crate::label::NUM_CLASSES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Year,
    Field,
}

impl std::str::FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "year" => Ok(Self::Year),
            "field" => Ok(Self::Field),
            other => Err(Error::config(format!("group_by must be year or field, not {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub key: String,
    pub counts: [usize; NUM_CLASSES],
    pub fractions: [f64; NUM_CLASSES],
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendTable {
    pub group_by: GroupBy,
    pub rows: Vec<TrendRow>,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Year(i32),
    Field(String),
}

pub fn trend(predictions: &[PredictionRow], records: &[AbstractRecord], group_by: GroupBy) -> Result<TrendTable> {
    let by_pmid: BTreeMap<&str, &AbstractRecord> = records.iter().map(|r| (r.pmid.as_str(), r)).collect();
    let orphans: BTreeSet<&str> = predictions
        .iter()
        .map(|p| p.pmid.as_str())
        .filter(|p| !by_pmid.contains_key(p))
        .collect();
    if !orphans.is_empty() {
        return Err(Error::invalid(format!(
            "{} prediction(s) have no matching record: {}",
            orphans.len(),
            orphans.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let mut groups: BTreeMap<Key, [usize; NUM_CLASSES]> = BTreeMap::new();
    for p in predictions {
        let class = p.label.require_class()?;
        let record = by_pmid[p.pmid.as_str()];
        let key = match group_by {
            GroupBy::Year => Key::Year(record.year),
            GroupBy::Field => {
                if record.field.is_empty() {
                    return Err(Error::invalid(format!("record {} has no field", record.pmid)));
                }
                Key::Field(record.field.clone())
            }
        };
        groups.entry(key).or_default()[class] += 1;
    }
    let rows = groups
        .into_iter()
        .map(|(key, counts)| {
            let total: usize = counts.iter().sum();
            let mut fractions = [0.0; NUM_CLASSES];
            for (f, &c) in fractions.iter_mut().zip(&counts) {
                *f = c as f64 / total as f64;
            }
            TrendRow {
                key: match key {
                    Key::Year(y) => y.to_string(),
                    Key::Field(f) => f,
                },
                counts,
                fractions,
                total,
            }
        })
        .collect();
    Ok(TrendTable { group_by, rows })
}

impl TrendTable {
    pub fn to_csv(&self) -> String {
        let key = match self.group_by {
            GroupBy::Year => "year",
            GroupBy::Field => "field",
        };
        let mut out = format!(
            "{key},positive,negative,neutral,total,frac_positive,frac_negative,frac_neutral\n"
        );
        for r in &self.rows {
            let quoted = if r.key.contains([',', '"']) {
                format!("\"{}\"", r.key.replace('"', "\"\""))
            } else {
                r.key.clone()
            };
            let _ = writeln!(
                out,
                "{quoted},{},{},{},{},{:.6},{:.6},{:.6}",
                r.counts[0], r.counts[1], r.counts[2], r.total, r.fractions[0], r.fractions[1], r.fractions[2]
            );
        }
        out
    }
}
