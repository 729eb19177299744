//! The three-class sentiment label space plus the unlabeled sentinel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of real sentiment classes.
pub const NUM_CLASSES: usize = 3;

/// Sentinel string carried by unlabeled examples.
pub const UNLABELED_TAG: &str = "UNK_UNK";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SentimentLabel {
    Positive,
    Negative,
    Neutral,
    Unlabeled,
}

impl SentimentLabel {
    /// The real classes in their fixed order. Indices into logits, confusion
    /// matrices and probability vectors all follow this order.
    pub const CLASSES: [SentimentLabel; NUM_CLASSES] = [
        SentimentLabel::Positive,
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Positive => "POSITIVE",
            SentimentLabel::Negative => "NEGATIVE",
            SentimentLabel::Neutral => "NEUTRAL",
            SentimentLabel::Unlabeled => UNLABELED_TAG,
        }
    }

    /// Position of a real class; `None` for the unlabeled sentinel.
    pub fn class_index(self) -> Option<usize> {
        match self {
            SentimentLabel::Positive => Some(0),
            SentimentLabel::Negative => Some(1),
            SentimentLabel::Neutral => Some(2),
            SentimentLabel::Unlabeled => None,
        }
    }

    pub fn from_class_index(index: usize) -> Option<Self> {
        Self::CLASSES.get(index).copied()
    }

    pub fn is_real(self) -> bool {
        self != SentimentLabel::Unlabeled
    }

    /// Like [`class_index`](Self::class_index) but errors on the sentinel.
    pub fn require_class(self) -> Result<usize> {
        self.class_index()
            .ok_or_else(|| Error::invalid("expected a real sentiment class, found UNK_UNK"))
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "POSITIVE" | "POS" => Ok(SentimentLabel::Positive),
            "NEGATIVE" | "NEG" => Ok(SentimentLabel::Negative),
            "NEUTRAL" | "NEU" => Ok(SentimentLabel::Neutral),
            UNLABELED_TAG => Ok(SentimentLabel::Unlabeled),
            other => Err(Error::invalid(format!("unknown sentiment label {other:?}"))),
        }
    }
}

impl Serialize for SentimentLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SentimentLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Where a row entering the discriminator came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Labeled,
    Unlabeled,
    Fake,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unlabeled_serializes_as_sentinel() {
        let json = serde_json::to_string(&SentimentLabel::Unlabeled).unwrap();
        assert_eq!(json, "\"UNK_UNK\"");
        let back: SentimentLabel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, SentimentLabel::Unlabeled);
    }

    #[test]
    fn class_order_is_fixed() {
        for (i, c) in SentimentLabel::CLASSES.iter().enumerate() {
            assert_eq!(c.class_index(), Some(i));
            assert_eq!(SentimentLabel::from_class_index(i), Some(*c));
        }
        assert!(SentimentLabel::Unlabeled.require_class().is_err());
    }

    #[test]
    fn rejects_unknown_label() {
        assert!("MAYBE".parse::<SentimentLabel>().is_err());
    }
}
