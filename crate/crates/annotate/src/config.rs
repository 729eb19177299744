use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use trialsent_core::SentimentLabel;

use crate::error::{ApiError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaterConfig {
    pub id: String,
    pub token: String,
    /// Queue-order seed; derived from the project seed and rater id when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Label definition shown to raters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelDefinition {
    pub label: SentimentLabel,
    pub shortcut: String,
    pub definition: String,
}

pub fn default_rubric() -> Vec<LabelDefinition> {
    vec![
        LabelDefinition {
            label: SentimentLabel::Positive,
            shortcut: "1".into(),
            definition: "The authors conclude that the findings are favorable.".into(),
        },
        LabelDefinition {
            label: SentimentLabel::Negative,
            shortcut: "2".into(),
            definition: "The authors conclude that the findings are unfavorable.".into(),
        },
        LabelDefinition {
            label: SentimentLabel::Neutral,
            shortcut: "3".into(),
            definition: "The conclusion is equivocal or states no difference.".into(),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotateConfig {
    pub raters: Vec<RaterConfig>,
    pub admin_token: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rubric")]
    pub rubric: Vec<LabelDefinition>,
}

impl AnnotateConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.raters.is_empty() {
            problems.push("at least one rater is required".to_string());
        }
        if self.admin_token.trim().is_empty() {
            problems.push("admin_token must be non-empty".to_string());
        }
        let mut ids = BTreeSet::new();
        let mut tokens = BTreeSet::from([self.admin_token.as_str()]);
        for r in &self.raters {
            if r.id.trim().is_empty() {
                problems.push("rater id must be non-empty".to_string());
            }
            if !ids.insert(r.id.as_str()) {
                problems.push(format!("rater {} is listed twice", r.id));
            }
            if r.token.trim().is_empty() {
                problems.push(format!("rater {} has an empty token", r.id));
            } else if !tokens.insert(r.token.as_str()) {
                problems.push(format!("rater {} reuses another principal's token", r.id));
            }
        }
        for class in SentimentLabel::CLASSES {
            if !self.rubric.iter().any(|d| d.label == class) {
                problems.push(format!("rubric has no definition for {class}"));
            }
        }
        if self.rubric.iter().any(|d| !d.label.is_real()) {
            problems.push("rubric may only define the three real classes".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ApiError::BadRequest(problems.join("; ")))
        }
    }
}
