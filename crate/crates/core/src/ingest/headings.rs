//! Section-heading detection for structured abstracts.

use serde::{Deserialize, Serialize};

const DEFAULT_HEADINGS: &[&str] = &[
    "BACKGROUND",
    "BACKGROUND AND AIMS",
    "BACKGROUND AND OBJECTIVES",
    "INTRODUCTION",
    "IMPORTANCE",
    "CONTEXT",
    "PURPOSE",
    "AIM",
    "AIMS",
    "OBJECTIVE",
    "OBJECTIVES",
    "STUDY OBJECTIVE",
    "DESIGN",
    "STUDY DESIGN",
    "SETTING",
    "SETTINGS",
    "DESIGN, SETTING, AND PARTICIPANTS",
    "PARTICIPANTS",
    "PATIENTS",
    "PATIENTS AND METHODS",
    "INTERVENTION",
    "INTERVENTIONS",
    "METHOD",
    "METHODS",
    "MATERIALS AND METHODS",
    "METHODS AND RESULTS",
    "MEASUREMENTS",
    "MAIN OUTCOME MEASURES",
    "MAIN OUTCOMES AND MEASURES",
    "OUTCOMES",
    "RESULT",
    "RESULTS",
    "FINDINGS",
    "DISCUSSION",
    "LIMITATIONS",
    "CONCLUSION",
    "CONCLUSIONS",
    "CONCLUSIONS AND RELEVANCE",
    "INTERPRETATION",
    "TRIAL REGISTRATION",
    "CLINICAL TRIAL REGISTRATION",
    "FUNDING",
    "LEVEL OF EVIDENCE",
];

const DEFAULT_CONCLUSION_HEADINGS: &[&str] = &[
    "CONCLUSION",
    "CONCLUSIONS",
    "INTERPRETATION",
    "CONCLUSIONS AND RELEVANCE",
];

/// Configurable set of recognised headings. Matching is case-insensitive and
/// a heading only counts when it is followed by a colon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadingLexicon {
    pub headings: Vec<String>,
    pub conclusion_headings: Vec<String>,
}

impl Default for HeadingLexicon {
    fn default() -> Self {
        Self::new(
            DEFAULT_HEADINGS.iter().map(|s| s.to_string()),
            DEFAULT_CONCLUSION_HEADINGS.iter().map(|s| s.to_string()),
        )
    }
}

impl HeadingLexicon {
    /// Conclusion headings are always added to the general heading list.
    pub fn new(
        headings: impl IntoIterator<Item = String>,
        conclusion_headings: impl IntoIterator<Item = String>,
    ) -> Self {
        let conclusion_headings: Vec<String> = conclusion_headings
            .into_iter()
            .map(|h| normalize_heading(&h))
            .collect();
        let mut headings: Vec<String> = headings.into_iter().map(|h| normalize_heading(&h)).collect();
        headings.extend(conclusion_headings.iter().cloned());
        // longest first so "CONCLUSIONS AND RELEVANCE" wins over "CONCLUSIONS"
        headings.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        headings.dedup();
        Self {
            headings,
            conclusion_headings,
        }
    }

    pub fn is_conclusion(&self, heading: &str) -> bool {
        let h = normalize_heading(heading);
        self.conclusion_headings.iter().any(|c| *c == h)
    }

    /// Length in bytes of the heading (including the colon and trailing
    /// whitespace) starting at `text[pos..]`, along with the heading as written.
    fn match_at<'t>(&self, text: &'t str, pos: usize) -> Option<(&'t str, usize)> {
        let rest = &text[pos..];
        for heading in &self.headings {
            let n = heading.len();
            if rest.len() <= n || !rest.is_char_boundary(n) {
                continue;
            }
            if !rest[..n].eq_ignore_ascii_case(heading) {
                continue;
            }
            let after = &rest[n..];
            let trimmed = after.trim_start_matches([' ', '\t']);
            if let Some(body) = trimmed.strip_prefix(':') {
                let body_start = body.len() - body.trim_start().len();
                let consumed = rest.len() - body.len() + body_start;
                return Some((&rest[..n], consumed));
            }
        }
        None
    }

    /// Splits an abstract at recognised heading boundaries. Returns an empty
    /// list when no heading is found. Text before the first heading is kept
    /// under an empty heading.
    pub fn split_sections(&self, text: &str) -> Vec<(String, String)> {
        let mut marks: Vec<(usize, usize, String)> = Vec::new();
        let mut pos = 0;
        while pos < text.len() {
            if is_boundary(text, pos) {
                if let Some((heading, consumed)) = self.match_at(text, pos) {
                    marks.push((pos, pos + consumed, heading.trim().to_string()));
                    pos += consumed;
                    continue;
                }
            }
            pos += text[pos..].chars().next().map_or(1, char::len_utf8);
        }
        if marks.is_empty() {
            return Vec::new();
        }
        let mut sections = Vec::with_capacity(marks.len() + 1);
        let preamble = text[..marks[0].0].trim();
        if !preamble.is_empty() {
            sections.push((String::new(), preamble.to_string()));
        }
        for (i, (_, body_start, heading)) in marks.iter().enumerate() {
            let end = marks.get(i + 1).map_or(text.len(), |m| m.0);
            sections.push((heading.clone(), text[*body_start..end].trim().to_string()));
        }
        sections
    }
}

fn normalize_heading(h: &str) -> String {
    h.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_ascii_uppercase()
}

/// A heading may start the text or follow whitespace that follows the end of
/// a previous sentence or section.
fn is_boundary(text: &str, pos: usize) -> bool {
    if pos == 0 {
        return true;
    }
    let before = &text[..pos];
    if !before.ends_with(char::is_whitespace) {
        return false;
    }
    match before.trim_end().chars().last() {
        None => true,
        Some(c) => matches!(c, '.' | '!' | '?' | ')' | ']' | ';' | ':' | '"' | '\'' | '%'),
    }
}
