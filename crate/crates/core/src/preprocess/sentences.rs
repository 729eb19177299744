//! Rule-based sentence segmentation tuned for biomedical abstracts.

/// Words that end in a period without ending the sentence. Compared
/// case-insensitively with the trailing period removed.
const ABBREVIATIONS: &[&str] = &[
    "e.g", "i.e", "vs", "v", "al", "fig", "figs", "approx", "cf", "ca", "dr", "mr", "mrs", "ms",
    "prof", "st", "jr", "sr", "inc", "ltd", "co", "eq", "vol", "pp", "resp", "incl", "viz", "no",
    "nos", "ref", "refs",
];

const CLOSERS: &[char] = &[')', ']', '"', '\'', '\u{2019}', '\u{201D}'];

/// Ordered sentences of one text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceList {
    pub sentences: Vec<String>,
}

impl SentenceList {
    /// Total number of sentences.
    pub fn total(&self) -> usize {
        self.sentences.len()
    }

    /// The last `n` sentences joined by single spaces.
    pub fn tail(&self, n: usize) -> String {
        let start = self.sentences.len().saturating_sub(n);
        self.sentences[start..].join(" ")
    }
}

fn word_before(text: &str, end: usize) -> &str {
    let start = text[..end]
        .rfind(char::is_whitespace)
        .map_or(0, |i| i + text[i..].chars().next().map_or(1, char::len_utf8));
    text[start..end].trim_start_matches(['(', '[', '"', '\'', '\u{201C}', '\u{2018}'])
}

fn is_abbreviation(word: &str) -> bool {
    if word.chars().count() == 1 && word.chars().all(char::is_uppercase) {
        // single-letter initial; lowercase units such as "y." or "h." end sentences
        return true;
    }
    ABBREVIATIONS.iter().any(|a| a.eq_ignore_ascii_case(word))
}

/// Splits `text` into sentences. Never returns an empty list for text that
/// contains a non-whitespace character; the worst case is one sentence.
pub fn segment_sentences(text: &str) -> SentenceList {
    let mut sentences = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let first_terminator = pos;
        let mut j = i;
        while j + 1 < chars.len() && matches!(chars[j + 1].1, '.' | '!' | '?') {
            j += 1;
        }
        while j + 1 < chars.len() && CLOSERS.contains(&chars[j + 1].1) {
            j += 1;
        }
        let end = chars.get(j + 1).map_or(text.len(), |(p, _)| *p);
        let at_end = j + 1 >= chars.len();
        let followed_by_space = at_end || chars[j + 1].1.is_whitespace();
        if !followed_by_space {
            i = j + 1;
            continue;
        }
        let next_visible = chars[j + 1..].iter().map(|(_, c)| *c).find(|c| !c.is_whitespace());
        let mut boundary = true;
        if let Some(next) = next_visible {
            if next.is_lowercase() {
                boundary = false;
            }
        }
        if boundary && c == '.' && is_abbreviation(word_before(text, first_terminator)) {
            boundary = false;
        }
        if boundary {
            let sentence = text[start..end].trim();
            if !sentence.is_empty() {
                sentences.push(sentence.to_string());
            }
            start = end;
        }
        i = j + 1;
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        sentences.push(rest.to_string());
    }
    SentenceList { sentences }
}
