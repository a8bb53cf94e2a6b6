//! Rule-based sentence splitter for transcript prose.
//!
//! A whitespace-delimited token whose last non-closing character is `.`, `!`
//! or `?` ends a sentence, unless the token is a known abbreviation or a
//! single capital letter followed by a period (an initial). Output sentences
//! are the original tokens joined by single spaces.

pub const DEFAULT_ABBREVIATIONS: &[&str] = &["i.e.", "e.g.", "vs.", "Inc.", "Corp.", "U.S."];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201D}', '\u{2019}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '{', '\u{201C}', '\u{2018}'];

#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: Vec<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl SentenceSplitter {
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        SentenceSplitter {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| a.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn split(&self, raw: &str) -> Vec<String> {
        let mut sentences = Vec::new();
        let mut current: Vec<&str> = Vec::new();
        for token in raw.split_whitespace() {
            current.push(token);
            if self.ends_sentence(token) {
                sentences.push(current.join(" "));
                current.clear();
            }
        }
        if !current.is_empty() {
            sentences.push(current.join(" "));
        }
        sentences
    }

    fn ends_sentence(&self, token: &str) -> bool {
        let core = token.trim_end_matches(CLOSERS);
        if !core.ends_with(['.', '!', '?']) {
            return false;
        }
        if !core.ends_with('.') {
            return true;
        }
        let bare = core.trim_start_matches(OPENERS);
        !(self.is_abbreviation(bare) || is_initial(bare))
    }

    fn is_abbreviation(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        self.abbreviations.contains(&lower)
    }
}

fn is_initial(word: &str) -> bool {
    let mut chars = word.chars();
    matches!(
        (chars.next(), chars.next(), chars.next()),
        (Some(c), Some('.'), None) if c.is_uppercase()
    )
}

/// Split with the default abbreviation list.
pub fn split_sentences(raw_text: &str) -> Vec<String> {
    SentenceSplitter::default().split(raw_text)
}
