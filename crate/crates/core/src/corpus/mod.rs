//! Transcript corpus: documents, their sentences, and seeded samples of the
//! sentence collection.

mod sample;
mod segment;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sample::{sample_sentences, sample_sentences_excluding, SampleSize, SentenceSample};
pub use segment::{split_sentences, SentenceSplitter, DEFAULT_ABBREVIATIONS};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed record(s) at line(s) {}", join_lines(.lines))]
    MalformedRecord { lines: Vec<usize> },
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("corpus has no sentences")]
    EmptyCorpus,
    #[error("sample fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("requested {requested} sentences but only {available} remain after exclusion")]
    InsufficientPool { requested: usize, available: usize },
    #[error("unknown sentence id {0:?}")]
    UnknownSentence(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_lines(lines: &[usize]) -> String {
    lines.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: String,
    pub doc_id: String,
    pub index_j: usize,
    pub text: String,
    pub word_count: usize,
}

impl Sentence {
    pub fn new(doc_id: &str, index_j: usize, text: &str) -> Self {
        let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
        let word_count = text.split_whitespace().count();
        Sentence {
            sentence_id: sentence_id(doc_id, index_j),
            doc_id: doc_id.to_string(),
            index_j,
            text,
            word_count,
        }
    }
}

/// Sentence ids are `<doc_id>#<index>` with a zero-padded index, so that the
/// lexicographic id order follows (doc_id, index_j).
pub fn sentence_id(doc_id: &str, index_j: usize) -> String {
    format!("{doc_id}#{index_j:06}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub doc_id: String,
    pub company_id: String,
    pub call_date: NaiveDate,
    pub sector: String,
    pub sentences: Vec<Sentence>,
}

impl Transcript {
    /// Build a transcript from already-split sentence texts. Blank entries
    /// are skipped and line breaks inside entries are collapsed.
    pub fn from_sentences<S: AsRef<str>>(
        doc_id: &str,
        company_id: &str,
        call_date: NaiveDate,
        sector: &str,
        texts: &[S],
    ) -> Self {
        let sentences = texts
            .iter()
            .map(|t| t.as_ref())
            .filter(|t| !t.trim().is_empty())
            .enumerate()
            .map(|(j, t)| Sentence::new(doc_id, j, t))
            .collect();
        Transcript {
            doc_id: doc_id.to_string(),
            company_id: company_id.to_string(),
            call_date,
            sector: sector.to_string(),
            sentences,
        }
    }

    /// J_i, the number of sentences in the call.
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// An immutable collection of transcripts with an id index over sentences.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    transcripts: Vec<Transcript>,
    by_sentence: HashMap<String, (usize, usize)>,
    by_doc: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub documents: usize,
    pub sentences: usize,
}

impl Corpus {
    pub fn new(transcripts: Vec<Transcript>) -> Result<Self, CorpusError> {
        let mut by_doc = HashMap::with_capacity(transcripts.len());
        let mut by_sentence = HashMap::new();
        for (d, t) in transcripts.iter().enumerate() {
            if by_doc.insert(t.doc_id.clone(), d).is_some() {
                return Err(CorpusError::DuplicateDocId(t.doc_id.clone()));
            }
            for (s, sentence) in t.sentences.iter().enumerate() {
                by_sentence.insert(sentence.sentence_id.clone(), (d, s));
            }
        }
        Ok(Corpus {
            transcripts,
            by_sentence,
            by_doc,
        })
    }

    pub fn transcripts(&self) -> &[Transcript] {
        &self.transcripts
    }

    pub fn transcript(&self, doc_id: &str) -> Option<&Transcript> {
        self.by_doc.get(doc_id).map(|&d| &self.transcripts[d])
    }

    pub fn sentence(&self, sentence_id: &str) -> Option<&Sentence> {
        self.by_sentence
            .get(sentence_id)
            .map(|&(d, s)| &self.transcripts[d].sentences[s])
    }

    /// The transcript owning a sentence.
    pub fn parent(&self, sentence_id: &str) -> Option<&Transcript> {
        self.by_sentence
            .get(sentence_id)
            .map(|&(d, _)| &self.transcripts[d])
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.transcripts.iter().flat_map(|t| t.sentences.iter())
    }

    pub fn counts(&self) -> CorpusCounts {
        CorpusCounts {
            documents: self.transcripts.len(),
            sentences: self.by_sentence.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.by_sentence.is_empty()
    }

    /// Write the normalized corpus as line-delimited JSON (pre-split form).
    pub fn to_jsonl(&self) -> Result<String, CorpusError> {
        let mut out = String::new();
        for t in &self.transcripts {
            let record = RecordOut {
                doc_id: &t.doc_id,
                company_id: &t.company_id,
                call_date: t.call_date,
                sector: &t.sector,
                sentences: t.sentences.iter().map(|s| s.text.as_str()).collect(),
            };
            out.push_str(&serde_json::to_string(&record)?);
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Debug, Deserialize)]
struct RecordIn {
    doc_id: String,
    company_id: String,
    call_date: NaiveDate,
    sector: String,
    #[serde(default)]
    sentences: Option<Vec<String>>,
    #[serde(default)]
    text: Option<String>,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    doc_id: &'a str,
    company_id: &'a str,
    call_date: NaiveDate,
    sector: &'a str,
    sentences: Vec<&'a str>,
}

/// Read a line-delimited transcript file. Every malformed line is reported
/// (1-based line numbers) before anything is returned.
pub fn ingest_transcripts(path: &Path) -> Result<Corpus, CorpusError> {
    let file = fs::File::open(path)?;
    ingest_reader(BufReader::new(file), &SentenceSplitter::default())
}

pub fn ingest_reader<R: BufRead>(
    reader: R,
    splitter: &SentenceSplitter,
) -> Result<Corpus, CorpusError> {
    let mut transcripts = Vec::new();
    let mut bad = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RecordIn = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(_) => {
                bad.push(i + 1);
                continue;
            }
        };
        let texts = match (record.sentences, record.text) {
            (Some(s), _) => s,
            (None, Some(raw)) => splitter.split(&raw),
            (None, None) => {
                bad.push(i + 1);
                continue;
            }
        };
        if record.doc_id.is_empty() || record.doc_id.contains('#') {
            bad.push(i + 1);
            continue;
        }
        if !seen.insert(record.doc_id.clone()) {
            return Err(CorpusError::DuplicateDocId(record.doc_id));
        }
        transcripts.push(Transcript::from_sentences(
            &record.doc_id,
            &record.company_id,
            record.call_date,
            &record.sector,
            &texts,
        ));
    }
    if !bad.is_empty() {
        return Err(CorpusError::MalformedRecord { lines: bad });
    }
    let corpus = Corpus::new(transcripts)?;
    let counts = corpus.counts();
    log::info!(
        "ingested {} documents, {} sentences",
        counts.documents,
        counts.sentences
    );
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn ingest(text: &str) -> Result<Corpus, CorpusError> {
        ingest_reader(Cursor::new(text), &SentenceSplitter::default())
    }

    const GOOD_A: &str = r#"{"doc_id":"A-1","company_id":"A","call_date":"2021-02-03","sector":"Energy","sentences":["Revenue grew 5%.","Margins improved."]}"#;
    const GOOD_B: &str = r#"{"doc_id":"B-1","company_id":"B","call_date":"2021-02-10","sector":"Utilities","text":"We beat guidance. Dividends are up!"}"#;

    #[test]
    fn two_records() {
        let corpus = ingest(&format!("{GOOD_A}\n{GOOD_B}\n")).unwrap();
        assert_eq!(
            corpus.counts(),
            CorpusCounts {
                documents: 2,
                sentences: 4
            }
        );
        let b = corpus.transcript("B-1").unwrap();
        assert_eq!(b.sentences[1].text, "Dividends are up!");
        assert_eq!(b.sentences[1].word_count, 3);
        assert_eq!(corpus.parent("B-1#000001").unwrap().company_id, "B");
    }

    #[test]
    fn empty_file() {
        let corpus = ingest("").unwrap();
        assert_eq!(corpus.counts().documents, 0);
        assert_eq!(corpus.counts().sentences, 0);
    }

    #[test]
    fn truncated_record_reported_by_line() {
        let truncated = &GOOD_B[..40];
        match ingest(&format!("{GOOD_A}\n{truncated}\n")) {
            Err(CorpusError::MalformedRecord { lines }) => assert_eq!(lines, vec![2]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn all_bad_lines_listed() {
        match ingest("nope\n{}\n") {
            Err(CorpusError::MalformedRecord { lines }) => assert_eq!(lines, vec![1, 2]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_doc_id() {
        assert!(matches!(
            ingest(&format!("{GOOD_A}\n{GOOD_A}\n")),
            Err(CorpusError::DuplicateDocId(id)) if id == "A-1"
        ));
    }

    #[test]
    fn sentence_text_has_no_line_breaks() {
        let t = Transcript::from_sentences(
            "d",
            "c",
            NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            "s",
            &["one\ntwo  three", "   "],
        );
        assert_eq!(t.len(), 1);
        assert_eq!(t.sentences[0].text, "one two three");
        assert_eq!(t.sentences[0].word_count, 3);
    }

    #[test]
    fn jsonl_round_trip() {
        let corpus = ingest(&format!("{GOOD_A}\n{GOOD_B}\n")).unwrap();
        let again = ingest(&corpus.to_jsonl().unwrap()).unwrap();
        assert_eq!(corpus.transcripts(), again.transcripts());
    }
}
