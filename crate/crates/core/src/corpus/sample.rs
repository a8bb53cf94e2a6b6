use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Sentence};
use crate::rng;

/// A seeded uniform sample, without replacement, of the corpus sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSample {
    pub fraction: f64,
    pub seed: u64,
    pub sentence_ids: Vec<String>,
}

impl SentenceSample {
    pub fn len(&self) -> usize {
        self.sentence_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence_ids.is_empty()
    }
}

/// Sample size given either as a fraction of the corpus or an absolute count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSize {
    Fraction(f64),
    Count(usize),
}

impl SampleSize {
    /// Resolve to a fraction of a corpus with `total` sentences.
    pub fn fraction(self, total: usize) -> f64 {
        match self {
            SampleSize::Fraction(f) => f,
            SampleSize::Count(n) if total == 0 => n as f64,
            SampleSize::Count(n) => n as f64 / total as f64,
        }
    }
}

/// floor(fraction × total), tolerant to decimal fractions that are not exact
/// in binary (0.29 × 100 must give 29).
fn sample_count(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64) + 1e-9).floor() as usize
}

fn ordered_sentences(corpus: &Corpus) -> Vec<&Sentence> {
    let mut all: Vec<&Sentence> = corpus.sentences().collect();
    all.sort_by(|a, b| (&a.doc_id, a.index_j).cmp(&(&b.doc_id, b.index_j)));
    all
}

/// Draw floor(fraction × |S|) sentences uniformly without replacement.
/// The result is sorted by (doc_id, index_j).
pub fn sample_sentences(
    corpus: &Corpus,
    fraction: f64,
    seed: u64,
) -> Result<SentenceSample, CorpusError> {
    sample_sentences_excluding(corpus, fraction, seed, None)
}

/// As [`sample_sentences`], drawing only from sentences not in `exclude`.
/// The sample size is still measured against the whole corpus.
pub fn sample_sentences_excluding(
    corpus: &Corpus,
    fraction: f64,
    seed: u64,
    exclude: Option<&SentenceSample>,
) -> Result<SentenceSample, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CorpusError::InvalidFraction(fraction));
    }
    let total = corpus.counts().sentences;
    let requested = sample_count(fraction, total);
    let excluded: HashSet<&str> = exclude
        .map(|s| s.sentence_ids.iter().map(String::as_str).collect())
        .unwrap_or_default();
    let pool: Vec<&Sentence> = ordered_sentences(corpus)
        .into_iter()
        .filter(|s| !excluded.contains(s.sentence_id.as_str()))
        .collect();
    if requested > pool.len() {
        return Err(CorpusError::InsufficientPool {
            requested,
            available: pool.len(),
        });
    }
    let mut generator = rng::seeded(seed);
    let mut picked = rng::sample_indices(&mut generator, pool.len(), requested);
    picked.sort_unstable();
    Ok(SentenceSample {
        fraction,
        seed,
        sentence_ids: picked
            .into_iter()
            .map(|i| pool[i].sentence_id.clone())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Transcript;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn corpus_of(sizes: &[usize]) -> Corpus {
        let date = NaiveDate::from_ymd_opt(2022, 5, 1).unwrap();
        let transcripts = sizes
            .iter()
            .enumerate()
            .map(|(d, &n)| {
                let texts: Vec<String> = (0..n).map(|j| format!("Sentence {d} {j}.")).collect();
                Transcript::from_sentences(&format!("D{d:03}"), "C", date, "S", &texts)
            })
            .collect();
        Corpus::new(transcripts).unwrap()
    }

    #[test]
    fn fraction_of_ten() {
        let corpus = corpus_of(&[4, 6]);
        let s = sample_sentences(&corpus, 0.2, 7).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn full_fraction_takes_all() {
        let corpus = corpus_of(&[3, 5, 2]);
        let s = sample_sentences(&corpus, 1.0, 99).unwrap();
        assert_eq!(s.len(), 10);
        let mut sorted = s.sentence_ids.clone();
        sorted.sort();
        assert_eq!(sorted, s.sentence_ids);
    }

    #[test]
    fn deterministic_bytes() {
        let corpus = corpus_of(&[30, 20]);
        let a = serde_json::to_vec(&sample_sentences(&corpus, 0.3, 11).unwrap()).unwrap();
        let b = serde_json::to_vec(&sample_sentences(&corpus, 0.3, 11).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_corpus_rejected() {
        let corpus = Corpus::new(vec![]).unwrap();
        assert!(matches!(
            sample_sentences(&corpus, 0.5, 1),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    #[test]
    fn invalid_fraction_rejected() {
        let corpus = corpus_of(&[3]);
        assert!(sample_sentences(&corpus, 0.0, 1).is_err());
        assert!(sample_sentences(&corpus, 1.5, 1).is_err());
    }

    #[test]
    fn exclusion_keeps_samples_disjoint() {
        let corpus = corpus_of(&[40, 60]);
        let first = sample_sentences(&corpus, 0.3, 1).unwrap();
        let second = sample_sentences_excluding(&corpus, 0.5, 2, Some(&first)).unwrap();
        assert_eq!(second.len(), 50);
        let a: HashSet<_> = first.sentence_ids.iter().collect();
        assert!(second.sentence_ids.iter().all(|id| !a.contains(id)));
        assert!(matches!(
            sample_sentences_excluding(&corpus, 0.8, 2, Some(&first)),
            Err(CorpusError::InsufficientPool { requested: 80, available: 70 })
        ));
    }

    #[test]
    fn count_converts_to_fraction() {
        let corpus = corpus_of(&[7, 6]);
        let f = SampleSize::Count(5).fraction(13);
        assert_eq!(sample_sentences(&corpus, f, 3).unwrap().len(), 5);
    }

    proptest! {
        #[test]
        fn sample_size_law(total in 1usize..=1000, permille in 1u32..=1000, seed: u64) {
            let fraction = permille as f64 / 1000.0;
            let corpus = corpus_of(&[total]);
            let s = sample_sentences(&corpus, fraction, seed).unwrap();
            prop_assert_eq!(s.len(), total * permille as usize / 1000);
            let unique: HashSet<_> = s.sentence_ids.iter().collect();
            prop_assert_eq!(unique.len(), s.len());
            for id in &s.sentence_ids {
                prop_assert!(corpus.sentence(id).is_some());
            }
        }
    }
}
