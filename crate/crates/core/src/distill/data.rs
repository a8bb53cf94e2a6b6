use std::collections::BTreeMap;

use ndarray::Array2;

use super::DistillError;
use crate::corpus::Corpus;
use crate::embedding::EmbeddingCache;
use crate::nn::Dataset;
use crate::teacher::{LabeledSentence, Sentiment};

/// A dataset that remembers which sentence each row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub ids: Vec<String>,
    pub data: Dataset,
    pub classes: Vec<String>,
    /// Labels dropped because their class is not in `classes`.
    pub dropped: usize,
}

impl LabeledData {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> LabeledData {
        LabeledData {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            data: self.data.select(rows),
            classes: self.classes.clone(),
            dropped: 0,
        }
    }

    /// `(id, class index)` pairs, the input of the split functions.
    pub fn items(&self) -> Vec<(String, usize)> {
        self.ids.iter().cloned().zip(self.data.y.iter().copied()).collect()
    }

    pub fn rows_of(&self, ids: &[String]) -> Vec<usize> {
        let index: BTreeMap<&str, usize> = self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        ids.iter().filter_map(|id| index.get(id.as_str()).copied()).collect()
    }
}

/// Stack the (normalized) embeddings of `texts` into a matrix.
pub fn embedding_matrix(cache: &EmbeddingCache, texts: &[String]) -> Result<Array2<f64>, DistillError> {
    let dim = cache.dim();
    let vectors = cache.get_many(texts)?;
    let mut x = Array2::zeros((texts.len(), dim));
    for (mut row, v) in x.rows_mut().into_iter().zip(vectors) {
        for (dst, src) in row.iter_mut().zip(v.values()) {
            *dst = *src as f64;
        }
    }
    Ok(x)
}

fn build(
    rows: Vec<(String, usize)>,
    classes: &[String],
    dropped: usize,
    corpus: &Corpus,
    cache: &EmbeddingCache,
) -> Result<LabeledData, DistillError> {
    let texts: Vec<String> = rows
        .iter()
        .map(|(id, _)| {
            corpus
                .sentence(id)
                .map(|s| s.text.clone())
                .ok_or_else(|| DistillError::MissingData(format!("sentence {id} not in corpus")))
        })
        .collect::<Result<_, _>>()?;
    let x = embedding_matrix(cache, &texts)?;
    let (ids, y): (Vec<String>, Vec<usize>) = rows.into_iter().unzip();
    Ok(LabeledData {
        ids,
        data: Dataset::new(x, y),
        classes: classes.to_vec(),
        dropped,
    })
}

/// Topic-labeled rows whose topic is one of `classes`, in sentence-id order.
pub fn topic_dataset(
    labels: &[LabeledSentence],
    classes: &[String],
    corpus: &Corpus,
    cache: &EmbeddingCache,
) -> Result<LabeledData, DistillError> {
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut rows = Vec::new();
    let mut dropped = 0;
    for l in labels {
        match l.topic.as_deref().and_then(|t| index.get(t)) {
            Some(&k) => rows.push((l.sentence_id.clone(), k)),
            None if l.topic.is_some() => dropped += 1,
            None => {}
        }
    }
    rows.sort();
    rows.dedup_by(|a, b| a.0 == b.0);
    build(rows, classes, dropped, corpus, cache)
}

/// Rows carrying a sentiment label, classes Negative/Neutral/Positive.
pub fn sentiment_dataset(
    labels: &[LabeledSentence],
    corpus: &Corpus,
    cache: &EmbeddingCache,
) -> Result<LabeledData, DistillError> {
    let classes: Vec<String> = (0..3).map(|i| Sentiment::from_index(i).unwrap().to_string()).collect();
    let mut rows: Vec<(String, usize)> = labels
        .iter()
        .filter_map(|l| l.sentiment.map(|s| (l.sentence_id.clone(), s.index())))
        .collect();
    rows.sort();
    rows.dedup_by(|a, b| a.0 == b.0);
    build(rows, &classes, 0, corpus, cache)
}
