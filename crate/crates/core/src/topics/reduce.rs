use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, KMeansOptions};
use super::TopicError;
use crate::teacher::LabeledSentence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicStats {
    pub topic: String,
    pub n_k: usize,
    pub share: f64,
}

/// Count labeled sentences per topic. Topics in `universe` with no sentence
/// are reported with `n_k = 0`. Output is sorted by descending count, then
/// name.
pub fn topic_stats(labels: &[LabeledSentence], universe: &[String]) -> Vec<TopicStats> {
    let mut counts: BTreeMap<String, usize> = universe.iter().map(|t| (t.clone(), 0)).collect();
    for topic in labels.iter().filter_map(|l| l.topic.as_ref()) {
        *counts.entry(topic.clone()).or_default() += 1;
    }
    let total: usize = counts.values().sum();
    let mut stats: Vec<TopicStats> = counts
        .into_iter()
        .map(|(topic, n_k)| TopicStats {
            topic,
            n_k,
            share: if total == 0 {
                0.0
            } else {
                n_k as f64 / total as f64
            },
        })
        .collect();
    sort_stats(&mut stats);
    stats
}

fn sort_stats(stats: &mut [TopicStats]) {
    stats.sort_by(|a, b| b.n_k.cmp(&a.n_k).then_with(|| a.topic.cmp(&b.topic)));
}

/// Keep every topic whose share of labeled sentences is at least
/// `threshold`, most frequent first.
pub fn reduce_by_threshold(stats: &[TopicStats], threshold: f64) -> Result<Vec<String>, TopicError> {
    if stats.is_empty() {
        return Err(TopicError::EmptyStats);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(TopicError::InvalidThreshold(threshold));
    }
    let mut kept: Vec<TopicStats> = stats
        .iter()
        .filter(|s| s.share >= threshold - 1e-12)
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(TopicError::EmptyReduction);
    }
    sort_stats(&mut kept);
    Ok(kept.into_iter().map(|s| s.topic).collect())
}

/// Keep the shortest most-frequent-first prefix of topics whose cumulative
/// share reaches `coverage`.
pub fn reduce_by_coverage(stats: &[TopicStats], coverage: f64) -> Result<Vec<String>, TopicError> {
    if stats.is_empty() {
        return Err(TopicError::EmptyStats);
    }
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(TopicError::InvalidThreshold(coverage));
    }
    let mut sorted = stats.to_vec();
    sort_stats(&mut sorted);
    let mut cumulative = 0.0;
    let mut kept = Vec::new();
    for s in sorted {
        if cumulative >= coverage - 1e-12 {
            break;
        }
        cumulative += s.share;
        kept.push(s.topic);
    }
    if kept.is_empty() {
        return Err(TopicError::EmptyReduction);
    }
    Ok(kept)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub objective: f64,
    pub assignments: BTreeMap<String, usize>,
    pub representatives: BTreeMap<usize, String>,
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.into_iter().map(|x| x / norm).collect()
    } else {
        v
    }
}

/// Cluster unit-normalized topic-name embeddings and keep one medoid per
/// cluster: the member nearest its centroid, ties broken by larger `n_k`,
/// then name. Output is sorted by descending `n_k`, then name.
pub fn reduce_by_clustering<F>(
    stats: &[TopicStats],
    embedding: F,
    k: usize,
    seed: u64,
) -> Result<(Vec<String>, ClusterReport), TopicError>
where
    F: Fn(&str) -> Option<Vec<f64>>,
{
    if stats.is_empty() {
        return Err(TopicError::EmptyStats);
    }
    let vectors: Vec<Vec<f64>> = stats
        .iter()
        .map(|s| {
            embedding(&s.topic)
                .map(normalized)
                .ok_or_else(|| TopicError::MissingEmbedding(s.topic.clone()))
        })
        .collect::<Result<_, _>>()?;
    let clusters = kmeans(&vectors, k, seed, KMeansOptions::default())?;

    let mut representatives = BTreeMap::new();
    for c in 0..k {
        let best = stats
            .iter()
            .zip(&vectors)
            .zip(&clusters.assignments)
            .filter(|(_, &a)| a == c)
            .map(|((s, v), _)| {
                let d: f64 = v
                    .iter()
                    .zip(&clusters.centroids[c])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                (d, s)
            })
            .min_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then_with(|| b.1.n_k.cmp(&a.1.n_k))
                    .then_with(|| a.1.topic.cmp(&b.1.topic))
            });
        if let Some((_, s)) = best {
            representatives.insert(c, s.topic.clone());
        }
    }
    let assignments = stats
        .iter()
        .zip(&clusters.assignments)
        .map(|(s, &a)| (s.topic.clone(), a))
        .collect();
    let mut kept: Vec<TopicStats> = stats
        .iter()
        .filter(|s| representatives.values().any(|r| *r == s.topic))
        .cloned()
        .collect();
    sort_stats(&mut kept);
    Ok((
        kept.into_iter().map(|s| s.topic).collect(),
        ClusterReport {
            k,
            objective: clusters.objective,
            assignments,
            representatives,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teacher::LabelSource;

    fn stat(topic: &str, n_k: usize, total: usize) -> TopicStats {
        TopicStats {
            topic: topic.into(),
            n_k,
            share: n_k as f64 / total as f64,
        }
    }

    #[test]
    fn threshold_keeps_frequent_topics() {
        let stats = vec![stat("C", 1, 100), stat("A", 97, 100), stat("B", 2, 100)];
        assert_eq!(reduce_by_threshold(&stats, 0.02).unwrap(), vec!["A", "B"]);
    }

    #[test]
    fn threshold_single_topic() {
        assert_eq!(
            reduce_by_threshold(&[stat("Only", 5, 5)], 0.02).unwrap(),
            vec!["Only"]
        );
    }

    #[test]
    fn threshold_nothing_survives() {
        let stats: Vec<_> = (0..100).map(|i| stat(&format!("T{i}"), 1, 100)).collect();
        assert_eq!(
            reduce_by_threshold(&stats, 0.02).unwrap_err(),
            TopicError::EmptyReduction
        );
    }

    #[test]
    fn threshold_is_order_free() {
        let mut stats = vec![stat("A", 50, 100), stat("B", 30, 100), stat("C", 20, 100)];
        let a = reduce_by_threshold(&stats, 0.1).unwrap();
        stats.reverse();
        assert_eq!(a, reduce_by_threshold(&stats, 0.1).unwrap());
    }

    #[test]
    fn coverage_prefix() {
        let stats = vec![stat("A", 60, 100), stat("B", 25, 100), stat("C", 15, 100)];
        assert_eq!(reduce_by_coverage(&stats, 0.8).unwrap(), vec!["A", "B"]);
        assert_eq!(reduce_by_coverage(&stats, 0.6).unwrap(), vec!["A"]);
        assert_eq!(reduce_by_coverage(&stats, 1.0).unwrap().len(), 3);
    }

    #[test]
    fn stats_from_labels() {
        let label = |t: &str| LabeledSentence {
            sentence_id: "x".into(),
            topic: Some(t.into()),
            sentiment: None,
            source: LabelSource::Teacher,
            raw_response_ref: None,
        };
        let labels = vec![label("A"), label("B"), label("A")];
        let stats = topic_stats(&labels, &["Z".to_string()]);
        assert_eq!(stats[0].topic, "A");
        assert_eq!(stats[0].n_k, 2);
        assert_eq!(stats[2].topic, "Z");
        assert_eq!(stats[2].n_k, 0);
        let total: f64 = stats.iter().map(|s| s.share).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn clustering_keeps_all_when_k_equals_count() {
        let stats: Vec<_> = (0..10).map(|i| stat(&format!("T{i}"), 10 - i, 55)).collect();
        let emb = |t: &str| {
            let i: usize = t[1..].parse().ok()?;
            let mut v = vec![0.0; 10];
            v[i] = 1.0;
            Some(v)
        };
        let (kept, report) = reduce_by_clustering(&stats, emb, 10, 1).unwrap();
        assert_eq!(kept.len(), 10);
        assert_eq!(report.representatives.len(), 10);
    }

    #[test]
    fn duplicate_vectors_prefer_larger_count() {
        let stats = vec![stat("Small", 3, 10), stat("Large", 7, 10)];
        let (kept, _) = reduce_by_clustering(&stats, |_| Some(vec![1.0, 2.0]), 1, 5).unwrap();
        assert_eq!(kept, vec!["Large"]);
    }

    #[test]
    fn missing_embedding() {
        let stats = vec![stat("A", 1, 1)];
        assert_eq!(
            reduce_by_clustering(&stats, |_| None, 1, 0).unwrap_err(),
            TopicError::MissingEmbedding("A".into())
        );
    }
}
