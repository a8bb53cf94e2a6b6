use std::collections::BTreeMap;
use std::io::Write;

use super::TopicStats;
use crate::corpus::Corpus;
use crate::rng::{sample_indices, seeded, stable_hash};
use crate::teacher::LabeledSentence;

/// Write the expert review sheet: one row per topic with its count, share and
/// up to `per_topic` example sentences drawn deterministically from `seed`.
pub fn export_review_sheet<W: Write>(
    out: W,
    stats: &[TopicStats],
    labels: &[LabeledSentence],
    corpus: &Corpus,
    per_topic: usize,
    seed: u64,
) -> csv::Result<()> {
    let mut by_topic: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for l in labels {
        if let (Some(topic), Some(s)) = (&l.topic, corpus.sentence(&l.sentence_id)) {
            by_topic.entry(topic.as_str()).or_default().push(s.text.as_str());
        }
    }
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["topic".to_string(), "n_k".to_string(), "share".to_string()];
    header.extend((1..=per_topic).map(|i| format!("example_{i}")));
    writer.write_record(&header)?;
    if labels.is_empty() {
        return writer.flush().map_err(Into::into);
    }
    for s in stats {
        let pool = by_topic.get(s.topic.as_str()).cloned().unwrap_or_default();
        let take = per_topic.min(pool.len());
        let mut rng = seeded(stable_hash(seed, &s.topic));
        let mut picked = sample_indices(&mut rng, pool.len(), take);
        picked.sort_unstable();
        let mut row = vec![s.topic.clone(), s.n_k.to_string(), format!("{:.6}", s.share)];
        row.extend(picked.iter().map(|&i| pool[i].to_string()));
        row.resize(3 + per_topic, String::new());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Transcript;
    use crate::teacher::LabelSource;
    use crate::topics::topic_stats;
    use chrono::NaiveDate;

    fn fixture() -> (Corpus, Vec<LabeledSentence>) {
        let texts: Vec<String> = (0..13).map(|i| format!("Sentence number {i}.")).collect();
        let date = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let corpus =
            Corpus::new(vec![Transcript::from_sentences("D", "C", date, "S", &texts)]).unwrap();
        let topics = ["A", "B", "C", "D", "E"];
        let labels = corpus
            .sentences()
            .enumerate()
            .map(|(i, s)| LabeledSentence {
                sentence_id: s.sentence_id.clone(),
                topic: Some(topics[if i == 12 { 4 } else { i % 4 }].to_string()),
                sentiment: None,
                source: LabelSource::Teacher,
                raw_response_ref: None,
            })
            .collect();
        (corpus, labels)
    }

    fn sheet(labels: &[LabeledSentence], corpus: &Corpus, n: usize) -> Vec<csv::StringRecord> {
        let stats = topic_stats(labels, &[]);
        let mut buf = Vec::new();
        export_review_sheet(&mut buf, &stats, labels, corpus, n, 3).unwrap();
        csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(buf.as_slice())
            .records()
            .map(Result::unwrap)
            .collect()
    }

    #[test]
    fn five_topics_three_examples() {
        let (corpus, labels) = fixture();
        let rows = sheet(&labels, &corpus, 3);
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].len(), 6);
        for row in &rows[1..5] {
            assert!(row.iter().skip(3).all(|c| !c.is_empty()));
        }
        let e = rows.iter().find(|r| &r[0] == "E").unwrap();
        assert_eq!(e.iter().skip(3).filter(|c| !c.is_empty()).count(), 1);
    }

    #[test]
    fn empty_labels_header_only() {
        let (corpus, _) = fixture();
        let rows = sheet(&[], &corpus, 2);
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn deterministic() {
        let (corpus, labels) = fixture();
        assert_eq!(sheet(&labels, &corpus, 2), sheet(&labels, &corpus, 2));
    }
}
