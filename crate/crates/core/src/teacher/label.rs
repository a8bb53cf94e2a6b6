//! Batch labeling against a teacher endpoint, with retries, bounded
//! concurrency and a resumable on-disk checkpoint.

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::endpoint::{TeacherEndpoint, TeacherRequest, TransportError};
use super::parse::{parse_classification, parse_topic_list, Discard};
use super::prompt::PromptBuilder;
use super::{AttritionReport, LabelSource, LabeledSentence, TeacherError, TeacherResponse};
use crate::corpus::{Corpus, SentenceSample};
use crate::util::{sha256_hex, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Extra attempts after the first one, for transport failures only.
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    /// Sentences per request.
    pub batch_size: usize,
    /// Requests in flight at once.
    pub max_in_flight: usize,
    pub with_sentiment: bool,
    /// Stamp responses with a logical clock instead of wall time.
    pub deterministic_timestamps: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 200,
            max_delay_ms: 5_000,
            batch_size: 20,
            max_in_flight: 4,
            with_sentiment: true,
            deterministic_timestamps: false,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let exp = self
            .base_delay_ms
            .saturating_mul(1u64 << (attempt.saturating_sub(1)).min(20));
        Duration::from_millis(exp.min(self.max_delay_ms))
    }

    fn timestamp(&self, batch: usize) -> DateTime<Utc> {
        if self.deterministic_timestamps {
            Utc.timestamp_opt(batch as i64, 0).single().unwrap_or_default()
        } else {
            Utc::now()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardRecord {
    pub sentence_id: String,
    pub reason: Discard,
    pub request_id: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelRun {
    pub labels: Vec<LabeledSentence>,
    pub report: AttritionReport,
    pub responses: Vec<TeacherResponse>,
    pub discards: Vec<DiscardRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCursor {
    pub next_batch: usize,
    pub total_batches: usize,
    pub run_digest: String,
    pub report: AttritionReport,
    pub labels_bytes: u64,
    pub responses_bytes: u64,
    pub discards_bytes: u64,
}

const CURSOR_FILE: &str = "cursor.json";
const LABELS_FILE: &str = "labels.partial.jsonl";
const RESPONSES_FILE: &str = "responses.jsonl";
const DISCARDS_FILE: &str = "discards.jsonl";

/// Send one request, retrying transport errors with exponential backoff.
fn send_with_retry(
    endpoint: &dyn TeacherEndpoint,
    request_id: &str,
    prompt: &str,
    first_ordinal: u64,
    policy: &RetryPolicy,
) -> Result<(String, u32), (u32, TransportError)> {
    let mut attempt = 1;
    loop {
        let request = TeacherRequest {
            request_id: request_id.to_string(),
            prompt: prompt.to_string(),
            first_ordinal,
            attempt,
        };
        match endpoint.complete(&request) {
            Ok(text) => return Ok((text, attempt)),
            Err(e) if attempt > policy.max_retries => return Err((attempt, e)),
            Err(e) => {
                log::warn!("{request_id} attempt {attempt} failed: {e}");
                thread::sleep(policy.delay(attempt));
                attempt += 1;
            }
        }
    }
}

struct Job {
    index: usize,
    request_id: String,
    prompt: String,
    first_ordinal: u64,
}

type JobResult = Result<(String, u32), (u32, TransportError)>;

/// Run jobs concurrently; results come back in job order.
fn run_wave(endpoint: &dyn TeacherEndpoint, jobs: &[Job], policy: &RetryPolicy) -> Vec<JobResult> {
    if jobs.len() == 1 {
        let j = &jobs[0];
        return vec![send_with_retry(endpoint, &j.request_id, &j.prompt, j.first_ordinal, policy)];
    }
    thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|j| {
                scope.spawn(move || {
                    send_with_retry(endpoint, &j.request_id, &j.prompt, j.first_ordinal, policy)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("teacher worker panicked"))
            .collect()
    })
}

/// Labels, responses and discards produced since the last commit.
#[derive(Default)]
struct Pending {
    labels: Vec<LabeledSentence>,
    responses: Vec<TeacherResponse>,
    discards: Vec<DiscardRecord>,
    report: AttritionReport,
}

struct Checkpoint {
    dir: Option<PathBuf>,
    cursor: LabelCursor,
    run: LabelRun,
}

fn append_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<u64, TeacherError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item)?;
        buf.push(b'\n');
    }
    file.write_all(&buf)?;
    file.sync_all()?;
    Ok(file.metadata()?.len())
}

fn read_jsonl_prefix<T: for<'de> Deserialize<'de>>(
    path: &Path,
    bytes: u64,
) -> Result<Vec<T>, TeacherError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = OpenOptions::new().write(true).read(true).open(path)?;
    file.set_len(bytes)?;
    let mut out = Vec::new();
    for line in BufReader::new(fs::File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

impl Checkpoint {
    fn open(dir: Option<&Path>, run_digest: String, total_batches: usize) -> Result<Self, TeacherError> {
        let fresh = LabelCursor {
            next_batch: 0,
            total_batches,
            run_digest: run_digest.clone(),
            report: AttritionReport::default(),
            labels_bytes: 0,
            responses_bytes: 0,
            discards_bytes: 0,
        };
        let Some(dir) = dir else {
            return Ok(Checkpoint {
                dir: None,
                cursor: fresh,
                run: LabelRun::default(),
            });
        };
        fs::create_dir_all(dir)?;
        let cursor_path = dir.join(CURSOR_FILE);
        let existing: Option<LabelCursor> = match fs::read(&cursor_path) {
            Ok(bytes) => Some(serde_json::from_slice(&bytes)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        match existing {
            Some(c) if c.run_digest == run_digest && c.total_batches == total_batches => {
                let run = LabelRun {
                    labels: read_jsonl_prefix(&dir.join(LABELS_FILE), c.labels_bytes)?,
                    responses: read_jsonl_prefix(&dir.join(RESPONSES_FILE), c.responses_bytes)?,
                    discards: read_jsonl_prefix(&dir.join(DISCARDS_FILE), c.discards_bytes)?,
                    report: c.report.clone(),
                };
                log::info!("resuming labeling at batch {} of {}", c.next_batch, c.total_batches);
                Ok(Checkpoint {
                    dir: Some(dir.to_path_buf()),
                    cursor: c,
                    run,
                })
            }
            other => {
                if other.is_some() {
                    log::warn!("checkpoint in {} belongs to a different run; starting over", dir.display());
                }
                for f in [LABELS_FILE, RESPONSES_FILE, DISCARDS_FILE] {
                    let p = dir.join(f);
                    if p.exists() {
                        fs::remove_file(p)?;
                    }
                }
                let cp = Checkpoint {
                    dir: Some(dir.to_path_buf()),
                    cursor: fresh,
                    run: LabelRun::default(),
                };
                cp.write_cursor()?;
                Ok(cp)
            }
        }
    }

    fn write_cursor(&self) -> Result<(), TeacherError> {
        if let Some(dir) = &self.dir {
            let bytes = crate::util::to_json_pretty(&self.cursor)?;
            write_atomic(&dir.join(CURSOR_FILE), &bytes)?;
        }
        Ok(())
    }

    /// Durably append `pending`, then advance the cursor to `next_batch`.
    fn commit(&mut self, pending: Pending, next_batch: usize) -> Result<(), TeacherError> {
        if let Some(dir) = &self.dir {
            self.cursor.labels_bytes = append_jsonl(&dir.join(LABELS_FILE), &pending.labels)?;
            self.cursor.responses_bytes =
                append_jsonl(&dir.join(RESPONSES_FILE), &pending.responses)?;
            self.cursor.discards_bytes = append_jsonl(&dir.join(DISCARDS_FILE), &pending.discards)?;
        }
        self.run.labels.extend(pending.labels);
        self.run.responses.extend(pending.responses);
        self.run.discards.extend(pending.discards);
        self.run.report.merge(&pending.report);
        self.cursor.report = self.run.report.clone();
        self.cursor.next_batch = next_batch;
        self.write_cursor()
    }
}

/// Label every sentence of `sample` with the teacher, `policy.batch_size`
/// sentences per request. Transport failures are retried; format failures
/// are discarded and counted. With a checkpoint directory, progress is
/// committed after each wave of requests and a later call resumes from the
/// cursor.
pub fn label_dataset(
    corpus: &Corpus,
    sample: &SentenceSample,
    topics: &[String],
    endpoint: &dyn TeacherEndpoint,
    policy: &RetryPolicy,
    checkpoint: Option<&Path>,
) -> Result<LabelRun, TeacherError> {
    if topics.is_empty() {
        return Err(TeacherError::EmptyTopicList);
    }
    let items: Vec<(&str, &str)> = sample
        .sentence_ids
        .iter()
        .map(|id| {
            corpus
                .sentence(id)
                .map(|s| (s.sentence_id.as_str(), s.text.as_str()))
                .ok_or_else(|| TeacherError::UnknownSentence(id.clone()))
        })
        .collect::<Result<_, _>>()?;
    let batch_size = policy.batch_size.max(1);
    let builder = PromptBuilder {
        batch_limit: batch_size,
    };
    let batches: Vec<&[(&str, &str)]> = items.chunks(batch_size).collect();
    let digest = run_digest(sample, topics, policy);
    let mut state = Checkpoint::open(checkpoint, digest, batches.len())?;

    let mut b = state.cursor.next_batch;
    while b < batches.len() {
        let wave_end = (b + policy.max_in_flight.max(1)).min(batches.len());
        let jobs: Vec<Job> = (b..wave_end)
            .map(|i| {
                let texts: Vec<String> = batches[i].iter().map(|(_, t)| t.to_string()).collect();
                Ok(Job {
                    index: i,
                    request_id: format!("label-{i:06}"),
                    prompt: builder.classification(topics, &texts, policy.with_sentiment)?,
                    first_ordinal: (i * batch_size) as u64,
                })
            })
            .collect::<Result<_, TeacherError>>()?;
        let results = run_wave(endpoint, &jobs, policy);
        let mut pending = Pending::default();
        for (job, result) in jobs.iter().zip(results) {
            let (raw, attempt) = match result {
                Ok(r) => r,
                Err((attempts, e)) => {
                    state.commit(pending, job.index)?;
                    return Err(TeacherError::EndpointUnreachable {
                        cursor: job.index,
                        attempts,
                        message: e.to_string(),
                    });
                }
            };
            let batch = batches[job.index];
            let outcomes = parse_classification(&raw, topics, batch.len(), policy.with_sentiment);
            for ((sentence_id, _), outcome) in batch.iter().zip(&outcomes) {
                pending.report.record(outcome);
                match outcome {
                    Ok(c) => pending.labels.push(LabeledSentence {
                        sentence_id: sentence_id.to_string(),
                        topic: Some(c.topic.clone()),
                        sentiment: c.sentiment,
                        source: LabelSource::Teacher,
                        raw_response_ref: Some(job.request_id.clone()),
                    }),
                    Err(reason) => pending.discards.push(DiscardRecord {
                        sentence_id: sentence_id.to_string(),
                        reason: *reason,
                        request_id: job.request_id.clone(),
                    }),
                }
            }
            pending.responses.push(TeacherResponse {
                request_id: job.request_id.clone(),
                raw_text: raw,
                received_at: policy.timestamp(job.index),
                attempt,
            });
        }
        state.commit(pending, wave_end)?;
        b = wave_end;
    }
    let mut run = state.run;
    run.labels.sort_by(|a, b| a.sentence_id.cmp(&b.sentence_id));
    debug_assert!(run.report.is_consistent());
    Ok(run)
}

fn run_digest(sample: &SentenceSample, topics: &[String], policy: &RetryPolicy) -> String {
    let mut key = String::new();
    for id in &sample.sentence_ids {
        key.push_str(id);
        key.push('\n');
    }
    key.push_str(&topics.join("\u{1f}"));
    key.push_str(&format!("|{}|{}", policy.batch_size, policy.with_sentiment));
    sha256_hex(key.as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryRun {
    pub topics: Vec<String>,
    pub responses: Vec<TeacherResponse>,
    pub malformed_responses: usize,
}

/// Ask the teacher for topics over `sample`, batch by batch, and merge the
/// semicolon-separated answers (case-insensitive de-duplication, first
/// spelling kept, first-seen order).
pub fn discover_topics(
    corpus: &Corpus,
    sample: &SentenceSample,
    endpoint: &dyn TeacherEndpoint,
    policy: &RetryPolicy,
) -> Result<DiscoveryRun, TeacherError> {
    let texts: Vec<String> = sample
        .sentence_ids
        .iter()
        .map(|id| {
            corpus
                .sentence(id)
                .map(|s| s.text.clone())
                .ok_or_else(|| TeacherError::UnknownSentence(id.clone()))
        })
        .collect::<Result<_, _>>()?;
    let batch_size = policy.batch_size.max(1);
    let builder = PromptBuilder {
        batch_limit: batch_size,
    };
    let jobs: Vec<Job> = texts
        .chunks(batch_size)
        .enumerate()
        .map(|(i, chunk)| {
            Ok(Job {
                index: i,
                request_id: format!("discover-{i:06}"),
                prompt: builder.topic_discovery(chunk)?,
                first_ordinal: (i * batch_size) as u64,
            })
        })
        .collect::<Result<_, TeacherError>>()?;

    let mut topics: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut responses = Vec::new();
    let mut malformed = 0;
    for wave in jobs.chunks(policy.max_in_flight.max(1)) {
        for (job, result) in wave.iter().zip(run_wave(endpoint, wave, policy)) {
            let (raw, attempt) = result.map_err(|(attempts, e)| TeacherError::EndpointUnreachable {
                cursor: job.index,
                attempts,
                message: e.to_string(),
            })?;
            match parse_topic_list(&raw) {
                Ok(found) => {
                    for t in found {
                        if seen.insert(t.to_lowercase()) {
                            topics.push(t);
                        }
                    }
                }
                Err(_) => malformed += 1,
            }
            responses.push(TeacherResponse {
                request_id: job.request_id.clone(),
                raw_text: raw,
                received_at: policy.timestamp(job.index),
                attempt,
            });
        }
    }
    Ok(DiscoveryRun {
        topics,
        responses,
        malformed_responses: malformed,
    })
}

pub fn write_labels(path: &Path, labels: &[LabeledSentence]) -> Result<(), TeacherError> {
    let mut buf = Vec::new();
    for l in labels {
        serde_json::to_writer(&mut buf, l)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<LabeledSentence>, TeacherError> {
    let mut out = Vec::new();
    for line in BufReader::new(fs::File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{sample_sentences, Corpus, Transcript};
    use crate::teacher::{MockConfig, MockTeacher};
    use chrono::NaiveDate;

    fn corpus(n: usize) -> Corpus {
        let texts: Vec<String> = (0..n)
            .map(|i| match i % 3 {
                0 => format!("Revenue grew {i} percent."),
                1 => format!("Dividend payout rose by {i} cents."),
                _ => format!("We thank caller number {i}."),
            })
            .collect();
        let date = NaiveDate::from_ymd_opt(2020, 1, 15).unwrap();
        Corpus::new(vec![Transcript::from_sentences("D", "C", date, "S", &texts)]).unwrap()
    }

    fn topics() -> Vec<String> {
        ["Revenue", "Dividend & Buyback", "Others"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn fast_policy() -> RetryPolicy {
        RetryPolicy {
            base_delay_ms: 0,
            max_delay_ms: 0,
            deterministic_timestamps: true,
            ..RetryPolicy::default()
        }
    }

    #[test]
    fn clean_mock_labels_everything() {
        let c = corpus(100);
        let sample = sample_sentences(&c, 1.0, 1).unwrap();
        let mock = MockTeacher::new(MockConfig::default());
        let run = label_dataset(&c, &sample, &topics(), &mock, &fast_policy(), None).unwrap();
        assert_eq!(run.labels.len(), 100);
        assert_eq!(run.report.well_formed, 100);
        assert_eq!(run.report.discarded_format + run.report.discarded_unknown_topic, 0);
        assert_eq!(run.responses.len(), 5);
        assert!(run.labels.iter().all(|l| l.sentiment.is_some()));
    }

    #[test]
    fn dead_endpoint_reports_cursor_zero() {
        let c = corpus(30);
        let sample = sample_sentences(&c, 1.0, 1).unwrap();
        let mock = MockTeacher::new(MockConfig {
            unreachable: true,
            ..MockConfig::default()
        });
        let dir = tempfile::tempdir().unwrap();
        let err = label_dataset(&c, &sample, &topics(), &mock, &fast_policy(), Some(dir.path()))
            .unwrap_err();
        match err {
            TeacherError::EndpointUnreachable { cursor, attempts, .. } => {
                assert_eq!(cursor, 0);
                assert_eq!(attempts, 4);
            }
            other => panic!("{other:?}"),
        }
        let cursor: LabelCursor =
            serde_json::from_slice(&fs::read(dir.path().join(CURSOR_FILE)).unwrap()).unwrap();
        assert_eq!(cursor.next_batch, 0);
    }

    #[test]
    fn transient_failures_are_retried() {
        let c = corpus(60);
        let sample = sample_sentences(&c, 1.0, 1).unwrap();
        let mock = MockTeacher::new(MockConfig {
            transport_failure_rate: 0.5,
            seed: 9,
            ..MockConfig::default()
        });
        let policy = RetryPolicy {
            max_retries: 20,
            ..fast_policy()
        };
        let run = label_dataset(&c, &sample, &topics(), &mock, &policy, None).unwrap();
        assert_eq!(run.labels.len(), 60);
        assert!(run.responses.iter().any(|r| r.attempt > 1));
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let c = corpus(200);
        let sample = sample_sentences(&c, 1.0, 3).unwrap();
        let noisy = MockConfig {
            bad_format_rate: 0.2,
            unknown_topic_rate: 0.05,
            seed: 5,
            ..MockConfig::default()
        };
        let full = label_dataset(
            &c,
            &sample,
            &topics(),
            &MockTeacher::new(noisy.clone()),
            &fast_policy(),
            None,
        )
        .unwrap();

        let dir = tempfile::tempdir().unwrap();
        let broken = MockTeacher::new(MockConfig {
            fail_from_ordinal: Some(120),
            ..noisy.clone()
        });
        let err = label_dataset(&c, &sample, &topics(), &broken, &fast_policy(), Some(dir.path()))
            .unwrap_err();
        assert!(matches!(err, TeacherError::EndpointUnreachable { cursor: 6, .. }));

        let resumed = label_dataset(
            &c,
            &sample,
            &topics(),
            &MockTeacher::new(noisy),
            &fast_policy(),
            Some(dir.path()),
        )
        .unwrap();
        assert_eq!(resumed, full);
    }

    #[test]
    fn discovery_merges_batches() {
        let c = corpus(45);
        let sample = sample_sentences(&c, 1.0, 1).unwrap();
        let mock = MockTeacher::new(MockConfig::default());
        let run = discover_topics(&c, &sample, &mock, &fast_policy()).unwrap();
        assert_eq!(run.responses.len(), 3);
        let mut lower: Vec<String> = run.topics.iter().map(|t| t.to_lowercase()).collect();
        let n = lower.len();
        lower.sort();
        lower.dedup();
        assert_eq!(lower.len(), n);
    }

    #[test]
    fn labels_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let labels = vec![LabeledSentence {
            sentence_id: "D#000001".into(),
            topic: Some("Revenue".into()),
            sentiment: None,
            source: LabelSource::Human,
            raw_response_ref: None,
        }];
        write_labels(&path, &labels).unwrap();
        assert_eq!(read_labels(&path).unwrap(), labels);
    }
}
