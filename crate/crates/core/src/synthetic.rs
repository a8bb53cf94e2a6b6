//! Deterministic synthetic fixtures: transcript prose with a known topic and
//! sentiment structure, matching forward returns, and linearly separable
//! embedding sets. Used by the mock teacher, the tests and the demos.

use chrono::{Datelike, NaiveDate};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analytics::ReturnsRecord;
use crate::corpus::Transcript;
use crate::rng::{derive_seed, seeded};
use crate::teacher::Sentiment;

/// Base topics emitted by the synthetic generator and recognised by the
/// mock teacher.
pub const BASE_TOPICS: &[&str] = &[
    "Revenue",
    "Earnings",
    "Guidance",
    "Dividend & Buyback",
    "Products & Services",
    "Costs & Margins",
    "Capital Expenditure",
    "Debt & Financing",
    "Mergers & Acquisitions",
    "Macroeconomic Environment",
    "Others",
];

pub const DISCOVERY_VARIANTS: &[&str] = &[
    "Trends",
    "Outlook",
    "Performance",
    "Update",
    "Discussion",
    "Commentary",
    "Dynamics",
    "Highlights",
];

const RULES: &[(&str, &str)] = &[
    ("guidance", "Guidance"),
    ("outlook", "Guidance"),
    ("we expect", "Guidance"),
    ("forecast", "Guidance"),
    ("dividend", "Dividend & Buyback"),
    ("buyback", "Dividend & Buyback"),
    ("repurchase", "Dividend & Buyback"),
    ("revenue", "Revenue"),
    ("sales", "Revenue"),
    ("top line", "Revenue"),
    ("earnings", "Earnings"),
    ("per share", "Earnings"),
    ("net income", "Earnings"),
    ("profit", "Earnings"),
    ("margin", "Costs & Margins"),
    ("cost", "Costs & Margins"),
    ("product", "Products & Services"),
    ("customer", "Products & Services"),
    ("launch", "Products & Services"),
    ("capex", "Capital Expenditure"),
    ("capital expenditure", "Capital Expenditure"),
    ("new plant", "Capital Expenditure"),
    ("debt", "Debt & Financing"),
    ("refinanc", "Debt & Financing"),
    ("credit facility", "Debt & Financing"),
    ("acquisition", "Mergers & Acquisitions"),
    ("merger", "Mergers & Acquisitions"),
    ("inflation", "Macroeconomic Environment"),
    ("interest rate", "Macroeconomic Environment"),
    ("economy", "Macroeconomic Environment"),
    ("thank", "Others"),
    ("operator", "Others"),
    ("question", "Others"),
];

const POSITIVE_WORDS: &[&str] = &[
    "grew", "growth", "increase", "increased", "strong", "stronger", "record", "improved",
    "improve", "beat", "exceeded", "raised", "higher", "robust", "momentum", "confident",
];

const NEGATIVE_WORDS: &[&str] = &[
    "decline", "declined", "decrease", "decreased", "weak", "weaker", "headwind", "headwinds",
    "loss", "miss", "missed", "lower", "pressure", "challenging", "uncertain", "softness", "fell",
];

pub fn default_topic_rules() -> Vec<(String, String)> {
    RULES
        .iter()
        .map(|(k, t)| (k.to_string(), t.to_string()))
        .collect()
}

/// Word-count sentiment over a small finance lexicon.
pub fn lexicon_sentiment(text: &str) -> Sentiment {
    let mut score = 0i32;
    for word in text
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
    {
        let w = word.to_lowercase();
        if POSITIVE_WORDS.contains(&w.as_str()) {
            score += 1;
        } else if NEGATIVE_WORDS.contains(&w.as_str()) {
            score -= 1;
        }
    }
    match score.cmp(&0) {
        std::cmp::Ordering::Greater => Sentiment::Positive,
        std::cmp::Ordering::Less => Sentiment::Negative,
        std::cmp::Ordering::Equal => Sentiment::Neutral,
    }
}

struct TopicPhrases {
    subjects: &'static [&'static str],
    objects: &'static [&'static str],
}

fn phrases(topic: usize) -> TopicPhrases {
    match topic {
        0 => TopicPhrases {
            subjects: &["Revenue", "Net sales", "Top line revenue", "Subscription revenue"],
            objects: &["year over year", "in the quarter", "across regions"],
        },
        1 => TopicPhrases {
            subjects: &["Earnings per share", "Net income", "Operating profit", "Adjusted earnings"],
            objects: &["for the quarter", "versus last year", "on a diluted basis"],
        },
        2 => TopicPhrases {
            subjects: &["Our full year guidance", "The outlook for next quarter", "Our forecast", "We expect demand that"],
            objects: &["for the coming year", "for the second half", "going forward"],
        },
        3 => TopicPhrases {
            subjects: &["The quarterly dividend", "Our share repurchase program", "The buyback authorization"],
            objects: &["this year", "for shareholders", "under the plan"],
        },
        4 => TopicPhrases {
            subjects: &["Customer adoption of the product", "The new product launch", "Customer retention"],
            objects: &["in our core markets", "with enterprise clients", "this season"],
        },
        5 => TopicPhrases {
            subjects: &["Gross margin", "Input cost", "Operating margin"],
            objects: &["in the period", "at the plant level", "after freight"],
        },
        6 => TopicPhrases {
            subjects: &["Capital expenditure", "Spending on the new plant", "Capex"],
            objects: &["for the year", "in the network", "across facilities"],
        },
        7 => TopicPhrases {
            subjects: &["Our debt position", "The refinancing of notes", "Use of the credit facility"],
            objects: &["this quarter", "at quarter end", "after the issuance"],
        },
        8 => TopicPhrases {
            subjects: &["The acquisition pipeline", "The merger integration", "The pending acquisition"],
            objects: &["so far", "during the quarter", "in the segment"],
        },
        9 => TopicPhrases {
            subjects: &["The broader economy", "Inflation", "The interest rate environment"],
            objects: &["in our markets", "this quarter", "for consumers"],
        },
        _ => TopicPhrases {
            subjects: &["Thank you operator", "Next question please", "Thanks for the question"],
            objects: &["", "", ""],
        },
    }
}

fn verb(sentiment: Sentiment, pick: usize) -> &'static str {
    let pos = ["grew", "increased", "improved", "showed strong momentum"];
    let neg = ["declined", "decreased", "fell", "faced headwinds"];
    let neu = ["was", "came in", "remained", "stood"];
    match sentiment {
        Sentiment::Positive => pos[pick % pos.len()],
        Sentiment::Negative => neg[pick % neg.len()],
        Sentiment::Neutral => neu[pick % neu.len()],
    }
}

/// One synthetic sentence about `topic` (index into [`BASE_TOPICS`]).
pub fn sentence<R: Rng>(rng: &mut R, topic: usize, sentiment: Sentiment) -> String {
    let p = phrases(topic);
    if topic >= BASE_TOPICS.len() - 1 {
        return format!("{}.", p.subjects[rng.random_range(0..p.subjects.len())]);
    }
    let subject = p.subjects[rng.random_range(0..p.subjects.len())];
    let object = p.objects[rng.random_range(0..p.objects.len())];
    let v = verb(sentiment, rng.random_range(0..4));
    let pct = rng.random_range(1..30);
    format!("{subject} {v} {pct}% {object}.")
}

#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub companies: usize,
    pub sectors: Vec<String>,
    pub start: NaiveDate,
    pub months: usize,
    pub sentences_per_call: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            companies: 24,
            sectors: vec![
                "Information Technology".into(),
                "Financials".into(),
                "Industrials".into(),
            ],
            start: NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
            months: 12,
            sentences_per_call: 30,
            seed: 1,
        }
    }
}

/// Latent company-month "tone" driving both transcript positivity and the
/// next month's sector-neutral return.
pub fn latent_tone(spec: &CorpusSpec, company: usize, month: usize) -> f64 {
    let mut rng = seeded(derive_seed(spec.seed, (company * 10_000 + month) as u64));
    StandardNormal.sample(&mut rng)
}

pub fn company_id(c: usize) -> String {
    format!("CO{c:03}")
}

pub fn sector_of(spec: &CorpusSpec, c: usize) -> &str {
    &spec.sectors[c % spec.sectors.len()]
}

pub fn month_date(start: NaiveDate, offset: usize) -> NaiveDate {
    let total = start.year() * 12 + start.month0() as i32 + offset as i32;
    NaiveDate::from_ymd_opt(total.div_euclid(12), total.rem_euclid(12) as u32 + 1, 15).unwrap()
}

fn month_end(date: NaiveDate) -> NaiveDate {
    let next = month_date(date.with_day(1).unwrap(), 1).with_day(1).unwrap();
    next.pred_opt().unwrap()
}

/// Monthly calls for every company. Topic mix is company-specific; the share
/// of positive sentences rises with [`latent_tone`].
pub fn transcripts(spec: &CorpusSpec) -> Vec<Transcript> {
    let topics = BASE_TOPICS.len();
    let mut out = Vec::with_capacity(spec.companies * spec.months);
    for c in 0..spec.companies {
        let mut tilt_rng = seeded(derive_seed(spec.seed ^ 0xC0, c as u64));
        let weights: Vec<f64> = (0..topics).map(|_| tilt_rng.random_range(0.5..2.0)).collect();
        let total_w: f64 = weights.iter().sum();
        for m in 0..spec.months {
            let tone = latent_tone(spec, c, m);
            let p_pos = 1.0 / (1.0 + (-tone).exp());
            let mut rng = seeded(derive_seed(spec.seed ^ 0x5E, (c * 10_000 + m) as u64));
            let texts: Vec<String> = (0..spec.sentences_per_call)
                .map(|_| {
                    let mut u = rng.random_range(0.0..total_w);
                    let mut topic = topics - 1;
                    for (k, w) in weights.iter().enumerate() {
                        if u < *w {
                            topic = k;
                            break;
                        }
                        u -= w;
                    }
                    let r: f64 = rng.random();
                    let sentiment = if r < 0.2 {
                        Sentiment::Neutral
                    } else if r < 0.2 + 0.8 * p_pos {
                        Sentiment::Positive
                    } else {
                        Sentiment::Negative
                    };
                    sentence(&mut rng, topic, sentiment)
                })
                .collect();
            let date = month_date(spec.start, m);
            out.push(Transcript::from_sentences(
                &format!("{}-{}", company_id(c), date.format("%Y%m")),
                &company_id(c),
                date,
                sector_of(spec, c),
                &texts,
            ));
        }
    }
    out
}

/// Forward one-month returns for every company and call month: the month
/// after each call. Sector returns are cap-weighted means of member returns.
pub fn returns(spec: &CorpusSpec, signal: f64) -> Vec<ReturnsRecord> {
    let mut out = Vec::new();
    for m in 0..spec.months {
        let start = month_date(spec.start, m + 1).with_day(1).unwrap();
        let end = month_end(start);
        let mut rows = Vec::new();
        for c in 0..spec.companies {
            let mut rng = seeded(derive_seed(spec.seed ^ 0x7E, (c * 10_000 + m) as u64));
            let noise: f64 = StandardNormal.sample(&mut rng);
            let cap = 1.0 + (c % 5) as f64;
            let r = 0.01 + signal * 0.02 * latent_tone(spec, c, m) + 0.03 * noise;
            rows.push((c, r.max(-0.9), cap));
        }
        for sector in &spec.sectors {
            let members: Vec<&(usize, f64, f64)> = rows
                .iter()
                .filter(|(c, _, _)| sector_of(spec, *c) == sector)
                .collect();
            let cap_sum: f64 = members.iter().map(|m| m.2).sum();
            let rs: f64 = members.iter().map(|m| m.1 * m.2).sum::<f64>() / cap_sum;
            for &&(c, r, cap) in &members {
                out.push(ReturnsRecord {
                    company_id: company_id(c),
                    period_start: start,
                    period_end: end,
                    total_return: r,
                    sector: sector.clone(),
                    sector_return: rs,
                    market_cap_weight: Some(cap / cap_sum),
                });
            }
        }
    }
    out.sort_by(|a, b| (a.period_start, &a.company_id).cmp(&(b.period_start, &b.company_id)));
    out
}

/// Points whose class `k` coordinate is `spread` + U(-0.5, 0.5) and all other
/// coordinates lie in U(-0.5, 0.5). For `spread` ≥ 1.5 the classes are
/// linearly separable with margin `spread - 1`.
pub fn separable_dataset(
    n: usize,
    dim: usize,
    classes: usize,
    spread: f64,
    seed: u64,
) -> (Array2<f64>, Vec<usize>) {
    assert!(classes >= 2 && dim >= classes);
    let mut rng = seeded(seed);
    let mut x = Array2::zeros((n, dim));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % classes;
        for d in 0..dim {
            x[[i, d]] = rng.random_range(-0.5..0.5);
        }
        x[[i, class]] += spread;
        y.push(class);
    }
    (x, y)
}
