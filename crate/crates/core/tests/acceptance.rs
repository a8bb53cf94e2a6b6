//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use earnings_distill::analytics::{
    cap_weighted_sector_returns, cumulative_ic, information_coefficient, sector_neutral_return, IcMethod,
    IcOutcome, IcSeries, ReturnsRecord,
};
use earnings_distill::corpus::{sample_sentences, Corpus};
use earnings_distill::distill::{
    evaluate_f1, final_retrain, make_split_plan, random_search, train_sentiment, LabeledData, SearchOptions,
    SentimentApproach, SentimentTrainPlan,
};
use earnings_distill::features::{
    document_features, monthly_aggregate, topic_propensity, topic_sentiment, DocumentFeatures, FeatureOptions,
    PropensityMode, SentenceScore, SentimentMode, YearMonth,
};
use earnings_distill::nn::{
    build_mlp, gradient_check, Averaging, Checkpoint, Dataset, MlpConfig, MlpModel, Mode, SearchSpace,
    TrainOptions,
};
use earnings_distill::rng::{derive_seed, seeded};
use earnings_distill::synthetic::{self, separable_dataset, CorpusSpec, BASE_TOPICS};
use earnings_distill::teacher::{label_dataset, MockConfig, MockTeacher, RetryPolicy};
use earnings_distill::topics::{kmeans, KMeansOptions};
use earnings_distill::Sentiment;
use ndarray::Array2;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

// 1. Attrition under a 37.5% format-violation rate.
fn attrition() -> Outcome {
    let start = Instant::now();
    let spec = CorpusSpec {
        companies: 100,
        months: 20,
        sentences_per_call: 40,
        seed: 5,
        ..CorpusSpec::default()
    };
    let corpus = Corpus::new(synthetic::transcripts(&spec)).unwrap();
    let sample = sample_sentences(&corpus, 1.0, 1).unwrap();
    let teacher = MockTeacher::new(MockConfig {
        seed: 9,
        bad_format_rate: 0.375,
        ..MockConfig::default()
    });
    let topics: Vec<String> = BASE_TOPICS.iter().map(|s| s.to_string()).collect();
    let policy = RetryPolicy {
        deterministic_timestamps: true,
        max_in_flight: 8,
        ..RetryPolicy::default()
    };
    let run = label_dataset(&corpus, &sample, &topics, &teacher, &policy, None).unwrap();
    let r = &run.report;
    let elapsed = start.elapsed();
    let discards = r.discarded_format + r.discarded_unknown_topic;
    check(
        sample.len() == 80_000
            && r.requested == 80_000
            && r.well_formed == 50_000
            && run.labels.len() == 50_000
            && r.requested == r.well_formed + discards
            && run.discards.len() == discards
            && elapsed < Duration::from_secs(120),
        format!(
            "requested={} retained={} discarded={} in {} (limit 120s)",
            r.requested,
            r.well_formed,
            discards,
            secs(elapsed)
        ),
    )
}

// 2. Analytic gradients against central differences.
fn gradients() -> Outcome {
    let start = Instant::now();
    let (x, y) = separable_dataset(10, 8, 3, 1.0, 17);
    let mut worst = 0.0f64;
    let mut tensors = 0;
    let mut complete = true;
    for bn in [false, true] {
        for layers in [1, 2, 3] {
            let config = MlpConfig {
                hidden_layers: layers,
                first_layer_size: 16,
                layer_ratio: 0.5,
                with_batch_norm: bn,
                dropout_rate: 0.0,
                ..MlpConfig::default()
            };
            let model = kink_free_model(&config, &x);
            let checks = gradient_check(&model, x.view(), &y, 1e-3).unwrap();
            let expected = if bn { 4 * layers + 2 } else { 2 * layers + 2 };
            complete &= checks.len() == expected;
            tensors += checks.len();
            for c in checks {
                worst = worst.max(c.relative_error);
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        complete && worst < 1e-4 && elapsed < Duration::from_secs(10),
        format!(
            "{tensors} tensors, max relative error {worst:.2e} (limit 1e-4) in {} (limit 10s)",
            secs(elapsed)
        ),
    )
}

/// Finite differences across a ReLU kink are meaningless; use the first
/// model seed whose pre-activations all stay clear of zero.
fn kink_free_model(config: &MlpConfig, x: &Array2<f64>) -> MlpModel {
    (0..1000)
        .map(|seed| build_mlp(config, x.ncols(), 3, seed).unwrap())
        .find(|m| {
            m.pre_activations(x.view(), Mode::Train { dropout_seed: 0 })
                .unwrap()
                .iter()
                .all(|a| a.iter().all(|v| v.abs() > 0.02))
        })
        .expect("a kink-free seed")
}

fn labeled(x: Array2<f64>, y: Vec<usize>, classes: usize) -> LabeledData {
    let n = y.len();
    LabeledData {
        ids: (0..n).map(|i| format!("doc{:04}#{:06}", i / 20, i % 20)).collect(),
        data: Dataset::new(x, y),
        classes: (0..classes).map(|c| format!("T{c}")).collect(),
        dropped: 0,
    }
}

// 3. Full random-search protocol on a separable corpus.
fn learning() -> Outcome {
    let (x, y) = separable_dataset(2000, 16, 4, 1.5, 123);
    let data = labeled(x, y, 4);
    let plan = make_split_plan(&data.items(), 2024).unwrap();
    let space = SearchSpace::default();
    let serial = SearchOptions {
        trials: 50,
        seed: 77,
        parallel: false,
        ..SearchOptions::default()
    };
    let start = Instant::now();
    let a = random_search(&space, &data, &plan, &serial).unwrap();
    let (model, report) = final_retrain(&a.best_config, &data, 2024, &serial).unwrap();
    let elapsed = start.elapsed();

    let b = random_search(&space, &data, &plan, &SearchOptions { parallel: true, ..serial.clone() }).unwrap();
    let (again, _) = final_retrain(&b.best_config, &data, 2024, &serial).unwrap();
    let digest = |m: MlpModel| {
        Checkpoint {
            model: m,
            class_names: data.classes.clone(),
        }
        .checksum()
    };
    let reproducible = a == b && digest(model.clone()) == digest(again);
    let full_f1 = evaluate_f1(&model, &data.data, Averaging::Macro).unwrap();
    check(
        report.best_val_f1 >= 0.95 && reproducible && elapsed < Duration::from_secs(600),
        format!(
            "final holdout macro F1 {:.4} (limit 0.95), all-data F1 {:.4}, best trial {} of {}, reproducible={} in {} single-threaded (limit 600s)",
            report.best_val_f1,
            full_f1,
            a.best_index,
            a.trials.len(),
            reproducible,
            secs(elapsed)
        ),
    )
}

// 4. Transfer versus Direct on a class-coverage fixture.
fn transfer() -> Outcome {
    let start = Instant::now();
    let (x, y) = separable_dataset(1200, 8, 3, 1.5, 21);
    let all = Dataset::new(x, y);
    let pre = all.select(&(0..600).collect::<Vec<_>>());
    let fine_rows: Vec<usize> = (600..900).filter(|&i| all.y[i] != 2).take(60).collect();
    let fine = all.select(&fine_rows);
    let held = all.select(&(900..1200).collect::<Vec<_>>());

    // A classifier that never emits class 2 scores at most 2/3 macro F1 on
    // three balanced classes; the fine-tuning labels alone cannot teach it.
    let ceiling = 2.0 / 3.0;
    let config = MlpConfig {
        first_layer_size: 128,
        ..MlpConfig::default()
    };
    let opts = TrainOptions {
        max_epochs: 60,
        seed: 4,
        ..TrainOptions::default()
    };
    let direct = SentimentTrainPlan {
        approach: SentimentApproach::Direct,
        pretrain: None,
        finetune: fine.clone(),
    };
    let transfer = SentimentTrainPlan {
        approach: SentimentApproach::Transfer,
        pretrain: Some(pre),
        finetune: fine,
    };
    let (dm, _) = train_sentiment(&direct, &config, 9, &opts).unwrap();
    let (tm, _) = train_sentiment(&transfer, &config, 9, &opts).unwrap();
    let fd = evaluate_f1(&dm, &held, Averaging::Macro).unwrap();
    let ft = evaluate_f1(&tm, &held, Averaging::Macro).unwrap();
    let elapsed = start.elapsed();
    check(
        ft > fd && fd <= ceiling + 1e-12 && elapsed < Duration::from_secs(180),
        format!(
            "transfer {ft:.4} > direct {fd:.4} (direct ceiling {ceiling:.4}) in {} (limit 180s)",
            secs(elapsed)
        ),
    )
}

fn sentiment_of(i: usize) -> Sentiment {
    Sentiment::from_index(i).unwrap()
}

// 5. Propensity and sentiment arithmetic on random documents.
fn feature_math() -> Outcome {
    let mut rng = seeded(55);
    let mut failures = Vec::new();
    for doc in 0..1000 {
        let k = rng.random_range(2..9usize);
        let j = rng.random_range(1..60usize);
        let topics: Vec<String> = (0..k).map(|t| format!("T{t}")).collect();
        let mut counts = vec![0usize; k];
        let mut hard = Vec::with_capacity(j);
        let mut soft = Vec::with_capacity(j);
        for s in 0..j {
            let t = rng.random_range(0..k);
            counts[t] += 1;
            hard.push(SentenceScore::hard(&format!("d{doc}#{s}"), t, k, sentiment_of(rng.random_range(0..3))));
            let mut dist: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let total: f64 = dist.iter().sum();
            dist.iter_mut().for_each(|v| *v /= total);
            let mut sent = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let st: f64 = sent.iter().sum();
            sent.iter_mut().for_each(|v| *v /= st);
            soft.push(SentenceScore::new(&format!("d{doc}#{s}"), dist, sent).unwrap());
        }
        let p = topic_propensity(&hard, PropensityMode::Hard).unwrap();
        let exact = p.iter().zip(&counts).all(|(pk, &c)| *pk == c as f64 / j as f64);
        let sums = counts.iter().sum::<usize>() == j && (p.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        if !(exact && sums) {
            failures.push(format!("doc {doc}: propensity"));
        }
        let opts = FeatureOptions::default();
        let feats = document_features(&format!("d{doc}"), "C", YearMonth::new(2020, 1).unwrap(), &hard, &topics, &opts)
            .unwrap();
        for (t, name) in topics.iter().enumerate() {
            let absent = !feats.sentiment.contains_key(name);
            if absent != (counts[t] == 0) {
                failures.push(format!("doc {doc}: absence for {name}"));
            }
        }
        for options in [
            FeatureOptions::default(),
            FeatureOptions {
                propensity: PropensityMode::Likelihood,
                sentiment: SentimentMode::Literal,
                hard_sentiment: false,
            },
            FeatureOptions {
                hard_sentiment: false,
                ..FeatureOptions::default()
            },
        ] {
            for scores in [&hard, &soft] {
                for t in 0..k {
                    if let Some(s) = topic_sentiment(scores, t, &options).unwrap() {
                        if !(-1.0..=1.0).contains(&s) {
                            failures.push(format!("doc {doc}: S={s}"));
                        }
                    }
                }
            }
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            "1000 documents: exact rationals summing to 1, S in [-1,1], absent iff p=0".to_string()
        } else {
            format!("{} failures, first: {}", failures.len(), failures[0])
        },
    )
}

fn ic_value(pairs: &[(f64, f64)]) -> f64 {
    match information_coefficient(pairs, IcMethod::Spearman, 2) {
        IcOutcome::Value(v) => v,
        IcOutcome::Skipped(r) => panic!("unexpected skip: {r}"),
    }
}

// 6. IC oracles.
fn ic_oracles() -> Outcome {
    let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 10.0 + i as f64 * 3.0).collect();
    let mono: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x.powi(3) + 2.0)).collect();
    let anti: Vec<(f64, f64)> = xs.iter().map(|&x| (x, (-x).exp())).collect();
    let up = ic_value(&mono);
    let down = ic_value(&anti);

    let mut total = 0.0;
    for seed in 0..1000u64 {
        let mut rng = seeded(derive_seed(8, seed));
        let pairs: Vec<(f64, f64)> = (0..200).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        total += ic_value(&pairs);
    }
    let mc_mean = total / 1000.0;

    let mut series = IcSeries::new("p_X", IcMethod::Spearman, 2, 1);
    let mut rng = seeded(3);
    let mut prefix = Vec::new();
    let mut running = 0.0;
    let mut month = YearMonth::new(2018, 1).unwrap();
    for _ in 0..120 {
        let v: f64 = rng.random_range(-1.0..1.0);
        running += v;
        prefix.push(running);
        series.push(month, IcOutcome::Value(v), 30);
        month = month.add_months(1);
    }
    let prefix_err = series
        .points
        .iter()
        .zip(&prefix)
        .map(|(p, q)| (p.cumulative - q).abs())
        .fold(0.0, f64::max);

    let panel_total = perfect_panel_cumulative();
    let pass = (up - 1.0).abs() <= 1e-12
        && (down + 1.0).abs() <= 1e-12
        && mc_mean.abs() <= 0.02
        && prefix_err <= 1e-12
        && panel_total == 24.0;
    check(
        pass,
        format!(
            "monotone {up}, anti {down}, MC mean {mc_mean:.5} (limit 0.02), prefix error {prefix_err:.1e}, 24-month panel cumulative {panel_total}"
        ),
    )
}

/// 24 months where each company's feature equals its next-month
/// sector-neutral return.
fn perfect_panel_cumulative() -> f64 {
    let spec = CorpusSpec {
        companies: 30,
        months: 24,
        seed: 12,
        ..CorpusSpec::default()
    };
    let returns = synthetic::returns(&spec, 1.0);
    let mut features = Vec::new();
    for r in &returns {
        let month = YearMonth::of(r.period_start).add_months(-1);
        features.push(DocumentFeatures {
            doc_id: format!("{}-{month}", r.company_id),
            company_id: r.company_id.clone(),
            month,
            propensity: BTreeMap::from([("Signal".to_string(), sector_neutral_return(r))]),
            sentiment: BTreeMap::new(),
            mode: PropensityMode::Hard,
        });
    }
    let panel = monthly_aggregate(&features);
    let series = cumulative_ic(&panel, "p_Signal", &returns, 1, IcMethod::Spearman, 5).unwrap();
    if series.points.len() != 24 {
        return f64::NAN;
    }
    series.last_cumulative()
}

fn sse(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let dim = points[0].len();
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
        if members.is_empty() {
            return f64::INFINITY;
        }
        let centre: Vec<f64> = (0..dim)
            .map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64)
            .collect();
        total += members
            .iter()
            .map(|p| p.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum::<f64>();
    }
    total
}

// 7. k-means monotonicity, optimality on a tiny fixture, reproducibility.
fn kmeans_checks() -> Outcome {
    let mut rng = seeded(31);
    let mut monotone = true;
    let mut reproducible = true;
    for trial in 0..20u64 {
        let points: Vec<Vec<f64>> = (0..120)
            .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let a = kmeans(&points, 6, trial, KMeansOptions::default()).unwrap();
        let b = kmeans(&points, 6, trial, KMeansOptions::default()).unwrap();
        reproducible &= a == b;
        monotone &= a.objective_trace.windows(2).all(|w| w[1] <= w[0]);
    }

    let six = vec![
        vec![0.0, 0.0],
        vec![0.3, 0.1],
        vec![0.1, 0.4],
        vec![5.0, 5.0],
        vec![5.2, 4.7],
        vec![4.8, 5.3],
    ];
    let mut optimum = f64::INFINITY;
    for mask in 0..(1u32 << six.len()) {
        let labels: Vec<usize> = (0..six.len()).map(|i| ((mask >> i) & 1) as usize).collect();
        optimum = optimum.min(sse(&six, &labels, 2));
    }
    let mut matches = true;
    for seed in 0..10 {
        let r = kmeans(&six, 2, seed, KMeansOptions::default()).unwrap();
        matches &= (r.objective - optimum).abs() <= 1e-12 * optimum.max(1.0);
    }
    check(
        monotone && matches && reproducible,
        format!("monotone={monotone}, six-point optimum {optimum:.6} matched={matches}, reproducible={reproducible}"),
    )
}

// 8. Cap-weighted sector neutrality.
fn sector_neutrality() -> Outcome {
    let mut rng = seeded(4);
    let start = NaiveDate::from_ymd_opt(2021, 3, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2021, 3, 31).unwrap();
    let mut worst = 0.0f64;
    for fixture in 0..50 {
        let mut records: Vec<ReturnsRecord> = (0..rng.random_range(5..60))
            .map(|i| ReturnsRecord {
                company_id: format!("F{fixture}C{i}"),
                period_start: start,
                period_end: end,
                total_return: rng.random_range(-0.3..0.3),
                sector: format!("S{}", rng.random_range(0..4)),
                sector_return: 0.0,
                market_cap_weight: Some(rng.random_range(0.01..100.0)),
            })
            .collect();
        cap_weighted_sector_returns(&mut records);
        let mut groups: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for r in &records {
            let w = r.market_cap_weight.unwrap();
            let g = groups.entry(&r.sector).or_default();
            g.0 += w * sector_neutral_return(r);
            g.1 += w;
        }
        for (num, den) in groups.values() {
            worst = worst.max((num / den).abs());
        }
    }
    check(worst <= 1e-12, format!("max |cap-weighted mean RN| {worst:.1e} over 50 fixtures (limit 1e-12)"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("attrition", attrition),
        ("gradient correctness", gradients),
        ("learning sanity", learning),
        ("transfer path", transfer),
        ("feature math", feature_math),
        ("IC oracles", ic_oracles),
        ("k-means", kmeans_checks),
        ("sector neutrality", sector_neutrality),
    ];
    let only: Option<String> = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.as_deref().is_some_and(|o| !name.contains(o)) {
            continue;
        }
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {name}: {}", i + 1, outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
