use earnings_distill::topics::{reduce_by_clustering, TopicStats};

// Three blobs near the coordinate axes, four topics each. The first member of
// each blob sits on the axis.
const FIXTURE: [(&str, [f64; 3], usize); 12] = [
    ("Revenue", [1.0, 0.0, 0.0], 40),
    ("Sales", [1.0, 0.2, 0.0], 30),
    ("Top Line", [1.0, -0.2, 0.0], 10),
    ("Bookings", [1.0, 0.0, 0.05], 5),
    ("Margins", [0.0, 1.0, 0.0], 35),
    ("Gross Margin", [0.2, 1.0, 0.0], 20),
    ("Profitability", [-0.2, 1.0, 0.0], 15),
    ("Cost Control", [0.0, 1.0, 0.05], 8),
    ("Guidance", [0.0, 0.0, 1.0], 25),
    ("Outlook", [0.2, 0.0, 1.0], 12),
    ("Forecast", [-0.2, 0.0, 1.0], 9),
    ("Targets", [0.0, 0.05, 1.0], 3),
];

fn stats() -> Vec<TopicStats> {
    let total: usize = FIXTURE.iter().map(|f| f.2).sum();
    FIXTURE
        .iter()
        .map(|(t, _, n)| TopicStats {
            topic: t.to_string(),
            n_k: *n,
            share: *n as f64 / total as f64,
        })
        .collect()
}

fn unit(v: &[f64; 3]) -> [f64; 3] {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}

/// Try every assignment of the 12 points into 3 non-empty clusters and
/// return the SSE-optimal partition's medoids.
fn exhaustive_medoids() -> Vec<String> {
    let pts: Vec<[f64; 3]> = FIXTURE.iter().map(|f| unit(&f.1)).collect();
    let n = pts.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let labels: Vec<usize> = (0..n)
            .map(|_| {
                let l = c % 3;
                c /= 3;
                l
            })
            .collect();
        let mut sse = 0.0;
        let mut ok = true;
        for k in 0..3 {
            let members: Vec<&[f64; 3]> = (0..n).filter(|&i| labels[i] == k).map(|i| &pts[i]).collect();
            if members.is_empty() {
                ok = false;
                break;
            }
            let m = members.len() as f64;
            let mut centre = [0.0; 3];
            for p in &members {
                for d in 0..3 {
                    centre[d] += p[d] / m;
                }
            }
            sse += members.iter().map(|p| sq(p, &centre)).sum::<f64>();
        }
        if ok && best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, labels));
        }
    }
    let labels = best.unwrap().1;
    let mut medoids = Vec::new();
    for k in 0..3 {
        let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == k).collect();
        let m = idx.len() as f64;
        let mut centre = [0.0; 3];
        for &i in &idx {
            for d in 0..3 {
                centre[d] += pts[i][d] / m;
            }
        }
        let best = idx
            .iter()
            .min_by(|&&a, &&b| sq(&pts[a], &centre).total_cmp(&sq(&pts[b], &centre)))
            .unwrap();
        medoids.push(FIXTURE[*best].0.to_string());
    }
    medoids.sort();
    medoids
}

#[test]
fn clustering_recovers_hand_identified_medoids() {
    let mut oracle = exhaustive_medoids();
    let mut hand = vec!["Revenue".to_string(), "Margins".to_string(), "Guidance".to_string()];
    hand.sort();
    assert_eq!(oracle, hand);

    let lookup = |t: &str| {
        FIXTURE
            .iter()
            .find(|f| f.0 == t)
            .map(|f| f.1.to_vec())
    };
    for seed in [0, 1, 7, 42] {
        let (kept, report) = reduce_by_clustering(&stats(), lookup, 3, seed).unwrap();
        // Output is ordered by descending n_k.
        assert_eq!(kept, vec!["Revenue", "Margins", "Guidance"], "seed {seed}");
        let mut reps: Vec<String> = report.representatives.values().cloned().collect();
        reps.sort();
        oracle.sort();
        assert_eq!(reps, oracle);
    }
}

#[test]
fn missing_embedding_is_reported() {
    let err = reduce_by_clustering(&stats(), |_| None, 3, 0).unwrap_err();
    assert!(err.to_string().contains("Revenue"));
}
