use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sector_neutral_return, AnalyticsError, ReturnsRecord};
use crate::features::{MonthlyFeaturePanel, YearMonth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IcMethod {
    /// Pearson correlation of mid-ranks.
    #[default]
    Spearman,
    Pearson,
}

impl std::fmt::Display for IcMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IcMethod::Spearman => "spearman",
            IcMethod::Pearson => "pearson",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    TooFewObservations { n: usize, min_obs: usize },
    ConstantInput,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::TooFewObservations { n, min_obs } => write!(f, "too_few_observations({n}<{min_obs})"),
            SkipReason::ConstantInput => f.write_str("constant_input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IcOutcome {
    Value(f64),
    Skipped(SkipReason),
}

impl IcOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            IcOutcome::Value(v) => Some(*v),
            IcOutcome::Skipped(_) => None,
        }
    }
}

/// 1-based ranks with ties given their average rank.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    // A single square root keeps r exactly ±1 for identical (or mirrored)
    // inputs.
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Cross-sectional correlation between feature values and forward returns.
pub fn information_coefficient(pairs: &[(f64, f64)], method: IcMethod, min_obs: usize) -> IcOutcome {
    if pairs.len() < min_obs.max(2) {
        return IcOutcome::Skipped(SkipReason::TooFewObservations {
            n: pairs.len(),
            min_obs,
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let r = match method {
        IcMethod::Pearson => pearson(&x, &y),
        IcMethod::Spearman => pearson(&mid_ranks(&x), &mid_ranks(&y)),
    };
    match r {
        Some(v) => IcOutcome::Value(v),
        None => IcOutcome::Skipped(SkipReason::ConstantInput),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcPoint {
    pub month: YearMonth,
    pub ic: Option<f64>,
    pub cumulative: f64,
    pub n_obs: usize,
    pub skipped_reason: Option<SkipReason>,
}

/// Monthly ICs and their running sum; skipped months carry the previous
/// cumulative value forward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcSeries {
    pub feature: String,
    pub method: IcMethod,
    pub min_obs: usize,
    pub horizon: u32,
    pub points: Vec<IcPoint>,
}

impl IcSeries {
    pub fn new(feature: &str, method: IcMethod, min_obs: usize, horizon: u32) -> Self {
        IcSeries {
            feature: feature.to_string(),
            method,
            min_obs,
            horizon,
            points: Vec::new(),
        }
    }

    pub fn last_cumulative(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.cumulative)
    }

    /// Append one month. Months must be strictly increasing.
    pub fn push(&mut self, month: YearMonth, outcome: IcOutcome, n_obs: usize) {
        if let Some(last) = self.points.last() {
            assert!(month > last.month, "IC months must be strictly increasing");
        }
        let prev = self.last_cumulative();
        let (ic, cumulative, skipped_reason) = match outcome {
            IcOutcome::Value(v) => (Some(v), prev + v, None),
            IcOutcome::Skipped(r) => (None, prev, Some(r)),
        };
        self.points.push(IcPoint {
            month,
            ic,
            cumulative,
            n_obs,
            skipped_reason,
        });
    }

    /// Continue this series with the months of `later`.
    pub fn append(&mut self, later: &IcSeries) {
        for p in &later.points {
            let outcome = match (&p.ic, &p.skipped_reason) {
                (Some(v), _) => IcOutcome::Value(*v),
                (None, Some(r)) => IcOutcome::Skipped(r.clone()),
                (None, None) => IcOutcome::Skipped(SkipReason::ConstantInput),
            };
            self.push(p.month, outcome, p.n_obs);
        }
    }

    pub fn ic_values(&self) -> Vec<f64> {
        self.points.iter().filter_map(|p| p.ic).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalyticsError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["month", "ic", "cumulative", "n_obs", "skipped_reason"])?;
        for p in &self.points {
            w.write_record([
                p.month.to_string(),
                p.ic.map(|v| v.to_string()).unwrap_or_default(),
                p.cumulative.to_string(),
                p.n_obs.to_string(),
                p.skipped_reason.as_ref().map(|r| r.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// For every panel month `t`, the IC of `column` against the sector-neutral
/// return over months `t+1 ..= t+h`. Months without any aligned return are
/// left out; months with too few names are recorded as skipped.
pub fn cumulative_ic(
    panel: &MonthlyFeaturePanel,
    column: &str,
    returns: &[ReturnsRecord],
    horizon: u32,
    method: IcMethod,
    min_obs: usize,
) -> Result<IcSeries, AnalyticsError> {
    if horizon == 0 {
        return Err(AnalyticsError::BadHorizon);
    }
    if !panel.has_column(column) {
        return Err(AnalyticsError::UnknownColumn(column.to_string()));
    }
    let mut by_window: BTreeMap<(YearMonth, YearMonth), BTreeMap<&str, f64>> = BTreeMap::new();
    for r in returns {
        by_window
            .entry((YearMonth::of(r.period_start), YearMonth::of(r.period_end)))
            .or_default()
            .insert(&r.company_id, sector_neutral_return(r));
    }
    let months = panel.months();
    let computed: Vec<Option<(YearMonth, IcOutcome, usize)>> = months
        .par_iter()
        .map(|&t| {
            let window = (t.add_months(1), t.add_months(horizon as i64));
            let rn = by_window.get(&window)?;
            let pairs: Vec<(f64, f64)> = panel
                .column(column, t)
                .into_iter()
                .filter_map(|(company, f)| rn.get(company.as_str()).map(|r| (f, *r)))
                .collect();
            Some((t, information_coefficient(&pairs, method, min_obs), pairs.len()))
        })
        .collect();
    let mut series = IcSeries::new(column, method, min_obs, horizon);
    for (t, outcome, n) in computed.into_iter().flatten() {
        series.push(t, outcome, n);
    }
    if series.points.is_empty() {
        return Err(AnalyticsError::NoOverlap { horizon });
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn monotone_and_anti() {
        let up: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, (i as f64 * 0.3).exp())).collect();
        assert_eq!(information_coefficient(&up, IcMethod::Spearman, 10), IcOutcome::Value(1.0));
        let down: Vec<(f64, f64)> = up.iter().map(|&(a, b)| (a, -b)).collect();
        assert_eq!(information_coefficient(&down, IcMethod::Spearman, 10), IcOutcome::Value(-1.0));
    }

    #[test]
    fn skipping() {
        let few: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, i as f64)).collect();
        assert!(matches!(
            information_coefficient(&few, IcMethod::Spearman, 10),
            IcOutcome::Skipped(SkipReason::TooFewObservations { n: 5, min_obs: 10 })
        ));
        let flat: Vec<(f64, f64)> = (0..12).map(|i| (1.0, i as f64)).collect();
        assert_eq!(
            information_coefficient(&flat, IcMethod::Pearson, 10),
            IcOutcome::Skipped(SkipReason::ConstantInput)
        );
    }

    #[test]
    fn mid_rank_ties() {
        assert_eq!(mid_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn prefix_sums() {
        let mut s = IcSeries::new("p_A", IcMethod::Spearman, 10, 1);
        let m = YearMonth::new(2020, 1).unwrap();
        for (i, v) in [0.1, -0.05, 0.2].iter().enumerate() {
            s.push(m.add_months(i as i64), IcOutcome::Value(*v), 20);
        }
        let cum: Vec<f64> = s.points.iter().map(|p| p.cumulative).collect();
        for (a, b) in cum.iter().zip([0.1, 0.05, 0.25]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_pairs_center_on_zero() {
        let mut rng = seeded(2024);
        let mut sum = 0.0;
        for _ in 0..200 {
            let pairs: Vec<(f64, f64)> = (0..200).map(|_| (rng.random(), rng.random())).collect();
            sum += information_coefficient(&pairs, IcMethod::Spearman, 10).value().unwrap();
        }
        assert!((sum / 200.0).abs() < 0.03);
    }

    proptest! {
        #[test]
        fn monotone_transform_invariance(xs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 10..60)) {
            let base = information_coefficient(&xs, IcMethod::Spearman, 10);
            let moved: Vec<(f64, f64)> = xs.iter().map(|&(a, b)| (a.exp(), b * b * b)).collect();
            let after = information_coefficient(&moved, IcMethod::Spearman, 10);
            match (base, after) {
                (IcOutcome::Value(a), IcOutcome::Value(b)) => prop_assert!((a - b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn bounded(xs in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 0..60), pearson in any::<bool>()) {
            let m = if pearson { IcMethod::Pearson } else { IcMethod::Spearman };
            if let IcOutcome::Value(v) = information_coefficient(&xs, m, 3) {
                prop_assert!(v.abs() <= 1.0);
            }
        }

        #[test]
        fn chunked_equals_whole(vals in prop::collection::vec(prop::option::of(-1.0f64..1.0), 1..40), cut in 0usize..40) {
            let m0 = YearMonth::new(2015, 1).unwrap();
            let build = |range: std::ops::Range<usize>| {
                let mut s = IcSeries::new("p_A", IcMethod::Spearman, 10, 1);
                for i in range {
                    let o = vals[i].map_or(IcOutcome::Skipped(SkipReason::ConstantInput), IcOutcome::Value);
                    s.push(m0.add_months(i as i64), o, 10);
                }
                s
            };
            let cut = cut.min(vals.len());
            let whole = build(0..vals.len());
            let mut chunked = build(0..cut);
            chunked.append(&build(cut..vals.len()));
            prop_assert_eq!(&whole, &chunked);
            let mut running = 0.0;
            for p in &whole.points {
                running += p.ic.unwrap_or(0.0);
                prop_assert!((p.cumulative - running).abs() < 1e-12);
            }
        }
    }
}
