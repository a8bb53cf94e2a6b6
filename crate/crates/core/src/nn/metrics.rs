//! Classification metrics from a confusion matrix.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    Macro,
    Micro,
    Weighted,
}

impl std::fmt::Display for Averaging {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Averaging::Macro => "macro",
            Averaging::Micro => "micro",
            Averaging::Weighted => "weighted",
        })
    }
}

impl std::str::FromStr for Averaging {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "macro" => Ok(Averaging::Macro),
            "micro" => Ok(Averaging::Micro),
            "weighted" => Ok(Averaging::Weighted),
            other => Err(format!("unknown averaging {other:?}")),
        }
    }
}

/// `counts[gold][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize, gold: &[usize], predicted: &[usize]) -> Self {
        assert_eq!(gold.len(), predicted.len(), "gold and predicted lengths differ");
        let mut counts = vec![vec![0u64; classes]; classes];
        for (&g, &p) in gold.iter().zip(predicted) {
            counts[g][p] += 1;
        }
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn true_positive(&self, k: usize) -> u64 {
        self.counts[k][k]
    }

    fn gold_count(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    fn predicted_count(&self, k: usize) -> u64 {
        self.counts.iter().map(|row| row[k]).sum()
    }

    /// Per-class (precision, recall, f1); `None` for classes absent from both
    /// gold and predictions.
    pub fn per_class(&self) -> Vec<Option<(f64, f64, f64)>> {
        (0..self.counts.len())
            .map(|k| {
                let tp = self.true_positive(k) as f64;
                let gold = self.gold_count(k) as f64;
                let pred = self.predicted_count(k) as f64;
                if gold == 0.0 && pred == 0.0 {
                    return None;
                }
                let precision = if pred > 0.0 { tp / pred } else { 0.0 };
                let recall = if gold > 0.0 { tp / gold } else { 0.0 };
                let f1 = if tp > 0.0 { 2.0 * tp / (gold + pred) } else { 0.0 };
                Some((precision, recall, f1))
            })
            .collect()
    }

    pub fn f1(&self, averaging: Averaging) -> f64 {
        match averaging {
            Averaging::Micro => {
                // Single-label: micro precision = micro recall = accuracy.
                let total = self.total();
                if total == 0 {
                    return 0.0;
                }
                (0..self.counts.len()).map(|k| self.true_positive(k)).sum::<u64>() as f64 / total as f64
            }
            Averaging::Macro => {
                let present: Vec<f64> = self.per_class().into_iter().flatten().map(|c| c.2).collect();
                if present.is_empty() {
                    0.0
                } else {
                    present.iter().sum::<f64>() / present.len() as f64
                }
            }
            Averaging::Weighted => {
                let total = self.total();
                if total == 0 {
                    return 0.0;
                }
                self.per_class()
                    .into_iter()
                    .enumerate()
                    .filter_map(|(k, c)| c.map(|c| c.2 * self.gold_count(k) as f64))
                    .sum::<f64>()
                    / total as f64
            }
        }
    }
}

pub fn f1_score(classes: usize, gold: &[usize], predicted: &[usize], averaging: Averaging) -> f64 {
    ConfusionMatrix::new(classes, gold, predicted).f1(averaging)
}
