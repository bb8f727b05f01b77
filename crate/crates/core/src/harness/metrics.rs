//! Per-SNR metric aggregation and CSV emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// One aggregated statistic at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub snr_db: f64,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Sample-mean accumulator keyed by (SNR index, metric name). Values are
/// added in trial order so the output is independent of thread scheduling.
#[derive(Debug, Default, Clone)]
pub struct MetricTable {
    samples: BTreeMap<(usize, String), Vec<f64>>,
    snr_db: BTreeMap<usize, f64>,
}

impl MetricTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, snr_index: usize, snr_db: f64, metric: &str, value: f64) {
        self.snr_db.insert(snr_index, snr_db);
        self.samples
            .entry((snr_index, metric.to_string()))
            .or_default()
            .push(value);
    }

    pub fn rows(&self) -> Vec<MetricRow> {
        self.samples
            .iter()
            .map(|((snr_index, metric), values)| {
                let n = values.len();
                let mean = values.iter().sum::<f64>() / n as f64;
                let stderr = if n > 1 {
                    let var = values
                        .iter()
                        .map(|v| (v - mean) * (v - mean))
                        .sum::<f64>()
                        / (n as f64 - 1.0);
                    (var / n as f64).sqrt()
                } else {
                    0.0
                };
                MetricRow {
                    snr_db: self.snr_db[snr_index],
                    metric: metric.clone(),
                    mean,
                    stderr,
                    n,
                }
            })
            .collect()
    }

    /// Mean of one metric at one SNR index, if recorded.
    pub fn mean_of(&self, snr_index: usize, metric: &str) -> Option<f64> {
        self.samples
            .get(&(snr_index, metric.to_string()))
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,metric,mean,stderr,n\n");
        for row in self.rows() {
            writeln!(
                out,
                "{},{},{:.10e},{:.10e},{}",
                row.snr_db, row.metric, row.mean, row.stderr, row.n
            )
            .expect("string write cannot fail");
        }
        out
    }
}
