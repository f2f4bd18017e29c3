//! Distributional separation between head and tail generations.
//!
//! The per-rule delta is the mean head log-likelihood minus the mean
//! tail log-likelihood; a clearly positive delta means the intended
//! long-tail set really does sit in a lower-likelihood region. Reports
//! carry the score statistic they were computed on so sums and
//! per-token means never get compared to each other.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{GatewayError, ScoreStatistic, Scorer};

/// Rule-of-thumb separation threshold: a delta above this reads as a
/// decent likelihood drop. Report annotation only.
pub const DEFAULT_SEPARATION_THRESHOLD: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AnalysisError {
    #[error("{side} score set is empty")]
    EmptySet { side: &'static str },
    #[error("no reports to summarize")]
    NoReports,
    #[error("histogram needs at least one bin and one score")]
    EmptyHistogram,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub rule_id: String,
    pub statistic: String,
    pub mean_head: f64,
    pub mean_tail: f64,
    /// Exactly `mean_head - mean_tail`.
    pub delta: f64,
    pub n_head: usize,
    pub n_tail: usize,
}

impl DistributionReport {
    pub fn separated(&self, threshold: f64) -> bool {
        self.delta > threshold
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-rule head/tail separation.
pub fn compute_delta(
    rule_id: &str,
    statistic: ScoreStatistic,
    head_scores: &[f64],
    tail_scores: &[f64],
) -> Result<DistributionReport, AnalysisError> {
    if head_scores.is_empty() {
        return Err(AnalysisError::EmptySet { side: "head" });
    }
    if tail_scores.is_empty() {
        return Err(AnalysisError::EmptySet { side: "tail" });
    }
    let mean_head = mean(head_scores);
    let mean_tail = mean(tail_scores);
    Ok(DistributionReport {
        rule_id: rule_id.to_string(),
        statistic: statistic.as_str().to_string(),
        mean_head,
        mean_tail,
        delta: mean_head - mean_tail,
        n_head: head_scores.len(),
        n_tail: tail_scores.len(),
    })
}

/// Unweighted mean delta across rules.
pub fn summarize_method(reports: &[DistributionReport]) -> Result<f64, AnalysisError> {
    if reports.is_empty() {
        return Err(AnalysisError::NoReports);
    }
    Ok(reports.iter().map(|r| r.delta).sum::<f64>() / reports.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Equal-width bins over `[min, max]`; the maximum lands in the last
/// bin. Counts always sum to the input size.
pub fn histogram_export(scores: &[f64], bin_count: usize) -> Result<Vec<HistogramBin>, AnalysisError> {
    if scores.is_empty() || bin_count == 0 {
        return Err(AnalysisError::EmptyHistogram);
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bin_count as f64;
    let mut bins: Vec<HistogramBin> = (0..bin_count)
        .map(|i| HistogramBin {
            left: min + width * i as f64,
            right: min + width * (i + 1) as f64,
            count: 0,
        })
        .collect();
    for score in scores {
        let idx = if width == 0.0 {
            0
        } else {
            (((score - min) / width) as usize).min(bin_count - 1)
        };
        bins[idx].count += 1;
    }
    Ok(bins)
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_left,bin_right,count\n");
    for bin in bins {
        out.push_str(&alloc::format!("{},{},{}\n", bin.left, bin.right, bin.count));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorerComparison {
    pub pairs: Vec<(f64, f64)>,
    /// Spearman rank correlation; ordering overlap is the claim under
    /// test, not calibration.
    pub rank_correlation: f64,
}

/// Score the same statements under two scorers and report the rank
/// agreement.
pub fn compare_scorers(
    statements: &[String],
    statistic: ScoreStatistic,
    scorer_a: &mut dyn Scorer,
    scorer_b: &mut dyn Scorer,
) -> Result<ScorerComparison, AnalysisError> {
    let mut pairs = Vec::with_capacity(statements.len());
    for statement in statements {
        let a = scorer_a.score(statement)?.statistic(statistic);
        let b = scorer_b.score(statement)?.statistic(statistic);
        pairs.push((a, b));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(ScorerComparison {
        rank_correlation: spearman(&xs, &ys),
        pairs,
    })
}

/// Average ranks (ties share their mean rank), then Pearson on the
/// ranks. Degenerate rank vectors compare by equality.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    if n == 0.0 {
        return 1.0;
    }
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return if rx == ry { 1.0 } else { 0.0 };
    }
    cov / libm::sqrt(vx * vy)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| {
        values[*a]
            .partial_cmp(&values[*b])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = shared;
        }
        i = j + 1;
    }
    ranks
}

pub fn delta_csv(reports: &[DistributionReport]) -> String {
    let mut out = String::from("rule_id,mean_head,mean_tail,delta,n_head,n_tail\n");
    for r in reports {
        out.push_str(&alloc::format!(
            "{},{},{},{},{},{}\n",
            r.rule_id,
            r.mean_head,
            r.mean_tail,
            r.delta,
            r.n_head,
            r.n_tail
        ));
    }
    out
}
