//! ROC and precision-recall curves over scored examples.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("ROC needs at least one positive and one negative example")]
    SingleClass,
    #[error("precision-recall needs at least one positive example")]
    NoPositives,
    #[error("score at index {0} is not finite")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredExample {
    pub score: f64,
    /// `true` for buggy (positive).
    pub label: bool,
}

impl ScoredExample {
    pub fn new(score: f64, label: bool) -> Self {
        Self { score, label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    Roc,
    Pr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Examples with `score >= threshold` are flagged positive.
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

/// ROC points are (FPR, TPR); PR points are (recall, precision).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
    pub auc: f64,
}

impl MetricCurve {
    /// `threshold,x,y` rows with a header.
    pub fn to_csv(&self) -> String {
        let (xn, yn) = match self.kind {
            CurveKind::Roc => ("fpr", "tpr"),
            CurveKind::Pr => ("recall", "precision"),
        };
        let mut out = format!("threshold,{xn},{yn}\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.threshold, p.x, p.y);
        }
        out
    }
}

/// Cumulative (true positives, false positives, threshold) after each distinct score,
/// sweeping from the highest score down.
fn sweep(data: &[ScoredExample]) -> Result<Vec<(usize, usize, f64)>, MetricsError> {
    if let Some(i) = data.iter().position(|e| !e.score.is_finite()) {
        return Err(MetricsError::NonFinite(i));
    }
    let mut sorted: Vec<&ScoredExample> = data.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].score;
        while i < sorted.len() && sorted[i].score == s {
            if sorted[i].label {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push((tp, fp, s));
    }
    Ok(out)
}

/// ROC curve with one point per distinct score plus the origin; AUC by trapezoids.
pub fn roc_curve(data: &[ScoredExample]) -> Result<MetricCurve, MetricsError> {
    let pos = data.iter().filter(|e| e.label).count();
    let neg = data.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let steps = sweep(data)?;
    let mut points = vec![CurvePoint { threshold: f64::INFINITY, x: 0.0, y: 0.0 }];
    let mut auc = 0.0;
    let (mut prev_tp, mut prev_fp) = (0usize, 0usize);
    for (tp, fp, threshold) in steps {
        // trapezoid in count space, normalized once at the end
        auc += (fp - prev_fp) as f64 * (tp + prev_tp) as f64 / 2.0;
        points.push(CurvePoint { threshold, x: fp as f64 / neg as f64, y: tp as f64 / pos as f64 });
        prev_tp = tp;
        prev_fp = fp;
    }
    auc /= (pos * neg) as f64;
    Ok(MetricCurve { kind: CurveKind::Roc, points, auc })
}

/// Precision-recall curve at each distinct score; AUC is average precision
/// `Σ (R_k - R_{k-1}) P_k`.
pub fn pr_curve(data: &[ScoredExample]) -> Result<MetricCurve, MetricsError> {
    let pos = data.iter().filter(|e| e.label).count();
    if pos == 0 {
        return Err(MetricsError::NoPositives);
    }
    let steps = sweep(data)?;
    let mut points = Vec::with_capacity(steps.len());
    let mut ap = 0.0;
    let mut prev_tp = 0usize;
    for (tp, fp, threshold) in steps {
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / pos as f64;
        ap += (tp - prev_tp) as f64 / pos as f64 * precision;
        prev_tp = tp;
        points.push(CurvePoint { threshold, x: recall, y: precision });
    }
    Ok(MetricCurve { kind: CurveKind::Pr, points, auc: ap })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFunction {
    /// 1-based.
    pub rank: usize,
    pub function_id: String,
    pub score: f64,
}

/// Order by descending score, ties by function id.
pub fn rank_functions(data: &[(String, f64)]) -> Vec<RankedFunction> {
    let mut v: Vec<&(String, f64)> = data.iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.into_iter()
        .enumerate()
        .map(|(i, (id, s))| RankedFunction { rank: i + 1, function_id: id.clone(), score: *s })
        .collect()
}

/// `rank,functionId,score` CSV.
pub fn ranking_csv(ranked: &[RankedFunction]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "functionId", "score"]).expect("in-memory write");
    for r in ranked {
        w.write_record([r.rank.to_string(), r.function_id.clone(), r.score.to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
