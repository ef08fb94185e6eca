//! Matching unsupervised clusters to ground truth and scoring the result:
//! accuracy, support-weighted precision/recall/F1, and AUC.

mod hungarian;
mod metrics;
mod silhouette;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use crate::clustering::{ClusterAssignment, NOISE};
use crate::error::{Error, Result};
use crate::numerics::{squared_distance, Matrix};
use crate::scalar::Scalar;

pub use hungarian::min_cost_assignment;
pub use silhouette::silhouette;
pub use metrics::{
    auc_from_hard_labels, auc_from_scores, classification_metrics, match_labels, ClassMetrics,
    LabelMatch, Metrics,
};

/// Class index treated as "normal" when scoring anomalies.
pub const NORMAL_CLASS: usize = 0;

/// `d(x, normal centroid) - d(x, abnormal centroid)` per row of `points`;
/// positive values lean anomalous.
pub fn anomaly_scores<T: Scalar>(
    points: &Matrix<T>,
    centroids: &Matrix<T>,
    normal: usize,
    abnormal: usize,
) -> Result<Vec<f64>> {
    if points.cols() != centroids.cols() {
        return Err(Error::shape("anomaly_scores", centroids.cols(), points.cols()));
    }
    if normal >= centroids.rows() || abnormal >= centroids.rows() {
        return Err(Error::invalid(format!(
            "centroid index out of range for {} centroids",
            centroids.rows()
        )));
    }
    Ok(points
        .row_iter()
        .map(|x| {
            let dn = squared_distance(x, centroids.row(normal)).to_f64_lossy().sqrt();
            let da = squared_distance(x, centroids.row(abnormal)).to_f64_lossy().sqrt();
            dn - da
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AucSource {
    /// Mann-Whitney AUC over centroid-distance anomaly scores.
    CentroidScores,
    /// Balanced accuracy of the matched hard labels.
    HardLabels,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub method: String,
    pub n: usize,
    pub class_names: Vec<String>,
    /// Column headers of `confusion`: predicted cluster ids, noise last.
    pub clusters: Vec<i32>,
    /// Truth class (rows) by predicted cluster (columns).
    pub confusion: Vec<Vec<usize>>,
    /// Matched truth class for each entry of `clusters`.
    pub matching: Vec<Option<usize>>,
    pub accuracy: f64,
    /// Present only for two-class truth.
    pub auc: Option<f64>,
    pub auc_source: Option<AucSource>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

impl Artifact for ScoreReport {
    const KIND: &'static str = "score-report";
    const VERSION: u32 = 1;
}

/// Matches an assignment to the truth and computes every metric.
///
/// For two-class truth an AUC is added: from centroid-distance scores when
/// the assignment has centroids and both classes got a cluster, otherwise
/// from hard labels, with noise counted as a positive (anomalous) call.
pub fn score_assignment<T: Scalar>(
    method: &str,
    assignment: &ClusterAssignment<T>,
    points: &Matrix<T>,
    truth: &[usize],
    class_names: &[String],
) -> Result<ScoreReport> {
    if points.rows() != truth.len() {
        return Err(Error::shape("score_assignment points", truth.len(), points.rows()));
    }
    let pred = &assignment.labels;
    let m = match_labels(pred, truth)?;
    let metrics = classification_metrics(&m.relabeled, truth)?;

    let n_classes = truth.iter().max().map_or(0, |&c| c + 1).max(class_names.len());
    let mut clusters = m.clusters.clone();
    let mut matching = m.classes.clone();
    if pred.contains(&NOISE) {
        clusters.push(NOISE);
        matching.push(None);
    }
    let mut confusion = vec![vec![0usize; clusters.len()]; n_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        let col = clusters.iter().position(|&c| c == p).expect("cluster listed");
        confusion[t][col] += 1;
    }

    let mut present: Vec<usize> = truth.to_vec();
    present.sort_unstable();
    present.dedup();
    let (auc, auc_source) = if present.len() == 2 && present[0] == NORMAL_CLASS {
        let abnormal_class = present[1];
        let positive: Vec<bool> = truth.iter().map(|&t| t != NORMAL_CLASS).collect();
        let centroid_pair = assignment.centroids.as_ref().and_then(|c| {
            let normal = m.cluster_for(NORMAL_CLASS)?;
            let abnormal = m.cluster_for(abnormal_class)?;
            Some((c, normal as usize, abnormal as usize))
        });
        match centroid_pair {
            Some((c, normal, abnormal)) => {
                let scores = anomaly_scores(points, c, normal, abnormal)?;
                (Some(auc_from_scores(&scores, &positive)?), Some(AucSource::CentroidScores))
            }
            None => {
                let called: Vec<bool> = m.relabeled.iter().map(|r| *r != Some(NORMAL_CLASS)).collect();
                (Some(auc_from_hard_labels(&called, &positive)?), Some(AucSource::HardLabels))
            }
        }
    } else {
        (None, None)
    };

    let names = (0..n_classes)
        .map(|c| class_names.get(c).cloned().unwrap_or_else(|| format!("class {c}")))
        .collect();
    Ok(ScoreReport {
        method: method.to_string(),
        n: truth.len(),
        class_names: names,
        clusters,
        confusion,
        matching,
        accuracy: metrics.accuracy,
        auc,
        auc_source,
        precision: metrics.precision,
        recall: metrics.recall,
        f1: metrics.f1,
        per_class: metrics.per_class,
    })
}

impl ScoreReport {
    /// Structural checks: confusion sums to `n`, every metric in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let total: usize = self.confusion.iter().flatten().sum();
        if total != self.n {
            return Err(Error::Data(format!("confusion matrix sums to {total}, expected {}", self.n)));
        }
        let mut values = vec![self.accuracy, self.precision, self.recall, self.f1];
        values.extend(self.auc);
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Data("metric outside [0, 1]".into()));
        }
        Ok(())
    }

    /// Confusion matrix and per-class breakdown as aligned text.
    pub fn detail_text(&self) -> String {
        let mut out = String::new();
        let name_w = self.class_names.iter().map(|s| s.len()).max().unwrap_or(5).max(5);
        let headers: Vec<String> = self
            .clusters
            .iter()
            .map(|&c| if c == NOISE { "noise".to_string() } else { format!("c{c}") })
            .collect();
        let col_w = headers.iter().map(|h| h.len()).max().unwrap_or(1).max(self.n.to_string().len()).max(4);
        let _ = writeln!(out, "{}: {} points", self.method, self.n);
        let _ = write!(out, "{:<name_w$}", "truth");
        for h in &headers {
            let _ = write!(out, "  {h:>col_w$}");
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.confusion) {
            let _ = write!(out, "{name:<name_w$}");
            for v in row {
                let _ = write!(out, "  {v:>col_w$}");
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<name_w$}", "match");
        for m in &self.matching {
            let label = m.map_or("-".to_string(), |c| self.class_names[c].clone());
            let _ = write!(out, "  {label:>col_w$}");
        }
        out.push_str("\n\n");
        let _ = writeln!(
            out,
            "{:<name_w$}  {:>7}  {:>9}  {:>6}  {:>8}",
            "class", "support", "precision", "recall", "f1"
        );
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:<name_w$}  {:>7}  {:>9.4}  {:>6.4}  {:>8.4}",
                self.class_names[c.class], c.support, c.precision, c.recall, c.f1
            );
        }
        out
    }
}

/// Methods as columns, metrics as rows, four decimals.
pub fn render_table(reports: &[&ScoreReport]) -> String {
    let rows: [(&str, fn(&ScoreReport) -> Option<f64>); 5] = [
        ("Accuracy", |r| Some(r.accuracy)),
        ("AUC", |r| r.auc),
        ("Precision", |r| Some(r.precision)),
        ("Recall", |r| Some(r.recall)),
        ("F1-score", |r| Some(r.f1)),
    ];
    let widths: Vec<usize> = reports.iter().map(|r| r.method.len().max(6)).collect();
    let mut out = format!("{:<9}", "Metric");
    for (r, w) in reports.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", r.method);
    }
    out.push('\n');
    for (name, get) in rows {
        let _ = write!(out, "{name:<9}");
        for (r, w) in reports.iter().zip(&widths) {
            let cell = get(r).map_or("-".to_string(), |v| format!("{v:.4}"));
            let _ = write!(out, "  {cell:>w$}");
        }
        out.push('\n');
    }
    out
}
