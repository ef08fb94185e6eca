use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::hungarian::min_cost_assignment;
use crate::clustering::NOISE;

/// Optimal cluster-to-class pairing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelMatch {
    /// Predicted cluster ids in ascending order, noise excluded.
    pub clusters: Vec<i32>,
    /// Truth class matched to each entry of `clusters`, if any.
    pub classes: Vec<Option<usize>>,
    /// Per point: the matched class, or `None` for noise and unmatched clusters.
    pub relabeled: Vec<Option<usize>>,
    /// Number of points whose matched class equals the truth.
    pub agreement: usize,
}

impl LabelMatch {
    /// Cluster matched to `class`, if any.
    pub fn cluster_for(&self, class: usize) -> Option<i32> {
        self.clusters
            .iter()
            .zip(&self.classes)
            .find(|(_, c)| **c == Some(class))
            .map(|(&k, _)| k)
    }
}

/// One-to-one matching of predicted clusters to truth classes that
/// maximises total agreement. Noise points never match anything.
pub fn match_labels(pred: &[i32], truth: &[usize]) -> Result<LabelMatch> {
    if pred.len() != truth.len() {
        return Err(Error::shape("match_labels", truth.len(), pred.len()));
    }
    if let Some(&bad) = pred.iter().find(|&&p| p < NOISE) {
        return Err(Error::invalid(format!("cluster label {bad} is below the noise label")));
    }
    let mut clusters: Vec<i32> = pred.iter().copied().filter(|&p| p != NOISE).collect();
    clusters.sort_unstable();
    clusters.dedup();
    let n_classes = truth.iter().max().map_or(0, |&m| m + 1);
    let size = clusters.len().max(n_classes);

    let mut counts = vec![0.0; size * size];
    for (&p, &t) in pred.iter().zip(truth) {
        if p != NOISE {
            let k = clusters.binary_search(&p).expect("cluster listed");
            counts[k * size + t] += 1.0;
        }
    }
    let top = counts.iter().copied().fold(0.0, f64::max);
    let cost: Vec<f64> = counts.iter().map(|&c| top - c).collect();
    let pick = min_cost_assignment(&cost, size);

    let classes: Vec<Option<usize>> = (0..clusters.len())
        .map(|k| Some(pick[k]).filter(|&c| c < n_classes))
        .collect();
    let relabeled: Vec<Option<usize>> = pred
        .iter()
        .map(|&p| {
            if p == NOISE {
                None
            } else {
                classes[clusters.binary_search(&p).expect("cluster listed")]
            }
        })
        .collect();
    let agreement = relabeled.iter().zip(truth).filter(|(m, &t)| **m == Some(t)).count();
    Ok(LabelMatch {
        clusters,
        classes,
        relabeled,
        agreement,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Support-weighted averages over truth classes.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// Accuracy plus support-weighted precision, recall and F1. A `None`
/// prediction (noise or an unmatched cluster) is wrong for every class.
/// Classes that are never predicted get precision 0.
pub fn classification_metrics(matched: &[Option<usize>], truth: &[usize]) -> Result<Metrics> {
    if matched.len() != truth.len() {
        return Err(Error::shape("classification_metrics", truth.len(), matched.len()));
    }
    if truth.is_empty() {
        return Err(Error::invalid("cannot score an empty prediction"));
    }
    let n = truth.len();
    let n_classes = truth
        .iter()
        .copied()
        .chain(matched.iter().flatten().copied())
        .max()
        .map_or(0, |m| m + 1);
    let mut tp = vec![0usize; n_classes];
    let mut predicted = vec![0usize; n_classes];
    let mut support = vec![0usize; n_classes];
    for (m, &t) in matched.iter().zip(truth) {
        support[t] += 1;
        if let Some(p) = *m {
            predicted[p] += 1;
            if p == t {
                tp[p] += 1;
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let per_class: Vec<ClassMetrics> = (0..n_classes)
        .filter(|&c| support[c] > 0)
        .map(|c| {
            let precision = ratio(tp[c], predicted[c]);
            let recall = ratio(tp[c], support[c]);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                class: c,
                support: support[c],
                precision,
                recall,
                f1,
            }
        })
        .collect();
    let weighted = |f: fn(&ClassMetrics) -> f64| -> f64 {
        per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / n as f64
    };
    Ok(Metrics {
        accuracy: tp.iter().sum::<usize>() as f64 / n as f64,
        precision: weighted(|m| m.precision),
        recall: weighted(|m| m.recall),
        f1: weighted(|m| m.f1),
        per_class,
    })
}

/// Mann-Whitney AUC: probability a random positive outscores a random
/// negative, with ties counted as one half (midranks).
pub fn auc_from_scores(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::shape("auc_from_scores", positive.len(), scores.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("AUC scores".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("AUC needs both positive and negative examples"));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && scores[idx[end + 1]] == scores[idx[start]] {
            end += 1;
        }
        // ranks are 1-based; a tie block shares the mean rank
        let mid = (start + end) as f64 / 2.0 + 1.0;
        rank_sum += mid * idx[start..=end].iter().filter(|&&i| positive[i]).count() as f64;
        start = end + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Area under the two-point ROC curve of a hard classifier, which is the
/// balanced accuracy `(TPR + TNR) / 2`.
pub fn auc_from_hard_labels(predicted: &[bool], positive: &[bool]) -> Result<f64> {
    if predicted.len() != positive.len() {
        return Err(Error::shape("auc_from_hard_labels", positive.len(), predicted.len()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("AUC needs both positive and negative examples"));
    }
    let tp = predicted.iter().zip(positive).filter(|(&p, &t)| p && t).count();
    let tn = predicted.iter().zip(positive).filter(|(&p, &t)| !p && !t).count();
    Ok((tp as f64 / n_pos as f64 + tn as f64 / n_neg as f64) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_never_matches() {
        let m = match_labels(&[-1, -1, 0, 0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(m.relabeled, vec![None, None, Some(1), Some(1)]);
        assert_eq!(m.agreement, 2);
        assert_eq!(m.cluster_for(1), Some(0));
        assert_eq!(m.cluster_for(0), None);
    }

    #[test]
    fn surplus_clusters_stay_unmatched() {
        let m = match_labels(&[0, 1, 2, 2], &[0, 0, 1, 1]).unwrap();
        assert_eq!(m.agreement, 3);
        assert_eq!(m.classes.iter().filter(|c| c.is_none()).count(), 1);
    }

    #[test]
    fn midranks_handle_ties() {
        // one tie between a positive and a negative counts as half
        let auc = auc_from_scores(&[0.1, 0.5, 0.5, 0.9], &[false, false, true, true]).unwrap();
        assert!((auc - 0.875).abs() < 1e-15);
    }
}
