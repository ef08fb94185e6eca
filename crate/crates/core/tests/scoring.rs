use proptest::prelude::*;
use rotor_vrae::clustering::{kmeans_pp, KMeansConfig, NOISE};
use rotor_vrae::numerics::{Matrix, SeededRng};
use rotor_vrae::scoring::{
    anomaly_scores, auc_from_hard_labels, auc_from_scores, classification_metrics, match_labels,
    render_table, score_assignment, AucSource, ScoreReport,
};

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Best total agreement over every injective cluster-to-class map.
fn brute_force_agreement(pred: &[i32], truth: &[usize]) -> usize {
    let k = pred.iter().filter(|&&p| p >= 0).map(|&p| p as usize + 1).max().unwrap_or(0);
    let c = truth.iter().max().map_or(0, |&m| m + 1);
    let size = k.max(c);
    permutations(size)
        .into_iter()
        .map(|perm| {
            pred.iter()
                .zip(truth)
                .filter(|(&p, &t)| p >= 0 && perm[p as usize] == t)
                .count()
        })
        .max()
        .unwrap()
}

#[test]
fn identical_and_swapped_labels_match_fully() {
    let truth = vec![0, 0, 1, 1, 1, 0];
    let same: Vec<i32> = truth.iter().map(|&t| t as i32).collect();
    let m = match_labels(&same, &truth).unwrap();
    assert_eq!(m.classes, vec![Some(0), Some(1)]);
    assert_eq!(m.agreement, 6);
    let swapped: Vec<i32> = truth.iter().map(|&t| 1 - t as i32).collect();
    let m = match_labels(&swapped, &truth).unwrap();
    assert_eq!(m.classes, vec![Some(1), Some(0)]);
    assert_eq!(m.agreement, 6);
}

#[test]
fn three_class_confusion_example() {
    // truth rows by predicted columns: [[5,0,1],[0,4,0],[2,0,6]]
    let table = [[5, 0, 1], [0, 4, 0], [2, 0, 6]];
    let (mut pred, mut truth) = (Vec::new(), Vec::new());
    for (t, row) in table.iter().enumerate() {
        for (p, &count) in row.iter().enumerate() {
            for _ in 0..count {
                pred.push(p as i32);
                truth.push(t);
            }
        }
    }
    let m = match_labels(&pred, &truth).unwrap();
    assert_eq!(m.classes, vec![Some(0), Some(1), Some(2)]);
    assert_eq!(m.agreement, 15);
    assert_eq!(brute_force_agreement(&pred, &truth), 15);
}

#[test]
fn length_mismatch_is_an_error() {
    assert!(match_labels(&[0, 1], &[0]).is_err());
    assert!(classification_metrics(&[], &[]).is_err());
}

#[test]
fn perfect_prediction_scores_one() {
    let truth = vec![0, 1, 2, 1, 0];
    let matched: Vec<Option<usize>> = truth.iter().map(|&t| Some(t)).collect();
    let m = classification_metrics(&matched, &truth).unwrap();
    assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
}

#[test]
fn binary_hand_enumerated_confusion() {
    // 60 negatives, 40 positives; one positive missed, two negatives flagged
    let truth: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
    let mut matched: Vec<Option<usize>> = truth.iter().map(|&t| Some(t)).collect();
    matched[60] = Some(0);
    matched[0] = Some(1);
    matched[1] = Some(1);
    let m = classification_metrics(&matched, &truth).unwrap();
    // class 0: tp 58, predicted 59, support 60; class 1: tp 39, predicted 41, support 40
    let (p0, r0) = (58.0 / 59.0, 58.0 / 60.0);
    let (p1, r1) = (39.0 / 41.0, 39.0 / 40.0);
    let f = |p: f64, r: f64| 2.0 * p * r / (p + r);
    assert!((m.accuracy - 0.97).abs() < 1e-15);
    assert!((m.precision - (0.6 * p0 + 0.4 * p1)).abs() < 1e-15);
    assert!((m.recall - (0.6 * r0 + 0.4 * r1)).abs() < 1e-15);
    assert!((m.f1 - (0.6 * f(p0, r0) + 0.4 * f(p1, r1))).abs() < 1e-15);
}

#[test]
fn auc_examples() {
    let truth = [false, false, true, true];
    assert_eq!(auc_from_scores(&[0.1, 0.2, 0.8, 0.9], &truth).unwrap(), 1.0);
    assert_eq!(auc_from_scores(&[0.3; 4], &truth).unwrap(), 0.5);
    assert!(auc_from_scores(&[0.3; 4], &[true; 4]).is_err());

    // 10 positives with 9 caught; 10 negatives with 8 cleared
    let positive: Vec<bool> = (0..20).map(|i| i < 10).collect();
    let called: Vec<bool> = (0..20).map(|i| if i < 10 { i != 0 } else { i >= 18 }).collect();
    assert!((auc_from_hard_labels(&called, &positive).unwrap() - 0.85).abs() < 1e-15);
}

#[test]
fn anomaly_score_signs() {
    let centroids = Matrix::from_rows(&[[0.0, 0.0], [4.0, 0.0]]).unwrap();
    let points = Matrix::from_rows(&[[0.0, 0.0], [2.0, 3.0], [4.0, 0.0]]).unwrap();
    let s = anomaly_scores(&points, &centroids, 0, 1).unwrap();
    assert!(s[0] < 0.0);
    assert_eq!(s[1], 0.0);
    assert!(s[2] > 0.0);
}

fn overlapping_blobs(seed: u64) -> (Matrix<f64>, Vec<usize>) {
    let mut rng = SeededRng::new(seed);
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (class, cx) in [(0usize, 0.0), (1, 2.5)] {
        for _ in 0..100 {
            rows.push([cx + rng.standard_normal(), rng.standard_normal()]);
            truth.push(class);
        }
    }
    (Matrix::from_rows(&rows).unwrap(), truth)
}

#[test]
fn continuous_auc_beats_hard_auc_on_blobs() {
    let (x, truth) = overlapping_blobs(3);
    let a = kmeans_pp(&x, &KMeansConfig { k: 2, seed: 1, ..Default::default() }).unwrap();
    let names = vec!["normal".to_string(), "iced".to_string()];
    let report = score_assignment("kmeans", &a, &x, &truth, &names).unwrap();
    assert_eq!(report.auc_source, Some(AucSource::CentroidScores));
    let m = match_labels(&a.labels, &truth).unwrap();
    let called: Vec<bool> = m.relabeled.iter().map(|r| *r != Some(0)).collect();
    let positive: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
    let hard = auc_from_hard_labels(&called, &positive).unwrap();
    assert!(report.auc.unwrap() >= hard, "{} < {hard}", report.auc.unwrap());
    report.validate().unwrap();
}

#[test]
fn noise_counts_against_every_metric() {
    let truth = vec![0, 0, 1, 1];
    let x = Matrix::from_rows(&[[0.0], [0.1], [5.0], [5.1]]).unwrap();
    let a = rotor_vrae::clustering::ClusterAssignment::<f64> {
        labels: vec![0, NOISE, 1, 1],
        params: rotor_vrae::clustering::ClusterParams::Dbscan { eps: 1.0, min_pts: 1 },
        centroids: None,
        inertia: None,
        inertia_trace: vec![],
        merge_heights: vec![],
    };
    let r = score_assignment("dbscan", &a, &x, &truth, &[]).unwrap();
    assert_eq!(r.accuracy, 0.75);
    assert_eq!(r.recall, 0.75);
    assert_eq!(r.clusters, vec![0, 1, NOISE]);
    assert_eq!(r.confusion, vec![vec![1, 0, 1], vec![0, 2, 0]]);
    assert_eq!(r.auc_source, Some(AucSource::HardLabels));
    // noise is called anomalous: TPR 1, TNR 0.5
    assert_eq!(r.auc, Some(0.75));
}

#[test]
fn report_round_trips_and_renders() {
    let (x, truth) = overlapping_blobs(4);
    let a = kmeans_pp(&x, &KMeansConfig { k: 2, seed: 2, ..Default::default() }).unwrap();
    let r = score_assignment("kmeans++", &a, &x, &truth, &["normal".into(), "iced".into()]).unwrap();
    let text = rotor_vrae::artifact::to_json_string(&r).unwrap();
    let back: ScoreReport = rotor_vrae::artifact::from_json_str(&text).unwrap();
    assert_eq!(back, r);
    let table = render_table(&[&r, &r]);
    assert_eq!(table.lines().count(), 6);
    assert!(table.lines().all(|l| l.len() == table.lines().next().unwrap().len()));
    assert!(r.detail_text().contains("normal"));
}

fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(0..k, n)
}

proptest! {
    #[test]
    fn hungarian_matches_brute_force(
        (pred, truth) in (1usize..40, 1usize..=5, 1usize..=5)
            .prop_flat_map(|(n, kp, kt)| (proptest::collection::vec(-1i32..kp as i32, n), labels(n, kt)))
    ) {
        let m = match_labels(&pred, &truth).unwrap();
        prop_assert_eq!(m.agreement, brute_force_agreement(&pred, &truth));
    }

    #[test]
    fn weighted_recall_is_accuracy(
        (pred, truth) in (1usize..60, 1usize..=6)
            .prop_flat_map(|(n, k)| (proptest::collection::vec(-1i32..k as i32, n), labels(n, k)))
    ) {
        let m = match_labels(&pred, &truth).unwrap();
        let s = classification_metrics(&m.relabeled, &truth).unwrap();
        prop_assert!((s.recall - s.accuracy).abs() < 1e-12);
        for v in [s.accuracy, s.precision, s.recall, s.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn accuracy_ignores_cluster_renaming(
        (pred, truth, shift) in (1usize..50, 2usize..=5)
            .prop_flat_map(|(n, k)| (proptest::collection::vec(0i32..k as i32, n), labels(n, k), 1i32..7))
    ) {
        let renamed: Vec<i32> = pred.iter().map(|&p| (p + shift) * 3 % 17 + 100).collect();
        let a = match_labels(&pred, &truth).unwrap().agreement;
        let b = match_labels(&renamed, &truth).unwrap().agreement;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn auc_invariant_under_monotone_maps(
        scores in proptest::collection::vec(-5.0f64..5.0, 4..60),
        seed in 0u64..1000,
    ) {
        let mut rng = SeededRng::new(seed);
        let mut positive: Vec<bool> = scores.iter().map(|_| rng.uniform() < 0.5).collect();
        positive[0] = true;
        positive[1] = false;
        let base = auc_from_scores(&scores, &positive).unwrap();
        let warped: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + s.powi(3)).collect();
        prop_assert!((auc_from_scores(&warped, &positive).unwrap() - base).abs() < 1e-12);
    }
}
