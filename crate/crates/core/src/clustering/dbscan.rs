use std::collections::VecDeque;

use crate::clustering::{check_points, ClusterAssignment, ClusterParams, NOISE};
use crate::error::{Error, Result};
use crate::numerics::{canonical_row_order, pairwise_squared_distances, Matrix};
use crate::scalar::Scalar;

pub const DEFAULT_MIN_PTS: usize = 4;

/// Median over points of the distance to the `k`-th nearest other point.
/// Falls back to the smallest positive pairwise distance, then to 1, when
/// that median is zero.
pub fn default_dbscan_eps<T: Scalar>(x: &Matrix<T>, k: usize) -> f64 {
    let n = x.rows();
    if n < 2 {
        return 1.0;
    }
    let k = k.clamp(1, n - 1);
    let d = pairwise_squared_distances(x);
    let mut kth: Vec<f64> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d[(i, j)].to_f64_lossy()).collect();
            row.select_nth_unstable_by(k - 1, f64::total_cmp);
            row[k - 1].sqrt()
        })
        .collect();
    kth.sort_by(f64::total_cmp);
    let m = kth.len();
    let median = if m % 2 == 1 { kth[m / 2] } else { 0.5 * (kth[m / 2 - 1] + kth[m / 2]) };
    if median > 0.0 {
        return median;
    }
    d.as_slice()
        .iter()
        .map(|v| v.to_f64_lossy())
        .filter(|&v| v > 0.0)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
        .map_or(1.0, f64::sqrt)
}

/// Density-based clustering. A point is core when at least `min_pts` points
/// (itself included) lie within `eps`; clusters grow from cores, border
/// points join the first cluster that reaches them, the rest is noise.
pub fn dbscan<T: Scalar>(x: &Matrix<T>, eps: f64, min_pts: usize) -> Result<ClusterAssignment<T>> {
    check_points(x, "DBSCAN")?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("DBSCAN eps must be positive, got {eps}")));
    }
    if min_pts == 0 {
        return Err(Error::invalid("DBSCAN min_pts must be at least 1"));
    }
    let n = x.rows();
    let order = canonical_row_order(x);
    let sorted = x.select_rows(&order);
    let d = pairwise_squared_distances(&sorted);
    let eps2 = eps * eps;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| d[(i, j)].to_f64_lossy() <= eps2).collect())
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels = vec![NOISE; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !core[start] || labels[start] != NOISE {
            continue;
        }
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for &j in &neighbours[i] {
                if labels[j] == NOISE {
                    labels[j] = next;
                    if core[j] {
                        queue.push_back(j);
                    }
                }
            }
        }
        next += 1;
    }
    let mut out = vec![NOISE; n];
    for (r, &i) in order.iter().enumerate() {
        out[i] = labels[r];
    }
    Ok(ClusterAssignment {
        labels: out,
        params: ClusterParams::Dbscan { eps, min_pts },
        centroids: None,
        inertia: None,
        inertia_trace: Vec::new(),
        merge_heights: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn border_point_joins_but_does_not_expand() {
        // 0,1,2 dense; 3 within eps of 2 only; 4 within eps of 3 only
        let x = Matrix::from_rows(&[[0.0], [0.1], [0.2], [0.9], [1.65]]).unwrap();
        let a = dbscan(&x, 0.72, 3).unwrap();
        assert_eq!(a.labels, vec![0, 0, 0, 0, NOISE]);
    }

    #[test]
    fn default_eps_is_median_kth_distance() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [3.0], [6.0]]).unwrap();
        // 1st-neighbour distances: 1, 1, 2, 3 -> median 1.5
        assert_eq!(default_dbscan_eps(&x, 1), 1.5);
        let same = Matrix::from_rows(&[[0.0], [0.0], [0.0], [2.0]]).unwrap();
        assert_eq!(default_dbscan_eps(&same, 1), 2.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(dbscan(&x, 0.0, 2).is_err());
        assert!(dbscan(&x, 1.0, 0).is_err());
        assert!(dbscan(&x, f64::NAN, 2).is_err());
    }
}
