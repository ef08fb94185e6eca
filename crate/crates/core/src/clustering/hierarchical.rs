use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{check_points, cluster_means, ClusterAssignment, ClusterParams};
use crate::error::{Error, Result};
use crate::numerics::{canonical_row_order, pairwise_squared_distances, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Ward,
    Single,
    Complete,
    Average,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [Linkage::Ward, Linkage::Single, Linkage::Complete, Linkage::Average];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Ward => "ward",
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }

    /// Lance-Williams distance from the union of `i` and `j` to `k`.
    fn update(self, dik: f64, djk: f64, dij: f64, ni: f64, nj: f64, nk: f64) -> f64 {
        match self {
            Linkage::Single => dik.min(djk),
            Linkage::Complete => dik.max(djk),
            Linkage::Average => (ni * dik + nj * djk) / (ni + nj),
            Linkage::Ward => ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / (ni + nj + nk),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Linkage::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown linkage '{s}' (expected ward, single, complete or average)"
                ))
            })
    }
}

/// Agglomerative clustering cut at `k` clusters.
///
/// The dendrogram is built with the nearest-neighbour-chain algorithm,
/// which is exact for all four linkages because they are reducible. Ward
/// works on squared Euclidean distances and reports heights as their root.
pub fn hierarchical<T: Scalar>(x: &Matrix<T>, k: usize, linkage: Linkage) -> Result<ClusterAssignment<T>> {
    check_points(x, "hierarchical clustering")?;
    let n = x.rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("hierarchical k must be in 1..={n}, got {k}")));
    }
    let order = canonical_row_order(x);
    let sorted = x.select_rows(&order);
    let merges = nn_chain(&sorted, linkage);

    let mut uf = UnionFind::new(n);
    for &(a, b, _) in merges.iter().take(n - k) {
        uf.union(a, b);
    }
    // number clusters by first appearance in sorted order
    let mut ids = vec![-1i32; n];
    let mut next = 0;
    let mut sorted_labels = vec![0i32; n];
    for (i, label) in sorted_labels.iter_mut().enumerate() {
        let root = uf.find(i);
        if ids[root] < 0 {
            ids[root] = next;
            next += 1;
        }
        *label = ids[root];
    }
    let centroids = cluster_means(&sorted, &sorted_labels, k);
    let mut labels = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        labels[i] = sorted_labels[r];
    }
    Ok(ClusterAssignment {
        labels,
        params: ClusterParams::Hierarchical { k, linkage },
        centroids: Some(centroids),
        inertia: None,
        inertia_trace: Vec::new(),
        merge_heights: merges.iter().map(|m| m.2).collect(),
    })
}

/// All `n - 1` merges `(a, b, height)` sorted by height, where `a` and `b`
/// are any members of the two clusters joined.
fn nn_chain<T: Scalar>(x: &Matrix<T>, linkage: Linkage) -> Vec<(usize, usize, f64)> {
    let n = x.rows();
    let sq = pairwise_squared_distances(x);
    let mut d: Vec<f64> = sq.as_slice().iter().map(|v| v.to_f64_lossy()).collect();
    if linkage != Linkage::Ward {
        d.iter_mut().for_each(|v| *v = v.sqrt());
    }
    let mut size = vec![1.0f64; n];
    let mut active = vec![true; n];
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    while merges.len() + 1 < n {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster"));
        }
        let a = *chain.last().expect("non-empty chain");
        let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
        // prefer the previous chain element on ties so the chain terminates
        let mut best = prev.unwrap_or(usize::MAX);
        let mut best_d = prev.map_or(f64::INFINITY, |p| d[a * n + p]);
        for c in 0..n {
            if active[c] && c != a && d[a * n + c] < best_d {
                best = c;
                best_d = d[a * n + c];
            }
        }
        if Some(best) != prev {
            chain.push(best);
            continue;
        }
        chain.pop();
        chain.pop();
        let (keep, drop) = (a.min(best), a.max(best));
        let dab = d[a * n + best];
        for c in 0..n {
            if active[c] && c != keep && c != drop {
                let v = linkage.update(d[keep * n + c], d[drop * n + c], dab, size[keep], size[drop], size[c]);
                d[keep * n + c] = v;
                d[c * n + keep] = v;
            }
        }
        size[keep] += size[drop];
        active[drop] = false;
        let height = if linkage == Linkage::Ward { dab.max(0.0).sqrt() } else { dab };
        merges.push((keep, drop, height));
    }
    merges.sort_by(|p, q| p.2.total_cmp(&q.2));
    merges
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sample_standard_gaussian, SeededRng};

    /// Textbook O(n^3) agglomeration: repeatedly merge the closest pair
    /// under the linkage's definition on the original points.
    fn naive_heights(x: &Matrix<f64>, linkage: Linkage) -> Vec<f64> {
        let n = x.rows();
        let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let dist = |a: usize, b: usize| -> f64 {
            x.row(a).iter().zip(x.row(b)).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
        };
        let link = |p: &[usize], q: &[usize]| -> f64 {
            let pairs = p.iter().flat_map(|&a| q.iter().map(move |&b| (a, b)));
            match linkage {
                Linkage::Single => pairs.map(|(a, b)| dist(a, b)).fold(f64::INFINITY, f64::min),
                Linkage::Complete => pairs.map(|(a, b)| dist(a, b)).fold(0.0, f64::max),
                Linkage::Average => pairs.map(|(a, b)| dist(a, b)).sum::<f64>() / (p.len() * q.len()) as f64,
                Linkage::Ward => {
                    // increase in within-cluster sum of squares, times two
                    let mean = |s: &[usize]| -> Vec<f64> {
                        (0..x.cols()).map(|c| s.iter().map(|&i| x[(i, c)]).sum::<f64>() / s.len() as f64).collect()
                    };
                    let (mp, mq) = (mean(p), mean(q));
                    let gap: f64 = mp.iter().zip(&mq).map(|(a, b)| (a - b) * (a - b)).sum();
                    let (np, nq) = (p.len() as f64, q.len() as f64);
                    (2.0 * np * nq / (np + nq) * gap).sqrt()
                }
            }
        };
        let mut heights = Vec::new();
        while clusters.len() > 1 {
            let mut best = (0, 1, f64::INFINITY);
            for i in 0..clusters.len() {
                for j in i + 1..clusters.len() {
                    let h = link(&clusters[i], &clusters[j]);
                    if h < best.2 {
                        best = (i, j, h);
                    }
                }
            }
            let merged = clusters.remove(best.1);
            clusters[best.0].extend(merged);
            heights.push(best.2);
        }
        heights
    }

    #[test]
    fn chain_matches_naive_agglomeration() {
        for seed in 0..6 {
            let x: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(seed), 14, 2);
            for linkage in Linkage::ALL {
                let fast: Vec<f64> = nn_chain(&x, linkage).iter().map(|m| m.2).collect();
                let slow = naive_heights(&x, linkage);
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-9, "{linkage} seed {seed}: {fast:?} vs {slow:?}");
                }
            }
        }
    }

    #[test]
    fn parses_linkage_names() {
        assert_eq!("Ward".parse::<Linkage>().unwrap(), Linkage::Ward);
        assert_eq!("average".parse::<Linkage>().unwrap(), Linkage::Average);
        assert!("centroid".parse::<Linkage>().is_err());
    }
}
