use crate::error::{Error, Result};
use crate::numerics::{squared_distance, Matrix};
use crate::scalar::Scalar;

/// Mean silhouette coefficient of a labelling. Points alone in their
/// cluster contribute 0.
pub fn silhouette<T: Scalar>(points: &Matrix<T>, labels: &[usize]) -> Result<f64> {
    let n = points.rows();
    if labels.len() != n {
        return Err(Error::shape("silhouette", n, labels.len()));
    }
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::invalid("silhouette needs at least two non-empty groups"));
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[labels[j]] += squared_distance(points.row(i), points.row(j)).to_f64_lossy().sqrt();
            }
        }
        let own = labels[i];
        if sizes[own] < 2 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_value() {
        // 1-D points 0, 1 in one group and 4 in the other
        let x = Matrix::from_rows(&[[0.0], [1.0], [4.0]]).unwrap();
        let s = silhouette(&x, &[0, 0, 1]).unwrap();
        // point 0: a=1, b=4 -> 0.75; point 1: a=1, b=3 -> 2/3; point 2 alone -> 0
        assert!((s - (0.75 + 2.0 / 3.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn needs_two_groups() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(silhouette(&x, &[0, 0]).is_err());
        assert!(silhouette(&x, &[0]).is_err());
    }
}
