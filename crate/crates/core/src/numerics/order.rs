//! Content-based row ordering, so order-sensitive algorithms give results
//! that do not depend on how the caller happened to arrange the input.

use std::cmp::Ordering;

use crate::numerics::Matrix;
use crate::scalar::Scalar;

fn compare_rows<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (&x, &y) in a.iter().zip(b) {
        let o = x.to_f64_lossy().total_cmp(&y.to_f64_lossy());
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Row indices sorted lexicographically by content. Identical rows keep
/// their input order, which is harmless since they are interchangeable.
pub fn canonical_row_order<T: Scalar>(x: &Matrix<T>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.rows()).collect();
    idx.sort_by(|&a, &b| compare_rows(x.row(a), x.row(b)));
    idx
}

/// For rows listed in `order`, the rank of each among distinct rows.
/// Duplicates share a rank.
pub fn distinct_ranks<T: Scalar>(x: &Matrix<T>, order: &[usize]) -> Vec<usize> {
    let mut ranks = Vec::with_capacity(order.len());
    let mut rank = 0;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && compare_rows(x.row(order[pos - 1]), x.row(i)) != Ordering::Equal {
            rank += 1;
        }
        ranks.push(rank);
    }
    ranks
}

/// Writes row `r` of `sorted` to row `order[r]` of the result.
pub fn scatter_rows<T: Scalar>(sorted: &Matrix<T>, order: &[usize]) -> Matrix<T> {
    let mut out = Matrix::zeros(sorted.rows(), sorted.cols());
    for (r, &i) in order.iter().enumerate() {
        out.row_mut(i).copy_from_slice(sorted.row(r));
    }
    out
}
