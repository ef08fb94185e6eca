use crate::error::{Error, Result};
use crate::numerics::{
    canonical_row_order, canonical_sign, pairwise_squared_distances, scatter_rows,
    symmetric_eigen, Matrix,
};
use crate::projection::{check_input, Embedding, ProjectionParams};
use crate::scalar::Scalar;

/// Laplacian eigenmap on the symmetrised k-nearest-neighbour graph.
///
/// Neighbours tied with the k-th distance are all kept, so identical points
/// end up with identical adjacency. Coordinates are `D^-1/2 u` for the
/// eigenvectors `u` of the normalised Laplacian after the trivial one.
pub fn spectral_embedding<T: Scalar>(x: &Matrix<T>, k_neighbors: usize, dims: usize) -> Result<Embedding<T>> {
    check_input(x, 2, "spectral embedding")?;
    let n = x.rows();
    if k_neighbors == 0 || k_neighbors >= n {
        return Err(Error::invalid(format!(
            "spectral embedding neighbours must be in 1..{n}, got {k_neighbors}"
        )));
    }
    if dims == 0 || dims >= n {
        return Err(Error::invalid(format!("spectral embedding dims must be in 1..{n}, got {dims}")));
    }
    let params = ProjectionParams::Spectral {
        neighbors: k_neighbors,
        dims,
    };
    let order = canonical_row_order(x);
    let sorted = x.select_rows(&order);
    let dist = pairwise_squared_distances(&sorted);
    if dist.as_slice().iter().all(|&v| v == T::zero()) {
        return Embedding::new(Matrix::zeros(n, dims), params, x.cols());
    }

    let mut adj = vec![false; n * n];
    for i in 0..n {
        let mut others: Vec<T> = (0..n).filter(|&j| j != i).map(|j| dist[(i, j)]).collect();
        others.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let cutoff = others[k_neighbors - 1];
        for j in 0..n {
            if j != i && dist[(i, j)] <= cutoff {
                adj[i * n + j] = true;
                adj[j * n + i] = true;
            }
        }
    }

    let components = count_components(&adj, n);
    if components > dims + 1 {
        log::warn!(
            "neighbour graph has {components} connected components, more than dims + 1 = {}; \
             the embedding cannot separate them all",
            dims + 1
        );
    }

    let degree: Vec<T> = (0..n)
        .map(|i| T::from_usize_lossy(adj[i * n..(i + 1) * n].iter().filter(|&&a| a).count()))
        .collect();
    let inv_sqrt: Vec<T> = degree.iter().map(|&d| T::one() / d.sqrt()).collect();
    // eigenvectors of D^-1/2 W D^-1/2 in descending order are those of the
    // normalised Laplacian in ascending order
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if adj[i * n + j] {
                m[(i, j)] = inv_sqrt[i] * inv_sqrt[j];
            }
        }
    }
    let eig = symmetric_eigen(&m)?;
    let mut coords = Matrix::zeros(n, dims);
    for (c, idx) in eig.descending_order().into_iter().skip(1).take(dims).enumerate() {
        let mut v: Vec<T> = eig.vector(idx).iter().zip(&inv_sqrt).map(|(&u, &s)| u * s).collect();
        canonical_sign(&mut v);
        for (r, &val) in v.iter().enumerate() {
            coords[(r, c)] = val;
        }
    }
    Embedding::new(scatter_rows(&coords, &order), params, x.cols())
}

fn count_components(adj: &[bool], n: usize) -> usize {
    let mut seen = vec![false; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if adj[i * n + j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}
