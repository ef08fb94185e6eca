use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use crate::dataset::WindowedDataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;
use crate::vrae::model::posterior_means;
use crate::vrae::train::EVAL_BLOCK;
use crate::vrae::Checkpoint;

/// Posterior means, one row per window, with the window class tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct LatentSet<T> {
    pub latents: Matrix<T>,
    pub labels: Vec<usize>,
}

impl<T: Scalar> Artifact for LatentSet<T> {
    const KIND: &'static str = "latents";
    const VERSION: u32 = 1;
}

/// Deterministic embedding of every window: encoder pass, then the mean head.
pub fn encode_dataset<T: Scalar>(ckpt: &Checkpoint<T>, data: &WindowedDataset<T>) -> Result<LatentSet<T>> {
    use rayon::prelude::*;

    if data.n_features() != ckpt.config.input_dim {
        return Err(Error::shape(
            "encode_dataset",
            format!("{} features", ckpt.config.input_dim),
            data.n_features(),
        ));
    }
    let z = ckpt.config.latent_dim;
    let windows: Vec<&[T]> = data.windows().collect();
    let blocks: Vec<Result<Vec<T>>> = windows
        .par_chunks(EVAL_BLOCK)
        .map(|chunk| posterior_means(&ckpt.weights, chunk, data.window_length))
        .collect();
    let mut values = Vec::with_capacity(data.len() * z);
    for b in blocks {
        values.extend(b?);
    }
    Ok(LatentSet {
        latents: Matrix::from_vec(data.len(), z, values)?,
        labels: data.labels.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassLines {
    pub class: usize,
    /// Up to `samples_per_class` latent vectors, in dataset order.
    pub lines: Vec<Vec<f64>>,
    /// Per-dimension mean over every window of the class.
    pub mean: Vec<f64>,
}

/// Per-dimension view of latent vectors by class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentLineReport {
    pub classes: Vec<ClassLines>,
    /// `|mean_ref - mean_rest| / pooled_std` per dimension, where the
    /// reference is the lowest class tag (normal) and the rest are pooled.
    pub separation: Vec<f64>,
    /// Dimensions sorted by decreasing separation.
    pub ranking: Vec<usize>,
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

pub fn latent_line_report<T: Scalar>(
    latents: &Matrix<T>,
    labels: &[usize],
    samples_per_class: usize,
) -> Result<LatentLineReport> {
    if latents.rows() != labels.len() {
        return Err(Error::shape("latent_line_report", latents.rows(), labels.len()));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Data("latent line report needs at least two classes".into()));
    }
    let dims = latents.cols();
    let row = |i: usize| -> Vec<f64> { latents.row(i).iter().map(|v| v.to_f64_lossy()).collect() };

    let mut class_lines = Vec::with_capacity(classes.len());
    for &c in &classes {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if samples_per_class > members.len() {
            log::warn!(
                "class {c} has {} windows; clamping {samples_per_class} requested samples",
                members.len()
            );
        }
        let lines = members.iter().take(samples_per_class).map(|&i| row(i)).collect();
        let mut mean = vec![0.0; dims];
        for &i in &members {
            for (m, v) in mean.iter_mut().zip(row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= members.len() as f64);
        class_lines.push(ClassLines { class: c, lines, mean });
    }

    let reference = classes[0];
    let separation: Vec<f64> = (0..dims)
        .map(|d| {
            let (a, b): (Vec<f64>, Vec<f64>) = {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (i, &l) in labels.iter().enumerate() {
                    let v = latents[(i, d)].to_f64_lossy();
                    if l == reference { a.push(v) } else { b.push(v) }
                }
                (a, b)
            };
            let (ma, va) = mean_var(&a);
            let (mb, vb) = mean_var(&b);
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let dof = (na + nb - 2.0).max(1.0);
            let pooled = (((na - 1.0) * va + (nb - 1.0) * vb) / dof).sqrt();
            let diff = (ma - mb).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff / pooled.max(1e-12)
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..dims).collect();
    ranking.sort_by(|&i, &j| separation[j].total_cmp(&separation[i]).then(i.cmp(&j)));
    Ok(LatentLineReport {
        classes: class_lines,
        separation,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    #[test]
    fn identical_classes_have_no_separation() {
        let rows: Vec<[f64; 3]> = (0..8).map(|i| [i as f64 % 3.0, 1.0, -(i as f64 % 3.0)]).collect();
        let mut labels = vec![0; 4];
        labels.extend([1; 4]);
        // same multiset of rows in each class
        let rows: Vec<[f64; 3]> = rows[..4].iter().chain(rows[..4].iter()).copied().collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let r = latent_line_report(&m, &labels, 2).unwrap();
        assert!(r.separation.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn separated_dimension_ranks_first() {
        let mut rng = SeededRng::new(1);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let class = i % 2;
            let mut r: Vec<f64> = (0..6).map(|_| rng.standard_normal()).collect();
            r[3] = if class == 0 { 1.0 } else { -1.0 };
            rows.push(r);
            labels.push(class);
        }
        let m = Matrix::from_rows(&rows).unwrap();
        let r = latent_line_report(&m, &labels, 15).unwrap();
        assert_eq!(r.ranking[0], 3);
        assert_eq!(r.classes.len(), 2);
        assert_eq!(r.classes[0].lines.len(), 15);
        assert_eq!(r.classes[0].mean[3], 1.0);
    }

    #[test]
    fn clamps_and_rejects_single_class() {
        let m = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let r = latent_line_report(&m, &[0, 0, 1], 10).unwrap();
        assert_eq!(r.classes[0].lines.len(), 2);
        assert_eq!(r.classes[1].lines.len(), 1);
        assert!(latent_line_report(&m, &[1, 1, 1], 1).is_err());
    }
}
