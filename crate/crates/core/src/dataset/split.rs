use crate::dataset::WindowedDataset;
use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::scalar::Scalar;

/// Indices of each class, in dataset order.
fn indices_by_class<T: Scalar>(data: &WindowedDataset<T>) -> Vec<(usize, Vec<usize>)> {
    data.classes()
        .into_iter()
        .map(|c| (c, (0..data.len()).filter(|&i| data.labels[i] == c).collect()))
        .collect()
}

/// Per-class train counts summing to `round(fraction * N)`, assigned by
/// largest remainder (ties go to the smaller class tag).
fn stratified_counts(sizes: &[usize], fraction: f64) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let target = (fraction * n as f64).round() as usize;
    let exact: Vec<f64> = sizes.iter().map(|&s| fraction * s as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(counts.iter().sum());
    for &k in order.iter().cycle().take(order.len() * 2) {
        if missing == 0 {
            break;
        }
        if counts[k] < sizes[k] {
            counts[k] += 1;
            missing -= 1;
        }
    }
    counts
}

/// Stratified, shuffled train/test partition.
pub fn split<T: Scalar>(data: &WindowedDataset<T>, train_fraction: f64, seed: u64) -> Result<(WindowedDataset<T>, WindowedDataset<T>)> {
    if data.is_empty() {
        return Err(Error::Data("cannot split an empty dataset".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let groups = indices_by_class(data);
    let sizes: Vec<usize> = groups.iter().map(|(_, g)| g.len()).collect();
    let counts = stratified_counts(&sizes, train_fraction);
    let mut rng = SeededRng::new(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for ((_, mut idx), n_train) in groups.into_iter().zip(counts) {
        rng.shuffle(&mut idx);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    rng.shuffle(&mut train);
    rng.shuffle(&mut test);
    Ok((data.subset(&train), data.subset(&test)))
}

/// Uniformly subsamples `per_class` windows from every class.
pub fn balance<T: Scalar>(data: &WindowedDataset<T>, per_class: usize, seed: u64) -> Result<WindowedDataset<T>> {
    let groups = indices_by_class(data);
    if let Some((c, g)) = groups.iter().find(|(_, g)| g.len() < per_class) {
        return Err(Error::Data(format!(
            "class {c} has {} windows, fewer than the requested {per_class}",
            g.len()
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut chosen = Vec::with_capacity(per_class * groups.len());
    for (_, mut idx) in groups {
        rng.shuffle(&mut idx);
        chosen.extend_from_slice(&idx[..per_class]);
    }
    rng.shuffle(&mut chosen);
    Ok(data.subset(&chosen))
}
