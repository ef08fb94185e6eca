use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use crate::dataset::MinMaxScaler;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed-length windows laid out as `(samples, timesteps, features)` in
/// row-major order, with one class tag per window.
///
/// Class tags: `0` is normal, `1..=3` is ice in that blade zone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct WindowedDataset<T> {
    pub window_length: usize,
    pub stride: usize,
    pub feature_names: Vec<String>,
    pub labels: Vec<usize>,
    pub scaler: Option<MinMaxScaler>,
    values: Vec<T>,
}

impl<T: Scalar> WindowedDataset<T> {
    pub fn new(
        window_length: usize,
        stride: usize,
        feature_names: Vec<String>,
        values: Vec<T>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let per_window = window_length * feature_names.len();
        if values.len() != per_window * labels.len() {
            return Err(Error::shape(
                "WindowedDataset::new",
                format!("{} windows of {window_length}x{}", labels.len(), feature_names.len()),
                format!("{} values", values.len()),
            ));
        }
        Ok(WindowedDataset {
            window_length,
            stride,
            feature_names,
            labels,
            scaler: None,
            values,
        })
    }

    pub fn empty_like(&self) -> Self {
        WindowedDataset {
            window_length: self.window_length,
            stride: self.stride,
            feature_names: self.feature_names.clone(),
            labels: Vec::new(),
            scaler: self.scaler.clone(),
            values: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn window_size(&self) -> usize {
        self.window_length * self.n_features()
    }

    /// Window `i` as `timesteps x features`, row-major.
    pub fn window(&self, i: usize) -> &[T] {
        let w = self.window_size();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn windows(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.len()).map(move |i| self.window(i))
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn push(&mut self, window: &[T], label: usize) -> Result<()> {
        if window.len() != self.window_size() {
            return Err(Error::shape("WindowedDataset::push", self.window_size(), window.len()));
        }
        self.values.extend_from_slice(window);
        self.labels.push(label);
        Ok(())
    }

    /// Appends all windows of `other`, which must share window shape and features.
    pub fn extend(&mut self, other: &WindowedDataset<T>) -> Result<()> {
        if other.window_length != self.window_length || other.feature_names != self.feature_names {
            return Err(Error::Data(
                "cannot concatenate datasets with different window shapes or features".into(),
            ));
        }
        self.values.extend_from_slice(&other.values);
        self.labels.extend_from_slice(&other.labels);
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut out = self.empty_like();
        for &i in indices {
            out.values.extend_from_slice(self.window(i));
            out.labels.push(self.labels[i]);
        }
        out
    }

    /// Keeps only windows whose class tag is in `classes`.
    pub fn filter_classes(&self, classes: &[usize]) -> Self {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| classes.contains(&self.labels[i]))
            .collect();
        self.subset(&idx)
    }

    /// Sorted distinct class tags.
    pub fn classes(&self) -> Vec<usize> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn class_counts(&self) -> Vec<(usize, usize)> {
        self.classes()
            .into_iter()
            .map(|c| (c, self.labels.iter().filter(|&&l| l == c).count()))
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> WindowedDataset<U> {
        WindowedDataset {
            window_length: self.window_length,
            stride: self.stride,
            feature_names: self.feature_names.clone(),
            labels: self.labels.clone(),
            scaler: self.scaler.clone(),
            values: self.values.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

impl<T: Scalar> Artifact for WindowedDataset<T> {
    const KIND: &'static str = "windowed-dataset";
    const VERSION: u32 = 1;
}
