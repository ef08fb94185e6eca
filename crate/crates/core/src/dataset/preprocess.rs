use serde::{Deserialize, Serialize};

use crate::dataset::{TimeSeriesRecord, WindowedDataset};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Restricts `record` to the named columns, in the given order.
pub fn select_features(record: &TimeSeriesRecord, names: &[impl AsRef<str>]) -> Result<TimeSeriesRecord> {
    let mut idx = Vec::with_capacity(names.len());
    for n in names {
        let n = n.as_ref();
        let j = record.feature_names.iter().position(|f| f == n).ok_or_else(|| {
            Error::Data(format!(
                "unknown feature '{n}'; available: {}",
                record.feature_names.join(", ")
            ))
        })?;
        idx.push(j);
    }
    let (t, d) = (record.steps(), idx.len());
    let mut data = Vec::with_capacity(t * d);
    for row in record.values.row_iter() {
        data.extend(idx.iter().map(|&j| row[j]));
    }
    TimeSeriesRecord::new(
        record.sim_id.clone(),
        record.config,
        idx.iter().map(|&j| record.feature_names[j].clone()).collect(),
        Matrix::from_vec(t, d, data)?,
    )
}

/// Per-feature training range, mapping `[min, max]` onto `[-1, 1]`.
///
/// Values outside the training range are clamped so scaled data stays in
/// `[-1, 1]`. Constant features map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub feature_names: Vec<String>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    fn from_rows<'a>(feature_names: Vec<String>, rows: impl Iterator<Item = &'a [f64]>) -> Result<Self> {
        let d = feature_names.len();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        let mut seen = false;
        for row in rows {
            seen = true;
            for j in 0..d {
                mins[j] = mins[j].min(row[j]);
                maxs[j] = maxs[j].max(row[j]);
            }
        }
        if !seen {
            return Err(Error::Data("cannot fit a scaler on empty data".into()));
        }
        Ok(MinMaxScaler { feature_names, mins, maxs })
    }

    /// Fits on every time step of every window.
    pub fn fit_windows<T: Scalar>(data: &WindowedDataset<T>) -> Result<Self> {
        let d = data.n_features();
        let rows: Vec<f64> = data.values().iter().map(|v| v.to_f64_lossy()).collect();
        Self::from_rows(data.feature_names.clone(), rows.chunks_exact(d.max(1)))
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    pub fn scale_value(&self, j: usize, x: f64) -> f64 {
        let (lo, hi) = (self.mins[j], self.maxs[j]);
        if hi <= lo {
            return 0.0;
        }
        (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
    }

    pub fn unscale_value(&self, j: usize, y: f64) -> f64 {
        let (lo, hi) = (self.mins[j], self.maxs[j]);
        lo + (y + 1.0) * (hi - lo) / 2.0
    }

    fn check(&self, names: &[String]) -> Result<()> {
        if names.len() != self.n_features() {
            return Err(Error::shape("MinMaxScaler", self.n_features(), names.len()));
        }
        if names != self.feature_names.as_slice() {
            return Err(Error::Data(format!(
                "scaler was fit on features [{}] but data has [{}]",
                self.feature_names.join(", "),
                names.join(", ")
            )));
        }
        Ok(())
    }

    /// Scales every window in place and records the scaler on the dataset.
    pub fn apply_windows<T: Scalar>(&self, data: &mut WindowedDataset<T>) -> Result<()> {
        self.check(&data.feature_names)?;
        let d = self.n_features();
        for row in data.values_mut().chunks_exact_mut(d.max(1)) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = T::lit(self.scale_value(j, v.to_f64_lossy()));
            }
        }
        data.scaler = Some(self.clone());
        Ok(())
    }
}

pub fn fit_minmax(records: &[TimeSeriesRecord]) -> Result<MinMaxScaler> {
    let first = records
        .first()
        .ok_or_else(|| Error::Data("cannot fit a scaler on zero records".into()))?;
    for r in records {
        if r.feature_names != first.feature_names {
            return Err(Error::Data(format!(
                "record '{}' has different features from '{}'",
                r.sim_id, first.sim_id
            )));
        }
    }
    MinMaxScaler::from_rows(
        first.feature_names.clone(),
        records.iter().flat_map(|r| r.values.row_iter()),
    )
}

pub fn apply_minmax(record: &TimeSeriesRecord, scaler: &MinMaxScaler) -> Result<TimeSeriesRecord> {
    scaler.check(&record.feature_names)?;
    let mut out = record.clone();
    for i in 0..out.values.rows() {
        for (j, v) in out.values.row_mut(i).iter_mut().enumerate() {
            *v = scaler.scale_value(j, *v);
        }
    }
    Ok(out)
}

fn window_starts(steps: usize, length: usize, stride: usize) -> Result<std::iter::StepBy<std::ops::RangeInclusive<usize>>> {
    if length == 0 || stride == 0 {
        return Err(Error::invalid("window length and stride must be at least 1"));
    }
    if length > steps {
        return Err(Error::Data(format!(
            "window length {length} exceeds record length {steps}"
        )));
    }
    Ok((0..=steps - length).step_by(stride))
}

/// Slices `record` into `floor((T - L) / stride) + 1` windows of `L x d`.
pub fn window(record: &TimeSeriesRecord, length: usize, stride: usize) -> Result<Vec<Matrix<f64>>> {
    let d = record.n_features();
    window_starts(record.steps(), length, stride)?
        .map(|s| Matrix::from_vec(length, d, record.values.as_slice()[s * d..(s + length) * d].to_vec()))
        .collect()
}

/// Windows every record into one dataset, tagging each window with its
/// record's class. Records with ice in several zones are rejected.
pub fn windows_from_records<T: Scalar>(records: &[TimeSeriesRecord], length: usize, stride: usize) -> Result<WindowedDataset<T>> {
    let first = records
        .first()
        .ok_or_else(|| Error::Data("no records to window".into()))?;
    let d = first.n_features();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for r in records {
        if r.feature_names != first.feature_names {
            return Err(Error::Data(format!(
                "record '{}' has different features from '{}'",
                r.sim_id, first.sim_id
            )));
        }
        let class = r.config.label().class_index().ok_or_else(|| {
            Error::Data(format!(
                "record '{}' has ice in several zones ({}); only single-zone runs are labelled",
                r.sim_id, r.config
            ))
        })?;
        for s in window_starts(r.steps(), length, stride)? {
            values.extend(
                r.values.as_slice()[s * d..(s + length) * d]
                    .iter()
                    .map(|&v| T::lit(v)),
            );
            labels.push(class);
        }
    }
    WindowedDataset::new(length, stride, first.feature_names.clone(), values, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::IceConfig;
    use proptest::prelude::*;

    fn record(t: usize, d: usize) -> TimeSeriesRecord {
        let data = (0..t * d).map(|v| v as f64).collect();
        let names = (0..d).map(|j| format!("f{j}")).collect();
        TimeSeriesRecord::new("r", IceConfig::NORMAL, names, Matrix::from_vec(t, d, data).unwrap()).unwrap()
    }

    #[test]
    fn selection() {
        let r = record(4, 27);
        let names: Vec<String> = (0..6).map(|j| format!("f{}", 2 * j)).collect();
        let s = select_features(&r, &names).unwrap();
        assert_eq!(s.n_features(), 6);
        assert_eq!(s.values.column(1), r.values.column(2));
        assert_eq!(select_features(&r, &r.feature_names).unwrap(), r);
        let one = select_features(&r, &["f5"]).unwrap();
        assert_eq!(one.values.as_slice(), r.values.column(5).as_slice());
        match select_features(&r, &["nope"]) {
            Err(Error::Data(m)) => assert!(m.contains("f26")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minmax_examples() {
        let values = Matrix::from_rows(&[[0.0, 3.0], [10.0, 3.0], [5.0, 3.0]]).unwrap();
        let r = TimeSeriesRecord::new("r", IceConfig::NORMAL, vec!["a".into(), "b".into()], values).unwrap();
        let sc = fit_minmax(std::slice::from_ref(&r)).unwrap();
        assert_eq!(sc.scale_value(0, 10.0), 1.0);
        assert_eq!(sc.scale_value(0, 0.0), -1.0);
        assert_eq!(sc.scale_value(0, 2.5), -0.5);
        let s = apply_minmax(&r, &sc).unwrap();
        assert_eq!(s.values.column(1), vec![0.0; 3]);
        assert_eq!(s.values.column(0), vec![-1.0, 1.0, 0.0]);
        assert_eq!(sc.unscale_value(0, -0.5), 2.5);
        let narrow = select_features(&r, &["a"]).unwrap();
        assert!(apply_minmax(&narrow, &sc).is_err());
        assert!(fit_minmax(&[]).is_err());
    }

    #[test]
    fn window_examples() {
        let r = record(10, 2);
        let w = window(&r, 4, 3).unwrap();
        assert_eq!(w.len(), 3);
        for (k, s) in [0, 3, 6].iter().enumerate() {
            assert_eq!(w[k].row(0), r.values.row(*s));
        }
        assert_eq!(window(&r, 10, 1).unwrap(), vec![r.values.clone()]);
        assert!(window(&r, 11, 1).is_err());
        assert!(window(&r, 2, 0).is_err());
        assert_eq!(window(&record(10_000, 1), 200, 200).unwrap().len(), 50);
    }

    #[test]
    fn multi_zone_records_rejected() {
        let mut r = record(10, 2);
        r.config = IceConfig::new(0.4, 0.6, 0.8).unwrap();
        assert!(windows_from_records::<f64>(&[r], 5, 5).is_err());
    }

    proptest! {
        #[test]
        fn window_count(t in 1usize..300, l in 1usize..50, stride in 1usize..40) {
            let r = record(t, 1);
            match window(&r, l, stride) {
                Ok(w) => {
                    prop_assert!(l <= t);
                    prop_assert_eq!(w.len(), (t - l) / stride + 1);
                }
                Err(_) => prop_assert!(l > t),
            }
        }

        #[test]
        fn scaling_commutes_with_windowing(t in 5usize..60, l in 1usize..5, stride in 1usize..5, seed in 0u64..1000) {
            let mut rng = crate::numerics::SeededRng::new(seed);
            let data = (0..t * 3).map(|_| rng.uniform_range(-5.0, 5.0)).collect();
            let names = vec!["a".to_string(), "b".into(), "c".into()];
            let r = TimeSeriesRecord::new("r", IceConfig::NORMAL, names, Matrix::from_vec(t, 3, data).unwrap()).unwrap();
            let sc = fit_minmax(std::slice::from_ref(&r)).unwrap();
            let a = window(&apply_minmax(&r, &sc).unwrap(), l, stride).unwrap();
            let mut b = windows_from_records::<f64>(&[r.clone()], l, stride).unwrap();
            sc.apply_windows(&mut b).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (i, w) in a.iter().enumerate() {
                prop_assert_eq!(w.as_slice(), b.window(i));
            }
            let s = apply_minmax(&r, &sc).unwrap();
            for j in 0..3 {
                let col = s.values.column(j);
                prop_assert_eq!(col.iter().cloned().fold(f64::INFINITY, f64::min), -1.0);
                prop_assert_eq!(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
            }
        }
    }
}
