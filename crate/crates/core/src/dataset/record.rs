use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::IceConfig;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// One simulation: `T x D` sensor readings and the ice configuration behind them.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesRecord {
    pub sim_id: String,
    pub config: IceConfig,
    pub feature_names: Vec<String>,
    /// `T x D`
    pub values: Matrix<f64>,
}

impl TimeSeriesRecord {
    pub fn new(sim_id: impl Into<String>, config: IceConfig, feature_names: Vec<String>, values: Matrix<f64>) -> Result<Self> {
        if values.cols() != feature_names.len() {
            return Err(Error::shape("TimeSeriesRecord", feature_names.len(), values.cols()));
        }
        Ok(TimeSeriesRecord {
            sim_id: sim_id.into(),
            config,
            feature_names,
            values,
        })
    }

    pub fn steps(&self) -> usize {
        self.values.rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.feature_names.iter().position(|n| n == name)?;
        Some(self.values.column(j))
    }
}

/// Sidecar mapping simulation ids to ice configurations, one
/// `sim_id,x-y-z` line per simulation. Order of appearance is kept.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimMetadata {
    entries: Vec<(String, IceConfig)>,
}

impl SimMetadata {
    pub fn new(entries: Vec<(String, IceConfig)>) -> Self {
        SimMetadata { entries }
    }

    pub fn entries(&self) -> &[(String, IceConfig)] {
        &self.entries
    }

    pub fn get(&self, sim_id: &str) -> Option<IceConfig> {
        self.entries.iter().find(|(id, _)| id == sim_id).map(|(_, c)| *c)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, cfg) = line.split_once(',').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                row: n + 1,
                column: 1,
                message: "expected 'sim_id,x-y-z'".into(),
            })?;
            let config = cfg.trim().parse::<IceConfig>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                row: n + 1,
                column: 2,
                message: e.to_string(),
            })?;
            entries.push((id.trim().to_string(), config));
        }
        Ok(SimMetadata { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(id, c)| format!("{id},{c}\n"))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Number of simulations per class tag.
    pub fn class_counts(&self) -> BTreeMap<Option<usize>, usize> {
        let mut counts = BTreeMap::new();
        for (_, c) in &self.entries {
            *counts.entry(c.label().class_index()).or_insert(0) += 1;
        }
        counts
    }
}

/// File name of the metadata sidecar inside a dataset directory.
pub const METADATA_FILE: &str = "metadata.csv";

fn sim_id_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Data(format!("cannot derive a simulation id from {}", path.display())))
}

/// Parses one simulation CSV (header of feature names, one numeric row per
/// step). The simulation id is the file stem and must appear in `metadata`.
pub fn load_csv(path: impl AsRef<Path>, metadata: &SimMetadata) -> Result<TimeSeriesRecord> {
    let path = path.as_ref();
    let sim_id = sim_id_of(path)?;
    let config = metadata
        .get(&sim_id)
        .ok_or_else(|| Error::Data(format!("no metadata entry for simulation '{sim_id}'")))?;
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, path, sim_id, config)
}

fn parse_csv(reader: impl std::io::Read, path: &Path, sim_id: String, config: IceConfig) -> Result<TimeSeriesRecord> {
    let parse_err = |row: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().any(String::is_empty) {
        return Err(parse_err(1, 1, "header row must name every column".into()));
    }
    let d = headers.len();
    let mut data = Vec::new();
    let mut steps = 0;
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| parse_err(line, 1, e.to_string()))?;
        if rec.len() != d {
            return Err(parse_err(
                line,
                rec.len().min(d) + 1,
                format!("expected {d} values, found {}", rec.len()),
            ));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, j + 1, format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, j + 1, format!("non-finite value '{cell}'")));
            }
            data.push(v);
        }
        steps += 1;
    }
    TimeSeriesRecord::new(sim_id, config, headers, Matrix::from_vec(steps, d, data)?)
}

pub fn write_csv(record: &TimeSeriesRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(record.values.len() * 12);
    out.push_str(&record.feature_names.join(","));
    out.push('\n');
    for row in record.values.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes every record as `<sim_id>.csv` plus the metadata sidecar.
pub fn write_dataset_dir(records: &[TimeSeriesRecord], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(records.len() + 1);
    for r in records {
        let p = dir.join(format!("{}.csv", r.sim_id));
        write_csv(r, &p)?;
        written.push(p);
    }
    let meta = SimMetadata::new(records.iter().map(|r| (r.sim_id.clone(), r.config)).collect());
    let meta_path = dir.join(METADATA_FILE);
    meta.save(&meta_path)?;
    written.push(meta_path);
    Ok(written)
}

/// Loads every simulation listed in the directory's metadata sidecar, in
/// sidecar order.
pub fn load_dataset_dir(dir: impl AsRef<Path>) -> Result<Vec<TimeSeriesRecord>> {
    let dir = dir.as_ref();
    let meta = SimMetadata::load(dir.join(METADATA_FILE))?;
    meta.entries()
        .iter()
        .map(|(id, _)| load_csv(dir.join(format!("{id}.csv")), &meta))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> SimMetadata {
        SimMetadata::parse("s1,0.4-0.6-0.8\ns2,0-0-0\n", Path::new("meta")).unwrap()
    }

    fn parse(text: &str) -> Result<TimeSeriesRecord> {
        parse_csv(text.as_bytes(), Path::new("s1.csv"), "s1".into(), meta().get("s1").unwrap())
    }

    #[test]
    fn parses_small_file() {
        let r = parse("a,b\n1,2\n3,4.5\n-1e-3,0\n").unwrap();
        assert_eq!((r.steps(), r.n_features()), (3, 2));
        assert_eq!(r.column("b").unwrap(), vec![2.0, 4.5, 0.0]);
        assert_eq!(r.config, IceConfig::new(0.4, 0.6, 0.8).unwrap());
        assert_eq!(meta().get("s2").unwrap().label(), crate::dataset::IceLabel::Normal);
    }

    #[test]
    fn reports_locations() {
        match parse("a,b\n1,2\n3,x\n") {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        match parse("a,b\n1,2\n3\n") {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("a,b\n1,NaN\n"), Err(Error::Parse { row: 2, column: 2, .. })));
    }

    #[test]
    fn missing_metadata_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("unknown.csv");
        fs::write(&p, "a\n1\n").unwrap();
        assert!(matches!(load_csv(&p, &meta()), Err(Error::Data(_))));
        assert!(SimMetadata::parse("s1;0-0-0\n", Path::new("m")).is_err());
    }

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let values = Matrix::from_rows(&[[0.1, -2.5], [3.0, 1e-7]]).unwrap();
        let r = TimeSeriesRecord::new("s1", IceConfig::single_zone(2, 0.6).unwrap(), vec!["a".into(), "b".into()], values).unwrap();
        write_dataset_dir(std::slice::from_ref(&r), dir.path()).unwrap();
        let back = load_dataset_dir(dir.path()).unwrap();
        assert_eq!(back, vec![r]);
    }
}
