//! Turbine time series: loading, synthesis, scaling, windowing and splitting.

mod ice;
mod preprocess;
mod record;
mod split;
mod synth;
mod windowed;

pub use ice::{IceConfig, IceLabel};
pub use preprocess::{apply_minmax, fit_minmax, select_features, window, windows_from_records, MinMaxScaler};
pub use record::{load_csv, load_dataset_dir, write_csv, write_dataset_dir, SimMetadata, TimeSeriesRecord, METADATA_FILE};
pub use split::{balance, split};
pub use synth::{generate_fleet, synthesize, FleetSpec, SynthConfig, ZoneModulation, BLADE_FEATURES};
pub use windowed::WindowedDataset;
