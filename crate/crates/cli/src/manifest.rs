//! Run manifests: a config snapshot plus content hashes of a stage's inputs
//! and outputs, written beside each artifact. No timestamps, so unchanged
//! reruns reproduce them byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use rotor_vrae::artifact::{self, Artifact};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    /// Relative to the run's output directory when inside it.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

impl Artifact for Manifest {
    const KIND: &'static str = "run-manifest";
    const VERSION: u32 = 1;
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot hash {}: {e}", path.display())))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn hash_entry(root: &Path, path: &Path) -> CliResult<FileHash> {
    let shown = path.strip_prefix(root).unwrap_or(path);
    Ok(FileHash {
        path: shown.to_string_lossy().replace('\\', "/"),
        sha256: sha256_file(path)?,
    })
}

/// Path of the manifest that accompanies `artifact`.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

/// Hashes everything and writes the manifest next to the first output.
pub fn write_manifest(
    config: &PipelineConfig,
    stage: &str,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> CliResult<PathBuf> {
    let root = &config.out_dir;
    let manifest = Manifest {
        stage: stage.to_string(),
        seed: config.seed,
        config: config.clone(),
        inputs: inputs.iter().map(|p| hash_entry(root, p)).collect::<CliResult<_>>()?,
        outputs: outputs.iter().map(|p| hash_entry(root, p)).collect::<CliResult<_>>()?,
    };
    let path = manifest_path(outputs.first().expect("a stage writes at least one file"));
    artifact::save(&manifest, &path)?;
    Ok(path)
}
