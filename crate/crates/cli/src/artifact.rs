//! Run manifests, input digests and atomic artifact writes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rankforge::ranking::FeatureConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::settings::Settings;

pub const SIDECAR_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance for one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub settings: Settings,
    /// Feature configuration the artifact was built under, when one applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_config: Option<FeatureConfig>,
    /// Keyed by role, e.g. `performance:xlmr`.
    pub inputs: BTreeMap<String, InputDigest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub artifact: String,
    pub artifact_sha256: String,
    pub manifest: RunManifest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.as_os_str().to_owned();
    name.push(SIDECAR_SUFFIX);
    PathBuf::from(name)
}

impl RunManifest {
    pub fn new(command: &str, settings: &Settings) -> Self {
        RunManifest {
            tool: "rankforge".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: settings.seed,
            settings: settings.clone(),
            feature_config: None,
            inputs: BTreeMap::new(),
        }
    }

    /// Reads an input file, records its digest under `role`, and checks it
    /// against a sidecar manifest when one sits next to it.
    pub fn read_input(&mut self, role: &str, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let sha256 = sha256_hex(&bytes);
        if let Some(sidecar) = read_sidecar(path)? {
            if sidecar.artifact_sha256 != sha256 {
                return Err(CliError::Input(format!(
                    "{}: content does not match the digest in {}",
                    path.display(),
                    sidecar_path(path).display()
                )));
            }
        }
        self.inputs.insert(role.to_string(), InputDigest { path: path.display().to_string(), sha256 });
        Ok(bytes)
    }
}

pub fn read_sidecar(artifact: &Path) -> CliResult<Option<Sidecar>> {
    let path = sidecar_path(artifact);
    match std::fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(|source| CliError::Json { path, source }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::io(path, e)),
    }
}

/// Writes `bytes` to `path` through a temp file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Writes an artifact and its `.manifest.json` sidecar.
pub fn write_artifact(path: &Path, bytes: &[u8], manifest: &RunManifest) -> CliResult<()> {
    write_atomic(path, bytes)?;
    let sidecar = Sidecar {
        artifact: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        artifact_sha256: sha256_hex(bytes),
        manifest: manifest.clone(),
    };
    let mut text = serde_json::to_string_pretty(&sidecar).expect("manifest serializes");
    text.push('\n');
    write_atomic(&sidecar_path(path), text.as_bytes())
}
