//! Run manifests: every mutating command records its resolved config, input
//! hashes, and output hash in a sidecar file, so a CI bot can detect stale
//! intermediate artifacts and rebuild exactly what a change affects.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

/// Provenance record written next to every produced artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved configuration, flag defaults included.
    pub config: serde_json::Value,
    /// Input path -> SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub registry_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub started_at: String,
    pub duration_ms: u64,
    pub output: String,
    pub output_hash: String,
}

impl RunManifest {
    /// Sidecar path for a target file: `<target>.manifest.json`.
    pub fn manifest_path(target: &Path) -> PathBuf {
        let mut name = target
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        name.push(".manifest.json");
        target.with_file_name(name)
    }

    pub fn save_beside(&self, target: &Path) -> Result<()> {
        let path = RunManifest::manifest_path(target);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Load the manifest sitting next to a file, if any.
    pub fn load_beside(target: &Path) -> Result<Option<RunManifest>> {
        let path = RunManifest::manifest_path(target);
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let manifest = serde_json::from_str(&text)
            .map_err(|e| Error::parse(&path, None, e.to_string()))?;
        Ok(Some(manifest))
    }

    /// Find a recorded input hash by file name.
    pub fn input_hash_for(&self, path: &Path) -> Option<&str> {
        let name = path.file_name()?.to_string_lossy();
        self.inputs
            .iter()
            .find(|(recorded, _)| {
                Path::new(recorded)
                    .file_name()
                    .map(|n| n.to_string_lossy() == name)
                    .unwrap_or(false)
            })
            .map(|(_, hash)| hash.as_str())
    }
}

/// Stale-input check: if `path` has a manifest beside it, its current bytes
/// must still match the output hash recorded there.
pub fn verify_fresh(path: &Path) -> Result<()> {
    if let Some(manifest) = RunManifest::load_beside(path)? {
        if sha256_file(path)? != manifest.output_hash {
            return Err(Error::StaleInput { path: path.into() });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest_for(output: &Path, hash: String) -> RunManifest {
        RunManifest {
            tool: "replabel".into(),
            version: "0.0.0".into(),
            command: "apply".into(),
            config: serde_json::json!({}),
            inputs: BTreeMap::new(),
            registry_hash: None,
            dataset_name: None,
            seed: Some(42),
            started_at: "2000-01-01T00:00:00Z".into(),
            duration_ms: 1,
            output: output.display().to_string(),
            output_hash: hash,
        }
    }

    #[test]
    fn sidecar_path_appends_suffix() {
        assert_eq!(
            RunManifest::manifest_path(Path::new("out/matrix.csv")),
            PathBuf::from("out/matrix.csv.manifest.json")
        );
    }

    #[test]
    fn fresh_and_stale_detection() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("artifact.csv");
        std::fs::write(&target, "data").unwrap();
        let manifest = manifest_for(&target, sha256_file(&target).unwrap());
        manifest.save_beside(&target).unwrap();
        verify_fresh(&target).unwrap();

        std::fs::write(&target, "tampered").unwrap();
        assert!(matches!(
            verify_fresh(&target),
            Err(Error::StaleInput { .. })
        ));
    }

    #[test]
    fn missing_manifest_is_fine() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("hand_made.csv");
        std::fs::write(&target, "data").unwrap();
        verify_fresh(&target).unwrap();
    }

    #[test]
    fn input_lookup_by_file_name() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("model.json");
        std::fs::write(&target, "{}").unwrap();
        let mut manifest = manifest_for(&target, sha256_file(&target).unwrap());
        manifest
            .inputs
            .insert("some/dir/matrix.csv".into(), "abc123".into());
        assert_eq!(
            manifest.input_hash_for(Path::new("other/matrix.csv")),
            Some("abc123")
        );
        assert_eq!(manifest.input_hash_for(Path::new("nope.csv")), None);
    }
}
