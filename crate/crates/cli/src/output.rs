//! Output bookkeeping: atomic writes, cleanup on failure, and the run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
    warnings: &'a [String],
    duration_seconds: f64,
}

/// Tracks one command's inputs and outputs.
///
/// Outputs written so far are deleted if the run is dropped without
/// [`Run::finish`].
pub struct Run {
    command: &'static str,
    started: Instant,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    written: Vec<PathBuf>,
    pub warnings: Vec<String>,
    finished: bool,
}

impl Run {
    pub fn new(command: &'static str) -> Self {
        Run {
            command,
            started: Instant::now(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            written: Vec::new(),
            warnings: Vec::new(),
            finished: false,
        }
    }

    /// Records the digest of an input file.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.warnings.push(message);
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| CliError::Output(format!("{}: {e}", parent.display())))?;
        }
        // register first so a failed rename still gets cleaned up
        self.written.push(path.to_path_buf());
        write_atomic(path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        self.outputs.insert(path.display().to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Writes the manifest as the last artifact and keeps all outputs.
    pub fn finish(mut self, manifest: &Path, config: &impl Serialize) -> Result<(), CliError> {
        let m = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            inputs: &self.inputs,
            outputs: &self.outputs,
            warnings: &self.warnings,
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        text.push('\n');
        self.write(manifest, text.as_bytes())?;
        self.finished = true;
        Ok(())
    }
}

impl Drop for Run {
    fn drop(&mut self) {
        if !self.finished {
            for p in &self.written {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}

/// `name.ext` → `name.manifest.json`.
pub fn manifest_for(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dropped_run_removes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("sub/a.bin");
        {
            let mut run = Run::new("test");
            run.write(&a, b"abc").unwrap();
            assert!(a.exists());
        }
        assert!(!a.exists());
    }

    #[test]
    fn finished_run_keeps_outputs_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bin");
        let mut run = Run::new("test");
        run.write(&a, b"abc").unwrap();
        run.warn("careful".into());
        run.finish(&manifest_for(&a), &serde_json::json!({"k": 1})).unwrap();
        let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.manifest.json")).unwrap()).unwrap();
        assert_eq!(m["outputs"][a.display().to_string()], sha256_hex(b"abc"));
        assert_eq!(m["warnings"][0], "careful");
        assert_eq!(m["config"]["k"], 1);
        assert!(a.exists());
        let leftovers: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().contains(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
