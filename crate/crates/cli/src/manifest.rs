use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use robust_cem::lp::SolverOptions;
use robust_cem::par::Exec;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRef {
    /// Relative to the output root.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Record of one run: inputs, settings, outputs and headline results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config: Option<ConfigRef>,
    pub solver: SolverOptions,
    pub exec: Exec,
    pub outputs: Vec<OutputRef>,
    pub results: BTreeMap<String, serde_json::Value>,
    pub exit_code: i32,
    pub error: Option<String>,
    pub started: String,
    pub finished: String,
    pub wall_seconds: f64,
}

/// Output root plus the manifest under construction.
pub struct Run {
    pub out: PathBuf,
    pub manifest: RunManifest,
    start: std::time::Instant,
}

impl Run {
    pub fn new(out: PathBuf, subcommand: &str, argv: Vec<String>, solver: SolverOptions, exec: Exec) -> Run {
        Run {
            out,
            manifest: RunManifest {
                version: env!("CARGO_PKG_VERSION").to_string(),
                subcommand: subcommand.to_string(),
                argv,
                config: None,
                solver,
                exec,
                outputs: Vec::new(),
                results: BTreeMap::new(),
                exit_code: 0,
                error: None,
                started: chrono::Utc::now().to_rfc3339(),
                finished: String::new(),
                wall_seconds: 0.0,
            },
            start: std::time::Instant::now(),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    /// Write `content` under the output root and list it.
    pub fn write(&mut self, rel: &str, content: &[u8]) -> std::io::Result<PathBuf> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, content)?;
        self.manifest.outputs.retain(|o| o.path != rel);
        self.manifest.outputs.push(OutputRef {
            path: rel.to_string(),
            sha256: sha256_hex(content),
            bytes: content.len(),
        });
        Ok(path)
    }

    pub fn set_config(&mut self, path: &Path, content: &[u8]) {
        self.manifest.config = Some(ConfigRef {
            path: path.display().to_string(),
            sha256: sha256_hex(content),
        });
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("result serializes");
        self.manifest.results.insert(key.to_string(), v);
    }

    pub fn finish(mut self, exit_code: i32, error: Option<String>) -> std::io::Result<RunManifest> {
        self.manifest.exit_code = exit_code;
        self.manifest.error = error;
        self.manifest.finished = chrono::Utc::now().to_rfc3339();
        self.manifest.wall_seconds = self.start.elapsed().as_secs_f64();
        std::fs::create_dir_all(&self.out)?;
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(self.out.join(MANIFEST_FILE), text + "\n")?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn outputs_are_listed_once_with_their_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = Run::new(
            dir.path().to_path_buf(),
            "build",
            vec![],
            SolverOptions::default(),
            Exec::Sequential,
        );
        run.write("a/b.csv", b"x\n").unwrap();
        run.write("a/b.csv", b"y\n").unwrap();
        let m = run.finish(0, None).unwrap();
        assert_eq!(m.outputs.len(), 1);
        assert_eq!(m.outputs[0].sha256, sha256_hex(b"y\n"));
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
