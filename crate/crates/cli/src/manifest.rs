//! Run manifest: command, arguments, seed, effective configuration and input
//! digests, written next to every command's outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ecgdnn::dataset::digest_file;
use ecgdnn::error::Result;

pub struct RunManifest {
    pub command: &'static str,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let argv: Vec<String> = std::env::args().collect();
        let mut inputs = Vec::new();
        for path in &self.inputs {
            let digest = if path.is_file() {
                digest_file(path)?
            } else {
                "directory".to_string()
            };
            inputs.push(serde_json::json!({
                "path": path.display().to_string(),
                "fnv64": digest,
            }));
        }
        let manifest = serde_json::json!({
            "command": self.command,
            "argv": argv,
            "seed": self.seed,
            "config": self.config,
            "inputs": inputs,
        });
        std::fs::write(
            out_dir.join("run_manifest.json"),
            serde_json::to_vec_pretty(&manifest)?,
        )?;
        Ok(())
    }
}
