//! Report bundle layout, file helpers and the run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{CliError, Stage};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, InputDigest>,
    /// Per-stage cardinalities.
    pub stages: BTreeMap<String, serde_json::Value>,
    /// Bundle-relative path -> SHA-256 of every stage output.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    fn new(config_sha256: String) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            tool: "sdgscope".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256,
            inputs: BTreeMap::new(),
            stages: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }
}

/// An input file consumed by a stage, recorded in the manifest.
#[derive(Debug, Clone)]
pub struct InputFile {
    pub role: &'static str,
    /// Path as configured.
    pub shown: String,
    pub path: PathBuf,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut BufReader::new(File::open(path)?), &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone)]
pub struct Bundle {
    root: PathBuf,
}

impl Bundle {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Bundle { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.dir())
    }

    pub fn path(&self, stage: Stage, name: &str) -> PathBuf {
        self.dir(stage).join(name)
    }

    /// Empties (or creates) the stage's directory.
    pub fn reset(&self, stage: Stage) -> Result<(), CliError> {
        let dir = self.dir(stage);
        let io_err = |e: io::Error| CliError::stage(stage, format!("{}: {e}", dir.display()));
        if stage != Stage::Report && dir.exists() {
            fs::remove_dir_all(&dir).map_err(io_err)?;
        }
        fs::create_dir_all(&dir).map_err(io_err)
    }

    pub fn write_with<F>(&self, stage: Stage, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let path = self.path(stage, name);
        let result = File::create(&path).and_then(|file| {
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()
        });
        result.map_err(|e| CliError::stage(stage, format!("writing {}: {e}", path.display())))
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&self, stage: Stage, name: &str, value: &T) -> Result<(), CliError> {
        self.write_with(stage, name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    /// Opens an upstream artifact; a missing file names the producing stage.
    pub fn open(&self, reader: Stage, owner: Stage, name: &str) -> Result<BufReader<File>, CliError> {
        let path = self.path(owner, name);
        match File::open(&path) {
            Ok(f) => Ok(BufReader::new(f)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(CliError::missing_upstream(reader, owner)),
            Err(e) => Err(CliError::stage(reader, format!("{}: {e}", path.display()))),
        }
    }

    pub fn read_manifest(&self) -> Option<Manifest> {
        let text = fs::read_to_string(self.root.join(MANIFEST)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Files written by `stage`, as sorted bundle-relative paths.
    pub fn stage_files(&self, stage: Stage) -> io::Result<Vec<String>> {
        if stage == Stage::Report {
            return Ok(vec![crate::report::REPORT.to_owned()]);
        }
        let mut names = Vec::new();
        let dir = self.dir(stage);
        if dir.exists() {
            for entry in fs::read_dir(&dir)? {
                let entry = entry?;
                if entry.file_type()?.is_file() {
                    names.push(format!("{}/{}", stage.dir(), entry.file_name().to_string_lossy()));
                }
            }
        }
        names.sort();
        Ok(names)
    }

    /// Updates the manifest after a successful stage.
    pub fn record(
        &self,
        stage: Stage,
        config: &PipelineConfig,
        summary: serde_json::Value,
        inputs: &[InputFile],
    ) -> Result<(), CliError> {
        let digest = config.digest();
        let mut manifest = match self.read_manifest() {
            Some(m) => Manifest {
                config_sha256: digest,
                ..m
            },
            None => Manifest::new(digest),
        };
        let io_err = |e: io::Error| CliError::stage(stage, format!("manifest: {e}"));
        for input in inputs {
            manifest.inputs.insert(
                input.role.to_owned(),
                InputDigest {
                    path: input.shown.clone(),
                    sha256: sha256_file(&input.path).map_err(io_err)?,
                },
            );
        }
        manifest.stages.insert(stage.as_str().to_owned(), summary);
        let prefix = format!("{}/", stage.dir());
        if stage != Stage::Report {
            manifest.outputs.retain(|k, _| !k.starts_with(&prefix));
        }
        for rel in self.stage_files(stage).map_err(io_err)? {
            let sha = sha256_file(&self.root.join(&rel)).map_err(io_err)?;
            manifest.outputs.insert(rel, sha);
        }
        let path = self.root.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(e.into()))?;
        fs::write(&path, text + "\n").map_err(io_err)
    }
}
