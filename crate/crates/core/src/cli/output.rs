use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// `git describe`-style version, overridable at build time.
pub const VERSION: &str = match option_env!("LANGSTEP_DESCRIBE") {
    Some(v) => v,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

/// Record of a run: enough to reproduce every output byte for byte,
/// plus the wall time.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub summary: Value,
}

impl Manifest {
    pub fn new(command: &str, config: Value, seed: u64, wall_time_s: f64, outputs: Vec<String>, summary: Value) -> Self {
        Manifest { tool: "langstep", version: VERSION, command: command.into(), config, seed, wall_time_s, outputs, summary }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn manifest_path(out: &Path) -> PathBuf {
    with_suffix(out, ".manifest.json")
}

/// The results file, its sidecars and the manifest, checked up front so
/// nothing is simulated when the outputs cannot be written.
#[derive(Debug)]
pub struct OutputSet {
    files: Vec<PathBuf>,
    manifest: PathBuf,
}

impl OutputSet {
    pub fn prepare(out: &Path, sidecars: &[&str], force: bool) -> Result<Self> {
        let mut files = vec![out.to_path_buf()];
        files.extend(sidecars.iter().map(|s| with_suffix(out, s)));
        let manifest = manifest_path(out);
        let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("output directory {} does not exist", parent.display()),
            )));
        }
        if !force {
            if let Some(p) = files.iter().chain([&manifest]).find(|p| p.exists()) {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::AlreadyExists,
                    format!("{} exists; pass --force to overwrite", p.display()),
                )));
            }
        }
        Ok(OutputSet { files, manifest })
    }

    pub fn paths(&self) -> Vec<String> {
        self.files.iter().map(|p| p.display().to_string()).collect()
    }

    pub fn create(&self, i: usize) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(&self.files[i])?))
    }

    pub fn write(&self, i: usize, bytes: &[u8]) -> Result<()> {
        let mut w = self.create(i)?;
        w.write_all(bytes)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_manifest(&self, m: &Manifest) -> Result<()> {
        let mut text = serde_json::to_string_pretty(m)?;
        text.push('\n');
        std::fs::write(&self.manifest, text)?;
        Ok(())
    }
}
