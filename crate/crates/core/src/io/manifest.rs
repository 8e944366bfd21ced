//! Output directories and the manifest written into each of them.

use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::io::{write_file, IoError};

/// Format tag carried by every emitted summary and manifest.
pub const FORMAT_VERSION: &str = "terrasim-output/1";

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Run,
    Sweep,
    Calibrate,
    Compare,
    EmitPlotData,
    Reference,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Sweep => "sweep",
            Command::Calibrate => "calibrate",
            Command::Compare => "compare",
            Command::EmitPlotData => "emit-plot-data",
            Command::Reference => "reference",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Process exit status of the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExitStatus {
    Success = 0,
    Validation = 1,
    ComparisonFailed = 2,
    Divergence = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub command: Command,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub format_version: &'static str,
    /// Files written so far, relative to `out_dir`.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(command: Command, config_path: Option<PathBuf>, out_dir: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            config_path,
            command,
            out_dir: out_dir.into(),
            seed,
            format_version: FORMAT_VERSION,
            files: Vec::new(),
        }
    }

    /// Creates the output directory. An existing non-empty directory is
    /// only reused when `force` is set.
    pub fn prepare(&self, force: bool) -> Result<(), IoError> {
        prepare_out_dir(&self.out_dir, force)
    }

    /// Writes `contents` to `name` inside the output directory.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, IoError> {
        let path = self.out_dir.join(name);
        write_file(&path, contents)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(path)
    }

    pub fn to_json(&self) -> String {
        let doc = json!({
            "format": self.format_version,
            "command": self.command.name(),
            "config": self.config_path.as_ref().map(|p| p.display().to_string()),
            "out_dir": self.out_dir.display().to_string(),
            "seed": self.seed,
            "files": self.files,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("manifest serializes");
        text.push('\n');
        text
    }

    /// Writes the manifest itself.
    pub fn finish(&mut self) -> Result<PathBuf, IoError> {
        let text = self.to_json();
        let path = self.out_dir.join(MANIFEST_FILE);
        write_file(&path, &text)?;
        Ok(path)
    }
}

pub fn prepare_out_dir(path: &Path, force: bool) -> Result<(), IoError> {
    if path.exists() {
        if !path.is_dir() {
            return Err(IoError::NotADirectory {
                path: path.to_path_buf(),
            });
        }
        let mut entries = std::fs::read_dir(path).map_err(IoError::file(path))?;
        if entries.next().is_some() && !force {
            return Err(IoError::WouldOverwrite(path.to_path_buf()));
        }
        return Ok(());
    }
    std::fs::create_dir_all(path).map_err(IoError::file(path))
}
