//! Output directory bookkeeping: data files, resolved config and manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Create `name`, hand a buffered writer to `body`, record the file.
    pub fn write<F>(&mut self, name: &str, seed: Option<u64>, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.files.push(FileEntry {
            name: name.to_owned(),
            seed,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, None, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Write `config.json` and `manifest.json`; returns every file name.
    pub fn finish(mut self, cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
        self.write_json("config.json", cfg)?;
        let manifest = json!({
            "manifest_version": MANIFEST_VERSION,
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "experiment": cfg.experiment,
            "seed": cfg.seed,
            "config": cfg,
            "files": self.files,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        let mut names: Vec<String> = self.files.into_iter().map(|f| f.name).collect();
        names.push("manifest.json".into());
        Ok(names)
    }
}
