use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Provenance written next to every output file as `<file>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: BTreeMap<String, String>) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        }
    }
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

/// Where a result goes: a file (with manifest sidecar) or stdout.
pub struct Sink<'a> {
    pub path: Option<&'a Path>,
    pub manifest: &'a RunManifest,
}

impl Sink<'_> {
    fn open(&self) -> io::Result<Box<dyn Write>> {
        Ok(match self.path {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn finish(&self) -> io::Result<()> {
        if let Some(p) = self.path {
            let file = File::create(manifest_path(p))?;
            serde_json::to_writer_pretty(file, self.manifest)?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&self, value: &T) -> io::Result<()> {
        let mut w = self.open()?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        self.finish()
    }

    pub fn csv<T: Serialize>(&self, rows: impl IntoIterator<Item = T>) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(self.open()?);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        self.finish()
    }
}
