//! Output files: a `# seed=...` header line, then CSV or JSON. Every file is
//! written to a temporary file in the target directory and renamed into
//! place, so a declared path is either absent or complete.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliResult;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn header(seed: u64, command: &str) -> String {
    format!("# seed={seed} command={command}\n")
}

/// CSV body collected in memory, prefixed by the header line.
pub struct CsvOutput {
    writer: csv::Writer<Vec<u8>>,
    header: String,
}

impl CsvOutput {
    pub fn new(seed: u64, command: &str, columns: &[&str]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(columns)?;
        Ok(Self {
            writer,
            header: header(seed, command),
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn into_bytes(self) -> CliResult<Vec<u8>> {
        let body = self.writer.into_inner().map_err(|e| e.into_error())?;
        let mut out = self.header.into_bytes();
        out.extend(body);
        Ok(out)
    }
}

/// JSON documents carry the seed and command as top-level fields.
#[derive(Serialize)]
pub struct JsonEnvelope<'a, T: Serialize> {
    pub schema: u32,
    pub seed: u64,
    pub command: &'a str,
    #[serde(flatten)]
    pub body: T,
}

pub fn json_bytes<T: Serialize>(seed: u64, command: &str, body: T) -> CliResult<Vec<u8>> {
    let env = JsonEnvelope {
        schema: crate::config::SCHEMA_VERSION,
        seed,
        command,
        body,
    };
    let mut out = serde_json::to_vec_pretty(&env)?;
    out.push(b'\n');
    Ok(out)
}

/// A file produced by a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: PathBuf,
}

/// Collects the files of one run and writes them all at the end.
pub struct Artifacts {
    dir: PathBuf,
    pending: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            pending: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.pending.push((self.dir.join(name), bytes));
    }

    pub fn commit(self) -> CliResult<Vec<Artifact>> {
        let mut written = Vec::with_capacity(self.pending.len());
        for (path, bytes) in self.pending {
            write_atomic(&path, &bytes)?;
            written.push(Artifact { path });
        }
        Ok(written)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}
