//! Output-file plumbing: CSV writers whose leading comment lines pin the
//! fully resolved configuration, plus the 17-significant-digit float format
//! used everywhere for golden-file stability.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{CliError, CliResult};

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Output directory: `--out-dir` flag, else `STEIN_OUT_DIR`, else the
/// current directory. Created if missing.
pub fn out_dir(flag: Option<PathBuf>) -> CliResult<PathBuf> {
    let dir = flag
        .or_else(|| std::env::var_os("STEIN_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| {
        CliError::Runtime(format!("cannot create output directory {}: {e}", dir.display()))
    })?;
    Ok(dir)
}

/// A CSV file that begins with `#` comment lines recording the command, the
/// code version, and every resolved config value, followed by the header row.
pub struct CsvFile {
    w: BufWriter<File>,
    path: PathBuf,
    columns: usize,
}

impl CsvFile {
    pub fn create(
        dir: &Path,
        name: &str,
        command: &str,
        resolved: &[(&str, String)],
        header: &[&str],
    ) -> CliResult<Self> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| {
            CliError::Runtime(format!("cannot create {}: {e}", path.display()))
        })?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "# command: {command}")?;
            writeln!(w, "# version: {}", env!("CARGO_PKG_VERSION"))?;
            for (key, value) in resolved {
                writeln!(w, "# {key} = {value}")?;
            }
            writeln!(w, "{}", header.join(","))?;
            Ok(())
        };
        write().map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
        Ok(CsvFile {
            w,
            path,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> CliResult<()> {
        debug_assert_eq!(fields.len(), self.columns, "row width mismatch");
        writeln!(self.w, "{}", fields.join(",")).map_err(|e| {
            CliError::Runtime(format!("write {}: {e}", self.path.display()))
        })
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.w
            .flush()
            .map_err(|e| CliError::Runtime(format!("flush {}: {e}", self.path.display())))?;
        Ok(self.path)
    }
}
