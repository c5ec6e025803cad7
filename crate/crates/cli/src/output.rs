//! File output: atomic writes and the fixed numeric format.
//!
//! Every artifact is written to a temporary file in the destination
//! directory and renamed into place, so a crash or concurrent reader never
//! sees a half-written file. Numbers are printed with 17 significant digits
//! in scientific notation — enough to reproduce the exact double — so runs
//! can be diffed bit-for-bit across languages.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Render one double with 17 significant digits (1 before the point,
/// 16 after), round-trippable to the identical bit pattern.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `contents` to `dir/name` atomically (temp file + rename).
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::runtime(format!("cannot create temp file in {}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(&path)
        .map_err(|e| CliError::runtime(format!("cannot finalize {}: {e}", path.display())))?;
    Ok(path)
}

/// Assemble a CSV document: a header row and then rows of doubles in the
/// fixed 17-digit format.
pub struct CsvDoc {
    buffer: String,
    columns: usize,
}

impl CsvDoc {
    pub fn new(header: &[&str]) -> Self {
        CsvDoc {
            buffer: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(
            values.len(),
            self.columns,
            "CSV row width must match the header"
        );
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.buffer.push(',');
            }
            let _ = write!(self.buffer, "{v:.16e}");
        }
        self.buffer.push('\n');
    }

    pub fn finish(self) -> String {
        self.buffer
    }
}

/// Serialize a JSON value with a trailing newline (convention for all
/// metadata and report files).
pub fn json_doc(value: &serde_json::Value) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::runtime(format!("JSON serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}
