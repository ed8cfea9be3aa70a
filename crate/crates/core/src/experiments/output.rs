use crate::error::{Error, Result};
use std::fs::File;
use std::path::{Path, PathBuf};

/// First field of the row that ends an aborted table.
pub const ABORT_MARKER: &str = "#aborted";

/// `{:e}` formatting: shortest round-trip digits, locale-free.
pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// CSV table written row by row; every row is flushed so a crash never
/// leaves a half-written record.
pub struct CsvSink {
    writer: csv::Writer<File>,
    width: usize,
    path: PathBuf,
}

impl CsvSink {
    pub fn create(path: &Path, header: &[String]) -> Result<Self> {
        if header.is_empty() {
            return Err(Error::Csv("empty header".into()));
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut writer = csv::Writer::from_writer(File::create(path)?);
        writer.write_record(header)?;
        writer.flush()?;
        Ok(CsvSink { writer, width: header.len(), path: path.to_path_buf() })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        if fields.len() != self.width {
            return Err(Error::Csv(format!("row has {} fields, header has {}", fields.len(), self.width)));
        }
        self.writer.write_record(fields)?;
        self.writer.flush()?;
        Ok(())
    }

    /// Ends the table with a marker row carrying `reason`.
    pub fn abort(mut self, reason: &str) -> Result<PathBuf> {
        let reason = reason.replace(['\n', '\r'], " ");
        let mut rec = vec![String::new(); self.width];
        if self.width > 1 {
            rec[0] = ABORT_MARKER.to_string();
            rec[1] = reason;
        } else {
            rec[0] = format!("{ABORT_MARKER} {reason}");
        }
        self.writer.write_record(&rec)?;
        self.writer.flush()?;
        Ok(self.path)
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

/// Writes a whole table at once.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf> {
    let mut sink = CsvSink::create(path, header)?;
    for r in rows {
        sink.row(r)?;
    }
    sink.finish()
}

pub(crate) fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
