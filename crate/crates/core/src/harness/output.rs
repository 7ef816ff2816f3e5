use std::path::Path;

use super::sweep::ConvergenceRecord;
use crate::error::{Error, Result};

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `gamma,lambda2,expansion,reference,abs_error,stderr,bound`, rows
/// ordered by decreasing `gamma`.
pub fn emit_csv(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    let mut sorted: Vec<&ConvergenceRecord> = records.iter().collect();
    sorted.sort_by(|a, b| b.gamma.total_cmp(&a.gamma));
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(["gamma", "lambda2", "expansion", "reference", "abs_error", "stderr", "bound"])
        .map_err(|e| csv_err(path, e))?;
    for r in sorted {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<ConvergenceRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}
