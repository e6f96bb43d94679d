//! CSV emitters. Floats are written in shortest round-trip form, so equal
//! runs give byte-identical files.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
