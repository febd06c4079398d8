//! File formats: CSV series, CSV field curves, and the PKCR lattice
//! container.
//!
//! PKCR is a little-endian binary layout for one lattice of doubles:
//!
//! ```text
//! magic  [u8; 4] = "PKCR"
//! version u32    = 1
//! dim     u32            (1 or 2)
//! shape   u64 x dim
//! origin  f64 x dim
//! spacing f64 x dim
//! count   u64            (product of shape)
//! values  f64 x count    (axis 1 fastest for dim 2)
//! ```

use crate::error::{CliError, CliResult};
use peakcr_core::grid_field::{Lattice, LatticeSample};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: [u8; 4] = *b"PKCR";
const VERSION: u32 = 1;

fn data_err<E: std::fmt::Display>(path: &Path, err: E) -> CliError {
    CliError::Data(format!("{}: {err}", path.display()))
}

/// Write one lattice sample as a PKCR file.
///
/// # Errors
/// [`CliError::Data`] on any IO failure.
pub fn write_pkcr(path: &Path, sample: &LatticeSample) -> CliResult<()> {
    let lattice = sample.lattice();
    let dim = lattice.dim();
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(dim as u32).to_le_bytes());
    for d in 0..dim {
        buf.extend_from_slice(&(lattice.extent(d) as u64).to_le_bytes());
    }
    for d in 0..dim {
        buf.extend_from_slice(&lattice.coord(d, 0).to_le_bytes());
    }
    for d in 0..dim {
        buf.extend_from_slice(&lattice.spacing(d).to_le_bytes());
    }
    buf.extend_from_slice(&(sample.values().len() as u64).to_le_bytes());
    for v in sample.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| data_err(path, e))?;
    file.write_all(&buf).map_err(|e| data_err(path, e))?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let out = self.bytes.get(self.at..self.at + n)?;
        self.at += n;
        Some(out)
    }

    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }

    fn f64(&mut self) -> Option<f64> {
        Some(f64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}

/// Read one lattice sample from a PKCR file.
///
/// # Errors
/// [`CliError::Data`] when the file is unreadable, truncated, or violates
/// the format.
pub fn read_pkcr(path: &Path) -> CliResult<LatticeSample> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| data_err(path, e))?;
    let mut cur = Cursor { bytes: &bytes, at: 0 };
    let parse = (|| -> Option<Result<LatticeSample, String>> {
        if cur.take(4)? != MAGIC {
            return Some(Err("bad magic, not a PKCR file".into()));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Some(Err(format!("unsupported PKCR version {version}")));
        }
        let dim = cur.u32()? as usize;
        if dim == 0 || dim > 2 {
            return Some(Err(format!("unsupported dimension {dim}")));
        }
        let mut shape = [0usize; 2];
        for s in shape.iter_mut().take(dim) {
            *s = cur.u64()? as usize;
        }
        let mut origin = [0f64; 2];
        for o in origin.iter_mut().take(dim) {
            *o = cur.f64()?;
        }
        let mut spacing = [0f64; 2];
        for sp in spacing.iter_mut().take(dim) {
            *sp = cur.f64()?;
        }
        let count = cur.u64()? as usize;
        if count != shape[..dim].iter().product::<usize>() {
            return Some(Err("value count does not match the shape".into()));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(cur.f64()?);
        }
        if cur.at != bytes.len() {
            return Some(Err("trailing bytes after the payload".into()));
        }
        let lattice = match Lattice::new(&shape[..dim], &origin[..dim], &spacing[..dim]) {
            Ok(l) => l,
            Err(e) => return Some(Err(e.to_string())),
        };
        Some(LatticeSample::new(lattice, values).map_err(|e| e.to_string()))
    })();
    match parse {
        None => Err(data_err(path, "truncated PKCR file")),
        Some(Err(msg)) => Err(data_err(path, msg)),
        Some(Ok(sample)) => Ok(sample),
    }
}

/// Read a numeric series from a CSV file: the last column of each row, with
/// an optional header row.
///
/// # Errors
/// [`CliError::Data`] when the file is unreadable, a non-header row fails to
/// parse, or no values remain.
pub fn read_series_csv(path: &Path) -> CliResult<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, e))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| data_err(path, e))?;
        let Some(field) = record.iter().next_back() else { continue };
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(e) if i == 0 => {
                // tolerate a single header row
                let _ = e;
            }
            Err(e) => return Err(data_err(path, format!("row {}: {e}", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(data_err(path, "no numeric values found"));
    }
    Ok(out)
}

/// Write rows of coordinates plus a value column as CSV with a header.
///
/// # Errors
/// [`CliError::Data`] on any IO failure.
pub fn write_curve_csv(path: &Path, dim: usize, rows: &[(Vec<f64>, f64)]) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| data_err(path, e))?;
    let mut header: Vec<String> = (0..dim).map(|d| format!("s{d}")).collect();
    header.push("value".into());
    writer.write_record(&header).map_err(|e| data_err(path, e))?;
    for (coords, value) in rows {
        // `{:e}` prints the shortest representation that parses back to the
        // same float
        let mut record: Vec<String> = coords.iter().map(|c| format!("{c:e}")).collect();
        record.push(format!("{value:e}"));
        writer.write_record(&record).map_err(|e| data_err(path, e))?;
    }
    writer.flush().map_err(|e| data_err(path, e))?;
    Ok(())
}
