//! File formats: headerless numeric CSV for matrices and vectors, and a
//! little-endian binary container for large matrices:
//!
//! ```text
//! b"GSMMAT01" | rows: u64 | cols: u64 | rows·cols f64, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{invalid, GsmError, Result};

pub const MAGIC: &[u8; 8] = b"GSMMAT01";

fn parse_records<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| invalid(format!("not a number: {f:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let rows = parse_records(File::open(path)?)?;
    let n = rows.len();
    let d = rows.first().map_or(0, |r| r.len());
    if n == 0 || d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(invalid(format!("{}: expected a nonempty rectangular table", path.display())));
    }
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

pub fn write_matrix_csv(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..a.nrows() {
        w.write_record(a.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_bin(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(invalid(format!("{}: not a GSMMAT01 file", path.display())));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let d = u64::from_le_bytes(word) as usize;
    if n == 0 || d == 0 {
        return Err(invalid("binary matrix has a zero dimension"));
    }
    let mut data = vec![0.0; n.checked_mul(d).ok_or_else(|| invalid("matrix too large"))?];
    for v in data.iter_mut() {
        r.read_exact(&mut word)?;
        *v = f64::from_le_bytes(word);
    }
    if r.read(&mut word)? != 0 {
        return Err(invalid("trailing bytes after matrix data"));
    }
    Ok(DMatrix::from_row_slice(n, d, &data))
}

pub fn write_matrix_bin(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(a.nrows() as u64).to_le_bytes())?;
    w.write_all(&(a.ncols() as u64).to_le_bytes())?;
    for i in 0..a.nrows() {
        for v in a.row(i).iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Binary if the file starts with the magic bytes, CSV otherwise.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut head = [0u8; 8];
    let is_bin = {
        let mut f = File::open(path)?;
        f.read(&mut head)? == 8 && &head == MAGIC
    };
    if is_bin {
        read_matrix_bin(path)
    } else {
        read_matrix_csv(path)
    }
}

/// All numbers in the file, in reading order (one per line or one row).
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let v: Vec<f64> = parse_records(File::open(path)?)?.into_iter().flatten().collect();
    if v.is_empty() {
        return Err(invalid(format!("{}: no values", path.display())));
    }
    Ok(v)
}

/// One value per line.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v {
        writeln!(w, "{x}")?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes `rows` as a CSV table with a header line.
pub fn write_rows<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(GsmError::from)).collect()
}
