//! Binary checkpoints of spectral fields.
//!
//! Layout (little-endian):
//!   magic  4 bytes  "VNDG"
//!   version u32     currently 1
//!   n       u32     grid resolution per axis
//!   count   u32     number of scalar fields
//! then for each field, n × (n/2 + 1) coefficients in row-major
//! half-spectrum order, each as two f64 (re, im).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{SpectralField, VelocityField};
use crate::grid::GridSpec;

pub const MAGIC: [u8; 4] = *b"VNDG";
pub const VERSION: u32 = 1;

pub fn write_checkpoint(path: &Path, fields: &[&SpectralField]) -> Result<()> {
    let Some(first) = fields.first() else {
        return Err(Error::Format("cannot write a checkpoint with no fields".into()));
    };
    let n = first.grid().n();
    if fields.iter().any(|f| f.grid().n() != n) {
        return Err(Error::GridMismatch("checkpoint fields differ in resolution".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(fields.len() as u32).to_le_bytes())?;
    for field in fields {
        for row in 0..n {
            for col in 0..=n / 2 {
                let c = field.coeffs()[[row, col]];
                w.write_all(&c.re.to_le_bytes())?;
                w.write_all(&c.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Convenience: a velocity field as two scalar fields (x then y).
pub fn write_velocity_checkpoint(path: &Path, v: &VelocityField) -> Result<()> {
    write_checkpoint(path, &[v.x(), v.y()])
}

#[derive(Debug)]
pub struct RawCheckpoint {
    pub n: u32,
    pub fields: Vec<Array2<Complex64>>,
}

pub fn read_checkpoint(path: &Path) -> Result<RawCheckpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected \"VNDG\"",
            magic
        )));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let n = read_u32(&mut r, "grid size")?;
    if n < 8 || n % 2 != 0 {
        return Err(Error::Format(format!("implausible grid size {n}")));
    }
    let count = read_u32(&mut r, "field count")?;
    let rows = n as usize;
    let cols = n as usize / 2 + 1;
    let mut fields = Vec::with_capacity(count as usize);
    let mut buf = [0u8; 16];
    for _ in 0..count {
        let mut arr = Array2::<Complex64>::zeros((rows, cols));
        for row in 0..rows {
            for col in 0..cols {
                read_exact(&mut r, &mut buf, "coefficient data")?;
                let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
                let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
                arr[[row, col]] = Complex64::new(re, im);
            }
        }
        fields.push(arr);
    }
    Ok(RawCheckpoint { n, fields })
}

/// Read and bind to a grid, validating the resolution.
pub fn read_checkpoint_fields(path: &Path, grid: GridSpec) -> Result<Vec<SpectralField>> {
    let raw = read_checkpoint(path)?;
    if raw.n as usize != grid.n() {
        return Err(Error::Format(format!(
            "checkpoint resolution {} does not match grid n = {}",
            raw.n,
            grid.n()
        )));
    }
    raw.fields
        .into_iter()
        .map(|coeffs| SpectralField::from_coeffs(grid, coeffs))
        .collect()
}

pub fn read_velocity_checkpoint(path: &Path, grid: GridSpec) -> Result<VelocityField> {
    let mut fields = read_checkpoint_fields(path, grid)?;
    if fields.len() != 2 {
        return Err(Error::Format(format!(
            "expected 2 fields for a velocity checkpoint, found {}",
            fields.len()
        )));
    }
    let y = fields.pop().expect("two fields");
    let x = fields.pop().expect("two fields");
    VelocityField::from_components(x, y)
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format(format!("truncated file while reading {what}"))
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, what)?;
    Ok(u32::from_le_bytes(buf))
}
