//! Binary field dumps.
//!
//! Layout, all little-endian: the magic bytes `PDF1`, then `nx` and `ny` as
//! `u64`, then `kappa`, `origin.x`, `origin.y`, `extent.x`, `extent.y` as
//! `f64`, then `2 * nx * ny` values `(u_x, u_y)` per cell in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::error_metrics::PiecewiseConstantField;
use crate::geometry::Vec2;
use crate::lattice::BoxDomain;

pub const MAGIC: &[u8; 4] = b"PDF1";

pub fn write_field(out: &mut impl Write, field: &PiecewiseConstantField) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(field.nx as u64).to_le_bytes())?;
    out.write_all(&(field.ny as u64).to_le_bytes())?;
    let d = &field.domain;
    for v in [field.kappa, d.origin.x, d.origin.y, d.extent.x, d.extent.y] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in &field.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field(input: &mut impl Read) -> Result<PiecewiseConstantField> {
    let bad = |what: &str| Error::FieldFormat(what.to_string());
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("missing PDF1 magic"));
    }
    let mut b8 = [0u8; 8];
    let mut next = |input: &mut dyn Read| -> Result<[u8; 8]> {
        input
            .read_exact(&mut b8)
            .map_err(|_| bad("truncated file"))?;
        Ok(b8)
    };
    let nx = u64::from_le_bytes(next(input)?) as usize;
    let ny = u64::from_le_bytes(next(input)?) as usize;
    let mut head = [0.0; 5];
    for h in &mut head {
        *h = f64::from_le_bytes(next(input)?);
    }
    let [kappa, ox, oy, ex, ey] = head;
    let domain =
        BoxDomain::new(Vec2::new(ox, oy), Vec2::new(ex, ey)).map_err(|e| bad(&e.to_string()))?;
    let counts = domain.cell_counts(kappa).map_err(|e| bad(&e.to_string()))?;
    if counts != (nx, ny) {
        return Err(bad("cell counts disagree with kappa and extent"));
    }
    let mut values = Vec::with_capacity(2 * nx * ny);
    for _ in 0..2 * nx * ny {
        values.push(f64::from_le_bytes(next(input)?));
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest).map_err(|_| bad("read failure"))? != 0 {
        return Err(bad("trailing bytes"));
    }
    Ok(PiecewiseConstantField {
        domain,
        kappa,
        nx,
        ny,
        values,
    })
}

pub fn write_field_file(path: &Path, field: &PiecewiseConstantField) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_field(&mut w, field)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_field_file(path: &Path) -> Result<PiecewiseConstantField> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_field(&mut std::io::BufReader::new(file))
}
