//! Field snapshot formats.
//!
//! Binary layout (little endian):
//!
//! ```text
//! offset  size  content
//! 0       4     magic "TORF"
//! 4       1     format version (1)
//! 5       1     dimension d
//! 6       2     components per cell (u16)
//! 8       8     cells per axis n (u64)
//! 16      8     period (f64)
//! 24      ...   n^d * components f64 values, cells row-major (x fastest),
//!               components innermost
//! ```
//!
//! CSV layout: a header row `d,n,period,components`, one row with those
//! values, then one row per cell (same order as the binary layout) holding
//! the component values.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{Field, GridSpec, Quantity, Trajectory};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TORF";
const VERSION: u8 = 1;

pub fn write_field_binary(field: &Field, mut out: impl Write) -> Result<()> {
    let grid = field.grid();
    let mut header = Vec::with_capacity(24);
    header.extend_from_slice(MAGIC);
    header.push(VERSION);
    header.push(grid.dim() as u8);
    header.extend_from_slice(&(field.components() as u16).to_le_bytes());
    header.extend_from_slice(&(grid.cells() as u64).to_le_bytes());
    header.extend_from_slice(&grid.period().to_le_bytes());
    out.write_all(&header)?;
    let mut body = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        body.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&body)?;
    Ok(())
}

pub fn read_field_binary(mut input: impl Read) -> Result<Field> {
    let mut header = [0u8; 24];
    input.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    if header[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", header[4])));
    }
    let dim = header[5] as usize;
    let components = u16::from_le_bytes([header[6], header[7]]) as usize;
    let cells = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let period = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let grid = GridSpec::new(dim, cells, period)?;
    let count = grid.cell_count() * components;
    let mut body = vec![0u8; count * 8];
    input.read_exact(&mut body)?;
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after field data".into()));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Field::from_values(grid, components, values)
}

pub fn write_field_csv(field: &Field, out: impl Write) -> Result<()> {
    let grid = field.grid();
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["d", "n", "period", "components"])?;
    w.write_record([
        grid.dim().to_string(),
        grid.cells().to_string(),
        grid.period().to_string(),
        field.components().to_string(),
    ])?;
    for cell in field.values().chunks(field.components()) {
        w.write_record(cell.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_csv(input: impl Read) -> Result<Field> {
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(input);
    let mut records = r.records();
    let meta = records
        .next()
        .ok_or_else(|| Error::Format("missing grid row".into()))??;
    let parse = |i: usize| -> Result<&str> {
        meta.get(i)
            .ok_or_else(|| Error::Format("short grid row".into()))
    };
    let bad = |e: String| Error::Format(e);
    let dim: usize = parse(0)?.trim().parse().map_err(|e| bad(format!("{e}")))?;
    let cells: usize = parse(1)?.trim().parse().map_err(|e| bad(format!("{e}")))?;
    let period: f64 = parse(2)?.trim().parse().map_err(|e| bad(format!("{e}")))?;
    let components: usize = parse(3)?.trim().parse().map_err(|e| bad(format!("{e}")))?;
    let grid = GridSpec::new(dim, cells, period)?;
    let mut values = Vec::with_capacity(grid.cell_count() * components);
    for rec in records {
        let rec = rec?;
        if rec.len() != components {
            return Err(Error::Format(format!(
                "expected {components} values per row, got {}",
                rec.len()
            )));
        }
        for v in rec.iter() {
            values.push(v.trim().parse::<f64>().map_err(|e| bad(format!("{e}")))?);
        }
    }
    Field::from_values(grid, components, values)
}

/// Writes a trajectory checkpoint directory: `times.csv` plus one binary
/// density and momentum snapshot per time level.
pub fn write_trajectory(dir: &Path, trajectory: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("times.csv"))?;
    w.write_record(["level", "time"])?;
    for (level, state) in trajectory.states().iter().enumerate() {
        w.write_record([level.to_string(), state.time().to_string()])?;
        for q in [Quantity::Density, Quantity::Momentum] {
            let file = fs::File::create(dir.join(format!("{}_{level:05}.bin", q.name())))?;
            write_field_binary(&state.quantity(q), std::io::BufWriter::new(file))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Field {
        let g = GridSpec::new(2, 4, 2.5).unwrap();
        Field::from_fn(g, 2, |x, v| {
            v[0] = x[0].sin() / 3.0;
            v[1] = -x[1] * 1e-7;
        })
    }

    #[test]
    fn binary_layout_header() {
        let mut buf = Vec::new();
        write_field_binary(&sample(), &mut buf).unwrap();
        assert_eq!(&buf[0..4], b"TORF");
        assert_eq!(buf[5], 2);
        assert_eq!(u16::from_le_bytes([buf[6], buf[7]]), 2);
        assert_eq!(buf.len(), 24 + 16 * 2 * 8);
        assert_eq!(read_field_binary(&buf[..]).unwrap(), sample());
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_field_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("d,n,period,components\n2,4,2.5,2\n"));
        assert_eq!(read_field_csv(&buf[..]).unwrap(), sample());
    }

    #[test]
    fn truncated_binary_rejected() {
        let mut buf = Vec::new();
        write_field_binary(&sample(), &mut buf).unwrap();
        buf.pop();
        assert!(read_field_binary(&buf[..]).is_err());
        buf[0] = b'X';
        assert!(read_field_binary(&buf[..]).is_err());
    }
}
