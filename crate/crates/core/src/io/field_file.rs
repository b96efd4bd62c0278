//! Binary field files.
//!
//! Layout (little-endian): `"DFLD"`, `u16` version, `u8` rank, `rank × u32` dims,
//! `rank × f64` origin, `rank × f64` spacing, then `f32` samples, x fastest.

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField};
use crate::scalar::Real;

pub const FIELD_MAGIC: &[u8; 4] = b"DFLD";
pub const FIELD_VERSION: u16 = 1;

pub fn write_field<T: Real>(field: &ScalarField<T>) -> Vec<u8> {
    let grid = field.grid();
    let rank = grid.rank();
    let mut out = Vec::with_capacity(7 + rank * 20 + 4 * field.values().len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.push(rank as u8);
    for &d in grid.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &o in grid.origin() {
        out.extend_from_slice(&o.to_f64_lossy().to_le_bytes());
    }
    for &s in grid.spacing() {
        out.extend_from_slice(&s.to_f64_lossy().to_le_bytes());
    }
    for &v in field.values() {
        out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        if end > self.bytes.len() {
            return Err(Error::parse(self.pos, format!("truncated {what}")));
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.bytes[self.pos..end]);
        self.pos = end;
        Ok(out)
    }
}

pub fn read_field<T: Real>(bytes: &[u8]) -> Result<ScalarField<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>("magic")? != FIELD_MAGIC {
        return Err(Error::parse(0, "missing DFLD magic"));
    }
    let version = u16::from_le_bytes(r.take("version")?);
    if version != FIELD_VERSION {
        return Err(Error::parse(4, format!("unsupported field version {version}")));
    }
    let rank = r.take::<1>("rank")?[0] as usize;
    if rank != 2 && rank != 3 {
        return Err(Error::parse(6, format!("rank must be 2 or 3, got {rank}")));
    }
    let header_at = r.pos;
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(u32::from_le_bytes(r.take("dims")?) as usize);
    }
    let mut origin = Vec::with_capacity(rank);
    for _ in 0..rank {
        origin.push(T::lit(f64::from_le_bytes(r.take("origin")?)));
    }
    let mut spacing = Vec::with_capacity(rank);
    for _ in 0..rank {
        spacing.push(T::lit(f64::from_le_bytes(r.take("spacing")?)));
    }
    let grid = GridSpec::new(&dims, &origin, &spacing).map_err(|e| Error::parse(header_at, e.to_string()))?;
    let n = grid.len();
    let payload = &bytes[r.pos..];
    let expected = n.checked_mul(4).ok_or_else(|| Error::parse(header_at, "grid too large"))?;
    if payload.len() != expected {
        return Err(Error::parse(
            r.pos + payload.len().min(expected),
            format!("payload is {} bytes, expected {expected}", payload.len()),
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| T::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
        .collect();
    ScalarField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScalarField<f64> {
        let grid = GridSpec::new(&[3, 2], &[-0.1, -0.2], &[0.4, 0.7]).unwrap();
        ScalarField::new(grid, vec![0.0, 1.5, -2.25, 1e-3, 7.0, f64::from(f32::MAX)]).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let bytes = write_field(&sample());
        assert_eq!(&bytes[..4], b"DFLD");
        let back: ScalarField<f64> = read_field(&bytes).unwrap();
        assert_eq!(back.grid(), sample().grid());
        assert_eq!(write_field(&back), bytes);
        // f32 in memory keeps the payload exact; the f64 header narrows.
        let back32: ScalarField<f32> = read_field(&bytes).unwrap();
        let again = write_field(&back32);
        assert_eq!(again[again.len() - 24..], bytes[bytes.len() - 24..]);
    }

    #[test]
    fn rejects_damage() {
        let bytes = write_field(&sample());
        assert!(matches!(read_field::<f64>(&bytes[..bytes.len() - 1]), Err(Error::Parse { .. })));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_field::<f64>(&extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_field::<f64>(&bad), Err(Error::Parse { offset: 0, .. })));
        let mut bad_rank = bytes;
        bad_rank[6] = 4;
        assert!(matches!(read_field::<f64>(&bad_rank), Err(Error::Parse { offset: 6, .. })));
    }
}
