//! Binary 8-bit grayscale PGM (`P5`).

use crate::error::{Error, Result};
use crate::field::Raster;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skips whitespace and `#` comments (which run to the end of the line).
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' && self.bytes[self.pos] != b'\r' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, format!("expected {what}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse::<usize>()
            .map_err(|_| Error::parse(start, format!("{what} out of range")))
    }
}

/// Parses a `P5` image into intensities `value / maxval` in `[0, 1]`.
pub fn read_raster_pgm(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::parse(0, "missing P5 magic"));
    }
    let mut cur = Cursor { bytes, pos: 2 };
    if cur.pos < bytes.len() && !(bytes[cur.pos].is_ascii_whitespace() || bytes[cur.pos] == b'#') {
        return Err(Error::parse(cur.pos, "expected whitespace after magic"));
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    cur.skip_separators();
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(maxval_at, "image dimensions must be positive"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse(maxval_at, format!("maxval {maxval} unsupported (1..=255)")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(Error::parse(cur.pos, "expected a single whitespace byte before pixel data"));
    }
    let start = cur.pos + 1;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse(maxval_at, "image too large"))?;
    let available = bytes.len() - start;
    if available < n {
        return Err(Error::parse(
            bytes.len(),
            format!("truncated payload: expected {n} bytes, found {available}"),
        ));
    }
    let scale = maxval as f64;
    let mut pixels = Vec::with_capacity(n);
    for (i, &b) in bytes[start..start + n].iter().enumerate() {
        if b as usize > maxval {
            return Err(Error::parse(start + i, "pixel exceeds maxval"));
        }
        pixels.push(b as f64 / scale);
    }
    Raster::new(width, height, pixels)
}

/// Writes a `P5` image with maxval 255; intensities are clamped and rounded.
pub fn write_raster_pgm(raster: &Raster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", raster.width, raster.height).into_bytes();
    out.extend(
        raster
            .pixels
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_small_image() {
        let bytes = b"P5 2 2 255\n\x00\xff\x80\x40";
        let r = read_raster_pgm(bytes).unwrap();
        assert_eq!((r.width, r.height), (2, 2));
        assert_eq!(r.pixels[0], 0.0);
        assert_eq!(r.pixels[1], 1.0);
        assert!((r.pixels[2] - 0.502).abs() < 1e-3);
        assert!((r.pixels[3] - 0.251).abs() < 1e-3);
    }

    #[test]
    fn reads_full_size_image() {
        let mut bytes = b"P5 128 128 255\n".to_vec();
        bytes.extend(std::iter::repeat(7u8).take(128 * 128));
        let r = read_raster_pgm(&bytes).unwrap();
        assert_eq!((r.width, r.height, r.pixels.len()), (128, 128, 16384));
    }

    #[test]
    fn comments_between_tokens() {
        let bytes = b"P5\n# made by hand\n2 # width then height\n1\n#max\n255\n\x0a\x14";
        let r = read_raster_pgm(bytes).unwrap();
        assert_eq!((r.width, r.height), (2, 1));
        assert_eq!(r.pixels, vec![10.0 / 255.0, 20.0 / 255.0]);
    }

    #[test]
    fn errors_carry_offsets() {
        match read_raster_pgm(b"P6 1 1 255\n\x00") {
            Err(Error::Parse { offset: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
        match read_raster_pgm(b"P5 2 x") {
            Err(Error::Parse { offset: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
        match read_raster_pgm(b"P5 2 2 255\n\x00\x01") {
            Err(Error::Parse { offset: 13, message }) => assert!(message.contains("truncated")),
            other => panic!("{other:?}"),
        }
        assert!(read_raster_pgm(b"P5 1 1 65535\n\x00\x00").is_err());
    }

    #[test]
    fn write_read_round_trip() {
        let bytes = b"P5\n3 1\n255\n\x00\x7f\xff".to_vec();
        let r = read_raster_pgm(&bytes).unwrap();
        assert_eq!(write_raster_pgm(&r), bytes);
    }
}
