//! Grayscale images and 8-bit PGM (P2/P5) input/output.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A grayscale image stored row-major as `f64` samples.
///
/// Pixel values are nominally in `[0, 255]` when read from a PGM file, but
/// intermediate images (noisy observations, synthesis output) may leave that
/// range; values are clamped only when written back to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.data
    }
}

/// Reads an 8-bit grayscale PGM image (ASCII `P2` or binary `P5`).
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes)
}

/// Writes `image` as a binary (`P5`) 8-bit PGM file, rounding and clamping
/// samples to `[0, 255]`.
pub fn write_pgm(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", image.cols, image.rows).into_bytes();
    out.extend(
        image
            .data
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8),
    );
    fs::write(path, out)?;
    Ok(())
}

fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cursor = 0usize;
    let magic = read_token(bytes, &mut cursor)
        .ok_or_else(|| Error::Pgm("missing magic number".into()))?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => {
            return Err(Error::Pgm(format!(
                "unsupported magic {other:?} (expected P2 or P5)"
            )))
        }
    };
    let cols = read_header_int(bytes, &mut cursor, "width")?;
    let rows = read_header_int(bytes, &mut cursor, "height")?;
    let maxval = read_header_int(bytes, &mut cursor, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Pgm(format!(
            "unsupported maxval {maxval} (only 8-bit images with maxval <= 255 are handled)"
        )));
    }

    let n = rows * cols;
    let mut data = Vec::with_capacity(n);
    if binary {
        // P5: a single whitespace byte separates the header from the payload.
        let payload = &bytes[cursor..];
        if payload.len() < n {
            return Err(Error::Pgm(format!(
                "truncated payload: expected {n} bytes, found {}",
                payload.len()
            )));
        }
        data.extend(payload[..n].iter().map(|&b| f64::from(b)));
    } else {
        for _ in 0..n {
            let tok = read_token(bytes, &mut cursor)
                .ok_or_else(|| Error::Pgm("truncated ASCII payload".into()))?;
            let v: u32 = tok
                .parse()
                .map_err(|_| Error::Pgm(format!("invalid sample {tok:?}")))?;
            data.push(f64::from(v));
        }
    }
    Image::new(rows, cols, data)
}

fn read_header_int(bytes: &[u8], cursor: &mut usize, what: &str) -> Result<usize> {
    let tok = read_token(bytes, cursor)
        .ok_or_else(|| Error::Pgm(format!("missing {what} in header")))?;
    tok.parse()
        .map_err(|_| Error::Pgm(format!("invalid {what}: {tok:?}")))
}

/// Reads the next whitespace-delimited token, skipping `#` comments. Advances
/// the cursor past exactly one trailing whitespace byte, per the PGM spec.
fn read_token(bytes: &[u8], cursor: &mut usize) -> Option<String> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    if *cursor >= bytes.len() {
        return None;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    let tok = String::from_utf8_lossy(&bytes[start..*cursor]).into_owned();
    if *cursor < bytes.len() {
        *cursor += 1; // consume the single separator byte
    }
    Some(tok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_image() -> Image {
        Image::from_fn(4, 6, |i, j| ((i * 37 + j * 11) % 256) as f64)
    }

    #[test]
    fn p5_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = test_image();
        write_pgm(&path, &img).unwrap();
        let first = std::fs::read(&path).unwrap();
        let read_back = read_pgm(&path).unwrap();
        assert_eq!(read_back, img);
        write_pgm(&path, &read_back).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn p2_and_p5_parse_equal() {
        let img = test_image();
        let mut ascii = format!("P2\n# comment line\n{} {}\n255\n", img.cols(), img.rows());
        for &v in img.pixels() {
            ascii.push_str(&format!("{} ", v as u8));
        }
        let from_ascii = parse_pgm(ascii.as_bytes()).unwrap();

        let mut bin = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
        bin.extend(img.pixels().iter().map(|&v| v as u8));
        let from_bin = parse_pgm(&bin).unwrap();

        assert_eq!(from_ascii, from_bin);
        assert_eq!(from_ascii, img);
    }

    #[test]
    fn wide_maxval_is_rejected() {
        let bytes = b"P5\n2 2\n65535\n\x00\x00\x00\x00\x00\x00\x00\x00";
        let err = parse_pgm(bytes).unwrap_err();
        assert!(matches!(err, Error::Pgm(ref m) if m.contains("maxval")));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let bytes = b"P5\n4 4\n255\n\x01\x02";
        let err = parse_pgm(bytes).unwrap_err();
        assert!(matches!(err, Error::Pgm(ref m) if m.contains("truncated")));
    }
}
