//! Netpbm bitmap (PBM) reader and writer.
//!
//! Accepts both the ASCII `P1` and packed-binary `P4` variants on input;
//! output is always a canonical `P1` (one row per line, no spaces), which
//! makes recovered images diffable byte for byte.

use std::fmt;

/// A black/white bitmap; `bits[y * width + x]`, `true` = set pixel (PBM "1").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

/// Parse failure with the byte offset where it happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbmError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for PbmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PBM parse error at byte {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for PbmError {}

fn err(offset: usize, message: impl Into<String>) -> PbmError {
    PbmError { offset, message: message.into() }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skips whitespace and `#` comments (comments run to end of line).
    fn skip_separators(&mut self) {
        while self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<usize, PbmError> {
        self.skip_separators();
        let start = self.pos;
        let mut value: usize = 0;
        let mut digits = 0;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((self.data[self.pos] - b'0') as usize))
                .ok_or_else(|| err(start, format!("{what} overflows")))?;
            digits += 1;
            self.pos += 1;
        }
        if digits == 0 {
            return Err(err(self.pos, format!("expected {what}")));
        }
        Ok(value)
    }
}

/// Parses a PBM image (`P1` or `P4`).
pub fn parse(data: &[u8]) -> Result<Bitmap, PbmError> {
    if data.len() < 2 {
        return Err(err(0, "file too short for a PBM magic number"));
    }
    let magic = &data[..2];
    if magic != b"P1" && magic != b"P4" {
        return Err(err(0, "magic number must be P1 or P4"));
    }
    let mut cur = Cursor { data, pos: 2 };
    let width = cur.read_uint("width")?;
    let height = cur.read_uint("height")?;
    if width == 0 || height == 0 {
        return Err(err(2, "width and height must be positive"));
    }
    let mut bits = Vec::with_capacity(width * height);
    if magic == b"P1" {
        while bits.len() < width * height {
            cur.skip_separators();
            if cur.pos >= data.len() {
                return Err(err(cur.pos, "raster ended early"));
            }
            match data[cur.pos] {
                b'0' => bits.push(false),
                b'1' => bits.push(true),
                other => {
                    return Err(err(
                        cur.pos,
                        format!("unexpected byte {other:#04x} in P1 raster"),
                    ))
                }
            }
            cur.pos += 1;
        }
    } else {
        // P4: exactly one whitespace byte after the header, then packed rows,
        // each padded to a whole byte.
        if cur.pos >= data.len() || !data[cur.pos].is_ascii_whitespace() {
            return Err(err(cur.pos, "expected single whitespace before P4 raster"));
        }
        cur.pos += 1;
        let row_bytes = width.div_ceil(8);
        for row in 0..height {
            let start = cur.pos + row * row_bytes;
            if start + row_bytes > data.len() {
                return Err(err(data.len(), "P4 raster ended early"));
            }
            for x in 0..width {
                let byte = data[start + x / 8];
                bits.push(byte & (0x80 >> (x % 8)) != 0);
            }
        }
    }
    Ok(Bitmap { width, height, bits })
}

/// Serializes to the canonical `P1` form: header line, then one line of
/// `0`/`1` characters per row.
pub fn to_p1(bm: &Bitmap) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + (bm.width + 1) * bm.height);
    out.extend_from_slice(format!("P1\n{} {}\n", bm.width, bm.height).as_bytes());
    for y in 0..bm.height {
        for x in 0..bm.width {
            out.push(if bm.bits[y * bm.width + x] { b'1' } else { b'0' });
        }
        out.push(b'\n');
    }
    out
}

impl Bitmap {
    /// Column-major flattening to a dense 0/1 signal: pixel `(x, y)` lands at
    /// index `x * height + y`.
    pub fn to_signal(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.width * self.height];
        for y in 0..self.height {
            for x in 0..self.width {
                if self.bits[y * self.width + x] {
                    v[x * self.height + y] = 1.0;
                }
            }
        }
        v
    }

    /// Inverse of [`Bitmap::to_signal`] given thresholded bits in
    /// column-major order.
    pub fn from_signal_bits(width: usize, height: usize, col_major: &[bool]) -> Self {
        let mut bits = vec![false; width * height];
        for x in 0..width {
            for y in 0..height {
                if col_major[x * height + y] {
                    bits[y * width + x] = true;
                }
            }
        }
        Self { width, height, bits }
    }
}
