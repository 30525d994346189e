//! Binary PGM (P5) images for pixel indicator sets.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Square-or-rectangular 8-bit image, row-major, first row at `y = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl PixelImage {
    pub fn from_mask(width: usize, height: usize, mask: &[bool]) -> Self {
        assert_eq!(mask.len(), width * height);
        Self {
            width,
            height,
            data: mask.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] > 0
    }

    pub fn count_set(&self) -> usize {
        self.data.iter().filter(|&&v| v > 0).count()
    }

    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)?;
        Ok(())
    }

    pub fn read_pgm<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let bad = |reason: &str| Error::Format {
            path: None,
            reason: reason.to_string(),
        };
        let mut pos = 0;
        let mut token = || -> Option<String> {
            loop {
                while pos < buf.len() && buf[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < buf.len() && buf[pos] == b'#' {
                    while pos < buf.len() && buf[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
                pos += 1;
            }
            (pos > start).then(|| String::from_utf8_lossy(&buf[start..pos]).into_owned())
        };
        if token().as_deref() != Some("P5") {
            return Err(bad("missing P5 magic"));
        }
        let mut num = || token().and_then(|t| t.parse::<usize>().ok());
        let (width, height, maxval) = match (num(), num(), num()) {
            (Some(w), Some(h), Some(m)) => (w, h, m),
            _ => return Err(bad("malformed header")),
        };
        if maxval == 0 || maxval > 255 {
            return Err(bad("only 8-bit images are supported"));
        }
        // exactly one whitespace byte separates the header from the raster
        let start = pos + 1;
        let data = buf
            .get(start..start + width * height)
            .ok_or_else(|| bad("truncated raster"))?
            .to_vec();
        Ok(Self { width, height, data })
    }
}
