//! IDX binary format (big-endian) as used by the MNIST distribution.
//! Gzip-compressed files are detected by their magic bytes.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use ndarray::Array2;

use super::{Dataset, Targets};
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'a str,
}

impl<'a> Cursor<'a> {
    fn format_error(&self, offset: usize, reason: impl Into<String>) -> Error {
        Error::Format {
            what: self.what.to_string(),
            offset: offset as u64,
            reason: reason.into(),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| self.format_error(self.bytes.len(), "truncated header"))?;
        self.pos = end;
        Ok(u32::from_be_bytes(chunk.try_into().expect("4 bytes")))
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        let chunk = self.bytes.get(self.pos..end).ok_or_else(|| {
            self.format_error(
                self.bytes.len(),
                format!(
                    "truncated payload, expected {len} bytes from offset {}",
                    self.pos
                ),
            )
        })?;
        self.pos = end;
        Ok(chunk)
    }
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Returns `(rows, cols, pixels)` with pixels laid out image by image.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        what: "IDX image file",
    };
    let magic = cur.u32()?;
    if magic != IMAGES_MAGIC {
        return Err(cur.format_error(
            0,
            format!("bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        ));
    }
    let count = cur.u32()? as usize;
    let rows = cur.u32()? as usize;
    let cols = cur.u32()? as usize;
    let pixels = cur.take(count * rows * cols)?.to_vec();
    Ok((rows, cols, pixels))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        what: "IDX label file",
    };
    let magic = cur.u32()?;
    if magic != LABELS_MAGIC {
        return Err(cur.format_error(
            0,
            format!("bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        ));
    }
    let count = cur.u32()? as usize;
    Ok(cur.take(count)?.to_vec())
}

pub fn encode_idx_images(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let count = pixels.len() / (rows * cols).max(1);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, count as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Load an image/label file pair. Pixels are scaled to `[0, 1]`.
pub fn load_mnist_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let (rows, cols, pixels) = parse_idx_images(&read_maybe_gz(images)?)?;
    let label_bytes = read_maybe_gz(labels)?;
    let label_values = parse_idx_labels(&label_bytes)?;
    let dim = rows * cols;
    let count = pixels.len().checked_div(dim).unwrap_or(0);
    if count != label_values.len() {
        return Err(Error::Format {
            what: "IDX label file".into(),
            offset: 4,
            reason: format!("{} labels for {count} images", label_values.len()),
        });
    }
    if let Some(i) = label_values.iter().position(|&l| l > 9) {
        return Err(Error::Format {
            what: "IDX label file".into(),
            offset: 8 + i as u64,
            reason: format!("label {} outside 0..=9", label_values[i]),
        });
    }
    let features = Array2::from_shape_vec(
        (count, dim),
        pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
    )
    .expect("shape matches pixel count");
    Dataset::new(
        features,
        Targets::Labels(label_values.into_iter().map(usize::from).collect()),
    )
}
