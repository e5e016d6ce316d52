//! IDX dataset files (the MNIST distribution format), big-endian.

use std::fs;
use std::path::Path;

use crate::encoder::InputFrame;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// Row-major flattened images.
    pub frames: Vec<InputFrame>,
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::CorruptDataset(format!("header truncated at byte {at}")))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    if bytes.len() < 4 {
        return Err(Error::CorruptDataset(
            "file shorter than the IDX magic".into(),
        ));
    }
    let magic = be_u32(bytes, 0)?;
    if magic != expected {
        return Err(Error::NotIdx(magic));
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let size = rows * cols;
    let data = &bytes[16..];
    if data.len() != count * size {
        return Err(Error::CorruptDataset(format!(
            "{count} images of {rows}x{cols} need {} bytes, found {}",
            count * size,
            data.len()
        )));
    }
    let frames = if size == 0 {
        vec![InputFrame::new(Vec::new()); count]
    } else {
        data.chunks(size)
            .map(|c| InputFrame::new(c.to_vec()))
            .collect()
    };
    Ok(IdxImages { rows, cols, frames })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let data = &bytes[8..];
    if data.len() != count {
        return Err(Error::CorruptDataset(format!(
            "{count} labels declared, {} bytes present",
            data.len()
        )));
    }
    Ok(data.to_vec())
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    parse_idx_images(&fs::read(path)?)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_idx_labels(&fs::read(path)?)
}

pub fn write_idx_images(images: &IdxImages) -> Result<Vec<u8>> {
    let size = images.rows * images.cols;
    if let Some(bad) = images.frames.iter().find(|f| f.len() != size) {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: bad.len(),
        });
    }
    let mut out = Vec::with_capacity(16 + size * images.frames.len());
    for v in [
        IMAGES_MAGIC,
        images.frames.len() as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for f in &images.frames {
        out.extend_from_slice(f.pixels());
    }
    Ok(out)
}

pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
