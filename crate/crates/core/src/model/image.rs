//! Flash model image codec.
//!
//! Little-endian layout:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `SNN1`                            |
//! | 4      | 2    | format version (1)                      |
//! | 6      | 1    | weight mode (0 binary, 1 fixed16)       |
//! | 7      | 1    | layer count L                           |
//! | 8      | 2    | t_max (1..=256)                         |
//! | 10     | 10·L | in_dim u16, out_dim u16, alpha u16 (8.8), threshold i32 |
//!
//! followed by L row-major weight blobs: binary rows of `ceil(in_dim/16)`
//! u16 words, or fixed16 rows of `in_dim` i16 values.

use super::{
    words_per_row, Alpha, Layer, LayerConfig, NetworkModel, WeightMatrix, WeightMode, MAX_T_MAX,
};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SNN1";
pub const FORMAT_VERSION: u16 = 1;

const HEADER_LEN: usize = 10;
const LAYER_RECORD_LEN: usize = 10;

pub fn serialize_model(model: &NetworkModel) -> Vec<u8> {
    let layers = model.layers();
    let weight_bytes: usize = layers.iter().map(|l| l.weights.byte_len()).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + LAYER_RECORD_LEN * layers.len() + weight_bytes);

    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(model.mode().code());
    out.push(layers.len() as u8);
    out.extend_from_slice(&model.t_max().to_le_bytes());

    for layer in layers {
        let c = &layer.config;
        out.extend_from_slice(&(c.in_dim as u16).to_le_bytes());
        out.extend_from_slice(&(c.out_dim as u16).to_le_bytes());
        out.extend_from_slice(&c.alpha.raw().to_le_bytes());
        out.extend_from_slice(&c.threshold.to_le_bytes());
    }

    for layer in layers {
        match &layer.weights {
            WeightMatrix::Binary { words, .. } => {
                for w in words {
                    out.extend_from_slice(&w.to_le_bytes());
                }
            }
            WeightMatrix::Fixed16 { weights, .. } => {
                for w in weights {
                    out.extend_from_slice(&w.to_le_bytes());
                }
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(Error::TruncatedImage {
                needed: end,
                have: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn i32(&mut self) -> Result<i32> {
        let b = self.take(4)?;
        Ok(i32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn deserialize_model(bytes: &[u8]) -> Result<NetworkModel> {
    let mut r = Reader { buf: bytes, pos: 0 };

    if r.take(4)? != MAGIC {
        return Err(Error::NotAModelImage);
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let mode_code = r.u8()?;
    let mode = WeightMode::from_code(mode_code)
        .ok_or_else(|| Error::InvalidModel(format!("unknown weight mode {mode_code}")))?;
    let n_layers = r.u8()? as usize;
    if n_layers == 0 {
        return Err(Error::InvalidModel("image declares zero layers".into()));
    }
    let t_max = r.u16()?;
    if t_max == 0 || t_max > MAX_T_MAX {
        return Err(Error::InvalidModel(format!(
            "t_max {t_max} outside 1..=256"
        )));
    }

    let mut configs = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let in_dim = r.u16()? as usize;
        let out_dim = r.u16()? as usize;
        let alpha = Alpha::from_raw(r.u16()?);
        let threshold = r.i32()?;
        configs.push(LayerConfig::new(in_dim, out_dim, alpha, threshold));
    }
    for (k, pair) in configs.windows(2).enumerate() {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::InconsistentDims(format!(
                "layer {k} out_dim {} != layer {} in_dim {}",
                pair[0].out_dim,
                k + 1,
                pair[1].in_dim
            )));
        }
    }

    let mut layers = Vec::with_capacity(n_layers);
    for config in configs {
        let weights = match mode {
            WeightMode::Binary => {
                let n = words_per_row(config.in_dim) * config.out_dim;
                let raw = r.take(n * 2)?;
                let words = raw
                    .chunks_exact(2)
                    .map(|b| u16::from_le_bytes([b[0], b[1]]))
                    .collect();
                WeightMatrix::binary_from_words(config.in_dim, config.out_dim, words)?
            }
            WeightMode::Fixed16 => {
                let n = config.in_dim * config.out_dim;
                let raw = r.take(n * 2)?;
                let weights = raw
                    .chunks_exact(2)
                    .map(|b| i16::from_le_bytes([b[0], b[1]]))
                    .collect();
                WeightMatrix::fixed16_from_flat(config.in_dim, config.out_dim, weights)?
            }
        };
        layers.push(Layer { config, weights });
    }

    if r.pos != bytes.len() {
        return Err(Error::InvalidModel(format!(
            "{} trailing bytes after weight blobs",
            bytes.len() - r.pos
        )));
    }
    NetworkModel::new(mode, t_max, layers)
}
