//! Network description: weight modes, layer parameters, packed weight
//! memories and spike trains, plus the flash image codec.

mod image;
mod packing;

pub use image::{deserialize_model, serialize_model, FORMAT_VERSION, MAGIC};
pub use packing::{
    binary_bit, pack_binary_row, unpack_binary_row, words_per_row, WEIGHTS_PER_WORD,
};

use crate::error::{Error, Result};

/// Largest window representable by 8-bit spike codes.
pub const MAX_T_MAX: u16 = 256;

/// A discrete spike time. Always `< t_max <= 256`, so it fits a byte.
pub type SpikeTime = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightMode {
    /// `{-1, +1}` weights, 16 per 16-bit word.
    Binary,
    /// 16-bit two's-complement weights.
    Fixed16,
}

impl WeightMode {
    pub fn code(self) -> u8 {
        match self {
            WeightMode::Binary => 0,
            WeightMode::Fixed16 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(WeightMode::Binary),
            1 => Some(WeightMode::Fixed16),
            _ => None,
        }
    }
}

/// Unsigned 8.8 fixed-point layer scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alpha(u16);

impl Alpha {
    pub const FRAC_BITS: u32 = 8;
    pub const ONE: Alpha = Alpha(1 << Self::FRAC_BITS);

    pub const fn from_raw(raw: u16) -> Self {
        Alpha(raw)
    }

    /// Scale of exactly `v`.
    pub fn from_int(v: u8) -> Self {
        Alpha((v as u16) << Self::FRAC_BITS)
    }

    pub const fn raw(self) -> u16 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / (1u32 << Self::FRAC_BITS) as f64
    }
}

impl Default for Alpha {
    fn default() -> Self {
        Alpha::ONE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerConfig {
    pub in_dim: usize,
    pub out_dim: usize,
    pub alpha: Alpha,
    /// Firing threshold in accumulator units.
    pub threshold: i32,
}

impl LayerConfig {
    pub fn new(in_dim: usize, out_dim: usize, alpha: Alpha, threshold: i32) -> Self {
        LayerConfig {
            in_dim,
            out_dim,
            alpha,
            threshold,
        }
    }

    /// Threshold the raw accumulator is compared against with `>=`.
    ///
    /// Binary layers fold the scale into the threshold,
    /// `round(threshold / alpha)` rounding half away from zero, so the
    /// datapath stays add/subtract only. Fixed16 layers use the threshold
    /// as stored.
    pub fn effective_threshold(&self, mode: WeightMode) -> i64 {
        match mode {
            WeightMode::Fixed16 => self.threshold as i64,
            WeightMode::Binary => {
                let num = (self.threshold as i64) << Alpha::FRAC_BITS;
                let den = self.alpha.raw() as i64;
                let q = (2 * num.abs() + den) / (2 * den);
                if num < 0 {
                    -q
                } else {
                    q
                }
            }
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::InvalidModel(format!(
                "layer {index} has a zero dimension"
            )));
        }
        if self.in_dim > u16::MAX as usize || self.out_dim > u16::MAX as usize {
            return Err(Error::InvalidModel(format!(
                "layer {index} dimension exceeds 16 bits"
            )));
        }
        if self.alpha.raw() == 0 {
            return Err(Error::InvalidModel(format!("layer {index} has alpha = 0")));
        }
        Ok(())
    }
}

/// Row-major synaptic weight memory, one row per postsynaptic neuron.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightMatrix {
    Binary {
        in_dim: usize,
        out_dim: usize,
        words: Vec<u16>,
    },
    Fixed16 {
        in_dim: usize,
        out_dim: usize,
        weights: Vec<i16>,
    },
}

impl WeightMatrix {
    pub fn binary_from_rows<W: Copy + Into<i32>>(rows: &[Vec<W>]) -> Result<Self> {
        let (in_dim, out_dim) = row_dims(rows)?;
        let mut words = Vec::with_capacity(out_dim * words_per_row(in_dim));
        for row in rows {
            words.extend(pack_binary_row(row)?);
        }
        Ok(WeightMatrix::Binary {
            in_dim,
            out_dim,
            words,
        })
    }

    pub fn fixed16_from_rows(rows: &[Vec<i16>]) -> Result<Self> {
        let (in_dim, out_dim) = row_dims(rows)?;
        Ok(WeightMatrix::Fixed16 {
            in_dim,
            out_dim,
            weights: rows.concat(),
        })
    }

    /// Wraps already-packed words, checking length and padding.
    pub fn binary_from_words(in_dim: usize, out_dim: usize, words: Vec<u16>) -> Result<Self> {
        let wpr = words_per_row(in_dim);
        if words.len() != wpr * out_dim {
            return Err(Error::DimensionMismatch {
                expected: wpr * out_dim,
                got: words.len(),
            });
        }
        for row in words.chunks(wpr) {
            packing::check_padding(row, in_dim)?;
        }
        Ok(WeightMatrix::Binary {
            in_dim,
            out_dim,
            words,
        })
    }

    pub fn fixed16_from_flat(in_dim: usize, out_dim: usize, weights: Vec<i16>) -> Result<Self> {
        if weights.len() != in_dim * out_dim {
            return Err(Error::DimensionMismatch {
                expected: in_dim * out_dim,
                got: weights.len(),
            });
        }
        Ok(WeightMatrix::Fixed16 {
            in_dim,
            out_dim,
            weights,
        })
    }

    pub fn mode(&self) -> WeightMode {
        match self {
            WeightMatrix::Binary { .. } => WeightMode::Binary,
            WeightMatrix::Fixed16 { .. } => WeightMode::Fixed16,
        }
    }

    pub fn in_dim(&self) -> usize {
        match *self {
            WeightMatrix::Binary { in_dim, .. } | WeightMatrix::Fixed16 { in_dim, .. } => in_dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match *self {
            WeightMatrix::Binary { out_dim, .. } | WeightMatrix::Fixed16 { out_dim, .. } => out_dim,
        }
    }

    /// Packed words of row `j` (Binary only).
    pub fn binary_row(&self, j: usize) -> Option<&[u16]> {
        match self {
            WeightMatrix::Binary { in_dim, words, .. } => {
                let wpr = words_per_row(*in_dim);
                Some(&words[j * wpr..(j + 1) * wpr])
            }
            WeightMatrix::Fixed16 { .. } => None,
        }
    }

    /// Row `j` of a Fixed16 matrix.
    pub fn fixed16_row(&self, j: usize) -> Option<&[i16]> {
        match self {
            WeightMatrix::Fixed16 {
                in_dim, weights, ..
            } => Some(&weights[j * in_dim..(j + 1) * in_dim]),
            WeightMatrix::Binary { .. } => None,
        }
    }

    /// Weight from presynaptic `i` to postsynaptic `j` as a signed value.
    pub fn weight(&self, j: usize, i: usize) -> i32 {
        match self {
            WeightMatrix::Binary { .. } => {
                if binary_bit(self.binary_row(j).unwrap(), i) {
                    1
                } else {
                    -1
                }
            }
            WeightMatrix::Fixed16 {
                in_dim, weights, ..
            } => weights[j * in_dim + i] as i32,
        }
    }

    /// Bytes occupied in weight memory.
    pub fn byte_len(&self) -> usize {
        match self {
            WeightMatrix::Binary { words, .. } => words.len() * 2,
            WeightMatrix::Fixed16 { weights, .. } => weights.len() * 2,
        }
    }
}

fn row_dims<T>(rows: &[Vec<T>]) -> Result<(usize, usize)> {
    let in_dim = rows.first().map(Vec::len).unwrap_or(0);
    if in_dim == 0 {
        return Err(Error::InvalidModel("empty weight matrix".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != in_dim) {
        return Err(Error::DimensionMismatch {
            expected: in_dim,
            got: bad.len(),
        });
    }
    Ok((in_dim, rows.len()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub config: LayerConfig,
    pub weights: WeightMatrix,
}

/// A validated network. Immutable once built; share it behind `Arc` or `&`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkModel {
    mode: WeightMode,
    t_max: u16,
    layers: Vec<Layer>,
}

impl NetworkModel {
    pub fn new(mode: WeightMode, t_max: u16, layers: Vec<Layer>) -> Result<Self> {
        if t_max == 0 || t_max > MAX_T_MAX {
            return Err(Error::InvalidModel(format!(
                "t_max {t_max} outside 1..=256"
            )));
        }
        if layers.is_empty() || layers.len() > u8::MAX as usize {
            return Err(Error::InvalidModel(format!(
                "layer count {} outside 1..=255",
                layers.len()
            )));
        }
        for (k, layer) in layers.iter().enumerate() {
            layer.config.validate(k)?;
            if layer.weights.mode() != mode {
                return Err(Error::InvalidModel(format!(
                    "layer {k} weights are {:?}, model is {mode:?}",
                    layer.weights.mode()
                )));
            }
            if layer.weights.in_dim() != layer.config.in_dim
                || layer.weights.out_dim() != layer.config.out_dim
            {
                return Err(Error::InconsistentDims(format!(
                    "layer {k} config is {}x{}, weights are {}x{}",
                    layer.config.in_dim,
                    layer.config.out_dim,
                    layer.weights.in_dim(),
                    layer.weights.out_dim()
                )));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].config.out_dim != pair[1].config.in_dim {
                return Err(Error::InconsistentDims(format!(
                    "layer {k} out_dim {} != layer {} in_dim {}",
                    pair[0].config.out_dim,
                    k + 1,
                    pair[1].config.in_dim
                )));
            }
        }
        Ok(NetworkModel {
            mode,
            t_max,
            layers,
        })
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn t_max(&self) -> u16 {
        self.t_max
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].config.in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].config.out_dim
    }

    /// Same network with a different inference window.
    pub fn with_t_max(&self, t_max: u16) -> Result<Self> {
        NetworkModel::new(self.mode, t_max, self.layers.clone())
    }
}

/// Per-neuron single-spike times for one population.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeTrain {
    t_max: u16,
    times: Vec<Option<SpikeTime>>,
}

impl SpikeTrain {
    pub fn new(t_max: u16, times: Vec<Option<SpikeTime>>) -> Result<Self> {
        if t_max == 0 || t_max > MAX_T_MAX {
            return Err(Error::InvalidModel(format!(
                "t_max {t_max} outside 1..=256"
            )));
        }
        if let Some(&t) = times.iter().flatten().find(|&&t| t as u16 >= t_max) {
            return Err(Error::InvalidModel(format!(
                "spike time {t} not below t_max {t_max}"
            )));
        }
        Ok(SpikeTrain { t_max, times })
    }

    /// A train with no spikes.
    pub fn silent(t_max: u16, len: usize) -> Self {
        SpikeTrain {
            t_max,
            times: vec![None; len],
        }
    }

    pub fn t_max(&self) -> u16 {
        self.t_max
    }

    pub fn times(&self) -> &[Option<SpikeTime>] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.times.iter().flatten().count()
    }
}
