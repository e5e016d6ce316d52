//! Time-to-first-spike input encoding.
//!
//! An 8-bit intensity maps to a spike time by bitwise complement, so
//! brighter pixels fire earlier. For windows shorter than 256 steps the
//! intensity is first shifted right until it fits the window.

use crate::error::{Error, Result};
use crate::model::{SpikeTime, SpikeTrain, MAX_T_MAX};

/// How a zero-intensity pixel is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroPixelPolicy {
    /// No spike at all. The default.
    #[default]
    NoSpike,
    /// Spike at the last timestep of the window, as plain complement would.
    LastTimestep,
}

/// Raw input frame as delivered by the controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputFrame {
    pixels: Vec<u8>,
}

impl InputFrame {
    pub fn new(pixels: Vec<u8>) -> Self {
        InputFrame { pixels }
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

impl From<Vec<u8>> for InputFrame {
    fn from(pixels: Vec<u8>) -> Self {
        InputFrame::new(pixels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TtfsEncoder {
    in_dim: usize,
    t_max: u16,
    shift: u32,
    zero_pixel: ZeroPixelPolicy,
}

impl TtfsEncoder {
    pub fn new(in_dim: usize, t_max: u16, zero_pixel: ZeroPixelPolicy) -> Result<Self> {
        if t_max == 0 || t_max > MAX_T_MAX {
            return Err(Error::InvalidModel(format!(
                "t_max {t_max} outside 1..=256"
            )));
        }
        Ok(TtfsEncoder {
            in_dim,
            t_max,
            shift: 8 - t_max.ilog2(),
            zero_pixel,
        })
    }

    /// Spike time of a single pixel.
    #[inline]
    pub fn encode_pixel(&self, pixel: u8) -> Option<SpikeTime> {
        if pixel == 0 && self.zero_pixel == ZeroPixelPolicy::NoSpike {
            return None;
        }
        let level = (pixel as u16) >> self.shift;
        Some((self.t_max - 1 - level) as SpikeTime)
    }

    pub fn encode(&self, frame: &InputFrame) -> Result<SpikeTrain> {
        if frame.len() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                got: frame.len(),
            });
        }
        let times = frame
            .pixels()
            .iter()
            .map(|&p| self.encode_pixel(p))
            .collect();
        SpikeTrain::new(self.t_max, times)
    }
}

/// Encodes a frame with the default zero-pixel policy.
pub fn encode_ttfs(frame: &InputFrame, in_dim: usize, t_max: u16) -> Result<SpikeTrain> {
    TtfsEncoder::new(in_dim, t_max, ZeroPixelPolicy::NoSpike)?.encode(frame)
}
