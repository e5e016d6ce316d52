//! 16-per-word binary weight packing.
//!
//! Bit `b` of word `w` holds the weight of presynaptic index `16 * w + b`,
//! least significant bit first. A set bit is `+1`, a clear bit is `-1`.
//! Bits past `in_dim` in the last word are always zero.

use crate::error::{Error, Result};

pub const WEIGHTS_PER_WORD: usize = 16;

/// Number of 16-bit words needed for one packed row of `in_dim` weights.
#[inline]
pub fn words_per_row(in_dim: usize) -> usize {
    in_dim.div_ceil(WEIGHTS_PER_WORD)
}

/// Mask of the valid bits in the final word of a row.
#[inline]
fn tail_mask(in_dim: usize) -> u16 {
    match in_dim % WEIGHTS_PER_WORD {
        0 => 0xFFFF,
        r => (1u16 << r) - 1,
    }
}

pub fn pack_binary_row<W>(weights: &[W]) -> Result<Vec<u16>>
where
    W: Copy + Into<i32>,
{
    let mut words = vec![0u16; words_per_row(weights.len())];
    for (i, &w) in weights.iter().enumerate() {
        match w.into() {
            1 => words[i / WEIGHTS_PER_WORD] |= 1 << (i % WEIGHTS_PER_WORD),
            -1 => {}
            other => return Err(Error::InvalidWeight(other)),
        }
    }
    Ok(words)
}

pub fn unpack_binary_row(words: &[u16], in_dim: usize) -> Result<Vec<i8>> {
    let expected = words_per_row(in_dim);
    if words.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: words.len(),
        });
    }
    check_padding(words, in_dim)?;
    Ok((0..in_dim)
        .map(|i| if binary_bit(words, i) { 1 } else { -1 })
        .collect())
}

/// Rejects rows whose padding bits are not zero.
pub(crate) fn check_padding(words: &[u16], in_dim: usize) -> Result<()> {
    if let Some(&last) = words.last() {
        let mask = tail_mask(in_dim);
        if last & !mask != 0 {
            return Err(Error::CorruptWeightWord {
                word: words.len() - 1,
                value: last,
            });
        }
    }
    Ok(())
}

/// Raw bit for presynaptic index `i` in a packed row.
#[inline]
pub fn binary_bit(row: &[u16], i: usize) -> bool {
    (row[i / WEIGHTS_PER_WORD] >> (i % WEIGHTS_PER_WORD)) & 1 == 1
}
