//! Elias delta code for positive integers.
//!
//! A codeword for `y` is `ℓ(ℓ(y)) - 1` zeros, then `ℓ(y)` written in
//! `ℓ(ℓ(y))` bits, then the `ℓ(y) - 1` low-order bits of `y`, where
//! `ℓ(z) = ⌊log2 max(z, 1)⌋ + 1`. The length is `ℓ(y) + 2ℓ(ℓ(y)) - 2`.

use thiserror::Error;

use crate::bitio::{BitCursor, BitError, BitString};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EliasError {
    #[error("Elias codes are defined for positive integers only")]
    Zero,
    #[error("malformed Elias codeword at bit {position}")]
    Malformed { position: usize },
    #[error(transparent)]
    Bits(#[from] BitError),
}

/// Binary length `ℓ(z) = ⌊log2 max(z,1)⌋ + 1`.
pub fn ell(z: u64) -> u32 {
    64 - z.max(1).leading_zeros()
}

/// Exact codeword length of `y`.
pub fn codeword_len(y: u64) -> u32 {
    let l = ell(y);
    l + 2 * ell(u64::from(l)) - 2
}

/// The budget `ℓ(y) + 2ℓ(ℓ(y))` that every codeword fits in.
pub fn length_budget(y: u64) -> u32 {
    let l = ell(y);
    l + 2 * ell(u64::from(l))
}

pub fn encode_into(y: u64, out: &mut BitString) -> Result<(), EliasError> {
    if y == 0 {
        return Err(EliasError::Zero);
    }
    let l = ell(y);
    let ll = ell(u64::from(l));
    out.write_repeated(false, u64::from(ll - 1));
    out.write_bits(u64::from(l), ll);
    out.write_bits(y, l - 1);
    Ok(())
}

pub fn encode(y: u64) -> Result<BitString, EliasError> {
    let mut out = BitString::with_capacity(codeword_len(y.max(1)) as usize);
    encode_into(y, &mut out)?;
    Ok(out)
}

pub fn decode(cursor: &mut BitCursor<'_>) -> Result<u64, EliasError> {
    let start = cursor.position();
    let mut zeros = 0u32;
    while !cursor.read_bit()? {
        zeros += 1;
        // ℓ(y) ≤ 64 needs at most 7 bits, i.e. 6 leading zeros
        if zeros > 6 {
            return Err(EliasError::Malformed { position: start });
        }
    }
    let rest = cursor.read_uint(zeros)?;
    let l = (1u64 << zeros) | rest;
    if l > 64 {
        return Err(EliasError::Malformed { position: start });
    }
    let l = l as u32;
    let low = cursor.read_uint(l - 1)?;
    Ok((1u64 << (l - 1)) | low)
}
