//! Block-terminated binary arithmetic coder over integer weight models.
//!
//! The coder keeps `low`/`high` in 64-bit registers and renormalizes with the
//! classical E1/E2/E3 scalings (interval inside the lower half, the upper
//! half, or the middle half). Each block is closed by [`ArithEncoder::flush`],
//! which emits the outstanding underflow bits plus two bits naming the
//! quarter that lies inside the final interval. Any continuation of the
//! stream therefore decodes the block identically, and a decoder that has
//! consumed the block's last symbol always holds exactly
//! [`LOOKAHEAD_BITS`] bits of lookahead, which [`ArithDecoder::finish`]
//! rolls back.
//!
//! Probabilities are exact ratios `weight / total`; nothing on the coding
//! path touches floating point.

use thiserror::Error;

use crate::bitio::{BitCursor, BitString};

/// Register width in bits.
pub const PRECISION: u32 = 64;
/// Model totals must stay strictly below this bound so that every symbol
/// keeps a non-empty sub-interval.
pub const MAX_TOTAL: u64 = 1 << (PRECISION - 2);
/// Bits held by the decoder past the end of a block once its last symbol
/// has been decoded.
pub const LOOKAHEAD_BITS: usize = (PRECISION - 2) as usize;

const HALF: u64 = 1 << (PRECISION - 1);
const QUARTER: u64 = 1 << (PRECISION - 2);
const THREE_QUARTERS: u64 = HALF + QUARTER;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("symbol {symbol} outside alphabet of size {alphabet_size}")]
    SymbolOutOfAlphabet { symbol: u64, alphabet_size: u64 },
    #[error("model total {0} exceeds coder precision")]
    TotalTooLarge(u64),
    #[error("corrupt arithmetic block at bit {position}")]
    Corrupt { position: usize },
    #[error("arithmetic block truncated: {missing} bit(s) missing at bit {position}")]
    Truncated { position: usize, missing: usize },
}

/// Integer weights over the alphabet `0..alphabet_size`.
///
/// Every weight is at least 1 and the total stays below [`MAX_TOTAL`].
pub trait WeightModel {
    fn alphabet_size(&self) -> u64;
    fn total(&self) -> u64;
    fn weight(&self, symbol: u64) -> u64;
    /// Sum of the weights of all symbols strictly below `symbol`.
    fn cumulative(&self, symbol: u64) -> u64;
    /// The symbol `j` with `cumulative(j) ≤ target < cumulative(j + 1)`.
    fn symbol_at(&self, target: u64) -> u64;

    /// Ideal codelength `-log2(weight / total)` in bits.
    fn ideal_bits(&self, symbol: u64) -> f64 {
        (self.total() as f64).log2() - (self.weight(symbol) as f64).log2()
    }
}

/// Explicit weight table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    weights: Vec<u64>,
    cumulative: Vec<u64>,
}

impl FrequencyTable {
    /// Panics if the table is empty, has a zero weight, or its total is
    /// too large for the coder.
    pub fn new(weights: Vec<u64>) -> Self {
        assert!(!weights.is_empty(), "empty alphabet");
        assert!(weights.iter().all(|&w| w >= 1), "weights must be positive");
        let mut cumulative = Vec::with_capacity(weights.len() + 1);
        let mut acc = 0u64;
        cumulative.push(0);
        for &w in &weights {
            acc = acc.checked_add(w).expect("weight total overflows");
            cumulative.push(acc);
        }
        assert!(acc < MAX_TOTAL, "total {acc} exceeds coder precision");
        Self { weights, cumulative }
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }
}

impl WeightModel for FrequencyTable {
    fn alphabet_size(&self) -> u64 {
        self.weights.len() as u64
    }

    fn total(&self) -> u64 {
        *self.cumulative.last().unwrap()
    }

    fn weight(&self, symbol: u64) -> u64 {
        self.weights[symbol as usize]
    }

    fn cumulative(&self, symbol: u64) -> u64 {
        self.cumulative[symbol as usize]
    }

    fn symbol_at(&self, target: u64) -> u64 {
        (self.cumulative.partition_point(|&c| c <= target) - 1) as u64
    }
}

fn check_model<M: WeightModel + ?Sized>(model: &M) -> Result<u64, ArithError> {
    let total = model.total();
    if total >= MAX_TOTAL {
        return Err(ArithError::TotalTooLarge(total));
    }
    Ok(total)
}

/// Sub-interval of `[low, high]` for the cumulative range `[lo, hi)` of `total`.
#[inline]
fn narrow(low: u64, high: u64, lo: u64, hi: u64, total: u64) -> (u64, u64) {
    let range = u128::from(high - low) + 1;
    let total = u128::from(total);
    let new_high = low + ((range * u128::from(hi)) / total - 1) as u64;
    let new_low = low + ((range * u128::from(lo)) / total) as u64;
    (new_low, new_high)
}

#[derive(Debug, Clone)]
pub struct ArithEncoder {
    low: u64,
    high: u64,
    pending: u64,
    block_bits: u64,
}

impl Default for ArithEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl ArithEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            high: u64::MAX,
            pending: 0,
            block_bits: 0,
        }
    }

    /// Bits emitted or owed (underflow) for the current block so far.
    pub fn block_bits(&self) -> u64 {
        self.block_bits
    }

    pub fn pending(&self) -> u64 {
        self.pending
    }

    fn emit(&mut self, bit: bool, out: &mut BitString) {
        out.write_bit(bit);
        out.write_repeated(!bit, self.pending);
        self.pending = 0;
    }

    pub fn encode_symbol<M: WeightModel + ?Sized>(
        &mut self,
        model: &M,
        symbol: u64,
        out: &mut BitString,
    ) -> Result<(), ArithError> {
        let alphabet_size = model.alphabet_size();
        if symbol >= alphabet_size {
            return Err(ArithError::SymbolOutOfAlphabet {
                symbol,
                alphabet_size,
            });
        }
        let total = check_model(model)?;
        let lo = model.cumulative(symbol);
        let hi = lo + model.weight(symbol);
        (self.low, self.high) = narrow(self.low, self.high, lo, hi, total);
        loop {
            if self.high < HALF {
                self.emit(false, out);
            } else if self.low >= HALF {
                self.emit(true, out);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.block_bits += 1;
        }
        Ok(())
    }

    /// Terminates the block: emits the underflow bits plus two bits selecting
    /// a quarter inside `[low, high]`, then resets for the next block.
    pub fn flush(&mut self, out: &mut BitString) {
        self.pending += 1;
        let bit = self.low >= QUARTER;
        self.emit(bit, out);
        *self = Self::new();
    }
}

#[derive(Debug, Clone)]
pub struct ArithDecoder {
    low: u64,
    high: u64,
    value: u64,
}

impl ArithDecoder {
    /// Starts a block at the cursor, reading `PRECISION` bits (zero-filled
    /// past the end of the stream).
    pub fn new(cursor: &mut BitCursor<'_>) -> Self {
        let mut value = 0u64;
        for _ in 0..PRECISION {
            value = (value << 1) | u64::from(cursor.read_bit_padded());
        }
        Self {
            low: 0,
            high: u64::MAX,
            value,
        }
    }

    pub fn decode_symbol<M: WeightModel + ?Sized>(
        &mut self,
        model: &M,
        cursor: &mut BitCursor<'_>,
    ) -> Result<u64, ArithError> {
        let total = check_model(model)?;
        if self.value < self.low || self.value > self.high {
            return Err(ArithError::Corrupt {
                position: cursor.position(),
            });
        }
        let range = u128::from(self.high - self.low) + 1;
        let offset = u128::from(self.value - self.low);
        let target = (((offset + 1) * u128::from(total) - 1) / range) as u64;
        let symbol = model.symbol_at(target);
        let lo = model.cumulative(symbol);
        let hi = lo + model.weight(symbol);
        (self.low, self.high) = narrow(self.low, self.high, lo, hi, total);
        if self.value < self.low || self.value > self.high {
            return Err(ArithError::Corrupt {
                position: cursor.position(),
            });
        }
        loop {
            if self.high < HALF {
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.value -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.value -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | u64::from(cursor.read_bit_padded());
        }
        Ok(symbol)
    }

    /// Closes the block after its last symbol.
    ///
    /// Checks that the two flush bits are the ones the encoder emits, rolls
    /// the lookahead back so the cursor rests on the first bit after the
    /// block, and fails if any bit of the block lay past the end of data.
    pub fn finish(self, cursor: &mut BitCursor<'_>) -> Result<(), ArithError> {
        let expected = if self.low >= QUARTER { 0b10 } else { 0b01 };
        let top = self.value >> (PRECISION - 2);
        cursor
            .rollback(LOOKAHEAD_BITS)
            .map_err(|_| ArithError::Corrupt {
                position: cursor.position(),
            })?;
        if cursor.overrun() > 0 {
            return Err(ArithError::Truncated {
                position: cursor.position(),
                missing: cursor.overrun(),
            });
        }
        if top != expected {
            return Err(ArithError::Corrupt {
                position: cursor.position(),
            });
        }
        Ok(())
    }
}
