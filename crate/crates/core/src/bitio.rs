//! Bit-granular buffers shared by the arithmetic and Elias coders.
//!
//! Bits are packed MSB-first within each byte and the final partial byte is
//! zero-padded. [`BitCursor`] reads a [`BitString`] with exact position
//! accounting and supports rolling back bits that were read as lookahead.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("truncated bit stream: needed {needed} more bit(s) at position {position}")]
    Truncated { position: usize, needed: usize },
    #[error("cannot roll back {requested} bit(s) from position {position}")]
    Rollback { position: usize, requested: usize },
}

/// Growable sequence of bits.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// Wraps raw bytes; every bit of every byte is part of the string.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        Self {
            bytes: bytes.to_vec(),
            len: bytes.len() * 8,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn write_bit(&mut self, bit: bool) {
        let offset = self.len % 8;
        if offset == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> offset;
        }
        self.len += 1;
    }

    /// Appends `count` copies of `bit`.
    pub fn write_repeated(&mut self, bit: bool, count: u64) {
        for _ in 0..count {
            self.write_bit(bit);
        }
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for shift in (0..width).rev() {
            self.write_bit((value >> shift) & 1 == 1);
        }
    }

    pub fn extend(&mut self, other: &BitString) {
        if self.len.is_multiple_of(8) {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
        } else {
            for i in 0..other.len {
                self.write_bit(other.get(i));
            }
        }
    }

    /// Bit at `index`. Panics when out of range.
    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        (self.bytes[index / 8] >> (7 - index % 8)) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// MSB-first packing, final byte zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bytes.clone()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn cursor(&self) -> BitCursor<'_> {
        BitCursor::new(self)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BitString {
    type Err = char;

    /// Parses a string of `0`/`1` characters; the error is the first other character.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = BitString::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.write_bit(false),
                '1' => bits.write_bit(true),
                other => return Err(other),
            }
        }
        Ok(bits)
    }
}

/// Read position into a [`BitString`].
///
/// Besides strict reads, the cursor offers zero-filled lookahead reads past
/// the end of the data (`read_bit_padded`). Those phantom bits are tracked
/// separately as the *overrun* so that a later rollback can retract them;
/// `position` itself never exceeds the length of the underlying string.
#[derive(Debug, Clone)]
pub struct BitCursor<'a> {
    bits: &'a BitString,
    position: usize,
    overrun: usize,
    high_water: usize,
}

impl<'a> BitCursor<'a> {
    pub fn new(bits: &'a BitString) -> Self {
        Self {
            bits,
            position: 0,
            overrun: 0,
            high_water: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// Furthest position (including phantom padding) ever reached.
    pub fn high_water(&self) -> usize {
        self.high_water
    }

    /// Phantom bits read past the end and not yet rolled back.
    pub fn overrun(&self) -> usize {
        self.overrun
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.position
    }

    pub fn bits(&self) -> &'a BitString {
        self.bits
    }

    fn touch(&mut self) {
        self.high_water = self.high_water.max(self.position + self.overrun);
    }

    pub fn read_bit(&mut self) -> Result<bool, BitError> {
        if self.overrun > 0 || self.position >= self.bits.len() {
            return Err(BitError::Truncated {
                position: self.position + self.overrun,
                needed: 1,
            });
        }
        let bit = self.bits.get(self.position);
        self.position += 1;
        self.touch();
        Ok(bit)
    }

    /// Reads one bit, yielding `0` once the data is exhausted.
    pub fn read_bit_padded(&mut self) -> bool {
        if self.overrun == 0 && self.position < self.bits.len() {
            let bit = self.bits.get(self.position);
            self.position += 1;
            self.touch();
            bit
        } else {
            self.overrun += 1;
            self.touch();
            false
        }
    }

    pub fn read_bits(&mut self, k: usize) -> Result<Vec<bool>, BitError> {
        if self.overrun > 0 || self.position + k > self.bits.len() {
            return Err(BitError::Truncated {
                position: self.position + self.overrun,
                needed: (self.position + k).saturating_sub(self.bits.len()).max(1),
            });
        }
        let out = (self.position..self.position + k)
            .map(|i| self.bits.get(i))
            .collect();
        self.position += k;
        self.touch();
        Ok(out)
    }

    /// Reads `width ≤ 64` bits as an unsigned integer, MSB first.
    pub fn read_uint(&mut self, width: u32) -> Result<u64, BitError> {
        debug_assert!(width <= 64);
        let width = width as usize;
        if self.overrun > 0 || self.position + width > self.bits.len() {
            return Err(BitError::Truncated {
                position: self.position + self.overrun,
                needed: (self.position + width) - self.bits.len().min(self.position + width),
            });
        }
        let mut value = 0u64;
        for i in self.position..self.position + width {
            value = (value << 1) | u64::from(self.bits.get(i));
        }
        self.position += width;
        self.touch();
        Ok(value)
    }

    /// Moves back `k` bits, retracting phantom padding first.
    pub fn rollback(&mut self, k: usize) -> Result<(), BitError> {
        if k > self.position + self.overrun {
            return Err(BitError::Rollback {
                position: self.position + self.overrun,
                requested: k,
            });
        }
        let from_overrun = k.min(self.overrun);
        self.overrun -= from_overrun;
        self.position -= k - from_overrun;
        Ok(())
    }
}
