//! The expanding-threshold auto-censoring encoder and decoder.
//!
//! A message `x_1 … x_n` of positive integers is followed by the terminator
//! `0`. Before position `i`, the active threshold `T` is `M_{i-1}` (rank
//! rule) or `τ_{i-1}` (value rule); both start at `0`. A symbol `x ≤ T` is
//! arithmetic-coded under the KT weights over `{0, …, T}`. A larger symbol is
//! censored: the escape `0` is coded under the same weights, the arithmetic
//! block is flushed, and the excess `x - T + 1 ≥ 2` is Elias-coded. The
//! terminator is coded like a censored symbol with excess `1`. Every data
//! symbol, censored or not, is then counted and fed to the threshold.
//!
//! The output interleaves `[block][elias][block][elias]…` and is wrapped in
//! a container: the magic `ETC1`, one flags byte (bit 0: `0` rank, `1`
//! value), and the payload bits packed MSB-first with zero padding.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::arith::{ArithDecoder, ArithEncoder, ArithError, WeightModel};
use crate::bitio::{BitCursor, BitError, BitString};
use crate::elias::{self, EliasError};
use crate::ktmodel::KtModel;
use crate::threshold::ThresholdState;

pub const MAGIC: [u8; 4] = *b"ETC1";
const HEADER_LEN: usize = 5;
const FLAG_VALUE_RULE: u8 = 0b1;

/// Largest symbol the codec accepts. Keeps excesses and model totals well
/// inside the coder's 64-bit registers.
pub const MAX_SYMBOL: u64 = 1 << 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("symbol 0 at position {position} is reserved for the terminator")]
    ZeroSymbol { position: usize },
    #[error("symbol {symbol} at position {position} exceeds the maximum {MAX_SYMBOL}")]
    SymbolTooLarge { position: usize, symbol: u64 },
    #[error("bad magic: expected ETC1")]
    BadMagic,
    #[error("unknown container flags {0:#04x}")]
    UnknownFlags(u8),
    #[error("truncated container")]
    Truncated,
    #[error("corrupt payload near bit {position}")]
    Corrupt { position: usize },
    #[error("trailing data after terminator at bit {position}")]
    TrailingGarbage { position: usize },
}

impl From<ArithError> for CodecError {
    fn from(e: ArithError) -> Self {
        match e {
            ArithError::Truncated { .. } => CodecError::Truncated,
            ArithError::Corrupt { position } => CodecError::Corrupt { position },
            // encoder-side conditions; unreachable from a symmetric decoder
            ArithError::SymbolOutOfAlphabet { .. } | ArithError::TotalTooLarge(_) => {
                CodecError::Corrupt { position: 0 }
            }
        }
    }
}

impl From<EliasError> for CodecError {
    fn from(e: EliasError) -> Self {
        match e {
            EliasError::Bits(BitError::Truncated { .. }) => CodecError::Truncated,
            EliasError::Bits(BitError::Rollback { position, .. })
            | EliasError::Malformed { position } => CodecError::Corrupt { position },
            EliasError::Zero => CodecError::Corrupt { position: 0 },
        }
    }
}

/// Which threshold decides censoring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum CensorRule {
    /// Censor `x > M_{i-1}`; alphabet `{0, …, M_{i-1}}`.
    #[default]
    Rank,
    /// Censor `x > τ_{i-1}`; alphabet `{0, …, τ_{i-1}}`.
    Value,
}

impl CensorRule {
    pub fn flags(self) -> u8 {
        match self {
            CensorRule::Rank => 0,
            CensorRule::Value => FLAG_VALUE_RULE,
        }
    }

    pub fn from_flags(flags: u8) -> Result<Self, CodecError> {
        match flags {
            0 => Ok(CensorRule::Rank),
            FLAG_VALUE_RULE => Ok(CensorRule::Value),
            other => Err(CodecError::UnknownFlags(other)),
        }
    }
}

impl fmt::Display for CensorRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CensorRule::Rank => "rank",
            CensorRule::Value => "value",
        })
    }
}

impl FromStr for CensorRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rank" => Ok(CensorRule::Rank),
            "value" => Ok(CensorRule::Value),
            other => Err(format!("unknown censor rule '{other}' (expected rank or value)")),
        }
    }
}

/// Encoded message: censor rule plus payload bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub rule: CensorRule,
    pub payload: BitString,
}

impl Container {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.as_bytes().len());
        out.extend_from_slice(&MAGIC);
        out.push(self.rule.flags());
        out.extend_from_slice(self.payload.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let magic_len = bytes.len().min(MAGIC.len());
        if bytes[..magic_len] != MAGIC[..magic_len] {
            return Err(CodecError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(CodecError::Truncated);
        }
        let rule = CensorRule::from_flags(bytes[4])?;
        Ok(Self {
            rule,
            payload: BitString::from_bytes(&bytes[HEADER_LEN..]),
        })
    }
}

/// Threshold and count state shared, step for step, by encoder and decoder.
#[derive(Debug, Clone, Default)]
pub struct StreamState {
    rule: CensorRule,
    threshold: ThresholdState,
    model: KtModel,
}

impl StreamState {
    pub fn new(rule: CensorRule) -> Self {
        Self {
            rule,
            ..Self::default()
        }
    }

    pub fn rule(&self) -> CensorRule {
        self.rule
    }

    pub fn threshold(&self) -> &ThresholdState {
        &self.threshold
    }

    pub fn model(&self) -> &KtModel {
        &self.model
    }

    /// Threshold `T` for the next symbol.
    pub fn active_threshold(&self) -> u64 {
        match self.rule {
            CensorRule::Rank => self.threshold.rank(),
            CensorRule::Value => self.threshold.tau(),
        }
    }

    /// Points the model at the alphabet `{0, …, T}` and returns `T`.
    fn prepare(&mut self) -> u64 {
        let t = self.active_threshold();
        self.model.set_top(t);
        t
    }

    fn absorb(&mut self, x: u64) {
        // x ≥ 1 is guaranteed by both callers
        self.model.record(x).expect("positive symbol");
        self.threshold.observe(x).expect("positive symbol");
    }
}

/// Per-stream codelength accounting for one encoding.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CodelengthReport {
    /// Message length `n` (terminator excluded).
    pub symbols: u64,
    pub total_bits: u64,
    /// Bits of all arithmetic blocks, `ℓ(C_M)`.
    pub mixture_bits: u64,
    /// Bits of all Elias codewords including the terminator's, `ℓ(C_E)`.
    pub elias_bits: u64,
    /// Number of censored data symbols `N` (terminator excluded).
    pub censored: u64,
    /// Final threshold `M_n`.
    pub final_rank: u64,
    /// Final order statistic `τ_n`.
    pub final_tau: u64,
    /// `Σ -log2(weight/total)` over every arithmetic-coded symbol, escapes
    /// and terminator included.
    pub ideal_mixture_bits: f64,
}

/// Online encoder; symbols may be pushed one at a time.
#[derive(Debug, Clone)]
pub struct Encoder {
    state: StreamState,
    arith: ArithEncoder,
    out: BitString,
    report: CodelengthReport,
}

impl Encoder {
    pub fn new(rule: CensorRule) -> Self {
        Self {
            state: StreamState::new(rule),
            arith: ArithEncoder::new(),
            out: BitString::new(),
            report: CodelengthReport::default(),
        }
    }

    pub fn state(&self) -> &StreamState {
        &self.state
    }

    /// Bits emitted so far; always a prefix of the final payload.
    pub fn emitted(&self) -> &BitString {
        &self.out
    }

    fn code_arith(&mut self, symbol: u64) {
        let before = self.out.len();
        self.report.ideal_mixture_bits += self.state.model.ideal_bits(symbol);
        self.arith
            .encode_symbol(&self.state.model, symbol, &mut self.out)
            .expect("symbol lies in the active alphabet");
        self.report.mixture_bits += (self.out.len() - before) as u64;
    }

    fn close_block(&mut self, excess: u64) {
        let before = self.out.len();
        self.arith.flush(&mut self.out);
        self.report.mixture_bits += (self.out.len() - before) as u64;
        let before = self.out.len();
        elias::encode_into(excess, &mut self.out).expect("excess is positive");
        self.report.elias_bits += (self.out.len() - before) as u64;
    }

    pub fn push(&mut self, x: u64) -> Result<(), CodecError> {
        let position = self.report.symbols as usize;
        if x == 0 {
            return Err(CodecError::ZeroSymbol { position });
        }
        if x > MAX_SYMBOL {
            return Err(CodecError::SymbolTooLarge { position, symbol: x });
        }
        let t = self.state.prepare();
        if x <= t {
            self.code_arith(x);
        } else {
            self.code_arith(0);
            self.close_block(x - t + 1);
            self.report.censored += 1;
        }
        self.state.absorb(x);
        self.report.symbols += 1;
        Ok(())
    }

    /// Codes the terminator and returns the container with its accounting.
    pub fn finish(mut self) -> (Container, CodelengthReport) {
        self.state.prepare();
        self.code_arith(0);
        self.close_block(1);
        self.report.total_bits = self.out.len() as u64;
        self.report.final_rank = self.state.threshold.rank();
        self.report.final_tau = self.state.threshold.tau();
        let container = Container {
            rule: self.state.rule,
            payload: self.out,
        };
        (container, self.report)
    }
}

pub fn encode_with_report(
    msg: &[u64],
    rule: CensorRule,
) -> Result<(Container, CodelengthReport), CodecError> {
    let mut enc = Encoder::new(rule);
    for &x in msg {
        enc.push(x)?;
    }
    Ok(enc.finish())
}

pub fn encode(msg: &[u64], rule: CensorRule) -> Result<Container, CodecError> {
    encode_with_report(msg, rule).map(|(c, _)| c)
}

pub fn codelength_report(msg: &[u64], rule: CensorRule) -> Result<CodelengthReport, CodecError> {
    encode_with_report(msg, rule).map(|(_, r)| r)
}

/// Step-wise decoder mirroring [`Encoder`].
#[derive(Debug)]
pub struct Decoder<'a> {
    state: StreamState,
    cursor: BitCursor<'a>,
    arith: Option<ArithDecoder>,
    finished: bool,
}

impl<'a> Decoder<'a> {
    pub fn new(container: &'a Container) -> Self {
        Self {
            state: StreamState::new(container.rule),
            cursor: container.payload.cursor(),
            arith: None,
            finished: false,
        }
    }

    pub fn state(&self) -> &StreamState {
        &self.state
    }

    /// Next symbol, or `None` once the terminator has been decoded.
    pub fn next_symbol(&mut self) -> Result<Option<u64>, CodecError> {
        if self.finished {
            return Ok(None);
        }
        let cursor = &mut self.cursor;
        let arith = self.arith.get_or_insert_with(|| ArithDecoder::new(cursor));
        let t = self.state.prepare();
        let symbol = arith.decode_symbol(&self.state.model, cursor)?;
        if symbol != 0 {
            self.state.absorb(symbol);
            return Ok(Some(symbol));
        }
        self.arith.take().expect("active block").finish(cursor)?;
        let excess = elias::decode(cursor)?;
        if excess == 1 {
            self.finished = true;
            self.check_padding()?;
            return Ok(None);
        }
        let x = t
            .checked_add(excess - 1)
            .filter(|&x| x <= MAX_SYMBOL)
            .ok_or(CodecError::Corrupt {
                position: self.cursor.position(),
            })?;
        self.state.absorb(x);
        Ok(Some(x))
    }

    fn check_padding(&mut self) -> Result<(), CodecError> {
        let position = self.cursor.position();
        let rest = self.cursor.remaining();
        let clean = rest < 8
            && self
                .cursor
                .read_bits(rest)
                .map(|bits| bits.iter().all(|&b| !b))
                .unwrap_or(false);
        if clean {
            Ok(())
        } else {
            Err(CodecError::TrailingGarbage { position })
        }
    }
}

pub fn decode(container: &Container) -> Result<Vec<u64>, CodecError> {
    let mut dec = Decoder::new(container);
    let mut out = Vec::new();
    while let Some(x) = dec.next_symbol()? {
        out.push(x);
    }
    Ok(out)
}

pub fn decode_bytes(bytes: &[u8]) -> Result<Vec<u64>, CodecError> {
    decode(&Container::from_bytes(bytes)?)
}
