//! Expanding-threshold auto-censoring (ETAC) code for memoryless sources
//! over the positive integers, with envelope-class tooling and a
//! Monte-Carlo harness for its redundancy and concentration behaviour.

pub mod arith;
pub mod bitio;
pub mod codec;
pub mod elias;
pub mod envelope;
pub mod ktmodel;
pub mod lab;
pub mod threshold;
