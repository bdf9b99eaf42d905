//! Exact sampling from a semimeasure table by a tree walk driven by uniform
//! random bits.
//!
//! Each vertex `x` owns the subinterval of [0, 1) of length `Q(x)/Q(Λ)`; its
//! children's intervals sit at its left end and the rest of it means "halt
//! here". A uniform point `u` is revealed one bit at a time, and a decision
//! is taken only once the dyadic interval known to contain `u` lies inside a
//! single region, so every cylinder is hit with probability exactly
//! `Q(x)/Q(Λ)`.

use std::fmt;

use num_traits::{Signed, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dyadic::BinaryString;
use crate::error::{Error, Result};
use crate::par;
use crate::rational::{dyadic, Rational};
use crate::table::SemimeasureTable;

/// Uniform bits consumed before giving up; exceeding it has probability
/// below `2^-(MAX_BITS - depth)`.
const MAX_BITS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStatus {
    ReachedDepth,
    HaltedAt,
}

impl fmt::Display for SampleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleStatus::ReachedDepth => "reached-depth",
            SampleStatus::HaltedAt => "halted-at",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub index: u64,
    pub emitted: BinaryString,
    pub status: SampleStatus,
}

impl Sample {
    pub const CSV_HEADER: &'static str = "index,emitted,status";

    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.index, self.emitted, self.status)
    }
}

/// The revealed part of a uniform point: `u ∈ [low, low + 2^-bits)`.
struct UniformPoint<'a, R: RngCore> {
    rng: &'a mut R,
    low: Rational,
    bits: usize,
    buffer: u64,
    left: u32,
}

impl<'a, R: RngCore> UniformPoint<'a, R> {
    fn new(rng: &'a mut R) -> Self {
        Self {
            rng,
            low: Rational::zero(),
            bits: 0,
            buffer: 0,
            left: 0,
        }
    }

    fn high(&self) -> Rational {
        &self.low + dyadic(self.bits)
    }

    fn refine(&mut self) -> Result<()> {
        if self.bits >= MAX_BITS {
            return Err(Error::Precondition("uniform bit budget exhausted".into()));
        }
        if self.left == 0 {
            self.buffer = self.rng.next_u64();
            self.left = 64;
        }
        let bit = self.buffer >> 63;
        self.buffer <<= 1;
        self.left -= 1;
        self.bits += 1;
        if bit == 1 {
            self.low += dyadic(self.bits);
        }
        Ok(())
    }
}

enum Region {
    Child(bool),
    Halt,
}

/// Walks the tree of `table` from the root, extending by bit `b` with
/// probability `Q(xb)/Q(x)` and halting with the leftover probability, until
/// a halt or `max_depth`.
pub fn sample_with<R: RngCore>(table: &SemimeasureTable, rng: &mut R, max_depth: usize) -> Result<(BinaryString, SampleStatus)> {
    if max_depth > table.depth() {
        return Err(Error::Depth {
            string: BinaryString::repeat(false, max_depth),
            length: max_depth,
            depth: table.depth(),
        });
    }
    let root = table.at(&BinaryString::empty()).clone();
    if !root.is_positive() {
        return Err(Error::EmptySemimeasure);
    }
    let mut u = UniformPoint::new(rng);
    let mut x = BinaryString::empty();
    // Left end of x's interval, in units of Q(Λ).
    let mut start = Rational::zero();
    while x.len() < max_depth {
        let b0 = &start + table.at(&x.child(false)) / &root;
        let b1 = &b0 + table.at(&x.child(true)) / &root;
        let region = loop {
            let high = u.high();
            if high <= b0 {
                break Region::Child(false);
            }
            if u.low >= b0 && high <= b1 {
                break Region::Child(true);
            }
            if u.low >= b1 {
                break Region::Halt;
            }
            u.refine()?;
        };
        match region {
            Region::Child(false) => x.push(false),
            Region::Child(true) => {
                x.push(true);
                start = b0;
            }
            Region::Halt => return Ok((x, SampleStatus::HaltedAt)),
        }
    }
    Ok((x, SampleStatus::ReachedDepth))
}

/// One sample from stream `(seed, 0)`.
pub fn sample_semimeasure(table: &SemimeasureTable, seed: u64, max_depth: usize) -> Result<(BinaryString, SampleStatus)> {
    let mut rng = par::stream_rng(seed, 0);
    sample_with(table, &mut rng, max_depth)
}

/// `count` samples; sample `i` uses stream `(seed, i)`.
pub fn sample_many(table: &SemimeasureTable, seed: u64, count: u64, max_depth: usize) -> Result<Vec<Sample>> {
    par::map_range(count as usize, |i| {
        let mut rng = par::stream_rng(seed, i as u64);
        sample_with(table, &mut rng, max_depth).map(|(emitted, status)| Sample {
            index: i as u64,
            emitted,
            status,
        })
    })
    .into_iter()
    .collect()
}
