//! Backscatter training sequences.
//!
//! A sequence is a ±1 chip pattern applied to the reflection coefficient while
//! the ER backscatters `Ns` ambient symbols, `chips_per_symbol` chips per
//! symbol. It removes the direct-link ambient term at the correlator exactly
//! when every symbol's chip block holds as many `+1` as `-1` chips.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSequence {
    chips: Vec<i8>,
    /// Chip duration (s).
    pub tc: f64,
    ns: usize,
}

impl TrainingSequence {
    /// Wraps raw chips. Fails if any chip is not ±1, the sequence is empty, or
    /// its length is not a multiple of `ns`.
    pub fn new(chips: Vec<i8>, ns: usize, tc: f64) -> Result<Self> {
        if ns == 0 {
            return Err(Error::SequenceStructure("Ns must be at least 1".into()));
        }
        if chips.is_empty() {
            return Err(Error::SequenceStructure("sequence has no chips".into()));
        }
        if let Some(pos) = chips.iter().position(|&c| c != 1 && c != -1) {
            return Err(Error::SequenceStructure(format!(
                "chip {} is {}, expected +1 or -1",
                pos + 1,
                chips[pos]
            )));
        }
        if !chips.len().is_multiple_of(ns) {
            return Err(Error::SequenceStructure(format!(
                "{} chips cannot be split evenly over {ns} symbols",
                chips.len()
            )));
        }
        if !(tc.is_finite() && tc > 0.0) {
            return Err(Error::SequenceStructure(format!("chip duration must be positive, got {tc}")));
        }
        Ok(TrainingSequence { chips, tc, ns })
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    /// `Nc`.
    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn chips_per_symbol(&self) -> usize {
        self.chips.len() / self.ns
    }

    /// Chip blocks, one per ambient symbol.
    pub fn blocks(&self) -> std::slice::ChunksExact<'_, i8> {
        self.chips.chunks_exact(self.chips_per_symbol())
    }

    /// Sum of the chips over each symbol's block.
    pub fn block_sums(&self) -> Vec<i64> {
        self.blocks()
            .map(|b| b.iter().map(|&c| i64::from(c)).sum())
            .collect()
    }
}

impl fmt::Display for TrainingSequence {
    /// One line of signed integers, e.g. `+1 -1 +1 -1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.chips.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(if *c > 0 { "+1" } else { "-1" })?;
        }
        Ok(())
    }
}

/// Parses chip text: `+1`, `1` and `-1` tokens separated by whitespace and/or
/// commas. Only the chip values are parsed; pair them with `Ns` via
/// [`TrainingSequence::new`].
pub fn parse_chips(text: &str) -> Result<Vec<i8>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|tok| match tok {
            "+1" | "1" => Ok(1),
            "-1" => Ok(-1),
            other => Err(Error::SequenceParse(format!("unexpected token `{other}`"))),
        })
        .collect()
}

impl FromStr for TrainingSequence {
    type Err = Error;

    /// Parses a single-symbol sequence; use [`parse_chips`] when `Ns > 1`.
    fn from_str(s: &str) -> Result<Self> {
        TrainingSequence::new(parse_chips(s)?, 1, 1.0)
    }
}

/// Chip counts over one symbol block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockBalance {
    pub plus: usize,
    pub minus: usize,
}

impl BlockBalance {
    pub fn is_balanced(&self) -> bool {
        self.plus == self.minus
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DesignReport {
    pub valid: bool,
    pub blocks: Vec<BlockBalance>,
}

impl DesignReport {
    /// 1-based indices of symbols whose block is unbalanced.
    pub fn unbalanced_symbols(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.is_balanced())
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Checks per-symbol balance. Structural problems surface as
/// [`Error::SequenceStructure`]; an unbalanced block gives `valid == false`.
pub fn validate_design_criterion(seq: &TrainingSequence) -> Result<DesignReport> {
    if seq.ns == 0 || seq.chips.is_empty() || !seq.chips.len().is_multiple_of(seq.ns) {
        return Err(Error::SequenceStructure(format!(
            "{} chips cannot be split evenly over {} symbols",
            seq.chips.len(),
            seq.ns
        )));
    }
    let blocks: Vec<BlockBalance> = seq
        .blocks()
        .map(|b| {
            let plus = b.iter().filter(|&&c| c > 0).count();
            BlockBalance { plus, minus: b.len() - plus }
        })
        .collect();
    let valid = blocks.iter().all(BlockBalance::is_balanced);
    Ok(DesignReport { valid, blocks })
}

/// The tidiest valid sequence: within each symbol, `k` chips of `+1` followed
/// by `k` chips of `-1`. With `k = 1` the coefficient switches twice per
/// symbol.
pub fn minimal_sequence(ns: usize, k: usize, tc: f64) -> Result<TrainingSequence> {
    if k == 0 {
        return Err(Error::SequenceStructure("k must be at least 1".into()));
    }
    let block: Vec<i8> = std::iter::repeat_n(1, k).chain(std::iter::repeat_n(-1, k)).collect();
    let chips = block.iter().copied().cycle().take(2 * k * ns).collect();
    TrainingSequence::new(chips, ns, tc)
}

/// Each symbol block is an independent uniform shuffle of `k` `+1`s and `k`
/// `-1`s.
pub fn random_balanced_sequence<R: Rng + ?Sized>(
    ns: usize,
    k: usize,
    tc: f64,
    rng: &mut R,
) -> Result<TrainingSequence> {
    if k == 0 {
        return Err(Error::SequenceStructure("k must be at least 1".into()));
    }
    let mut chips = Vec::with_capacity(2 * k * ns);
    for _ in 0..ns {
        let start = chips.len();
        chips.extend(std::iter::repeat_n(1i8, k));
        chips.extend(std::iter::repeat_n(-1i8, k));
        chips[start..].shuffle(rng);
    }
    TrainingSequence::new(chips, ns, tc)
}

/// Reflection coefficient held at `+1`: the untrained baseline.
pub fn constant_sequence(ns: usize, k: usize, tc: f64) -> Result<TrainingSequence> {
    if k == 0 {
        return Err(Error::SequenceStructure("k must be at least 1".into()));
    }
    TrainingSequence::new(vec![1; 2 * k * ns], ns, tc)
}
