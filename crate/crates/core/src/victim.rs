//! RSA victim: square-and-multiply exponentiation and the power schedule it
//! produces.
//!
//! Exponent bits are processed least-significant first. For each bit a
//! multiply step runs only when the bit is set, followed by a square step.
//! The multiply draws more power than the square, which is what leaks.

use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::pdn::Location;

/// Private exponent (LSB first) and modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaKey {
    bits: Vec<bool>,
    modulus: BigUint,
}

impl RsaKey {
    pub fn new(bits: Vec<bool>, modulus: BigUint) -> Result<Self> {
        if bits.is_empty() {
            return Err(invalid("key.bits", "exponent needs at least one bit"));
        }
        if modulus < BigUint::from(2u32) {
            return Err(Error::ModulusTooSmall);
        }
        Ok(Self { bits, modulus })
    }

    /// Parse a big-endian hex exponent padded or checked against `n_bits`.
    pub fn from_hex(exponent_hex: &str, n_bits: usize, modulus: BigUint) -> Result<Self> {
        let d = BigUint::parse_bytes(exponent_hex.trim_start_matches("0x").as_bytes(), 16)
            .ok_or_else(|| invalid("key.exponent", "not a hex number"))?;
        if d.bits() as usize > n_bits {
            return Err(invalid("key.exponent", "wider than the declared bit length"));
        }
        Self::new(biguint_to_bits(&d, n_bits), modulus)
    }

    /// Uniformly random `n_bits`-bit exponent.
    pub fn random<R: Rng + ?Sized>(n_bits: usize, modulus: BigUint, rng: &mut R) -> Result<Self> {
        Self::new(random_bits(n_bits, rng), modulus)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn exponent(&self) -> BigUint {
        bits_to_biguint(&self.bits)
    }

    /// Big-endian hex of the exponent, zero-padded to the bit length.
    pub fn exponent_hex(&self) -> String {
        bits_to_hex(&self.bits)
    }
}

pub fn random_bits<R: Rng + ?Sized>(n_bits: usize, rng: &mut R) -> Vec<bool> {
    (0..n_bits).map(|_| rng.random::<bool>()).collect()
}

pub fn bits_to_biguint(bits: &[bool]) -> BigUint {
    let mut acc = BigUint::zero();
    for &b in bits.iter().rev() {
        acc <<= 1u32;
        if b {
            acc += 1u32;
        }
    }
    acc
}

pub fn biguint_to_bits(value: &BigUint, n_bits: usize) -> Vec<bool> {
    (0..n_bits as u64).map(|i| value.bit(i)).collect()
}

/// Big-endian hex, one digit per four bits (rounded up).
pub fn bits_to_hex(bits: &[bool]) -> String {
    let digits = bits.len().div_ceil(4);
    let mut out = String::with_capacity(digits);
    for d in (0..digits).rev() {
        let mut nibble = 0u8;
        for j in 0..4 {
            if bits.get(4 * d + j).copied().unwrap_or(false) {
                nibble |= 1 << j;
            }
        }
        out.push(char::from_digit(nibble as u32, 16).unwrap_or('0'));
    }
    out
}

/// Parse big-endian hex into `n_bits` LSB-first bits.
pub fn hex_to_bits(hex: &str, n_bits: usize) -> Result<Vec<bool>> {
    let hex = hex.trim().trim_start_matches("0x");
    let mut bits = Vec::with_capacity(n_bits);
    for c in hex.chars().rev() {
        let v = c
            .to_digit(16)
            .ok_or_else(|| invalid("key", "not a hex digit"))?;
        for j in 0..4 {
            bits.push(v & (1 << j) != 0);
        }
    }
    if bits.iter().skip(n_bits).any(|&b| b) {
        return Err(invalid("key", "wider than the declared bit length"));
    }
    bits.resize(n_bits, false);
    Ok(bits)
}

/// `message^d mod modulus` by the LSB-first square-and-multiply loop.
pub fn modexp(message: &BigUint, d: &[bool], modulus: &BigUint) -> Result<BigUint> {
    if *modulus < BigUint::from(2u32) {
        return Err(Error::ModulusTooSmall);
    }
    if message >= modulus {
        return Err(Error::MessageOutOfRange);
    }
    let mut r = BigUint::one();
    let mut s = message.clone();
    for &bit in d {
        if bit {
            r = (&r * &s) % modulus;
        }
        s = (&s * &s) % modulus;
    }
    Ok(r)
}

/// Power and timing of the victim's arithmetic units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VictimPowerParams {
    pub p_square: f64,
    pub p_mult: f64,
    pub p_idle: f64,
    pub t_square: u32,
    pub t_mult: u32,
    pub location: Location,
}

impl Default for VictimPowerParams {
    fn default() -> Self {
        Self {
            p_square: 0.148,
            p_mult: 0.3,
            p_idle: 0.0,
            t_square: 100,
            t_mult: 100,
            location: Location::new(16, 32),
        }
    }
}

impl VictimPowerParams {
    /// Equal multiply and square power is accepted: it is the zero-contrast
    /// victim that leakage tests use as a negative control.
    pub fn validate(&self) -> Result<()> {
        if !(self.p_idle >= 0.0) {
            return Err(invalid("victim.p_idle", "must be >= 0"));
        }
        if !(self.p_square >= self.p_idle) {
            return Err(invalid("victim.p_square", "must be >= p_idle"));
        }
        if !(self.p_mult >= self.p_square) {
            return Err(invalid("victim.p_mult", "must be >= p_square"));
        }
        if self.t_square == 0 || self.t_mult == 0 {
            return Err(invalid("victim.t_square", "segment durations must be >= 1 tick"));
        }
        Ok(())
    }

    pub fn has_contrast(&self) -> bool {
        self.p_mult > self.p_square
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Multiply,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: u64,
    pub duration: u32,
    pub power: f64,
    pub bit: usize,
    pub step: Step,
}

impl Segment {
    pub fn end(&self) -> u64 {
        self.start + self.duration as u64
    }
}

/// Piecewise-constant power demand of one exponentiation.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSchedule {
    segments: Vec<Segment>,
    total_ticks: u64,
    p_idle: f64,
    n_bits: usize,
}

impl PowerSchedule {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_ticks(&self) -> u64 {
        self.total_ticks
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    /// Power at `tick`; a tick on a boundary belongs to the later segment.
    pub fn power_at(&self, tick: u64) -> f64 {
        if tick >= self.total_ticks {
            return self.p_idle;
        }
        let idx = self.segments.partition_point(|s| s.end() <= tick);
        self.segments[idx].power
    }

    /// `[start, end)` tick range of every key bit.
    pub fn bit_slots(&self) -> Vec<(u64, u64)> {
        let mut slots: Vec<(u64, u64)> = Vec::with_capacity(self.n_bits);
        for seg in &self.segments {
            if seg.bit == slots.len() {
                slots.push((seg.start, seg.end()));
            } else {
                slots[seg.bit].1 = seg.end();
            }
        }
        slots
    }

    /// Fill `out` with the demand for each tick in `[0, out.len())`.
    pub fn fill_ticks(&self, out: &mut [f64]) {
        let mut t = 0usize;
        for seg in &self.segments {
            let end = (seg.end() as usize).min(out.len());
            while t < end {
                out[t] = seg.power;
                t += 1;
            }
        }
        for v in &mut out[t..] {
            *v = self.p_idle;
        }
    }
}

pub fn build_power_schedule(bits: &[bool], params: &VictimPowerParams) -> PowerSchedule {
    let mut segments = Vec::with_capacity(bits.len() * 2);
    let mut start = 0u64;
    for (i, &bit) in bits.iter().enumerate() {
        if bit {
            segments.push(Segment {
                start,
                duration: params.t_mult,
                power: params.p_mult,
                bit: i,
                step: Step::Multiply,
            });
            start += params.t_mult as u64;
        }
        segments.push(Segment {
            start,
            duration: params.t_square,
            power: params.p_square,
            bit: i,
            step: Step::Square,
        });
        start += params.t_square as u64;
    }
    PowerSchedule {
        segments,
        total_ticks: start,
        p_idle: params.p_idle,
        n_bits: bits.len(),
    }
}

/// Piecewise-constant lookup into a schedule.
pub fn victim_power_at(schedule: &PowerSchedule, tick: u64) -> f64 {
    schedule.power_at(tick)
}
