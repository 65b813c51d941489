//! Fixed-point path lengths.
//!
//! Shortest-path values are accumulated as integer multiples of
//! [`FixedLength::QUANTUM`]. Integer sums are associative, so distances
//! produced by any search (in either direction, in any order) satisfy
//! symmetry and the triangle inequality exactly, and convert to `f64`
//! without rounding as long as they stay below [`FixedLength::MAX_EXACT`].

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FixedLength(u64);

impl FixedLength {
    pub const FRACTION_BITS: u32 = 40;
    /// 2^-40.
    pub const QUANTUM: f64 = 1.0 / (1u64 << Self::FRACTION_BITS) as f64;
    /// Largest length (2^13) whose tick count fits in an f64 mantissa.
    pub const MAX_EXACT: f64 = (1u64 << (53 - Self::FRACTION_BITS)) as f64;
    pub const ZERO: FixedLength = FixedLength(0);
    pub const INFINITY: FixedLength = FixedLength(u64::MAX);

    /// Rounds a finite non-negative value to the nearest tick.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "length must be finite and non-negative, got {x}"
            )));
        }
        if x >= Self::MAX_EXACT {
            return Err(Error::InvalidArgument(format!(
                "length {x} exceeds the fixed-point range {}",
                Self::MAX_EXACT
            )));
        }
        Ok(FixedLength((x * (1u64 << Self::FRACTION_BITS) as f64).round() as u64))
    }

    /// Smallest tick count not below `x`.
    pub fn from_f64_ceil(x: f64) -> Result<Self> {
        let r = Self::from_f64(x)?;
        if r.to_f64() < x {
            Ok(FixedLength(r.0 + 1))
        } else {
            Ok(r)
        }
    }

    pub const fn from_ticks(ticks: u64) -> Self {
        FixedLength(ticks)
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0 == u64::MAX
    }

    pub fn to_f64(self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            self.0 as f64 * Self::QUANTUM
        }
    }

    pub fn abs_diff(self, other: Self) -> Self {
        FixedLength(self.0.abs_diff(other.0))
    }
}

impl Add for FixedLength {
    type Output = FixedLength;
    fn add(self, rhs: Self) -> Self {
        FixedLength(self.0.saturating_add(rhs.0))
    }
}

impl AddAssign for FixedLength {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for FixedLength {
    type Output = FixedLength;
    fn sub(self, rhs: Self) -> Self {
        FixedLength(self.0.saturating_sub(rhs.0))
    }
}

impl Mul<u64> for FixedLength {
    type Output = FixedLength;
    fn mul(self, rhs: u64) -> Self {
        FixedLength(self.0.saturating_mul(rhs))
    }
}

impl fmt::Display for FixedLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}
