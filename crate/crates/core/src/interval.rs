//! Compact real intervals with Markov-difference arithmetic.
//!
//! An [`Interval`] is a pair `[lo, hi]` with `lo <= hi` and both endpoints
//! finite. Construction from an unordered pair sorts the endpoints, so there
//! is no way to build an improper interval.
//!
//! Subtraction is the Markov difference
//! `a ⊖ b = [min(a.lo - b.lo, a.hi - b.hi), max(a.lo - b.lo, a.hi - b.hi)]`,
//! which gives `a ⊖ a = [0, 0]`. It is not the same as `a + (-1)·b`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default tolerance for deciding whether zero lies strictly inside an interval.
pub const DEFAULT_TAU: f64 = 1e-9;

/// A compact interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

fn finite(lo: f64, hi: f64, what: &str) -> Result<Interval> {
    if lo.is_finite() && hi.is_finite() {
        Ok(Interval { lo, hi })
    } else {
        Err(Error::Range(format!("{what} produced [{lo}, {hi}]")))
    }
}

impl Interval {
    /// The null interval `[0, 0]`.
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    /// The unit interval `[1, 1]`.
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    /// Builds an interval from two endpoints in either order.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_nan() || b.is_nan() {
            return Err(Error::Range(format!("NaN endpoint in [{a}, {b}]")));
        }
        finite(a.min(b), a.max(b), "construction")
    }

    /// Degenerate interval `[r, r]`.
    pub fn point(r: f64) -> Result<Self> {
        Self::new(r, r)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Endpoint-wise sum.
    pub fn add(self, other: Interval) -> Result<Interval> {
        finite(self.lo + other.lo, self.hi + other.hi, "addition")
    }

    /// Markov difference `self ⊖ other`.
    pub fn markov_sub(self, other: Interval) -> Result<Interval> {
        let p = self.lo - other.lo;
        let q = self.hi - other.hi;
        finite(p.min(q), p.max(q), "Markov difference")
    }

    /// `[-hi, -lo]`, equal to `[0,0] ⊖ self`.
    pub fn negate(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    /// Scalar product `c ⊙ self`.
    pub fn scale(self, c: f64) -> Result<Interval> {
        if c == 0.0 {
            return Ok(Interval::ZERO);
        }
        let a = c * self.lo;
        let b = c * self.hi;
        finite(a.min(b), a.max(b), "scaling")
    }

    /// Standard interval product (min/max of the four endpoint products).
    pub fn mul(self, other: Interval) -> Result<Interval> {
        let p = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        finite(lo, hi, "product")
    }

    /// `max(|lo|, |hi|)`.
    pub fn norm(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// `max(|a.lo - b.lo|, |a.hi - b.hi|)`.
    pub fn metric(&self, other: &Interval) -> f64 {
        (self.lo - other.lo).abs().max((self.hi - other.hi).abs())
    }

    /// Strict order: both endpoints strictly smaller.
    pub fn strictly_precedes(&self, other: &Interval) -> bool {
        self.lo < other.lo && self.hi < other.hi
    }

    /// Weak order: both endpoints no larger, and not equal.
    pub fn precedes(&self, other: &Interval) -> bool {
        self.lo <= other.lo && self.hi <= other.hi && self != other
    }

    /// `lo < -tau && hi > tau`.
    pub fn zero_in_interior(&self, tau: f64) -> bool {
        self.lo < -tau && self.hi > tau
    }

    pub fn zero_in_closure(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_value(&self, r: f64) -> bool {
        self.lo <= r && r <= self.hi
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Widens both endpoints by `eta >= 0`.
    pub fn inflate(&self, eta: f64) -> Interval {
        Interval {
            lo: self.lo - eta.abs(),
            hi: self.hi + eta.abs(),
        }
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::ZERO
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "[{:.*}, {:.*}]", p, self.lo, p, self.hi),
            None => write!(f, "[{}, {}]", self.lo, self.hi),
        }
    }
}

impl FromStr for Interval {
    type Err = Error;

    /// Parses `[lo,hi]`; whitespace is allowed around the numbers.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse {
            pos: 0,
            msg: format!("{msg} in interval literal {s:?}"),
        };
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| bad("missing brackets"))?;
        let (a, b) = inner.split_once(',').ok_or_else(|| bad("missing comma"))?;
        let a: f64 = a.trim().parse().map_err(|_| bad("bad lower endpoint"))?;
        let b: f64 = b.trim().parse().map_err(|_| bad("bad upper endpoint"))?;
        Interval::new(a, b)
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [a, b] = <[f64; 2]>::deserialize(deserializer)?;
        Interval::new(a, b).map_err(serde::de::Error::custom)
    }
}

/// A vector of intervals, e.g. the gradient box of an interval-valued function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalBox(pub Vec<Interval>);

impl IntervalBox {
    pub fn new(components: Vec<Interval>) -> Self {
        IntervalBox(components)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval> {
        self.0.iter()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.0.iter().map(Interval::lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.0.iter().map(Interval::hi).collect()
    }
}

impl std::ops::Index<usize> for IntervalBox {
    type Output = Interval;

    fn index(&self, i: usize) -> &Interval {
        &self.0[i]
    }
}

impl fmt::Display for IntervalBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            fmt::Display::fmt(c, f)?;
        }
        write!(f, ")")
    }
}
