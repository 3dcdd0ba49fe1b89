//! Arithmetic on the finite quotient `G_l = Z_p / p^l Z_p`.
//!
//! A cell `I = I_0 + I_1 p + ... + I_{l-1} p^{l-1}` is stored as the integer
//! it represents, so cells are ordered by integer value everywhere in the
//! crate. Norms of differences are `p^{-v}` where `v` is the `p`-adic
//! valuation of `I - K mod p^l`; the difference `0` has infinite valuation
//! and norm exactly `0`.

use std::fmt;

use crate::error::{Error, Result};

const MAX_GRID: u64 = 1 << 31;

/// The pair `(p, l)` fixing the grid `G_l` and its Haar weight `p^{-l}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupScheme {
    p: u32,
    l: u32,
    size: usize,
}

impl GroupScheme {
    pub fn new(p: u32, l: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if l == 0 {
            return Err(Error::ZeroLevel);
        }
        let size = (p as u64)
            .checked_pow(l)
            .filter(|&s| s <= MAX_GRID)
            .ok_or(Error::GridTooLarge { p, l })?;
        Ok(Self {
            p,
            l,
            size: size as usize,
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// Number of cells, `p^l`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Haar measure of one cell, `p^{-l}`.
    pub fn haar_weight(&self) -> f64 {
        1.0 / self.size as f64
    }

    /// `p^k` as an integer; `k <= l` always fits.
    pub fn pow(&self, k: u32) -> usize {
        (self.p as usize).pow(k)
    }

    pub fn cell(&self, value: usize) -> Result<CellIndex> {
        if value < self.size {
            Ok(CellIndex(value))
        } else {
            Err(Error::CellOutOfRange {
                index: value,
                size: self.size,
            })
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> {
        (0..self.size).map(CellIndex)
    }

    /// Base-`p` digits `I_0, ..., I_{l-1}`, least significant first.
    pub fn digits(&self, cell: CellIndex) -> Vec<u32> {
        let mut v = cell.0;
        (0..self.l)
            .map(|_| {
                let d = v % self.p as usize;
                v /= self.p as usize;
                d as u32
            })
            .collect()
    }

    pub fn from_digits(&self, digits: &[u32]) -> Result<CellIndex> {
        if digits.len() != self.l as usize {
            return Err(Error::DimensionMismatch {
                expected: self.l as usize,
                found: digits.len(),
            });
        }
        let mut value = 0usize;
        for &d in digits.iter().rev() {
            if d >= self.p {
                return Err(Error::CellOutOfRange {
                    index: d as usize,
                    size: self.p as usize,
                });
            }
            value = value * self.p as usize + d as usize;
        }
        Ok(CellIndex(value))
    }

    pub fn add(&self, a: CellIndex, b: CellIndex) -> CellIndex {
        CellIndex((a.0 + b.0) % self.size)
    }

    pub fn sub(&self, a: CellIndex, b: CellIndex) -> CellIndex {
        CellIndex((a.0 + self.size - b.0) % self.size)
    }

    /// `ord_p(i - k)` on the grid, capped at `l`; infinite iff `i == k`.
    pub fn valuation(&self, i: CellIndex, k: CellIndex) -> Valuation {
        match self.valuation_raw(i.0, k.0) {
            Some(v) => Valuation::Finite(v),
            None => Valuation::Infinite,
        }
    }

    /// `|i - k|_p`.
    pub fn padic_norm(&self, i: CellIndex, k: CellIndex) -> f64 {
        match self.valuation_raw(i.0, k.0) {
            Some(v) => self.norm_at_level(v),
            None => 0.0,
        }
    }

    /// `p^{-v}`.
    pub fn norm_at_level(&self, v: u32) -> f64 {
        1.0 / self.pow(v) as f64
    }

    pub(crate) fn valuation_raw(&self, i: usize, k: usize) -> Option<u32> {
        let mut d = (i + self.size - k) % self.size;
        if d == 0 {
            return None;
        }
        let p = self.p as usize;
        let mut v = 0;
        while d.is_multiple_of(p) {
            d /= p;
            v += 1;
        }
        Some(v)
    }

    /// Cells of the ball `center + p^r Z_p`, in increasing order.
    pub fn ball_members(&self, ball: BallSpec) -> Result<Vec<CellIndex>> {
        self.check_ball(ball)?;
        let step = self.pow(ball.level);
        let start = ball.center.0 % step;
        Ok((start..self.size).step_by(step).map(CellIndex).collect())
    }

    pub fn in_ball(&self, ball: BallSpec, cell: CellIndex) -> bool {
        let step = self.pow(ball.level.min(self.l));
        cell.0 % step == ball.center.0 % step
    }

    pub fn check_ball(&self, ball: BallSpec) -> Result<()> {
        if ball.level > self.l {
            return Err(Error::BallLevelOutOfRange {
                level: ball.level,
                max: self.l,
            });
        }
        if ball.center.0 >= self.size {
            return Err(Error::CellOutOfRange {
                index: ball.center.0,
                size: self.size,
            });
        }
        Ok(())
    }

    /// Number of nonzero cells with `|I|_p = p^{-j}`: `p^{l-j} - p^{l-j-1}`.
    pub fn sphere_count(&self, j: u32) -> usize {
        debug_assert!(j < self.l);
        self.pow(self.l - j) - self.pow(self.l - j - 1)
    }
}

impl fmt::Display for GroupScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G_{}(p={})", self.l, self.p)
    }
}

/// A cell of `G_l`, identified with an integer in `[0, p^l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex(pub(crate) usize);

impl CellIndex {
    pub fn value(self) -> usize {
        self.0
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

/// The ball `center + p^level Z_p` restricted to the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallSpec {
    pub center: CellIndex,
    pub level: u32,
}

impl BallSpec {
    pub fn new(center: CellIndex, level: u32) -> Self {
        Self { center, level }
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let n = n as u64;
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}
