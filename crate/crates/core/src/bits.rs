//! Bit strings and conjugate-coding basis strings.
//!
//! Position 0 is the leftmost character of the textual form and the most
//! significant index when a string of qubits is flattened into a state
//! vector.

use core::fmt;
use core::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Longest supported string; dimensions grow as 2^len so this is generous.
pub const MAX_LEN: usize = 20;

/// A fixed-length binary string over GF(2).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    bits: u32,
}

impl BitString {
    /// All-zero string of the given length.
    pub fn zeros(len: usize) -> Result<Self> {
        if len == 0 || len > MAX_LEN {
            return Err(Error::InvalidBitString(format!(
                "length must be in 1..={MAX_LEN}, got {len}"
            )));
        }
        Ok(Self { len, bits: 0 })
    }

    /// Builds from a raw mask where bit `i` of `bits` is position `i`.
    pub fn from_mask(bits: u32, len: usize) -> Result<Self> {
        let mut s = Self::zeros(len)?;
        if len < 32 && bits >> len != 0 {
            return Err(Error::InvalidBitString(format!(
                "mask {bits:#x} does not fit in {len} positions"
            )));
        }
        s.bits = bits;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn mask(&self) -> u32 {
        self.bits
    }

    pub fn get(&self, pos: usize) -> bool {
        debug_assert!(pos < self.len);
        self.bits >> pos & 1 == 1
    }

    pub fn set(&mut self, pos: usize, value: bool) {
        debug_assert!(pos < self.len);
        if value {
            self.bits |= 1 << pos;
        } else {
            self.bits &= !(1 << pos);
        }
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self {
            len: self.len,
            bits: self.bits ^ other.bits,
        })
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    /// GF(2) inner product: parity of the bitwise AND.
    pub fn inner(&self, other: &Self) -> Result<bool> {
        self.check_len(other)?;
        Ok((self.bits & other.bits).count_ones() % 2 == 1)
    }

    /// Index of the computational basis state |b_0 b_1 ... b_{n-1}⟩ with
    /// position 0 most significant.
    pub fn basis_index(&self) -> usize {
        let mut idx = 0usize;
        for pos in 0..self.len {
            idx = idx << 1 | usize::from(self.get(pos));
        }
        idx
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn from_basis_index(index: usize, len: usize) -> Result<Self> {
        let mut s = Self::zeros(len)?;
        if index >> len != 0 {
            return Err(Error::InvalidBitString(format!(
                "index {index} out of range for {len} positions"
            )));
        }
        for pos in 0..len {
            s.set(pos, index >> (len - 1 - pos) & 1 == 1);
        }
        Ok(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch(format!(
                "bit strings of lengths {} and {}",
                self.len, other.len
            )));
        }
        Ok(())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Self::zeros(s.chars().count())?;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => out.set(i, true),
                _ => {
                    return Err(Error::InvalidBitString(format!(
                        "unexpected character {ch:?} in {s:?}"
                    )))
                }
            }
        }
        Ok(out)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Conjugate-coding basis of a single qubit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Basis {
    /// Computational ("+") basis.
    Plus,
    /// Hadamard ("x") basis.
    Times,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Plus => write!(f, "+"),
            Basis::Times => write!(f, "x"),
        }
    }
}

/// A string of per-qubit bases, e.g. `+x+x`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisString {
    len: usize,
    /// Bit set means Hadamard basis at that position.
    mask: u32,
}

impl BasisString {
    pub fn all_plus(len: usize) -> Result<Self> {
        let b = BitString::zeros(len)?;
        Ok(Self {
            len,
            mask: b.mask(),
        })
    }

    pub fn all_times(len: usize) -> Result<Self> {
        let mut s = Self::all_plus(len)?;
        for i in 0..len {
            s.set(i, Basis::Times);
        }
        Ok(s)
    }

    /// The `index`-th of the 2^len basis strings; bit `pos` of `index`
    /// (counting from the most significant of `len` bits) selects Hadamard.
    pub fn from_index(index: usize, len: usize) -> Result<Self> {
        let b = BitString::from_basis_index(index, len)?;
        Ok(Self {
            len,
            mask: b.mask(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, pos: usize) -> Basis {
        debug_assert!(pos < self.len);
        if self.mask >> pos & 1 == 1 {
            Basis::Times
        } else {
            Basis::Plus
        }
    }

    pub fn set(&mut self, pos: usize, basis: Basis) {
        debug_assert!(pos < self.len);
        match basis {
            Basis::Times => self.mask |= 1 << pos,
            Basis::Plus => self.mask &= !(1 << pos),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Basis> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl fmt::Display for BasisString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BasisString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasisString({self})")
    }
}

impl FromStr for BasisString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Self::all_plus(s.chars().count())?;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '+' => {}
                'x' | 'X' | '×' => out.set(i, Basis::Times),
                _ => {
                    return Err(Error::InvalidBitString(format!(
                        "unexpected character {ch:?} in basis string {s:?}"
                    )))
                }
            }
        }
        Ok(out)
    }
}

impl Serialize for BasisString {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BasisString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let b: BitString = "1010".parse().unwrap();
        assert_eq!(b.to_string(), "1010");
        assert_eq!(b.weight(), 2);
        assert!(b.get(0) && !b.get(1));

        let t: BasisString = "+x+x".parse().unwrap();
        assert_eq!(t.to_string(), "+x+x");
        assert_eq!(t.get(1), Basis::Times);
    }

    #[test]
    fn basis_index_is_msb_first() {
        let b: BitString = "100".parse().unwrap();
        assert_eq!(b.basis_index(), 4);
        let b: BitString = "011".parse().unwrap();
        assert_eq!(b.basis_index(), 3);
        let back = BitString::from_basis_index(3, 3).unwrap();
        assert_eq!(back.to_string(), "011");
    }

    #[test]
    fn inner_product_is_parity_of_and() {
        let c: BitString = "1010".parse().unwrap();
        let r: BitString = "1110".parse().unwrap();
        // overlapping ones at positions 0 and 2 -> parity 0
        assert!(!c.inner(&r).unwrap());
        let c: BitString = "1111".parse().unwrap();
        let r: BitString = "1000".parse().unwrap();
        assert!(c.inner(&r).unwrap());
    }

    #[test]
    fn rejects_bad_characters_and_lengths() {
        assert!("10a2".parse::<BitString>().is_err());
        assert!("".parse::<BitString>().is_err());
        let a: BitString = "10".parse().unwrap();
        let b: BitString = "100".parse().unwrap();
        assert!(a.inner(&b).is_err());
    }
}
