//! Binary linear codes given by generator matrices over GF(2).

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Descriptor accepted by [`make_code`]: a built-in code or an explicit
/// generator matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum CodeSpec {
    /// The [4,2] toy code generated by 1010 and 0101.
    Toy4x2,
    /// The [8,4] extended Hamming code (minimum distance 4).
    ExtendedHamming8x4,
    /// Explicit generator rows.
    Generator(Vec<BitString>),
}

/// A binary [n, k] linear code, stored as generator rows plus the
/// enumerated codeword set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    length: usize,
    dimension: usize,
    generator: Vec<BitString>,
    /// All 2^k codeword masks, sorted for membership tests.
    codewords: Vec<u32>,
}

impl LinearCode {
    /// Builds a code from generator rows. The rows must be linearly
    /// independent over GF(2).
    pub fn new(generator: Vec<BitString>) -> Result<Self> {
        let length = match generator.first() {
            Some(row) => row.len(),
            None => return Err(Error::InvalidCode("empty generator".into())),
        };
        for row in &generator {
            if row.len() != length {
                return Err(Error::InvalidCode(
                    "generator rows of unequal length".into(),
                ));
            }
        }
        let dimension = generator.len();
        if dimension > length {
            return Err(Error::InvalidCode(format!(
                "dimension {dimension} exceeds length {length}"
            )));
        }
        if gf2_rank(generator.iter().map(|r| r.mask())) != dimension {
            return Err(Error::InvalidCode(
                "generator rows are linearly dependent over GF(2)".into(),
            ));
        }

        // Span enumeration: XOR of every subset of rows.
        let mut codewords = Vec::with_capacity(1 << dimension);
        for combo in 0u32..(1 << dimension) {
            let mut word = 0u32;
            for (i, row) in generator.iter().enumerate() {
                if combo >> i & 1 == 1 {
                    word ^= row.mask();
                }
            }
            codewords.push(word);
        }
        codewords.sort_unstable();
        debug_assert!(codewords.windows(2).all(|w| w[0] != w[1]));

        Ok(Self {
            length,
            dimension,
            generator,
            codewords,
        })
    }

    pub fn toy_4x2() -> Self {
        Self::new(vec!["1010".parse().unwrap(), "0101".parse().unwrap()])
            .expect("built-in code is valid")
    }

    pub fn extended_hamming_8x4() -> Self {
        Self::new(vec![
            "10000111".parse().unwrap(),
            "01001011".parse().unwrap(),
            "00101101".parse().unwrap(),
            "00011110".parse().unwrap(),
        ])
        .expect("built-in code is valid")
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn generator(&self) -> &[BitString] {
        &self.generator
    }

    pub fn contains(&self, word: &BitString) -> bool {
        word.len() == self.length && self.codewords.binary_search(&word.mask()).is_ok()
    }

    pub fn codewords(&self) -> impl Iterator<Item = BitString> + '_ {
        self.codewords
            .iter()
            .map(move |&mask| BitString::from_mask(mask, self.length).expect("stored codeword"))
    }

    pub fn num_codewords(&self) -> usize {
        self.codewords.len()
    }

    /// Minimum Hamming weight of the nonzero codewords, by brute force.
    pub fn minimum_distance(&self) -> u32 {
        self.codewords
            .iter()
            .filter(|&&w| w != 0)
            .map(|w| w.count_ones())
            .min()
            .unwrap_or(0)
    }
}

/// GF(2) inner product c ⊙ r: the parity of the bitwise AND. This is the
/// reading under which {c ∈ C | c ⊙ r = b} splits a code into two cosets.
pub fn inner_bit(c: &BitString, r: &BitString) -> Result<bool> {
    c.inner(r)
}

pub fn make_code(spec: &CodeSpec) -> Result<LinearCode> {
    match spec {
        CodeSpec::Toy4x2 => Ok(LinearCode::toy_4x2()),
        CodeSpec::ExtendedHamming8x4 => Ok(LinearCode::extended_hamming_8x4()),
        CodeSpec::Generator(rows) => LinearCode::new(rows.clone()),
    }
}

fn gf2_rank(rows: impl Iterator<Item = u32>) -> usize {
    let mut basis: Vec<u32> = Vec::new();
    for mut row in rows {
        for &b in &basis {
            let pivot = 1u32 << (31 - b.leading_zeros());
            if row & pivot != 0 {
                row ^= b;
            }
        }
        if row != 0 {
            basis.push(row);
        }
    }
    basis.len()
}
