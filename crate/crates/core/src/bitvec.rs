//! Binary vectors and matrices: parsing, formatting, enumeration in index
//! and Gray-code order, and seeded random generation.
//!
//! The global bit-order convention: string/array position `p` is variable
//! `x_p`, and the integer index `k` of a vector encodes `x_i = (k >> i) & 1`,
//! so `x_0` is the least significant bit.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest `n` for which `all_bitvectors_array` will materialize all
/// `2^n` rows by default.
pub const DEFAULT_ARRAY_CAP: usize = 20;

/// Largest `n` supported by the integer index convention.
pub const MAX_INDEX_BITS: usize = 63;

/// An owned vector over {0,1}.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    bits: Vec<bool>,
}

impl BitVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    /// Parses a string of '0' and '1' characters, one per variable.
    pub fn from_string(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Parse {
                position: 0,
                message: "empty bit string".into(),
            });
        }
        let mut bits = Vec::with_capacity(s.len());
        for (pos, c) in s.char_indices() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => {
                    return Err(Error::Parse {
                        position: pos,
                        message: format!("expected '0' or '1', found {c:?}"),
                    })
                }
            }
        }
        Ok(Self { bits })
    }

    /// The vector whose integer index is `k`: bit `i` is `(k >> i) & 1`.
    pub fn from_index(k: u64, n: usize) -> Self {
        let bits = (0..n).map(|i| (k >> i) & 1 == 1).collect();
        Self { bits }
    }

    /// Integer index of this vector under the global convention.
    ///
    /// Panics if the vector is longer than [`MAX_INDEX_BITS`].
    pub fn to_index(&self) -> u64 {
        assert!(self.bits.len() <= MAX_INDEX_BITS, "vector too long for u64 index");
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }
}

impl Deref for BitVector {
    type Target = [bool];

    fn deref(&self) -> &[bool] {
        &self.bits
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_string(s)
    }
}

impl From<Vec<bool>> for BitVector {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

/// A rectangular collection of bit vectors, one per row.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BitMatrix {
    pub fn from_rows(rows: &[BitVector]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[bool]> {
        (0..self.rows).map(move |r| self.row(r))
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix({}x{})", self.rows, self.cols)
    }
}

fn check_enum_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n > MAX_INDEX_BITS {
        return Err(Error::ResourceCap {
            operation: "bit vector enumeration",
            n,
            cap: MAX_INDEX_BITS,
        });
    }
    Ok(())
}

/// Streams all `2^n` vectors in ascending integer-index order.
pub fn all_bitvectors(n: usize) -> Result<impl Iterator<Item = BitVector>> {
    check_enum_size(n)?;
    Ok((0..(1u64 << n)).map(move |k| BitVector::from_index(k, n)))
}

/// Materializes all `2^n` vectors as a `(2^n, n)` matrix.
pub fn all_bitvectors_array(n: usize) -> Result<BitMatrix> {
    all_bitvectors_array_capped(n, DEFAULT_ARRAY_CAP)
}

/// As [`all_bitvectors_array`] with an explicit size cap.
pub fn all_bitvectors_array_capped(n: usize, cap: usize) -> Result<BitMatrix> {
    check_enum_size(n)?;
    if n > cap {
        return Err(Error::ResourceCap {
            operation: "all_bitvectors_array",
            n,
            cap,
        });
    }
    let rows = 1usize << n;
    let mut data = Vec::with_capacity(rows * n);
    for k in 0..rows as u64 {
        for i in 0..n {
            data.push((k >> i) & 1 == 1);
        }
    }
    Ok(BitMatrix {
        rows,
        cols: n,
        data,
    })
}

/// Yields the `2^n - 1` flip positions of the reflected Gray code walk.
///
/// Starting from the all-zeros vector and flipping the yielded bit at each
/// step visits every vector in `{0,1}^n` exactly once. The flip position for
/// step `k` is the number of trailing zeros of `k`.
pub fn gray_sequence(n: usize) -> Result<impl Iterator<Item = usize>> {
    check_enum_size(n)?;
    Ok((1..(1u64 << n)).map(|k| k.trailing_zeros() as usize))
}

/// A uniformly random vector, deterministic in the seed.
pub fn random_bits(n: usize, seed: u64) -> Result<BitVector> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_bits_with(n, &mut rng))
}

pub(crate) fn random_bits_with<R: Rng>(n: usize, rng: &mut R) -> BitVector {
    BitVector::new((0..n).map(|_| rng.random::<bool>()).collect())
}
