//! Collections of observed binary vectors treated as empirical
//! distributions: counting, subsampling, sufficient statistics, Hellinger
//! distance, and exact Gibbs sampling for small instances.
//!
//! Samples serialize as text: one bit string per line, with an optional
//! `x<count>` suffix for multiplicities (`0110x3`). The Unicode multiplication
//! sign is accepted in place of `x` when reading.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitvec::BitVector;
use crate::error::{Error, Result};
use crate::instance::QuboInstance;
use crate::probability::{probabilities_capped, DEFAULT_VECTOR_CAP};

/// A multiset of bit vectors of uniform length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinarySample {
    n: usize,
    counts: BTreeMap<BitVector, u64>,
    total: u64,
}

impl BinarySample {
    /// An empty sample over `n`-bit vectors.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    /// Records one observation of `x`.
    pub fn record(&mut self, x: &[bool]) -> Result<()> {
        self.record_count(x, 1)
    }

    /// Records `count` observations of `x`.
    pub fn record_count(&mut self, x: &[bool], count: u64) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if count == 0 {
            return Ok(());
        }
        *self
            .counts
            .entry(BitVector::new(x.to_vec()))
            .or_insert(0) += count;
        self.total += count;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of recorded observations.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct vectors observed.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Iterates `(vector, count)` pairs in ascending vector order.
    pub fn iter(&self) -> impl Iterator<Item = (&BitVector, u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// Fraction of observations equal to `x`; zero for unseen vectors.
    pub fn empirical_probability(&self, x: &[bool]) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptySample);
        }
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let count = self
            .counts
            .get(&BitVector::new(x.to_vec()))
            .copied()
            .unwrap_or(0);
        Ok(count as f64 / self.total as f64)
    }

    /// Draws `m` observations uniformly without replacement. Deterministic
    /// in the seed; `m` must lie in `1..=total`.
    pub fn subsample(&self, m: u64, seed: u64) -> Result<BinarySample> {
        if m == 0 || m > self.total {
            return Err(Error::InvalidParameter(format!(
                "subsample size must lie in 1..={}, got {m}",
                self.total
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = BinarySample::new(self.n);
        let mut remaining = self.total;
        let mut need = m;
        for (x, &count) in &self.counts {
            let mut taken = 0u64;
            for _ in 0..count {
                if need == 0 {
                    break;
                }
                // keep this copy with probability need / remaining
                let u: f64 = rng.random();
                if u * (remaining as f64) < need as f64 {
                    taken += 1;
                    need -= 1;
                }
                remaining -= 1;
            }
            if taken > 0 {
                out.record_count(x, taken)?;
            }
            if need == 0 {
                break;
            }
        }
        Ok(out)
    }

    /// Empirical first and second moments as an upper-triangular matrix:
    /// entry `(i, j)` with `i < j` is the mean of `x_i * x_j`, the diagonal
    /// the mean of `x_i`.
    pub fn sufficient_statistic(&self) -> Result<Vec<Vec<f64>>> {
        if self.total == 0 {
            return Err(Error::EmptySample);
        }
        let mut s = vec![vec![0.0; self.n]; self.n];
        for (x, &count) in &self.counts {
            let weight = count as f64 / self.total as f64;
            for i in 0..self.n {
                if !x[i] {
                    continue;
                }
                s[i][i] += weight;
                for j in i + 1..self.n {
                    if x[j] {
                        s[i][j] += weight;
                    }
                }
            }
        }
        Ok(s)
    }

    /// Text form: one line per distinct vector in ascending order, with an
    /// `x<count>` suffix when the count exceeds one.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (x, count) in self.iter() {
            out.push_str(&x.to_string());
            if count > 1 {
                out.push('x');
                out.push_str(&count.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text form produced by [`BinarySample::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut sample: Option<BinarySample> = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (bits_part, count) = match line.find(['x', '×']) {
                Some(pos) => {
                    let (head, tail) = line.split_at(pos);
                    let tail = tail.trim_start_matches(['x', '×']);
                    let count: u64 = tail.parse().map_err(|_| Error::Parse {
                        position: pos + 1,
                        message: format!("invalid count {tail:?}"),
                    })?;
                    (head, count)
                }
                None => (line, 1),
            };
            let x = BitVector::from_string(bits_part)?;
            let sample = sample.get_or_insert_with(|| BinarySample::new(x.len()));
            sample.record_count(&x, count)?;
        }
        sample.ok_or(Error::EmptySample)
    }
}

/// A distribution over `{0,1}^n`: either empirical or an exact probability
/// vector indexed by the global integer-index convention.
#[derive(Clone, Copy)]
pub enum Distribution<'a> {
    Empirical(&'a BinarySample),
    Exact(&'a [f64]),
}

impl<'a> From<&'a BinarySample> for Distribution<'a> {
    fn from(s: &'a BinarySample) -> Self {
        Distribution::Empirical(s)
    }
}

impl<'a> Distribution<'a> {
    fn num_bits(&self) -> Result<usize> {
        match self {
            Distribution::Empirical(s) => {
                if s.total == 0 {
                    return Err(Error::EmptySample);
                }
                Ok(s.n)
            }
            Distribution::Exact(p) => {
                let len = p.len();
                if len < 2 || !len.is_power_of_two() {
                    return Err(Error::InvalidParameter(format!(
                        "probability vector length must be a power of two >= 2, got {len}"
                    )));
                }
                Ok(len.trailing_zeros() as usize)
            }
        }
    }

    fn prob_of_index(&self, k: u64, n: usize) -> f64 {
        match self {
            Distribution::Empirical(s) => {
                let x = BitVector::from_index(k, n);
                s.counts.get(&x).map_or(0.0, |&c| c as f64 / s.total as f64)
            }
            Distribution::Exact(p) => p[k as usize],
        }
    }
}

/// Hellinger distance `sqrt(sum_k (sqrt(p_k) - sqrt(q_k))^2 / 2)` over the
/// canonical `2^n` indexing; a metric in `[0, 1]`, with 1 exactly for
/// disjoint supports.
pub fn hellinger(p: Distribution, q: Distribution) -> Result<f64> {
    let n = p.num_bits()?;
    let nq = q.num_bits()?;
    if n != nq {
        return Err(Error::LengthMismatch {
            expected: n,
            got: nq,
        });
    }
    let sum = match (p, q) {
        (Distribution::Empirical(a), Distribution::Empirical(b)) => {
            // sparse: only keys of either sample contribute
            let mut sum = 0.0;
            let mut b_keys_not_in_a = 0.0;
            for (x, &count) in &b.counts {
                if !a.counts.contains_key(x) {
                    b_keys_not_in_a += count as f64 / b.total as f64;
                }
            }
            for (x, &count) in &a.counts {
                let pa = count as f64 / a.total as f64;
                let pb = b.counts.get(x).map_or(0.0, |&c| c as f64 / b.total as f64);
                sum += (pa.sqrt() - pb.sqrt()).powi(2);
            }
            sum + b_keys_not_in_a
        }
        _ => {
            if n > DEFAULT_VECTOR_CAP {
                return Err(Error::ResourceCap {
                    operation: "hellinger",
                    n,
                    cap: DEFAULT_VECTOR_CAP,
                });
            }
            let mut sum = 0.0;
            for k in 0..(1u64 << n) {
                let a = p.prob_of_index(k, n);
                let b = q.prob_of_index(k, n);
                sum += (a.sqrt() - b.sqrt()).powi(2);
            }
            sum
        }
    };
    Ok((sum / 2.0).sqrt().min(1.0))
}

/// Draws `m` independent samples from the exact Gibbs distribution of `q`
/// by inverse-CDF over the probability vector. Deterministic in the seed.
pub fn gibbs_sample_exact(
    q: &QuboInstance,
    beta: f64,
    m: u64,
    seed: u64,
) -> Result<BinarySample> {
    gibbs_sample_exact_capped(q, beta, m, seed, DEFAULT_VECTOR_CAP)
}

/// As [`gibbs_sample_exact`] with an explicit size cap.
pub fn gibbs_sample_exact_capped(
    q: &QuboInstance,
    beta: f64,
    m: u64,
    seed: u64,
    cap: usize,
) -> Result<BinarySample> {
    let p = probabilities_capped(q, beta, cap)?;
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &v in &p {
        acc += v;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = BinarySample::new(q.n());
    for _ in 0..m {
        let u: f64 = rng.random();
        let k = cdf.partition_point(|&c| c <= u).min(p.len() - 1);
        sample.record(&BitVector::from_index(k as u64, q.n()))?;
    }
    Ok(sample)
}
