//! The QUBO instance type: construction, triangular normalization, energy
//! evaluation, discrete derivatives, dynamic range, Ising conversion, and
//! seeded random generation.
//!
//! An instance is characterized by an upper-triangular weight matrix `Q`
//! (diagonal included): the energy of a binary vector `x` is
//! `E(x) = sum_{i<=j} Q[i][j] * x_i * x_j`, and lower is better. Diagonal
//! entries act as linear coefficients since `x_i^2 = x_i` on {0,1}.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bitvec::{BitMatrix, BitVector};
use crate::error::{Error, Result};

/// Weight distribution used by [`QuboInstance::random`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightDistribution {
    /// Standard normal.
    Normal,
    /// Uniform on [-1, 1].
    Uniform,
}

impl std::str::FromStr for WeightDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Self::Normal),
            "uniform" => Ok(Self::Uniform),
            _ => Err(Error::InvalidParameter(format!(
                "unknown distribution {s:?}, expected \"normal\" or \"uniform\""
            ))),
        }
    }
}

/// A QUBO instance in upper-triangular form.
///
/// Immutable after construction; shared reads are safe.
#[derive(Clone, Debug, PartialEq)]
pub struct QuboInstance {
    n: usize,
    /// Row-major `n * n`; every entry strictly below the diagonal is 0.
    w: Vec<f64>,
}

impl QuboInstance {
    /// Builds an instance from an arbitrary square matrix, folding it into
    /// upper-triangular form: entries at `(i, j)` and `(j, i)` with `i < j`
    /// are summed into `(i, j)`. The quadratic form over binary vectors is
    /// preserved.
    pub fn from_matrix(m: &[Vec<f64>]) -> Result<Self> {
        let n = m.len();
        for (i, row) in m.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NonSquareMatrix {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteWeight { row: i, col: j });
                }
            }
        }
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = m[i][i];
            for j in i + 1..n {
                w[i * n + j] = m[i][j] + m[j][i];
            }
        }
        Ok(Self { n, w })
    }

    pub(crate) fn zeros(n: usize) -> Self {
        Self {
            n,
            w: vec![0.0; n * n],
        }
    }

    pub(crate) fn set_weight(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i <= j && j < self.n);
        self.w[i * self.n + j] = v;
    }

    pub(crate) fn add_weight(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i <= j && j < self.n);
        self.w[i * self.n + j] += v;
    }

    /// Samples a random instance. Every upper-triangle position (diagonal
    /// included) is nonzero independently with probability `density`, with
    /// values drawn from `distr`. Deterministic in the seed.
    pub fn random(
        n: usize,
        distr: WeightDistribution,
        density: f64,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::InvalidDensity(density));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                if rng.random::<f64>() < density {
                    let v = match distr {
                        WeightDistribution::Normal => standard_normal(&mut rng),
                        WeightDistribution::Uniform => rng.random_range(-1.0..=1.0),
                    };
                    q.set_weight(i, j, v);
                }
            }
        }
        Ok(q)
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The weight at `(i, j)`. Entries below the diagonal are zero.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    /// The full weight matrix as rows (upper-triangular).
    pub fn weights(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.w[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }

    /// Symmetrized coupling between two distinct variables: the single
    /// triangle entry that carries their interaction. Zero when `i == j`.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else if i < j {
            self.w[i * self.n + j]
        } else {
            self.w[j * self.n + i]
        }
    }

    /// Number of nonzero entries in the upper triangle (diagonal included).
    pub fn nonzero_count(&self) -> usize {
        let mut nnz = 0;
        for i in 0..self.n {
            for j in i..self.n {
                if self.w[i * self.n + j] != 0.0 {
                    nnz += 1;
                }
            }
        }
        nnz
    }

    /// Fraction of nonzero upper-triangle entries.
    pub fn density(&self) -> f64 {
        let slots = self.n * (self.n + 1) / 2;
        if slots == 0 {
            0.0
        } else {
            self.nonzero_count() as f64 / slots as f64
        }
    }

    /// Energy of a single vector.
    pub fn energy(&self, x: &[bool]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &[bool]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            if !x[i] {
                continue;
            }
            let row = &self.w[i * self.n..(i + 1) * self.n];
            e += row[i];
            for j in i + 1..self.n {
                if x[j] {
                    e += row[j];
                }
            }
        }
        e
    }

    /// Energy of every row of a batch. Rows evaluate independently (and in
    /// parallel for large batches); the output order matches the input.
    pub fn energy_batch(&self, xs: &BitMatrix) -> Result<Vec<f64>> {
        if xs.num_cols() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: xs.num_cols(),
            });
        }
        let rows: Vec<usize> = (0..xs.num_rows()).collect();
        Ok(rows
            .par_iter()
            .map(|&r| self.energy_unchecked(xs.row(r)))
            .collect())
    }

    /// First discrete derivative: component `i` is the change in energy
    /// when bit `i` of `x` is flipped.
    pub fn dx(&self, x: &[bool]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok(self.dx_unchecked(x))
    }

    pub(crate) fn dx_unchecked(&self, x: &[bool]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let mut acc = self.w[i * self.n + i];
                for j in 0..i {
                    if x[j] {
                        acc += self.w[j * self.n + i];
                    }
                }
                for j in i + 1..self.n {
                    if x[j] {
                        acc += self.w[i * self.n + j];
                    }
                }
                if x[i] {
                    -acc
                } else {
                    acc
                }
            })
            .collect()
    }

    /// First discrete derivative of every row of a batch.
    pub fn dx_batch(&self, xs: &BitMatrix) -> Result<Vec<Vec<f64>>> {
        if xs.num_cols() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: xs.num_cols(),
            });
        }
        let rows: Vec<usize> = (0..xs.num_rows()).collect();
        Ok(rows
            .par_iter()
            .map(|&r| self.dx_unchecked(xs.row(r)))
            .collect())
    }

    /// Second discrete derivative: entry `(i, j)` is the change in energy
    /// when bits `i` and `j` are flipped at the same time. The diagonal
    /// equals [`QuboInstance::dx`]. The result is symmetric.
    pub fn dx2(&self, x: &[bool]) -> Result<Vec<Vec<f64>>> {
        self.check_len(x)?;
        let dx = self.dx_unchecked(x);
        let mut out = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            out[i][i] = dx[i];
            let si = if x[i] { -1.0 } else { 1.0 };
            for j in i + 1..self.n {
                let sj = if x[j] { -1.0 } else { 1.0 };
                let v = dx[i] + dx[j] + si * sj * self.w[i * self.n + j];
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        Ok(out)
    }

    /// Dynamic range: `log2(max D / min D)` where `D` is the set of absolute
    /// differences between distinct parameter values of the upper triangle
    /// (explicit zeros included). Zero when fewer than two distinct values
    /// exist.
    pub fn dynamic_range(&self) -> f64 {
        let mut vals: Vec<f64> = Vec::with_capacity(self.n * (self.n + 1) / 2);
        for i in 0..self.n {
            for j in i..self.n {
                vals.push(self.w[i * self.n + j]);
            }
        }
        dynamic_range_of_values(&mut vals)
    }

    /// Equivalent Ising model over spins `s_i = 2 x_i - 1`.
    pub fn to_ising(&self) -> IsingModel {
        let n = self.n;
        let mut h = vec![0.0; n];
        let mut j_mat = vec![vec![0.0; n]; n];
        let mut constant = 0.0;
        for i in 0..n {
            let qii = self.w[i * n + i];
            let mut coupling_sum = 0.0;
            for k in 0..i {
                coupling_sum += self.w[k * n + i];
            }
            for k in i + 1..n {
                coupling_sum += self.w[i * n + k];
            }
            h[i] = qii / 2.0 + coupling_sum / 4.0;
            constant += qii / 2.0;
            for jj in i + 1..n {
                let qij = self.w[i * n + jj];
                j_mat[i][jj] = qij / 4.0;
                constant += qij / 4.0;
            }
        }
        IsingModel {
            h,
            j: j_mat,
            constant,
        }
    }

    fn check_len(&self, x: &[bool]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Dynamic range of a multiset of parameter values; `vals` is scratch space.
pub(crate) fn dynamic_range_of_values(vals: &mut [f64]) -> f64 {
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut min_gap = f64::INFINITY;
    let mut distinct = 0usize;
    let mut prev = f64::NAN;
    let mut lo = 0.0;
    let mut hi = 0.0;
    for &v in vals.iter() {
        if distinct == 0 {
            lo = v;
        } else if v != prev {
            let gap = v - prev;
            if gap < min_gap {
                min_gap = gap;
            }
        } else {
            continue;
        }
        hi = v;
        prev = v;
        distinct += 1;
    }
    if distinct < 2 {
        return 0.0;
    }
    ((hi - lo) / min_gap).log2()
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// The Ising form of an instance: fields `h`, couplings `J` (upper-triangular
/// with zero diagonal), and an additive constant, over spins in {-1, +1}.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel {
    pub h: Vec<f64>,
    pub j: Vec<Vec<f64>>,
    pub constant: f64,
}

impl IsingModel {
    pub fn n(&self) -> usize {
        self.h.len()
    }

    /// Energy of a spin configuration.
    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.h.len() {
            return Err(Error::LengthMismatch {
                expected: self.h.len(),
                got: spins.len(),
            });
        }
        let mut e = self.constant;
        for i in 0..self.h.len() {
            e += self.h[i] * spins[i] as f64;
            for j in i + 1..self.h.len() {
                e += self.j[i][j] * (spins[i] as f64) * (spins[j] as f64);
            }
        }
        Ok(e)
    }
}

/// A solved assignment: the vector, its energy, and solver diagnostics.
#[derive(Clone, Debug)]
pub struct Solution {
    pub x: BitVector,
    pub energy: f64,
    pub meta: BTreeMap<String, String>,
}

impl Solution {
    pub fn new(x: BitVector, energy: f64) -> Self {
        Self {
            x,
            energy,
            meta: BTreeMap::new(),
        }
    }

    pub(crate) fn with_meta<const N: usize>(
        x: BitVector,
        energy: f64,
        entries: [(&str, String); N],
    ) -> Self {
        let mut meta = BTreeMap::new();
        for (k, v) in entries {
            meta.insert(k.to_string(), v);
        }
        Self { x, energy, meta }
    }
}
