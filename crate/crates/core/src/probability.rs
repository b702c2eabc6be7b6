//! The Gibbs distribution of an instance: `P(x) = exp(-beta * E(x)) / Z`.
//!
//! Everything here enumerates the full state space and is therefore only
//! feasible for small instances; the caps are parameters with conservative
//! defaults.

use crate::error::{Error, Result};
use crate::instance::QuboInstance;
use crate::walk::GrayKernel;

/// Default cap for streaming exact computations (partition function,
/// marginals).
pub const DEFAULT_EXACT_CAP: usize = 26;

/// Default cap for operations that materialize the `2^n` probability vector.
pub const DEFAULT_VECTOR_CAP: usize = 20;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    Ok(())
}

/// Natural log of the partition function `Z = sum_x exp(-beta * E(x))`,
/// computed by streaming Gray-code enumeration with a running log-sum-exp;
/// no `2^n` storage is allocated.
pub fn log_partition(q: &QuboInstance, beta: f64) -> Result<f64> {
    log_partition_capped(q, beta, DEFAULT_EXACT_CAP)
}

/// As [`log_partition`] with an explicit size cap.
pub fn log_partition_capped(q: &QuboInstance, beta: f64, cap: usize) -> Result<f64> {
    check_beta(beta)?;
    if q.n() > cap {
        return Err(Error::ResourceCap {
            operation: "log_partition",
            n: q.n(),
            cap,
        });
    }
    let kernel = GrayKernel::new(q);
    // running log-sum-exp: track the max exponent and the rescaled sum
    let mut max_arg = f64::NEG_INFINITY;
    let mut scaled_sum = 0.0;
    kernel.walk(q.n(), 0, &mut |_, e| {
        let arg = -beta * e;
        if arg <= max_arg {
            scaled_sum += (arg - max_arg).exp();
        } else {
            scaled_sum = scaled_sum * (max_arg - arg).exp() + 1.0;
            max_arg = arg;
        }
    });
    Ok(max_arg + scaled_sum.ln())
}

/// The full probability vector: entry `k` is the Gibbs probability of the
/// vector with integer index `k`. Entries sum to 1.
pub fn probabilities(q: &QuboInstance, beta: f64) -> Result<Vec<f64>> {
    probabilities_capped(q, beta, DEFAULT_VECTOR_CAP)
}

/// As [`probabilities`] with an explicit size cap.
pub fn probabilities_capped(q: &QuboInstance, beta: f64, cap: usize) -> Result<Vec<f64>> {
    check_beta(beta)?;
    if q.n() > cap {
        return Err(Error::ResourceCap {
            operation: "probabilities",
            n: q.n(),
            cap,
        });
    }
    let mut args = vec![0.0f64; 1usize << q.n()];
    let kernel = GrayKernel::new(q);
    kernel.walk(q.n(), 0, &mut |idx, e| {
        args[idx as usize] = -beta * e;
    });
    let max_arg = args.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for a in args.iter_mut() {
        *a = (*a - max_arg).exp();
        total += *a;
    }
    for a in args.iter_mut() {
        *a /= total;
    }
    Ok(args)
}

/// Pairwise marginals under the Gibbs distribution: entry `(i, j)` with
/// `i != j` is `P[x_i = 1 and x_j = 1]`; the diagonal holds `P[x_i = 1]`.
/// Symmetric, entries in `[0, 1]`.
pub fn pairwise_marginals(q: &QuboInstance, beta: f64) -> Result<Vec<Vec<f64>>> {
    pairwise_marginals_capped(q, beta, DEFAULT_EXACT_CAP)
}

/// As [`pairwise_marginals`] with an explicit size cap.
pub fn pairwise_marginals_capped(
    q: &QuboInstance,
    beta: f64,
    cap: usize,
) -> Result<Vec<Vec<f64>>> {
    check_beta(beta)?;
    let n = q.n();
    if n > cap {
        return Err(Error::ResourceCap {
            operation: "pairwise_marginals",
            n,
            cap,
        });
    }
    // two passes: normalize first, then accumulate probabilities per state
    let log_z = log_partition_capped(q, beta, cap)?;
    let mut m = vec![vec![0.0; n]; n];
    let kernel = GrayKernel::new(q);
    let mut set_bits: Vec<usize> = Vec::with_capacity(n);
    kernel.walk(n, 0, &mut |idx, e| {
        let p = (-beta * e - log_z).exp();
        set_bits.clear();
        let mut rest = idx;
        while rest != 0 {
            let b = rest.trailing_zeros() as usize;
            set_bits.push(b);
            rest &= rest - 1;
        }
        for (pos, &i) in set_bits.iter().enumerate() {
            m[i][i] += p;
            for &j in &set_bits[pos + 1..] {
                m[i][j] += p;
                m[j][i] += p;
            }
        }
    });
    Ok(m)
}
