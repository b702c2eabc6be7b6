//! Exact and heuristic solvers: parallel Gray-code brute force, simulated
//! annealing, and steepest-descent local search with restarts.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bitvec::{random_bits_with, BitVector};
use crate::error::{Error, Result};
use crate::instance::{QuboInstance, Solution};
use crate::walk::{apply_flip, neighbor_lists, GrayKernel};

/// Largest `n` the brute-force solver will enumerate by default.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 30;

/// Default cap on the number of tied minimizers collected.
pub const DEFAULT_TIE_CAP: usize = 1024;

/// Exhaustive minimization via a Gray-code walk over all `2^n` states.
///
/// The state space is split into fixed prefix subspaces which are walked
/// independently; `threads` only sizes the worker pool, so the result is
/// identical for every thread count. Ties are broken by the smallest
/// integer state index.
pub fn brute_force(q: &QuboInstance, threads: usize) -> Result<Solution> {
    brute_force_capped(q, threads, DEFAULT_BRUTE_FORCE_CAP).map(|(s, _)| s)
}

/// As [`brute_force`], also returning every state whose maintained energy
/// ties the minimum exactly, up to `DEFAULT_TIE_CAP` states in ascending
/// index order.
pub fn brute_force_with_minima(
    q: &QuboInstance,
    threads: usize,
) -> Result<(Solution, Vec<BitVector>)> {
    brute_force_capped(q, threads, DEFAULT_BRUTE_FORCE_CAP)
}

/// As [`brute_force_with_minima`] with an explicit size cap.
pub fn brute_force_capped(
    q: &QuboInstance,
    threads: usize,
    cap: usize,
) -> Result<(Solution, Vec<BitVector>)> {
    let n = q.n();
    if n > cap {
        return Err(Error::ResourceCap {
            operation: "brute_force",
            n,
            cap,
        });
    }
    if threads == 0 {
        return Err(Error::InvalidParameter("threads must be at least 1".into()));
    }
    if n == 0 {
        let sol = Solution::with_meta(
            BitVector::new(Vec::new()),
            0.0,
            [("method", "brute_force".into()), ("states", "1".into())],
        );
        return Ok((sol, vec![BitVector::new(Vec::new())]));
    }

    // Prefix width depends on n alone, never on the thread count, so the
    // per-task arithmetic (and therefore the result) is thread-invariant.
    let prefix_bits = if n <= 12 { 0 } else { (n - 12).min(6) };
    let low_bits = n - prefix_bits;
    let kernel = GrayKernel::new(q);
    let tasks: Vec<u64> = (0..(1u64 << prefix_bits)).collect();

    let run_task = |&high: &u64| -> (f64, u64, Vec<u64>) {
        let mut best = f64::INFINITY;
        let mut best_idx = 0u64;
        let mut ties: Vec<u64> = Vec::new();
        kernel.walk(low_bits, high, &mut |idx, e| {
            if e < best {
                best = e;
                best_idx = idx;
                ties.clear();
                ties.push(idx);
            } else if e == best {
                if ties.len() < DEFAULT_TIE_CAP {
                    ties.push(idx);
                }
                if idx < best_idx {
                    best_idx = idx;
                }
            }
        });
        (best, best_idx, ties)
    };

    let results: Vec<(f64, u64, Vec<u64>)> = if threads == 1 {
        tasks.iter().map(run_task).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(run_task).collect())
    };

    let mut best = f64::INFINITY;
    let mut best_idx = u64::MAX;
    for &(e, idx, _) in &results {
        if e < best || (e == best && idx < best_idx) {
            best = e;
            best_idx = idx;
        }
    }
    // the per-task argmin tracking is exact even when a task's tie list
    // overflowed its cap, so the merged list must be forced to contain it
    let mut tie_indices: Vec<u64> = vec![best_idx];
    for (e, _, ties) in &results {
        if *e == best {
            tie_indices.extend_from_slice(ties);
        }
    }
    tie_indices.sort_unstable();
    tie_indices.dedup();
    tie_indices.truncate(DEFAULT_TIE_CAP);

    let x = BitVector::from_index(best_idx, n);
    let energy = q.energy(&x)?;
    let solution = Solution::with_meta(
        x,
        energy,
        [
            ("method", "brute_force".into()),
            ("threads", threads.to_string()),
            ("states", (1u128 << n).to_string()),
            ("tasks", tasks.len().to_string()),
        ],
    );
    let minima = tie_indices
        .into_iter()
        .map(|k| BitVector::from_index(k, n))
        .collect();
    Ok((solution, minima))
}

/// Single-bit-flip Metropolis annealing with a geometric temperature
/// schedule `T_t = t0 * alpha^t`. `t0 = None` probes 100 seeded random
/// states and starts at the largest flip-cost magnitude seen. Returns the
/// best state visited. Deterministic in the seed.
pub fn simulated_annealing(
    q: &QuboInstance,
    steps: u64,
    t0: Option<f64>,
    alpha: f64,
    seed: u64,
) -> Result<Solution> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if let Some(t) = t0 {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t0 must be positive and finite, got {t}"
            )));
        }
    }
    let n = q.n();
    if n == 0 {
        return Ok(Solution::with_meta(
            BitVector::new(Vec::new()),
            0.0,
            [("method", "simulated_annealing".into())],
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0 = t0.unwrap_or_else(|| {
        let mut hottest = 0.0f64;
        for _ in 0..100 {
            let probe = random_bits_with(n, &mut rng);
            for c in q.dx_unchecked(&probe) {
                hottest = hottest.max(c.abs());
            }
        }
        if hottest > 0.0 {
            hottest
        } else {
            1.0
        }
    });

    let nbrs = neighbor_lists(q);
    let mut x: Vec<bool> = random_bits_with(n, &mut rng).to_vec();
    let mut g = q.dx_unchecked(&x);
    let mut energy = q.energy_unchecked(&x);
    let initial_energy = energy;
    let mut best_energy = energy;
    let mut best_x = x.clone();
    let mut temperature = t0;
    let mut accepted = 0u64;
    for _ in 0..steps {
        let b = rng.random_range(0..n);
        let delta = g[b];
        let accept = delta <= 0.0 || rng.random::<f64>() < (-delta / temperature).exp();
        if accept {
            energy += apply_flip(&mut x, &mut g, b, &nbrs);
            accepted += 1;
            if energy < best_energy {
                best_energy = energy;
                best_x.copy_from_slice(&x);
            }
        }
        temperature *= alpha;
    }

    let best = BitVector::new(best_x);
    let exact = q.energy(&best)?;
    Ok(Solution::with_meta(
        best,
        exact,
        [
            ("method", "simulated_annealing".into()),
            ("steps", steps.to_string()),
            ("t0", format!("{t0}")),
            ("alpha", format!("{alpha}")),
            ("seed", seed.to_string()),
            ("accepted", accepted.to_string()),
            ("initial_energy", format!("{initial_energy}")),
        ],
    ))
}

/// Steepest-descent local search: from each seeded random start, repeatedly
/// flips the bit with the most negative flip cost (ties to the smallest
/// index) until no flip decreases the energy, and returns the best result
/// over all restarts. The output is 1-opt: every single-bit flip of it is
/// non-improving.
pub fn local_search(q: &QuboInstance, restarts: u32, seed: u64) -> Solution {
    let n = q.n();
    if n == 0 {
        return Solution::with_meta(
            BitVector::new(Vec::new()),
            0.0,
            [("method", "local_search".into())],
        );
    }
    let restarts = restarts.max(1);
    let nbrs = neighbor_lists(q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_energy = f64::INFINITY;
    let mut best_x: Vec<bool> = Vec::new();
    let mut total_flips = 0u64;
    for _ in 0..restarts {
        let mut x: Vec<bool> = random_bits_with(n, &mut rng).to_vec();
        total_flips += descend(q, &mut x, &nbrs);
        let energy = q.energy_unchecked(&x);
        if energy < best_energy {
            best_energy = energy;
            best_x = x;
        }
    }
    Solution::with_meta(
        BitVector::new(best_x),
        best_energy,
        [
            ("method", "local_search".into()),
            ("restarts", restarts.to_string()),
            ("seed", seed.to_string()),
            ("flips", total_flips.to_string()),
        ],
    )
}

/// Drives `x` to a 1-opt state. The fast phase uses incrementally maintained
/// flip costs with a small threshold guarding against accumulated rounding;
/// once it stalls, costs are recomputed exactly and any remaining strictly
/// negative flip is taken on fresh values.
fn descend(q: &QuboInstance, x: &mut [bool], nbrs: &[Vec<(u32, f64)>]) -> u64 {
    const DRIFT_GUARD: f64 = 1e-12;
    let mut flips = 0u64;
    let mut g = q.dx_unchecked(x);
    loop {
        loop {
            let (b, cost) = argmin(&g);
            if cost >= -DRIFT_GUARD {
                break;
            }
            apply_flip(x, &mut g, b, nbrs);
            flips += 1;
        }
        g = q.dx_unchecked(x);
        let (b, cost) = argmin(&g);
        if cost >= 0.0 {
            return flips;
        }
        apply_flip(x, &mut g, b, nbrs);
        flips += 1;
    }
}

fn argmin(g: &[f64]) -> (usize, f64) {
    let mut best = 0usize;
    for (i, &v) in g.iter().enumerate() {
        if v < g[best] {
            best = i;
        }
    }
    (best, g[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::WeightDistribution;

    fn from_rows(rows: &[Vec<f64>]) -> QuboInstance {
        QuboInstance::from_matrix(rows).unwrap()
    }

    /// Slow reference: scan every state by direct energy evaluation.
    fn naive_minimum(q: &QuboInstance) -> (f64, u64) {
        let mut best = f64::INFINITY;
        let mut best_k = 0u64;
        for k in 0..(1u64 << q.n()) {
            let x = BitVector::from_index(k, q.n());
            let e = q.energy(&x).unwrap();
            if e < best {
                best = e;
                best_k = k;
            }
        }
        (best, best_k)
    }

    #[test]
    fn brute_force_examples() {
        let q = from_rows(&[vec![-1.0, 2.0], vec![0.0, 0.0]]);
        let sol = brute_force(&q, 1).unwrap();
        assert_eq!(sol.x.to_string(), "10");
        assert_eq!(sol.energy, -1.0);

        // tie {00, 11} at 0 resolves to the smaller index
        let q = from_rows(&[vec![1.0, -2.0], vec![0.0, 1.0]]);
        let (sol, minima) = brute_force_with_minima(&q, 1).unwrap();
        assert_eq!(sol.x.to_string(), "00");
        assert_eq!(sol.energy, 0.0);
        let tied: Vec<String> = minima.iter().map(|m| m.to_string()).collect();
        assert_eq!(tied, vec!["00", "11"]);

        let zero = from_rows(&vec![vec![0.0; 5]; 5]);
        let sol = brute_force(&zero, 1).unwrap();
        assert_eq!(sol.x.to_string(), "00000");
        assert_eq!(sol.energy, 0.0);
    }

    #[test]
    fn tie_break_survives_tie_list_overflow() {
        // only the last variable matters: 2^11 tied minimizers, more than
        // the tie cap, and the smallest-index one is visited last in the
        // Gray walk
        let n = 12;
        let mut m = vec![vec![0.0; n]; n];
        m[n - 1][n - 1] = -1.0;
        let q = from_rows(&m);
        let (sol, minima) = brute_force_with_minima(&q, 1).unwrap();
        assert_eq!(sol.energy, -1.0);
        assert_eq!(sol.x.to_index(), 1 << (n - 1));
        assert_eq!(sol.x.to_string(), "000000000001");
        assert_eq!(minima[0].to_index(), 1 << (n - 1));
        assert_eq!(minima.len(), DEFAULT_TIE_CAP);
    }

    #[test]
    fn brute_force_matches_naive_scan() {
        for seed in 0..12u64 {
            let n = 1 + (seed as usize * 7) % 14;
            let q = QuboInstance::random(n, WeightDistribution::Normal, 0.6, seed).unwrap();
            let sol = brute_force(&q, 1).unwrap();
            let (naive_e, naive_k) = naive_minimum(&q);
            assert!((sol.energy - naive_e).abs() < 1e-9, "n {n} seed {seed}");
            assert_eq!(sol.x.to_index(), naive_k);
        }
    }

    #[test]
    fn brute_force_thread_invariance() {
        let q = QuboInstance::random(14, WeightDistribution::Normal, 0.5, 42).unwrap();
        let base = brute_force(&q, 1).unwrap();
        for threads in [2, 4, 8] {
            let sol = brute_force(&q, threads).unwrap();
            assert_eq!(sol.x, base.x);
            assert_eq!(sol.energy.to_bits(), base.energy.to_bits());
        }
    }

    #[test]
    fn brute_force_cap() {
        let q = QuboInstance::random(8, WeightDistribution::Normal, 0.5, 0).unwrap();
        assert!(matches!(
            brute_force_capped(&q, 1, 6),
            Err(Error::ResourceCap { n: 8, cap: 6, .. })
        ));
    }

    #[test]
    fn annealing_zero_matrix() {
        let q = from_rows(&vec![vec![0.0; 6]; 6]);
        let sol = simulated_annealing(&q, 500, None, 0.99, 3).unwrap();
        assert_eq!(sol.energy, 0.0);
    }

    #[test]
    fn annealing_is_deterministic_and_never_worse_than_start() {
        let q = QuboInstance::random(10, WeightDistribution::Normal, 0.7, 5).unwrap();
        let a = simulated_annealing(&q, 4000, None, 0.999, 9).unwrap();
        let b = simulated_annealing(&q, 4000, None, 0.999, 9).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.energy, b.energy);
        let initial: f64 = a.meta["initial_energy"].parse().unwrap();
        assert!(a.energy <= initial + 1e-9);
    }

    #[test]
    fn annealing_parameter_validation() {
        let q = from_rows(&[vec![1.0]]);
        assert!(simulated_annealing(&q, 0, None, 0.9, 0).is_err());
        assert!(simulated_annealing(&q, 10, None, 1.0, 0).is_err());
        assert!(simulated_annealing(&q, 10, Some(-2.0), 0.9, 0).is_err());
    }

    #[test]
    fn annealing_finds_small_optima() {
        let mut hits = 0;
        for seed in 0..10u64 {
            let q = QuboInstance::random(8, WeightDistribution::Normal, 0.8, seed).unwrap();
            let exact = brute_force(&q, 1).unwrap().energy;
            let sol = simulated_annealing(&q, 20 * 256, None, 0.995, seed).unwrap();
            assert!(sol.energy >= exact - 1e-9);
            if (sol.energy - exact).abs() < 1e-9 {
                hits += 1;
            }
        }
        assert!(hits >= 8, "only {hits}/10 annealing runs reached the optimum");
    }

    #[test]
    fn local_search_single_basin() {
        let q = from_rows(&[vec![-3.0, 1.0], vec![0.0, -2.0]]);
        for seed in 0..8 {
            let sol = local_search(&q, 1, seed);
            assert_eq!(sol.x.to_string(), "11");
            assert_eq!(sol.energy, -4.0);
        }
    }

    #[test]
    fn local_search_outputs_are_one_opt() {
        for seed in 0..10u64 {
            let n = 12;
            let q = QuboInstance::random(n, WeightDistribution::Normal, 0.6, seed).unwrap();
            let sol = local_search(&q, 3, seed);
            let dx = q.dx(&sol.x).unwrap();
            let worst = dx.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(worst >= -1e-9, "seed {seed}: negative flip cost {worst}");
            let exact = brute_force(&q, 1).unwrap().energy;
            assert!(sol.energy >= exact - 1e-9);
        }
    }

    #[test]
    fn local_search_zero_matrix_terminates() {
        let q = from_rows(&vec![vec![0.0; 4]; 4]);
        let sol = local_search(&q, 2, 1);
        assert_eq!(sol.energy, 0.0);
    }
}
