//! Gray-code subspace walker. Maintains the energy and the flip-cost vector
//! incrementally, so visiting each state costs time proportional to the
//! flipped bit's neighbor count.

use crate::instance::QuboInstance;

/// Sparse neighbor lists: for each variable, the variables it shares a
/// nonzero coupling with, together with the symmetrized coupling value.
pub(crate) fn neighbor_lists(q: &QuboInstance) -> Vec<Vec<(u32, f64)>> {
    let n = q.n();
    let mut nbrs = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let r = q.weight(i, j);
            if r != 0.0 {
                nbrs[i].push((j as u32, r));
                nbrs[j].push((i as u32, r));
            }
        }
    }
    nbrs
}

/// Flips bit `b` of `x`, updating the flip-cost vector `g` in place.
/// Returns the energy delta of the flip (the pre-flip `g[b]`).
pub(crate) fn apply_flip(
    x: &mut [bool],
    g: &mut [f64],
    b: usize,
    nbrs: &[Vec<(u32, f64)>],
) -> f64 {
    let delta = g[b];
    let step = if x[b] { -1.0 } else { 1.0 };
    x[b] = !x[b];
    g[b] = -g[b];
    for &(j, r) in &nbrs[b] {
        let j = j as usize;
        let sj = if x[j] { -1.0 } else { 1.0 };
        g[j] += sj * r * step;
    }
    delta
}

pub(crate) struct GrayKernel<'a> {
    q: &'a QuboInstance,
    nbrs: Vec<Vec<(u32, f64)>>,
}

impl<'a> GrayKernel<'a> {
    pub(crate) fn new(q: &'a QuboInstance) -> Self {
        Self {
            q,
            nbrs: neighbor_lists(q),
        }
    }

    /// Visits all `2^low_bits` states whose bits above `low_bits` equal
    /// `high_pattern`, starting from the all-low-zeros state. `visit`
    /// receives the integer state index and the maintained energy.
    pub(crate) fn walk(
        &self,
        low_bits: usize,
        high_pattern: u64,
        visit: &mut impl FnMut(u64, f64),
    ) {
        let n = self.q.n();
        debug_assert!(low_bits <= n);
        let mut idx = high_pattern << low_bits;
        let mut x: Vec<bool> = (0..n).map(|i| (idx >> i) & 1 == 1).collect();
        let mut g = self.q.dx_unchecked(&x);
        let mut energy = self.q.energy_unchecked(&x);
        visit(idx, energy);
        for k in 1..(1u64 << low_bits) {
            let b = k.trailing_zeros() as usize;
            energy += apply_flip(&mut x, &mut g, b, &self.nbrs);
            idx ^= 1 << b;
            visit(idx, energy);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitvec::BitVector;
    use crate::instance::WeightDistribution;

    #[test]
    fn maintained_energy_matches_recompute() {
        for seed in 0..4 {
            let q = QuboInstance::random(10, WeightDistribution::Normal, 0.6, seed).unwrap();
            let kernel = GrayKernel::new(&q);
            let mut visited = 0u64;
            kernel.walk(10, 0, &mut |idx, e| {
                visited += 1;
                let x = BitVector::from_index(idx, 10);
                let direct = q.energy(&x).unwrap();
                assert!((e - direct).abs() < 1e-9, "idx {idx}: {e} vs {direct}");
            });
            assert_eq!(visited, 1024);
        }
    }

    #[test]
    fn prefix_walk_covers_partition() {
        let q = QuboInstance::random(6, WeightDistribution::Uniform, 0.8, 1).unwrap();
        let kernel = GrayKernel::new(&q);
        let mut seen = [false; 64];
        for high in 0..4u64 {
            kernel.walk(4, high, &mut |idx, _| {
                assert!(!seen[idx as usize]);
                seen[idx as usize] = true;
            });
        }
        assert!(seen.iter().all(|&s| s));
    }
}
