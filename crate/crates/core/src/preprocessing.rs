//! Optimality-preserving instance shrinking and dynamic-range reduction.
//!
//! [`qpro_plus`] scans rule conditions that certify a variable's value, or a
//! relation between two variables, to be consistent with some global
//! minimizer; firing a rule shrinks the instance by one variable and the
//! scan restarts on the reduced instance.
//!
//! [`reduce_dynamic_range`] merges parameter values with neighboring
//! distinct values whenever bounds on the subspace minima certify that no
//! global minimizer is lost, strictly decreasing the dynamic range with
//! each accepted move. Small subspaces are bounded by their exact minimum;
//! larger ones by [`subspace_lower_bound`] and [`subspace_upper_bound`].

use std::fmt;

use crate::assignment::{Builder, PartialAssignment};
use crate::instance::{dynamic_range_of_values, QuboInstance};
use crate::solving::local_search;
use crate::walk::GrayKernel;

/// Restarts used by the local-search upper bound.
pub const UPPER_BOUND_RESTARTS: u32 = 4;

/// Subspaces up to this size are bounded by their exact minimum (one Gray
/// walk); larger ones fall back to the cheap bounds, which are rarely tight
/// enough to certify a move.
pub const EXACT_BOUND_CAP: usize = 16;

/// Rule that fired during persistency preprocessing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PersistencyRule {
    /// The variable is 0 in some optimal solution.
    FixZero,
    /// The variable is 1 in some optimal solution.
    FixOne,
    /// The two variables are equal in some optimal solution.
    TieEqual,
    /// The two variables are opposite in some optimal solution.
    TieOpposite,
}

impl fmt::Display for PersistencyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PersistencyRule::FixZero => "fix-zero",
            PersistencyRule::FixOne => "fix-one",
            PersistencyRule::TieEqual => "tie-equal",
            PersistencyRule::TieOpposite => "tie-opposite",
        };
        f.write_str(name)
    }
}

/// Output of [`qpro_plus`]: a conflict-free assignment together with the
/// rules that produced it, in firing order, over full-space indices.
#[derive(Clone, Debug)]
pub struct PersistencyReport {
    pub assignment: PartialAssignment,
    pub rules_fired: Vec<(PersistencyRule, Vec<usize>)>,
}

enum Firing {
    Constant { var: usize, value: bool },
    Tie { var: usize, other: usize, negated: bool },
}

/// Rule-based persistency preprocessing.
///
/// With `c_i` the diagonal entry, `r_ij` the symmetrized coupling,
/// `D_i^+ = sum_j max(r_ij, 0)` and `D_i^- = sum_j min(r_ij, 0)`:
///
/// * `c_i + D_i^- >= 0` fixes `x_i = 0` — setting the bit can never help;
/// * `c_i + D_i^+ <= 0` fixes `x_i = 1` — setting the bit can never hurt;
/// * `c_i + r_ij + D_i^{+\j} <= 0` and `c_i + D_i^{-\j} >= 0` ties
///   `x_i = x_j` — with `x_j` set the bit can never hurt, with it clear the
///   bit can never help;
/// * `c_i + r_ij + D_i^{-\j} >= 0` and `c_i + D_i^{+\j} <= 0` ties
///   `x_i = 1 - x_j` (the mirrored argument),
///
/// where `\j` excludes `j` from the sum. Variables are scanned in ascending
/// order (both single rules per variable, then pair rules in lexicographic
/// order); after each firing the instance is reduced by one variable and the
/// scan restarts. At least one global minimizer of the input is consistent
/// with the returned assignment, so the minimum energy is preserved:
/// `min E == min E_reduced + constant`.
pub fn qpro_plus(q: &QuboInstance) -> PersistencyReport {
    let n = q.n();
    let mut current = q.clone();
    // current index -> original index
    let mut index_map: Vec<usize> = (0..n).collect();
    let mut builder = Builder::new(n);
    let mut rules_fired = Vec::new();

    while let Some(firing) = scan_rules(&current) {
        let single = match firing {
            Firing::Constant { var, value } => {
                let orig = index_map[var];
                builder
                    .set_constant(orig, value)
                    .expect("persistency firings are mutually consistent");
                rules_fired.push((
                    if value {
                        PersistencyRule::FixOne
                    } else {
                        PersistencyRule::FixZero
                    },
                    vec![orig],
                ));
                let mut b = Builder::new(current.n());
                b.set_constant(var, value).unwrap();
                PartialAssignment::from_builder(b)
            }
            Firing::Tie { var, other, negated } => {
                let (orig_a, orig_b) = (index_map[var], index_map[other]);
                builder
                    .tie(orig_a, orig_b, negated)
                    .expect("persistency firings are mutually consistent");
                rules_fired.push((
                    if negated {
                        PersistencyRule::TieOpposite
                    } else {
                        PersistencyRule::TieEqual
                    },
                    vec![orig_a, orig_b],
                ));
                let mut b = Builder::new(current.n());
                b.tie(var, other, negated).unwrap();
                PartialAssignment::from_builder(b)
            }
        };
        let (reduced, _constant) = single.apply(&current).expect("sizes match");
        index_map = single
            .free_representatives()
            .iter()
            .map(|&r| index_map[r])
            .collect();
        current = reduced;
    }

    PersistencyReport {
        assignment: PartialAssignment::from_builder(builder),
        rules_fired,
    }
}

fn scan_rules(q: &QuboInstance) -> Option<Firing> {
    let n = q.n();
    if n == 0 {
        return None;
    }
    let mut pos_sum = vec![0.0; n];
    let mut neg_sum = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = q.weight(i, j);
            if r > 0.0 {
                pos_sum[i] += r;
                pos_sum[j] += r;
            } else if r < 0.0 {
                neg_sum[i] += r;
                neg_sum[j] += r;
            }
        }
    }
    for i in 0..n {
        let c = q.weight(i, i);
        if c + neg_sum[i] >= 0.0 {
            return Some(Firing::Constant { var: i, value: false });
        }
        if c + pos_sum[i] <= 0.0 {
            return Some(Firing::Constant { var: i, value: true });
        }
    }
    for i in 0..n {
        let c = q.weight(i, i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = q.coupling(i, j);
            let pos_excl = pos_sum[i] - r.max(0.0);
            let neg_excl = neg_sum[i] - r.min(0.0);
            if c + r + pos_excl <= 0.0 && c + neg_excl >= 0.0 {
                return Some(Firing::Tie { var: i, other: j, negated: false });
            }
            if c + r + neg_excl >= 0.0 && c + pos_excl <= 0.0 {
                return Some(Firing::Tie { var: i, other: j, negated: true });
            }
        }
    }
    None
}

/// A lower bound on the minimum energy: every term contributes at least its
/// negative part.
pub fn subspace_lower_bound(q: &QuboInstance) -> f64 {
    let n = q.n();
    let mut bound = 0.0;
    for i in 0..n {
        for j in i..n {
            let w = q.weight(i, j);
            if w < 0.0 {
                bound += w;
            }
        }
    }
    bound
}

/// An upper bound on the minimum energy: the best state found by
/// steepest-descent local search from [`UPPER_BOUND_RESTARTS`] seeded
/// random starts.
pub fn subspace_upper_bound(q: &QuboInstance, seed: u64) -> f64 {
    if q.n() == 0 {
        return 0.0;
    }
    local_search(q, UPPER_BOUND_RESTARTS, seed).energy
}

/// Bounds on the minimum energy over the subspace obtained by clamping the
/// listed variables to constants. Small subspaces are solved exactly.
fn clamp_bounds(q: &QuboInstance, clamps: &[(usize, bool)], seed: u64) -> (f64, f64) {
    let pa = PartialAssignment::from_pairs(clamps, q.n()).expect("indices in range");
    let (sub, constant) = pa.apply(q).expect("sizes match");
    if sub.n() <= EXACT_BOUND_CAP {
        let exact = constant + exact_minimum(&sub);
        (exact, exact)
    } else {
        let lb = constant + subspace_lower_bound(&sub);
        let ub = constant + subspace_upper_bound(&sub, seed);
        (lb, ub)
    }
}

fn exact_minimum(q: &QuboInstance) -> f64 {
    let kernel = GrayKernel::new(q);
    let mut best = f64::INFINITY;
    kernel.walk(q.n(), 0, &mut |_, e| {
        if e < best {
            best = e;
        }
    });
    best
}

/// Heuristic dynamic-range reduction.
///
/// Repeatedly replaces one parameter value with its nearest distinct
/// neighbor (above or below), accepting only moves that both strictly
/// decrease the dynamic range and provably keep at least one global
/// minimizer: with `A` the subspace where the changed term is active and
/// `B` its complement, an increase by `d > 0` is safe when `ub(B) <= lb(A)`
/// (the minimum already lies in `B`) or `d < lb(B) - ub(A)` (the `A`-minimum
/// stays ahead); a decrease is safe under the mirrored conditions. Every
/// accepted move shrinks the minimizer set monotonically, so the minimizers
/// of the output are minimizers of the input. Deterministic in the seed;
/// returns the input unchanged when no safe improving move exists.
pub fn reduce_dynamic_range(q: &QuboInstance, seed: u64) -> QuboInstance {
    let n = q.n();
    let mut current = q.clone();
    let slots = n * (n + 1) / 2;
    if slots == 0 {
        return current;
    }
    loop {
        let mut values: Vec<f64> = Vec::with_capacity(slots);
        for i in 0..n {
            for j in i..n {
                values.push(current.weight(i, j));
            }
        }
        let mut distinct = values.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        if distinct.len() < 2 {
            break;
        }
        let dr_now = dynamic_range_of_values(&mut values.clone());

        let mut best: Option<(f64, usize, usize, f64)> = None;
        for i in 0..n {
            for j in i..n {
                let v = current.weight(i, j);
                let slot_pos = distinct.partition_point(|&d| d < v);
                debug_assert_eq!(distinct[slot_pos], v);
                let below = slot_pos.checked_sub(1).map(|p| distinct[p]);
                let above = distinct.get(slot_pos + 1).copied();
                let mut bounds: Option<((f64, f64), (f64, f64))> = None;
                for candidate in [below, above].into_iter().flatten() {
                    let dr_new = {
                        let mut trial = values.clone();
                        trial[triangle_offset(n, i, j)] = candidate;
                        dynamic_range_of_values(&mut trial)
                    };
                    if dr_new >= dr_now - 1e-12 {
                        continue;
                    }
                    match &best {
                        Some((dr_best, _, _, _)) if dr_new >= *dr_best => continue,
                        _ => {}
                    }
                    let (a_bounds, b_bounds) = *bounds.get_or_insert_with(|| {
                        subspace_bound_pair(&current, i, j, seed)
                    });
                    let (lb_a, ub_a) = a_bounds;
                    let (lb_b, ub_b) = b_bounds;
                    let delta = candidate - v;
                    let safe = if delta > 0.0 {
                        ub_b <= lb_a || delta < lb_b - ub_a
                    } else {
                        ub_a <= lb_b || -delta < lb_a - ub_b
                    };
                    if safe {
                        best = Some((dr_new, i, j, candidate));
                    }
                }
            }
        }
        match best {
            Some((_, i, j, value)) => current.set_weight(i, j, value),
            None => break,
        }
    }
    current
}

/// Bounds for the active subspace `A` of position `(i, j)` and for its
/// complement `B`. The diagonal term is active when `x_i = 1`; an
/// off-diagonal term when `x_i = x_j = 1`. The complement of the latter is
/// covered by the two disjoint subcubes `x_i = 0` and `x_i = 1, x_j = 0`.
fn subspace_bound_pair(
    q: &QuboInstance,
    i: usize,
    j: usize,
    seed: u64,
) -> ((f64, f64), (f64, f64)) {
    let mix = |piece: u64| {
        seed.wrapping_add((i as u64) << 20)
            .wrapping_add((j as u64) << 4)
            .wrapping_add(piece)
    };
    if i == j {
        let a = clamp_bounds(q, &[(i, true)], mix(0));
        let b = clamp_bounds(q, &[(i, false)], mix(1));
        (a, b)
    } else {
        let a = clamp_bounds(q, &[(i, true), (j, true)], mix(0));
        let (lb1, ub1) = clamp_bounds(q, &[(i, false)], mix(1));
        let (lb2, ub2) = clamp_bounds(q, &[(i, true), (j, false)], mix(2));
        (a, (lb1.min(lb2), ub1.min(ub2)))
    }
}

fn triangle_offset(n: usize, i: usize, j: usize) -> usize {
    // row-major upper triangle: rows 0..i contribute n-k entries each
    i * n - i * (i + 1) / 2 + i + (j - i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitvec::BitVector;
    use crate::instance::WeightDistribution;
    use crate::solving::brute_force;

    fn from_rows(rows: &[Vec<f64>]) -> QuboInstance {
        QuboInstance::from_matrix(rows).unwrap()
    }

    fn check_minimum_preserved(q: &QuboInstance, report: &PersistencyReport) {
        let (reduced, constant) = report.assignment.apply(q).unwrap();
        let full_min = brute_force(q, 1).unwrap().energy;
        let reduced_min = if reduced.n() == 0 {
            0.0
        } else {
            brute_force(&reduced, 1).unwrap().energy
        };
        assert!(
            (full_min - (reduced_min + constant)).abs() < 1e-9,
            "min {full_min} vs reduced {reduced_min} + const {constant}"
        );
    }

    #[test]
    fn fixes_all_nonnegative_instance_to_zero() {
        let q = from_rows(&[vec![3.0, 1.0], vec![0.0, 2.0]]);
        let report = qpro_plus(&q);
        assert_eq!(report.assignment.to_canonical_string(), "x0, x1 = 0");
        assert_eq!(report.assignment.free_count(), 0);
        let (_, constant) = report.assignment.apply(&q).unwrap();
        assert_eq!(constant, 0.0);
        check_minimum_preserved(&q, &report);
    }

    #[test]
    fn fixes_dominant_negative_instance_to_one() {
        let q = from_rows(&[vec![-3.0, 1.0], vec![0.0, -2.0]]);
        let report = qpro_plus(&q);
        assert_eq!(report.assignment.to_canonical_string(), "x0, x1 = 1");
        let (_, constant) = report.assignment.apply(&q).unwrap();
        assert_eq!(constant, -4.0);
        check_minimum_preserved(&q, &report);
    }

    #[test]
    fn consistent_with_some_optimum() {
        // minimizer (1, 0); the assignment must keep it reachable
        let q = from_rows(&[vec![-1.0, 2.0], vec![0.0, 0.0]]);
        let report = qpro_plus(&q);
        check_minimum_preserved(&q, &report);
        assert!(report
            .assignment
            .matches(&BitVector::from_string("10").unwrap())
            .unwrap());
    }

    #[test]
    fn pair_rule_ties_equal() {
        // no single-variable rule applies; x0 = x1 must fire
        let q = from_rows(&[vec![1.0, -2.0], vec![0.0, 1.0]]);
        let report = qpro_plus(&q);
        assert!(report
            .rules_fired
            .iter()
            .any(|(rule, _)| *rule == PersistencyRule::TieEqual));
        check_minimum_preserved(&q, &report);
    }

    #[test]
    fn pair_rule_ties_opposite() {
        let q = from_rows(&[vec![-1.0, 2.0], vec![0.0, -1.0]]);
        let report = qpro_plus(&q);
        assert!(report
            .rules_fired
            .iter()
            .any(|(rule, _)| *rule == PersistencyRule::TieOpposite));
        check_minimum_preserved(&q, &report);
    }

    #[test]
    fn idempotent_after_reduction() {
        for seed in 0..20u64 {
            let q = QuboInstance::random(10, WeightDistribution::Normal, 0.4, seed).unwrap();
            let report = qpro_plus(&q);
            let (reduced, _) = report.assignment.apply(&q).unwrap();
            let second = qpro_plus(&reduced);
            assert!(second.rules_fired.is_empty(), "seed {seed} fired again");
            assert!(second.assignment.is_identity());
        }
    }

    #[test]
    fn soundness_on_random_instances() {
        for seed in 0..40u64 {
            let n = 4 + (seed % 9) as usize;
            let density = if seed % 2 == 0 { 0.3 } else { 0.8 };
            let q = QuboInstance::random(n, WeightDistribution::Normal, density, seed).unwrap();
            let report = qpro_plus(&q);
            check_minimum_preserved(&q, &report);
        }
    }

    #[test]
    fn bounds_sandwich_the_minimum() {
        assert_eq!(
            subspace_lower_bound(&from_rows(&[vec![1.0, -2.0], vec![0.0, 1.0]])),
            -2.0
        );
        assert_eq!(subspace_lower_bound(&from_rows(&[vec![1.0, 2.0], vec![0.0, 3.0]])), 0.0);
        for seed in 0..20u64 {
            let n = 4 + (seed % 8) as usize;
            let q = QuboInstance::random(n, WeightDistribution::Normal, 0.6, seed).unwrap();
            let exact = brute_force(&q, 1).unwrap().energy;
            let lb = subspace_lower_bound(&q);
            let ub = subspace_upper_bound(&q, seed);
            assert!(lb <= exact + 1e-9 && exact <= ub + 1e-9, "seed {seed}: {lb} {exact} {ub}");
            assert_eq!(ub, subspace_upper_bound(&q, seed));
        }
    }

    #[test]
    fn two_value_instance_unchanged() {
        let q = from_rows(&[vec![0.0, 2.0], vec![0.0, 2.0]]);
        let out = reduce_dynamic_range(&q, 0);
        assert_eq!(out, q);
    }

    /// All states within tolerance of the minimum, by direct enumeration.
    fn near_minimal_states(q: &QuboInstance) -> Vec<u64> {
        let mut energies = Vec::with_capacity(1 << q.n());
        let mut min = f64::INFINITY;
        for k in 0..(1u64 << q.n()) {
            let e = q.energy(&BitVector::from_index(k, q.n())).unwrap();
            min = min.min(e);
            energies.push(e);
        }
        (0..(1u64 << q.n()))
            .filter(|&k| energies[k as usize] <= min + 1e-9)
            .collect()
    }

    #[test]
    fn dr_never_increases_and_optima_survive() {
        for seed in 0..20u64 {
            let n = 6 + (seed % 5) as usize;
            let q = QuboInstance::random(n, WeightDistribution::Normal, 0.5, seed).unwrap();
            let out = reduce_dynamic_range(&q, seed);
            assert!(out.dynamic_range() <= q.dynamic_range() + 1e-9);

            let in_minima = near_minimal_states(&q);
            let out_minima = near_minimal_states(&out);
            let survives = out_minima.iter().any(|m| in_minima.contains(m));
            assert!(survives, "seed {seed}: no input minimizer stays optimal");
        }
    }

    /// Random instance with small integer weights: energies are exact in
    /// f64, so tie sets are exact and merges hit value collisions hard.
    fn integer_instance(n: usize, seed: u64) -> QuboInstance {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            for w in row.iter_mut().skip(i) {
                if rng.random::<f64>() < 0.5 {
                    *w = rng.random_range(-2i32..=2) as f64;
                }
            }
        }
        QuboInstance::from_matrix(&m).unwrap()
    }

    fn exact_minimizer_set(q: &QuboInstance) -> Vec<u64> {
        let energies: Vec<f64> = (0..(1u64 << q.n()))
            .map(|k| q.energy(&BitVector::from_index(k, q.n())).unwrap())
            .collect();
        let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        (0..energies.len() as u64)
            .filter(|&k| energies[k as usize] == min)
            .collect()
    }

    #[test]
    fn dr_output_minimizers_are_a_subset_on_tied_instances() {
        for seed in 0..30u64 {
            let n = 6 + (seed % 4) as usize;
            let q = integer_instance(n, seed);
            let out = reduce_dynamic_range(&q, seed);
            assert!(out.dynamic_range() <= q.dynamic_range() + 1e-12, "seed {seed}");
            let input_set = exact_minimizer_set(&q);
            let output_set = exact_minimizer_set(&out);
            for k in &output_set {
                assert!(
                    input_set.contains(k),
                    "seed {seed}: state {k} optimal after reduction but not before"
                );
            }
        }
    }

    #[test]
    fn persistency_is_sound_at_exact_rule_boundaries() {
        // integer weights make the rule thresholds hit 0 exactly
        for seed in 100..140u64 {
            let n = 5 + (seed % 6) as usize;
            let q = integer_instance(n, seed);
            let report = qpro_plus(&q);
            check_minimum_preserved(&q, &report);
        }
    }

    #[test]
    fn dr_reduction_is_a_fixed_point() {
        for seed in 0..8u64 {
            let q = QuboInstance::random(8, WeightDistribution::Normal, 0.35, seed).unwrap();
            let once = reduce_dynamic_range(&q, seed);
            let twice = reduce_dynamic_range(&once, seed);
            assert_eq!(once, twice, "seed {seed}");
        }
    }

    #[test]
    fn triangle_offset_is_row_major() {
        let n = 4;
        let mut expected = 0;
        for i in 0..n {
            for j in i..n {
                assert_eq!(triangle_offset(n, i, j), expected);
                expected += 1;
            }
        }
    }
}
