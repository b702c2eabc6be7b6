//! Generate, clamp, reduce, solve, and expand — the whole flow in one run.

use qubo_core::assignment::PartialAssignment;
use qubo_core::preprocessing::reduce_dynamic_range;
use qubo_core::solving::brute_force;
use qubo_core::{QuboInstance, WeightDistribution};

fn main() -> qubo_core::Result<()> {
    let q = QuboInstance::random(16, WeightDistribution::Normal, 0.8, 42)?;
    println!("instance: n = {}, dynamic range = {:.3}", q.n(), q.dynamic_range());

    let clamp = PartialAssignment::parse_expr("x1=0; x5=!x4", 16)?;
    let (clamped, constant) = clamp.apply(&q)?;
    println!("clamped to n = {}, constant = {constant:.6}", clamped.n());

    let reduced = reduce_dynamic_range(&clamped, 7);
    println!(
        "dynamic range {:.3} -> {:.3}",
        clamped.dynamic_range(),
        reduced.dynamic_range()
    );

    let solution = brute_force(&reduced, 2)?;
    println!("minimum {:.6} at {}", solution.energy, solution.x);

    let full = clamp.expand(&solution.x)?;
    let identity = q.energy(&full)? - (clamped.energy(&solution.x)? + constant);
    assert!(identity.abs() < 1e-9);
    println!("expanded solution {full}, energy identity holds");
    Ok(())
}
