//! Instance sets shared by the benchmarks.

use sbmcsp::generate::{random_instance, Profile};
use sbmcsp::sbm::fix_b;
use sbmcsp::{FiniteAlgebra, Instance};

/// Mixed FIX-B / Z2 / Z3 instances of the given size.
pub fn mixed_instances(count: u64, vars: usize, constraints: usize) -> Vec<Instance> {
    let algs = vec![fix_b(), FiniteAlgebra::cyclic(2), FiniteAlgebra::cyclic(3)];
    let profile = Profile::new(algs, vars, constraints).density(0.1);
    (0..count).map(|seed| random_instance(seed, &profile)).collect()
}

/// Affine instances over Z2, Z3 and Z4.
pub fn affine_instances(count: u64, vars: usize, constraints: usize) -> Vec<Instance> {
    let algs = vec![FiniteAlgebra::cyclic(2), FiniteAlgebra::cyclic(3), FiniteAlgebra::cyclic(4)];
    let profile = Profile::new(algs, vars, constraints).density(0.1);
    (0..count).map(|seed| random_instance(seed, &profile)).collect()
}
