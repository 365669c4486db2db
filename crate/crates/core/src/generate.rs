//! Seeded generators for random instances, relations and fixtures.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::instance::{Constraint, Domain, Instance};
use crate::relation::Relation;
use crate::sbm::{generate_fixture, SemilatticeSpec};

#[derive(Clone, Debug)]
pub struct Profile {
    pub algebras: Vec<Arc<FiniteAlgebra>>,
    pub vars: usize,
    pub constraints: usize,
    pub max_arity: usize,
    /// Probability that a tuple of the product is used as a seed of a relation.
    pub density: f64,
}

impl Profile {
    pub fn new(algebras: Vec<FiniteAlgebra>, vars: usize, constraints: usize) -> Self {
        Profile {
            algebras: algebras.into_iter().map(Arc::new).collect(),
            vars,
            constraints,
            max_arity: 3,
            density: 0.15,
        }
    }

    pub fn arity(mut self, k: usize) -> Self {
        self.max_arity = k;
        self
    }

    pub fn density(mut self, d: f64) -> Self {
        self.density = d;
        self
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn product(domains: &[Arc<FiniteAlgebra>]) -> Vec<Vec<Elem>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        out = out
            .into_iter()
            .flat_map(|t: Vec<Elem>| {
                d.elements().map(move |a| {
                    let mut u = t.clone();
                    u.push(a);
                    u
                })
            })
            .collect();
    }
    out
}

/// Subalgebra of the product generated by a random seed set (never empty).
pub fn random_relation(rng: &mut impl Rng, domains: Vec<Arc<FiniteAlgebra>>, density: f64) -> Relation {
    let all = product(&domains);
    let mut seed: Vec<Vec<Elem>> = all.iter().filter(|_| rng.random_bool(density.clamp(0.0, 1.0))).cloned().collect();
    if seed.is_empty() {
        seed.push(all.choose(rng).expect("nonempty product").clone());
    }
    let scope = (0..domains.len()).collect();
    Relation::generated(scope, domains, seed).expect("seed lies in the product")
}

/// Random instance over the profile's algebras; scopes have distinct variables.
pub fn random_instance(seed: u64, profile: &Profile) -> Instance {
    let mut rng = rng_for(seed);
    let n = profile.vars.max(1);
    let vars: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let algs: Vec<Arc<FiniteAlgebra>> =
        (0..n).map(|_| profile.algebras.choose(&mut rng).expect("profile has algebras").clone()).collect();
    let mut constraints = Vec::new();
    for _ in 0..profile.constraints {
        let k = rng.random_range(1..=profile.max_arity.clamp(1, n));
        let scope: Vec<usize> = rand::seq::index::sample(&mut rng, n, k).into_iter().collect();
        let doms = scope.iter().map(|&v| algs[v].clone()).collect();
        let rel = random_relation(&mut rng, doms, profile.density);
        constraints.push(Constraint::new(scope, rel.tuples().to_vec()));
    }
    let domains = algs.into_iter().map(Domain::full).collect();
    Instance::new(vars, domains, constraints).expect("generated instance is well formed")
}

/// Join tables of the small semilattices used for random fixtures.
pub fn small_semilattices() -> Vec<SemilatticeSpec> {
    let v = SemilatticeSpec { join: vec![vec![0, 2, 2], vec![2, 1, 2], vec![2, 2, 2]] };
    let diamond = SemilatticeSpec {
        join: vec![vec![0, 1, 2, 3], vec![1, 1, 3, 3], vec![2, 3, 2, 3], vec![3, 3, 3, 3]],
    };
    vec![SemilatticeSpec::chain(1), SemilatticeSpec::chain(2), SemilatticeSpec::chain(3), v, diamond]
}

/// Random inflation of a small semilattice by groups of order at most 3, with at most `max_size` elements.
pub fn random_fixture(rng: &mut impl Rng, max_size: usize) -> FiniteAlgebra {
    let specs = small_semilattices();
    loop {
        let spec = specs.choose(rng).expect("nonempty").clone();
        let groups: Vec<usize> = (0..spec.size()).map(|_| rng.random_range(1..=3)).collect();
        if groups.iter().sum::<usize>() <= max_size {
            return generate_fixture(&spec, &groups).expect("valid semilattice");
        }
    }
}
