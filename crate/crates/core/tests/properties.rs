use std::sync::Arc;

use proptest::prelude::*;
use sbmcsp::congruence::generate_congruence;
use sbmcsp::generate::{random_fixture, random_instance, random_relation, rng_for, Profile};
use sbmcsp::hybrid::HybridSolver;
use sbmcsp::maltsev::minimalize_maltsev;
use sbmcsp::oracle::{brute_minimalize, brute_solutions};
use sbmcsp::propagation::establish_k_minimality;
use sbmcsp::relation::rectangularity_check;
use sbmcsp::sbm::{find_sigma, fix_b, normalize_operations};
use sbmcsp::{Elem, FiniteAlgebra};

fn mixed(seed: u64) -> Profile {
    let algs = match seed % 3 {
        0 => vec![fix_b()],
        1 => vec![fix_b(), FiniteAlgebra::cyclic(2)],
        _ => vec![fix_b(), FiniteAlgebra::cyclic(3)],
    };
    Profile::new(algs, 3 + (seed % 3) as usize, 2 + (seed % 5) as usize).density(0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_is_deterministic(seed in any::<u64>()) {
        let p = mixed(seed);
        prop_assert!(random_instance(seed, &p).same_problem(&random_instance(seed, &p)));
    }

    #[test]
    fn generated_relations_are_closed(seed in any::<u64>(), density in 0.0f64..0.5) {
        let mut rng = rng_for(seed);
        let b = Arc::new(fix_b());
        let z3 = Arc::new(FiniteAlgebra::cyclic(3));
        let rel = random_relation(&mut rng, vec![b.clone(), z3, b], density);
        prop_assert!(!rel.is_empty());
        prop_assert!(rel.is_closed());
    }

    #[test]
    fn k_minimality_is_a_sound_fixpoint(seed in 0u64..10_000, k in 1usize..=3) {
        let inst = random_instance(seed, &mixed(seed));
        let once = establish_k_minimality(&inst, k);
        prop_assert!(establish_k_minimality(&once, k).same_problem(&once));
        prop_assert_eq!(brute_solutions(&once).unwrap(), brute_solutions(&inst).unwrap());
        for (c, d) in once.constraints.iter().zip(&inst.constraints) {
            prop_assert!(c.tuples.iter().all(|t| d.contains(t)));
        }
    }

    #[test]
    fn block_minimality_keeps_solutions(seed in 0u64..10_000) {
        let inst = random_instance(seed, &mixed(seed));
        let bm = HybridSolver::new().block_minimality(&inst).unwrap();
        let sols = brute_solutions(&inst).unwrap();
        match bm.instance {
            Some(b) => prop_assert_eq!(brute_solutions(&b).unwrap(), sols),
            None => prop_assert!(sols.is_empty()),
        }
    }

    #[test]
    fn maltsev_minimalization_is_exact(seed in 0u64..10_000) {
        let algs = vec![FiniteAlgebra::cyclic(2), FiniteAlgebra::cyclic(3)];
        let inst = random_instance(seed, &Profile::new(algs, 5, 5).density(0.1));
        prop_assert!(minimalize_maltsev(&inst).unwrap().same_problem(&brute_minimalize(&inst).unwrap()));
    }

    #[test]
    fn affine_relations_are_rectangular(seed in any::<u64>(), arity in 2usize..=4) {
        let mut rng = rng_for(seed);
        let doms = (0..arity).map(|i| Arc::new(FiniteAlgebra::cyclic(2 + (i + seed as usize) % 3))).collect();
        let rel = random_relation(&mut rng, doms, 0.05);
        for mask in 1..(1u32 << arity) - 1 {
            let coords: Vec<usize> = (0..arity).filter(|i| mask & (1 << i) != 0).collect();
            prop_assert!(rectangularity_check(&rel, &coords).unwrap());
        }
    }

    #[test]
    fn normalization_is_idempotent(seed in any::<u64>()) {
        let alg = random_fixture(&mut rng_for(seed), 5);
        let sigma = find_sigma(&alg).unwrap();
        let once = normalize_operations(&alg, &sigma).unwrap();
        let twice = normalize_operations(&once, &find_sigma(&once).unwrap()).unwrap();
        prop_assert!(once.same_tables(&twice));
    }

    #[test]
    fn generated_congruences_are_compatible(seed in any::<u64>(), a in 0u8..6, b in 0u8..6) {
        let alg = random_fixture(&mut rng_for(seed), 6);
        let n = alg.size() as Elem;
        let c = generate_congruence(&alg, &[(a % n, b % n)]);
        prop_assert!(c.is_compatible(&alg));
        prop_assert!(c.related(a % n, b % n));
        prop_assert!(c.join(&c) == c && c.meet(&c) == c);
    }
}
