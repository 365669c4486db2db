use sbmcsp::generate::{random_instance, Profile};
use sbmcsp::hybrid::HybridSolver;
use sbmcsp::oracle::brute_solve;
use sbmcsp::sbm::fix_b;
use sbmcsp::FiniteAlgebra;

fn profile(seed: u64) -> Profile {
    let algs = match seed % 4 {
        0 => vec![fix_b()],
        1 => vec![fix_b(), FiniteAlgebra::cyclic(2)],
        2 => vec![fix_b(), FiniteAlgebra::cyclic(3)],
        _ => vec![fix_b(), FiniteAlgebra::cyclic(2), FiniteAlgebra::cyclic(3)],
    };
    let vars = 3 + (seed % 4) as usize;
    Profile::new(algs, vars, 2 + (seed % 7) as usize).density([0.05, 0.1, 0.2][(seed % 3) as usize])
}

#[test]
fn agrees_with_oracle() {
    let mut sat = 0;
    let mut links = 0;
    for seed in 0..600 {
        let inst = random_instance(seed, &profile(seed));
        let expected = brute_solve(&inst).unwrap();
        let mut s = HybridSolver::new();
        let got = s.solve(&inst).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        links += s.stats.link_splits;
        assert_eq!(got.is_some(), expected.is_some(), "seed {seed}");
        if let Some(a) = got {
            assert!(inst.satisfies(&a), "seed {seed}");
            sat += 1;
        }
    }
    assert!(sat > 0 && links > 0, "sat {sat} links {links}");
}
