use sbmcsp::ensemble::{verify_ensemble, DescentOrder, EnsembleOutcome};
use sbmcsp::generate::{random_instance, Profile};
use sbmcsp::oracle::brute_solve;
use sbmcsp::sbm::{fix_b, generate_fixture, SemilatticeSpec};
use sbmcsp::FiniteAlgebra;

#[test]
fn descent_reaches_solutions() {
    let t = std::time::Instant::now();
    let mut solved = 0;
    let mut rebuilt_total = 0;
    let c3 = generate_fixture(&SemilatticeSpec::chain(3), &[1, 1, 2]).unwrap();
    for seed in 0..200u64 {
        let algs = match seed % 4 {
            0 => vec![fix_b()],
            1 => vec![fix_b(), FiniteAlgebra::cyclic(4)],
            2 => vec![c3.clone(), FiniteAlgebra::cyclic(2)],
            _ => vec![c3.clone(), FiniteAlgebra::cyclic(4)],
        };
        let p = Profile::new(algs, 3 + (seed % 3) as usize, 3 + (seed % 4) as usize)
            .density([0.1, 0.2, 0.3][(seed % 5 % 3) as usize]);
        let inst = random_instance(seed, &p);
        let sat = brute_solve(&inst).unwrap().is_some();
        for order in [DescentOrder::Sequential, DescentOrder::RoundRobinReversed] {
            match verify_ensemble(&inst, order, Some(seed)).unwrap_or_else(|e| panic!("seed {seed} {order:?}: {e}")) {
                EnsembleOutcome::Unsat => assert!(!sat, "seed {seed}"),
                EnsembleOutcome::Solved { solution, rebuilt, .. } => {
                    rebuilt_total += rebuilt;
                    assert!(inst.satisfies(&solution));
                    solved += 1;
                }
            }
        }
    }
    println!("solved {solved} rebuilt {rebuilt_total} in {:?}", t.elapsed());
    assert!(rebuilt_total > 0, "no descent step rebuilt a member");
}
