//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::Rng;
use sbmcsp::domain::algebra_info;
use sbmcsp::ensemble::{verify_ensemble, DescentOrder, EnsembleOutcome};
use sbmcsp::generate::{random_fixture, random_instance, random_relation, rng_for, Profile};
use sbmcsp::hybrid::preprocess::{localize, normalize_instance, normalized};
use sbmcsp::hybrid::coherent::coherent_sets;
use sbmcsp::hybrid::HybridSolver;
use sbmcsp::maltsev::{solution_rep, solve_maltsev};
use sbmcsp::oracle::{brute_solutions, brute_solve};
use sbmcsp::propagation::{establish_k_minimality, is_unsat};
use sbmcsp::relation::{link_congruence, quotient_relation, rectangularity_check};
use sbmcsp::polynomial::pair_polynomial_monoid;
use sbmcsp::sbm::{find_sigma, fix_a, fix_b, generate_fixture, normalize_operations, SemilatticeSpec};
use sbmcsp::separation::{collapsing_polynomial, interval_triples, minimal_sets, separation_profile};
use sbmcsp::{AlgebraRegistry, Congruence, Constraint, Domain, Elem, Error, FiniteAlgebra, Instance, Relation};

type Outcome = Result<String, String>;

fn mixed_profile(seed: u64) -> Profile {
    let algs = match seed % 4 {
        0 => vec![fix_b()],
        1 => vec![fix_b(), FiniteAlgebra::cyclic(2)],
        2 => vec![fix_b(), FiniteAlgebra::cyclic(3)],
        _ => vec![fix_b(), FiniteAlgebra::cyclic(2), FiniteAlgebra::cyclic(3)],
    };
    let vars = 3 + (seed % 4) as usize;
    Profile::new(algs, vars, 2 + (seed % 7) as usize).density([0.05, 0.1, 0.2][(seed % 3) as usize])
}

fn fix_a_profile(seed: u64) -> Profile {
    let algs = match seed % 3 {
        0 => vec![fix_a()],
        1 => vec![fix_a(), fix_b()],
        _ => vec![fix_a(), FiniteAlgebra::cyclic(2)],
    };
    Profile::new(algs, 2 + (seed % 4) as usize, 1 + (seed % 6) as usize).density([0.05, 0.1, 0.2][(seed % 3) as usize])
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_oracle_agreement() -> Outcome {
    let start = Instant::now();
    let (mut sat, mut unsat) = (0, 0);
    for seed in 0..500 {
        let inst = random_instance(seed, &mixed_profile(seed));
        let expected = brute_solve(&inst).map_err(|e| format!("seed {seed}: oracle {e}"))?;
        let got = HybridSolver::new().solve(&inst).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(got.is_some() == expected.is_some(), || format!("seed {seed}: solver {got:?}, oracle {expected:?}"))?;
        match got {
            Some(a) => {
                ensure(inst.satisfies(&a), || format!("seed {seed}: {a:?} violates a constraint"))?;
                sat += 1;
            }
            None => unsat += 1,
        }
    }
    // FIX-A domains shrink, so UNSAT after a shrink must surface as Rejected.
    let (mut rejected, mut fix_a_sat) = (0, 0);
    for seed in 0..1500 {
        let inst = random_instance(seed, &fix_a_profile(seed));
        let sat_oracle = brute_solve(&inst).map_err(|e| e.to_string())?.is_some();
        match HybridSolver::new().solve(&inst) {
            Ok(Some(a)) => {
                ensure(inst.satisfies(&a), || format!("FIX-A seed {seed}: bad assignment"))?;
                fix_a_sat += 1;
            }
            Ok(None) => ensure(!sat_oracle, || format!("FIX-A seed {seed}: UNSAT reported for a SAT instance"))?,
            Err(Error::Rejected(_)) => rejected += 1,
            Err(e) => return Err(format!("FIX-A seed {seed}: {e}")),
        }
    }
    ensure(rejected > 0, || "no FIX-A instance reached the Rejected path".into())?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!(
        "500 instances ({sat} SAT, {unsat} UNSAT), 0 disagreements; FIX-A: {fix_a_sat} solved, {rejected} rejected; {took:.1?}"
    ))
}

fn c2_block_minimal_implies_sat() -> Outcome {
    let mut checked = 0;
    for seed in 0..500 {
        let inst = random_instance(seed, &mixed_profile(seed));
        let bm = HybridSolver::new().block_minimality(&inst).map_err(|e| format!("seed {seed}: {e}"))?;
        if let Some(b) = bm.instance {
            ensure(!b.has_empty_constraint(), || format!("seed {seed}: block-minimal with an empty constraint"))?;
            let sat = brute_solve(&inst).map_err(|e| e.to_string())?.is_some();
            ensure(sat, || format!("seed {seed}: block-minimal but the oracle finds no solution"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} nonempty block-minimal instances, 0 counterexamples"))
}

fn c3_ensemble_descent() -> Outcome {
    let c3 = generate_fixture(&SemilatticeSpec::chain(3), &[1, 1, 2]).map_err(|e| e.to_string())?;
    let (mut instances, mut rebuilt) = (0, 0);
    for seed in 0..400u64 {
        let algs = match seed % 4 {
            0 => vec![fix_b()],
            1 => vec![fix_b(), FiniteAlgebra::cyclic(4)],
            2 => vec![c3.clone(), FiniteAlgebra::cyclic(2)],
            _ => vec![c3.clone(), FiniteAlgebra::cyclic(4)],
        };
        let p = Profile::new(algs, 3 + (seed % 3) as usize, 3 + (seed % 4) as usize)
            .density([0.1, 0.2, 0.3][(seed % 5 % 3) as usize]);
        let inst = random_instance(seed, &p);
        let mut solved_both = true;
        for order in [DescentOrder::Sequential, DescentOrder::RoundRobinReversed] {
            match verify_ensemble(&inst, order, Some(seed)).map_err(|e| format!("seed {seed} {order:?}: {e}"))? {
                EnsembleOutcome::Unsat => solved_both = false,
                EnsembleOutcome::Solved { solution, rebuilt: r, .. } => {
                    ensure(inst.satisfies(&solution), || format!("seed {seed} {order:?}: not a solution"))?;
                    rebuilt += r;
                }
            }
        }
        if solved_both {
            ensure(brute_solve(&inst).map_err(|e| e.to_string())?.is_some(), || format!("seed {seed}: oracle disagrees"))?;
            instances += 1;
        }
    }
    ensure(instances >= 100, || format!("only {instances} block-minimal instances"))?;
    Ok(format!("{instances} instances fully descended in 2 orders each, {rebuilt} member rebuilds"))
}

fn maltsev_algebras() -> Vec<Arc<FiniteAlgebra>> {
    let mut out: Vec<Arc<FiniteAlgebra>> = (2..=4).map(|n| Arc::new(FiniteAlgebra::cyclic(n))).collect();
    out.push(Arc::new(generate_fixture(&SemilatticeSpec::chain(1), &[3]).expect("group fixture")));
    out
}

fn c4_rectangularity() -> Outcome {
    let algs = maltsev_algebras();
    let mut rng = rng_for(4);
    let (mut relations, mut splits) = (0, 0);
    while relations < 200 {
        let arity = rng.random_range(2..=4);
        let doms: Vec<Arc<FiniteAlgebra>> = (0..arity).map(|_| algs.choose(&mut rng).expect("nonempty").clone()).collect();
        let rel = random_relation(&mut rng, doms, 0.08);
        if !rel.is_subdirect() {
            continue;
        }
        relations += 1;
        for mask in 1..(1u32 << arity) - 1 {
            let coords: Vec<usize> = (0..arity).filter(|i| mask & (1 << i) != 0).collect();
            let rect = rectangularity_check(&rel, &coords).map_err(|e| e.to_string())?;
            ensure(rect, || format!("not rectangular on {coords:?}: {:?}", rel.tuples()))?;
            link_congruence(&rel, &coords).map_err(|e| format!("ν on {coords:?}: {e}"))?;
            splits += 1;
        }
    }
    Ok(format!("{relations} subdirect products, {splits} coordinate splits, 0 failures"))
}

fn c5_separation_axioms() -> Outcome {
    let mut checked = 0;
    for seed in 0..500 {
        let inst = normalize_instance(&random_instance(seed, &mixed_profile(seed))).map_err(|e| e.to_string())?;
        let three = establish_k_minimality(&inst, 3);
        if is_unsat(&three) {
            continue;
        }
        let local = localize(&three).map_err(|e| e.to_string())?;
        let index = coherent_sets(&local.inst).map_err(|e| format!("seed {seed}: {e}"))?;
        index.check_axioms().map_err(|e| format!("seed {seed}: {e}"))?;
        checked += 1;
    }
    Ok(format!("{checked} 3-minimal instances, separation is an equivalence on all"))
}

fn c6_minimal_sets_in_max() -> Outcome {
    let mut algs: Vec<FiniteAlgebra> = vec![fix_a(), fix_b()];
    let mut rng = rng_for(6);
    algs.extend((0..20).map(|_| random_fixture(&mut rng, 6)));
    let mut sets = 0;
    for alg in algs {
        let norm = normalized(&Arc::new(alg)).map_err(|e| e.to_string())?;
        let info = algebra_info(&norm).map_err(|e| e.to_string())?;
        for iv in &info.intervals {
            ensure(iv.upper.le(&info.cert.theta), || format!("{}: interval above θ", norm.name()))?;
            for u in minimal_sets(&norm, &iv.lower, &iv.upper).map_err(|e| e.to_string())? {
                ensure(u.iter().all(|&x| info.cert.in_max(x)), || {
                    format!("{}: minimal set {u:?} leaves max {:?}", norm.name(), info.cert.max_block)
                })?;
                sets += 1;
            }
        }
    }
    Ok(format!("22 algebras, {sets} minimal sets, all inside max"))
}

fn c7_collapsing_polynomials() -> Outcome {
    let mut pool: Vec<Arc<FiniteAlgebra>> = vec![Arc::new(fix_b()), Arc::new(FiniteAlgebra::cyclic(2)), Arc::new(FiniteAlgebra::cyclic(3))];
    // Pair monoids over two 4-element domains outgrow the closure budget, so domains stay at 3 elements.
    pool.push(Arc::new(generate_fixture(&SemilatticeSpec::chain(2), &[2, 1]).map_err(|e| e.to_string())?));
    let mut rng = rng_for(7);
    let (mut built, mut attempts) = (0, 0);
    while built < 100 {
        attempts += 1;
        ensure(attempts < 10_000, || format!("only {built} relations met the preconditions"))?;
        let doms: Vec<Arc<FiniteAlgebra>> = (0..2).map(|_| pool.choose(&mut rng).expect("nonempty").clone()).collect();
        let rel = random_relation(&mut rng, doms, 0.25);
        if !rel.is_subdirect() {
            continue;
        }
        let triples = interval_triples(&rel).map_err(|e| e.to_string())?;
        let in_max: Vec<&Vec<Elem>> = rel
            .tuples()
            .iter()
            .filter(|t| t.iter().zip(rel.domains()).all(|(&x, d)| algebra_info(d).map(|i| i.cert.in_max(x)).unwrap_or(false)))
            .collect();
        let choice = triples.iter().find_map(|t| {
            in_max.iter().find_map(|a| {
                (0..rel.domains()[t.coord].size() as Elem)
                    .find(|&b| t.beta().related(a[t.coord], b) && !t.alpha().related(a[t.coord], b))
                    .map(|b| (t.clone(), (*a).clone(), b))
            })
        });
        let Some((t, a, b)) = choice else { continue };
        let f = collapsing_polynomial(&rel, &t, &a, b).map_err(|e| format!("{:?} {t:?}: {e}", rel.tuples()))?;
        let mon = pair_polynomial_monoid(&rel).map_err(|e| e.to_string())?;
        ensure(mon.contains(&f.components), || "components are not a polynomial of the relation".into())?;
        ensure(f.preserves_relation(&rel), || "polynomial leaves the relation".into())?;
        ensure(f.components.iter().all(|c| c.compose(c) == *c), || "not idempotent".into())?;
        ensure(f.apply(&a) == a, || format!("f(a) ≠ a for a = {a:?}"))?;
        ensure(t.alpha().related(f.components[t.coord].apply(b), b), || "f_i(b) is not α-related to b".into())?;
        for (u, separable) in separation_profile(&rel, &t).map_err(|e| e.to_string())? {
            let fu = &f.components[u.coord];
            if separable {
                ensure(fu.collapses(u.beta(), u.alpha()), || format!("(C1) fails at {u:?}"))?;
            } else {
                let d = &rel.domains()[u.coord];
                let mins = minimal_sets(d, u.alpha(), u.beta()).map_err(|e| e.to_string())?;
                ensure(mins.contains(&fu.image()), || format!("(C2) fails at {u:?}: image {:?}", fu.image()))?;
            }
        }
        built += 1;
    }
    Ok(format!("100 binary subdirect products ({attempts} draws), all collapsing conditions hold"))
}

fn intro_relation() -> Relation {
    let rows: [[Elem; 12]; 3] = [
        [0, 0, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2],
        [0, 1, 0, 1, 0, 0, 1, 1, 2, 2, 0, 1],
        [0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 2, 2],
    ];
    let tuples = (0..12).map(|j| vec![rows[0][j], rows[1][j], rows[2][j]]).collect();
    let a = Arc::new(FiniteAlgebra::projection(3));
    Relation::from_parts(vec![0, 1, 2], vec![a.clone(), a.clone(), a], tuples).expect("well-formed")
}

fn c8_intro_example() -> Outcome {
    let r = intro_relation();
    ensure(r.len() == 12, || format!("R has {} tuples", r.len()))?;
    let d = Domain::full(r.domains()[0].clone());
    let inst = Instance::new(
        vec!["x".into(), "y".into(), "z".into()],
        vec![d.clone(), d.clone(), d],
        vec![Constraint::new(vec![0, 1, 2], r.tuples().to_vec())],
    )
    .map_err(|e| e.to_string())?;
    ensure(brute_solutions(&inst).map_err(|e| e.to_string())? == r.tuples(), || "oracle does not return R".into())?;
    // B = {0,1} is block 0, C = {2} is block 1.
    let bc = Congruence::from_blocks(3, &[vec![0, 1], vec![2]]);
    let quotient = quotient_relation(&r, &[bc.clone(), bc.clone(), bc]).map_err(|e| e.to_string())?;
    let (b, c) = (0, 1);
    let mut printed = vec![vec![b, b, b], vec![c, b, b], vec![c, c, b], vec![c, b, c]];
    printed.sort();
    ensure(quotient.tuples() == printed.as_slice(), || format!("R′ = {:?}", quotient.tuples()))?;
    let restricted = r.filter(|t| t.iter().all(|&x| x < 2));
    let mut affine = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                if (x + y + z) % 2 == 0 {
                    affine.push(vec![x, y, z]);
                }
            }
        }
    }
    ensure(restricted.tuples() == affine.as_slice(), || format!("R ∩ B³ = {:?}", restricted.tuples()))?;
    Ok("R has 12 tuples, R′ matches its 4 printed tuples, R ∩ B³ is x+y+z=0 (4 tuples)".into())
}

fn c9_normalization() -> Outcome {
    let registry = AlgebraRegistry::builtin();
    let mut algs: Vec<FiniteAlgebra> =
        ["FIX-A", "FIX-B", "Z2", "Z3"].iter().map(|n| registry.get(n).expect("builtin").as_ref().clone()).collect();
    let mut rng = rng_for(9);
    algs.extend((0..30).map(|_| random_fixture(&mut rng, 4)));
    let count = algs.len();
    for alg in algs {
        let sigma = find_sigma(&alg).map_err(|e| format!("{}: {e}", alg.name()))?;
        let norm = normalize_operations(&alg, &sigma).map_err(|e| format!("{}: {e}", alg.name()))?;
        let q = norm.quotient(&sigma).map_err(|e| e.to_string())?;
        let idx = sigma.block_indices();
        let blk = |x: Elem| idx[x as usize];
        let leq = |x: Elem, y: Elem| q.dot(blk(x), blk(y)) == blk(y);
        for a in norm.elements() {
            for b in norm.elements() {
                let ab = norm.dot(a, b);
                ensure(norm.dot(a, ab) == ab, || format!("{}: x(xy) ≠ xy at ({a},{b})", alg.name()))?;
                ensure(leq(a, ab), || format!("{}: a ≰ ab at ({a},{b})", alg.name()))?;
                for c in norm.elements() {
                    let abc = norm.dot(norm.dot(a, b), c);
                    ensure(blk(norm.m(a, b, c)) == blk(abc), || format!("{}: block(m) ≠ block(abc) at ({a},{b},{c})", alg.name()))?;
                }
            }
        }
    }
    Ok(format!("{count} algebras, all three identities hold exhaustively"))
}

fn c10_maltsev_solver() -> Outcome {
    let algs = vec![FiniteAlgebra::cyclic(2), FiniteAlgebra::cyclic(3), FiniteAlgebra::cyclic(4)];
    let (mut sat, mut max_ratio) = (0, 0.0f64);
    for seed in 0..500 {
        let density = [0.05, 0.1, 0.2][seed as usize % 3];
        let p = Profile::new(algs.clone(), 4 + (seed % 3) as usize, 6).density(density);
        let inst = random_instance(seed, &p);
        let expected = brute_solutions(&inst).map_err(|e| e.to_string())?;
        let rep = solution_rep(&inst).map_err(|e| format!("seed {seed}: {e}"))?;
        let (w, bound) = (rep.witnesses().len(), rep.witness_bound());
        ensure(w <= bound, || format!("seed {seed}: {w} witnesses exceed {bound}"))?;
        max_ratio = max_ratio.max(w as f64 / bound as f64);
        ensure(rep.members() == expected, || format!("seed {seed}: represented set differs"))?;
        match solve_maltsev(&inst).map_err(|e| e.to_string())? {
            Some(a) => {
                ensure(inst.satisfies(&a), || format!("seed {seed}: bad assignment"))?;
                sat += 1;
            }
            None => ensure(expected.is_empty(), || format!("seed {seed}: missed a solution"))?,
        }
    }
    Ok(format!("500 affine instances ({sat} SAT), witness count at most {:.0}% of the bound", max_ratio * 100.0))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle agreement", c1_oracle_agreement),
        ("block-minimal implies satisfiable", c2_block_minimal_implies_sat),
        ("ensemble descent", c3_ensemble_descent),
        ("rectangularity and link transitivity", c4_rectangularity),
        ("separation is an equivalence", c5_separation_axioms),
        ("minimal sets inside max", c6_minimal_sets_in_max),
        ("collapsing polynomials", c7_collapsing_polynomials),
        ("introductory relation", c8_intro_example),
        ("normalization identities", c9_normalization),
        ("Mal'tsev solver", c10_maltsev_solver),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{took:.1?}]", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL {name}: {why} [{took:.1?}]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
