//! Ensembles: per-coherent-set solutions agreeing modulo per-variable
//! congruences, descended one cover at a time down to a full solution.

use std::sync::Arc;

use rand::seq::IndexedRandom;

use crate::algebra::Elem;
use crate::congruence::{Congruence, PrimeInterval};
use crate::domain::algebra_info;
use crate::error::{Error, Result};
use crate::hybrid::{coherent_sets, localize, normalize_instance, CoherentIndex, HybridSolver};
use crate::instance::Instance;
use crate::oracle::{brute_solutions, brute_solve};
use crate::relation::Relation;
use crate::separation::{collapsing_polynomial, IntervalTriple};

#[derive(Clone, Debug)]
pub struct Ensemble {
    /// `γ_v ≤ θ_v` per variable.
    pub gamma: Vec<Congruence>,
    pub index: CoherentIndex,
    /// Variables `W` of each triple's coherent set, sorted.
    pub sets: Vec<Vec<usize>>,
    /// `solutions[x][k]` is the value of `sets[x][k]`.
    pub solutions: Vec<Vec<Elem>>,
    /// Members rebuilt through collapsing polynomials so far.
    pub rebuilt: usize,
}

impl Ensemble {
    /// Value at `u` of some member covering it.
    pub fn value(&self, u: usize) -> Option<Elem> {
        self.sets.iter().zip(&self.solutions).find_map(|(w, s)| w.iter().position(|&x| x == u).map(|k| s[k]))
    }
}

/// Value of a variable covered by no coherent set: its max block is a singleton.
fn uncovered_value(inst: &Instance, u: usize) -> Result<Elem> {
    let info = algebra_info(&inst.domains[u].algebra)?;
    match info.cert.max_block.as_slice() {
        [a] => Ok(*a),
        other => Err(Error::InternalInvariantViolated(format!(
            "variable `{}` is in no coherent set but its max block is {other:?}",
            inst.vars[u]
        ))),
    }
}

/// Solution set of `P_W` as a relation over the domains of `w`.
fn solution_relation(inst: &Instance, w: &[usize]) -> Result<Relation> {
    let sub = inst.restrict_to(w);
    let sols = brute_solutions(&sub)?;
    let doms: Vec<_> = sub.domains.iter().map(|d| Arc::clone(&d.algebra)).collect();
    Relation::from_parts((0..w.len()).collect(), doms, sols)
}

/// Checks conditions (1)–(3); returns the first failure.
pub fn check_ensemble(inst: &Instance, ens: &Ensemble) -> Result<Option<String>> {
    for (x, (w, s)) in ens.sets.iter().zip(&ens.solutions).enumerate() {
        if !inst.restrict_to(w).satisfies(s) {
            return Ok(Some(format!("member {x} does not solve its subinstance")));
        }
    }
    for (x, (w1, s1)) in ens.sets.iter().zip(&ens.solutions).enumerate() {
        for (y, (w2, s2)) in ens.sets.iter().zip(&ens.solutions).enumerate().skip(x + 1) {
            for (i, &u) in w1.iter().enumerate() {
                if let Some(j) = w2.iter().position(|&z| z == u) {
                    if !ens.gamma[u].related(s1[i], s2[j]) {
                        return Ok(Some(format!("members {x} and {y} disagree at `{}`", inst.vars[u])));
                    }
                }
            }
        }
    }
    let mut xi = Vec::with_capacity(inst.var_count());
    for u in 0..inst.var_count() {
        xi.push(match ens.value(u) {
            Some(a) => a,
            None => uncovered_value(inst, u)?,
        });
    }
    for (ci, c) in inst.constraints.iter().enumerate() {
        let ok = c.tuples.iter().any(|t| c.scope.iter().zip(t).all(|(&u, &b)| ens.gamma[u].related(b, xi[u])));
        if !ok {
            return Ok(Some(format!("constraint {ci} misses the quotient tuple")));
        }
    }
    Ok(None)
}

/// The `θ̄`-ensemble: for each coherent set, the least solution inside the max blocks.
/// `inst` must be localized, 3-minimal and block-minimal.
pub fn initial_ensemble(inst: &Instance) -> Result<Ensemble> {
    initial_ensemble_with(inst, None)
}

/// As [`initial_ensemble`]; with a seed, each member is a random solution inside the max blocks.
pub fn initial_ensemble_with(inst: &Instance, seed: Option<u64>) -> Result<Ensemble> {
    let mut rng = seed.map(crate::generate::rng_for);
    let index = coherent_sets(inst)?;
    let mut gamma = Vec::with_capacity(inst.var_count());
    for d in &inst.domains {
        gamma.push(algebra_info(&d.algebra)?.cert.theta.clone());
    }
    let mut sets = Vec::new();
    let mut solutions = Vec::new();
    for x in 0..index.triples.len() {
        let w = index.set_of(x).vars;
        let mut sub = inst.restrict_to(&w);
        let mut domains = sub.domains.clone();
        for d in &mut domains {
            let info = algebra_info(&d.algebra)?;
            d.elements.retain(|&a| info.cert.in_max(a));
        }
        sub = sub.with_domains(domains);
        let names = w.iter().map(|&v| inst.vars[v].clone()).collect();
        let sol = match rng.as_mut() {
            None => brute_solve(&sub)?,
            Some(r) => brute_solutions(&sub)?.choose(r).cloned(),
        }
        .ok_or(Error::NoMaxSolution(names))?;
        sets.push(w);
        solutions.push(sol);
    }
    let ens = Ensemble { gamma, index, sets, solutions, rebuilt: 0 };
    if let Some(why) = check_ensemble(inst, &ens)? {
        return Err(Error::InternalInvariantViolated(format!("initial ensemble: {why}")));
    }
    Ok(ens)
}

/// Lowers `γ_v` to its lower cover `beta_v`, rebuilding every member whose
/// set contains `v` through a collapsing polynomial of that set's solutions.
pub fn ensemble_descend(inst: &Instance, ens: &Ensemble, v: usize, beta_v: &Congruence) -> Result<Ensemble> {
    let gamma_v = &ens.gamma[v];
    let interval = PrimeInterval { lower: beta_v.clone(), upper: gamma_v.clone() };
    let lattice = &algebra_info(&inst.domains[v].algebra)?.lattice;
    if !lattice.is_cover(beta_v, gamma_v) {
        return Err(Error::PreconditionViolated(format!("β is not a lower cover of γ at `{}`", inst.vars[v])));
    }
    let mut out = ens.clone();
    out.gamma[v] = beta_v.clone();
    let Some(xi) = ens.value(v) else {
        return Ok(out);
    };
    if gamma_v.block_of(xi).iter().all(|&b| beta_v.related(b, xi)) {
        return Ok(out);
    }
    let home = ens
        .index
        .triples
        .iter()
        .position(|t| t.coord == v && t.interval == interval)
        .ok_or_else(|| Error::InternalInvariantViolated(format!("({}, β, γ) is not a triple", inst.vars[v])))?;
    let w_set = &ens.sets[home];
    let phi = &ens.solutions[home];
    let phi_v = phi[w_set.iter().position(|&u| u == v).expect("v lies in its own coherent set")];
    for x in 0..ens.sets.len() {
        let u_set = &ens.sets[x];
        let Some(iv) = u_set.iter().position(|&u| u == v) else {
            continue;
        };
        let psi = &ens.solutions[x];
        if beta_v.related(psi[iv], phi_v) {
            continue;
        }
        let rel = solution_relation(inst, u_set)?;
        let t = IntervalTriple::new(iv, interval.clone());
        let f = collapsing_polynomial(&rel, &t, psi, phi_v)
            .map_err(|e| Error::DescentFailed(format!("collapsing polynomial for member {x}: {e}")))?;
        let spliced: Vec<Elem> = u_set
            .iter()
            .enumerate()
            .map(|(k, u)| match w_set.iter().position(|z| z == u) {
                Some(j) => f.components[k].apply(phi[j]),
                None => psi[k],
            })
            .collect();
        if !rel.contains(&spliced) {
            return Err(Error::DescentFailed(format!("spliced member {x} is not a solution of its subinstance")));
        }
        out.solutions[x] = spliced;
        out.rebuilt += 1;
    }
    if let Some(why) = check_ensemble(inst, &out)? {
        return Err(Error::DescentFailed(why));
    }
    Ok(out)
}

/// Order in which variables are lowered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DescentOrder {
    /// Each variable all the way down, in input order.
    Sequential,
    /// One cover per variable per pass, variables in reverse order.
    RoundRobinReversed,
}

/// Steps `(v, β_v)` taking every `γ_v` from `θ_v` to `0_A`.
pub fn descent_schedule(inst: &Instance, order: DescentOrder) -> Result<Vec<(usize, Congruence)>> {
    let mut chains: Vec<Vec<Congruence>> = Vec::with_capacity(inst.var_count());
    for d in &inst.domains {
        let info = algebra_info(&d.algebra)?;
        let mut chain = info.lattice.maximal_chain_to(&info.cert.theta);
        chain.reverse();
        chain.remove(0);
        chains.push(chain);
    }
    let mut steps = Vec::new();
    match order {
        DescentOrder::Sequential => {
            for (v, chain) in chains.into_iter().enumerate() {
                steps.extend(chain.into_iter().map(|c| (v, c)));
            }
        }
        DescentOrder::RoundRobinReversed => {
            let longest = chains.iter().map(Vec::len).max().unwrap_or(0);
            for k in 0..longest {
                for v in (0..chains.len()).rev() {
                    if let Some(c) = chains[v].get(k) {
                        steps.push((v, c.clone()));
                    }
                }
            }
        }
    }
    Ok(steps)
}

/// The full solution read off an ensemble with every `γ_v = 0_A`.
pub fn assemble(inst: &Instance, ens: &Ensemble) -> Result<Vec<Elem>> {
    (0..inst.var_count()).map(|u| ens.value(u).map(Ok).unwrap_or_else(|| uncovered_value(inst, u))).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnsembleOutcome {
    /// Block-minimality emptied a constraint; nothing to descend.
    Unsat,
    /// Full descent produced this verified solution (outer labels).
    Solved { solution: Vec<Elem>, steps: usize, rebuilt: usize },
}

/// Block-minimality, the θ̄-ensemble, and full descent in the given order.
/// `seed` randomizes the initial members.
pub fn verify_ensemble(inst: &Instance, order: DescentOrder, seed: Option<u64>) -> Result<EnsembleOutcome> {
    let norm = normalize_instance(inst)?;
    let bm = HybridSolver::new().block_minimality(&norm)?;
    if bm.shrunk {
        return Err(Error::Rejected("ensemble verification needs compliant domains".into()));
    }
    let Some(block_minimal) = bm.instance else {
        return Ok(EnsembleOutcome::Unsat);
    };
    let local = localize(&block_minimal)?;
    let mut ens = initial_ensemble_with(&local.inst, seed)?;
    let steps = descent_schedule(&local.inst, order)?;
    for (v, beta) in &steps {
        ens = ensemble_descend(&local.inst, &ens, *v, beta)?;
    }
    let psi = assemble(&local.inst, &ens)?;
    if !local.inst.satisfies(&psi) {
        return Err(Error::DescentFailed(format!("assembled assignment {psi:?} is not a solution")));
    }
    let solution = local.lift_assignment(&psi);
    if !inst.satisfies(&solution) {
        return Err(Error::DescentFailed("lifted assignment is not a solution of the input".into()));
    }
    Ok(EnsembleOutcome::Solved { solution, steps: steps.len(), rebuilt: ens.rebuilt })
}
