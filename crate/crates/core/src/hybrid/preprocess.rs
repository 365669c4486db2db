//! Normalization, localization of domains and the minimal-element reduction.

use std::sync::Arc;

use once_cell::sync::Lazy;
use parking_lot::Mutex;
use rustc_hash::FxHashMap;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::instance::{Constraint, Domain, Instance};
use crate::sbm::{check_normalized, find_sigma, minimal_element, normalize_and_verify};

type AlgCache = Lazy<Mutex<FxHashMap<u64, Vec<(Arc<FiniteAlgebra>, Arc<FiniteAlgebra>)>>>>;

static NORMALIZED: AlgCache = Lazy::new(|| Mutex::new(FxHashMap::default()));

/// The algebra with normalized operations; already normalized algebras are returned unchanged.
pub fn normalized(alg: &Arc<FiniteAlgebra>) -> Result<Arc<FiniteAlgebra>> {
    let key = alg.fingerprint();
    if let Some(bucket) = NORMALIZED.lock().get(&key) {
        if let Some((_, n)) = bucket.iter().find(|(a, _)| a.same_tables(alg)) {
            return Ok(n.clone());
        }
    }
    let sigma = find_sigma(alg)?;
    let out = if check_normalized(alg, &sigma).is_ok() {
        alg.clone()
    } else {
        let (norm, _) = normalize_and_verify(alg)?;
        Arc::new(norm.with_name(alg.name()))
    };
    NORMALIZED.lock().entry(key).or_default().push((alg.clone(), out.clone()));
    Ok(out)
}

/// Replaces every domain algebra by its normalized form. Relations stay
/// subalgebras because the new operations are terms of the old ones.
pub fn normalize_instance(inst: &Instance) -> Result<Instance> {
    let mut out = inst.clone();
    for d in &mut out.domains {
        d.algebra = normalized(&d.algebra)?;
    }
    Ok(out)
}

type RestrictedCache = FxHashMap<(u64, Vec<Elem>), Vec<(Arc<FiniteAlgebra>, Arc<FiniteAlgebra>)>>;

static RESTRICTED: Lazy<Mutex<RestrictedCache>> =
    Lazy::new(|| Mutex::new(FxHashMap::default()));

/// The subalgebra on `elements`, relabelled `0..k` in order.
pub fn restricted(alg: &Arc<FiniteAlgebra>, elements: &[Elem]) -> Result<Arc<FiniteAlgebra>> {
    if elements.len() == alg.size() {
        return Ok(alg.clone());
    }
    let key = (alg.fingerprint(), elements.to_vec());
    if let Some(bucket) = RESTRICTED.lock().get(&key) {
        if let Some((_, r)) = bucket.iter().find(|(a, _)| a.same_tables(alg)) {
            return Ok(r.clone());
        }
    }
    let (sub, _) = alg.restrict(elements)?;
    let sub = Arc::new(sub);
    RESTRICTED.lock().entry(key).or_default().push((alg.clone(), sub.clone()));
    Ok(sub)
}

/// An instance whose domains are whole (relabelled) subalgebras of an outer one.
#[derive(Clone, Debug)]
pub struct Localized {
    pub inst: Instance,
    /// `to_outer[v][a]` is the outer label of local element `a` of `v`.
    pub to_outer: Vec<Vec<Elem>>,
    pub outer: Instance,
}

pub fn localize(outer: &Instance) -> Result<Localized> {
    let mut domains = Vec::with_capacity(outer.var_count());
    let mut to_outer = Vec::with_capacity(outer.var_count());
    let mut to_local: Vec<Vec<Elem>> = Vec::with_capacity(outer.var_count());
    for d in &outer.domains {
        let alg = restricted(&d.algebra, &d.elements)?;
        let mut back = vec![Elem::MAX; d.algebra.size()];
        for (i, &a) in d.elements.iter().enumerate() {
            back[a as usize] = i as Elem;
        }
        domains.push(Domain::full(alg));
        to_outer.push(d.elements.clone());
        to_local.push(back);
    }
    let constraints = outer
        .constraints
        .iter()
        .map(|c| {
            let tuples = c
                .tuples
                .iter()
                .map(|t| c.scope.iter().zip(t).map(|(&v, &a)| to_local[v][a as usize]).collect())
                .collect();
            Constraint::new(c.scope.clone(), tuples)
        })
        .collect();
    Ok(Localized { inst: Instance { vars: outer.vars.clone(), domains, constraints }, to_outer, outer: outer.clone() })
}

impl Localized {
    pub fn lift_assignment(&self, a: &[Elem]) -> Vec<Elem> {
        a.iter().enumerate().map(|(v, &x)| self.to_outer[v][x as usize]).collect()
    }

    /// Outer instance with domains and constraints cut down to `local`, an
    /// instance over the local labels with the same variables and constraint order.
    pub fn lift(&self, local: &Instance) -> Instance {
        let mut out = self.outer.clone();
        for (v, d) in out.domains.iter_mut().enumerate() {
            d.elements = local.domains[v].elements.iter().map(|&a| self.to_outer[v][a as usize]).collect();
        }
        for (c, l) in out.constraints.iter_mut().zip(&local.constraints) {
            let mut tuples: Vec<Vec<Elem>> = l
                .tuples
                .iter()
                .map(|t| c.scope.iter().zip(t).map(|(&v, &a)| self.to_outer[v][a as usize]).collect())
                .collect();
            tuples.sort_unstable();
            c.tuples = tuples;
        }
        out
    }
}

/// Whether a domain is Mal'tsev or has a minimal element.
pub fn is_compliant(alg: &FiniteAlgebra) -> bool {
    alg.size() <= 1 || alg.is_maltsev_on(&alg.elements().collect::<Vec<_>>()) || minimal_element(alg).is_some()
}

/// `{a : x ↦ x·a is onto}`.
pub fn onto_multipliers(alg: &FiniteAlgebra) -> Vec<Elem> {
    alg.elements()
        .filter(|&a| {
            let mut hit = vec![false; alg.size()];
            for x in alg.elements() {
                hit[alg.dot(x, a) as usize] = true;
            }
            hit.into_iter().all(|h| h)
        })
        .collect()
}

/// Outcome of the minimal-element reduction.
#[derive(Clone, Debug)]
pub struct Preprocessed {
    pub instance: Instance,
    /// Whether some domain was replaced by a proper subalgebra.
    pub shrunk: bool,
}

/// Makes every domain Mal'tsev or give it a minimal element. A domain
/// failing both is replaced by the subalgebra generated by its onto
/// multipliers when that is proper; otherwise the instance is rejected.
pub fn maroti_preprocess(inst: &Instance) -> Result<Preprocessed> {
    let mut cur = inst.clone();
    let mut shrunk = false;
    loop {
        let local = localize(&cur)?;
        let mut changed = false;
        for v in 0..cur.var_count() {
            let alg = &local.inst.domains[v].algebra;
            if cur.domains[v].is_empty() || is_compliant(alg) {
                continue;
            }
            let c = onto_multipliers(alg);
            let sg = if c.is_empty() { Vec::new() } else { alg.generate_subalgebra(&c)? };
            if sg.is_empty() || sg.len() == alg.size() {
                return Err(Error::Rejected(format!(
                    "domain of `{}` ({}) has no minimal element, is not Mal'tsev, and its onto multipliers {:?} generate no proper subalgebra",
                    cur.vars[v],
                    alg.name(),
                    c
                )));
            }
            let mut elements: Vec<Elem> = sg.iter().map(|&a| local.to_outer[v][a as usize]).collect();
            elements.sort_unstable();
            cur.domains[v].elements = elements;
            changed = true;
        }
        if !changed {
            return Ok(Preprocessed { instance: cur, shrunk });
        }
        shrunk = true;
        cur = cur.with_domains(cur.domains.clone());
    }
}
