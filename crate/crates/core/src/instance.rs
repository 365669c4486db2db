//! CSP instances: variables with algebra-backed domains and explicit
//! constraint relations, plus their JSON form.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::sync::Arc;

use rustc_hash::FxHasher;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraJson, Elem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::relation::Relation;
use crate::sbm::{fix_a, fix_b};

/// Domain of one variable: a subuniverse of an algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub algebra: Arc<FiniteAlgebra>,
    /// Sorted, nonempty for satisfiable instances.
    pub elements: Vec<Elem>,
}

impl Domain {
    pub fn full(algebra: Arc<FiniteAlgebra>) -> Self {
        let elements = algebra.elements().collect();
        Domain { algebra, elements }
    }

    pub fn contains(&self, a: Elem) -> bool {
        self.elements.binary_search(&a).is_ok()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.elements.len() == self.algebra.size()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    /// Variable indices; repetitions allowed.
    pub scope: Vec<usize>,
    /// Sorted and deduplicated.
    pub tuples: Vec<Vec<Elem>>,
}

impl Constraint {
    pub fn new(scope: Vec<usize>, mut tuples: Vec<Vec<Elem>>) -> Self {
        tuples.sort_unstable();
        tuples.dedup();
        Constraint { scope, tuples }
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        self.tuples.binary_search_by(|x| x.as_slice().cmp(t)).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    /// Tuple read off a full assignment.
    pub fn project_assignment(&self, assignment: &[Elem]) -> Vec<Elem> {
        self.scope.iter().map(|&v| assignment[v]).collect()
    }

    pub fn satisfied_by(&self, assignment: &[Elem]) -> bool {
        self.contains(&self.project_assignment(assignment))
    }

    /// Positions of the scope holding each distinct variable, in order of first occurrence.
    pub fn distinct_vars(&self) -> Vec<usize> {
        let mut seen = Vec::new();
        for &v in &self.scope {
            if !seen.contains(&v) {
                seen.push(v);
            }
        }
        seen
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub vars: Vec<String>,
    pub domains: Vec<Domain>,
    pub constraints: Vec<Constraint>,
}

impl Instance {
    /// Validates the shape of an instance. Tuples that give different values
    /// to a repeated variable can never be used by a solution and are dropped,
    /// as are tuples leaving a domain.
    pub fn new(vars: Vec<String>, domains: Vec<Domain>, constraints: Vec<Constraint>) -> Result<Self> {
        if vars.len() != domains.len() {
            return Err(Error::Malformed(format!("{} variables with {} domains", vars.len(), domains.len())));
        }
        let distinct: BTreeSet<&String> = vars.iter().collect();
        if distinct.len() != vars.len() {
            return Err(Error::Malformed("duplicate variable name".into()));
        }
        for d in &domains {
            for &a in &d.elements {
                d.algebra.check_elem(a)?;
            }
        }
        let mut inst = Instance { vars, domains, constraints: Vec::new() };
        for c in constraints {
            for &v in &c.scope {
                if v >= inst.vars.len() {
                    return Err(Error::BadIndex(v, inst.vars.len()));
                }
            }
            for t in &c.tuples {
                if t.len() != c.scope.len() {
                    return Err(Error::Malformed(format!("tuple {t:?} does not match scope of arity {}", c.scope.len())));
                }
                for (&v, &a) in c.scope.iter().zip(t) {
                    inst.domains[v].algebra.check_elem(a)?;
                }
            }
            let kept = c.tuples.into_iter().filter(|t| inst.tuple_fits(&c.scope, t)).collect();
            inst.constraints.push(Constraint::new(c.scope, kept));
        }
        Ok(inst)
    }

    fn tuple_fits(&self, scope: &[usize], t: &[Elem]) -> bool {
        scope.iter().zip(t).all(|(&v, &a)| self.domains[v].contains(a))
            && scope.iter().enumerate().all(|(i, &v)| scope[..i].iter().zip(t).all(|(&w, &b)| w != v || b == t[i]))
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.vars.iter().position(|v| v == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn has_empty_constraint(&self) -> bool {
        self.constraints.iter().any(Constraint::is_empty) || self.domains.iter().any(Domain::is_empty)
    }

    pub fn satisfies(&self, assignment: &[Elem]) -> bool {
        assignment.len() == self.var_count()
            && assignment.iter().enumerate().all(|(v, &a)| self.domains[v].contains(a))
            && self.constraints.iter().all(|c| c.satisfied_by(assignment))
    }

    /// Number of assignments to all variables.
    pub fn search_space(&self) -> f64 {
        self.domains.iter().map(|d| d.len() as f64).product()
    }

    /// Constraint `ci` as a relation over the domain algebras.
    pub fn relation(&self, ci: usize) -> Relation {
        let c = &self.constraints[ci];
        let doms = c.scope.iter().map(|&v| self.domains[v].algebra.clone()).collect();
        Relation::from_parts(c.scope.clone(), doms, c.tuples.clone()).expect("constraint tuples fit their domains")
    }

    /// Replaces the domains, dropping tuples that leave them.
    pub fn with_domains(&self, domains: Vec<Domain>) -> Instance {
        let mut out = Instance { vars: self.vars.clone(), domains, constraints: Vec::new() };
        for c in &self.constraints {
            let kept = c.tuples.iter().filter(|t| out.tuple_fits(&c.scope, t)).cloned().collect();
            out.constraints.push(Constraint { scope: c.scope.clone(), tuples: kept });
        }
        out
    }

    /// The instance `P_W`: variables `w` (renumbered in the given order) and
    /// the projections of every constraint onto its variables in `w`.
    pub fn restrict_to(&self, w: &[usize]) -> Instance {
        let pos: BTreeMap<usize, usize> = w.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut constraints = Vec::new();
        for c in &self.constraints {
            let keep: Vec<usize> = (0..c.scope.len()).filter(|&i| pos.contains_key(&c.scope[i])).collect();
            if keep.is_empty() {
                continue;
            }
            let scope = keep.iter().map(|&i| pos[&c.scope[i]]).collect();
            let tuples = c.tuples.iter().map(|t| keep.iter().map(|&i| t[i]).collect()).collect();
            constraints.push(Constraint::new(scope, tuples));
        }
        Instance {
            vars: w.iter().map(|&v| self.vars[v].clone()).collect(),
            domains: w.iter().map(|&v| self.domains[v].clone()).collect(),
            constraints,
        }
    }

    /// Stable hash of domains and constraints, used for memoization.
    pub fn fingerprint(&self) -> u64 {
        let mut h = FxHasher::default();
        for d in &self.domains {
            d.algebra.fingerprint().hash(&mut h);
            d.elements.hash(&mut h);
        }
        let mut cs = self.constraints.clone();
        cs.sort();
        cs.hash(&mut h);
        h.finish()
    }

    pub fn same_problem(&self, other: &Instance) -> bool {
        if self.domains.len() != other.domains.len() {
            return false;
        }
        let doms = self.domains.iter().zip(&other.domains).all(|(a, b)| {
            a.elements == b.elements && a.algebra.same_tables(&b.algebra)
        });
        let mut x = self.constraints.clone();
        let mut y = other.constraints.clone();
        x.sort();
        y.sort();
        doms && x == y
    }

    pub fn total_tuples(&self) -> usize {
        self.constraints.iter().map(|c| c.tuples.len()).sum()
    }
}

/// Named algebras available to instance files.
#[derive(Clone, Debug, Default)]
pub struct AlgebraRegistry {
    algebras: BTreeMap<String, Arc<FiniteAlgebra>>,
}

impl AlgebraRegistry {
    pub fn empty() -> Self {
        AlgebraRegistry::default()
    }

    /// FIX-A, FIX-B, Z2, Z3 and P3.
    pub fn builtin() -> Self {
        let mut r = AlgebraRegistry::default();
        for alg in [fix_a(), fix_b(), FiniteAlgebra::cyclic(2), FiniteAlgebra::cyclic(3), FiniteAlgebra::projection(3)] {
            r.insert(alg);
        }
        r
    }

    pub fn insert(&mut self, alg: FiniteAlgebra) -> Arc<FiniteAlgebra> {
        let a = Arc::new(alg);
        self.algebras.insert(a.name().to_string(), a.clone());
        a
    }

    pub fn get(&self, name: &str) -> Result<Arc<FiniteAlgebra>> {
        self.algebras.get(name).cloned().ok_or_else(|| Error::UnknownAlgebra(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.algebras.keys().map(String::as_str)
    }

    pub fn load_file(&mut self, path: &Path) -> Result<Arc<FiniteAlgebra>> {
        let text = std::fs::read_to_string(path)?;
        let json: AlgebraJson = serde_json::from_str(&text)?;
        Ok(self.insert(FiniteAlgebra::from_json(json)?))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintJson {
    pub scope: Vec<String>,
    pub tuples: Vec<Vec<usize>>,
}

/// Wire form: `{"vars", "domains": {var: algebra-name}, "constraints": [{"scope", "tuples"}]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub vars: Vec<String>,
    pub domains: BTreeMap<String, String>,
    pub constraints: Vec<ConstraintJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationJson {
    pub scope: Vec<String>,
    pub domains: Vec<String>,
    pub tuples: Vec<Vec<usize>>,
}

fn to_elem(x: usize) -> Result<Elem> {
    Elem::try_from(x).map_err(|_| Error::Malformed(format!("element {x} is too large")))
}

impl Instance {
    pub fn from_json(json: &InstanceJson, registry: &AlgebraRegistry) -> Result<Instance> {
        let mut domains = Vec::with_capacity(json.vars.len());
        for v in &json.vars {
            let name = json.domains.get(v).ok_or_else(|| Error::Malformed(format!("variable `{v}` has no domain")))?;
            domains.push(Domain::full(registry.get(name)?));
        }
        for k in json.domains.keys() {
            if !json.vars.contains(k) {
                return Err(Error::UnknownVariable(k.clone()));
            }
        }
        let mut constraints = Vec::with_capacity(json.constraints.len());
        for c in &json.constraints {
            let scope = c
                .scope
                .iter()
                .map(|v| json.vars.iter().position(|x| x == v).ok_or_else(|| Error::UnknownVariable(v.clone())))
                .collect::<Result<Vec<_>>>()?;
            let tuples = c
                .tuples
                .iter()
                .map(|t| t.iter().map(|&x| to_elem(x)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            constraints.push(Constraint::new(scope, tuples));
        }
        Instance::new(json.vars.clone(), domains, constraints)
    }

    pub fn to_json(&self) -> InstanceJson {
        InstanceJson {
            vars: self.vars.clone(),
            domains: self
                .vars
                .iter()
                .zip(&self.domains)
                .map(|(v, d)| (v.clone(), d.algebra.name().to_string()))
                .collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| ConstraintJson {
                    scope: c.scope.iter().map(|&v| self.vars[v].clone()).collect(),
                    tuples: c.tuples.iter().map(|t| t.iter().map(|&x| x as usize).collect()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json_str(text: &str, registry: &AlgebraRegistry) -> Result<Instance> {
        Self::from_json(&serde_json::from_str(text)?, registry)
    }
}

impl RelationJson {
    pub fn from_relation(rel: &Relation, names: &[String]) -> Self {
        RelationJson {
            scope: rel.scope().iter().map(|&v| names.get(v).cloned().unwrap_or_else(|| v.to_string())).collect(),
            domains: rel.domains().iter().map(|d| d.name().to_string()).collect(),
            tuples: rel.tuples().iter().map(|t| t.iter().map(|&x| x as usize).collect()).collect(),
        }
    }

    /// Scope names are numbered in order of first appearance.
    pub fn to_relation(&self, registry: &AlgebraRegistry) -> Result<Relation> {
        let mut names: Vec<&String> = Vec::new();
        let scope = self
            .scope
            .iter()
            .map(|v| match names.iter().position(|n| *n == v) {
                Some(i) => i,
                None => {
                    names.push(v);
                    names.len() - 1
                }
            })
            .collect();
        let domains = self.domains.iter().map(|d| registry.get(d)).collect::<Result<Vec<_>>>()?;
        let tuples = self
            .tuples
            .iter()
            .map(|t| t.iter().map(|&x| to_elem(x)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Relation::new(scope, domains, tuples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Instance {
        let reg = AlgebraRegistry::builtin();
        Instance::from_json_str(
            r#"{"vars": ["x", "y"], "domains": {"x": "Z2", "y": "FIX-B"},
                "constraints": [{"scope": ["x", "y"], "tuples": [[0, 1], [1, 2]]}]}"#,
            &reg,
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip() {
        let inst = sample();
        let reg = AlgebraRegistry::builtin();
        let back = Instance::from_json(&inst.to_json(), &reg).unwrap();
        assert!(back.same_problem(&inst));
        assert_eq!(back.vars, inst.vars);
    }

    #[test]
    fn unknown_names_are_errors() {
        let reg = AlgebraRegistry::builtin();
        let e = Instance::from_json_str(r#"{"vars": ["x"], "domains": {"x": "Q"}, "constraints": []}"#, &reg);
        assert!(matches!(e, Err(Error::UnknownAlgebra(_))));
        let e = Instance::from_json_str(
            r#"{"vars": ["x"], "domains": {"x": "Z2"}, "constraints": [{"scope": ["y"], "tuples": []}]}"#,
            &reg,
        );
        assert!(matches!(e, Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn repeated_variables_drop_inconsistent_tuples() {
        let z2 = Arc::new(FiniteAlgebra::cyclic(2));
        let inst = Instance::new(
            vec!["x".into()],
            vec![Domain::full(z2)],
            vec![Constraint::new(vec![0, 0], vec![vec![0, 1], vec![1, 1]])],
        )
        .unwrap();
        assert_eq!(inst.constraints[0].tuples, vec![vec![1, 1]]);
    }

    #[test]
    fn restriction_projects_constraints() {
        let inst = sample();
        let sub = inst.restrict_to(&[1]);
        assert_eq!(sub.vars, vec!["y".to_string()]);
        assert_eq!(sub.constraints[0].tuples, vec![vec![1], vec![2]]);
        assert!(inst.satisfies(&[0, 1]));
        assert!(!inst.satisfies(&[0, 2]));
    }
}
