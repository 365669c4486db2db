//! The hybrid solver: block-minimality over coherent sets, with Mal'tsev
//! subproblems handed to compact representations and the rest split along
//! link partitions into instances over smaller domains.

pub mod coherent;
pub mod link;
pub mod preprocess;

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::algebra::Elem;
use crate::domain::algebra_info;
use crate::error::{Error, Result};
use crate::instance::{Constraint, Instance};
use crate::maltsev::minimalize_maltsev;
use crate::propagation::{establish_k_minimality, is_unsat, pin_constant};

pub use coherent::{coherent_sets, CoherentIndex, CoherentSet};
pub use link::{link_partition, LinkPartition};
pub use preprocess::{localize, maroti_preprocess, normalize_instance, Localized};

/// One round of the block-minimality loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub depth: usize,
    pub round: usize,
    pub coherent_sets: Vec<Vec<String>>,
    pub deletions: usize,
}

#[derive(Clone, Debug)]
pub struct BlockMinimal {
    /// `None` when some constraint was emptied.
    pub instance: Option<Instance>,
    /// Whether preprocessing replaced a domain by a proper subalgebra.
    pub shrunk: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub max_depth: usize,
    pub rounds: usize,
    pub maltsev_calls: usize,
    pub link_splits: usize,
}

/// Solver state: memo tables, statistics and an optional trace.
#[derive(Debug, Default)]
pub struct HybridSolver {
    pub trace_enabled: bool,
    pub trace: Vec<TraceEvent>,
    pub stats: SolverStats,
    decided: FxHashMap<u64, Vec<(Instance, bool)>>,
    minimal: FxHashMap<u64, Vec<(Instance, Instance)>>,
}

fn lookup<T: Clone>(memo: &FxHashMap<u64, Vec<(Instance, T)>>, inst: &Instance) -> Option<T> {
    memo.get(&inst.fingerprint())?.iter().find(|(i, _)| i.same_problem(inst)).map(|(_, t)| t.clone())
}

fn store<T>(memo: &mut FxHashMap<u64, Vec<(Instance, T)>>, inst: &Instance, t: T) {
    memo.entry(inst.fingerprint()).or_default().push((inst.clone(), t));
}

/// Same instance with every domain and constraint emptied.
fn emptied(inst: &Instance) -> Instance {
    let mut out = inst.clone();
    for d in &mut out.domains {
        d.elements.clear();
    }
    for c in &mut out.constraints {
        c.tuples.clear();
    }
    out
}

impl HybridSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_trace() -> Self {
        HybridSolver { trace_enabled: true, ..Self::default() }
    }

    /// A satisfying assignment, or `None` when the instance has no solution.
    pub fn solve(&mut self, inst: &Instance) -> Result<Option<Vec<Elem>>> {
        let norm = normalize_instance(inst)?;
        let bm = self.block_minimality_at(&norm, 0)?;
        let Some(mut cur) = bm.instance else {
            if bm.shrunk {
                return Err(Error::Rejected("unsatisfiable after shrinking a domain; the original may still be satisfiable".into()));
            }
            return Ok(None);
        };
        for v in 0..cur.var_count() {
            let mut chosen = None;
            for &a in &cur.domains[v].elements.clone() {
                let pinned = pin_constant(&cur, v, a)?;
                if let Some(next) = self.block_minimality_at(&pinned, 0)?.instance {
                    chosen = Some(next);
                    break;
                }
            }
            cur = chosen.ok_or_else(|| {
                Error::InternalInvariantViolated(format!("no value of `{}` keeps the block-minimal instance nonempty", cur.vars[v]))
            })?;
        }
        let assignment: Vec<Elem> = cur.domains.iter().map(|d| d.elements[0]).collect();
        if !inst.satisfies(&assignment) {
            return Err(Error::InternalInvariantViolated(format!("extracted assignment {assignment:?} is not a solution")));
        }
        Ok(Some(assignment))
    }

    /// Runs block-minimality on a (normalized) copy of the instance.
    pub fn block_minimality(&mut self, inst: &Instance) -> Result<BlockMinimal> {
        let norm = normalize_instance(inst)?;
        self.block_minimality_at(&norm, 0)
    }

    /// Whether the instance is satisfiable.
    pub fn decide(&mut self, inst: &Instance) -> Result<bool> {
        let norm = normalize_instance(inst)?;
        self.decide_at(&norm, 0)
    }

    fn decide_at(&mut self, inst: &Instance, depth: usize) -> Result<bool> {
        if let Some(b) = lookup(&self.decided, inst) {
            return Ok(b);
        }
        let bm = self.block_minimality_at(inst, depth)?;
        if bm.instance.is_none() && bm.shrunk {
            return Err(Error::Rejected("subinstance unsatisfiable only after shrinking a domain".into()));
        }
        let sat = bm.instance.is_some();
        store(&mut self.decided, inst, sat);
        Ok(sat)
    }

    /// Exact minimalization: keeps the tuples and domain elements used by some solution.
    fn minimalize_at(&mut self, inst: &Instance, depth: usize) -> Result<Instance> {
        if let Some(m) = lookup(&self.minimal, inst) {
            return Ok(m);
        }
        let local = localize(inst)?;
        let maltsev = local.inst.domains.iter().all(|d| d.algebra.is_maltsev_on(&d.algebra.elements().collect::<Vec<_>>()));
        let out = if maltsev {
            self.stats.maltsev_calls += 1;
            local.lift(&minimalize_maltsev(&local.inst)?)
        } else {
            self.minimalize_by_search(inst, depth)?
        };
        store(&mut self.minimal, inst, out.clone());
        Ok(out)
    }

    /// Minimalization by deciding each unsupported tuple with the tuple pinned.
    fn minimalize_by_search(&mut self, inst: &Instance, depth: usize) -> Result<Instance> {
        let bm = self.block_minimality_at(inst, depth)?;
        if bm.shrunk {
            return Err(Error::Rejected("minimalization needed a domain shrink".into()));
        }
        let Some(base) = bm.instance else {
            return Ok(emptied(inst));
        };
        let mut used: Vec<Vec<Vec<Elem>>> = vec![Vec::new(); base.constraints.len()];
        let mut values: Vec<Vec<Elem>> = vec![Vec::new(); base.var_count()];
        for ci in 0..base.constraints.len() {
            for t in base.constraints[ci].tuples.clone() {
                if used[ci].contains(&t) {
                    continue;
                }
                let mut pinned = base.clone();
                pinned.constraints.push(Constraint::new(base.constraints[ci].scope.clone(), vec![t.clone()]));
                if let Some(sol) = self.solve_at(&pinned, depth)? {
                    for (cj, c) in base.constraints.iter().enumerate() {
                        let p = c.project_assignment(&sol);
                        if !used[cj].contains(&p) {
                            used[cj].push(p);
                        }
                    }
                    for (v, &a) in sol.iter().enumerate() {
                        if !values[v].contains(&a) {
                            values[v].push(a);
                        }
                    }
                }
            }
        }
        for v in 0..base.var_count() {
            for &a in &base.domains[v].elements.clone() {
                if values[v].contains(&a) {
                    continue;
                }
                if let Some(sol) = self.solve_at(&pin_constant(&base, v, a)?, depth)? {
                    for (w, &b) in sol.iter().enumerate() {
                        if !values[w].contains(&b) {
                            values[w].push(b);
                        }
                    }
                }
            }
        }
        let mut domains = base.domains.clone();
        for (d, vals) in domains.iter_mut().zip(&mut values) {
            vals.sort_unstable();
            d.elements = vals.clone();
        }
        let mut out = inst.with_domains(domains);
        for (c, u) in out.constraints.iter_mut().zip(&used) {
            c.tuples.retain(|t| u.contains(t));
        }
        if out.has_empty_constraint() {
            return Ok(emptied(inst));
        }
        Ok(out)
    }

    /// Solution extraction below the top level.
    fn solve_at(&mut self, inst: &Instance, depth: usize) -> Result<Option<Vec<Elem>>> {
        let bm = self.block_minimality_at(inst, depth)?;
        let Some(mut cur) = bm.instance else {
            if bm.shrunk {
                return Err(Error::Rejected("subinstance unsatisfiable only after shrinking a domain".into()));
            }
            return Ok(None);
        };
        for v in 0..cur.var_count() {
            if cur.domains[v].len() == 1 {
                continue;
            }
            let mut chosen = None;
            for &a in &cur.domains[v].elements.clone() {
                if let Some(next) = self.block_minimality_at(&pin_constant(&cur, v, a)?, depth)?.instance {
                    chosen = Some(next);
                    break;
                }
            }
            cur = chosen.ok_or_else(|| {
                Error::InternalInvariantViolated(format!("no value of `{}` keeps the block-minimal instance nonempty", cur.vars[v]))
            })?;
        }
        let assignment: Vec<Elem> = cur.domains.iter().map(|d| d.elements[0]).collect();
        if !inst.satisfies(&assignment) {
            return Err(Error::InternalInvariantViolated(format!("extracted assignment {assignment:?} is not a solution")));
        }
        Ok(Some(assignment))
    }

    /// Minimal `P_W` for one coherent set, over local labels.
    fn minimal_on(&mut self, local: &Instance, set: &CoherentSet, depth: usize) -> Result<Instance> {
        let sub = local.restrict_to(&set.vars);
        let maltsev = sub.domains.iter().all(|d| d.algebra.is_maltsev_on(&d.elements));
        if maltsev {
            self.stats.maltsev_calls += 1;
            return minimalize_maltsev(&sub);
        }
        let intervals: Vec<_> = set
            .vars
            .iter()
            .map(|&w| set.triples.iter().find(|t| t.coord == w).expect("class meets every variable of its set").interval.clone())
            .collect();
        let lp = link_partition(&sub, &(0..set.vars.len()).collect::<Vec<_>>(), &intervals).map_err(|e| match e {
            Error::PreconditionViolated(msg) => Error::InternalInvariantViolated(format!(
                "coherent set {:?} is neither Mal'tsev nor has minimal elements: {msg}",
                set.vars.iter().map(|&v| local.vars[v].clone()).collect::<Vec<_>>()
            )),
            other => other,
        })?;
        if lp.k < 2 {
            return Err(Error::InternalInvariantViolated(format!(
                "link partition of {:?} has a single part",
                set.vars.iter().map(|&v| local.vars[v].clone()).collect::<Vec<_>>()
            )));
        }
        self.stats.link_splits += 1;
        let mut out = emptied(&sub);
        for j in 0..lp.k {
            let mut domains = sub.domains.clone();
            for (i, d) in domains.iter_mut().enumerate() {
                d.elements = lp.classes[i][j].clone();
            }
            if domains.iter().any(|d| d.elements.is_empty()) {
                continue;
            }
            let part = self.minimalize_at(&sub.with_domains(domains), depth + 1)?;
            for (o, d) in out.domains.iter_mut().zip(&part.domains) {
                o.elements.extend(&d.elements);
                o.elements.sort_unstable();
                o.elements.dedup();
            }
            for (o, c) in out.constraints.iter_mut().zip(&part.constraints) {
                o.tuples.extend(c.tuples.iter().cloned());
                o.tuples.sort_unstable();
                o.tuples.dedup();
            }
        }
        Ok(out)
    }

    fn block_minimality_at(&mut self, inst: &Instance, depth: usize) -> Result<BlockMinimal> {
        self.stats.max_depth = self.stats.max_depth.max(depth);
        let bound = inst.domains.iter().map(|d| d.algebra.size()).max().unwrap_or(0);
        if depth > bound + 1 {
            return Err(Error::InternalInvariantViolated(format!("recursion depth {depth} exceeds domain size {bound}")));
        }
        let mut cur = inst.clone();
        let mut shrunk = false;
        let mut round = 0;
        loop {
            round += 1;
            self.stats.rounds += 1;
            cur = establish_k_minimality(&cur, 3);
            if is_unsat(&cur) {
                return Ok(BlockMinimal { instance: None, shrunk });
            }
            let pre = maroti_preprocess(&cur)?;
            if pre.shrunk {
                shrunk = true;
                cur = pre.instance;
                continue;
            }
            let local = localize(&cur)?;
            let index = coherent_sets(&local.inst)?;
            let mut sets = index.sets();
            sets.sort_by(|a, b| a.vars.cmp(&b.vars));
            sets.dedup_by(|a, b| a.vars == b.vars);
            let mut next = local.inst.clone();
            for set in &sets {
                let minimal = self.minimal_on(&local.inst, set, depth)?;
                apply_minimal(&mut next, &set.vars, &minimal);
            }
            let deletions = local.inst.total_tuples() - next.total_tuples()
                + local.inst.domains.iter().zip(&next.domains).map(|(a, b)| a.len() - b.len()).sum::<usize>();
            if self.trace_enabled {
                self.trace.push(TraceEvent {
                    depth,
                    round,
                    coherent_sets: sets.iter().map(|s| s.vars.iter().map(|&v| cur.vars[v].clone()).collect()).collect(),
                    deletions,
                });
            }
            if deletions == 0 {
                return Ok(BlockMinimal { instance: Some(cur), shrunk });
            }
            cur = local.lift(&next);
            if is_unsat(&cur) {
                return Ok(BlockMinimal { instance: None, shrunk });
            }
        }
    }
}

/// Deletes from `inst` the tuples whose restriction to `w` is not in the
/// minimal instance `minimal` of `P_W`.
fn apply_minimal(inst: &mut Instance, w: &[usize], minimal: &Instance) {
    let mut k = 0;
    for c in inst.constraints.iter_mut() {
        let keep: Vec<usize> = (0..c.scope.len()).filter(|&p| w.contains(&c.scope[p])).collect();
        if keep.is_empty() {
            continue;
        }
        let allowed = &minimal.constraints[k];
        k += 1;
        c.tuples.retain(|t| allowed.contains(&keep.iter().map(|&p| t[p]).collect::<Vec<_>>()));
    }
    let mut domains = inst.domains.clone();
    for (i, &v) in w.iter().enumerate() {
        domains[v].elements.retain(|a| minimal.domains[i].contains(*a));
    }
    *inst = inst.with_domains(domains);
}

/// Convenience wrapper around a fresh solver.
pub fn solve(inst: &Instance) -> Result<Option<Vec<Elem>>> {
    HybridSolver::new().solve(inst)
}

pub fn block_minimality(inst: &Instance) -> Result<BlockMinimal> {
    HybridSolver::new().block_minimality(inst)
}

/// θ-intervals available at each variable of a localized instance.
pub fn interval_counts(local: &Instance) -> Result<Vec<usize>> {
    local.domains.iter().map(|d| Ok(algebra_info(&d.algebra)?.intervals.len())).collect()
}
