//! The multi-sorted ternary family on the (2,3)-consistent lists, the step-4
//! candidate search and deletion simulation.
//!
//! On a variable vertex the operation is `φ` itself, on a constraint top it is
//! `φ_B` (`φ` applied coordinatewise to rows of `R`), and on every other vertex
//! `v` it is `φ_B` transported along `σ_v`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::consistency::ConsistencyState;
use crate::error::{Error, Result};
use crate::hom::HomSearch;
use crate::structures::{check_operation_properties, Elem, Operation, Relation};
use crate::translation::{compute_sigma, Origin, TranslationResult};

/// `φ_B` on row indices of `rel` (rows in lexicographic tuple order).
pub fn build_phi_b(rel: &Relation, phi: &Operation) -> Result<Operation> {
    if phi.arity() != 3 {
        return Err(Error::input("φ must be ternary"));
    }
    let rows: Vec<&Vec<Elem>> = rel.iter().collect();
    let index: BTreeMap<&Vec<Elem>, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut failure = None;
    let op = Operation::from_fn(rows.len(), 3, |args| {
        let out: Vec<Elem> = (0..rel.arity())
            .map(|c| phi.apply(&[rows[args[0]][c], rows[args[1]][c], rows[args[2]][c]]))
            .collect();
        match index.get(&out) {
            Some(&i) => i,
            None => {
                failure.get_or_insert_with(|| (args.to_vec(), out));
                0
            }
        }
    })?;
    if let Some((args, out)) = failure {
        return Err(Error::construction(format!(
            "{} is not closed under φ: rows {:?} give {:?}",
            rel.name(),
            args.iter().map(|&i| rows[i]).collect::<Vec<_>>(),
            out
        )));
    }
    Ok(op)
}

/// Ternary operations indexed by `g`-vertex, each on the current list `L(v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiSortedFamily {
    carriers: Vec<Vec<usize>>,
    ops: Vec<Operation>,
}

impl MultiSortedFamily {
    pub fn from_parts(carriers: Vec<Vec<usize>>, ops: Vec<Operation>) -> Result<Self> {
        if carriers.len() != ops.len() {
            return Err(Error::input("one operation per carrier required"));
        }
        for (c, op) in carriers.iter().zip(&ops) {
            if op.size() != c.len() || op.arity() != 3 {
                return Err(Error::input("operation does not match its carrier"));
            }
        }
        Ok(MultiSortedFamily { carriers, ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `L(v)` as `h`-vertices; operation arguments index into this.
    pub fn carrier(&self, v: usize) -> &[usize] {
        &self.carriers[v]
    }

    pub fn operation(&self, v: usize) -> &Operation {
        &self.ops[v]
    }

    pub fn operation_mut(&mut self, v: usize) -> &mut Operation {
        &mut self.ops[v]
    }

    /// `φ_v(a,b,c)` on `h`-vertices; `None` if an argument is outside `L(v)`.
    pub fn apply(&self, v: usize, args: [usize; 3]) -> Option<usize> {
        let c = &self.carriers[v];
        let mut idx = [0; 3];
        for (slot, a) in idx.iter_mut().zip(args) {
            *slot = c.iter().position(|&x| x == a)?;
        }
        Some(c[self.ops[v].apply(&idx)])
    }
}

fn local_op(carrier: &[usize], f: impl Fn(usize, usize, usize) -> Option<usize>) -> Result<Operation> {
    let pos: BTreeMap<usize, usize> = carrier.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let mut bad = None;
    let op = Operation::from_fn(carrier.len(), 3, |x| {
        match f(carrier[x[0]], carrier[x[1]], carrier[x[2]]).and_then(|o| pos.get(&o).copied()) {
            Some(i) => i,
            None => {
                bad.get_or_insert([carrier[x[0]], carrier[x[1]], carrier[x[2]]]);
                0
            }
        }
    })?;
    match bad {
        None => Ok(op),
        Some(args) => Err(Error::construction(format!("list not closed at arguments {args:?}"))),
    }
}

pub fn build_family(tr: &TranslationResult, state: &ConsistencyState, phi: &Operation) -> Result<MultiSortedFamily> {
    if state.len() != tr.g.len() {
        return Err(Error::input("state does not belong to this translation"));
    }
    let phi_b = build_phi_b(&tr.relation, phi)?;
    let mut carriers = Vec::with_capacity(state.len());
    let mut ops = Vec::with_capacity(state.len());
    for v in tr.g.vertices() {
        let list = state.list(v);
        let op = match tr.origin(v) {
            Origin::Variable(name) => {
                let elems: Vec<Elem> = list
                    .iter()
                    .map(|&a| {
                        tr.vertex_element(a).ok_or_else(|| {
                            Error::construction(format!("L({name}) contains non-element {}", tr.h.label(a)))
                        })
                    })
                    .collect::<Result<_>>()?;
                local_op(&list, |a, b, c| {
                    let e = |x| elems[list.iter().position(|&y| y == x).expect("in list")];
                    Some(tr.element_vertex(phi.apply(&[e(a), e(b), e(c)])))
                })
                .map_err(|e| Error::construction(format!("vertex {name}: {e}")))?
            }
            _ => {
                let sigma = compute_sigma(tr, v)?;
                let mut rows = Vec::with_capacity(list.len());
                for &a in &list {
                    let r = sigma.preimage(a).ok_or_else(|| {
                        Error::construction(format!(
                            "{} in L({}) is outside the range of σ",
                            tr.h.label(a),
                            tr.g.label(v)
                        ))
                    })?;
                    if sigma.images.iter().filter(|&&x| x == a).count() != 1 {
                        return Err(Error::construction(format!(
                            "σ at {} is not injective over L",
                            tr.g.label(v)
                        )));
                    }
                    rows.push(r);
                }
                local_op(&list, |a, b, c| {
                    let r = |x| rows[list.iter().position(|&y| y == x).expect("in list")];
                    Some(sigma.image(phi_b.apply(&[r(a), r(b), r(c)])))
                })
                .map_err(|e| Error::construction(format!("vertex {}: {e}", tr.g.label(v))))?
            }
        };
        carriers.push(list);
        ops.push(op);
    }
    Ok(MultiSortedFamily { carriers, ops })
}

/// A triple of pairs in `L(v,w)` whose coordinatewise image leaves `L(v,w)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultisortedViolation {
    pub v: usize,
    pub w: usize,
    pub pairs: [(usize, usize); 3],
    pub output: (usize, usize),
}

/// Checks that every `L(v,w)` is closed under `(φ_v, φ_w)`; every unordered
/// pair is checked once, which covers the converse.
pub fn verify_multisorted(
    family: &MultiSortedFamily,
    state: &ConsistencyState,
) -> std::result::Result<(), MultisortedViolation> {
    let n = state.len();
    assert_eq!(family.len(), n, "family and state sizes differ");
    // Identical (table, table, relation) inputs are checked once.
    let mut tables: HashMap<&[usize], usize> = HashMap::new();
    let class: Vec<usize> = family
        .ops
        .iter()
        .map(|op| {
            let next = tables.len();
            *tables.entry(op.table()).or_insert(next)
        })
        .collect();
    let mut passed: HashSet<(usize, usize, usize, usize, Vec<(usize, usize)>)> = HashSet::new();
    for v in 0..n {
        for w in v + 1..n {
            let pairs: Vec<(usize, usize)> = state
                .pair_list(v, w)
                .into_iter()
                .map(|(a, b)| (index_of(family.carrier(v), a), index_of(family.carrier(w), b)))
                .collect();
            let (sv, sw) = (family.carrier(v).len(), family.carrier(w).len());
            let key = (class[v], class[w], sv, sw, pairs);
            if passed.contains(&key) {
                continue;
            }
            let pairs = &key.4;
            let mut member = vec![false; sv * sw];
            for &(a, b) in pairs {
                member[a * sw + b] = true;
            }
            let (tv, tw) = (family.ops[v].table(), family.ops[w].table());
            for &(a1, b1) in pairs {
                for &(a2, b2) in pairs {
                    let (ra, rb) = ((a1 * sv + a2) * sv, (b1 * sw + b2) * sw);
                    for &(a3, b3) in pairs {
                        let (x, y) = (tv[ra + a3], tw[rb + b3]);
                        if !member[x * sw + y] {
                            let c = |i: usize, car: &[usize]| car[i];
                            let (cv, cw) = (family.carrier(v), family.carrier(w));
                            return Err(MultisortedViolation {
                                v,
                                w,
                                pairs: [
                                    (c(a1, cv), c(b1, cw)),
                                    (c(a2, cv), c(b2, cw)),
                                    (c(a3, cv), c(b3, cw)),
                                ],
                                output: (c(x, cv), c(y, cw)),
                            });
                        }
                    }
                }
            }
            passed.insert(key);
        }
    }
    Ok(())
}

fn index_of(carrier: &[usize], a: usize) -> usize {
    carrier
        .iter()
        .position(|&x| x == a)
        .expect("pair lists lie inside the unary lists")
}

/// Vertices whose operation is not idempotent and cyclic.
pub fn non_wnu_vertices(family: &MultiSortedFamily) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (v, op) in family.ops.iter().enumerate() {
        if op.size() == 0 {
            continue;
        }
        let p = check_operation_properties(op)?;
        if !(p.idempotent && p.cyclic) {
            out.push(v);
        }
    }
    Ok(out)
}

/// `(v, a, b)` with `φ_v(b,b,a) != a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Candidate {
    pub vertex: usize,
    pub value: usize,
    pub witness: usize,
}

/// All Mal'tsev violations, ordered by vertex label, value label and witness
/// label.
pub fn step4_candidates(g_labels: &[String], h_labels: &[String], family: &MultiSortedFamily) -> Vec<Candidate> {
    let mut out = Vec::new();
    for v in 0..family.len() {
        let car = family.carrier(v);
        let op = family.operation(v);
        for (ia, &a) in car.iter().enumerate() {
            for (ib, &b) in car.iter().enumerate() {
                if op.apply(&[ib, ib, ia]) != ia {
                    out.push(Candidate {
                        vertex: v,
                        value: a,
                        witness: b,
                    });
                }
            }
        }
    }
    out.sort_by(|x, y| {
        (&g_labels[x.vertex], &h_labels[x.value], &h_labels[x.witness]).cmp(&(
            &g_labels[y.vertex],
            &h_labels[y.value],
            &h_labels[y.witness],
        ))
    });
    out
}

/// Outcome of deleting `value` from `L(vertex)` and re-closing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeletionVerdict {
    pub vertex: usize,
    pub value: usize,
    pub solutions_before: u64,
    pub solutions_after: u64,
    /// Distinct restrictions of the surviving homomorphisms to the variables.
    pub variable_solutions_after: u64,
    /// Whether re-closing emptied a list; `None` when the verdict was read
    /// off the solution set without re-closing.
    pub lists_emptied: Option<bool>,
}

impl DeletionVerdict {
    pub fn is_safe(&self) -> bool {
        self.solutions_after > 0
    }
}

/// Homomorphisms `G -> H` inside the unary lists of `state`, with the number
/// of distinct variable projections.
pub fn count_solutions(tr: &TranslationResult, state: &ConsistencyState) -> (u64, u64) {
    if !state.is_consistent() {
        return (0, 0);
    }
    let vars: Vec<usize> = tr.var_vertices.values().copied().collect();
    let mut projections = BTreeSet::new();
    let n = HomSearch::new(&tr.g, &tr.h).lists(&state.lists()).for_each(|m| {
        projections.insert(vars.iter().map(|&x| m[x]).collect::<Vec<_>>());
        std::ops::ControlFlow::Continue(())
    });
    (n, projections.len() as u64)
}

fn delete_and_count(tr: &TranslationResult, state: &ConsistencyState, vertex: usize, value: usize, before: u64) -> Result<DeletionVerdict> {
    let mut s = state.clone();
    if !s.delete_value(vertex, value) {
        return Err(Error::input(format!(
            "{} is not in L({})",
            tr.h.label(value),
            tr.g.label(vertex)
        )));
    }
    let (after, vars_after) = count_solutions(tr, &s);
    Ok(DeletionVerdict {
        vertex,
        value,
        solutions_before: before,
        solutions_after: after,
        variable_solutions_after: vars_after,
        lists_emptied: Some(!s.is_consistent()),
    })
}

pub fn simulate_deletion(tr: &TranslationResult, state: &ConsistencyState, vertex: usize, value: usize) -> Result<DeletionVerdict> {
    let (before, _) = count_solutions(tr, state);
    delete_and_count(tr, state, vertex, value, before)
}

/// Every distinct `(vertex, value)` among the candidates, simulated, and
/// tallied by region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeletionCensus {
    pub solutions_before: u64,
    pub verdicts: Vec<(String, DeletionVerdict)>,
}

impl DeletionCensus {
    /// region -> (safe, fatal)
    pub fn tally(&self) -> BTreeMap<String, (usize, usize)> {
        let mut out: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for (region, v) in &self.verdicts {
            let e = out.entry(region.clone()).or_default();
            if v.is_safe() {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        out
    }
}

/// How [`classify_all_deletions`] obtains `solutions_after`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensusMode {
    /// Delete, re-close and search, once per candidate.
    Reclose,
    /// Enumerate the solutions inside the lists once and count those avoiding
    /// the deleted value. The closure is sound, so the counts agree with
    /// `Reclose`.
    SolutionSet,
}

/// Runs every candidate deletion. `region` names the part of `G` a vertex
/// belongs to, for grouping.
pub fn classify_all_deletions(
    tr: &TranslationResult,
    state: &ConsistencyState,
    family: &MultiSortedFamily,
    mode: CensusMode,
    region: impl Fn(usize) -> String,
) -> Result<DeletionCensus> {
    let mut seen = BTreeSet::new();
    let targets: Vec<(usize, usize)> = step4_candidates(tr.g.labels(), tr.h.labels(), family)
        .into_iter()
        .map(|c| (c.vertex, c.value))
        .filter(|&t| seen.insert(t))
        .collect();
    let mut verdicts = Vec::with_capacity(targets.len());
    let before = match mode {
        CensusMode::Reclose => {
            let (before, _) = count_solutions(tr, state);
            for (v, a) in targets {
                verdicts.push((region(v), delete_and_count(tr, state, v, a, before)?));
            }
            before
        }
        CensusMode::SolutionSet => {
            let set = SolutionSet::new(tr, state);
            for (v, a) in targets {
                if !state.contains(v, a) {
                    return Err(Error::input(format!("{} is not in L({})", tr.h.label(a), tr.g.label(v))));
                }
                let (after, vars_after) = set.avoiding(v, a);
                verdicts.push((
                    region(v),
                    DeletionVerdict {
                        vertex: v,
                        value: a,
                        solutions_before: set.total,
                        solutions_after: after,
                        variable_solutions_after: vars_after,
                        lists_emptied: None,
                    },
                ));
            }
            set.total
        }
    };
    Ok(DeletionCensus {
        solutions_before: before,
        verdicts,
    })
}

/// Solutions inside the lists, grouped by their restriction to the variables.
struct SolutionSet {
    total: u64,
    /// per projection: (number of solutions, per vertex: value -> count)
    groups: Vec<(u64, Vec<BTreeMap<usize, u64>>)>,
}

impl SolutionSet {
    fn new(tr: &TranslationResult, state: &ConsistencyState) -> Self {
        let vars: Vec<usize> = tr.var_vertices.values().copied().collect();
        let mut index: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut groups: Vec<(u64, Vec<BTreeMap<usize, u64>>)> = Vec::new();
        let mut total = 0;
        if state.is_consistent() {
            total = HomSearch::new(&tr.g, &tr.h).lists(&state.lists()).for_each(|m| {
                let key: Vec<usize> = vars.iter().map(|&x| m[x]).collect();
                let next = groups.len();
                let gi = *index.entry(key).or_insert(next);
                if gi == groups.len() {
                    groups.push((0, vec![BTreeMap::new(); m.len()]));
                }
                let g = &mut groups[gi];
                g.0 += 1;
                for (slot, &a) in g.1.iter_mut().zip(m) {
                    *slot.entry(a).or_default() += 1;
                }
                std::ops::ControlFlow::Continue(())
            });
        }
        SolutionSet { total, groups }
    }

    /// (solutions with `f(v) != a`, distinct variable restrictions among them)
    fn avoiding(&self, v: usize, a: usize) -> (u64, u64) {
        let mut after = 0;
        let mut projections = 0;
        for (n, per_vertex) in &self.groups {
            let left = n - per_vertex[v].get(&a).copied().unwrap_or(0);
            after += left;
            projections += u64::from(left > 0);
        }
        (after, projections)
    }
}
