//! Finite relational templates, CSP instances over them and finite operations.
//!
//! Elements are referred to by their position in a [`FiniteDomain`]; labels are
//! only used at the edges (parsing, reports).

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub type Elem = usize;

/// Largest domain for which [`enumerate_endomorphisms`] will run.
pub const ENDOMORPHISM_DOMAIN_LIMIT: usize = 10;

/// Relations of higher arity are rejected.
pub const MAX_ARITY: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteDomain {
    labels: Vec<String>,
    index: BTreeMap<String, Elem>,
}

impl FiniteDomain {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut index = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || l.chars().any(char::is_whitespace) {
                return Err(Error::input(format!("bad element label {l:?}")));
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::input(format!("duplicate element label {l:?}")));
            }
        }
        if labels.is_empty() {
            return Err(Error::input("empty domain"));
        }
        Ok(FiniteDomain { labels, index })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, e: Elem) -> &str {
        &self.labels[e]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn elem(&self, label: &str) -> Option<Elem> {
        self.index.get(label).copied()
    }

    pub fn elems(&self) -> std::ops::Range<Elem> {
        0..self.size()
    }

    /// Renders a tuple as a digit string when every label is one character
    /// (`01102`), otherwise space-separated.
    pub fn tuple_label(&self, t: &[Elem]) -> String {
        if t.iter().all(|&e| self.labels[e].chars().count() == 1) {
            t.iter().map(|&e| self.labels[e].as_str()).collect()
        } else {
            t.iter()
                .map(|&e| self.labels[e].as_str())
                .collect::<Vec<_>>()
                .join(" ")
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    name: String,
    arity: usize,
    tuples: BTreeSet<Vec<Elem>>,
}

impl Relation {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        tuples: impl IntoIterator<Item = Vec<Elem>>,
    ) -> Result<Self> {
        let name = name.into();
        if arity == 0 || arity > MAX_ARITY {
            return Err(Error::input(format!(
                "relation {name}: arity {arity} outside 1..={MAX_ARITY}"
            )));
        }
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != arity {
                return Err(Error::input(format!(
                    "relation {name}: tuple {t:?} has length {} but arity is {arity}",
                    t.len()
                )));
            }
            set.insert(t);
        }
        Ok(Relation {
            name,
            arity,
            tuples: set,
        })
    }

    /// Parses digit-string tuples like `"00010"` against `domain`.
    pub fn from_strings(
        name: impl Into<String>,
        domain: &FiniteDomain,
        rows: &[&str],
    ) -> Result<Self> {
        let name = name.into();
        let arity = rows.first().map_or(0, |r| r.chars().count());
        let mut tuples = Vec::with_capacity(rows.len());
        for r in rows {
            let t = r
                .chars()
                .map(|c| {
                    domain
                        .elem(&c.to_string())
                        .ok_or_else(|| Error::input(format!("{name}: unknown element {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            tuples.push(t);
        }
        Relation::new(name, arity, tuples)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        self.tuples.contains(t)
    }

    /// Tuples in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &Vec<Elem>> {
        self.tuples.iter()
    }

    pub fn tuples(&self) -> &BTreeSet<Vec<Elem>> {
        &self.tuples
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn check_domain(&self, size: usize) -> Result<()> {
        for t in &self.tuples {
            if let Some(&e) = t.iter().find(|&&e| e >= size) {
                return Err(Error::input(format!(
                    "relation {}: element index {e} outside domain of size {size}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Projects `rel` onto the given 1-based coordinates.
pub fn project_relation(rel: &Relation, coords: &[usize]) -> Result<Relation> {
    if coords.is_empty() {
        return Err(Error::input("projection onto no coordinates"));
    }
    if let Some(&c) = coords.iter().find(|&&c| c == 0 || c > rel.arity) {
        return Err(Error::input(format!(
            "coordinate {c} out of range 1..={} for {}",
            rel.arity, rel.name
        )));
    }
    let name = format!(
        "pr[{}]({})",
        coords
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(","),
        rel.name
    );
    Relation::new(
        name,
        coords.len(),
        rel.tuples
            .iter()
            .map(|t| coords.iter().map(|&c| t[c - 1]).collect()),
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Template {
    domain: FiniteDomain,
    relations: BTreeMap<String, Relation>,
}

impl Template {
    pub fn new(domain: FiniteDomain, relations: impl IntoIterator<Item = Relation>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for r in relations {
            r.check_domain(domain.size())?;
            if map.contains_key(r.name()) {
                return Err(Error::input(format!("duplicate relation {}", r.name())));
            }
            map.insert(r.name().to_string(), r);
        }
        Ok(Template {
            domain,
            relations: map,
        })
    }

    pub fn domain(&self) -> &FiniteDomain {
        &self.domain
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    /// Relations sorted by name.
    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub relation: String,
    pub scope: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    variables: Vec<String>,
    constraints: Vec<Constraint>,
}

impl Instance {
    /// Builds an instance; the variable set is the union of all scopes plus
    /// `extra_vars`, sorted by name.
    pub fn new(
        constraints: Vec<Constraint>,
        extra_vars: impl IntoIterator<Item = String>,
    ) -> Self {
        let mut vars: BTreeSet<String> = extra_vars.into_iter().collect();
        for c in &constraints {
            vars.extend(c.scope.iter().cloned());
        }
        Instance {
            variables: vars.into_iter().collect(),
            constraints,
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.binary_search_by(|v| v.as_str().cmp(name)).ok()
    }

    /// Checks relation names and arities against `tmpl`.
    pub fn validate(&self, tmpl: &Template) -> Result<()> {
        for c in &self.constraints {
            let rel = tmpl
                .relation(&c.relation)
                .ok_or_else(|| Error::input(format!("unknown relation {}", c.relation)))?;
            if rel.arity() != c.scope.len() {
                return Err(Error::input(format!(
                    "constraint {} has {} variables, relation arity is {}",
                    c.relation,
                    c.scope.len(),
                    rel.arity()
                )));
            }
        }
        Ok(())
    }
}

/// A total operation `carrier^arity -> carrier` on the carrier `0..size`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Operation {
    size: usize,
    arity: usize,
    table: Vec<Elem>,
}

impl Operation {
    pub fn from_fn(size: usize, arity: usize, mut f: impl FnMut(&[Elem]) -> Elem) -> Result<Self> {
        if arity == 0 {
            return Err(Error::input("operation arity must be positive"));
        }
        let entries = size
            .checked_pow(arity as u32)
            .ok_or_else(|| Error::input("operation table too large"))?;
        let mut table = Vec::with_capacity(entries);
        let mut args = vec![0; arity];
        for _ in 0..entries {
            let out = f(&args);
            if out >= size {
                return Err(Error::input(format!(
                    "operation value {out} at {args:?} outside carrier of size {size}"
                )));
            }
            table.push(out);
            // odometer, last argument fastest
            for slot in args.iter_mut().rev() {
                *slot += 1;
                if *slot < size {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(Operation { size, arity, table })
    }

    pub fn from_table(size: usize, arity: usize, table: Vec<Elem>) -> Result<Self> {
        let mut it = table.into_iter();
        let op = Operation::from_fn(size, arity, |_| it.next().unwrap_or(usize::MAX))?;
        if it.next().is_some() {
            return Err(Error::input("operation table has too many entries"));
        }
        Ok(op)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn offset(&self, args: &[Elem]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        args.iter().fold(0, |acc, &a| acc * self.size + a)
    }

    #[inline]
    pub fn apply(&self, args: &[Elem]) -> Elem {
        self.table[self.offset(args)]
    }

    pub fn set(&mut self, args: &[Elem], value: Elem) {
        assert!(value < self.size);
        let o = self.offset(args);
        self.table[o] = value;
    }

    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    /// All argument tuples in table order.
    pub fn arguments(&self) -> impl Iterator<Item = Vec<Elem>> + '_ {
        (0..self.table.len()).map(move |mut idx| {
            let mut args = vec![0; self.arity];
            for slot in args.iter_mut().rev() {
                *slot = idx % self.size;
                idx /= self.size;
            }
            args
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolymorphismViolation {
    pub relation: String,
    pub inputs: Vec<Vec<Elem>>,
    pub output: Vec<Elem>,
}

/// Returns the first tuple-choice (in lexicographic order) whose coordinatewise
/// image leaves a relation, or `None` when `op` preserves every relation.
pub fn check_polymorphism(op: &Operation, tmpl: &Template) -> Result<Option<PolymorphismViolation>> {
    if op.size() != tmpl.domain().size() {
        return Err(Error::input(format!(
            "operation carrier has {} elements, template domain has {}",
            op.size(),
            tmpl.domain().size()
        )));
    }
    for rel in tmpl.relations() {
        if let Some(v) = relation_violation(op, rel) {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

pub(crate) fn relation_violation(op: &Operation, rel: &Relation) -> Option<PolymorphismViolation> {
    let tuples: Vec<&Vec<Elem>> = rel.iter().collect();
    if tuples.is_empty() {
        return None;
    }
    let k = op.arity();
    let mut pick = vec![0usize; k];
    let mut args = vec![0; k];
    loop {
        let out: Vec<Elem> = (0..rel.arity())
            .map(|c| {
                for (slot, &p) in args.iter_mut().zip(&pick) {
                    *slot = tuples[p][c];
                }
                op.apply(&args)
            })
            .collect();
        if !rel.contains(&out) {
            return Some(PolymorphismViolation {
                relation: rel.name().to_string(),
                inputs: pick.iter().map(|&p| tuples[p].clone()).collect(),
                output: out,
            });
        }
        let mut i = k;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            pick[i] += 1;
            if pick[i] < tuples.len() {
                break;
            }
            pick[i] = 0;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperationProperties {
    pub idempotent: bool,
    pub cyclic: bool,
    pub wnu: bool,
    /// Pairs `(a, b)` with `op(b, …, b, a) != a`.
    pub maltsev_pairs: Vec<(Elem, Elem)>,
}

pub fn check_operation_properties(op: &Operation) -> Result<OperationProperties> {
    let n = op.arity();
    if n < 2 {
        return Err(Error::input("property checks need arity at least 2"));
    }
    let carrier = 0..op.size();
    let idempotent = carrier.clone().all(|x| op.apply(&vec![x; n]) == x);

    let cyclic = op.arguments().all(|args| {
        let mut rot = args[1..].to_vec();
        rot.push(args[0]);
        op.apply(&args) == op.apply(&rot)
    });

    let mut wnu = true;
    'outer: for x in carrier.clone() {
        for y in carrier.clone() {
            let mut args = vec![x; n];
            args[0] = y;
            let first = op.apply(&args);
            for pos in 1..n {
                args[pos - 1] = x;
                args[pos] = y;
                if op.apply(&args) != first {
                    wnu = false;
                    break 'outer;
                }
            }
        }
    }

    let mut maltsev_pairs = Vec::new();
    for a in carrier.clone() {
        for b in carrier.clone() {
            let mut args = vec![b; n];
            args[n - 1] = a;
            if op.apply(&args) != a {
                maltsev_pairs.push((a, b));
            }
        }
    }
    Ok(OperationProperties {
        idempotent,
        cyclic,
        wnu,
        maltsev_pairs,
    })
}

/// Every self-map of the domain preserving all relations, in lexicographic
/// order of the image vector.
pub fn enumerate_endomorphisms(tmpl: &Template) -> Result<Vec<Vec<Elem>>> {
    let n = tmpl.domain().size();
    if n > ENDOMORPHISM_DOMAIN_LIMIT {
        return Err(Error::DomainTooLarge {
            size: n,
            limit: ENDOMORPHISM_DOMAIN_LIMIT,
        });
    }
    // A tuple becomes checkable once its largest entry is mapped.
    let mut due: Vec<Vec<(&Relation, &Vec<Elem>)>> = vec![Vec::new(); n];
    for rel in tmpl.relations() {
        for t in rel.iter() {
            let top = *t.iter().max().expect("arity is positive");
            due[top].push((rel, t));
        }
    }
    let mut out = Vec::new();
    let mut map = vec![0; n];
    endo_rec(0, n, &due, &mut map, &mut out);
    Ok(out)
}

fn endo_rec(
    pos: usize,
    n: usize,
    due: &[Vec<(&Relation, &Vec<Elem>)>],
    map: &mut Vec<Elem>,
    out: &mut Vec<Vec<Elem>>,
) {
    if pos == n {
        out.push(map.clone());
        return;
    }
    for img in 0..n {
        map[pos] = img;
        let ok = due[pos].iter().all(|(rel, t)| {
            let image: Vec<Elem> = t.iter().map(|&e| map[e]).collect();
            rel.contains(&image)
        });
        if ok {
            endo_rec(pos + 1, n, due, map, out);
        }
    }
}

/// All solutions of `inst` over `tmpl` (up to `limit`), as element vectors
/// indexed like [`Instance::variables`]. Solutions come out in lexicographic
/// order.
pub fn solve_instance(
    tmpl: &Template,
    inst: &Instance,
    limit: Option<usize>,
) -> Result<Vec<Vec<Elem>>> {
    inst.validate(tmpl)?;
    let nvars = inst.variables().len();
    let mut due: Vec<Vec<(&Relation, Vec<usize>)>> = vec![Vec::new(); nvars];
    for c in inst.constraints() {
        let rel = tmpl.relation(&c.relation).expect("validated");
        let scope: Vec<usize> = c
            .scope
            .iter()
            .map(|v| inst.var_index(v).expect("scope variables are declared"))
            .collect();
        let last = *scope.iter().max().expect("arity is positive");
        due[last].push((rel, scope));
    }
    let mut out = Vec::new();
    let mut assign = vec![0; nvars];
    solve_rec(0, tmpl.domain().size(), &due, &mut assign, &mut out, limit);
    Ok(out)
}

fn solve_rec(
    pos: usize,
    dsize: usize,
    due: &[Vec<(&Relation, Vec<usize>)>],
    assign: &mut Vec<Elem>,
    out: &mut Vec<Vec<Elem>>,
    limit: Option<usize>,
) {
    if limit.is_some_and(|l| out.len() >= l) {
        return;
    }
    if pos == assign.len() {
        out.push(assign.clone());
        return;
    }
    for val in 0..dsize {
        assign[pos] = val;
        let ok = due[pos].iter().all(|(rel, scope)| {
            let t: Vec<Elem> = scope.iter().map(|&v| assign[v]).collect();
            rel.contains(&t)
        });
        if ok {
            solve_rec(pos + 1, dsize, due, assign, out, limit);
        }
    }
}
