//! Directed graphs with labelled vertices, oriented paths and level functions.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct Digraph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    provenance: Vec<Option<String>>,
    arc_count: usize,
}

impl Digraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a vertex, returning the existing id if the label is already present.
    pub fn add_vertex(&mut self, label: &str) -> usize {
        if let Some(&v) = self.index.get(label) {
            return v;
        }
        let v = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), v);
        self.out.push(Vec::new());
        self.inn.push(Vec::new());
        self.provenance.push(None);
        v
    }

    pub fn add_vertex_with(&mut self, label: &str, provenance: impl Into<String>) -> usize {
        let v = self.add_vertex(label);
        self.provenance[v] = Some(provenance.into());
        v
    }

    pub fn set_provenance(&mut self, v: usize, provenance: impl Into<String>) {
        self.provenance[v] = Some(provenance.into());
    }

    /// Adds the arc `u -> v`; duplicate arcs are ignored.
    pub fn add_arc(&mut self, u: usize, v: usize) {
        if let Err(pos) = self.out[u].binary_search(&v) {
            self.out[u].insert(pos, v);
            let p = self.inn[v].binary_search(&u).unwrap_err();
            self.inn[v].insert(p, u);
            self.arc_count += 1;
        }
    }

    pub fn add_arc_by_label(&mut self, u: &str, v: &str) {
        let a = self.add_vertex(u);
        let b = self.add_vertex(v);
        self.add_arc(a, b);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    pub fn vertex(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn provenance(&self, v: usize) -> Option<&str> {
        self.provenance[v].as_deref()
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.inn[v]
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out[u].binary_search(&v).is_ok()
    }

    pub fn vertices(&self) -> std::ops::Range<usize> {
        0..self.len()
    }

    /// Arcs in insertion order of their tails, heads ascending by id.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    pub fn has_self_loop(&self) -> bool {
        self.arcs().any(|(u, v)| u == v)
    }

    /// Vertex ids sorted by label.
    pub fn sorted_vertices(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self.vertices().collect();
        vs.sort_by(|&a, &b| self.labels[a].cmp(&self.labels[b]));
        vs
    }

    /// Rank of each vertex in label order.
    pub fn label_ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.len()];
        for (r, v) in self.sorted_vertices().into_iter().enumerate() {
            rank[v] = r;
        }
        rank
    }

    /// Label-level description independent of insertion order: sorted
    /// vertices with provenance, sorted arcs.
    pub fn canonical(&self) -> (Vec<(String, Option<String>)>, Vec<(String, String)>) {
        let mut vs: Vec<(String, Option<String>)> = self
            .vertices()
            .map(|v| (self.labels[v].clone(), self.provenance[v].clone()))
            .collect();
        vs.sort();
        let mut arcs: Vec<(String, String)> = self
            .arcs()
            .map(|(u, v)| (self.labels[u].clone(), self.labels[v].clone()))
            .collect();
        arcs.sort();
        (vs, arcs)
    }

    /// Copies `other` into `self`, prefixing nothing: vertices with equal
    /// labels are identified.
    pub fn merge(&mut self, other: &Digraph) {
        for v in other.vertices() {
            let id = self.add_vertex(other.label(v));
            if let Some(p) = other.provenance(v) {
                self.provenance[id] = Some(p.to_string());
            }
        }
        for (u, v) in other.arcs() {
            let a = self.index[other.label(u)];
            let b = self.index[other.label(v)];
            self.add_arc(a, b);
        }
    }
}

impl PartialEq for Digraph {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for Digraph {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    Forward,
    Backward,
}

/// An oriented path: `vertices[k]` and `vertices[k + 1]` are joined by an arc
/// whose direction is `steps[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientedPath {
    vertices: Vec<String>,
    steps: Vec<Step>,
}

impl OrientedPath {
    pub fn start(label: impl Into<String>) -> Self {
        OrientedPath {
            vertices: vec![label.into()],
            steps: Vec::new(),
        }
    }

    /// Appends `last -> label`.
    pub fn forward(mut self, label: impl Into<String>) -> Self {
        self.vertices.push(label.into());
        self.steps.push(Step::Forward);
        self
    }

    /// Appends `last <- label`.
    pub fn backward(mut self, label: impl Into<String>) -> Self {
        self.vertices.push(label.into());
        self.steps.push(Step::Backward);
        self
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn first(&self) -> &str {
        &self.vertices[0]
    }

    pub fn last(&self) -> &str {
        self.vertices.last().expect("paths are nonempty")
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for v in &self.vertices {
            if !seen.insert(v) {
                return Err(Error::construction(format!("path revisits vertex {v}")));
            }
        }
        Ok(())
    }

    /// Height of each vertex above the first one.
    pub fn heights(&self) -> Vec<i64> {
        let mut h = vec![0i64];
        for s in &self.steps {
            let last = *h.last().expect("nonempty");
            h.push(match s {
                Step::Forward => last + 1,
                Step::Backward => last - 1,
            });
        }
        h
    }

    pub fn to_digraph(&self) -> Digraph {
        let mut g = Digraph::new();
        self.add_to(&mut g, |l| l.to_string());
        g
    }

    /// Adds the path to `g`, renaming vertices through `name`. Returns the
    /// ids of the path vertices in order.
    pub fn add_to(&self, g: &mut Digraph, name: impl Fn(&str) -> String) -> Vec<usize> {
        let ids: Vec<usize> = self.vertices.iter().map(|v| g.add_vertex(&name(v))).collect();
        for (k, s) in self.steps.iter().enumerate() {
            match s {
                Step::Forward => g.add_arc(ids[k], ids[k + 1]),
                Step::Backward => g.add_arc(ids[k + 1], ids[k]),
            }
        }
        ids
    }
}

/// Forward steps minus backward steps.
pub fn net_length(p: &OrientedPath) -> i64 {
    p.steps
        .iter()
        .map(|s| match s {
            Step::Forward => 1,
            Step::Backward => -1,
        })
        .sum()
}

/// Heights satisfying `level(v) = level(u) + 1` on every arc, normalised to
/// minimum 0 on each weakly connected component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelFunction {
    levels: Vec<i64>,
}

impl LevelFunction {
    pub fn level(&self, v: usize) -> i64 {
        self.levels[v]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.levels
    }

    pub fn max(&self) -> i64 {
        self.levels.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Balance {
    Balanced(LevelFunction),
    /// The arc `u -> v` closes a cycle of nonzero net orientation.
    Unbalanced { arc: (usize, usize) },
}

impl Balance {
    pub fn levels(&self) -> Option<&LevelFunction> {
        match self {
            Balance::Balanced(l) => Some(l),
            Balance::Unbalanced { .. } => None,
        }
    }

    pub fn is_balanced(&self) -> bool {
        matches!(self, Balance::Balanced(_))
    }
}

pub fn compute_levels(g: &Digraph) -> Balance {
    let n = g.len();
    let mut level: Vec<Option<i64>> = vec![None; n];
    for root in g.sorted_vertices() {
        if level[root].is_some() {
            continue;
        }
        level[root] = Some(0);
        let mut comp = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let lu = level[u].expect("queued vertices have levels");
            let nbrs = g
                .out_neighbors(u)
                .iter()
                .map(|&v| (v, lu + 1, (u, v)))
                .chain(g.in_neighbors(u).iter().map(|&v| (v, lu - 1, (v, u))));
            for (v, want, arc) in nbrs {
                match level[v] {
                    None => {
                        level[v] = Some(want);
                        comp.push(v);
                        queue.push_back(v);
                    }
                    Some(l) if l != want => return Balance::Unbalanced { arc },
                    Some(_) => {}
                }
            }
        }
        let min = comp.iter().map(|&v| level[v].expect("set")).min().unwrap_or(0);
        for v in comp {
            level[v] = level[v].map(|l| l - min);
        }
    }
    Balance::Balanced(LevelFunction {
        levels: level.into_iter().map(|l| l.expect("all visited")).collect(),
    })
}

/// Weakly connected components; each sorted by label, components ordered by
/// their least label.
pub fn undirected_components(g: &Digraph) -> Vec<Vec<usize>> {
    let n = g.len();
    let mut comp_of = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for root in g.sorted_vertices() {
        if comp_of[root] != usize::MAX {
            continue;
        }
        let id = comps.len();
        comp_of[root] = id;
        let mut members = vec![root];
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in g.out_neighbors(u).iter().chain(g.in_neighbors(u)) {
                if comp_of[v] == usize::MAX {
                    comp_of[v] = id;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        members.sort_by(|&a, &b| g.label(a).cmp(g.label(b)));
        comps.push(members);
    }
    comps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_arc_levels() {
        let mut g = Digraph::new();
        g.add_arc_by_label("a", "b");
        let lv = compute_levels(&g);
        let l = lv.levels().unwrap();
        assert_eq!(l.as_slice(), &[0, 1]);
        let p = OrientedPath::start("a").forward("b");
        assert_eq!(net_length(&p), 1);
    }

    #[test]
    fn two_cycle_is_unbalanced() {
        let mut g = Digraph::new();
        g.add_arc_by_label("a", "b");
        g.add_arc_by_label("b", "a");
        assert!(!compute_levels(&g).is_balanced());
    }

    #[test]
    fn levels_normalised_per_component() {
        let mut g = Digraph::new();
        g.add_arc_by_label("b", "a");
        g.add_arc_by_label("c", "a");
        g.add_arc_by_label("z", "y");
        let l = compute_levels(&g);
        let l = l.levels().unwrap();
        assert_eq!(l.level(g.vertex("a").unwrap()), 1);
        assert_eq!(l.level(g.vertex("c").unwrap()), 0);
        assert_eq!(l.level(g.vertex("z").unwrap()), 0);
    }

    #[test]
    fn isolated_vertices_are_components() {
        let mut g = Digraph::new();
        for l in ["c", "a", "b"] {
            g.add_vertex(l);
        }
        let comps = undirected_components(&g);
        assert_eq!(comps.len(), 3);
        assert_eq!(g.label(comps[0][0]), "a");
    }

    #[test]
    fn zigzag_net_length() {
        let p = OrientedPath::start("u0").forward("L").backward("R").forward("u1");
        assert_eq!(net_length(&p), 1);
        assert_eq!(p.heights(), vec![0, 1, 0, 1]);
        p.validate().unwrap();
        let bad = OrientedPath::start("a").forward("b").backward("a");
        assert!(bad.validate().is_err());
    }

    #[test]
    fn duplicate_arcs_ignored_and_equality_is_label_based() {
        let mut g = Digraph::new();
        g.add_arc_by_label("a", "b");
        g.add_arc_by_label("a", "b");
        assert_eq!(g.arc_count(), 1);
        let mut h = Digraph::new();
        h.add_vertex("b");
        h.add_arc_by_label("a", "b");
        assert_eq!(g, h);
    }
}
