//! Exhaustive digraph homomorphism search.
//!
//! Backtracking with full arc-consistency maintenance after every assignment.
//! Branching picks the unassigned vertex with the smallest list (ties broken
//! by label) and tries values in ascending label order, so results are
//! deterministic.

use std::ops::ControlFlow;

use crate::bits::BitSet;
use crate::digraph::Digraph;

/// Neighbourhoods of the target digraph as bit sets.
struct Target {
    out: Vec<BitSet>,
    inn: Vec<BitSet>,
    size: usize,
}

impl Target {
    fn new(h: &Digraph) -> Self {
        let n = h.len();
        let out = h
            .vertices()
            .map(|a| BitSet::from_indices(n, h.out_neighbors(a).iter().copied()))
            .collect();
        let inn = h
            .vertices()
            .map(|a| BitSet::from_indices(n, h.in_neighbors(a).iter().copied()))
            .collect();
        Target { out, inn, size: n }
    }

    fn image(&self, sets: &[BitSet], from: &BitSet) -> BitSet {
        let mut img = BitSet::new(self.size);
        for a in from.iter() {
            img.union_with(&sets[a]);
        }
        img
    }
}

/// Prunes `domains` to the greatest arc-consistent sublists. Returns false as
/// soon as a list becomes empty.
fn propagate(g: &Digraph, t: &Target, domains: &mut [BitSet], seeds: &[usize]) -> bool {
    let mut queued = vec![false; g.len()];
    let mut queue: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for &s in seeds {
        if !queued[s] {
            queued[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        queued[u] = false;
        if !g.out_neighbors(u).is_empty() {
            let img = t.image(&t.out, &domains[u]);
            for &v in g.out_neighbors(u) {
                if domains[v].intersect_with(&img) {
                    if domains[v].is_empty() {
                        return false;
                    }
                    if !queued[v] {
                        queued[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        if !g.in_neighbors(u).is_empty() {
            let img = t.image(&t.inn, &domains[u]);
            for &w in g.in_neighbors(u) {
                if domains[w].intersect_with(&img) {
                    if domains[w].is_empty() {
                        return false;
                    }
                    if !queued[w] {
                        queued[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    domains.iter().all(|d| !d.is_empty())
}

/// Greatest arc-consistent lists for `g -> h`, starting from `initial`
/// (all of `V(h)` when `None`). Empty lists are returned as such.
pub fn arc_consistent_lists(g: &Digraph, h: &Digraph, initial: Option<Vec<BitSet>>) -> Vec<BitSet> {
    let t = Target::new(h);
    let mut domains = initial.unwrap_or_else(|| vec![BitSet::full(h.len()); g.len()]);
    assert_eq!(domains.len(), g.len(), "one initial list per vertex");
    if domains.iter().any(BitSet::is_empty) {
        // Nothing to propagate from; an empty list wipes out every vertex
        // reachable from it.
        wipe_component(g, &mut domains);
        return domains;
    }
    let seeds: Vec<usize> = g.vertices().collect();
    if !propagate(g, &t, &mut domains, &seeds) {
        wipe_component(g, &mut domains);
    }
    domains
}

/// The greatest arc-consistent family is empty on every weakly connected
/// component containing an empty list.
fn wipe_component(g: &Digraph, domains: &mut [BitSet]) {
    for comp in crate::digraph::undirected_components(g) {
        if comp.iter().any(|&v| domains[v].is_empty()) {
            for v in comp {
                domains[v].clear();
            }
        }
    }
}

/// Builder for homomorphism enumeration `g -> h`.
pub struct HomSearch<'a> {
    g: &'a Digraph,
    h: &'a Digraph,
    lists: Option<Vec<BitSet>>,
    pinned: Vec<(usize, usize)>,
    limit: Option<u64>,
}

impl<'a> HomSearch<'a> {
    pub fn new(g: &'a Digraph, h: &'a Digraph) -> Self {
        HomSearch {
            g,
            h,
            lists: None,
            pinned: Vec::new(),
            limit: None,
        }
    }

    /// Restricts each `g`-vertex to the given `h`-vertices.
    pub fn lists(mut self, lists: &[Vec<usize>]) -> Self {
        assert_eq!(lists.len(), self.g.len(), "one list per vertex");
        let n = self.h.len();
        self.lists = Some(
            lists
                .iter()
                .map(|l| BitSet::from_indices(n, l.iter().copied()))
                .collect(),
        );
        self
    }

    pub fn pin(mut self, v: usize, a: usize) -> Self {
        self.pinned.push((v, a));
        self
    }

    pub fn pins(mut self, pins: &[(usize, usize)]) -> Self {
        self.pinned.extend_from_slice(pins);
        self
    }

    pub fn limit(mut self, limit: Option<u64>) -> Self {
        self.limit = limit;
        self
    }

    /// Calls `visit` on each homomorphism (indexed by `g`-vertex) until the
    /// limit is reached or `visit` breaks. Returns the number visited.
    pub fn for_each(self, mut visit: impl FnMut(&[usize]) -> ControlFlow<()>) -> u64 {
        if self.g.is_empty() {
            // the empty map
            let _ = visit(&[]);
            return 1;
        }
        let t = Target::new(self.h);
        let mut domains = self
            .lists
            .clone()
            .unwrap_or_else(|| vec![BitSet::full(self.h.len()); self.g.len()]);
        for &(v, a) in &self.pinned {
            let keep = domains[v].contains(a);
            domains[v].clear();
            if keep {
                domains[v].insert(a);
            }
        }
        if domains.iter().any(BitSet::is_empty) {
            return 0;
        }
        let seeds: Vec<usize> = self.g.vertices().collect();
        if !propagate(self.g, &t, &mut domains, &seeds) {
            return 0;
        }
        let mut ctx = Search {
            g: self.g,
            t: &t,
            g_rank: self.g.label_ranks(),
            h_order: self.h.sorted_vertices(),
            found: 0,
            limit: self.limit,
            assignment: vec![0; self.g.len()],
        };
        let _ = ctx.run(domains, &mut visit);
        ctx.found
    }

    pub fn count(self) -> u64 {
        self.for_each(|_| ControlFlow::Continue(()))
    }

    pub fn enumerate(self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        self.for_each(|m| {
            out.push(m.to_vec());
            ControlFlow::Continue(())
        });
        out
    }

    pub fn exists(self) -> bool {
        self.limit(Some(1)).count() > 0
    }
}

struct Search<'a> {
    g: &'a Digraph,
    t: &'a Target,
    g_rank: Vec<usize>,
    h_order: Vec<usize>,
    found: u64,
    limit: Option<u64>,
    assignment: Vec<usize>,
}

impl Search<'_> {
    fn run(
        &mut self,
        domains: Vec<BitSet>,
        visit: &mut impl FnMut(&[usize]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let mut branch: Option<(usize, usize)> = None;
        for (v, d) in domains.iter().enumerate() {
            let c = d.count();
            if c > 1 {
                let better = match branch {
                    None => true,
                    Some((bv, bc)) => c < bc || (c == bc && self.g_rank[v] < self.g_rank[bv]),
                };
                if better {
                    branch = Some((v, c));
                }
            }
        }
        let Some((v, _)) = branch else {
            for (slot, d) in self.assignment.iter_mut().zip(&domains) {
                *slot = d.first().expect("nonempty");
            }
            self.found += 1;
            visit(&self.assignment)?;
            if self.limit.is_some_and(|l| self.found >= l) {
                return ControlFlow::Break(());
            }
            return ControlFlow::Continue(());
        };
        for i in 0..self.h_order.len() {
            let a = self.h_order[i];
            if !domains[v].contains(a) {
                continue;
            }
            let mut next = domains.clone();
            next[v].clear();
            next[v].insert(a);
            if propagate(self.g, self.t, &mut next, &[v]) {
                self.run(next, visit)?;
            }
        }
        ControlFlow::Continue(())
    }
}

/// All homomorphisms `g -> h` extending `pinned`, up to `limit`.
pub fn enumerate_homomorphisms(
    g: &Digraph,
    h: &Digraph,
    limit: Option<u64>,
    pinned: &[(usize, usize)],
) -> Vec<Vec<usize>> {
    HomSearch::new(g, h).pins(pinned).limit(limit).enumerate()
}

pub fn count_homomorphisms(g: &Digraph, h: &Digraph) -> u64 {
    HomSearch::new(g, h).count()
}
