//! Arc consistency and (2,3)-consistency for digraph homomorphism instances,
//! plus the microstructure graph of the resulting lists.
//!
//! A [`ConsistencyState`] stores, for every `g`-vertex, a local domain (its
//! arc-consistent list, ordered by `h`-label) and for every ordered pair of
//! distinct vertices a bit matrix over the two local domains. Both
//! orientations of each pair are kept in sync.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::{BitMatrix, BitSet};
use crate::digraph::Digraph;
use crate::hom::arc_consistent_lists;

/// Greatest arc-consistent lists, as `h`-vertices sorted by label.
pub fn enforce_arc_consistency(
    g: &Digraph,
    h: &Digraph,
    initial: Option<&[Vec<usize>]>,
) -> Vec<Vec<usize>> {
    let init = initial.map(|lists| {
        lists
            .iter()
            .map(|l| BitSet::from_indices(h.len(), l.iter().copied()))
            .collect()
    });
    let rank = h.label_ranks();
    arc_consistent_lists(g, h, init)
        .into_iter()
        .map(|s| {
            let mut v: Vec<usize> = s.iter().collect();
            v.sort_by_key(|&a| rank[a]);
            v
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ConsistencyState {
    n: usize,
    values: Vec<Vec<usize>>,
    unary: Vec<BitSet>,
    pairs: Vec<BitMatrix>,
    /// `full[v*n+w]` implies `L(v,w) = L(v) × L(w)`. Never affects results.
    full: Vec<bool>,
    consistent: bool,
}

impl PartialEq for ConsistencyState {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.consistent == other.consistent
            && (0..self.n).all(|v| self.list(v) == other.list(v))
            && (0..self.n).all(|v| {
                (0..self.n).all(|w| v == w || self.pair_list(v, w) == other.pair_list(v, w))
            })
    }
}

impl ConsistencyState {
    /// State with the given unary lists and `L(v,w) = L(v) × L(w)` for every
    /// pair, restricted to arcs of `h` along arcs of `g`. No propagation.
    pub fn initial(g: &Digraph, h: &Digraph, lists: Vec<Vec<usize>>) -> Self {
        let n = g.len();
        assert_eq!(lists.len(), n);
        let rank = h.label_ranks();
        let values: Vec<Vec<usize>> = lists
            .into_iter()
            .map(|mut l| {
                l.sort_by_key(|&a| rank[a]);
                l.dedup();
                l
            })
            .collect();
        let unary: Vec<BitSet> = values.iter().map(|l| BitSet::full(l.len())).collect();
        let mut pairs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (di, dj) = (values[i].len(), values[j].len());
                if i == j {
                    pairs.push(BitMatrix::new(0, 0));
                    continue;
                }
                let mut m = BitMatrix::new(di, dj);
                let fwd = g.has_arc(i, j);
                let bwd = g.has_arc(j, i);
                for (a, &ha) in values[i].iter().enumerate() {
                    for (b, &hb) in values[j].iter().enumerate() {
                        if (!fwd || h.has_arc(ha, hb)) && (!bwd || h.has_arc(hb, ha)) {
                            m.set(a, b);
                        }
                    }
                }
                pairs.push(m);
            }
        }
        let consistent = values.iter().all(|l| !l.is_empty()) || n == 0;
        let full = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                i != j && pairs[k].count() == values[i].len() * values[j].len()
            })
            .collect();
        let mut state = ConsistencyState {
            n,
            values,
            unary,
            pairs,
            full,
            consistent,
        };
        if !consistent {
            state.collapse();
        }
        state
    }

    /// One empty list empties every pair list through it and then every
    /// other list, so an inconsistent state is stored fully empty.
    fn collapse(&mut self) {
        self.consistent = false;
        for u in &mut self.unary {
            u.clear();
        }
        for m in &mut self.pairs {
            for r in 0..m.rows() {
                m.clear_row(r);
            }
        }
        self.full.iter_mut().for_each(|f| *f = false);
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// False once some unary list has become empty.
    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    /// `L(v)` as `h`-vertices in label order.
    pub fn list(&self, v: usize) -> Vec<usize> {
        self.unary[v].iter().map(|a| self.values[v][a]).collect()
    }

    pub fn lists(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|v| self.list(v)).collect()
    }

    pub fn list_len(&self, v: usize) -> usize {
        self.unary[v].count()
    }

    pub fn contains(&self, v: usize, a: usize) -> bool {
        self.local(v, a).is_some_and(|i| self.unary[v].contains(i))
    }

    /// `L(v,w)` as `h`-vertex pairs; for `v == w` the diagonal of `L(v)`.
    pub fn pair_list(&self, v: usize, w: usize) -> Vec<(usize, usize)> {
        if v == w {
            return self.list(v).into_iter().map(|a| (a, a)).collect();
        }
        self.pairs[v * self.n + w]
            .iter()
            .map(|(a, b)| (self.values[v][a], self.values[w][b]))
            .collect()
    }

    pub fn pair_contains(&self, v: usize, w: usize, a: usize, b: usize) -> bool {
        if v == w {
            return a == b && self.contains(v, a);
        }
        match (self.local(v, a), self.local(w, b)) {
            (Some(i), Some(j)) => self.pairs[v * self.n + w].get(i, j),
            _ => false,
        }
    }

    pub(crate) fn local(&self, v: usize, a: usize) -> Option<usize> {
        self.values[v].iter().position(|&x| x == a)
    }

    pub(crate) fn local_values(&self, v: usize) -> &[usize] {
        &self.values[v]
    }

    pub(crate) fn unary_bits(&self, v: usize) -> &BitSet {
        &self.unary[v]
    }

    pub(crate) fn pair_bits(&self, v: usize, w: usize) -> &BitMatrix {
        &self.pairs[v * self.n + w]
    }

    /// Adds `(a,b)` to `L(v,w)` (and its converse) without propagation.
    /// Both values must already be in the lists.
    pub fn insert_pair(&mut self, v: usize, w: usize, a: usize, b: usize) -> bool {
        let (Some(i), Some(j)) = (self.local(v, a), self.local(w, b)) else {
            return false;
        };
        if v == w || !self.unary[v].contains(i) || !self.unary[w].contains(j) {
            return false;
        }
        self.pairs[v * self.n + w].set(i, j);
        self.pairs[w * self.n + v].set(j, i);
        self.mark_partial(v, w);
        true
    }

    /// Removes `(a,b)` from `L(v,w)` and its converse without propagation.
    pub fn remove_pair(&mut self, v: usize, w: usize, a: usize, b: usize) -> bool {
        let (Some(i), Some(j)) = (self.local(v, a), self.local(w, b)) else {
            return false;
        };
        if v == w || !self.pairs[v * self.n + w].get(i, j) {
            return false;
        }
        self.pairs[v * self.n + w].unset(i, j);
        self.pairs[w * self.n + v].unset(j, i);
        self.mark_partial(v, w);
        true
    }

    /// Replaces `L(v,w)` (and its converse) by the given pairs, restricted to
    /// the current unary lists. Used when loading lists from a file.
    pub fn set_pair_list(&mut self, v: usize, w: usize, pairs: &[(usize, usize)]) {
        assert_ne!(v, w);
        let (dv, dw) = (self.values[v].len(), self.values[w].len());
        let mut m = BitMatrix::new(dv, dw);
        for &(a, b) in pairs {
            if let (Some(i), Some(j)) = (self.local(v, a), self.local(w, b)) {
                if self.unary[v].contains(i) && self.unary[w].contains(j) {
                    m.set(i, j);
                }
            }
        }
        self.pairs[w * self.n + v] = m.transpose();
        self.pairs[v * self.n + w] = m;
        self.mark_partial(v, w);
    }

    /// Removes `a` from `L(v)` and re-establishes (2,3)-consistency.
    /// Returns false if `a` was not in the list.
    pub fn delete_value(&mut self, v: usize, a: usize) -> bool {
        let Some(i) = self.local(v, a).filter(|&i| self.unary[v].contains(i)) else {
            return false;
        };
        let mut queue = PairQueue::new(self.n);
        self.remove_values(vec![(v, i)], &mut queue);
        if self.consistent {
            self.run(queue, None);
        }
        true
    }

    /// Runs the closure from scratch: every pair is revisited.
    pub fn close(&mut self, seed: Option<u64>) {
        let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
        let mut queue = PairQueue::new(self.n);
        let mut all: Vec<(usize, usize)> = (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .collect();
        if let Some(r) = rng.as_mut() {
            all.shuffle(r);
        }
        for (i, j) in all {
            queue.push(i, j);
        }
        // Values without support in some pair are dropped before the first pass.
        let mut unsupported = Vec::new();
        for v in 0..self.n {
            for a in self.unary[v].iter() {
                let lacks = (0..self.n).any(|w| w != v && self.pairs[v * self.n + w].row_is_empty(a));
                if lacks {
                    unsupported.push((v, a));
                }
            }
        }
        if !self.consistent {
            return;
        }
        self.remove_values(unsupported, &mut queue);
        if self.consistent {
            self.run(queue, rng.as_mut());
        }
    }

    fn remove_values(&mut self, mut stack: Vec<(usize, usize)>, queue: &mut PairQueue) {
        let n = self.n;
        while let Some((x, a)) = stack.pop() {
            if !self.unary[x].remove(a) {
                continue;
            }
            if self.unary[x].is_empty() {
                self.collapse();
                return;
            }
            for k in 0..n {
                if k == x {
                    continue;
                }
                let row: Vec<usize> = self.pairs[x * n + k].iter_row(a).collect();
                if row.is_empty() {
                    continue;
                }
                self.pairs[x * n + k].clear_row(a);
                for b in row {
                    let back = &mut self.pairs[k * n + x];
                    back.unset(b, a);
                    if back.row_is_empty(b) && self.unary[k].contains(b) {
                        stack.push((k, b));
                    }
                }
                queue.push(x.min(k), x.max(k));
            }
        }
    }

    fn run(&mut self, mut queue: PairQueue, mut rng: Option<&mut ChaCha8Rng>) {
        let n = self.n;
        let mut others: Vec<usize> = (0..n).collect();
        let mut row = Vec::new();
        while let Some((i, j)) = queue.pop() {
            if self.is_full(i, j) {
                continue;
            }
            if let Some(r) = rng.as_deref_mut() {
                others.shuffle(r);
            }
            for idx in 0..n {
                let k = others[idx];
                if k == i || k == j {
                    continue;
                }
                for (x, y, z) in [(i, j, k), (j, i, k)] {
                    let removed = self.revise(x, y, z, &mut row, &mut queue);
                    if !removed.is_empty() {
                        self.remove_values(removed, &mut queue);
                    }
                    if !self.consistent {
                        return;
                    }
                }
            }
        }
    }

    fn is_full(&self, x: usize, y: usize) -> bool {
        self.full[x * self.n + y]
    }

    fn mark_partial(&mut self, v: usize, w: usize) {
        self.full[v * self.n + w] = false;
        self.full[w * self.n + v] = false;
    }

    /// `L(x,z) ∩= L(x,y) ∘ L(y,z)`. Returns values of `x` or `z` left without
    /// support.
    fn revise(
        &mut self,
        x: usize,
        y: usize,
        z: usize,
        row: &mut Vec<u64>,
        queue: &mut PairQueue,
    ) -> Vec<(usize, usize)> {
        let n = self.n;
        if self.is_full(x, y) || self.is_full(y, z) {
            return Vec::new();
        }
        let stride = self.pairs[x * n + z].stride();
        if stride == 1 && self.pairs[x * n + y].stride() == 1 {
            return self.revise_narrow(x, y, z, queue);
        }
        let mut changed = false;
        let mut lost = Vec::new();
        for a in self.unary[x].iter() {
            row.clear();
            row.resize(stride, 0);
            {
                let xy = &self.pairs[x * n + y];
                let yz = &self.pairs[y * n + z];
                for c in xy.iter_row(a) {
                    for (w, &bits) in row.iter_mut().zip(yz.row(c)) {
                        *w |= bits;
                    }
                }
            }
            let target = self.pairs[x * n + z].row_mut(a);
            let mut dropped = Vec::new();
            for (wi, (t, &keep)) in target.iter_mut().zip(row.iter()).enumerate() {
                let gone = *t & !keep;
                if gone != 0 {
                    *t &= keep;
                    let mut g = gone;
                    while g != 0 {
                        dropped.push(wi * 64 + g.trailing_zeros() as usize);
                        g &= g - 1;
                    }
                }
            }
            if dropped.is_empty() {
                continue;
            }
            changed = true;
            if self.pairs[x * n + z].row_is_empty(a) {
                lost.push((x, a));
            }
            let back = &mut self.pairs[z * n + x];
            for b in dropped {
                back.unset(b, a);
                if back.row_is_empty(b) {
                    lost.push((z, b));
                }
            }
        }
        if changed {
            self.mark_partial(x, z);
            queue.push(x.min(z), x.max(z));
        }
        lost
    }

    /// [`Self::revise`] when the lists of `y` and `z` fit in one word.
    fn revise_narrow(&mut self, x: usize, y: usize, z: usize, queue: &mut PairQueue) -> Vec<(usize, usize)> {
        let n = self.n;
        let (ixy, iyz, ixz, izx) = (x * n + y, y * n + z, x * n + z, z * n + x);
        let mut lost = Vec::new();
        let mut changed = false;
        let ux = self.unary[x].words();
        for (wi, &uw) in ux.iter().enumerate() {
            let mut am = uw;
            while am != 0 {
                let a = wi * 64 + am.trailing_zeros() as usize;
                am &= am - 1;
                let mut cm = self.pairs[ixy].word(a);
                let mut acc = 0u64;
                while cm != 0 {
                    acc |= self.pairs[iyz].word(cm.trailing_zeros() as usize);
                    cm &= cm - 1;
                }
                let t = self.pairs[ixz].word(a);
                let mut gone = t & !acc;
                if gone == 0 {
                    continue;
                }
                changed = true;
                let kept = t & acc;
                self.pairs[ixz].set_word(a, kept);
                if kept == 0 {
                    lost.push((x, a));
                }
                while gone != 0 {
                    let b = gone.trailing_zeros() as usize;
                    gone &= gone - 1;
                    let back = &mut self.pairs[izx];
                    back.unset(b, a);
                    if back.row_is_empty(b) {
                        lost.push((z, b));
                    }
                }
            }
        }
        if changed {
            self.mark_partial(x, z);
            queue.push(x.min(z), x.max(z));
        }
        lost
    }
}

struct PairQueue {
    n: usize,
    queued: Vec<bool>,
    queue: VecDeque<(usize, usize)>,
}

impl PairQueue {
    fn new(n: usize) -> Self {
        PairQueue {
            n,
            queued: vec![false; n * n],
            queue: VecDeque::new(),
        }
    }

    fn push(&mut self, i: usize, j: usize) {
        let idx = i * self.n + j;
        if !self.queued[idx] {
            self.queued[idx] = true;
            self.queue.push_back((i, j));
        }
    }

    fn pop(&mut self) -> Option<(usize, usize)> {
        let (i, j) = self.queue.pop_front()?;
        self.queued[i * self.n + j] = false;
        Some((i, j))
    }
}

/// Arc-consistency preprocessing followed by the (2,3)-closure.
pub fn enforce_23_consistency(g: &Digraph, h: &Digraph) -> ConsistencyState {
    enforce_23_consistency_seeded(g, h, None)
}

/// As [`enforce_23_consistency`], with the revision order shuffled by `seed`.
pub fn enforce_23_consistency_seeded(g: &Digraph, h: &Digraph, seed: Option<u64>) -> ConsistencyState {
    let lists = enforce_arc_consistency(g, h, None);
    let mut state = ConsistencyState::initial(g, h, lists);
    state.close(seed);
    state
}

/// Which closure condition failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConsistencyWitness {
    /// `(a,b) ∈ L(v,w)` but `a ∉ L(v)` or `b ∉ L(w)`.
    OutsideLists { v: usize, w: usize, a: usize, b: usize },
    /// `L(w,v)` is not the converse of `L(v,w)`.
    NotConverse { v: usize, w: usize, a: usize, b: usize },
    /// `(a,b) ∈ L(v,w)` for an arc `v -> w` of `g` but `a -> b` is not an arc of `h`.
    NotAnArc { v: usize, w: usize, a: usize, b: usize },
    /// `a ∈ L(v)` has no partner in `L(v,w)`.
    UnsupportedValue { v: usize, a: usize, w: usize },
    /// `(a,b) ∈ L(v,w)` has no `c ∈ L(u)` with `(a,c) ∈ L(v,u)`, `(b,c) ∈ L(w,u)`.
    NoWitness { v: usize, w: usize, a: usize, b: usize, u: usize },
    EmptyList { v: usize },
}

/// Checks every (2,3)-consistency condition of `state` directly, without
/// running any propagation.
pub fn verify_23_consistent(
    state: &ConsistencyState,
    g: &Digraph,
    h: &Digraph,
) -> Result<(), ConsistencyWitness> {
    let n = state.len();
    for v in 0..n {
        if state.list_len(v) == 0 {
            return Err(ConsistencyWitness::EmptyList { v });
        }
    }
    for v in 0..n {
        for w in 0..n {
            if v == w {
                continue;
            }
            let m = state.pair_bits(v, w);
            let back = state.pair_bits(w, v);
            for (i, j) in m.iter() {
                let (a, b) = (state.local_values(v)[i], state.local_values(w)[j]);
                if !state.unary_bits(v).contains(i) || !state.unary_bits(w).contains(j) {
                    return Err(ConsistencyWitness::OutsideLists { v, w, a, b });
                }
                if !back.get(j, i) {
                    return Err(ConsistencyWitness::NotConverse { v, w, a, b });
                }
                if g.has_arc(v, w) && !h.has_arc(a, b) {
                    return Err(ConsistencyWitness::NotAnArc { v, w, a, b });
                }
            }
            for i in state.unary_bits(v).iter() {
                if m.row_is_empty(i) {
                    let a = state.local_values(v)[i];
                    return Err(ConsistencyWitness::UnsupportedValue { v, a, w });
                }
            }
        }
    }
    for v in 0..n {
        for w in v + 1..n {
            let vw = state.pair_bits(v, w);
            for u in 0..n {
                if u == v || u == w {
                    continue;
                }
                let vu = state.pair_bits(v, u);
                let wu = state.pair_bits(w, u);
                for (i, j) in vw.iter() {
                    let meet = vu.row(i).iter().zip(wu.row(j)).any(|(x, y)| x & y != 0);
                    if !meet {
                        return Err(ConsistencyWitness::NoWitness {
                            v,
                            w,
                            a: state.local_values(v)[i],
                            b: state.local_values(w)[j],
                            u,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// The microstructure graph of a consistency state: nodes are `(v, a)` with
/// `a ∈ L(v)`, edges join `(v,a)` and `(w,b)` for `(a,b) ∈ L(v,w)`, `v ≠ w`.
/// Edges are read from the state on demand.
pub struct MicrostructureGraph<'a> {
    state: &'a ConsistencyState,
    nodes: Vec<(usize, usize)>,
    offset: Vec<usize>,
}

impl<'a> MicrostructureGraph<'a> {
    pub fn nodes(&self) -> &[(usize, usize)] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, v: usize, a: usize) -> Option<usize> {
        let i = self.state.local(v, a)?;
        let bits = self.state.unary_bits(v);
        if !bits.contains(i) {
            return None;
        }
        Some(self.offset[v] + bits.iter().take_while(|&x| x < i).count())
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        let n = self.state.len();
        (0..n)
            .flat_map(|v| (v + 1..n).map(move |w| (v, w)))
            .map(|(v, w)| self.state.pair_bits(v, w).count())
            .sum()
    }

    /// Node-index edge list with `v < w`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.state.len();
        let local_to_node = self.local_to_node();
        (0..n).flat_map(move |v| {
            let l2n = local_to_node.clone();
            (v + 1..n).flat_map(move |w| {
                let l2n = l2n.clone();
                self.state
                    .pair_bits(v, w)
                    .iter()
                    .map(move |(i, j)| (l2n[v][i], l2n[w][j]))
            })
        })
    }

    fn local_to_node(&self) -> std::rc::Rc<Vec<Vec<usize>>> {
        let n = self.state.len();
        let mut out = Vec::with_capacity(n);
        for v in 0..n {
            let mut m = vec![usize::MAX; self.state.local_values(v).len()];
            for (k, i) in self.state.unary_bits(v).iter().enumerate() {
                m[i] = self.offset[v] + k;
            }
            out.push(m);
        }
        std::rc::Rc::new(out)
    }

    /// Connected components as sorted node-index lists, ordered by least node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.nodes.len());
        for (p, q) in self.edges() {
            uf.union(p, q);
        }
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for x in 0..self.nodes.len() {
            by_root.entry(uf.find(x)).or_default().push(x);
        }
        let mut comps: Vec<Vec<usize>> = by_root.into_values().collect();
        comps.sort_by_key(|c| c[0]);
        comps
    }
}

pub fn build_microstructure(state: &ConsistencyState) -> MicrostructureGraph<'_> {
    let mut nodes = Vec::new();
    let mut offset = Vec::with_capacity(state.len());
    for v in 0..state.len() {
        offset.push(nodes.len());
        nodes.extend(state.list(v).into_iter().map(|a| (v, a)));
    }
    MicrostructureGraph {
        state,
        nodes,
        offset,
    }
}

/// Per-component restriction of the unary lists: one family per component,
/// each family giving a (possibly empty) sublist for every `g`-vertex.
pub fn decompose_lists(ms: &MicrostructureGraph<'_>) -> Vec<Vec<Vec<usize>>> {
    let n = ms.state.len();
    ms.components()
        .into_iter()
        .map(|comp| {
            let mut fam = vec![Vec::new(); n];
            for node in comp {
                let (v, a) = ms.nodes[node];
                fam[v].push(a);
            }
            fam
        })
        .collect()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so component ids are stable
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}
