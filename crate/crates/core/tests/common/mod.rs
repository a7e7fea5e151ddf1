//! Naive reference implementations shared by the integration tests. None of
//! these call the search or propagation code under test.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use fkr_cex::digraph::Digraph;
use fkr_cex::structures::{Instance, Template};

fn neighbours(g: &Digraph) -> Vec<Vec<usize>> {
    let mut nb = vec![Vec::new(); g.len()];
    for (u, v) in g.arcs() {
        nb[u].push(v);
        nb[v].push(u);
    }
    nb
}

/// Vertices of `g` ordered so that each one, where possible, touches an
/// earlier one.
fn bfs_order(g: &Digraph) -> Vec<usize> {
    let nb = neighbours(g);
    let mut seen = vec![false; g.len()];
    let mut order = Vec::new();
    for s in 0..g.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            for &w in &nb[u] {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    order
}

/// Every homomorphism `g -> h` by plain backtracking, optionally restricted
/// to per-vertex allowed sets.
pub fn naive_homs(g: &Digraph, h: &Digraph, allowed: Option<&[Vec<usize>]>) -> Vec<Vec<usize>> {
    let order = bfs_order(g);
    let arcs: Vec<(usize, usize)> = g.arcs().collect();
    let harcs: BTreeSet<(usize, usize)> = h.arcs().collect();
    let mut pos = vec![0; g.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    // arcs checked once both ends are assigned
    let mut checks: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.len()];
    for &(u, v) in &arcs {
        checks[pos[u].max(pos[v])].push((u, v));
    }
    let mut out = Vec::new();
    let mut m = vec![usize::MAX; g.len()];
    fn go(
        i: usize,
        order: &[usize],
        checks: &[Vec<(usize, usize)>],
        harcs: &BTreeSet<(usize, usize)>,
        hn: usize,
        allowed: Option<&[Vec<usize>]>,
        m: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if i == order.len() {
            out.push(m.clone());
            return;
        }
        let v = order[i];
        let cands: Vec<usize> = match allowed {
            Some(a) => a[v].clone(),
            None => (0..hn).collect(),
        };
        for a in cands {
            m[v] = a;
            if checks[i].iter().all(|&(x, y)| harcs.contains(&(m[x], m[y]))) {
                go(i + 1, order, checks, harcs, hn, allowed, m, out);
            }
        }
        m[v] = usize::MAX;
    }
    go(0, &order, &checks, &harcs, h.len(), allowed, &mut m, &mut out);
    out.sort();
    out
}

/// All solutions of `inst` over `tmpl` by enumerating every assignment.
pub fn brute_force_csp(tmpl: &Template, inst: &Instance) -> Vec<Vec<usize>> {
    let vars = inst.variables();
    let n = tmpl.domain().size();
    let total = n.pow(vars.len() as u32);
    let scopes: Vec<(&str, Vec<usize>)> = inst
        .constraints()
        .iter()
        .map(|c| {
            (
                c.relation.as_str(),
                c.scope.iter().map(|x| inst.var_index(x).unwrap()).collect(),
            )
        })
        .collect();
    let mut sols = Vec::new();
    for code in 0..total {
        let mut c = code;
        let asg: Vec<usize> = (0..vars.len())
            .map(|_| {
                let d = c % n;
                c /= n;
                d
            })
            .collect();
        let ok = scopes.iter().all(|(r, s)| {
            let t: Vec<usize> = s.iter().map(|&i| asg[i]).collect();
            tmpl.relation(r).unwrap().contains(&t)
        });
        if ok {
            sols.push(asg);
        }
    }
    sols
}

/// Level function with `lvl(v) = lvl(u) + 1` on every arc, normalised to
/// minimum 0 per component, or `None` if there is none.
pub fn naive_levels(g: &Digraph) -> Option<Vec<i64>> {
    let mut out = vec![0i64; g.len()];
    let mut adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); g.len()];
    for (u, v) in g.arcs() {
        adj[u].push((v, 1));
        adj[v].push((u, -1));
    }
    let mut seen = vec![false; g.len()];
    for s in 0..g.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(w, d) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    out[w] = out[u] + d;
                    comp.push(w);
                    stack.push(w);
                } else if out[w] != out[u] + d {
                    return None;
                }
            }
        }
        let min = comp.iter().map(|&v| out[v]).min().unwrap();
        for v in comp {
            out[v] -= min;
        }
    }
    Some(out)
}

pub struct UnionFind(Vec<usize>);

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    pub fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }
    pub fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        self.0[a] = b;
    }
    pub fn count(&mut self) -> usize {
        (0..self.0.len()).filter(|&x| self.find(x) == x).count()
    }
}

/// Small deterministic generator so the oracles do not share the crate's RNG.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }
    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

pub fn random_digraph(rng: &mut Lcg, n: usize, arc_percent: u64) -> Digraph {
    let mut g = Digraph::new();
    for i in 0..n {
        g.add_vertex(&format!("v{i}"));
    }
    for u in 0..n {
        for v in 0..n {
            if rng.below(100) < arc_percent {
                g.add_arc(u, v);
            }
        }
    }
    g
}

/// First shuffle seed for the order-independence checks: `$WNU_SEED`, or 0.
pub fn base_seed() -> u64 {
    std::env::var("WNU_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}
