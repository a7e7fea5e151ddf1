//! Translation of a single-relation template into a balanced digraph `H`, and
//! of a gadget-based instance into a digraph `G`.
//!
//! For an element `a` and a row `λ` of the `k`-ary relation `R`, the oriented
//! path `P(a,λ)` runs `a -> u0 -> … -> uk -> λ`. Segment `i` (from `u{i-1}` to
//! `ui`) is a single arc when `λ[i] = a` and the zigzag
//! `u{i-1} -> u{i}L <- u{i-1}R -> ui` otherwise. The probe path `Q_i` has the
//! same shape with a single arc exactly at segment `i`.
//!
//! `H` is the union of all `P(a,λ)`. A gadget sends a fresh copy of `Q_c` from
//! each of its endpoint variables to a shared fresh top vertex; `G` is the
//! union of the gadgets glued at the variables.

use std::collections::{BTreeMap, BTreeSet};

use crate::digraph::{Digraph, OrientedPath};
use crate::error::{Error, Result};
use crate::hom::{enumerate_homomorphisms, HomSearch};
use crate::structures::{Elem, FiniteDomain, Relation};

/// Label of interior vertex `ui` of `P(a,λ)`.
fn u_label(a: &str, row: &str, suffix: &str) -> String {
    format!("u:{a}:{row}:{suffix}")
}

/// `P(a,λ)` with vertex labels as used inside `H`.
pub fn build_p(domain: &FiniteDomain, a: Elem, row: &[Elem], row_name: &str) -> OrientedPath {
    let al = domain.label(a);
    let mut p = OrientedPath::start(al).forward(u_label(al, row_name, "0"));
    for (i, &x) in row.iter().enumerate() {
        let seg = i + 1;
        let next = u_label(al, row_name, &seg.to_string());
        if x == a {
            p = p.forward(next);
        } else {
            p = p
                .forward(u_label(al, row_name, &format!("{seg}L")))
                .backward(u_label(al, row_name, &format!("{}R", seg - 1)))
                .forward(next);
        }
    }
    p.forward(row_name)
}

/// The probe path `Q_i` for a relation of the given arity, with local labels
/// `b`, `v0`…`vk`, `v{j}L`, `v{j-1}R`, `t`.
pub fn build_q(coord: usize, arity: usize) -> Result<OrientedPath> {
    if coord == 0 || coord > arity {
        return Err(Error::input(format!("coordinate {coord} outside 1..={arity}")));
    }
    let mut q = OrientedPath::start("b").forward("v0");
    for j in 1..=arity {
        if j == coord {
            q = q.forward(format!("v{j}"));
        } else {
            q = q
                .forward(format!("v{j}L"))
                .backward(format!("v{}R", j - 1))
                .forward(format!("v{j}"));
        }
    }
    Ok(q.forward("t"))
}

/// Interior vertex count of `H` by formula: every path has `k+1` spine
/// vertices plus two per mismatching coordinate.
pub fn auxiliary_vertex_count(domain: &FiniteDomain, rel: &Relation) -> usize {
    let k = rel.arity();
    domain
        .elems()
        .flat_map(|a| rel.iter().map(move |row| (a, row)))
        .map(|(a, row)| k + 1 + 2 * row.iter().filter(|&&x| x != a).count())
        .sum()
}

/// Row labels: the given names, or digit strings of the tuples.
pub fn tuple_row_names(domain: &FiniteDomain, rel: &Relation) -> Vec<String> {
    rel.iter().map(|t| domain.tuple_label(t)).collect()
}

pub fn build_h(domain: &FiniteDomain, rel: &Relation, row_names: &[String]) -> Result<Digraph> {
    if rel.is_empty() {
        return Err(Error::input("cannot translate an empty relation"));
    }
    if row_names.len() != rel.len() {
        return Err(Error::input("one name per relation row required"));
    }
    let names: BTreeSet<&str> = row_names
        .iter()
        .map(String::as_str)
        .chain(domain.labels().iter().map(String::as_str))
        .collect();
    if names.len() != row_names.len() + domain.size() {
        return Err(Error::input("row names must be distinct from each other and from elements"));
    }
    let mut h = Digraph::new();
    for a in domain.elems() {
        h.add_vertex_with(domain.label(a), "element");
    }
    for name in row_names {
        h.add_vertex_with(name, "row");
    }
    for a in domain.elems() {
        for (row, name) in rel.iter().zip(row_names) {
            let p = build_p(domain, a, row, name);
            p.validate()?;
            let ids = p.add_to(&mut h, |l| l.to_string());
            for (&v, ht) in ids.iter().zip(p.heights()).skip(1) {
                if v != ids[ids.len() - 1] {
                    h.set_provenance(v, format!("P:{}:{}:{}", domain.label(a), name, ht));
                }
            }
        }
    }
    debug_assert!(!h.has_self_loop());
    Ok(h)
}

/// One constraint of `G`: copies of `Q_{coords[k]}` from `endpoints[k]` into
/// the shared top vertex `name`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gadget {
    pub name: String,
    pub coords: Vec<usize>,
    pub endpoints: Vec<String>,
}

impl Gadget {
    pub fn new(name: &str, coords: &[usize], endpoints: &[&str]) -> Self {
        Gadget {
            name: name.to_string(),
            coords: coords.to_vec(),
            endpoints: endpoints.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn validate(&self, arity: usize) -> Result<()> {
        if self.coords.len() != self.endpoints.len() || self.coords.is_empty() {
            return Err(Error::input(format!(
                "gadget {}: {} coordinates for {} endpoints",
                self.name,
                self.coords.len(),
                self.endpoints.len()
            )));
        }
        let distinct: BTreeSet<_> = self.coords.iter().collect();
        if distinct.len() != self.coords.len() {
            return Err(Error::input(format!("gadget {}: repeated coordinate", self.name)));
        }
        let ends: BTreeSet<_> = self.endpoints.iter().collect();
        if ends.len() != self.endpoints.len() {
            return Err(Error::input(format!("gadget {}: repeated endpoint", self.name)));
        }
        if let Some(c) = self.coords.iter().find(|&&c| c == 0 || c > arity) {
            return Err(Error::input(format!(
                "gadget {}: coordinate {c} outside 1..={arity}",
                self.name
            )));
        }
        Ok(())
    }

    fn copy_label(&self, slot: usize, local: &str) -> String {
        format!("q:{}:{}:{}", self.name, self.endpoints[slot], local)
    }
}

/// A stand-alone gadget digraph with its distinguished vertices.
#[derive(Clone, Debug)]
pub struct GadgetFragment {
    pub digraph: Digraph,
    /// Endpoint vertices, in gadget order.
    pub endpoints: Vec<usize>,
    pub top: usize,
}

pub fn build_gadget(coords: &[usize], endpoints: &[&str], arity: usize) -> Result<GadgetFragment> {
    let gadget = Gadget::new("t", coords, endpoints);
    gadget.validate(arity)?;
    let mut g = Digraph::new();
    let ends: Vec<usize> = endpoints.iter().map(|e| g.add_vertex(e)).collect();
    let top = g.add_vertex("t");
    add_gadget(&mut g, &gadget, arity)?;
    Ok(GadgetFragment {
        digraph: g,
        endpoints: ends,
        top,
    })
}

fn add_gadget(g: &mut Digraph, gadget: &Gadget, arity: usize) -> Result<()> {
    for (slot, &c) in gadget.coords.iter().enumerate() {
        let q = build_q(c, arity)?;
        let heights = q.heights();
        let ids = q.add_to(g, |l| match l {
            "b" => gadget.endpoints[slot].clone(),
            "t" => gadget.name.clone(),
            other => gadget.copy_label(slot, other),
        });
        for (k, &v) in ids.iter().enumerate() {
            if k == 0 || k + 1 == ids.len() {
                continue;
            }
            g.set_provenance(
                v,
                format!("Q{}:{}:{}:{}", c, gadget.name, gadget.endpoints[slot], heights[k]),
            );
        }
    }
    Ok(())
}

/// Where a `G`-vertex comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Variable(String),
    /// Top vertex of gadget `gadget` (index into the gadget list).
    Top { gadget: usize },
    /// Interior vertex of the copy of `Q_{coord}` in slot `slot` of gadget
    /// `gadget`; `local` is its position along the path.
    OnCopy {
        gadget: usize,
        slot: usize,
        coord: usize,
        local: usize,
    },
}

/// `σ_v`: row index ↦ `H`-vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaMap {
    pub images: Vec<usize>,
}

impl SigmaMap {
    pub fn image(&self, row: usize) -> usize {
        self.images[row]
    }

    pub fn is_injective(&self) -> bool {
        let set: BTreeSet<_> = self.images.iter().collect();
        set.len() == self.images.len()
    }

    /// Row mapped to `a`, if any.
    pub fn preimage(&self, a: usize) -> Option<usize> {
        self.images.iter().position(|&x| x == a)
    }
}

#[derive(Clone, Debug)]
pub struct TranslationResult {
    pub domain: FiniteDomain,
    pub relation: Relation,
    pub row_names: Vec<String>,
    pub h: Digraph,
    pub g: Digraph,
    pub gadgets: Vec<Gadget>,
    pub var_vertices: BTreeMap<String, usize>,
    pub t_vertices: BTreeMap<String, usize>,
    origin: Vec<Origin>,
    /// coord ↦ [position along Q_coord][row] ↦ H-vertex
    sigma_tables: BTreeMap<usize, Vec<Vec<usize>>>,
    element_vertices: Vec<usize>,
    row_vertices: Vec<usize>,
}

impl TranslationResult {
    pub fn origin(&self, v: usize) -> &Origin {
        &self.origin[v]
    }

    pub fn arity(&self) -> usize {
        self.relation.arity()
    }

    /// `H`-vertex of domain element `a`.
    pub fn element_vertex(&self, a: Elem) -> usize {
        self.element_vertices[a]
    }

    /// Domain element at `H`-vertex `v`, if `v` is one.
    pub fn vertex_element(&self, v: usize) -> Option<Elem> {
        self.element_vertices.iter().position(|&x| x == v)
    }

    /// `H`-vertex of relation row `r` (rows in lexicographic tuple order).
    pub fn row_vertex(&self, r: usize) -> usize {
        self.row_vertices[r]
    }

    pub fn rows(&self) -> Vec<&Vec<Elem>> {
        self.relation.iter().collect()
    }

    pub fn is_variable(&self, v: usize) -> bool {
        matches!(self.origin[v], Origin::Variable(_))
    }

    /// Gadget index a vertex belongs to; `None` for variables.
    pub fn gadget_of(&self, v: usize) -> Option<usize> {
        match self.origin[v] {
            Origin::Variable(_) => None,
            Origin::Top { gadget } | Origin::OnCopy { gadget, .. } => Some(gadget),
        }
    }

    /// Human-readable provenance: `(gadget, path, height)`.
    pub fn provenance_row(&self, v: usize) -> (String, String, i64) {
        match &self.origin[v] {
            Origin::Variable(name) => (String::from("-"), format!("var:{name}"), 0),
            Origin::Top { gadget } => (
                self.gadgets[*gadget].name.clone(),
                String::from("top"),
                self.arity() as i64 + 2,
            ),
            Origin::OnCopy {
                gadget,
                slot,
                coord,
                local,
            } => {
                let q = build_q(*coord, self.arity()).expect("coordinate validated");
                let gd = &self.gadgets[*gadget];
                (
                    gd.name.clone(),
                    format!("Q{}:{}", coord, gd.endpoints[*slot]),
                    q.heights()[*local],
                )
            }
        }
    }
}

/// Builds `H` from `(domain, rel)` and `G` from the gadget list, and computes
/// the `σ` tables for every coordinate the gadgets use.
pub fn translate(
    domain: &FiniteDomain,
    rel: &Relation,
    row_names: &[String],
    gadgets: &[Gadget],
) -> Result<TranslationResult> {
    let h = build_h(domain, rel, row_names)?;
    let arity = rel.arity();
    let mut g = Digraph::new();
    let mut var_vertices = BTreeMap::new();
    let mut t_vertices = BTreeMap::new();
    for gd in gadgets {
        gd.validate(arity)?;
        for e in &gd.endpoints {
            let v = g.add_vertex_with(e, "var");
            var_vertices.insert(e.clone(), v);
        }
    }
    for gd in gadgets {
        if var_vertices.contains_key(&gd.name) || t_vertices.contains_key(&gd.name) {
            return Err(Error::input(format!("gadget name {} is already used", gd.name)));
        }
        let t = g.add_vertex_with(&gd.name, format!("top:{}", gd.name));
        t_vertices.insert(gd.name.clone(), t);
    }
    for gd in gadgets {
        add_gadget(&mut g, gd, arity)?;
    }
    if g.has_self_loop() {
        return Err(Error::construction("G has a self-loop"));
    }

    let mut origin = vec![Origin::Variable(String::new()); g.len()];
    for (name, &v) in &var_vertices {
        origin[v] = Origin::Variable(name.clone());
    }
    for (gi, gd) in gadgets.iter().enumerate() {
        origin[t_vertices[&gd.name]] = Origin::Top { gadget: gi };
        for (slot, &c) in gd.coords.iter().enumerate() {
            let q = build_q(c, arity)?;
            for (local, l) in q.vertices().iter().enumerate() {
                if l == "b" || l == "t" {
                    continue;
                }
                let v = g.vertex(&gd.copy_label(slot, l)).expect("copy vertex exists");
                origin[v] = Origin::OnCopy {
                    gadget: gi,
                    slot,
                    coord: c,
                    local,
                };
            }
        }
    }

    let coords: BTreeSet<usize> = gadgets.iter().flat_map(|gd| gd.coords.iter().copied()).collect();
    let mut sigma_tables = BTreeMap::new();
    for c in coords {
        sigma_tables.insert(c, sigma_table(domain, rel, row_names, &h, c)?);
    }

    let element_vertices = domain
        .elems()
        .map(|a| h.vertex(domain.label(a)).expect("element vertex"))
        .collect();
    let row_vertices = row_names
        .iter()
        .map(|n| h.vertex(n).expect("row vertex"))
        .collect();
    Ok(TranslationResult {
        domain: domain.clone(),
        relation: rel.clone(),
        row_names: row_names.to_vec(),
        h,
        g,
        gadgets: gadgets.to_vec(),
        var_vertices,
        t_vertices,
        origin,
        sigma_tables,
        element_vertices,
        row_vertices,
    })
}

/// `[position along Q_c][row] -> H-vertex`, from the unique homomorphism
/// `Q_c -> P(λ[c], λ)` for every row `λ`.
fn sigma_table(
    domain: &FiniteDomain,
    rel: &Relation,
    row_names: &[String],
    h: &Digraph,
    coord: usize,
) -> Result<Vec<Vec<usize>>> {
    let q = build_q(coord, rel.arity())?;
    let qg = q.to_digraph();
    let mut table = vec![Vec::with_capacity(rel.len()); q.vertices().len()];
    for (row, name) in rel.iter().zip(row_names) {
        let a = row[coord - 1];
        let p = build_p(domain, a, row, name).to_digraph();
        let homs = enumerate_homomorphisms(&qg, &p, Some(2), &[]);
        if homs.len() != 1 {
            return Err(Error::construction(format!(
                "Q{coord} -> P({},{name}) has {} homomorphisms, expected exactly one",
                domain.label(a),
                homs.len()
            )));
        }
        for (pos, l) in q.vertices().iter().enumerate() {
            let qv = qg.vertex(l).expect("path vertex");
            let pl = p.label(homs[0][qv]);
            table[pos].push(h.vertex(pl).expect("P is a subgraph of H"));
        }
    }
    Ok(table)
}

/// `σ_v` for a non-variable `G`-vertex. Top vertices get the identity on rows.
pub fn compute_sigma(tr: &TranslationResult, v: usize) -> Result<SigmaMap> {
    match tr.origin(v) {
        Origin::Variable(name) => Err(Error::input(format!("{name} is a variable vertex; σ is undefined"))),
        Origin::Top { .. } => Ok(SigmaMap {
            images: tr.row_vertices.clone(),
        }),
        Origin::OnCopy { coord, local, .. } => {
            let table = tr
                .sigma_tables
                .get(coord)
                .ok_or_else(|| Error::construction(format!("no σ table for Q{coord}")))?;
            Ok(SigmaMap {
                images: table[*local].clone(),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathHomCount {
    pub element: Elem,
    pub coord: usize,
    pub row: usize,
    pub count: usize,
    pub surjective: bool,
}

/// Homomorphism counts `Q_c -> P(a,λ)` for every element, listed coordinate
/// and row; surjectivity is recorded when exactly one homomorphism exists.
pub fn path_hom_census(
    domain: &FiniteDomain,
    rel: &Relation,
    row_names: &[String],
    coords: &[usize],
) -> Result<Vec<PathHomCount>> {
    let mut out = Vec::new();
    for a in domain.elems() {
        for &c in coords {
            let q = build_q(c, rel.arity())?.to_digraph();
            for (r, (row, name)) in rel.iter().zip(row_names).enumerate() {
                let p = build_p(domain, a, row, name).to_digraph();
                let homs = HomSearch::new(&q, &p).enumerate();
                let surjective = homs.len() == 1 && {
                    let image: BTreeSet<usize> = homs[0].iter().copied().collect();
                    image.len() == p.len()
                };
                out.push(PathHomCount {
                    element: a,
                    coord: c,
                    row: r,
                    count: homs.len(),
                    surjective,
                });
            }
        }
    }
    Ok(out)
}

/// The relation pp-defined by a gadget on `h`: endpoint images of all
/// homomorphisms, with how many homomorphisms realise each tuple.
pub fn pp_relation(fragment: &GadgetFragment, h: &Digraph) -> BTreeMap<Vec<usize>, u64> {
    let mut out: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    HomSearch::new(&fragment.digraph, h).for_each(|m| {
        let key: Vec<usize> = fragment.endpoints.iter().map(|&e| m[e]).collect();
        *out.entry(key).or_default() += 1;
        std::ops::ControlFlow::Continue(())
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{compute_levels, net_length};

    fn dom() -> FiniteDomain {
        FiniteDomain::new(["0", "1", "2"]).unwrap()
    }

    #[test]
    fn p_path_shape() {
        let d = dom();
        let row = vec![0, 0, 0, 1, 0];
        let p = build_p(&d, 0, &row, "α");
        assert_eq!(net_length(&p), 7);
        // zigzag only at segment 4
        assert_eq!(p.vertices().len(), 2 + 6 + 2);
        assert!(p.vertices().contains(&"u:0:α:4L".to_string()));
        assert!(p.vertices().contains(&"u:0:α:3R".to_string()));
    }

    #[test]
    fn q_path_shape() {
        let q = build_q(1, 5).unwrap();
        assert_eq!(net_length(&q), 7);
        assert_eq!(q.vertices().len() - 2, 14);
        assert!(build_q(0, 5).is_err());
        assert!(build_q(6, 5).is_err());
        assert!(compute_levels(&q.to_digraph()).is_balanced());
    }

    #[test]
    fn one_point_relation() {
        let d = FiniteDomain::new(["0"]).unwrap();
        let r = Relation::new("R", 5, vec![vec![0; 5]]).unwrap();
        let names = tuple_row_names(&d, &r);
        let h = build_h(&d, &r, &names).unwrap();
        assert_eq!(h.len(), 1 + 1 + 6);
        assert_eq!(auxiliary_vertex_count(&d, &r), 6);
    }

    #[test]
    fn empty_relation_is_rejected() {
        let d = dom();
        let r = Relation::new("R", 2, Vec::<Vec<Elem>>::new()).unwrap();
        assert!(build_h(&d, &r, &[]).is_err());
    }

    #[test]
    fn gadget_validation() {
        assert!(build_gadget(&[1, 1], &["x", "y"], 5).is_err());
        assert!(build_gadget(&[1, 2], &["x"], 5).is_err());
        assert!(build_gadget(&[1, 7], &["x", "y"], 5).is_err());
        let f = build_gadget(&[1, 2, 3], &["x", "y", "z"], 5).unwrap();
        assert_eq!(f.digraph.len(), 3 + 1 + 3 * 14);
    }
}
