//! Line-based text formats. `#` starts a comment; blank lines are ignored;
//! fields are separated by whitespace.
//!
//! | file      | lines                                                   |
//! |-----------|---------------------------------------------------------|
//! | template  | `domain 0 1 2`, `relation R 5`, then one tuple per line |
//! | operation | `arity 3`, then `x y z -> w`                            |
//! | instance  | `R1 x1 x2 x3`; `var x` declares an unconstrained variable |
//! | digraph   | `v <label>`, `e <from> <to>`, `p <label> <tag>`         |
//! | lists     | `L <v> <a> <b> …`, `P <v> <w> <a>,<b> …`                |

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::consistency::ConsistencyState;
use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::structures::{Constraint, Elem, FiniteDomain, Instance, Operation, Relation, Template};
use crate::translation::TranslationResult;

/// Non-empty, comment-stripped lines with 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let fields: Vec<&str> = l.split_whitespace().collect();
        (!fields.is_empty()).then_some((i + 1, fields))
    })
}

pub fn parse_template(text: &str) -> Result<Template> {
    let mut domain: Option<FiniteDomain> = None;
    let mut rels: Vec<(String, usize, Vec<Vec<Elem>>)> = Vec::new();
    for (ln, f) in lines(text) {
        match f[0] {
            "domain" => {
                if domain.is_some() {
                    return Err(Error::parse(ln, "second domain line"));
                }
                domain = Some(FiniteDomain::new(f[1..].iter().copied()).map_err(|e| Error::parse(ln, e.to_string()))?);
            }
            "relation" => {
                if f.len() != 3 {
                    return Err(Error::parse(ln, "expected `relation <name> <arity>`"));
                }
                let arity = f[2]
                    .parse()
                    .map_err(|_| Error::parse(ln, format!("bad arity {:?}", f[2])))?;
                rels.push((f[1].to_string(), arity, Vec::new()));
            }
            _ => {
                let d = domain.as_ref().ok_or_else(|| Error::parse(ln, "tuple before domain line"))?;
                let (name, arity, tuples) = rels
                    .last_mut()
                    .ok_or_else(|| Error::parse(ln, "tuple before relation line"))?;
                if f.len() != *arity {
                    return Err(Error::parse(ln, format!("{name}: tuple of length {}, arity {arity}", f.len())));
                }
                let t = f
                    .iter()
                    .map(|x| d.elem(x).ok_or_else(|| Error::parse(ln, format!("unknown element {x:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                tuples.push(t);
            }
        }
    }
    let domain = domain.ok_or_else(|| Error::parse(0, "missing domain line"))?;
    let rels = rels
        .into_iter()
        .map(|(n, a, t)| Relation::new(n, a, t))
        .collect::<Result<Vec<_>>>()?;
    Template::new(domain, rels)
}

pub fn write_template(t: &Template) -> String {
    let mut out = format!("domain {}\n", t.domain().labels().join(" "));
    for r in t.relations() {
        let _ = writeln!(out, "relation {} {}", r.name(), r.arity());
        for tuple in r.iter() {
            let labels: Vec<&str> = tuple.iter().map(|&e| t.domain().label(e)).collect();
            let _ = writeln!(out, "{}", labels.join(" "));
        }
    }
    out
}

pub fn parse_operation(text: &str, domain: &FiniteDomain) -> Result<Operation> {
    let mut arity: Option<usize> = None;
    let mut entries: BTreeMap<Vec<Elem>, Elem> = BTreeMap::new();
    for (ln, f) in lines(text) {
        if f[0] == "arity" {
            if f.len() != 2 || arity.is_some() {
                return Err(Error::parse(ln, "expected a single `arity <n>` line"));
            }
            arity = Some(f[1].parse().map_err(|_| Error::parse(ln, format!("bad arity {:?}", f[1])))?);
            continue;
        }
        let n = arity.ok_or_else(|| Error::parse(ln, "table entry before arity line"))?;
        if f.len() != n + 2 || f[n] != "->" {
            return Err(Error::parse(ln, format!("expected {n} arguments, `->` and a value")));
        }
        let elem = |x: &str| domain.elem(x).ok_or_else(|| Error::parse(ln, format!("unknown element {x:?}")));
        let args = f[..n].iter().map(|x| elem(x)).collect::<Result<Vec<_>>>()?;
        let v = elem(f[n + 1])?;
        if let Some(old) = entries.insert(args, v) {
            if old != v {
                return Err(Error::parse(ln, "conflicting table entry"));
            }
        }
    }
    let n = arity.ok_or_else(|| Error::parse(0, "missing arity line"))?;
    let expected = domain.size().pow(n as u32);
    if entries.len() != expected {
        return Err(Error::input(format!("operation table has {} of {expected} entries", entries.len())));
    }
    Operation::from_table(domain.size(), n, entries.into_values().collect())
}

pub fn write_operation(op: &Operation, domain: &FiniteDomain) -> String {
    let mut out = format!("arity {}\n", op.arity());
    for args in op.arguments() {
        let labels: Vec<&str> = args.iter().map(|&e| domain.label(e)).collect();
        let _ = writeln!(out, "{} -> {}", labels.join(" "), domain.label(op.apply(&args)));
    }
    out
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut cons = Vec::new();
    let mut extra = Vec::new();
    for (ln, f) in lines(text) {
        if f.len() < 2 {
            return Err(Error::parse(ln, "expected `<relation> <var> …` or `var <name>`"));
        }
        if f[0] == "var" {
            extra.extend(f[1..].iter().map(|s| s.to_string()));
        } else {
            cons.push(Constraint {
                relation: f[0].to_string(),
                scope: f[1..].iter().map(|s| s.to_string()).collect(),
            });
        }
    }
    Ok(Instance::new(cons, extra))
}

pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let mut used = std::collections::BTreeSet::new();
    for c in inst.constraints() {
        used.extend(c.scope.iter().cloned());
        let _ = writeln!(out, "{} {}", c.relation, c.scope.join(" "));
    }
    for v in inst.variables() {
        if !used.contains(v) {
            let _ = writeln!(out, "var {v}");
        }
    }
    out
}

pub fn parse_digraph(text: &str) -> Result<Digraph> {
    let mut g = Digraph::new();
    for (ln, f) in lines(text) {
        match (f[0], f.len()) {
            ("v", 2) => {
                g.add_vertex(f[1]);
            }
            ("e", 3) => {
                let (u, v) = (
                    g.vertex(f[1]).ok_or_else(|| Error::parse(ln, format!("undeclared vertex {:?}", f[1])))?,
                    g.vertex(f[2]).ok_or_else(|| Error::parse(ln, format!("undeclared vertex {:?}", f[2])))?,
                );
                g.add_arc(u, v);
            }
            ("p", 3) => {
                let v = g
                    .vertex(f[1])
                    .ok_or_else(|| Error::parse(ln, format!("undeclared vertex {:?}", f[1])))?;
                g.set_provenance(v, f[2]);
            }
            _ => return Err(Error::parse(ln, format!("unrecognised line starting {:?}", f[0]))),
        }
    }
    Ok(g)
}

/// Vertices in insertion order, then arcs, then provenance tags.
pub fn write_digraph(g: &Digraph) -> String {
    let mut out = String::new();
    for v in g.vertices() {
        let _ = writeln!(out, "v {}", g.label(v));
    }
    for (u, v) in g.arcs() {
        let _ = writeln!(out, "e {} {}", g.label(u), g.label(v));
    }
    for v in g.vertices() {
        if let Some(p) = g.provenance(v) {
            let _ = writeln!(out, "p {} {}", g.label(v), p);
        }
    }
    out
}

/// Tab-separated `vertex gadget path height` for every `G`-vertex.
pub fn write_provenance(tr: &TranslationResult) -> String {
    let mut out = String::from("vertex\tgadget\tpath\theight\n");
    for v in tr.g.vertices() {
        let (gadget, path, height) = tr.provenance_row(v);
        let _ = writeln!(out, "{}\t{gadget}\t{path}\t{height}", tr.g.label(v));
    }
    out
}

/// `L` lines for every vertex; with `pairs`, `P` lines for every pair
/// `v < w` in vertex order.
pub fn write_lists(state: &ConsistencyState, g: &Digraph, h: &Digraph, pairs: bool) -> String {
    let mut out = String::new();
    for v in g.vertices() {
        let vals: Vec<&str> = state.list(v).into_iter().map(|a| h.label(a)).collect();
        let _ = writeln!(out, "L {} {}", g.label(v), vals.join(" "));
    }
    if pairs {
        for v in g.vertices() {
            for w in v + 1..g.len() {
                let ps: Vec<String> = state
                    .pair_list(v, w)
                    .into_iter()
                    .map(|(a, b)| format!("{},{}", h.label(a), h.label(b)))
                    .collect();
                let _ = writeln!(out, "P {} {} {}", g.label(v), g.label(w), ps.join(" "));
            }
        }
    }
    out
}

/// Reads lists for `g -> h`. Vertices without an `L` line keep all of `V(h)`;
/// pairs without a `P` line start from the product of the unary lists.
pub fn parse_lists(text: &str, g: &Digraph, h: &Digraph) -> Result<ConsistencyState> {
    let vertex = |ln: usize, s: &str| g.vertex(s).ok_or_else(|| Error::parse(ln, format!("unknown vertex {s:?}")));
    let value = |ln: usize, s: &str| h.vertex(s).ok_or_else(|| Error::parse(ln, format!("unknown value {s:?}")));
    let mut lists: Vec<Option<Vec<usize>>> = vec![None; g.len()];
    let mut pair_lines = Vec::new();
    for (ln, f) in lines(text) {
        match f[0] {
            "L" if f.len() >= 2 => {
                let v = vertex(ln, f[1])?;
                let vals = f[2..].iter().map(|s| value(ln, s)).collect::<Result<Vec<_>>>()?;
                lists[v] = Some(vals);
            }
            "P" if f.len() >= 3 => {
                let (v, w) = (vertex(ln, f[1])?, vertex(ln, f[2])?);
                if v == w {
                    return Err(Error::parse(ln, "pair list on a single vertex"));
                }
                let mut ps = Vec::new();
                for item in &f[3..] {
                    let (a, b) = item
                        .split_once(',')
                        .ok_or_else(|| Error::parse(ln, format!("expected a,b, got {item:?}")))?;
                    ps.push((value(ln, a)?, value(ln, b)?));
                }
                pair_lines.push((v, w, ps));
            }
            _ => return Err(Error::parse(ln, format!("unrecognised line starting {:?}", f[0]))),
        }
    }
    let lists = lists
        .into_iter()
        .map(|l| l.unwrap_or_else(|| h.vertices().collect()))
        .collect();
    let mut state = ConsistencyState::initial(g, h, lists);
    for (v, w, ps) in pair_lines {
        state.set_pair_list(v, w, &ps);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_round_trip() {
        let text = "# t\ndomain 0 1 2\nrelation R 2\n0 1\n2 2 # diag\nrelation U 1\n1\n";
        let t = parse_template(text).unwrap();
        assert_eq!(t.relation("R").unwrap().len(), 2);
        assert_eq!(parse_template(&write_template(&t)).unwrap(), t);
    }

    #[test]
    fn template_errors_carry_line_numbers() {
        let err = parse_template("domain 0 1\nrelation R 2\n0 3\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(parse_template("relation R 1\n0\n").is_err());
        assert!(parse_template("domain 0\nrelation R 2\n0\n").is_err());
    }

    #[test]
    fn operation_round_trip_and_totality() {
        let d = FiniteDomain::new(["0", "1"]).unwrap();
        let op = Operation::from_fn(2, 2, |a| a[0] & a[1]).unwrap();
        let text = write_operation(&op, &d);
        assert_eq!(parse_operation(&text, &d).unwrap(), op);
        assert!(parse_operation("arity 2\n0 0 -> 0\n", &d).is_err());
        assert!(parse_operation("arity 1\n0 -> 0\n0 -> 1\n1 -> 1\n", &d).is_err());
    }

    #[test]
    fn digraph_round_trip() {
        let text = "v a\nv b\ne a b\np a var\n";
        let g = parse_digraph(text).unwrap();
        assert_eq!(write_digraph(&g), text);
        assert!(parse_digraph("e a b\n").is_err());
    }

    #[test]
    fn instance_round_trip() {
        let inst = parse_instance("R1 x1 x2 x3\nvar y\n").unwrap();
        assert_eq!(inst.variables().len(), 4);
        assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
    }
}
