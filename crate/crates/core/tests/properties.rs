mod common;

use common::{base_seed, brute_force_csp, naive_homs};
use fkr_cex::consistency::{enforce_23_consistency, enforce_23_consistency_seeded, verify_23_consistent};
use fkr_cex::digraph::Digraph;
use fkr_cex::hom::HomSearch;
use fkr_cex::structures::{
    check_operation_properties, check_polymorphism, solve_instance, Constraint, FiniteDomain, Instance, Operation,
    Relation, Template,
};
use proptest::prelude::*;

fn digraph(n: usize, arcs: &[(usize, usize)]) -> Digraph {
    let mut g = Digraph::new();
    for i in 0..n {
        g.add_vertex(&format!("v{i}"));
    }
    for &(u, v) in arcs {
        g.add_arc(u % n, v % n);
    }
    g
}

fn arb_digraph(max_n: usize) -> impl Strategy<Value = Digraph> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..=n * 2).prop_map(move |arcs| digraph(n, &arcs))
    })
}

fn domain(n: usize) -> FiniteDomain {
    FiniteDomain::new((0..n).map(|i| i.to_string())).unwrap()
}

fn arb_operation() -> impl Strategy<Value = Operation> {
    (2usize..=3, 2usize..=3).prop_flat_map(|(size, arity)| {
        prop::collection::vec(0..size, size.pow(arity as u32))
            .prop_map(move |t| Operation::from_table(size, arity, t).unwrap())
    })
}

fn relation(size: usize, arity: usize, mask: &[bool]) -> Relation {
    let tuples = (0..size.pow(arity as u32)).filter(|&c| mask[c]).map(|mut c| {
        let mut t = vec![0; arity];
        for slot in t.iter_mut().rev() {
            *slot = c % size;
            c /= size;
        }
        t
    });
    Relation::new("R", arity, tuples).unwrap()
}

/// Every choice of `arity` tuples, by nested enumeration.
fn preserves(op: &Operation, rel: &Relation) -> bool {
    let rows: Vec<&Vec<usize>> = rel.iter().collect();
    let k = op.arity();
    let total = rows.len().pow(k as u32);
    (0..total).all(|mut code| {
        let pick: Vec<&Vec<usize>> = (0..k)
            .map(|_| {
                let r = rows[code % rows.len()];
                code /= rows.len();
                r
            })
            .collect();
        let out: Vec<usize> = (0..rel.arity())
            .map(|i| op.apply(&pick.iter().map(|t| t[i]).collect::<Vec<_>>()))
            .collect();
        rel.contains(&out)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hom_search_matches_naive(g in arb_digraph(6), h in arb_digraph(5)) {
        let mut fast = HomSearch::new(&g, &h).enumerate();
        fast.sort();
        prop_assert_eq!(&fast, &naive_homs(&g, &h, None));
        prop_assert_eq!(HomSearch::new(&g, &h).count(), fast.len() as u64);
        prop_assert_eq!(HomSearch::new(&g, &h).exists(), !fast.is_empty());
    }

    #[test]
    fn closure_is_sound_consistent_and_order_free(g in arb_digraph(5), h in arb_digraph(4)) {
        let st = enforce_23_consistency(&g, &h);
        let homs = naive_homs(&g, &h, None);
        for m in &homs {
            for v in 0..g.len() {
                prop_assert!(st.contains(v, m[v]));
                for w in 0..g.len() {
                    prop_assert!(st.pair_contains(v, w, m[v], m[w]));
                }
            }
        }
        if st.is_consistent() {
            prop_assert_eq!(verify_23_consistent(&st, &g, &h), Ok(()));
        } else {
            prop_assert!(homs.is_empty());
        }
        for seed in base_seed()..base_seed() + 10 {
            prop_assert!(enforce_23_consistency_seeded(&g, &h, Some(seed)) == st);
        }
    }

    #[test]
    fn polymorphism_check_matches_nested_loops(
        op in arb_operation(),
        arity in 1usize..=3,
        mask in prop::collection::vec(any::<bool>(), 27),
    ) {
        let rel = relation(op.size(), arity, &mask);
        let tmpl = Template::new(domain(op.size()), [rel.clone()]).unwrap();
        let found = check_polymorphism(&op, &tmpl).unwrap();
        prop_assert_eq!(found.is_none(), preserves(&op, &rel));
        if let Some(v) = found {
            prop_assert!(v.inputs.iter().all(|t| rel.contains(t)));
            prop_assert!(!rel.contains(&v.output));
        }
    }

    #[test]
    fn operation_properties_match_definitions(op in arb_operation()) {
        let p = check_operation_properties(&op).unwrap();
        let n = op.size();
        let k = op.arity();
        let idem = (0..n).all(|a| op.apply(&vec![a; k]) == a);
        let args: Vec<Vec<usize>> = op.arguments().collect();
        let cyclic = args.iter().all(|x| {
            let mut y = x.clone();
            y.rotate_left(1);
            op.apply(x) == op.apply(&y)
        });
        let wnu = (0..n).all(|a| (0..n).all(|b| {
            let vals: Vec<usize> = (0..k).map(|i| {
                let mut x = vec![a; k];
                x[i] = b;
                op.apply(&x)
            }).collect();
            vals.iter().all(|&v| v == vals[0])
        }));
        let mut maltsev = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let mut x = vec![b; k];
                x[k - 1] = a;
                if op.apply(&x) != a {
                    maltsev.push((a, b));
                }
            }
        }
        prop_assert_eq!((p.idempotent, p.cyclic, p.wnu), (idem, cyclic, wnu));
        prop_assert_eq!(p.maltsev_pairs, maltsev);
    }

    #[test]
    fn solver_matches_brute_force(
        mask in prop::collection::vec(any::<bool>(), 9),
        scopes in prop::collection::vec((0usize..4, 0usize..4), 1..6),
    ) {
        let rel = relation(3, 2, &mask);
        let tmpl = Template::new(domain(3), [rel]).unwrap();
        let constraints: Vec<Constraint> = scopes
            .iter()
            .map(|&(a, b)| Constraint { relation: "R".into(), scope: vec![format!("y{a}"), format!("y{b}")] })
            .collect();
        let inst = Instance::new(constraints, []);
        let mut fast = solve_instance(&tmpl, &inst, None).unwrap();
        fast.sort();
        let mut slow = brute_force_csp(&tmpl, &inst);
        slow.sort();
        prop_assert_eq!(fast, slow);
    }
}
