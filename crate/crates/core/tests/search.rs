mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use gragra_core::construct::disjoint_union;
use gragra_core::graph::{EdgeId, GraphMorphism, NodeId, TypedGraph};
use gragra_core::search::{find_homomorphisms, is_isomorphic};
use proptest::prelude::*;

type Flat = (Vec<(NodeId, NodeId)>, Vec<(EdgeId, EdgeId)>);

fn flat(m: &GraphMorphism) -> Flat {
    (
        m.nodes.iter().map(|(a, b)| (*a, *b)).collect(),
        m.edges.iter().map(|(a, b)| (*a, *b)).collect(),
    )
}

/// Every total node map, extended by every compatible edge assignment.
fn brute_force(pattern: &TypedGraph, host: &TypedGraph) -> BTreeSet<Flat> {
    let pn: Vec<NodeId> = pattern.node_ids().collect();
    let hn: Vec<NodeId> = host.node_ids().collect();
    let mut out = BTreeSet::new();
    if hn.is_empty() && !pn.is_empty() {
        return out;
    }
    let total = hn.len().max(1).pow(pn.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut nodes = Vec::new();
        for p in &pn {
            nodes.push((*p, hn[c % hn.len()]));
            c /= hn.len();
        }
        let image = |p: NodeId| nodes.iter().find(|(x, _)| *x == p).unwrap().1;
        if nodes
            .iter()
            .any(|(p, h)| pattern.node(*p).unwrap().ty != host.node(*h).unwrap().ty)
        {
            continue;
        }
        let mut partial: Vec<Vec<(EdgeId, EdgeId)>> = vec![Vec::new()];
        for (pe, e) in pattern.edges() {
            let candidates: Vec<EdgeId> = host
                .edges()
                .filter(|(_, h)| {
                    h.ty == e.ty && h.source == image(e.source) && h.target == image(e.target)
                })
                .map(|(id, _)| id)
                .collect();
            partial = partial
                .into_iter()
                .flat_map(|prefix| {
                    candidates.iter().map(move |c| {
                        let mut v = prefix.clone();
                        v.push((pe, *c));
                        v
                    })
                })
                .collect();
        }
        for edges in partial {
            out.insert((nodes.clone(), edges));
        }
    }
    out
}

fn injective(f: &Flat) -> bool {
    let n: BTreeSet<_> = f.0.iter().map(|x| x.1).collect();
    let e: BTreeSet<_> = f.1.iter().map(|x| x.1).collect();
    n.len() == f.0.len() && e.len() == f.1.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn homomorphisms_agree_with_brute_force(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let types = Arc::new(common::type_graph(&mut r, 2, 3));
        let pattern = common::host_graph(&mut r, &types, 4, 4);
        let host = common::host_graph(&mut r, &types, 5, 7);
        let oracle = brute_force(&pattern, &host);
        let all: BTreeSet<Flat> = find_homomorphisms(&pattern, &host, false).unwrap().iter().map(flat).collect();
        let inj: BTreeSet<Flat> = find_homomorphisms(&pattern, &host, true).unwrap().iter().map(flat).collect();
        prop_assert_eq!(&all, &oracle);
        prop_assert!(inj.is_subset(&all));
        let oracle_inj: BTreeSet<Flat> = oracle.into_iter().filter(injective).collect();
        prop_assert_eq!(inj, oracle_inj);
    }

    #[test]
    fn disjoint_union_is_commutative_and_associative(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let types = Arc::new(common::type_graph(&mut r, 3, 3));
        let a = common::host_graph(&mut r, &types, 3, 3);
        let b = common::host_graph(&mut r, &types, 3, 3);
        let c = common::host_graph(&mut r, &types, 3, 3);
        let u = |x: &TypedGraph, y: &TypedGraph| disjoint_union(x, y).unwrap().0;
        prop_assert!(is_isomorphic(&u(&a, &b), &u(&b, &a)).is_some());
        prop_assert!(is_isomorphic(&u(&u(&a, &b), &c), &u(&a, &u(&b, &c))).is_some());
        let (ab, ia, ib) = disjoint_union(&a, &b).unwrap();
        ia.check(&a, &ab).unwrap();
        ib.check(&b, &ab).unwrap();
        prop_assert_eq!(ab.node_count(), a.node_count() + b.node_count());
        prop_assert!(ia.image().is_disjoint(&ib.image()));
    }

    #[test]
    fn isomorphism_is_invariant_under_relabeling(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let types = Arc::new(common::type_graph(&mut r, 2, 3));
        let a = common::host_graph(&mut r, &types, 5, 6);
        let empty = TypedGraph::new(types.clone());
        let (shifted, _, _) = disjoint_union(&empty, &a).unwrap();
        let (padded, _, _) = disjoint_union(&a, &empty).unwrap();
        prop_assert!(is_isomorphic(&a, &shifted).is_some());
        prop_assert!(is_isomorphic(&padded, &shifted).is_some());
    }
}

#[test]
fn empty_pattern_has_one_homomorphism() {
    let mut r = common::rng(3);
    let types = Arc::new(common::type_graph(&mut r, 2, 2));
    let host = common::host_graph(&mut r, &types, 4, 4);
    let empty = TypedGraph::new(types);
    assert_eq!(find_homomorphisms(&empty, &host, true).unwrap().len(), 1);
}
