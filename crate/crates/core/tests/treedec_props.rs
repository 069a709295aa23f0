mod common;

use common::*;
use ghdm::construction::{build, delta_boundary, ConstructionParams};
use ghdm::treedec::{
    build_flat_indexed, build_recursive, induced_separation, trap, validate, TrapOutcome, TreeDecomposition,
};
use ghdm::{Graph, Verdict, VertexSet};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (u32, u32, u32)> {
    (1u32..=2, 1u32..=2, 2u32..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn decompositions_validate(p in params()) {
        let g = build(ConstructionParams::new(p.0, p.1, p.2).unwrap()).unwrap();
        let (flat, index) = build_flat_indexed(&g);
        for td in [&flat, &build_recursive(&g)] {
            prop_assert_eq!(validate(&g.graph, td).unwrap().verdict, Verdict::Pass);
            prop_assert_eq!(td_oracle(&g.graph, td), Ok(()));
        }
        for (&(level, pos), &node) in &index.tree_nodes {
            if level == 0 {
                continue;
            }
            let parent = index.tree_nodes[&(level - 1, pos.div_ceil(2))];
            let (s, t) = delta_boundary(&g, level, pos).unwrap();
            let mut expected = s.union(&t);
            expected.insert(g.root);
            expected.insert(g.tree_nodes[&(level, pos)]);
            let adhesion = flat.adhesion(parent, node);
            prop_assert!(adhesion.len() <= 2 * p.2 as usize + 2);
            prop_assert_eq!(adhesion, expected);
        }
    }

    #[test]
    fn induced_separations_meet_in_the_adhesion(p in params()) {
        let g = build(ConstructionParams::new(p.0, p.1, p.2).unwrap()).unwrap();
        let td = build_recursive(&g);
        for (x, y) in td.tree.edges() {
            let sep = induced_separation(&g.graph, &td, (x, y)).unwrap();
            prop_assert!(sep.is_valid_in(&g.graph));
            prop_assert_eq!(sep.side_a.intersection(&sep.side_b), td.adhesion(x, y));
        }
    }

    #[test]
    fn trap_outcomes_hold_and_ignore_edge_order(
        p in params(),
        bits in proptest::collection::vec(any::<bool>(), 8..40),
        slack in 0usize..3,
    ) {
        let g = build(ConstructionParams::new(p.0, p.1, p.2).unwrap()).unwrap();
        let td = build_recursive(&g);
        let w: VertexSet = g.graph.vertices().filter(|&v| bits[v % bits.len()] && v % 3 == 0).collect();
        prop_assume!(w.len() >= 2);
        let t = w.len() / 2 + 1 + slack.min(w.len() - w.len() / 2 - 1);
        let outcome = trap(&td, &w, t, None).unwrap();
        let mut edges: Vec<_> = td.tree.edges().collect();
        edges.reverse();
        let reordered = TreeDecomposition {
            tree: Graph::from_edges(td.tree.vertex_count(), edges).unwrap(),
            bags: td.bags.clone(),
        };
        prop_assert_eq!(&trap(&reordered, &w, t, None).unwrap(), &outcome);
        match outcome {
            TrapOutcome::Sink { node, in_bag, .. } => {
                prop_assert_eq!(in_bag, td.bags[node].intersection(&w).len());
                for (a, b) in td.tree.edges() {
                    let (sa, sb) = side_counts_oracle(&td, &w, (a, b));
                    prop_assert!((sa >= t) != (sb >= t));
                }
                let deg = td.tree.degree(node);
                prop_assert!(in_bag + deg * (w.len() - t) >= w.len());
            }
            TrapOutcome::BalancedEdge { edge, sides, .. } => {
                prop_assert_eq!(side_counts_oracle(&td, &w, edge), sides);
                prop_assert!(sides.0 > w.len() - t && sides.1 > w.len() - t);
            }
        }
    }
}
