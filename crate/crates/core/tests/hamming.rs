use proptest::prelude::*;

use robustness_envelope::hamming::{
    check_hamgraph_theorem, expand, expand_k, expand_naive, hamming_distance, harper_check,
    image_bijection, interior_k, GraphParams, HammingGraph,
};
use robustness_envelope::image_space::{level_cost, SpaceParams};

fn graph(dims: u32, q: u32) -> HammingGraph {
    HammingGraph::new(GraphParams::new(dims, q).unwrap()).unwrap()
}

/// Vertices within distance `k` of `s`, by checking every pair.
fn ball_by_pairs(g: &HammingGraph, members: &[u64], k: u32) -> Vec<u64> {
    (0..g.vertex_count())
        .filter(|&v| members.iter().any(|&u| hamming_distance(g.params(), u, v) <= k))
        .collect()
}

#[test]
fn expansion_examples() {
    let g = graph(3, 2);
    let s = g.subset([0]).unwrap();
    let e: Vec<u64> = expand(&s).members().collect();
    assert_eq!(e, vec![0b000, 0b001, 0b010, 0b100]);
    assert!(expand(&g.empty()).is_empty());
    assert!(expand(&g.full()).is_full());
    let e2 = expand_k(&s, 2);
    assert_eq!(e2.len(), 7);
    assert!(!e2.contains(0b111));
    assert_eq!(expand_k(&s, 0), s);
    assert!(expand_k(&s, 3).is_full());
}

#[test]
fn interior_examples() {
    let g = graph(3, 2);
    let s = g.subset([0b000, 0b001, 0b010, 0b100]).unwrap();
    assert_eq!(interior_k(&s, 1).members().collect::<Vec<_>>(), vec![0]);
    assert!(interior_k(&g.full(), 3).is_full());
}

#[test]
fn hamgraph_diameter_case() {
    let g = graph(4, 2);
    for mask in [1u64, 0xff, 0x0f0f, 0x8001] {
        let rec = check_hamgraph_theorem(&g.from_mask(mask), 1.5).unwrap();
        assert_eq!(rec.radius, 5);
        assert_eq!(rec.interior, 0);
        assert!(rec.holds);
    }
    assert!(check_hamgraph_theorem(&g.empty(), 1.0).is_err());
    assert!(check_hamgraph_theorem(&g.from_mask(0x1ff), 1.0).is_err());
}

#[test]
fn harper_single_vertex() {
    let g = graph(4, 2);
    let s = g.subset([5]).unwrap();
    let rec = harper_check(&s, 3, 1e-9).unwrap();
    // ball of radius 3 in H(4,2): 1 + 4 + 6 + 4
    assert!((rec.lhs - 15.0 / 16.0).abs() < 1e-15);
    assert!(rec.holds);
}

#[test]
fn bijection_preserves_distance() {
    for space in [SpaceParams::new(2, 1, 1).unwrap(), SpaceParams::new(1, 2, 2).unwrap()] {
        let bij = image_bijection(space);
        let count = bij.graph().vertex_count().unwrap();
        assert_eq!(count, 16);
        for u in 0..count {
            for v in 0..count {
                let (a, b) = (bij.image_of_vertex(u), bij.image_of_vertex(v));
                assert_eq!(level_cost(a.levels(), b.levels(), 0), hamming_distance(bij.graph(), u, v) as u128);
            }
        }
    }
}

#[test]
fn multi_word_graph_matches_pairs() {
    let g = graph(7, 2);
    let members = [0, 17, 100, 127];
    let s = g.subset(members).unwrap();
    for k in 0..4 {
        assert_eq!(expand_k(&s, k).members().collect::<Vec<_>>(), ball_by_pairs(&g, &members, k));
    }
}

fn small_graph() -> impl Strategy<Value = (u32, u32)> {
    prop_oneof![Just((4, 2)), Just((3, 3)), Just((2, 4)), Just((2, 3))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn expansion_laws((dims, q) in small_graph(), a in any::<u64>(), b in any::<u64>(), k in 0u32..4) {
        let g = graph(dims, q);
        let full = (1u64 << g.vertex_count()) - 1;
        let s = g.from_mask(a & full);
        let t = g.from_mask((a | b) & full);
        prop_assert!(expand(&s).is_subset_of(&expand(&t)));
        prop_assert!(s.is_subset_of(&expand(&s)));
        prop_assert!(interior_k(&s, k).is_subset_of(&s));
        prop_assert_eq!(expand(&s), expand_naive(&s));
        let members: Vec<u64> = s.members().collect();
        prop_assert_eq!(expand_k(&s, k).members().collect::<Vec<_>>(), ball_by_pairs(&g, &members, k));
        prop_assert_eq!(interior_k(&s, k), expand_k(&s.complement(), k).complement());
        for j in 0..3 {
            prop_assert_eq!(expand_k(&s, k + j), expand_k(&expand_k(&s, k), j));
        }
    }
}
