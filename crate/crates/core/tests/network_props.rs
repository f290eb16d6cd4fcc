use std::collections::HashSet;

use maxband::network::{build_grid, fundamental_cycle_basis, Cycle, Direction, GridNetwork, SignalId};
use proptest::prelude::*;

/// Checks one cycle by walking it edge by edge.
fn check_cycle(net: &GridNetwork, cy: &Cycle) {
    let n = cy.nodes.len();
    assert!(n >= 4 && n == cy.edges.len());
    let distinct: HashSet<usize> = cy.nodes.iter().copied().collect();
    assert_eq!(distinct.len(), n, "walk revisits a junction");
    for k in 0..n {
        let (u, v) = (cy.nodes[k], cy.nodes[(k + 1) % n]);
        assert_eq!(net.edge_between(u, v), Some(cy.edges[k]));
    }

    // Clockwise with north up: negative signed area in (col, -row).
    let mut twice_area = 0i64;
    for k in 0..n {
        let (r0, c0) = net.coords(cy.nodes[k]);
        let (r1, c1) = net.coords(cy.nodes[(k + 1) % n]);
        twice_area += c0 as i64 * -(r1 as i64) - c1 as i64 * -(r0 as i64);
    }
    assert!(twice_area < 0, "cycle is not clockwise");

    let s = cy.segments.len();
    assert_eq!(cy.junctions.len(), s);
    let mut covered = 0;
    for k in 0..s {
        let seg = cy.segments[k];
        let enter = cy.junctions[(k + s - 1) % s];
        let leave = cy.junctions[k];
        assert_eq!(enter.to_artery, seg.artery);
        assert_eq!(leave.from_artery, seg.artery);
        let a = net.index_on(seg.artery, enter.node).expect("segment starts on its artery");
        let b = net.index_on(seg.artery, leave.node).expect("segment ends on its artery");
        assert_eq!((seg.first, seg.last), (a.min(b), a.max(b)));
        assert!(seg.first < seg.last);
        let forward = b > a;
        assert_eq!(seg.direction == Direction::Forward, forward);
        covered += seg.last - seg.first;
    }
    assert_eq!(covered, n, "segments do not cover the walk");

    for j in &cy.junctions {
        assert_ne!(j.from_artery, j.to_artery);
        let from = SignalId {
            artery: j.from_artery,
            index: j.from_signal,
        };
        let to = SignalId {
            artery: j.to_artery,
            index: j.to_signal,
        };
        assert_eq!(net.node_of(from), j.node);
        assert_eq!(net.node_of(to), j.node);
    }
}

#[test]
fn three_by_four_counts() {
    let net = build_grid(3, 4).unwrap();
    assert_eq!((net.num_nodes(), net.num_edges()), (12, 17));
}

#[test]
fn five_by_five_cycles_are_simple() {
    let net = build_grid(5, 5).unwrap();
    let basis = fundamental_cycle_basis(&net);
    assert_eq!(basis.len(), 16);
    for cy in &basis.cycles {
        check_cycle(&net, cy);
    }
}

#[test]
fn three_by_three_has_four_cycles() {
    assert_eq!(fundamental_cycle_basis(&build_grid(3, 3).unwrap()).len(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn basis_is_a_valid_cycle_basis(r in 2usize..=20, c in 2usize..=20, mask in any::<u64>()) {
        let net = build_grid(r, c).unwrap();
        prop_assert_eq!(net.num_nodes(), r * c);
        prop_assert_eq!(net.num_edges(), 2 * r * c - r - c);
        let seg_total: usize = net.arteries().iter().map(|a| a.num_segments()).sum();
        prop_assert_eq!(seg_total, net.num_edges());

        let basis = fundamental_cycle_basis(&net);
        prop_assert_eq!(basis.len(), (r - 1) * (c - 1));
        for cy in &basis.cycles {
            check_cycle(&net, cy);
        }

        // XOR of a random non-empty subset is a non-empty Eulerian edge set.
        let mut edges = vec![false; net.num_edges()];
        let mut picked = 0;
        for (k, cy) in basis.cycles.iter().enumerate() {
            if mask >> (k % 64) & 1 == 1 || k == (mask as usize) % basis.len() {
                picked += 1;
                for &e in &cy.edges {
                    edges[e] ^= true;
                }
            }
        }
        prop_assert!(picked > 0);
        let mut degree = vec![0usize; net.num_nodes()];
        for (e, on) in edges.iter().enumerate() {
            if *on {
                degree[net.edges()[e].tail] += 1;
                degree[net.edges()[e].head] += 1;
            }
        }
        prop_assert!(degree.iter().all(|d| d % 2 == 0));
        prop_assert!(edges.iter().any(|&on| on), "basis cycles are dependent");
    }
}
