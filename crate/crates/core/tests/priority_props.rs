//! Priority relation, priority graphs and reachable traffic states.

mod common;

use std::collections::HashSet;

use common::random_instance;
use mediasched::oracle::solve_exhaustive;
use mediasched::priority::{
    build_priority_graph, reachable_states, roots, PriorityGraph, PriorityRelation,
};
use mediasched::solver::Dynamics;
use mediasched::{solve_convex, CostKind, PacketSet};

#[test]
fn relation_is_acyclic_and_puts_parents_first() {
    for seed in 0..200 {
        let inst = random_instance(seed, CostKind::Convex, 0.4);
        let rel = PriorityRelation::new(&inst.trace).unwrap();
        let n = inst.trace.len();
        for j in 0..n {
            assert!(!rel.before(j, j));
            for k in 0..n {
                assert!(
                    !(rel.before(j, k) && rel.before(k, j)),
                    "seed {seed}: {j} <-> {k}"
                );
            }
            for &c in inst.trace.children_of(j) {
                assert!(
                    rel.before(j, c),
                    "seed {seed}: parent {j} not before child {c}"
                );
            }
        }
        let g = rel.graph(PacketSet::full(n));
        for j in 0..n {
            assert!(!g.reaches(j, j), "seed {seed}: cycle through {j}");
        }
    }
}

/// Edges implied by a longer path would not survive a transitive reduction.
fn is_reduced(g: &PriorityGraph) -> bool {
    g.edges.iter().all(|&(a, b)| {
        g.reaches(a, b)
            && !g
                .nodes
                .iter()
                .any(|m| m != a && m != b && g.reaches(a, m) && g.reaches(m, b))
    })
}

#[test]
fn graphs_keep_only_reduction_edges() {
    for seed in 0..200 {
        let inst = random_instance(seed, CostKind::Convex, 0.3);
        let ids: Vec<u32> = inst.trace.packets().iter().map(|p| p.id).collect();
        let g = build_priority_graph(&ids, &inst.trace).unwrap();
        assert!(is_reduced(&g), "seed {seed}");
        let r = roots(&g);
        assert_eq!(r.is_empty(), g.is_empty());
        for k in r.iter() {
            assert!(g.nodes.iter().all(|j| !g.reaches(j, k)));
        }
    }
}

#[test]
fn unknown_ids_are_rejected() {
    let inst = random_instance(1, CostKind::Convex, 0.0);
    assert!(build_priority_graph(&[999], &inst.trace).is_err());
}

#[test]
fn tabulated_traffic_matches_root_deletion_reachability() {
    for seed in 0..100 {
        let inst = random_instance(300 + seed, CostKind::Convex, 0.0);
        let policy = solve_convex(
            &inst.trace,
            &inst.channel,
            &inst.cost,
            inst.alpha,
            inst.lambda,
            false,
        )
        .unwrap();
        let d = Dynamics::new(&inst.trace).unwrap();
        let tables = policy.tables.as_ref().unwrap();
        for (t, pre) in tables.pre_states.iter().enumerate() {
            let tabulated: HashSet<PacketSet> = pre.iter().map(|&(b, _)| b).collect();
            let expected: HashSet<PacketSet> = reachable_states(&inst.trace, t)
                .unwrap()
                .carried
                .iter()
                .map(|c| {
                    c.union(d.arrivals(t))
                        .difference(d.dead(t, PacketSet::empty()))
                })
                .collect();
            assert_eq!(tabulated, expected, "seed {seed} slot {t}");
        }
    }
}

#[test]
fn swapping_in_a_higher_priority_packet_never_hurts() {
    // among same-size independent packets, replacing k by a j that precedes
    // it cannot lower the exhaustive Q-value
    let mut swaps = 0;
    for seed in 0..60 {
        let inst = random_instance(700 + seed, CostKind::Convex, 0.0);
        let rel = PriorityRelation::new(&inst.trace).unwrap();
        let d = Dynamics::new(&inst.trace).unwrap();
        let ex = solve_exhaustive(
            &inst.trace,
            &inst.channel,
            &inst.cost,
            inst.alpha,
            inst.lambda,
        )
        .unwrap();
        let q = |a: PacketSet, t: usize, b: PacketSet, dep: PacketSet, h: usize| {
            let key = d.post_key(t, b, dep, a);
            let post = ex.post_values[t][&key][h];
            let gain: f64 = a.iter().map(|j| inst.trace.packet(j).distortion).sum();
            let bits = a.len() as f64;
            gain - inst.lambda * inst.cost.cost(bits, &inst.channel.states[h]) + post
        };
        for (t, states) in ex.values.iter().enumerate() {
            for &(b, dep) in states.keys() {
                for a in b.subsets() {
                    for k in a.iter() {
                        for j in b.difference(a).iter().filter(|&j| rel.before(j, k)) {
                            for h in 0..inst.channel.len() {
                                let swapped = a.without(k).with(j);
                                let (lhs, rhs) = (q(swapped, t, b, dep, h), q(a, t, b, dep, h));
                                assert!(lhs >= rhs - 1e-9, "seed {seed} t {t}: {lhs} < {rhs}");
                                swaps += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(swaps > 1000);
}
