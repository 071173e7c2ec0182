//! Transmission priorities between packets, priority graphs and state trees.
//!
//! Packet `j` has priority over `k` when `k` cannot be decoded without `j`,
//! or when `j` is worth at least as much, expires no later and everything
//! that depends on `k` also depends on `j`. Such a `j` should always be sent
//! before `k`, so the schedulable traffic states of a slot are exactly the
//! sets obtained by repeatedly deleting a root of the priority graph.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::packet_set::PacketSet;
use crate::trace::MediaTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Priority {
    JBeforeK,
    KBeforeJ,
    Incomparable,
}

fn dominates(
    trace: &MediaTrace,
    j: usize,
    k: usize,
    desc_j: &Descendants,
    desc_k: &Descendants,
) -> bool {
    let (pj, pk) = (trace.packet(j), trace.packet(k));
    desc_j.contains(k)
        || (pj.distortion >= pk.distortion
            && pj.deadline <= pk.deadline
            && desc_k.is_subset(desc_j))
}

/// Descendant sets for traces of any size.
struct Descendants(std::collections::BTreeSet<usize>);

impl Descendants {
    fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    fn is_subset(&self, other: &Self) -> bool {
        self.0.is_subset(&other.0)
    }
}

/// Compares two packets (by trace index).
pub fn higher_priority(j: usize, k: usize, trace: &MediaTrace) -> Priority {
    debug_assert_ne!(j, k);
    let dj = Descendants(trace.descendant_indices(j));
    let dk = Descendants(trace.descendant_indices(k));
    let jk = dominates(trace, j, k, &dj, &dk);
    let kj = dominates(trace, k, j, &dk, &dj);
    match (jk, kj) {
        (true, true) => {
            if trace.packet(j).id < trace.packet(k).id {
                Priority::JBeforeK
            } else {
                Priority::KBeforeJ
            }
        }
        (true, false) => Priority::JBeforeK,
        (false, true) => Priority::KBeforeJ,
        (false, false) => Priority::Incomparable,
    }
}

/// The pairwise priority relation of a whole trace, as bitmasks.
#[derive(Clone, Debug)]
pub struct PriorityRelation {
    /// `succ[j]` holds every `k` with `j` before `k`.
    pub succ: Vec<PacketSet>,
    /// `pred[k]` holds every `j` with `j` before `k`.
    pub pred: Vec<PacketSet>,
}

impl PriorityRelation {
    pub fn new(trace: &MediaTrace) -> Result<Self> {
        let n = trace.len();
        if n > PacketSet::MAX_PACKETS {
            return Err(Error::TooManyPackets {
                what: "priority relation",
                count: n,
                limit: PacketSet::MAX_PACKETS,
            });
        }
        let desc: Vec<Descendants> = (0..n)
            .map(|i| Descendants(trace.descendant_indices(i)))
            .collect();
        let mut succ = vec![PacketSet::empty(); n];
        let mut pred = vec![PacketSet::empty(); n];
        for j in 0..n {
            for k in j + 1..n {
                let jk = dominates(trace, j, k, &desc[j], &desc[k]);
                let kj = dominates(trace, k, j, &desc[k], &desc[j]);
                let first = match (jk, kj) {
                    (true, true) if trace.packet(j).id < trace.packet(k).id => Some((j, k)),
                    (true, true) => Some((k, j)),
                    (true, false) => Some((j, k)),
                    (false, true) => Some((k, j)),
                    (false, false) => None,
                };
                if let Some((a, b)) = first {
                    succ[a].insert(b);
                    pred[b].insert(a);
                }
            }
        }
        Ok(PriorityRelation { succ, pred })
    }

    pub fn before(&self, j: usize, k: usize) -> bool {
        self.succ[j].contains(k)
    }

    /// Members of `set` with no higher-priority packet inside `set`.
    pub fn roots_within(&self, set: PacketSet) -> PacketSet {
        set.iter()
            .filter(|&v| self.pred[v].intersection(set).is_empty())
            .collect()
    }

    pub fn graph(&self, nodes: PacketSet) -> PriorityGraph {
        PriorityGraph::from_successors(nodes, &self.succ)
    }
}

/// Transitive reduction of the priority order restricted to a node set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriorityGraph {
    pub nodes: PacketSet,
    /// Reduction edges `(j, k)`: `j` before `k` with nothing in between.
    pub edges: Vec<(usize, usize)>,
    /// `reach[j]`: nodes strictly below `j`, indexed by packet index.
    reach: Vec<PacketSet>,
}

impl PriorityGraph {
    /// Builds the graph whose order is the transitive closure of `succ`
    /// restricted to `nodes`.
    pub fn from_successors(nodes: PacketSet, succ: &[PacketSet]) -> Self {
        let mut reach = vec![PacketSet::empty(); succ.len()];
        for j in nodes.iter() {
            reach[j] = succ[j].intersection(nodes);
        }
        loop {
            let mut changed = false;
            for j in nodes.iter() {
                let mut r = reach[j];
                for k in reach[j].iter() {
                    r = r.union(reach[k]);
                }
                if r != reach[j] {
                    reach[j] = r;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut edges = Vec::new();
        for j in nodes.iter() {
            for k in reach[j].iter() {
                let via = reach[j].iter().any(|m| reach[m].contains(k));
                if !via {
                    edges.push((j, k));
                }
            }
        }
        PriorityGraph {
            nodes,
            edges,
            reach,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether there is a directed path `j ⇝ k` of length at least one.
    pub fn reaches(&self, j: usize, k: usize) -> bool {
        self.nodes.contains(j) && self.reach[j].contains(k)
    }

    /// Roots of the subgraph induced by `subset` (a subset of the nodes).
    pub fn roots_within(&self, subset: PacketSet) -> PacketSet {
        subset
            .iter()
            .filter(|&k| !subset.iter().any(|j| self.reach[j].contains(k)))
            .collect()
    }

    pub fn to_dot(&self, name: &str, trace: &MediaTrace) -> String {
        let mut out = format!("digraph {name} {{\n");
        for j in self.nodes.iter() {
            let _ = writeln!(out, "  \"{}\";", trace.packet(j).id);
        }
        for &(j, k) in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\";",
                trace.packet(j).id,
                trace.packet(k).id
            );
        }
        out.push_str("}\n");
        out
    }
}

pub fn build_priority_graph(ids: &[u32], trace: &MediaTrace) -> Result<PriorityGraph> {
    let rel = PriorityRelation::new(trace)?;
    let mut nodes = PacketSet::empty();
    for &id in ids {
        nodes.insert(trace.index_of(id)?);
    }
    Ok(rel.graph(nodes))
}

pub fn roots(pg: &PriorityGraph) -> PacketSet {
    pg.roots_within(pg.nodes)
}

/// Number of unordered node pairs joined by no directed path.
pub fn disconnection_degree(pg: &PriorityGraph) -> usize {
    let nodes: Vec<usize> = pg.nodes.iter().collect();
    let mut count = 0;
    for (a, &j) in nodes.iter().enumerate() {
        for &k in &nodes[a + 1..] {
            if !pg.reaches(j, k) && !pg.reaches(k, j) {
                count += 1;
            }
        }
    }
    count
}

/// The graphs reached from a priority graph by deleting roots one at a time,
/// each identified by its node set.
#[derive(Clone, Debug)]
pub struct StateTree {
    /// Distinct node sets in breadth-first discovery order; `nodes[0]` is
    /// the full graph.
    pub nodes: Vec<PacketSet>,
    pub edges: Vec<(usize, usize)>,
}

impl StateTree {
    pub fn distinct_nonempty(&self) -> usize {
        self.nodes.iter().filter(|s| !s.is_empty()).count()
    }

    pub fn to_dot(&self, name: &str, trace: &MediaTrace) -> String {
        let label = |s: PacketSet| {
            let ids: Vec<String> = s.iter().map(|i| trace.packet(i).id.to_string()).collect();
            format!("{{{}}}", ids.join(","))
        };
        let mut out = format!("digraph {name} {{\n");
        for (i, &s) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "  n{i} [label=\"{}\"];", label(s));
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
        out.push_str("}\n");
        out
    }
}

/// Breadth-first root deletion, skipping node sets already expanded.
pub fn build_state_tree(pg: &PriorityGraph) -> StateTree {
    let mut index: HashMap<PacketSet, usize> = HashMap::new();
    let mut nodes = vec![pg.nodes];
    let mut edges = Vec::new();
    index.insert(pg.nodes, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(at) = queue.pop_front() {
        let set = nodes[at];
        for v in pg.roots_within(set).iter() {
            let child = set.without(v);
            let idx = *index.entry(child).or_insert_with(|| {
                nodes.push(child);
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            });
            edges.push((at, idx));
        }
    }
    StateTree { nodes, edges }
}

/// Every set reachable from `set` by deleting roots under `rel`, `set`
/// itself and the empty set included.
pub fn tree_node_sets(rel: &PriorityRelation, set: PacketSet) -> Vec<PacketSet> {
    let mut seen = std::collections::HashSet::from([set]);
    let mut out = vec![set];
    let mut at = 0;
    while at < out.len() {
        let s = out[at];
        at += 1;
        for v in rel.roots_within(s).iter() {
            let child = s.without(v);
            if seen.insert(child) {
                out.push(child);
            }
        }
    }
    out
}

/// The slot-`t` view used to count reachable traffic states.
#[derive(Clone, Debug)]
pub struct ReachableStates {
    /// Packets that arrived before `t` and are still live at `t`, ordered
    /// by the priority pairs `(j, k)` with `arrival_j <= arrival_k`.
    pub graph: PriorityGraph,
    /// Distinct node sets of the graph's state tree (the leftovers from
    /// earlier slots), empty set included.
    pub carried: Vec<PacketSet>,
    /// `carried` plus the packets arriving at `t`.
    pub states: Vec<PacketSet>,
}

impl ReachableStates {
    pub fn carried_nonempty(&self) -> usize {
        self.carried.iter().filter(|s| !s.is_empty()).count()
    }
}

pub fn reachable_states(trace: &MediaTrace, t: usize) -> Result<ReachableStates> {
    let horizon = trace.horizon();
    if t > horizon {
        return Err(Error::SlotOutOfRange {
            slot: t,
            first: 0,
            last: horizon,
        });
    }
    let rel = PriorityRelation::new(trace)?;
    let graph = carried_graph(trace, &rel, t);
    let tree = build_state_tree(&graph);
    let arrivals: PacketSet = (0..trace.len())
        .filter(|&j| trace.packet(j).arrival == t)
        .collect();
    let states = tree.nodes.iter().map(|s| s.union(arrivals)).collect();
    Ok(ReachableStates {
        graph,
        carried: tree.nodes,
        states,
    })
}

/// Priority graph over `{j : arrival_j < t <= deadline_j}` keeping only the
/// pairs `(j, k)` with `arrival_j <= arrival_k`.
pub fn carried_graph(trace: &MediaTrace, rel: &PriorityRelation, t: usize) -> PriorityGraph {
    let nodes: PacketSet = (0..trace.len())
        .filter(|&j| {
            let p = trace.packet(j);
            p.arrival < t && t <= p.deadline
        })
        .collect();
    let succ: Vec<PacketSet> = (0..trace.len())
        .map(|j| {
            rel.succ[j]
                .iter()
                .filter(|&k| trace.packet(j).arrival <= trace.packet(k).arrival)
                .collect()
        })
        .collect();
    PriorityGraph::from_successors(nodes, &succ)
}
