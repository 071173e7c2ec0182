//! Media packets, their attributes and the dependency DAG.
//!
//! A [`MediaTrace`] is an ordered list of packets. Each packet carries a size,
//! a distortion impact (the utility gained when it is decoded in time), an
//! arrival slot, a deadline slot and the ids of the packets it directly
//! depends on. Algorithms address packets by their position in the trace
//! (the *index*); the `id` field is only used at the I/O boundary.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Packet {
    pub id: u32,
    pub size_bits: f64,
    pub distortion: f64,
    pub arrival: usize,
    pub deadline: usize,
    #[serde(default)]
    pub parents: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFile {
    packets: Vec<Packet>,
}

/// An immutable collection of packets plus the derived dependency structure.
#[derive(Clone, Debug)]
pub struct MediaTrace {
    packets: Vec<Packet>,
    index: HashMap<u32, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl MediaTrace {
    /// Builds a trace and rejects it unless [`validate_trace`] finds nothing.
    pub fn new(packets: Vec<Packet>) -> Result<Self> {
        let trace = Self::from_packets_unchecked(packets);
        let violations = validate_trace(&trace);
        if violations.is_empty() {
            Ok(trace)
        } else {
            Err(Error::InvalidTrace(violations))
        }
    }

    /// Builds a trace without validation. Unknown parent ids are dropped from
    /// the derived adjacency but remain visible to [`validate_trace`].
    pub fn from_packets_unchecked(packets: Vec<Packet>) -> Self {
        let mut index = HashMap::with_capacity(packets.len());
        for (i, p) in packets.iter().enumerate() {
            index.entry(p.id).or_insert(i);
        }
        let mut parents = vec![Vec::new(); packets.len()];
        let mut children = vec![Vec::new(); packets.len()];
        for (i, p) in packets.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for pid in &p.parents {
                if let Some(&k) = index.get(pid) {
                    if seen.insert(k) {
                        parents[i].push(k);
                        children[k].push(i);
                    }
                }
            }
        }
        MediaTrace {
            packets,
            index,
            parents,
            children,
        }
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn packet(&self, index: usize) -> &Packet {
        &self.packets[index]
    }

    pub fn index_of(&self, id: u32) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownPacket(id))
    }

    /// Largest deadline, 0 for an empty trace.
    pub fn horizon(&self) -> usize {
        self.packets.iter().map(|p| p.deadline).max().unwrap_or(0)
    }

    /// Direct parents (by index).
    pub fn parents_of(&self, index: usize) -> &[usize] {
        &self.parents[index]
    }

    /// Direct children (by index).
    pub fn children_of(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn has_dependencies(&self) -> bool {
        self.edge_count() > 0
    }

    /// Indices of every packet whose decoding needs `index`, excluding itself.
    pub fn descendant_indices(&self, index: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut queue: VecDeque<usize> = self.children[index].iter().copied().collect();
        while let Some(c) = queue.pop_front() {
            if out.insert(c) {
                queue.extend(self.children[c].iter().copied());
            }
        }
        out.remove(&index);
        out
    }

    /// Whether every packet has the same size (within 1e-12 relative).
    pub fn uniform_size(&self) -> Option<f64> {
        let first = self.packets.first()?.size_bits;
        self.packets
            .iter()
            .all(|p| (p.size_bits - first).abs() <= 1e-12 * first.abs().max(1.0))
            .then_some(first)
    }

    pub fn to_json(&self) -> String {
        let file = TraceFile {
            packets: self.packets.clone(),
        };
        serde_json::to_string_pretty(&file).expect("trace serializes")
    }
}

/// Parses a trace document and validates it.
pub fn load_trace<R: Read>(source: R) -> Result<MediaTrace> {
    let file: TraceFile = serde_json::from_reader(source)?;
    MediaTrace::new(file.packets)
}

/// Every broken invariant, each naming the packet ids involved.
pub fn validate_trace(trace: &MediaTrace) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for (i, p) in trace.packets.iter().enumerate() {
        if let Some(first) = seen.insert(p.id, i) {
            out.push(format!(
                "packet id {} is duplicated (positions {} and {})",
                p.id, first, i
            ));
        }
    }
    for p in &trace.packets {
        if !(p.size_bits.is_finite() && p.size_bits > 0.0) {
            out.push(format!(
                "packet {}: size_bits > 0 violated ({})",
                p.id, p.size_bits
            ));
        }
        if !(p.distortion.is_finite() && p.distortion >= 0.0) {
            out.push(format!(
                "packet {}: distortion >= 0 violated ({})",
                p.id, p.distortion
            ));
        }
        if p.arrival >= p.deadline {
            out.push(format!(
                "packet {}: arrival < deadline violated (arrival {}, deadline {})",
                p.id, p.arrival, p.deadline
            ));
        }
        for &pid in &p.parents {
            if pid == p.id {
                out.push(format!(
                    "packet {}: depends on itself (acyclicity violated)",
                    p.id
                ));
                continue;
            }
            let Some(&k) = trace.index.get(&pid) else {
                out.push(format!("packet {}: parent {} does not exist", p.id, pid));
                continue;
            };
            let parent = &trace.packets[k];
            if parent.arrival > p.arrival {
                out.push(format!(
                    "packet {} depends on {}: arrival ordering violated (parent arrives at {}, child at {})",
                    p.id, pid, parent.arrival, p.arrival
                ));
            }
            if parent.deadline > p.deadline {
                out.push(format!(
                    "packet {} depends on {}: deadline ordering violated (parent deadline {}, child deadline {})",
                    p.id, pid, parent.deadline, p.deadline
                ));
            }
        }
    }
    // Kahn's algorithm; whatever is left over sits on or behind a cycle.
    let n = trace.len();
    let mut indegree: Vec<usize> = (0..n).map(|i| trace.parents[i].len()).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut done = 0;
    while let Some(i) = queue.pop_front() {
        done += 1;
        for &c in &trace.children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if done < n {
        let stuck: Vec<u32> = (0..n)
            .filter(|&i| indegree[i] > 0)
            .map(|i| trace.packets[i].id)
            .collect();
        out.push(format!(
            "dependency cycle (acyclicity violated) among packets {stuck:?}"
        ));
    }
    out
}

/// [`validate_trace`] plus the common-size requirement of the tree solver.
pub fn validate_trace_for_tree_solver(trace: &MediaTrace) -> Vec<String> {
    let mut out = validate_trace(trace);
    if let Some(first) = trace.packets.first() {
        for p in &trace.packets {
            if (p.size_bits - first.size_bits).abs() > 1e-12 * first.size_bits.abs().max(1.0) {
                out.push(format!(
                    "packet {}: size {} differs from packet {} size {} (tree solver needs uniform sizes)",
                    p.id, p.size_bits, first.id, first.size_bits
                ));
            }
        }
    }
    out
}

/// Ids of every packet whose decodability requires packet `id`.
pub fn descendants(trace: &MediaTrace, id: u32) -> Result<BTreeSet<u32>> {
    let index = trace.index_of(id)?;
    Ok(trace
        .descendant_indices(index)
        .into_iter()
        .map(|i| trace.packets[i].id)
        .collect())
}

/// Synthetic GOP-structured traffic.
///
/// GOP `g` occupies slots `[g*F*S, (g+1)*F*S)` where `F` is `frames_per_gop`
/// and `S` is `slots_per_frame`. All of its frames arrive at the GOP start,
/// share the GOP end as deadline and form a chain (frame `f` depends on frame
/// `f-1`). Distortion impacts follow `distortion_profile` with a seeded ±20%
/// jitter. Packets have unit size.
pub fn synth_trace(
    n_gops: usize,
    frames_per_gop: usize,
    slots_per_frame: usize,
    distortion_profile: &[f64],
    seed: u64,
) -> Result<MediaTrace> {
    for (name, v) in [
        ("n_gops", n_gops),
        ("frames_per_gop", frames_per_gop),
        ("slots_per_frame", slots_per_frame),
    ] {
        if v == 0 {
            return Err(Error::InvalidParameter {
                name,
                value: v.to_string(),
                reason: "must be at least 1",
            });
        }
    }
    if distortion_profile.len() != frames_per_gop {
        return Err(Error::InvalidParameter {
            name: "distortion_profile",
            value: format!("{} entries", distortion_profile.len()),
            reason: "length must equal frames_per_gop",
        });
    }
    if distortion_profile
        .iter()
        .any(|&q| !(q.is_finite() && q > 0.0))
    {
        return Err(Error::InvalidParameter {
            name: "distortion_profile",
            value: format!("{distortion_profile:?}"),
            reason: "entries must be positive",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gop_len = frames_per_gop * slots_per_frame;
    let mut packets = Vec::with_capacity(n_gops * frames_per_gop);
    for g in 0..n_gops {
        for (f, &q) in distortion_profile.iter().enumerate() {
            let id = (g * frames_per_gop + f) as u32;
            let jitter: f64 = rng.gen_range(0.8..1.2);
            packets.push(Packet {
                id,
                size_bits: 1.0,
                distortion: q * jitter,
                arrival: g * gop_len,
                deadline: (g + 1) * gop_len,
                parents: if f == 0 { vec![] } else { vec![id - 1] },
            });
        }
    }
    MediaTrace::new(packets)
}
