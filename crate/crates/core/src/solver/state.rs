//! Joint scheduling state and its transition law.
//!
//! The pre-decision state at slot `t` is `(traffic, dependency, channel)`:
//! `traffic` holds the live packets that are still untransmitted and can
//! still be decoded; `dependency` holds the delivered members of the
//! expired packets that some packet with a deadline at or after `t` directly
//! depends on. A packet whose ancestor expired undelivered is dead: it never
//! re-enters the traffic state.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::packet_set::PacketSet;
use crate::trace::MediaTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct JointState {
    pub t: usize,
    pub traffic: PacketSet,
    pub dependency: PacketSet,
    pub channel: usize,
}

/// What is left after a slot's transmissions and expiries, before the next
/// slot's arrivals. Newly dead packets are already pruned from `remaining`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PostKey {
    pub remaining: PacketSet,
    pub dependency: PacketSet,
}

/// Per-slot bookkeeping derived from a trace.
#[derive(Clone, Debug)]
pub struct Dynamics {
    pub horizon: usize,
    topo: Vec<usize>,
    parents: Vec<PacketSet>,
    arrivals: Vec<PacketSet>,
    live: Vec<PacketSet>,
    expiring: Vec<PacketSet>,
    referenced: Vec<PacketSet>,
}

impl Dynamics {
    pub fn new(trace: &MediaTrace) -> Result<Self> {
        let n = trace.len();
        if n > PacketSet::MAX_PACKETS {
            return Err(Error::TooManyPackets {
                what: "scheduler state",
                count: n,
                limit: PacketSet::MAX_PACKETS,
            });
        }
        let horizon = trace.horizon();
        let parents: Vec<PacketSet> = (0..n)
            .map(|i| trace.parents_of(i).iter().copied().collect())
            .collect();
        let mut topo = Vec::with_capacity(n);
        let mut placed = PacketSet::empty();
        while topo.len() < n {
            let before = topo.len();
            for i in 0..n {
                if !placed.contains(i) && parents[i].is_subset(placed) {
                    topo.push(i);
                    placed.insert(i);
                }
            }
            if topo.len() == before {
                return Err(Error::InvalidTrace(vec!["acyclicity violated".into()]));
            }
        }
        let slot_set = |f: &dyn Fn(usize, usize) -> bool| -> Vec<PacketSet> {
            (0..=horizon)
                .map(|t| (0..n).filter(|&j| f(t, j)).collect())
                .collect()
        };
        let p = |j: usize| trace.packet(j);
        let arrivals = slot_set(&|t, j| p(j).arrival == t);
        let live = slot_set(&|t, j| p(j).arrival <= t && t <= p(j).deadline);
        let expiring = slot_set(&|t, j| p(j).deadline == t);
        let referenced = slot_set(&|t, k| {
            p(k).deadline < t && trace.children_of(k).iter().any(|&c| p(c).deadline >= t)
        });
        Ok(Dynamics {
            horizon,
            topo,
            parents,
            arrivals,
            live,
            expiring,
            referenced,
        })
    }

    pub fn arrivals(&self, t: usize) -> PacketSet {
        self.arrivals[t]
    }

    pub fn live(&self, t: usize) -> PacketSet {
        self.live[t]
    }

    pub fn expiring(&self, t: usize) -> PacketSet {
        self.expiring[t]
    }

    /// Expired packets still referenced at `t` (the dependency index set).
    pub fn referenced(&self, t: usize) -> PacketSet {
        self.referenced[t]
    }

    pub fn parents(&self, j: usize) -> PacketSet {
        self.parents[j]
    }

    /// Packets in topological order of the dependency DAG.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Live packets at `t` that can no longer be decoded, given which
    /// referenced expired packets were delivered.
    pub fn dead(&self, t: usize, dependency: PacketSet) -> PacketSet {
        let live = self.live[t];
        let mut dead = PacketSet::empty();
        for &j in &self.topo {
            if !live.contains(j) {
                continue;
            }
            let failed = self.parents[j].iter().any(|p| {
                if live.contains(p) {
                    dead.contains(p)
                } else {
                    !dependency.contains(p)
                }
            });
            if failed {
                dead.insert(j);
            }
        }
        dead
    }

    pub fn initial(&self) -> (PacketSet, PacketSet) {
        (self.arrivals[0], PacketSet::empty())
    }

    /// Whether every parent of a sent packet is either sent alongside it or
    /// already delivered.
    pub fn is_legal(&self, traffic: PacketSet, action: PacketSet) -> bool {
        action.is_subset(traffic)
            && action.iter().all(|a| {
                self.parents[a]
                    .intersection(traffic.difference(action))
                    .is_empty()
            })
    }

    /// State after delivering `delivered` at slot `t`, before arrivals.
    pub fn post_key(
        &self,
        t: usize,
        traffic: PacketSet,
        dependency: PacketSet,
        delivered: PacketSet,
    ) -> PostKey {
        let rest = traffic.difference(delivered);
        if t >= self.horizon {
            return PostKey {
                remaining: PacketSet::empty(),
                dependency: PacketSet::empty(),
            };
        }
        let alive_now = self.live[t].difference(self.dead(t, dependency));
        let next_ref = self.referenced[t + 1];
        let mut next_dep = PacketSet::empty();
        for k in next_ref.iter() {
            let ok = if self.expiring[t].contains(k) {
                alive_now.contains(k) && !rest.contains(k)
            } else {
                dependency.contains(k)
            };
            if ok {
                next_dep.insert(k);
            }
        }
        let carried = rest.difference(self.expiring[t]);
        let remaining = carried.difference(self.dead(t + 1, next_dep));
        PostKey {
            remaining,
            dependency: next_dep,
        }
    }

    /// Pre-decision traffic and dependency at `t` for a post key from `t - 1`.
    pub fn pre_state(&self, t: usize, key: PostKey) -> (PacketSet, PacketSet) {
        let pending = key.remaining.union(self.arrivals[t]);
        let traffic = pending.difference(self.dead(t, key.dependency));
        (traffic, key.dependency)
    }

    /// Applies a (loss-free) transmission and the next channel state.
    pub fn advance_state(
        &self,
        state: &JointState,
        delivered: PacketSet,
        next_channel: usize,
    ) -> Result<JointState> {
        if !self.is_legal(state.traffic, delivered) {
            return Err(Error::IllegalAction {
                slot: state.t,
                reason: format!(
                    "{:?} is not a decodable subset of traffic {:?}",
                    delivered, state.traffic
                ),
            });
        }
        if state.t >= self.horizon {
            return Err(Error::SlotOutOfRange {
                slot: state.t + 1,
                first: 0,
                last: self.horizon,
            });
        }
        let key = self.post_key(state.t, state.traffic, state.dependency, delivered);
        let (traffic, dependency) = self.pre_state(state.t + 1, key);
        Ok(JointState {
            t: state.t + 1,
            traffic,
            dependency,
            channel: next_channel,
        })
    }
}
