//! JSON dumps of solved value tables, shared by both engines so their
//! outputs can be diffed.

use serde::Serialize;

use crate::oracle::ExhaustiveSolution;
use crate::packet_set::PacketSet;
use crate::solver::{PolicyMode, SolvedPolicy};
use crate::trace::MediaTrace;

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    /// Packet ids still pending.
    pub traffic: Vec<u32>,
    /// Delivered ids among the expired packets still referenced.
    pub dependency: Vec<u32>,
    /// One value per channel state.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlotDump {
    pub t: usize,
    pub state_values: Vec<Entry>,
    pub post_values: Vec<Entry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PacketDump {
    pub id: u32,
    pub thresholds: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolicyDump {
    pub engine: &'static str,
    pub mode: Option<PolicyMode>,
    pub alpha: f64,
    pub lambda: f64,
    pub initial_value: f64,
    pub packets: Vec<PacketDump>,
    pub slots: Vec<SlotDump>,
}

impl PolicyDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dump serializes")
    }
}

fn ids(trace: &MediaTrace, s: PacketSet) -> Vec<u32> {
    s.iter().map(|i| trace.packet(i).id).collect()
}

fn sorted(mut entries: Vec<Entry>) -> Vec<Entry> {
    entries.sort_by(|a, b| (&a.traffic, &a.dependency).cmp(&(&b.traffic, &b.dependency)));
    entries
}

pub fn dump_policy(policy: &SolvedPolicy) -> crate::Result<PolicyDump> {
    let trace = &policy.model.trace;
    let packets = policy
        .singles
        .iter()
        .map(|s| PacketDump {
            id: s.packet.id,
            thresholds: s.thresholds.clone(),
            values: s.values.clone(),
        })
        .collect();
    let mut slots = Vec::new();
    if let Some(tables) = &policy.tables {
        for t in 0..tables.pre_states.len() {
            let state_values = tables.pre_states[t]
                .iter()
                .zip(&tables.state_values[t])
                .map(|(&(b, d), v)| Entry {
                    traffic: ids(trace, b),
                    dependency: ids(trace, d),
                    values: v.clone(),
                })
                .collect();
            let post_values = tables.post_keys[t]
                .iter()
                .zip(&tables.post_values[t])
                .map(|(k, v)| Entry {
                    traffic: ids(trace, k.remaining),
                    dependency: ids(trace, k.dependency),
                    values: v.clone(),
                })
                .collect();
            slots.push(SlotDump {
                t,
                state_values: sorted(state_values),
                post_values: sorted(post_values),
            });
        }
    }
    Ok(PolicyDump {
        engine: "proposed",
        mode: Some(policy.mode),
        alpha: policy.alpha(),
        lambda: policy.lambda(),
        initial_value: policy.initial_value()?,
        packets,
        slots,
    })
}

pub fn dump_exhaustive(
    sol: &ExhaustiveSolution,
    trace: &MediaTrace,
    alpha: f64,
    lambda: f64,
) -> PolicyDump {
    let slots = (0..sol.values.len())
        .map(|t| SlotDump {
            t,
            state_values: sorted(
                sol.values[t]
                    .iter()
                    .map(|(&(b, d), v)| Entry {
                        traffic: ids(trace, b),
                        dependency: ids(trace, d),
                        values: v.clone(),
                    })
                    .collect(),
            ),
            post_values: sorted(
                sol.post_values[t]
                    .iter()
                    .map(|(k, v)| Entry {
                        traffic: ids(trace, k.remaining),
                        dependency: ids(trace, k.dependency),
                        values: v.clone(),
                    })
                    .collect(),
            ),
        })
        .collect();
    PolicyDump {
        engine: "oracle",
        mode: None,
        alpha,
        lambda,
        initial_value: sol.initial_value(),
        packets: Vec::new(),
        slots,
    }
}
