//! Brute-force reference solvers.
//!
//! [`solve_exhaustive`] runs the joint dynamic program over every traffic
//! and dependency state, maximizing over every decodable transmit subset.
//! [`enumerate_single_schedules`] searches the full channel-history tree of
//! a single packet. Both are slow on purpose and exist to check the fast
//! solvers.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelModel, CostModel};
use crate::error::{Error, Result};
use crate::packet_set::PacketSet;
use crate::single::check_alpha_lambda;
use crate::solver::state::{Dynamics, PostKey};
use crate::trace::{MediaTrace, Packet};

pub const MAX_EXHAUSTIVE_PACKETS: usize = 14;
pub const MAX_SCHEDULE_HORIZON: usize = 12;

type StateKey = (PacketSet, PacketSet);

#[derive(Clone, Debug)]
pub struct ExhaustiveSolution {
    /// `values[t][(traffic, dependency)][h]`.
    pub values: Vec<HashMap<StateKey, Vec<f64>>>,
    /// Maximizing transmit set, same keys.
    pub best_actions: Vec<HashMap<StateKey, Vec<PacketSet>>>,
    /// Post-decision values `post_values[t][key][h]` that were needed.
    pub post_values: Vec<HashMap<PostKey, Vec<f64>>>,
    /// States (times channel states) per slot.
    pub slot_states: Vec<u64>,
    /// Action evaluations per slot.
    pub slot_comparisons: Vec<u64>,
    pub state_count: u64,
    pub comparison_count: u64,
    initial: StateKey,
    initial_law: Vec<f64>,
}

impl ExhaustiveSolution {
    pub fn value(
        &self,
        t: usize,
        traffic: PacketSet,
        dependency: PacketSet,
        h: usize,
    ) -> Option<f64> {
        Some(self.values.get(t)?.get(&(traffic, dependency))?[h])
    }

    pub fn best_action(
        &self,
        t: usize,
        traffic: PacketSet,
        dependency: PacketSet,
        h: usize,
    ) -> Option<PacketSet> {
        Some(self.best_actions.get(t)?.get(&(traffic, dependency))?[h])
    }

    /// Expected value from slot 0 under the channel's initial law.
    pub fn initial_value(&self) -> f64 {
        let v = &self.values[0][&self.initial];
        v.iter().zip(&self.initial_law).map(|(a, w)| a * w).sum()
    }
}

pub fn solve_exhaustive(
    trace: &MediaTrace,
    channel: &ChannelModel,
    cost: &CostModel,
    alpha: f64,
    lambda: f64,
) -> Result<ExhaustiveSolution> {
    check_alpha_lambda(alpha, lambda)?;
    if trace.len() > MAX_EXHAUSTIVE_PACKETS {
        return Err(Error::TooManyPackets {
            what: "exhaustive solver",
            count: trace.len(),
            limit: MAX_EXHAUSTIVE_PACKETS,
        });
    }
    let dynamics = Dynamics::new(trace)?;
    let horizon = dynamics.horizon;
    let n_h = channel.len();
    let reward = |set: PacketSet, h: usize| -> f64 {
        let q: f64 = set.iter().map(|j| trace.packet(j).distortion).sum();
        let bits: f64 = set.iter().map(|j| trace.packet(j).size_bits).sum();
        q - lambda * cost.cost(bits, &channel.states[h])
    };

    let mut values: Vec<HashMap<StateKey, Vec<f64>>> = vec![HashMap::new(); horizon + 1];
    let mut best_actions: Vec<HashMap<StateKey, Vec<PacketSet>>> =
        vec![HashMap::new(); horizon + 1];
    let mut post_values: Vec<HashMap<PostKey, Vec<f64>>> = vec![HashMap::new(); horizon + 1];
    let mut slot_states = vec![0u64; horizon + 1];
    let mut slot_comparisons = vec![0u64; horizon + 1];

    for t in (0..=horizon).rev() {
        let states: Vec<StateKey> = dynamics
            .referenced(t)
            .subsets()
            .flat_map(|d| {
                let alive = dynamics.live(t).difference(dynamics.dead(t, d));
                alive.subsets().map(move |b| (b, d))
            })
            .collect();

        // Every post key any action can produce, valued against slot t + 1.
        let mut keys: Vec<PostKey> = states
            .iter()
            .flat_map(|&(b, d)| {
                let dynamics = &dynamics;
                b.subsets()
                    .filter(move |&a| dynamics.is_legal(b, a))
                    .map(move |a| dynamics.post_key(t, b, d, a))
            })
            .collect();
        keys.sort();
        keys.dedup();
        let next = if t < horizon {
            Some(&values[t + 1])
        } else {
            None
        };
        let post: HashMap<PostKey, Vec<f64>> = keys
            .into_iter()
            .map(|key| {
                let v = match next {
                    None => vec![0.0; n_h],
                    Some(next) => {
                        let pre = dynamics.pre_state(t + 1, key);
                        channel
                            .expect_next(&next[&pre])
                            .into_iter()
                            .map(|v| alpha * v)
                            .collect()
                    }
                };
                (key, v)
            })
            .collect();

        let solved: Vec<(StateKey, Vec<f64>, Vec<PacketSet>, u64)> = states
            .par_iter()
            .map(|&(b, d)| {
                let mut best = vec![f64::NEG_INFINITY; n_h];
                let mut arg = vec![PacketSet::empty(); n_h];
                let mut evaluated = 0u64;
                for a in b.subsets() {
                    if !dynamics.is_legal(b, a) {
                        continue;
                    }
                    let cont = &post[&dynamics.post_key(t, b, d, a)];
                    for h in 0..n_h {
                        evaluated += 1;
                        let v = reward(a, h) + cont[h];
                        if v > best[h] {
                            best[h] = v;
                            arg[h] = a;
                        }
                    }
                }
                ((b, d), best, arg, evaluated)
            })
            .collect();
        slot_states[t] = (states.len() * n_h) as u64;
        for (key, v, a, n) in solved {
            slot_comparisons[t] += n;
            values[t].insert(key, v);
            best_actions[t].insert(key, a);
        }
        post_values[t] = post;
    }

    Ok(ExhaustiveSolution {
        values,
        best_actions,
        post_values,
        state_count: slot_states.iter().sum(),
        comparison_count: slot_comparisons.iter().sum(),
        slot_states,
        slot_comparisons,
        initial: dynamics.initial(),
        initial_law: channel.initial.clone(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SingleSchedule {
    /// Best expected discounted net utility from slot 0.
    pub value: f64,
    /// Best value from slot 0 given the initial channel state.
    pub value_from: Vec<f64>,
    /// Whether the best rule transmits at slot 0 in each initial state.
    pub transmit_first: Vec<bool>,
}

/// Best rule that sends `packet` at most once, found by recursing over every
/// channel history.
pub fn enumerate_single_schedules(
    packet: &Packet,
    channel: &ChannelModel,
    cost: &CostModel,
    alpha: f64,
    lambda: f64,
) -> Result<SingleSchedule> {
    check_alpha_lambda(alpha, lambda)?;
    if packet.deadline > MAX_SCHEDULE_HORIZON {
        return Err(Error::InvalidParameter {
            name: "deadline",
            value: packet.deadline.to_string(),
            reason: "history enumeration is limited to a horizon of 12 slots",
        });
    }
    let net =
        |h: usize| packet.distortion - lambda * cost.cost(packet.size_bits, &channel.states[h]);

    // Value of the best continuation after `history` (last entry = current
    // channel state), with the packet still unsent.
    fn best(
        history: &mut Vec<usize>,
        packet: &Packet,
        channel: &ChannelModel,
        alpha: f64,
        net: &dyn Fn(usize) -> f64,
    ) -> (f64, bool) {
        let t = history.len() - 1;
        let h = *history.last().unwrap();
        let mut wait = 0.0;
        if t < packet.deadline {
            for (next, &p) in channel.transition[h].iter().enumerate() {
                if p > 0.0 {
                    history.push(next);
                    wait += p * best(history, packet, channel, alpha, net).0;
                    history.pop();
                }
            }
            wait *= alpha;
        }
        if t >= packet.arrival && net(h) > wait {
            (net(h), true)
        } else {
            (wait, false)
        }
    }

    let mut value_from = Vec::with_capacity(channel.len());
    let mut transmit_first = Vec::with_capacity(channel.len());
    for h in 0..channel.len() {
        let (v, tx) = best(&mut vec![h], packet, channel, alpha, &net);
        value_from.push(v);
        transmit_first.push(tx);
    }
    let value = value_from
        .iter()
        .zip(&channel.initial)
        .map(|(v, w)| v * w)
        .sum();
    Ok(SingleSchedule {
        value,
        value_from,
        transmit_first,
    })
}
