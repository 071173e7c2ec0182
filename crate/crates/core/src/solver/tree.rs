//! The travelling-state-tree solver for convex (or dependency-coupled)
//! transmission costs.
//!
//! Within a slot, packets are sent in priority order: the candidate set is
//! always a priority-graph root, and the greedy stops at the first
//! non-positive marginal utility. Only the traffic states that such root
//! deletions can produce are ever tabulated.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::channel::{cost_linear, ChannelModel, CostKind, CostModel};
use crate::error::{Error, Result};
use crate::packet_set::PacketSet;
use crate::priority::{carried_graph, disconnection_degree, tree_node_sets, PriorityRelation};
use crate::single::check_alpha_lambda;
use crate::solver::complexity::{ComplexityReport, SlotComplexity};
use crate::solver::state::{Dynamics, PostKey};
use crate::trace::MediaTrace;

/// Everything a solve needs, shared by the solver and the policies it
/// produces.
#[derive(Clone, Debug)]
pub struct Model {
    pub trace: MediaTrace,
    pub channel: ChannelModel,
    pub cost: CostModel,
    pub alpha: f64,
    pub lambda: f64,
    pub dynamics: Dynamics,
    pub relation: PriorityRelation,
    unit_bits: f64,
}

impl Model {
    pub fn new(
        trace: &MediaTrace,
        channel: &ChannelModel,
        cost: &CostModel,
        alpha: f64,
        lambda: f64,
    ) -> Result<Self> {
        check_alpha_lambda(alpha, lambda)?;
        let unit_bits = match cost.kind {
            CostKind::Linear => trace.uniform_size().unwrap_or(0.0),
            CostKind::Convex => uniform_size(trace)?,
        };
        Ok(Model {
            trace: trace.clone(),
            channel: channel.clone(),
            cost: *cost,
            alpha,
            lambda,
            dynamics: Dynamics::new(trace)?,
            relation: PriorityRelation::new(trace)?,
            unit_bits,
        })
    }

    pub fn horizon(&self) -> usize {
        self.dynamics.horizon
    }

    /// Cost increment of sending packet `j` as the `k`-th packet this slot.
    fn marginal_cost(&self, k: usize, j: usize, h: usize) -> f64 {
        let state = &self.channel.states[h];
        match self.cost.kind {
            CostKind::Linear => cost_linear(self.trace.packet(j).size_bits, state),
            CostKind::Convex => self.cost.marginal(k, self.unit_bits, state),
        }
    }

    /// Net immediate reward of sending `set` in channel state `h`.
    pub fn reward(&self, set: PacketSet, h: usize) -> f64 {
        let q: f64 = set.iter().map(|j| self.trace.packet(j).distortion).sum();
        let bits: f64 = set.iter().map(|j| self.trace.packet(j).size_bits).sum();
        q - self.lambda * self.cost.cost(bits, &self.channel.states[h])
    }

    /// Root-by-root greedy over the priority graph of `traffic`.
    ///
    /// `post` returns the post-decision value at slot `t` and channel `h`
    /// for a given key.
    pub fn greedy(
        &self,
        t: usize,
        traffic: PacketSet,
        dependency: PacketSet,
        h: usize,
        post: &mut dyn FnMut(PostKey) -> Result<f64>,
    ) -> Result<GreedyOutcome> {
        let dynamics = &self.dynamics;
        let key = |sent: PacketSet| dynamics.post_key(t, traffic, dependency, sent);
        let mut sent = PacketSet::empty();
        let mut order = Vec::new();
        let mut marginals = Vec::new();
        let mut comparisons = 0;
        let start = post(key(sent))?;
        let mut current = start;
        loop {
            let left = traffic.difference(sent);
            let mut roots: Vec<usize> = self.relation.roots_within(left).iter().collect();
            if roots.is_empty() {
                break;
            }
            roots.sort_by_key(|&j| self.trace.packet(j).id);
            let k = order.len() + 1;
            let mut best: Option<(usize, f64, f64)> = None;
            for j in roots {
                comparisons += 1;
                let after = post(key(sent.with(j)))?;
                let delta = self.trace.packet(j).distortion
                    - self.lambda * self.marginal_cost(k, j, h)
                    + after
                    - current;
                if best.is_none_or(|(_, d, _)| delta > d) {
                    best = Some((j, delta, after));
                }
            }
            let (j, delta, after) = best.expect("at least one root");
            if delta > 0.0 {
                sent.insert(j);
                order.push(j);
                marginals.push(delta);
                current = after;
            } else {
                break;
            }
        }
        let value = self.reward(sent, h) + current;
        Ok(GreedyOutcome {
            sent: order,
            marginals,
            start_post_value: start,
            end_post_value: current,
            value,
            comparisons,
        })
    }
}

/// The common packet size. The priority order compares packets by distortion
/// alone, which is only sound when every packet costs the same to send.
pub(crate) fn uniform_size(trace: &MediaTrace) -> Result<f64> {
    if trace.is_empty() {
        return Ok(1.0);
    }
    trace.uniform_size().ok_or_else(|| {
        let first = trace.packet(0).size_bits;
        let other = trace
            .packets()
            .iter()
            .map(|p| p.size_bits)
            .find(|&s| s != first)
            .unwrap_or(first);
        Error::NonUniformSizes(first, other)
    })
}

/// One slot decision of the greedy and the value it attains.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    /// Packet indices in emission order.
    pub sent: Vec<usize>,
    /// Marginal utility of each emitted packet at its step.
    pub marginals: Vec<f64>,
    pub start_post_value: f64,
    pub end_post_value: f64,
    /// Immediate reward of the whole set plus the final post-state value.
    pub value: f64,
    pub comparisons: usize,
}

/// Value tables over the traffic states reachable by root deletion.
#[derive(Clone, Debug, Default)]
pub struct TreeTables {
    pub pre_states: Vec<Vec<(PacketSet, PacketSet)>>,
    pub pre_index: Vec<HashMap<(PacketSet, PacketSet), usize>>,
    /// `state_values[t][i][h]`.
    pub state_values: Vec<Vec<Vec<f64>>>,
    pub post_keys: Vec<Vec<PostKey>>,
    pub post_index: Vec<HashMap<PostKey, usize>>,
    /// `post_values[t][i][h]`.
    pub post_values: Vec<Vec<Vec<f64>>>,
}

impl TreeTables {
    pub fn state_value(
        &self,
        t: usize,
        traffic: PacketSet,
        dependency: PacketSet,
        h: usize,
    ) -> Option<f64> {
        let i = *self.pre_index.get(t)?.get(&(traffic, dependency))?;
        Some(self.state_values[t][i][h])
    }

    pub fn post_value(&self, t: usize, key: &PostKey, h: usize) -> Option<f64> {
        let i = *self.post_index.get(t)?.get(key)?;
        Some(self.post_values[t][i][h])
    }
}

/// Forward closure of reachable pre-states and post keys, then backward
/// induction. Returns the tables and the per-slot complexity counters.
pub(crate) fn build_tables(model: &Model) -> Result<(TreeTables, ComplexityReport)> {
    let horizon = model.horizon();
    let dynamics = &model.dynamics;
    let n_h = model.channel.len();
    let mut tables = TreeTables::default();

    let (b0, d0) = dynamics.initial();
    let mut frontier = vec![(b0, d0)];
    for t in 0..=horizon {
        let pre_index: HashMap<_, _> = frontier.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut post_index: HashMap<PostKey, usize> = HashMap::new();
        let mut post_keys = Vec::new();
        for &(b, d) in &frontier {
            for left in tree_node_sets(&model.relation, b) {
                let key = dynamics.post_key(t, b, d, b.difference(left));
                post_index.entry(key).or_insert_with(|| {
                    post_keys.push(key);
                    post_keys.len() - 1
                });
            }
        }
        let next: Vec<(PacketSet, PacketSet)> = if t < horizon {
            let mut seen = HashMap::new();
            let mut next = Vec::new();
            for &key in &post_keys {
                let s = dynamics.pre_state(t + 1, key);
                if seen.insert(s, ()).is_none() {
                    next.push(s);
                }
            }
            next
        } else {
            Vec::new()
        };
        tables
            .pre_states
            .push(std::mem::replace(&mut frontier, next));
        tables.pre_index.push(pre_index);
        tables.post_keys.push(post_keys);
        tables.post_index.push(post_index);
    }

    tables.state_values = vec![Vec::new(); horizon + 1];
    tables.post_values = vec![Vec::new(); horizon + 1];
    let mut comparisons = vec![0usize; horizon + 1];
    for t in (0..=horizon).rev() {
        let post_values: Vec<Vec<f64>> = if t == horizon {
            vec![vec![0.0; n_h]; tables.post_keys[t].len()]
        } else {
            let next_values = &tables.state_values[t + 1];
            let next_index = &tables.pre_index[t + 1];
            tables.post_keys[t]
                .iter()
                .map(|&key| {
                    let i = next_index[&dynamics.pre_state(t + 1, key)];
                    model
                        .channel
                        .expect_next(&next_values[i])
                        .into_iter()
                        .map(|v| model.alpha * v)
                        .collect()
                })
                .collect()
        };
        let post_index = &tables.post_index[t];
        let evaluated: Vec<Result<(Vec<f64>, usize)>> = tables.pre_states[t]
            .par_iter()
            .map(|&(b, d)| {
                let mut values = Vec::with_capacity(n_h);
                let mut cmp = 0;
                for h in 0..n_h {
                    let mut lookup = |key: PostKey| -> Result<f64> {
                        post_index
                            .get(&key)
                            .map(|&i| post_values[i][h])
                            .ok_or_else(|| missing(model, t, &key))
                    };
                    let out = model.greedy(t, b, d, h, &mut lookup)?;
                    cmp += out.comparisons;
                    values.push(out.value);
                }
                Ok((values, cmp))
            })
            .collect();
        let mut state_values = Vec::with_capacity(evaluated.len());
        for r in evaluated {
            let (v, c) = r?;
            comparisons[t] += c;
            state_values.push(v);
        }
        tables.state_values[t] = state_values;
        tables.post_values[t] = post_values;
    }

    let report = complexity(model, &tables, &comparisons);
    Ok((tables, report))
}

pub(crate) fn missing(model: &Model, t: usize, key: &PostKey) -> Error {
    Error::MissingPostValue {
        slot: t,
        remaining: key
            .remaining
            .iter()
            .map(|i| model.trace.packet(i).id)
            .collect(),
    }
}

fn complexity(model: &Model, tables: &TreeTables, comparisons: &[usize]) -> ComplexityReport {
    let n_h = model.channel.len();
    let dynamics = &model.dynamics;
    let mut slots = Vec::new();
    for t in 0..=model.horizon() {
        let arrivals = dynamics.arrivals(t);
        let visited = tables.pre_states[t]
            .iter()
            .filter(|(b, _)| !b.difference(arrivals).is_empty())
            .count();
        let stored = tables.post_keys[t]
            .iter()
            .filter(|k| !k.remaining.is_empty())
            .count();
        let graph = carried_graph(&model.trace, &model.relation, t);
        let phi = disconnection_degree(&graph);
        let k_bits = dynamics.referenced(t).len() as u32;
        let live = dynamics.live(t).len() as u32;
        slots.push(SlotComplexity {
            slot: t,
            visited_states: (n_h * visited) as u64,
            stored_post_states: (n_h * stored) as u64,
            comparisons: comparisons[t] as u64,
            formula_states: n_h as u64 * 2u64.pow(k_bits) * (graph.len() + phi) as u64,
            table_states: (n_h * tables.pre_states[t].len()) as u64,
            standard_states: n_h as u64 * 2u64.pow(k_bits) * 2u64.pow(live),
            standard_comparisons: n_h as u64 * 2u64.pow(k_bits) * 3u64.pow(live),
        });
    }
    ComplexityReport { slots }
}
