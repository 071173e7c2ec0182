//! Reference policies the solver is compared against.

use crate::channel::{averaged_channel, ChannelModel, CostModel};
use crate::error::{Error, Result};
use crate::oracle::{solve_exhaustive, ExhaustiveSolution};
use crate::packet_set::PacketSet;
use crate::sim::Scheduler;
use crate::single::check_alpha_lambda;
use crate::solver::{solve, Dynamics, JointState, SolvedPolicy};
use crate::trace::MediaTrace;

/// The solver with no discounting: only the immediate reward counts.
pub fn baseline_myopic(
    trace: &MediaTrace,
    channel: &ChannelModel,
    cost: &CostModel,
    lambda: f64,
) -> Result<SolvedPolicy> {
    solve(trace, channel, cost, 0.0, lambda)
}

/// Sends decodable packets in decreasing distortion order while the
/// immediate marginal reward stays positive.
#[derive(Clone, Debug)]
pub struct DistortionGreedy {
    trace: MediaTrace,
    channel: ChannelModel,
    cost: CostModel,
    lambda: f64,
    dynamics: Dynamics,
    order: Vec<usize>,
}

pub fn baseline_distortion_greedy(
    trace: &MediaTrace,
    channel: &ChannelModel,
    cost: &CostModel,
    lambda: f64,
) -> Result<DistortionGreedy> {
    check_alpha_lambda(0.0, lambda)?;
    let mut order: Vec<usize> = (0..trace.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (trace.packet(a), trace.packet(b));
        pb.distortion
            .total_cmp(&pa.distortion)
            .then(pa.id.cmp(&pb.id))
    });
    Ok(DistortionGreedy {
        trace: trace.clone(),
        channel: channel.clone(),
        cost: *cost,
        lambda,
        dynamics: Dynamics::new(trace)?,
        order,
    })
}

impl Scheduler for DistortionGreedy {
    fn decide(&self, state: &JointState) -> Result<Vec<usize>> {
        let h = &self.channel.states[state.channel];
        let mut sent = PacketSet::empty();
        let mut out = Vec::new();
        let mut bits = 0.0;
        for &j in &self.order {
            if !state.traffic.contains(j) {
                continue;
            }
            let waiting_on = self.dynamics.parents(j).intersection(state.traffic);
            if !waiting_on.is_subset(sent) {
                continue;
            }
            let p = self.trace.packet(j);
            let marginal = self.cost.cost(bits + p.size_bits, h) - self.cost.cost(bits, h);
            if p.distortion - self.lambda * marginal <= 0.0 {
                break;
            }
            bits += p.size_bits;
            sent.insert(j);
            out.push(j);
        }
        Ok(out)
    }
}

/// Plans against the stationary-average channel and acts as if that were
/// the channel in every slot.
#[derive(Debug)]
pub struct ConstantChannelPolicy {
    pub inner: SolvedPolicy,
}

pub fn baseline_constant_channel(
    trace: &MediaTrace,
    channel: &ChannelModel,
    cost: &CostModel,
    alpha: f64,
    lambda: f64,
) -> Result<ConstantChannelPolicy> {
    let averaged = averaged_channel(channel)?;
    Ok(ConstantChannelPolicy {
        inner: solve(trace, &averaged, cost, alpha, lambda)?,
    })
}

impl Scheduler for ConstantChannelPolicy {
    fn decide(&self, state: &JointState) -> Result<Vec<usize>> {
        self.inner.decide(&JointState {
            channel: 0,
            ..*state
        })
    }
}

/// Acts on the exhaustive solution's maximizing action. Only feasible for
/// small traces.
#[derive(Clone, Debug)]
pub struct OraclePolicy {
    solution: ExhaustiveSolution,
    dynamics: Dynamics,
}

pub fn baseline_oracle(
    trace: &MediaTrace,
    channel: &ChannelModel,
    cost: &CostModel,
    alpha: f64,
    lambda: f64,
) -> Result<OraclePolicy> {
    Ok(OraclePolicy {
        solution: solve_exhaustive(trace, channel, cost, alpha, lambda)?,
        dynamics: Dynamics::new(trace)?,
    })
}

impl OraclePolicy {
    pub fn initial_value(&self) -> f64 {
        self.solution.initial_value()
    }
}

impl Scheduler for OraclePolicy {
    fn decide(&self, state: &JointState) -> Result<Vec<usize>> {
        let action = self
            .solution
            .best_action(state.t, state.traffic, state.dependency, state.channel)
            .ok_or_else(|| Error::IllegalAction {
                slot: state.t,
                reason: "state not tabulated by the exhaustive solver".into(),
            })?;
        // parents go out before their children
        Ok(self
            .dynamics
            .topo_order()
            .iter()
            .copied()
            .filter(|&j| action.contains(j))
            .collect())
    }
}
