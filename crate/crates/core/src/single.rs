//! Optimal stopping for a single packet: transmit once, or never.

use serde::Serialize;

use crate::channel::{ChannelModel, CostModel};
use crate::error::{Error, Result};
use crate::trace::Packet;

/// Rejects a discount factor outside `[0, 1]` or a non-positive multiplier.
pub fn check_alpha_lambda(alpha: f64, lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha.to_string(),
            reason: "must lie in [0, 1]",
        });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda.to_string(),
            reason: "must be positive",
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Transmit,
    Wait,
}

/// Backward-induction tables for one packet.
///
/// `thresholds[t - arrival][h]` is the value of waiting at slot `t` in channel
/// state `h`; `values[t - arrival][h]` is the value of still holding the
/// packet there.
#[derive(Clone, Debug, Serialize)]
pub struct ThresholdPolicy {
    pub packet: Packet,
    pub alpha: f64,
    pub lambda: f64,
    /// Immediate net reward `q - λ ρ(l, h)` per channel state.
    pub net_reward: Vec<f64>,
    pub thresholds: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    /// Expected discounted value seen from slots before arrival.
    pub lead_in: Vec<Vec<f64>>,
}

impl ThresholdPolicy {
    fn offset(&self, t: usize) -> Result<usize> {
        if t < self.packet.arrival || t > self.packet.deadline {
            return Err(Error::SlotOutOfRange {
                slot: t,
                first: self.packet.arrival,
                last: self.packet.deadline,
            });
        }
        Ok(t - self.packet.arrival)
    }

    pub fn threshold(&self, t: usize, h: usize) -> Result<f64> {
        Ok(self.thresholds[self.offset(t)?][h])
    }

    pub fn value(&self, t: usize, h: usize) -> Result<f64> {
        Ok(self.values[self.offset(t)?][h])
    }

    /// Value of the packet at any slot if it has not been sent: the lead-in
    /// value before arrival, the table value while live, zero afterwards.
    pub fn value_untransmitted(&self, t: usize, h: usize) -> f64 {
        if t < self.packet.arrival {
            self.lead_in[t][h]
        } else if t <= self.packet.deadline {
            self.values[t - self.packet.arrival][h]
        } else {
            0.0
        }
    }

    /// Expected value before the first slot, under the channel's initial law.
    pub fn initial_value(&self, channel: &ChannelModel) -> f64 {
        channel
            .initial
            .iter()
            .enumerate()
            .map(|(h, w)| w * self.value_untransmitted(0, h))
            .sum()
    }
}

pub fn solve_single(
    packet: &Packet,
    channel: &ChannelModel,
    cost: &CostModel,
    alpha: f64,
    lambda: f64,
) -> Result<ThresholdPolicy> {
    check_alpha_lambda(alpha, lambda)?;
    if packet.arrival > packet.deadline || packet.size_bits <= 0.0 {
        return Err(Error::InvalidTrace(vec![format!(
            "packet {} has arrival {} > deadline {} or non-positive size",
            packet.id, packet.arrival, packet.deadline
        )]));
    }
    let net_reward: Vec<f64> = channel
        .states
        .iter()
        .map(|s| packet.distortion - lambda * cost.cost(packet.size_bits, s))
        .collect();
    let span = packet.deadline - packet.arrival + 1;
    let n = channel.len();
    let mut thresholds = vec![vec![0.0; n]; span];
    let mut values = vec![vec![0.0; n]; span];
    let mut next = vec![0.0; n];
    for off in (0..span).rev() {
        let wait: Vec<f64> = channel
            .expect_next(&next)
            .into_iter()
            .map(|v| alpha * v)
            .collect();
        for h in 0..n {
            values[off][h] = net_reward[h].max(wait[h]);
        }
        thresholds[off] = wait;
        next = values[off].clone();
    }
    let mut lead_in = vec![vec![0.0; n]; packet.arrival];
    for t in (0..packet.arrival).rev() {
        lead_in[t] = channel
            .expect_next(&next)
            .into_iter()
            .map(|v| alpha * v)
            .collect();
        next = lead_in[t].clone();
    }
    Ok(ThresholdPolicy {
        packet: packet.clone(),
        alpha,
        lambda,
        net_reward,
        thresholds,
        values,
        lead_in,
    })
}

/// `pending` is false once the packet has been delivered.
pub fn act_single(policy: &ThresholdPolicy, t: usize, h: usize, pending: bool) -> Result<Action> {
    let threshold = policy.threshold(t, h)?;
    if pending && policy.net_reward[h] > threshold {
        Ok(Action::Transmit)
    } else {
        Ok(Action::Wait)
    }
}
