//! Built-in test scenarios. The same data ships as JSON under `scenarios/`.

use crate::channel::{ChannelModel, ChannelState, CostModel};
use crate::error::Result;
use crate::trace::{synth_trace, MediaTrace, Packet};

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub trace: MediaTrace,
    pub channel: ChannelModel,
    pub cost: CostModel,
    pub alpha: f64,
    pub lambda: f64,
}

pub const NAMES: [&str; 2] = ["volatile", "standard"];

pub fn by_name(name: &str) -> Option<Result<Scenario>> {
    match name {
        "volatile" => Some(volatile()),
        "standard" => Some(standard()),
        _ => None,
    }
}

/// Independent unit-size packets over a two-state channel that flips often
/// between a poor and a good gain, with the convex power cost.
pub fn volatile() -> Result<Scenario> {
    let rows: [(f64, usize, usize); 8] = [
        (3.0, 0, 3),
        (2.0, 0, 4),
        (2.5, 1, 4),
        (1.5, 2, 5),
        (3.5, 3, 6),
        (1.0, 3, 7),
        (2.0, 5, 8),
        (3.0, 6, 8),
    ];
    let packets = rows
        .iter()
        .enumerate()
        .map(|(i, &(q, arrival, deadline))| Packet {
            id: i as u32,
            size_bits: 1.0,
            distortion: q,
            arrival,
            deadline,
            parents: vec![],
        })
        .collect();
    let channel = ChannelModel::new(
        vec![
            ChannelState {
                id: 0,
                gain: 0.25,
                rate: 1.0,
                loss_prob: 0.0,
            },
            ChannelState {
                id: 1,
                gain: 4.0,
                rate: 1.0,
                loss_prob: 0.0,
            },
        ],
        vec![vec![0.4, 0.6], vec![0.6, 0.4]],
        vec![0.5, 0.5],
    )?;
    Ok(Scenario {
        name: "volatile",
        trace: MediaTrace::new(packets)?,
        channel,
        cost: CostModel::convex(2.0)?,
        alpha: 0.95,
        lambda: 1.0,
    })
}

/// Two GOPs of four chained frames over a five-state channel with the
/// retransmission-time (linear) cost.
pub fn standard() -> Result<Scenario> {
    let trace = synth_trace(2, 4, 2, &[8.0, 4.0, 2.0, 1.0], 7)?;
    let rates = [0.5, 1.0, 2.0, 3.0, 4.0];
    let losses = [0.3, 0.2, 0.1, 0.05, 0.02];
    let states = (0..5)
        .map(|i| ChannelState {
            id: i as u32,
            gain: 1.0,
            rate: rates[i],
            loss_prob: losses[i],
        })
        .collect();
    let mut transition = vec![vec![0.0; 5]; 5];
    for i in 0..5 {
        if i > 0 {
            transition[i][i - 1] = 0.25;
        }
        if i < 4 {
            transition[i][i + 1] = 0.25;
        }
        transition[i][i] = 1.0 - transition[i].iter().sum::<f64>();
    }
    Ok(Scenario {
        name: "standard",
        trace,
        channel: ChannelModel::new(states, transition, vec![0.2; 5])?,
        cost: CostModel::linear(),
        alpha: 0.95,
        lambda: 1.0,
    })
}
