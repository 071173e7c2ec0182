//! Seeded random instances shared by the integration tests.

#![allow(dead_code)]

use mediasched::{ChannelModel, ChannelState, CostKind, CostModel, MediaTrace, Packet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHAS: [f64; 4] = [0.0, 0.5, 0.9, 1.0];

#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub trace: MediaTrace,
    pub channel: ChannelModel,
    pub cost: CostModel,
    pub alpha: f64,
    pub lambda: f64,
}

pub fn random_channel(rng: &mut ChaCha8Rng, n: usize) -> ChannelModel {
    let states = (0..n)
        .map(|i| ChannelState {
            id: i as u32,
            gain: rng.gen_range(0.2..3.0),
            rate: rng.gen_range(0.5..4.0),
            loss_prob: rng.gen_range(0.0..0.4),
        })
        .collect();
    let row = |rng: &mut ChaCha8Rng| {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        let mut r: Vec<f64> = w.iter().map(|x| x / s).collect();
        // make the row sum to one exactly
        let rest: f64 = r[..n - 1].iter().sum();
        r[n - 1] = 1.0 - rest;
        r
    };
    let transition = (0..n).map(|_| row(rng)).collect();
    let initial = row(rng);
    ChannelModel::new(states, transition, initial).unwrap()
}

/// Packets with random attributes. With `dependency_prob > 0` each packet
/// may depend on earlier packets whose arrival and deadline do not exceed
/// its own.
pub fn random_trace(
    rng: &mut ChaCha8Rng,
    n: usize,
    horizon: usize,
    uniform: bool,
    dependency_prob: f64,
) -> MediaTrace {
    let mut slots: Vec<(usize, usize)> = (0..n)
        .map(|_| {
            let a = rng.gen_range(0..horizon);
            let d = rng.gen_range(a + 1..=horizon);
            (a, d)
        })
        .collect();
    slots.sort();
    let mut packets: Vec<Packet> = Vec::with_capacity(n);
    for (i, &(arrival, deadline)) in slots.iter().enumerate() {
        let parents = (0..i)
            .filter(|&p| {
                slots[p].0 <= arrival && slots[p].1 <= deadline && rng.gen_bool(dependency_prob)
            })
            .map(|p| p as u32)
            .collect();
        packets.push(Packet {
            id: i as u32,
            size_bits: if uniform {
                1.0
            } else {
                rng.gen_range(0.5..2.0)
            },
            distortion: rng.gen_range(0.5..5.0),
            arrival,
            deadline,
            parents,
        });
    }
    MediaTrace::new(packets).unwrap()
}

pub fn random_instance(seed: u64, kind: CostKind, dependency_prob: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let horizon = rng.gen_range(3..=8);
    let n_h = rng.gen_range(2..=4);
    let channel = random_channel(&mut rng, n_h);
    // the tree solver handles dependent traces and needs one packet size
    let uniform = kind == CostKind::Convex || dependency_prob > 0.0;
    let trace = random_trace(&mut rng, n, horizon, uniform, dependency_prob);
    let cost = match kind {
        CostKind::Linear => CostModel::linear(),
        CostKind::Convex => CostModel::convex(2.0).unwrap(),
    };
    Instance {
        seed,
        trace,
        channel,
        cost,
        alpha: ALPHAS[rng.gen_range(0..4)],
        lambda: rng.gen_range(0.3..1.5),
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
