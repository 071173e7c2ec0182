//! Monte Carlo execution of scheduling policies.
//!
//! Each slot the policy sees the true state, the slot's cost is paid for
//! everything it sends, and each sent packet is then lost independently with
//! probability `loss_rate`. A lost packet stays pending and may be resent
//! before its deadline; a packet sent in the same slot as its lost parent
//! cannot be decoded and also stays pending.

pub mod baselines;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{sample_path, ChannelModel, CostModel};
use crate::error::{Error, Result};
use crate::packet_set::PacketSet;
use crate::solver::{Dynamics, JointState};
use crate::trace::MediaTrace;

pub use baselines::{
    baseline_constant_channel, baseline_distortion_greedy, baseline_myopic, baseline_oracle,
    ConstantChannelPolicy, DistortionGreedy, OraclePolicy,
};

/// Anything that picks the packets to send from the current joint state.
pub trait Scheduler: Sync {
    /// Packet indices to send this slot, in emission order.
    fn decide(&self, state: &JointState) -> Result<Vec<usize>>;
}

impl Scheduler for crate::solver::SolvedPolicy {
    fn decide(&self, state: &JointState) -> Result<Vec<usize>> {
        crate::solver::SolvedPolicy::decide(self, state)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SlotRecord {
    pub t: usize,
    pub channel: usize,
    pub traffic: Vec<u32>,
    pub sent: Vec<u32>,
    pub delivered: Vec<u32>,
    pub cost: f64,
    pub gain: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpisodeResult {
    pub delivered: Vec<u32>,
    pub total_distortion_gain: f64,
    pub total_cost: f64,
    pub discounted_utility: f64,
    pub log: Vec<SlotRecord>,
}

impl EpisodeResult {
    /// Discounted utility recomputed from the slot log.
    pub fn utility_from_log(&self, alpha: f64, lambda: f64) -> f64 {
        self.log
            .iter()
            .map(|r| alpha.powi(r.t as i32) * (r.gain - lambda * r.cost))
            .sum()
    }
}

/// Shared inputs of a simulation run.
#[derive(Clone, Copy, Debug)]
pub struct SimSetup<'a> {
    pub trace: &'a MediaTrace,
    pub channel: &'a ChannelModel,
    pub cost: &'a CostModel,
    pub alpha: f64,
    pub lambda: f64,
    pub loss_rate: f64,
}

impl SimSetup<'_> {
    fn check(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.loss_rate) {
            return Err(Error::InvalidParameter {
                name: "loss_rate",
                value: self.loss_rate.to_string(),
                reason: "must lie in [0, 1)",
            });
        }
        crate::single::check_alpha_lambda(self.alpha, self.lambda)
    }
}

pub fn run_episode(
    policy: &dyn Scheduler,
    setup: &SimSetup<'_>,
    channel_path: &[usize],
    seed: u64,
) -> Result<EpisodeResult> {
    setup.check()?;
    let trace = setup.trace;
    let dynamics = Dynamics::new(trace)?;
    let horizon = dynamics.horizon;
    if channel_path.len() < horizon + 1 {
        return Err(Error::ShortChannelPath {
            len: channel_path.len(),
            needed: horizon + 1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut traffic, mut dependency) = dynamics.initial();
    let mut result = EpisodeResult {
        delivered: Vec::new(),
        total_distortion_gain: 0.0,
        total_cost: 0.0,
        discounted_utility: 0.0,
        log: Vec::with_capacity(horizon + 1),
    };
    for (t, &h) in channel_path.iter().enumerate().take(horizon + 1) {
        if h >= setup.channel.len() {
            return Err(Error::ChannelStateOutOfRange {
                state: h,
                count: setup.channel.len(),
            });
        }
        let state = JointState {
            t,
            traffic,
            dependency,
            channel: h,
        };
        let order = policy.decide(&state)?;
        let sent: PacketSet = order.iter().copied().collect();
        if sent.len() != order.len() || !dynamics.is_legal(traffic, sent) {
            return Err(Error::IllegalAction {
                slot: t,
                reason: format!("{order:?} is not a decodable subset of the traffic"),
            });
        }
        let bits: f64 = order.iter().map(|&j| trace.packet(j).size_bits).sum();
        let cost = setup.cost.cost(bits, &setup.channel.states[h]);
        let mut delivered = PacketSet::empty();
        for &j in &order {
            let lost = setup.loss_rate > 0.0 && rng.gen::<f64>() < setup.loss_rate;
            let decodable = dynamics
                .parents(j)
                .intersection(traffic)
                .is_subset(delivered);
            if !lost && decodable {
                delivered.insert(j);
            }
        }
        let gain: f64 = delivered.iter().map(|j| trace.packet(j).distortion).sum();
        result.total_cost += cost;
        result.total_distortion_gain += gain;
        result.discounted_utility += setup.alpha.powi(t as i32) * (gain - setup.lambda * cost);
        result
            .delivered
            .extend(delivered.iter().map(|j| trace.packet(j).id));
        let ids =
            |s: &mut dyn Iterator<Item = usize>| s.map(|j| trace.packet(j).id).collect::<Vec<_>>();
        result.log.push(SlotRecord {
            t,
            channel: h,
            traffic: ids(&mut traffic.iter()),
            sent: ids(&mut order.iter().copied()),
            delivered: ids(&mut delivered.iter()),
            cost,
            gain,
        });
        if t < horizon {
            let key = dynamics.post_key(t, traffic, dependency, delivered);
            (traffic, dependency) = dynamics.pre_state(t + 1, key);
        }
    }
    Ok(result)
}

/// SplitMix64 finalizer over `(seed, episode, stream)`, so nearby run seeds
/// do not share episodes.
fn sub_seed(seed: u64, episode: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(episode.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(stream);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Channel-path seed for episode `episode` of a run seeded with `seed`.
pub fn path_seed(seed: u64, episode: u64) -> u64 {
    sub_seed(seed, episode, 1)
}

/// Loss-draw seed, kept apart from the channel-path seed.
pub fn loss_seed(seed: u64, episode: u64) -> u64 {
    sub_seed(seed, episode, 2)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation (zero for one episode).
    pub stddev: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stddev = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, stddev }
    }

    pub fn std_error(&self, n: usize) -> f64 {
        self.stddev / (n as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub episode: u64,
    pub utility: f64,
    pub cost: f64,
    pub distortion_gain: f64,
    pub delivered_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub policy: String,
    pub n_episodes: usize,
    pub loss_rate: f64,
    pub seed: u64,
    pub episodes: Vec<EpisodeSummary>,
    pub utility: Stat,
    pub cost: Stat,
    pub distortion_gain: Stat,
}

impl SimReport {
    pub fn from_episodes(
        policy: &str,
        loss_rate: f64,
        seed: u64,
        episodes: Vec<EpisodeSummary>,
    ) -> Self {
        let col =
            |f: fn(&EpisodeSummary) -> f64| Stat::of(&episodes.iter().map(f).collect::<Vec<_>>());
        SimReport {
            policy: policy.to_string(),
            n_episodes: episodes.len(),
            loss_rate,
            seed,
            utility: col(|e| e.utility),
            cost: col(|e| e.cost),
            distortion_gain: col(|e| e.distortion_gain),
            episodes,
        }
    }

    /// Mean and standard error of the per-episode utility difference
    /// `self - other` (episodes paired by index).
    pub fn paired_difference(&self, other: &SimReport) -> Stat {
        let diffs: Vec<f64> = self
            .episodes
            .iter()
            .zip(&other.episodes)
            .map(|(a, b)| a.utility - b.utility)
            .collect();
        Stat::of(&diffs)
    }
}

/// Runs `n_episodes` independent episodes. Episode `i` uses the channel path
/// `sample_path(path_seed(seed, i))` and its own loss stream, so the same seed gives
/// every policy the same channel realizations.
pub fn monte_carlo(
    policy: &dyn Scheduler,
    name: &str,
    setup: &SimSetup<'_>,
    n_episodes: usize,
    seed: u64,
) -> Result<SimReport> {
    if n_episodes == 0 {
        return Err(Error::InvalidParameter {
            name: "episodes",
            value: "0".into(),
            reason: "must be at least 1",
        });
    }
    setup.check()?;
    let horizon = setup.trace.horizon();
    let episodes = (0..n_episodes as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(setup.channel, horizon, path_seed(seed, i));
            let r = run_episode(policy, setup, &path, loss_seed(seed, i))?;
            Ok(EpisodeSummary {
                episode: i,
                utility: r.discounted_utility,
                cost: r.total_cost,
                distortion_gain: r.total_distortion_gain,
                delivered_count: r.delivered.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimReport::from_episodes(
        name,
        setup.loss_rate,
        seed,
        episodes,
    ))
}
