//! Delay-sensitive packet scheduling over finite-state Markov channels.
//!
//! Each packet has a size, a distortion impact, an arrival slot, a deadline
//! and a set of packets it depends on. Every slot the scheduler observes the
//! channel state and picks which packets to send, trading the distortion
//! reduction of timely decoded packets against a transmission cost.
//!
//! [`solver`] handles the finite-horizon MDP with per-packet threshold
//! policies or a priority-ordered search over reachable traffic states.
//! [`oracle`] is the brute-force reference, and [`sim`] runs policies over
//! sampled channel paths.

pub mod channel;
pub mod dump;
pub mod error;
pub mod oracle;
pub mod packet_set;
pub mod priority;
pub mod scenario;
pub mod sim;
pub mod single;
pub mod solver;
pub mod trace;

pub use channel::{
    averaged_channel, cost_convex, cost_linear, load_channel, marginal_cost, sample_path,
    stationary_distribution, validate_channel, ChannelModel, ChannelState, CostKind, CostModel,
};
pub use error::{Error, Result};
pub use packet_set::PacketSet;
pub use single::{act_single, solve_single, Action, ThresholdPolicy};
pub use solver::{solve, solve_convex, solve_linear, JointState, PolicyMode, SolvedPolicy};
pub use trace::{
    descendants, load_trace, synth_trace, validate_trace, validate_trace_for_tree_solver,
    MediaTrace, Packet,
};
