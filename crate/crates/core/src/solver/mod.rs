//! Multi-packet schedulers.
//!
//! With linear costs and independent packets the joint problem splits into
//! one optimal stopping problem per packet. Otherwise the travelling state
//! tree solver tabulates post-decision values over the traffic states that
//! priority-ordered transmission can reach.

pub mod complexity;
pub mod policy;
pub mod state;
pub mod tree;

use crate::channel::{ChannelModel, CostKind, CostModel};
use crate::error::{Error, Result};
use crate::single::solve_single;
use crate::trace::MediaTrace;

pub use complexity::{ComplexityReport, SlotComplexity};
pub use policy::{PolicyMode, SolvedPolicy};
pub use state::{Dynamics, JointState, PostKey};
pub use tree::{GreedyOutcome, Model, TreeTables};

/// One threshold policy per packet; the joint value is their sum.
pub fn solve_linear(
    trace: &MediaTrace,
    channel: &ChannelModel,
    cost: &CostModel,
    alpha: f64,
    lambda: f64,
) -> Result<SolvedPolicy> {
    if cost.kind != CostKind::Linear {
        return Err(Error::InvalidParameter {
            name: "cost",
            value: "convex".into(),
            reason: "the decomposed solver needs a linear cost",
        });
    }
    if trace.has_dependencies() {
        return Err(Error::DependenciesNotDecomposable);
    }
    let model = Model::new(trace, channel, cost, alpha, lambda)?;
    let singles = trace
        .packets()
        .iter()
        .map(|p| solve_single(p, channel, cost, alpha, lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolvedPolicy::decomposed(model, singles))
}

/// Travelling-state-tree solve. `interdependent` must match whether the
/// trace has dependency edges.
pub fn solve_convex(
    trace: &MediaTrace,
    channel: &ChannelModel,
    cost: &CostModel,
    alpha: f64,
    lambda: f64,
    interdependent: bool,
) -> Result<SolvedPolicy> {
    if interdependent != trace.has_dependencies() {
        return Err(Error::InterdependenceMismatch {
            flag: interdependent,
        });
    }
    tree::uniform_size(trace)?;
    let model = Model::new(trace, channel, cost, alpha, lambda)?;
    let (tables, report) = tree::build_tables(&model)?;
    let mode = if interdependent {
        PolicyMode::ConvexInterdependent
    } else {
        PolicyMode::ConvexIndependent
    };
    Ok(SolvedPolicy::tree(mode, model, tables, report))
}

/// Picks the decomposed solver for linear costs over independent packets
/// and the tree solver otherwise.
pub fn solve(
    trace: &MediaTrace,
    channel: &ChannelModel,
    cost: &CostModel,
    alpha: f64,
    lambda: f64,
) -> Result<SolvedPolicy> {
    if cost.kind == CostKind::Linear && !trace.has_dependencies() {
        solve_linear(trace, channel, cost, alpha, lambda)
    } else {
        solve_convex(
            trace,
            channel,
            cost,
            alpha,
            lambda,
            trace.has_dependencies(),
        )
    }
}
