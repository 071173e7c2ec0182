//! Finite-state Markov channel and the transmission cost functions.

use std::io::Read;

use nalgebra::{DMatrix, DVector};
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// One quantized channel condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelState {
    pub id: u32,
    /// Normalized gain, used by the power (convex) cost.
    pub gain: f64,
    /// Bits per slot, used by the retransmission-time (linear) cost.
    pub rate: f64,
    /// Per-attempt loss probability, used by the linear cost.
    pub loss_prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    pub states: Vec<ChannelState>,
    /// Row-stochastic `transition[h][h']`.
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

impl ChannelModel {
    pub fn new(
        states: Vec<ChannelState>,
        transition: Vec<Vec<f64>>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let model = ChannelModel {
            states,
            transition,
            initial,
        };
        let violations = validate_channel(&model);
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(Error::InvalidChannel(violations))
        }
    }

    /// A single state that never changes.
    pub fn constant(state: ChannelState) -> Self {
        ChannelModel {
            states: vec![state],
            transition: vec![vec![1.0]],
            initial: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel serializes")
    }

    /// Distribution of the channel state after `steps` transitions from `initial`.
    pub fn distribution_at(&self, steps: usize) -> Vec<f64> {
        let mut dist = self.initial.clone();
        for _ in 0..steps {
            dist = self.step_distribution(&dist);
        }
        dist
    }

    pub fn step_distribution(&self, dist: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut next = vec![0.0; n];
        for (h, &w) in dist.iter().enumerate() {
            if w != 0.0 {
                for (hn, p) in self.transition[h].iter().enumerate() {
                    next[hn] += w * p;
                }
            }
        }
        next
    }

    /// `Σ_{h'} p(h'|h) values[h']` for every `h`.
    pub fn expect_next(&self, values: &[f64]) -> Vec<f64> {
        self.transition
            .iter()
            .map(|row| row.iter().zip(values).map(|(p, v)| p * v).sum())
            .collect()
    }
}

pub fn load_channel<R: Read>(source: R) -> Result<ChannelModel> {
    let model: ChannelModel = serde_json::from_reader(source)?;
    let violations = validate_channel(&model);
    if violations.is_empty() {
        Ok(model)
    } else {
        Err(Error::InvalidChannel(violations))
    }
}

pub fn validate_channel(model: &ChannelModel) -> Vec<String> {
    let mut out = Vec::new();
    let n = model.states.len();
    if n == 0 {
        out.push("channel has no states".to_string());
    }
    for (i, s) in model.states.iter().enumerate() {
        if !(s.gain.is_finite() && s.gain > 0.0) {
            out.push(format!(
                "state {} (id {}): gain > 0 violated ({})",
                i, s.id, s.gain
            ));
        }
        if !(s.rate.is_finite() && s.rate > 0.0) {
            out.push(format!(
                "state {} (id {}): rate > 0 violated ({})",
                i, s.id, s.rate
            ));
        }
        if !(s.loss_prob >= 0.0 && s.loss_prob < 1.0) {
            out.push(format!(
                "state {} (id {}): 0 <= loss_prob < 1 violated ({})",
                i, s.id, s.loss_prob
            ));
        }
    }
    if model.transition.len() != n {
        out.push(format!(
            "transition matrix has {} rows, expected {}",
            model.transition.len(),
            n
        ));
    }
    for (i, row) in model.transition.iter().enumerate() {
        if row.len() != n {
            out.push(format!(
                "transition row {} has {} entries, expected {}",
                i,
                row.len(),
                n
            ));
        }
        for (j, &p) in row.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                out.push(format!(
                    "transition[{i}][{j}] = {p} is negative or not finite"
                ));
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            out.push(format!("transition row {i} sums to {sum}, not 1"));
        }
    }
    if model.initial.len() != n {
        out.push(format!(
            "initial distribution has {} entries, expected {}",
            model.initial.len(),
            n
        ));
    }
    if model.initial.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
        out.push("initial distribution has a negative or non-finite entry".to_string());
    }
    let sum: f64 = model.initial.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        out.push(format!("initial distribution sums to {sum}, not 1"));
    }
    out
}

/// Channel state indices for slots `0..=horizon`, deterministic in `seed`.
pub fn sample_path(model: &ChannelModel, horizon: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<WeightedIndex<f64>> = model
        .transition
        .iter()
        .map(|row| WeightedIndex::new(row).expect("validated transition row"))
        .collect();
    let init = WeightedIndex::new(&model.initial).expect("validated initial distribution");
    let mut path = Vec::with_capacity(horizon + 1);
    let mut h = init.sample(&mut rng);
    path.push(h);
    for _ in 0..horizon {
        h = rows[h].sample(&mut rng);
        path.push(h);
    }
    path
}

/// Expected transmission time: `bits / R(h)` inflated by the mean number of
/// attempts `1 / (1 - p_L(h))`.
pub fn cost_linear(bits: f64, state: &ChannelState) -> f64 {
    bits / (state.rate * (1.0 - state.loss_prob))
}

/// Power needed to push `bits` through one slot of length `slot_duration`:
/// `(2^(2 bits / ΔT) - 1) / gain`.
pub fn cost_convex(bits: f64, state: &ChannelState, slot_duration: f64) -> f64 {
    ((2.0 * bits / slot_duration).exp2() - 1.0) / state.gain
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Linear,
    Convex,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub kind: CostKind,
    /// Slot length ΔT; only read by the convex cost.
    pub slot_duration: f64,
}

impl CostModel {
    pub fn linear() -> Self {
        CostModel {
            kind: CostKind::Linear,
            slot_duration: 1.0,
        }
    }

    pub fn convex(slot_duration: f64) -> Result<Self> {
        if !(slot_duration.is_finite() && slot_duration > 0.0) {
            return Err(Error::InvalidParameter {
                name: "slot_duration",
                value: slot_duration.to_string(),
                reason: "must be positive",
            });
        }
        Ok(CostModel {
            kind: CostKind::Convex,
            slot_duration,
        })
    }

    pub fn cost(&self, bits: f64, state: &ChannelState) -> f64 {
        match self.kind {
            CostKind::Linear => cost_linear(bits, state),
            CostKind::Convex => cost_convex(bits, state, self.slot_duration),
        }
    }

    /// Extra cost of the `k`-th unit-size packet in one slot.
    pub fn marginal(&self, k: usize, unit_bits: f64, state: &ChannelState) -> f64 {
        marginal_cost(self, k, unit_bits, state)
    }
}

/// `cost(k * unit) - cost((k - 1) * unit)`.
pub fn marginal_cost(cost: &CostModel, k: usize, unit_bits: f64, state: &ChannelState) -> f64 {
    debug_assert!(k >= 1);
    match cost.kind {
        CostKind::Linear => cost_linear(unit_bits, state),
        CostKind::Convex => {
            cost.cost(k as f64 * unit_bits, state) - cost.cost((k - 1) as f64 * unit_bits, state)
        }
    }
}

/// Closed communicating classes of the transition graph.
fn closed_class_count(model: &ChannelModel) -> usize {
    let n = model.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if model.transition[i][j] > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    // A state is recurrent iff everything it reaches reaches it back; each
    // closed class is counted once via its smallest member.
    (0..n)
        .filter(|&i| {
            let recurrent = (0..n).all(|j| !reach[i][j] || reach[j][i]);
            recurrent && (0..i).all(|j| !(reach[i][j] && reach[j][i]))
        })
        .count()
}

/// The unique stationary distribution, or an error when several closed
/// classes make it ambiguous. Periodic chains are accepted.
pub fn stationary_distribution(model: &ChannelModel) -> Result<Vec<f64>> {
    let n = model.len();
    let classes = closed_class_count(model);
    if classes != 1 {
        return Err(Error::NonUniqueStationary(classes));
    }
    // Solve (Pᵀ - I) π = 0 with the last equation replaced by Σ π = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = model.transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or(Error::NonUniqueStationary(classes))?;
    Ok(pi.iter().map(|&p| p.max(0.0)).collect())
}

/// Collapses the chain into one state whose attributes are the
/// stationary-weighted means of the originals.
pub fn averaged_channel(model: &ChannelModel) -> Result<ChannelModel> {
    let pi = stationary_distribution(model)?;
    let mean = |f: fn(&ChannelState) -> f64| -> f64 {
        model.states.iter().zip(&pi).map(|(s, w)| w * f(s)).sum()
    };
    Ok(ChannelModel::constant(ChannelState {
        id: 0,
        gain: mean(|s| s.gain),
        rate: mean(|s| s.rate),
        loss_prob: mean(|s| s.loss_prob),
    }))
}
