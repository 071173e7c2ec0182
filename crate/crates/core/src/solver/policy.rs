//! Solved policies and the per-slot decisions they make.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::packet_set::PacketSet;
use crate::single::ThresholdPolicy;
use crate::solver::complexity::ComplexityReport;
use crate::solver::state::{JointState, PostKey};
use crate::solver::tree::{missing, GreedyOutcome, Model, TreeTables};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    LinearDecomposed,
    ConvexIndependent,
    ConvexInterdependent,
}

/// Values of states the tables do not cover. These only arise when
/// execution departs from loss-free dynamics.
#[derive(Debug, Default)]
struct OffTable {
    post: HashMap<(usize, PostKey), Vec<f64>>,
    pre: HashMap<(usize, PacketSet, PacketSet), Vec<f64>>,
}

#[derive(Debug)]
pub struct SolvedPolicy {
    pub mode: PolicyMode,
    pub model: Model,
    /// Per-packet tables, in trace order (decomposed mode only).
    pub singles: Vec<ThresholdPolicy>,
    /// Joint tables (tree modes only).
    pub tables: Option<TreeTables>,
    pub complexity: Option<ComplexityReport>,
    off_table: Mutex<OffTable>,
}

impl SolvedPolicy {
    pub(crate) fn decomposed(model: Model, singles: Vec<ThresholdPolicy>) -> Self {
        SolvedPolicy {
            mode: PolicyMode::LinearDecomposed,
            model,
            singles,
            tables: None,
            complexity: None,
            off_table: Mutex::default(),
        }
    }

    pub(crate) fn tree(
        mode: PolicyMode,
        model: Model,
        tables: TreeTables,
        complexity: ComplexityReport,
    ) -> Self {
        SolvedPolicy {
            mode,
            model,
            singles: Vec::new(),
            tables: Some(tables),
            complexity: Some(complexity),
            off_table: Mutex::default(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.model.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.model.lambda
    }

    pub fn initial_state(&self, channel: usize) -> JointState {
        let (traffic, dependency) = self.model.dynamics.initial();
        JointState {
            t: 0,
            traffic,
            dependency,
            channel,
        }
    }

    /// Expected discounted net utility from slot 0.
    pub fn initial_value(&self) -> Result<f64> {
        let mut total = 0.0;
        for (h, w) in self.model.channel.initial.iter().enumerate() {
            if *w != 0.0 {
                total += w * self.state_value(&self.initial_state(h))?;
            }
        }
        Ok(total)
    }

    fn check(&self, state: &JointState) -> Result<()> {
        if state.t > self.model.horizon() {
            return Err(Error::SlotOutOfRange {
                slot: state.t,
                first: 0,
                last: self.model.horizon(),
            });
        }
        if state.channel >= self.model.channel.len() {
            return Err(Error::ChannelStateOutOfRange {
                state: state.channel,
                count: self.model.channel.len(),
            });
        }
        Ok(())
    }

    /// Optimal expected discounted utility from `state`, measured from the
    /// state's own slot.
    pub fn state_value(&self, state: &JointState) -> Result<f64> {
        self.check(state)?;
        match &self.tables {
            None => Ok(self.decomposed_value(state)),
            Some(tables) => {
                match tables.state_value(state.t, state.traffic, state.dependency, state.channel) {
                    Some(v) => Ok(v),
                    None => Ok(
                        self.off_table_pre(state.t, state.traffic, state.dependency)?
                            [state.channel],
                    ),
                }
            }
        }
    }

    /// Sum of per-packet values, counting packets yet to arrive.
    fn decomposed_value(&self, state: &JointState) -> f64 {
        self.singles
            .iter()
            .enumerate()
            .filter(|(j, s)| state.traffic.contains(*j) || s.packet.arrival > state.t)
            .map(|(_, s)| s.value_untransmitted(state.t, state.channel))
            .sum()
    }

    /// The packets to send, in emission order, reading only the solved
    /// tables. Fails if the state's post-decision values were not tabulated.
    pub fn act_travelling(&self, state: &JointState) -> Result<Vec<u32>> {
        let sent = match self.mode {
            PolicyMode::LinearDecomposed => {
                self.check(state)?;
                self.decomposed_action(state)
            }
            _ => self.greedy_strict(state)?.sent,
        };
        Ok(sent
            .into_iter()
            .map(|j| self.model.trace.packet(j).id)
            .collect())
    }

    /// The greedy run on the solved tables only.
    pub fn greedy_strict(&self, state: &JointState) -> Result<GreedyOutcome> {
        self.check(state)?;
        let tables = self.tables.as_ref().ok_or(Error::IllegalAction {
            slot: state.t,
            reason: "decomposed policies have no joint tables".into(),
        })?;
        let (t, h) = (state.t, state.channel);
        let mut lookup = |key: PostKey| -> Result<f64> {
            tables
                .post_value(t, &key, h)
                .ok_or_else(|| missing(&self.model, t, &key))
        };
        self.model
            .greedy(t, state.traffic, state.dependency, h, &mut lookup)
    }

    /// Like [`act_travelling`](Self::act_travelling) but returns packet
    /// indices and evaluates states outside the tables on demand.
    pub fn decide(&self, state: &JointState) -> Result<Vec<usize>> {
        self.check(state)?;
        match self.mode {
            PolicyMode::LinearDecomposed => Ok(self.decomposed_action(state)),
            _ => Ok(self
                .greedy_lenient(state.t, state.traffic, state.dependency, state.channel)?
                .sent),
        }
    }

    fn decomposed_action(&self, state: &JointState) -> Vec<usize> {
        state
            .traffic
            .iter()
            .filter(|&j| {
                let s = &self.singles[j];
                s.threshold(state.t, state.channel)
                    .map(|u| s.net_reward[state.channel] > u)
                    .unwrap_or(false)
            })
            .collect()
    }

    fn greedy_lenient(
        &self,
        t: usize,
        traffic: PacketSet,
        dependency: PacketSet,
        h: usize,
    ) -> Result<GreedyOutcome> {
        let mut lookup = |key: PostKey| -> Result<f64> { Ok(self.post_values_any(t, key)?[h]) };
        self.model.greedy(t, traffic, dependency, h, &mut lookup)
    }

    fn post_values_any(&self, t: usize, key: PostKey) -> Result<Vec<f64>> {
        let tables = self.tables.as_ref().expect("tree mode");
        if let Some(&i) = tables.post_index[t].get(&key) {
            return Ok(tables.post_values[t][i].clone());
        }
        if let Some(v) = self.off_table.lock().unwrap().post.get(&(t, key)) {
            return Ok(v.clone());
        }
        let values = if t >= self.model.horizon() {
            vec![0.0; self.model.channel.len()]
        } else {
            let (b, d) = self.model.dynamics.pre_state(t + 1, key);
            let next = match tables.pre_index[t + 1].get(&(b, d)) {
                Some(&i) => tables.state_values[t + 1][i].clone(),
                None => self.off_table_pre(t + 1, b, d)?,
            };
            self.model
                .channel
                .expect_next(&next)
                .into_iter()
                .map(|v| self.model.alpha * v)
                .collect()
        };
        self.off_table
            .lock()
            .unwrap()
            .post
            .insert((t, key), values.clone());
        Ok(values)
    }

    fn off_table_pre(
        &self,
        t: usize,
        traffic: PacketSet,
        dependency: PacketSet,
    ) -> Result<Vec<f64>> {
        if let Some(v) = self
            .off_table
            .lock()
            .unwrap()
            .pre
            .get(&(t, traffic, dependency))
        {
            return Ok(v.clone());
        }
        let values = (0..self.model.channel.len())
            .map(|h| Ok(self.greedy_lenient(t, traffic, dependency, h)?.value))
            .collect::<Result<Vec<f64>>>()?;
        self.off_table
            .lock()
            .unwrap()
            .pre
            .insert((t, traffic, dependency), values.clone());
        Ok(values)
    }
}
