//! Per-slot storage and computation counters.

use serde::Serialize;

/// Counts for one slot. State counts are multiplied by the number of channel
/// states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlotComplexity {
    pub slot: usize,
    /// Distinct states whose carried-over traffic (packets that arrived
    /// before this slot) is non-empty.
    pub visited_states: u64,
    /// Distinct post-decision states with non-empty remaining traffic.
    pub stored_post_states: u64,
    /// Root evaluations made by the greedy.
    pub comparisons: u64,
    /// `|H| · 2^|K| · (N + φ)` of the carried-over priority graph.
    pub formula_states: u64,
    /// Every tabulated state, including those with only fresh arrivals.
    pub table_states: u64,
    /// States of the full joint dynamic program, `|H| · 2^|K| · 2^N_live`.
    pub standard_states: u64,
    /// Action evaluations of the full program, `|H| · 2^|K| · 3^N_live`.
    pub standard_comparisons: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ComplexityReport {
    pub slots: Vec<SlotComplexity>,
}

impl ComplexityReport {
    pub fn total_stored_post_states(&self) -> u64 {
        self.slots.iter().map(|s| s.stored_post_states).sum()
    }

    pub fn total_comparisons(&self) -> u64 {
        self.slots.iter().map(|s| s.comparisons).sum()
    }

    pub fn total_standard_states(&self) -> u64 {
        self.slots.iter().map(|s| s.standard_states).sum()
    }

    pub fn total_standard_comparisons(&self) -> u64 {
        self.slots.iter().map(|s| s.standard_comparisons).sum()
    }

    /// Slots where the post-states stored at `t` differ in number from the
    /// states visited at `t + 1`.
    pub fn post_visit_mismatches(&self) -> Vec<usize> {
        self.slots
            .windows(2)
            .filter(|w| w[0].stored_post_states != w[1].visited_states)
            .map(|w| w[0].slot)
            .collect()
    }

    /// Slots where the visited count differs from the closed-form count.
    pub fn formula_mismatches(&self) -> Vec<usize> {
        self.slots
            .iter()
            .filter(|s| s.visited_states != s.formula_states)
            .map(|s| s.slot)
            .collect()
    }
}
