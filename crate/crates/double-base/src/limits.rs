//! Resource limits shared by the heavy engines.

/// Resource limits for sumset construction, interval-partitioned
/// intersections, and residue closures.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Memory budget in bytes for the largest transient structure a single
    /// operation may hold (half-sum tables, partition slices).
    pub memory_budget_bytes: u64,
    /// Cap on the cardinality of a residue closure.
    pub closure_cap: usize,
    /// Cap on `m` for exhaustive residue enumeration.
    pub enumeration_cap: u128,
}

impl Limits {
    pub const MIN_MEMORY_BUDGET: u64 = 64 << 20;

    pub fn with_memory_budget(budget: u64) -> Self {
        Limits {
            memory_budget_bytes: budget.max(Self::MIN_MEMORY_BUDGET),
            ..Limits::default()
        }
    }
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            memory_budget_bytes: 8 << 30,
            closure_cap: crate::modular::DEFAULT_CLOSURE_CAP,
            enumeration_cap: crate::modular::DEFAULT_ENUMERATION_CAP,
        }
    }
}
