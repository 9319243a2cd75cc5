//! Oracle query accounting.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("query budget of {limit} exhausted")]
pub struct BudgetExhausted {
    pub limit: usize,
}

/// Counts oracle queries against a hard limit. `used` never exceeds `limit`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryCounter {
    used: usize,
    limit: usize,
}

impl QueryCounter {
    pub fn new(limit: usize) -> Self {
        Self { used: 0, limit }
    }

    /// Records one query, failing if the budget is already spent.
    pub fn charge(&mut self) -> Result<(), BudgetExhausted> {
        if self.used >= self.limit {
            return Err(BudgetExhausted { limit: self.limit });
        }
        self.used += 1;
        Ok(())
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn remaining(&self) -> usize {
        self.limit - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.limit
    }
}
