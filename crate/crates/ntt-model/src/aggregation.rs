use serde::{Deserialize, Serialize};

use crate::ModelError;

/// Two-stage grouping arithmetic: the newest `raw` packets stay as-is, the
/// next `l1_groups * factor` are aggregated once, the oldest
/// `l2_groups * factor^2` twice. The canonical scheme maps 1024 packets onto
/// 16 + 22 + 10 = 48 slots with factor 9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationScheme {
    pub raw: usize,
    pub l1_groups: usize,
    pub l2_groups: usize,
    pub factor: usize,
}

impl AggregationScheme {
    pub fn canonical() -> Self {
        AggregationScheme {
            raw: 16,
            l1_groups: 22,
            l2_groups: 10,
            factor: 9,
        }
    }

    /// Shrunken scheme for test harnesses: 32 packets into 10 slots.
    pub fn tiny() -> Self {
        AggregationScheme {
            raw: 5,
            l1_groups: 3,
            l2_groups: 2,
            factor: 3,
        }
    }

    pub fn window_len(&self) -> usize {
        self.raw + self.l1_groups * self.factor + self.l2_groups * self.factor * self.factor
    }

    pub fn slots(&self) -> usize {
        self.raw + self.l1_groups + self.l2_groups
    }

    /// Rows covered by the doubly-aggregated prefix.
    pub fn l2_rows(&self) -> usize {
        self.l2_groups * self.factor * self.factor
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.raw == 0 || self.factor < 2 || self.l1_groups == 0 || self.l2_groups == 0 {
            return Err(ModelError::Schema(format!(
                "degenerate aggregation scheme {self:?}"
            )));
        }
        Ok(())
    }

    /// Output slot affected by a given input row, before any encoder mixing.
    pub fn slot_of_row(&self, row: usize) -> usize {
        let l2_rows = self.l2_rows();
        let l1_rows = self.l1_groups * self.factor;
        if row < l2_rows {
            row / (self.factor * self.factor)
        } else if row < l2_rows + l1_rows {
            self.l2_groups + (row - l2_rows) / self.factor
        } else {
            self.l2_groups + self.l1_groups + (row - l2_rows - l1_rows)
        }
    }
}
