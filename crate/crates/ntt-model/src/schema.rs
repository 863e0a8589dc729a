use serde::{Deserialize, Serialize};

/// Layout of one feature row:
/// `[Δt, size?, receiver one-hot…, delay?, mask_flag]`.
/// `size` and `delay` columns exist only when the corresponding flag is set;
/// the mask flag column is always last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub use_size: bool,
    pub use_delay: bool,
    pub n_receivers: usize,
}

impl FeatureSchema {
    pub fn full(n_receivers: usize) -> Self {
        FeatureSchema {
            use_size: true,
            use_delay: true,
            n_receivers,
        }
    }

    pub fn width(&self) -> usize {
        2 + self.n_receivers + usize::from(self.use_size) + usize::from(self.use_delay)
    }

    pub fn col_dt(&self) -> usize {
        0
    }

    pub fn col_size(&self) -> Option<usize> {
        self.use_size.then_some(1)
    }

    pub fn col_receiver(&self, receiver: usize) -> usize {
        1 + usize::from(self.use_size) + receiver
    }

    pub fn col_delay(&self) -> Option<usize> {
        self.use_delay
            .then_some(1 + usize::from(self.use_size) + self.n_receivers)
    }

    pub fn col_mask(&self) -> usize {
        self.width() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_follow_the_flags() {
        assert_eq!(FeatureSchema::full(3).width(), 7);
        let no_delay = FeatureSchema {
            use_delay: false,
            ..FeatureSchema::full(3)
        };
        assert_eq!(no_delay.width(), 6);
        assert_eq!(no_delay.col_delay(), None);
        let no_size = FeatureSchema {
            use_size: false,
            ..FeatureSchema::full(3)
        };
        assert_eq!(no_size.width(), 6);
        assert_eq!(no_size.col_receiver(0), 1);
    }

    #[test]
    fn column_layout_is_disjoint_and_ordered() {
        let s = FeatureSchema::full(3);
        let cols = [
            s.col_dt(),
            s.col_size().unwrap(),
            s.col_receiver(0),
            s.col_receiver(2),
            s.col_delay().unwrap(),
            s.col_mask(),
        ];
        assert_eq!(cols, [0, 1, 2, 4, 5, 6]);
    }
}
