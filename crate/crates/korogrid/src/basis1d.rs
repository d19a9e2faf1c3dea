//! One-dimensional dyadic grids and piecewise-linear hierarchical hat
//! functions.
//!
//! Level `l >= 1` carries the grid `x_{l,i} = i * 2^-l`, `1 <= i <= 2^l - 1`.
//! The hat centered at `x_{l,i}` is the mother hat `1 - |x|` rescaled to the
//! cell width `h_l = 2^-l`; the hierarchical basis keeps only odd positions,
//! whose supports are mutually disjoint within a level.
//!
//! All grid quantities are dyadic rationals, hence exactly representable in
//! `f64`; evaluations at grid points are exact. Evaluation at a support
//! boundary returns exactly `0.0` (the closed/open support distinction is
//! immaterial because the limit value is zero).

use crate::{Error, Result};

/// Largest supported level. Keeps `2^l` exactly representable with room to
/// spare for the dyadic arithmetic used throughout.
pub const MAX_LEVEL: u32 = 40;

/// A level/position pair identifying one hat function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelIndex1D {
    level: u32,
    position: u32,
}

impl LevelIndex1D {
    /// Nodal index: any `1 <= position <= 2^level - 1`.
    pub fn new(level: u32, position: u32) -> Result<Self> {
        if !(1..=MAX_LEVEL).contains(&level) {
            return Err(Error::InvalidLevel(level));
        }
        let max = (1u64 << level) - 1;
        if position < 1 || position as u64 > max {
            return Err(Error::InvalidPosition { level, position });
        }
        Ok(Self { level, position })
    }

    /// Hierarchical index: additionally requires `position` odd.
    pub fn hierarchical(level: u32, position: u32) -> Result<Self> {
        let li = Self::new(level, position)?;
        if position.is_multiple_of(2) {
            return Err(Error::PositionNotOdd { level, position });
        }
        Ok(li)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn position(&self) -> u32 {
        self.position
    }

    /// Grid spacing `h_l = 2^-l`, exact.
    pub fn spacing(&self) -> f64 {
        1.0 / (1u64 << self.level) as f64
    }

    /// Node `x_{l,i} = i * h_l`, exact.
    pub fn center(&self) -> f64 {
        self.position as f64 * self.spacing()
    }

    pub fn is_hierarchical(&self) -> bool {
        self.position % 2 == 1
    }

    /// Internal constructor for components already validated elsewhere.
    pub(crate) fn raw(level: u32, position: u32) -> Self {
        debug_assert!(Self::new(level, position).is_ok());
        Self { level, position }
    }
}

/// The mother hat: `1 - |x|` on `[-1, 1]`, zero elsewhere. Total on reals.
pub fn mother_hat(x: f64) -> f64 {
    if (-1.0..=1.0).contains(&x) {
        1.0 - x.abs()
    } else {
        0.0
    }
}

/// Hat function `phi_{l,i}(x) = mother_hat((x - x_{l,i}) / h_l)`.
///
/// Values lie in `[0, 1]`, equal `1` exactly at the center, and vanish
/// exactly at and outside the support endpoints `x_{l,i} +- h_l`.
pub fn hat(li: LevelIndex1D, x: f64) -> f64 {
    mother_hat((x - li.center()) / li.spacing())
}

/// All grid points of level `l` in increasing order.
pub fn grid_points(level: u32) -> Result<Vec<f64>> {
    if !(1..=MAX_LEVEL).contains(&level) {
        return Err(Error::InvalidLevel(level));
    }
    let h = 1.0 / (1u64 << level) as f64;
    Ok((1..(1u64 << level)).map(|i| i as f64 * h).collect())
}

/// Odd positions `{1, 3, ..., 2^l - 1}` of level `l`; cardinality `2^(l-1)`.
pub fn hierarchical_positions(level: u32) -> Result<Vec<u32>> {
    if !(1..=MAX_LEVEL).contains(&level) {
        return Err(Error::InvalidLevel(level));
    }
    Ok((1..(1u64 << level)).step_by(2).map(|i| i as u32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mother_hat_values() {
        assert_eq!(mother_hat(0.0), 1.0);
        assert_eq!(mother_hat(1.0), 0.0);
        assert_eq!(mother_hat(-1.0), 0.0);
        assert_eq!(mother_hat(0.5), 0.5);
        assert_eq!(mother_hat(2.0), 0.0);
        assert_eq!(mother_hat(-3.5), 0.0);
        assert_eq!(mother_hat(f64::NAN), 0.0);
    }

    #[test]
    fn hat_at_center_and_boundary() {
        let li = LevelIndex1D::new(2, 1).unwrap();
        assert_eq!(hat(li, 0.25), 1.0);
        assert_eq!(hat(li, 0.5), 0.0);
        assert_eq!(hat(li, 0.0), 0.0);
    }

    #[test]
    fn hat_hand_value() {
        // x_{3,3} = 0.375, h_3 = 0.125, 1 - |0.03125 / 0.125| = 0.75
        let li = LevelIndex1D::new(3, 3).unwrap();
        assert_eq!(hat(li, 0.40625), 0.75);
    }

    #[test]
    fn grid_point_lists() {
        assert_eq!(grid_points(1).unwrap(), vec![0.5]);
        assert_eq!(grid_points(2).unwrap(), vec![0.25, 0.5, 0.75]);
        let g3 = grid_points(3).unwrap();
        assert_eq!(g3.len(), 7);
        assert_eq!(g3[0], 0.125);
        assert!(grid_points(0).is_err());
    }

    #[test]
    fn hierarchical_position_lists() {
        assert_eq!(hierarchical_positions(1).unwrap(), vec![1]);
        assert_eq!(hierarchical_positions(2).unwrap(), vec![1, 3]);
        assert_eq!(hierarchical_positions(3).unwrap(), vec![1, 3, 5, 7]);
        assert!(hierarchical_positions(0).is_err());
    }

    #[test]
    fn cardinalities() {
        for l in 1..=8 {
            assert_eq!(grid_points(l).unwrap().len(), (1usize << l) - 1);
            assert_eq!(hierarchical_positions(l).unwrap().len(), 1usize << (l - 1));
        }
    }

    #[test]
    fn index_validation() {
        assert!(LevelIndex1D::new(3, 0).is_err());
        assert!(LevelIndex1D::new(3, 8).is_err());
        assert!(LevelIndex1D::new(3, 7).is_ok());
        assert!(LevelIndex1D::hierarchical(3, 4).is_err());
        assert!(LevelIndex1D::hierarchical(3, 5).is_ok());
    }

    proptest! {
        #[test]
        fn hat_bounded_and_vanishes_at_domain_ends(level in 1u32..=10, x in -0.5f64..1.5) {
            for i in hierarchical_positions(level).unwrap() {
                let li = LevelIndex1D::new(level, i).unwrap();
                let v = hat(li, x);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(hat(li, 0.0), 0.0);
                prop_assert_eq!(hat(li, 1.0), 0.0);
            }
        }

        #[test]
        fn same_level_hierarchical_supports_disjoint(level in 1u32..=8, x in 0.0f64..=1.0) {
            let positions = hierarchical_positions(level).unwrap();
            let mut nonzero = 0;
            for &i in &positions {
                let li = LevelIndex1D::new(level, i).unwrap();
                if hat(li, x) > 0.0 {
                    nonzero += 1;
                }
            }
            // At most one odd-position hat is nonzero at any point, so all
            // pairwise products vanish.
            prop_assert!(nonzero <= 1);
        }
    }
}
