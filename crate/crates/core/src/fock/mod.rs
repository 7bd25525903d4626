//! Bosonic Fock space for `N` atoms in `N` wells with two internal levels.
//!
//! Modes are ordered `g1 e1 g2 e2 ...`, i.e. the flat mode index of
//! `(well, level)` is `2 * well + level`. The particle number is fixed to the
//! number of wells, so the whole basis is the `N`-particle sector.

mod basis;
mod generators;
mod matrix;
mod state;

pub use basis::{sector_dimension, FockBasis, OccupationVector, DEFAULT_DIMENSION_CAP};
pub use generators::{
    cross_site_jy, hopping, jz_half_difference, number_operator, onsite_jy, parity_operator,
    total_number_operator, well_number_operator,
};
pub use matrix::{exp_unitary, OperatorKind, OperatorMatrix};
pub use state::StateVector;

pub use num_complex::Complex64 as C64;

/// Internal hyperfine level of an atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Ground,
    Excited,
}

/// A single bosonic mode: one internal level in one well.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub well: usize,
    pub level: Level,
}

impl ModeIndex {
    pub fn ground(well: usize) -> Self {
        Self {
            well,
            level: Level::Ground,
        }
    }

    pub fn excited(well: usize) -> Self {
        Self {
            well,
            level: Level::Excited,
        }
    }

    pub fn flat(self) -> usize {
        2 * self.well
            + match self.level {
                Level::Ground => 0,
                Level::Excited => 1,
            }
    }

    pub fn from_flat(index: usize) -> Self {
        let level = if index.is_multiple_of(2) {
            Level::Ground
        } else {
            Level::Excited
        };
        Self {
            well: index / 2,
            level,
        }
    }
}
