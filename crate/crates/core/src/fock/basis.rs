use std::fmt;

use super::{Level, ModeIndex};
use crate::error::{Error, Result};

/// Largest basis the dense block machinery accepts unless configured otherwise.
/// `C(17, 6) = 12376` keeps six wells inside the cap; seven wells (77520) do not.
pub const DEFAULT_DIMENSION_CAP: usize = 20_000;

/// Particle counts per mode, ordered `g1 e1 g2 e2 ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector(Vec<u8>);

impl OccupationVector {
    pub fn new(counts: Vec<u8>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn n_modes(&self) -> usize {
        self.0.len()
    }

    pub fn n_wells(&self) -> usize {
        self.0.len() / 2
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    pub fn get(&self, mode: ModeIndex) -> u8 {
        self.0[mode.flat()]
    }

    pub fn ground(&self, well: usize) -> u8 {
        self.0[2 * well]
    }

    pub fn excited(&self, well: usize) -> u8 {
        self.0[2 * well + 1]
    }

    /// Atoms in a well regardless of level.
    pub fn in_well(&self, well: usize) -> u8 {
        self.ground(well) + self.excited(well)
    }

    /// Total number of atoms in the ground level, `N_g`.
    pub fn ground_total(&self) -> usize {
        self.0.iter().step_by(2).map(|&c| c as usize).sum()
    }

    pub fn excited_total(&self) -> usize {
        self.0.iter().skip(1).step_by(2).map(|&c| c as usize).sum()
    }

    /// True when every well holds exactly one atom.
    pub fn one_per_well(&self) -> bool {
        (0..self.n_wells()).all(|w| self.in_well(w) == 1)
    }

    pub fn level_count(&self, well: usize, level: Level) -> u8 {
        self.get(ModeIndex { well, level })
    }
}

impl fmt::Display for OccupationVector {
    /// Digits in mode order (`1010` for one ground atom in each of two wells).
    /// Counts above nine fall back to a comma-separated list.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&c| c < 10) {
            for c in &self.0 {
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// All occupation vectors of `N` bosons in `2N` modes, in descending
/// lexicographic order of the counts.
#[derive(Clone, Debug)]
pub struct FockBasis {
    n_wells: usize,
    states: Vec<OccupationVector>,
    // compositions[r][m]: number of ways to write r as an ordered sum of m
    // non-negative parts.
    compositions: Vec<Vec<usize>>,
}

/// `C(3n - 1, n)`, the number of `n`-boson states in `2n` modes.
pub fn sector_dimension(n_wells: usize) -> u128 {
    if n_wells == 0 {
        return 0;
    }
    let n = n_wells as u128;
    let top = 3 * n - 1;
    let mut acc: u128 = 1;
    for k in 0..n {
        acc = acc * (top - k) / (k + 1);
    }
    acc
}

impl FockBasis {
    pub fn enumerate(n_wells: usize) -> Result<Self> {
        Self::enumerate_with_cap(n_wells, DEFAULT_DIMENSION_CAP)
    }

    pub fn enumerate_with_cap(n_wells: usize, cap: usize) -> Result<Self> {
        let dimension = sector_dimension(n_wells);
        if dimension == 0 || dimension > cap as u128 || n_wells > u8::MAX as usize {
            return Err(Error::Capacity { dimension, cap });
        }
        let n_modes = 2 * n_wells;
        let mut states = Vec::with_capacity(dimension as usize);
        let mut current = vec![0u8; n_modes];
        fill_descending(&mut current, 0, n_wells, &mut states);
        debug_assert_eq!(states.len() as u128, dimension);

        let mut compositions = vec![vec![0usize; n_modes + 1]; n_wells + 1];
        for (r, row) in compositions.iter_mut().enumerate() {
            row[0] = usize::from(r == 0);
            for (m, slot) in row.iter_mut().enumerate().skip(1) {
                *slot = binomial(r + m - 1, m - 1);
            }
        }

        Ok(Self {
            n_wells,
            states,
            compositions,
        })
    }

    pub fn n_wells(&self) -> usize {
        self.n_wells
    }

    pub fn n_modes(&self) -> usize {
        2 * self.n_wells
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[OccupationVector] {
        &self.states
    }

    pub fn unrank(&self, index: usize) -> &OccupationVector {
        &self.states[index]
    }

    /// Position of `counts` in the basis, computed combinatorially.
    /// Returns `None` for vectors outside the sector.
    pub fn rank(&self, counts: &[u8]) -> Option<usize> {
        if counts.len() != self.n_modes() {
            return None;
        }
        if counts.iter().map(|&c| c as usize).sum::<usize>() != self.n_wells {
            return None;
        }
        let n_modes = self.n_modes();
        let mut remaining = self.n_wells;
        let mut index = 0;
        for (k, &c) in counts.iter().enumerate().take(n_modes - 1) {
            let c = c as usize;
            let rest = n_modes - k - 1;
            for larger in (c + 1)..=remaining {
                index += self.compositions[remaining - larger][rest];
            }
            remaining -= c;
        }
        Some(index)
    }

    pub fn rank_of(&self, occupation: &OccupationVector) -> Option<usize> {
        self.rank(occupation.counts())
    }

    pub fn check_mode(&self, mode: ModeIndex) -> Result<()> {
        let index = mode.flat();
        if mode.well >= self.n_wells {
            return Err(Error::ModeOutOfRange {
                index,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }

    /// Index of the state with one ground-level atom in every well.
    pub fn all_ground_index(&self) -> usize {
        let counts: Vec<u8> = (0..self.n_modes()).map(|m| u8::from(m % 2 == 0)).collect();
        self.rank(&counts).expect("all-ground state is in the sector")
    }
}

fn fill_descending(
    current: &mut [u8],
    position: usize,
    remaining: usize,
    out: &mut Vec<OccupationVector>,
) {
    if position == current.len() - 1 {
        current[position] = remaining as u8;
        out.push(OccupationVector(current.to_vec()));
        return;
    }
    for c in (0..=remaining).rev() {
        current[position] = c as u8;
        fill_descending(current, position + 1, remaining - c, out);
    }
    current[position] = 0;
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    acc as usize
}
