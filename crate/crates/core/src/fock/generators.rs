//! Second-quantized operators on the `N`-particle sector.
//!
//! Ladder operators use the real, positive convention
//! `c^dagger |n> = sqrt(n + 1) |n + 1>` and `c |n> = sqrt(n) |n - 1>`.

use super::{FockBasis, ModeIndex, OperatorKind, OperatorMatrix, C64};
use crate::error::Result;

/// `c^dagger_to c_from`. For `to == from` this is the number operator.
pub fn hopping(basis: &FockBasis, to: ModeIndex, from: ModeIndex) -> Result<OperatorMatrix> {
    basis.check_mode(to)?;
    basis.check_mode(from)?;
    let (to, from) = (to.flat(), from.flat());
    let mut entries = Vec::new();
    let mut scratch = Vec::with_capacity(basis.n_modes());
    for (col, state) in basis.states().iter().enumerate() {
        let counts = state.counts();
        if counts[from] == 0 {
            continue;
        }
        scratch.clear();
        scratch.extend_from_slice(counts);
        let mut amplitude = (scratch[from] as f64).sqrt();
        scratch[from] -= 1;
        amplitude *= (scratch[to] as f64 + 1.0).sqrt();
        scratch[to] += 1;
        let row = basis.rank(&scratch).expect("hopping stays inside the sector");
        entries.push((row, col, C64::new(amplitude, 0.0)));
    }
    Ok(OperatorMatrix::from_entries(basis.len(), OperatorKind::General, entries))
}

pub fn number_operator(basis: &FockBasis, mode: ModeIndex) -> Result<OperatorMatrix> {
    basis.check_mode(mode)?;
    Ok(OperatorMatrix::real_diagonal(
        basis.states().iter().map(|s| s.get(mode) as f64),
    ))
}

/// Atoms in one well, both levels.
pub fn well_number_operator(basis: &FockBasis, well: usize) -> Result<OperatorMatrix> {
    basis.check_mode(ModeIndex::ground(well))?;
    Ok(OperatorMatrix::real_diagonal(
        basis.states().iter().map(|s| s.in_well(well) as f64),
    ))
}

pub fn total_number_operator(basis: &FockBasis) -> OperatorMatrix {
    OperatorMatrix::real_diagonal(basis.states().iter().map(|s| s.total() as f64))
}

/// `(c^dagger_a c_b - c^dagger_b c_a) / 2i` summed over the given pairs.
fn antisymmetric_coupling(
    basis: &FockBasis,
    pairs: impl IntoIterator<Item = (ModeIndex, ModeIndex)>,
) -> Result<OperatorMatrix> {
    let half_over_i = C64::new(0.0, -0.5);
    let mut sum: Option<OperatorMatrix> = None;
    for (a, b) in pairs {
        let forward = hopping(basis, a, b)?;
        let term = forward.sub(&forward.adjoint()).scaled(half_over_i);
        sum = Some(match sum {
            Some(acc) => acc.add(&term),
            None => term,
        });
    }
    let op = sum.unwrap_or_else(|| OperatorMatrix::real_diagonal(vec![0.0; basis.len()]));
    op.with_kind(OperatorKind::Hermitian)
}

/// Generator of the splitter between wells: couples the ground level of well
/// `l` to the excited level of well `l - 1 (mod N)`.
///
/// The ring direction matches [`crate::protocol::shift_excited`]: with `S` the
/// shift, this generator is `S J_y^onsite S^-1`.
pub fn cross_site_jy(basis: &FockBasis) -> Result<OperatorMatrix> {
    let n = basis.n_wells();
    antisymmetric_coupling(
        basis,
        (0..n).map(|l| (ModeIndex::ground(l), ModeIndex::excited((l + n - 1) % n))),
    )
}

/// `J_y = sum_l sigma_y^(l) / 2`, coupling the two levels inside each well.
pub fn onsite_jy(basis: &FockBasis) -> Result<OperatorMatrix> {
    antisymmetric_coupling(
        basis,
        (0..basis.n_wells()).map(|l| (ModeIndex::ground(l), ModeIndex::excited(l))),
    )
}

/// `J_z = (N_g - N_e) / 2`.
pub fn jz_half_difference(basis: &FockBasis) -> OperatorMatrix {
    OperatorMatrix::real_diagonal(
        basis
            .states()
            .iter()
            .map(|s| 0.5 * (s.ground_total() as f64 - s.excited_total() as f64)),
    )
}

/// Global ground-level parity `(-1)^{N_g}`.
pub fn parity_operator(basis: &FockBasis) -> OperatorMatrix {
    OperatorMatrix::real_diagonal(basis.states().iter().map(|s| {
        if s.ground_total() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }))
}
