//! The four-step lattice protocol as exact unitaries on the Fock basis.
//!
//! 1. one ground-level atom per well,
//! 2. cross-site splitter `exp(-i pi/2 (J_y^cross + chi J_z^2))`,
//! 3. phase imprint `exp(i sum_l theta_l n_{g,l})`,
//! 4. on-site splitter `exp(-i pi/2 J_y)`,
//!
//! followed by readout of the ground-level parity `(-1)^{N_g}`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    cross_site_jy, exp_unitary, jz_half_difference, onsite_jy, FockBasis, OperatorKind,
    OperatorMatrix, StateVector, C64, DEFAULT_DIMENSION_CAP,
};

/// Projections with a squared norm below this are treated as empty.
const DEGENERATE_PROBABILITY: f64 = 1e-30;

/// One phase per well, imprinted on the ground level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(phases: Vec<f64>) -> Self {
        Self(phases)
    }

    pub fn zeros(n_wells: usize) -> Self {
        Self(vec![0.0; n_wells])
    }

    /// Zero everywhere except at the listed sites.
    pub fn at_sites(n_wells: usize, sites: &[(usize, f64)]) -> Result<Self> {
        let mut phases = vec![0.0; n_wells];
        for &(site, phase) in sites {
            if site >= n_wells {
                return Err(Error::argument(format!(
                    "site {site} out of range for {n_wells} wells"
                )));
            }
            phases[site] += phase;
        }
        Ok(Self(phases))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Phases wrapped to `(-pi, pi]` for reporting.
    pub fn reduced(&self) -> Vec<f64> {
        self.0.iter().map(|&p| wrap_phase(p)).collect()
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut x = phase.rem_euclid(two_pi);
    if x > PI {
        x -= two_pi;
    }
    x
}

/// Dimensionless interaction strength in the first splitter.
///
/// Negative values describe attractive interactions; the protocol is defined
/// for any finite value and `0` is the linear splitter.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct InteractionStrength(f64);

impl InteractionStrength {
    pub const ZERO: Self = Self(0.0);

    pub fn new(chi: f64) -> Result<Self> {
        if !chi.is_finite() {
            return Err(Error::argument(format!("interaction strength {chi} is not finite")));
        }
        Ok(Self(chi))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn prepare_initial(basis: &Arc<FockBasis>) -> StateVector {
    StateVector::basis_state(Arc::clone(basis), basis.all_ground_index())
}

/// Moves every excited-level atom one well down the ring, `e_l -> e_{l-1}`.
pub fn shift_excited(basis: &FockBasis) -> OperatorMatrix {
    let n = basis.n_wells();
    let entries = basis.states().iter().enumerate().map(|(col, state)| {
        let mut counts = state.counts().to_vec();
        for l in 0..n {
            counts[2 * l + 1] = state.excited((l + 1) % n);
        }
        let row = basis.rank(&counts).expect("shift is a permutation of the sector");
        (row, col, C64::new(1.0, 0.0))
    });
    OperatorMatrix::from_entries(basis.len(), OperatorKind::Unitary, entries)
}

/// `exp(-i pi/2 (J_y^cross + chi J_z^2))`.
pub fn first_splitter(basis: &FockBasis, chi: InteractionStrength) -> Result<OperatorMatrix> {
    let mut generator = cross_site_jy(basis)?;
    if chi.value() != 0.0 {
        let jz = jz_half_difference(basis);
        generator = generator.add(&jz.matmul(&jz).scaled(C64::new(chi.value(), 0.0)));
    }
    exp_unitary(&generator, FRAC_PI_2)
}

/// `exp(-i pi/2 J_y)` with the on-site generator. Used both as the first half
/// of the physical cross-site splitter and as the final splitter.
pub fn onsite_pulse(basis: &FockBasis) -> Result<OperatorMatrix> {
    exp_unitary(&onsite_jy(basis)?, FRAC_PI_2)
}

pub fn final_splitter(basis: &FockBasis) -> Result<OperatorMatrix> {
    onsite_pulse(basis)
}

/// Diagonal `exp(i sum_l phases[l] n_{g,l})`.
pub fn phase_imprint(basis: &FockBasis, phases: &PhaseVector) -> Result<OperatorMatrix> {
    check_phase_length(basis.n_wells(), phases.as_slice())?;
    let op = OperatorMatrix::diagonal(basis.states().iter().map(|s| {
        let angle: f64 = phases
            .as_slice()
            .iter()
            .enumerate()
            .map(|(l, &p)| p * s.ground(l) as f64)
            .sum();
        C64::new(0.0, angle).exp()
    }));
    Ok(op)
}

fn check_phase_length(n_wells: usize, phases: &[f64]) -> Result<()> {
    if phases.len() != n_wells {
        return Err(Error::argument(format!(
            "expected {n_wells} phases, got {}",
            phases.len()
        )));
    }
    Ok(())
}

/// Projects onto states with exactly one atom in every well. Returns the
/// renormalized state and the squared norm of the projection.
pub fn postselect_one_per_site(state: &StateVector) -> Result<(StateVector, f64)> {
    let basis = Arc::clone(state.basis());
    let mut amplitudes = state.amplitudes().to_vec();
    let mut probability = 0.0;
    for (a, s) in amplitudes.iter_mut().zip(basis.states()) {
        if s.one_per_well() {
            probability += a.norm_sqr();
        } else {
            *a = C64::new(0.0, 0.0);
        }
    }
    if probability < DEGENERATE_PROBABILITY {
        return Err(Error::DegenerateProjection);
    }
    let scale = 1.0 / probability.sqrt();
    for a in &mut amplitudes {
        *a *= scale;
    }
    Ok((StateVector::new(basis, amplitudes)?, probability))
}

/// Probabilities of the parity outcomes `+1` and `-1`.
pub fn parity_distribution(state: &StateVector) -> (f64, f64) {
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (a, s) in state.amplitudes().iter().zip(state.basis().states()) {
        if s.ground_total() % 2 == 0 {
            plus += a.norm_sqr();
        } else {
            minus += a.norm_sqr();
        }
    }
    (plus, minus)
}

pub fn parity_expectation(state: &StateVector) -> f64 {
    let (plus, minus) = parity_distribution(state);
    plus - minus
}

/// Basis indices reachable from the initial state through the linear
/// cross-site splitter: each atom either stays at `g_l` or moves to
/// `e_{l-1}`. There are `2^N` of them.
pub fn splitter_branch_states(basis: &FockBasis) -> Vec<usize> {
    let n = basis.n_wells();
    let mut out: Vec<usize> = (0..1usize << n)
        .map(|moved| {
            let mut counts = vec![0u8; 2 * n];
            for l in 0..n {
                if moved >> l & 1 == 1 {
                    counts[2 * ((l + n - 1) % n) + 1] += 1;
                } else {
                    counts[2 * l] += 1;
                }
            }
            basis.rank(&counts).expect("branch state is in the sector")
        })
        .collect();
    out.sort_unstable();
    out
}

#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub n_wells: usize,
    pub phases: PhaseVector,
    pub chi: InteractionStrength,
    pub postselected: bool,
    pub final_state: StateVector,
    pub postselect_probability: f64,
}

impl ProtocolRun {
    pub fn parity_expectation(&self) -> f64 {
        parity_expectation(&self.final_state)
    }
}

/// Runs the full protocol by building each step as an operator.
///
/// Post-selection is applied right after the first splitter; the later steps
/// conserve the atom number of every well, so this gives the same conditional
/// state as selecting on the final measurement record.
pub fn run_protocol(
    n_wells: usize,
    phases: &PhaseVector,
    chi: InteractionStrength,
    postselect: bool,
) -> Result<ProtocolRun> {
    let basis = Arc::new(FockBasis::enumerate(n_wells)?);
    check_phase_length(n_wells, phases.as_slice())?;
    let split = prepare_initial(&basis).evolve(&first_splitter(&basis, chi)?);
    let (selected, probability) = if postselect {
        postselect_one_per_site(&split)?
    } else {
        (split, 1.0)
    };
    let final_state = selected
        .evolve(&phase_imprint(&basis, phases)?)
        .evolve(&final_splitter(&basis)?);
    Ok(ProtocolRun {
        n_wells,
        phases: phases.clone(),
        chi,
        postselected: postselect,
        final_state,
        postselect_probability: probability,
    })
}

/// How the one-atom-per-well outcomes are weighted in a correlator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostSelection {
    /// Every outcome counts.
    Off,
    /// Conditional expectation on the selected outcomes.
    Conditional,
    /// Selected outcomes only, rescaled by the fixed factor `2^{N-1}` (the
    /// inverse success probability of the linear splitter) instead of the
    /// measured success probability. Equal to `Conditional` at `chi = 0`.
    Nominal,
}

/// Precomputes everything that does not depend on the measurement phases so
/// that correlators for many phase vectors are cheap. Immutable once built.
#[derive(Clone, Debug)]
pub struct Simulator {
    basis: Arc<FockBasis>,
    chi: InteractionStrength,
    postselection: PostSelection,
    prepared: Vec<C64>,
    probability: f64,
    weight: f64,
    final_splitter: OperatorMatrix,
    ground_counts: Vec<u8>,
    parity: Vec<f64>,
}

impl Simulator {
    pub fn new(n_wells: usize, chi: InteractionStrength, postselection: PostSelection) -> Result<Self> {
        Self::with_cap(n_wells, chi, postselection, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(
        n_wells: usize,
        chi: InteractionStrength,
        postselection: PostSelection,
        dimension_cap: usize,
    ) -> Result<Self> {
        let basis = Arc::new(FockBasis::enumerate_with_cap(n_wells, dimension_cap)?);
        let split = prepare_initial(&basis).evolve(&first_splitter(&basis, chi)?);
        let (prepared, probability) = match postselection {
            PostSelection::Off => (split, 1.0),
            PostSelection::Conditional | PostSelection::Nominal => postselect_one_per_site(&split)?,
        };
        let weight = match postselection {
            PostSelection::Nominal => probability * 2f64.powi(n_wells as i32 - 1),
            _ => 1.0,
        };
        let ground_counts = basis
            .states()
            .iter()
            .flat_map(|s| (0..n_wells).map(move |l| s.ground(l)))
            .collect();
        let parity = basis
            .states()
            .iter()
            .map(|s| if s.ground_total() % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        Ok(Self {
            final_splitter: final_splitter(&basis)?,
            prepared: prepared.amplitudes().to_vec(),
            basis,
            chi,
            postselection,
            probability,
            weight,
            ground_counts,
            parity,
        })
    }

    pub fn n_wells(&self) -> usize {
        self.basis.n_wells()
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn chi(&self) -> InteractionStrength {
        self.chi
    }

    pub fn postselection(&self) -> PostSelection {
        self.postselection
    }

    /// Squared norm of the one-atom-per-well projection (1 without selection).
    pub fn postselect_probability(&self) -> f64 {
        self.probability
    }

    /// State before the phase imprint (normalized).
    pub fn prepared_state(&self) -> StateVector {
        StateVector::new(Arc::clone(&self.basis), self.prepared.clone())
            .expect("prepared state matches basis")
    }

    pub fn final_state(&self, phases: &[f64]) -> Result<StateVector> {
        check_phase_length(self.n_wells(), phases)?;
        Ok(StateVector::new(Arc::clone(&self.basis), self.evolve(phases))
            .expect("final state matches basis"))
    }

    fn evolve(&self, phases: &[f64]) -> Vec<C64> {
        let n = self.n_wells();
        let imprinted: Vec<C64> = self
            .prepared
            .iter()
            .zip(self.ground_counts.chunks_exact(n))
            .map(|(a, counts)| {
                let angle: f64 = counts
                    .iter()
                    .zip(phases)
                    .map(|(&c, &p)| c as f64 * p)
                    .sum();
                a * C64::new(0.0, angle).exp()
            })
            .collect();
        self.final_splitter.apply(&imprinted)
    }

    /// Parity correlator for a full phase vector, weighted according to the
    /// post-selection mode.
    ///
    /// # Panics
    /// If `phases` does not have one entry per well.
    pub fn parity_correlator(&self, phases: &[f64]) -> f64 {
        assert_eq!(phases.len(), self.n_wells(), "one phase per well");
        let expectation: f64 = self
            .evolve(phases)
            .iter()
            .zip(&self.parity)
            .map(|(a, p)| p * a.norm_sqr())
            .sum();
        self.weight * expectation
    }
}

/// Outcome of counting atoms in one well after the final splitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum WellOutcome {
    Empty,
    G,
    E,
    G2,
    E2,
    GE,
}

impl WellOutcome {
    fn from_counts(ground: u8, excited: u8) -> Self {
        match (ground, excited) {
            (0, 0) => Self::Empty,
            (1, 0) => Self::G,
            (0, 1) => Self::E,
            (2, 0) => Self::G2,
            (0, 2) => Self::E2,
            (1, 1) => Self::GE,
            _ => unreachable!("two-well sector holds at most two atoms per well"),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Empty => "0",
            Self::G => "G",
            Self::E => "E",
            Self::G2 => "G2",
            Self::E2 => "E2",
            Self::GE => "GE",
        }
    }
}

/// Event classes of the two-well readout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EventClass {
    /// Both wells occupied, same level: `GG`, `EE`.
    A,
    /// Both wells occupied, different levels: `GE`, `EG`.
    B,
    /// Both atoms in one well and the same level.
    C,
    /// Anything else (one well holding one atom in each level).
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TwoWellEvent {
    pub first: WellOutcome,
    pub second: WellOutcome,
}

impl TwoWellEvent {
    pub fn class(self) -> EventClass {
        use WellOutcome::*;
        match (self.first, self.second) {
            (G, G) | (E, E) => EventClass::A,
            (G, E) | (E, G) => EventClass::B,
            (G2 | E2, Empty) | (Empty, G2 | E2) => EventClass::C,
            _ => EventClass::Other,
        }
    }
}

impl fmt::Display for TwoWellEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.first.label(), self.second.label())
    }
}

/// Probability of every two-well readout event for the unselected linear
/// protocol with phases `(theta1, theta2)`.
pub fn two_well_event_probabilities(theta1: f64, theta2: f64) -> Result<BTreeMap<TwoWellEvent, f64>> {
    let run = run_protocol(
        2,
        &PhaseVector::new(vec![theta1, theta2]),
        InteractionStrength::ZERO,
        false,
    )?;
    Ok(event_probabilities(&run.final_state))
}

pub fn event_probabilities(state: &StateVector) -> BTreeMap<TwoWellEvent, f64> {
    let mut out = BTreeMap::new();
    for (a, s) in state.amplitudes().iter().zip(state.basis().states()) {
        let event = TwoWellEvent {
            first: WellOutcome::from_counts(s.ground(0), s.excited(0)),
            second: WellOutcome::from_counts(s.ground(1), s.excited(1)),
        };
        *out.entry(event).or_insert(0.0) += a.norm_sqr();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{well_number_operator, OperatorMatrix};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn basis(n: usize) -> Arc<FockBasis> {
        Arc::new(FockBasis::enumerate(n).unwrap())
    }

    fn amp(state: &StateVector, ket: &str) -> C64 {
        state.amplitude_of(ket).unwrap()
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn initial_state_is_one_ground_atom_per_well() {
        let b = basis(2);
        let psi = prepare_initial(&b);
        assert_eq!(amp(&psi, "1010"), C64::new(1.0, 0.0));
        assert_eq!(psi.norm_sqr(), 1.0);
        let psi3 = prepare_initial(&basis(3));
        assert_eq!(amp(&psi3, "101010"), C64::new(1.0, 0.0));
    }

    #[test]
    fn shift_permutation_order() {
        for n in 2..=6 {
            let b = basis(n);
            let s = shift_excited(&b);
            let mut power = OperatorMatrix::identity(b.len());
            for k in 1..=n {
                power = s.matmul(&power);
                let is_identity = power.max_abs_diff(&OperatorMatrix::identity(b.len())) == 0.0;
                assert_eq!(is_identity, k == n, "N={n}, power {k}");
            }
        }
    }

    #[test]
    fn shift_leaves_symmetric_occupation_alone() {
        let b = basis(2);
        let psi = StateVector::basis_state(Arc::clone(&b), b.rank(&[0, 1, 0, 1]).unwrap());
        let out = psi.evolve(&shift_excited(&b));
        assert_eq!(amp(&out, "0101"), C64::new(1.0, 0.0));
    }

    #[test]
    fn linear_splitter_on_two_wells() {
        // (c+_g1 + c+_e2)(c+_g2 + c+_e1)/2 |0>
        let b = basis(2);
        let out = prepare_initial(&b).evolve(&first_splitter(&b, InteractionStrength::ZERO).unwrap());
        for ket in ["1010", "1100", "0011", "0101"] {
            assert!(close(amp(&out, ket), C64::new(0.5, 0.0), 1e-14), "{ket}");
        }
        assert!((out.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weak_interaction_matches_first_order_expansion() {
        // 1/2 e^{-i pi chi/2}(|1010>+|0101>) + i chi/4 e^{-i pi chi/4}(|0101>-|1010>)
        //   + 1/2 e^{-i pi chi/4}(|1100>+|0011>) + O(chi^2)
        let b = basis(2);
        for chi in [1e-3, 1e-2, 5e-2] {
            let out = prepare_initial(&b)
                .evolve(&first_splitter(&b, InteractionStrength::new(chi).unwrap()).unwrap());
            let p = std::f64::consts::PI;
            let even = 0.5 * C64::new(0.0, -p * chi / 2.0).exp();
            let odd = C64::new(0.0, chi / 4.0) * C64::new(0.0, -p * chi / 4.0).exp();
            let hop = 0.5 * C64::new(0.0, -p * chi / 4.0).exp();
            let tol = 2.0 * chi * chi;
            assert!(close(amp(&out, "1010"), even - odd, tol), "chi={chi}");
            assert!(close(amp(&out, "0101"), even + odd, tol), "chi={chi}");
            assert!(close(amp(&out, "1100"), hop, tol), "chi={chi}");
            assert!(close(amp(&out, "0011"), hop, tol), "chi={chi}");
        }
    }

    #[test]
    fn phase_imprint_examples() {
        let b = basis(2);
        assert_eq!(
            phase_imprint(&b, &PhaseVector::zeros(2))
                .unwrap()
                .max_abs_diff(&OperatorMatrix::identity(b.len())),
            0.0
        );
        let (t1, t2) = (0.3, -1.1);
        let op = phase_imprint(&b, &PhaseVector::new(vec![t1, t2])).unwrap();
        let at = |ket: &str| {
            let counts: Vec<u8> = ket.bytes().map(|c| c - b'0').collect();
            let i = b.rank(&counts).unwrap();
            op.entry(i, i)
        };
        assert!(close(at("1010"), C64::new(0.0, t1 + t2).exp(), 1e-15));
        assert!(close(at("0101"), C64::new(1.0, 0.0), 1e-15));
        assert!(close(at("1100"), C64::new(0.0, t1).exp(), 1e-15));
        assert!(phase_imprint(&b, &PhaseVector::zeros(3)).is_err());
    }

    #[test]
    fn final_splitter_examples() {
        let b1 = basis(1);
        let out = prepare_initial(&b1).evolve(&final_splitter(&b1).unwrap());
        assert!(close(amp(&out, "10"), C64::new(FRAC_1_SQRT_2, 0.0), 1e-14));
        assert!(close(amp(&out, "01"), C64::new(FRAC_1_SQRT_2, 0.0), 1e-14));

        let b = basis(3);
        let u = final_splitter(&b).unwrap();
        for w in 0..3 {
            let nw = well_number_operator(&b, w).unwrap();
            assert!(u.commutator(&nw).max_abs_entry() < 1e-12);
        }
        let twice = u.matmul(&u);
        let direct = exp_unitary(&onsite_jy(&b).unwrap(), PI).unwrap();
        assert!(twice.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn postselection_probabilities() {
        for (n, expected) in [(2, 0.5), (4, 0.125)] {
            let b = basis(n);
            let split = prepare_initial(&b).evolve(&first_splitter(&b, InteractionStrength::ZERO).unwrap());
            let (_, p) = postselect_one_per_site(&split).unwrap();
            assert!((p - expected).abs() < 1e-12, "N={n}");
        }
        let b = basis(3);
        let psi = prepare_initial(&b);
        let (selected, p) = postselect_one_per_site(&psi).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(selected.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn postselection_of_empty_projection_fails() {
        let b = basis(2);
        let psi = StateVector::basis_state(Arc::clone(&b), 0); // |2000>
        assert!(matches!(postselect_one_per_site(&psi), Err(Error::DegenerateProjection)));
    }

    #[test]
    fn parity_of_unrotated_protocol() {
        let run = run_protocol(2, &PhaseVector::zeros(2), InteractionStrength::ZERO, false).unwrap();
        assert!((run.parity_expectation() - 1.0).abs() < 1e-12);
        assert_eq!(run.postselect_probability, 1.0);
    }

    #[test]
    fn odd_total_phase_sends_selected_state_to_odd_parity() {
        let run = run_protocol(2, &PhaseVector::new(vec![1.2, PI - 1.2]), InteractionStrength::ZERO, true)
            .unwrap();
        let s = &run.final_state;
        assert!(amp(s, "1010").norm() < 1e-12);
        assert!(amp(s, "0101").norm() < 1e-12);
        assert!((amp(s, "1001").norm_sqr() - 0.5).abs() < 1e-12);
        assert!((amp(s, "0110").norm_sqr() - 0.5).abs() < 1e-12);
        assert!((run.parity_expectation() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_phase_gives_even_odds() {
        let run = run_protocol(2, &PhaseVector::new(vec![0.5, PI / 2.0 - 0.5]), InteractionStrength::ZERO, true)
            .unwrap();
        let (plus, minus) = parity_distribution(&run.final_state);
        assert!((plus - 0.5).abs() < 1e-12 && (minus - 0.5).abs() < 1e-12);
        let (plus, minus) = parity_distribution(&prepare_initial(&basis(2)));
        assert_eq!((plus, minus), (1.0, 0.0));
    }

    #[test]
    fn three_well_branch_states() {
        let b = basis(3);
        let mut labels: Vec<String> = splitter_branch_states(&b)
            .into_iter()
            .map(|i| b.unrank(i).to_string())
            .collect();
        labels.sort();
        let mut expected = vec![
            "101010", "001011", "110010", "010011", "101100", "010101", "001101", "110100",
        ];
        expected.sort();
        assert_eq!(labels, expected);
    }

    #[test]
    fn simulator_agrees_with_operator_pipeline() {
        for &(n, chi, postselect) in &[(2, 0.0, false), (2, 0.2, true), (3, 0.3, true), (3, 0.0, false)] {
            let chi = InteractionStrength::new(chi).unwrap();
            let mode = if postselect { PostSelection::Conditional } else { PostSelection::Off };
            let sim = Simulator::new(n, chi, mode).unwrap();
            let phases = PhaseVector::new((0..n).map(|l| 0.4 * l as f64 - 0.7).collect());
            let run = run_protocol(n, &phases, chi, postselect).unwrap();
            let fast = sim.final_state(phases.as_slice()).unwrap();
            for (a, b) in fast.amplitudes().iter().zip(run.final_state.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
            assert!((sim.parity_correlator(phases.as_slice()) - run.parity_expectation()).abs() < 1e-12);
            assert_eq!(sim.postselect_probability(), run.postselect_probability);
        }
    }

    #[test]
    fn nominal_weighting_matches_conditional_without_interaction() {
        let phases = [0.3, 0.9, -0.4];
        let a = Simulator::new(3, InteractionStrength::ZERO, PostSelection::Conditional).unwrap();
        let b = Simulator::new(3, InteractionStrength::ZERO, PostSelection::Nominal).unwrap();
        assert!((a.parity_correlator(&phases) - b.parity_correlator(&phases)).abs() < 1e-12);
    }

    #[test]
    fn event_labels() {
        let e = TwoWellEvent {
            first: WellOutcome::G2,
            second: WellOutcome::Empty,
        };
        assert_eq!(e.to_string(), "G2,0");
        assert_eq!(e.class(), EventClass::C);
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(PhaseVector::new(vec![7.0]).reduced().len(), 1);
    }
}
