//! Parity correlators and the permutationally invariant Bell expression
//!
//! ```text
//! B_N = alpha S_0 + beta S_1 + (gamma/2) S_00 + delta S_01 + (epsilon/2) S_11
//! ```
//!
//! built from one-body sums `S_k` and ordered two-body sums `S_kl`.
//! A correlator `E(phases)` is the expectation of the global ground-level
//! parity after running the protocol with the given per-well phases; a
//! one-body term imprints a single setting at one well, a two-body term
//! imprints two settings at two wells and leaves the rest at zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{run_protocol, wrap_phase, InteractionStrength, PhaseVector, PostSelection, Simulator};

/// Local phase settings: `theta` is setting 0, `phi` setting 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementSettings {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl MeasurementSettings {
    pub fn new(theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if theta.len() != phi.len() || theta.is_empty() {
            return Err(Error::argument(format!(
                "settings need equal, nonzero lengths (theta {}, phi {})",
                theta.len(),
                phi.len()
            )));
        }
        Ok(Self { theta, phi })
    }

    /// Same pair of settings at every well.
    pub fn global(n_wells: usize, theta: f64, phi: f64) -> Self {
        Self {
            theta: vec![theta; n_wells],
            phi: vec![phi; n_wells],
        }
    }

    /// Two-well settings `theta_l = omega/2`, `phi_l = -3 omega/2`, for which
    /// `theta_1 + theta_2 = omega`, `phi_1 + theta_2 = -omega` and
    /// `phi_1 + phi_2 = -3 omega`.
    pub fn omega_family(omega: f64) -> Self {
        Self::global(2, omega / 2.0, -1.5 * omega)
    }

    /// Settings from the flat parameter layout `[theta..., phi...]`.
    pub fn from_parameters(params: &[f64]) -> Result<Self> {
        if !params.len().is_multiple_of(2) {
            return Err(Error::argument("parameter vector must have even length"));
        }
        let n = params.len() / 2;
        Self::new(params[..n].to_vec(), params[n..].to_vec())
    }

    pub fn to_parameters(&self) -> Vec<f64> {
        self.theta.iter().chain(&self.phi).copied().collect()
    }

    pub fn n_wells(&self) -> usize {
        self.theta.len()
    }

    /// Every phase wrapped to `(-pi, pi]`.
    pub fn reduced(&self) -> Self {
        Self {
            theta: self.theta.iter().map(|&x| wrap_phase(x)).collect(),
            phi: self.phi.iter().map(|&x| wrap_phase(x)).collect(),
        }
    }

    /// Relabels wells: well `l` of the result carries the settings of well
    /// `permutation[l]`.
    pub fn permuted(&self, permutation: &[usize]) -> Self {
        Self {
            theta: permutation.iter().map(|&i| self.theta[i]).collect(),
            phi: permutation.iter().map(|&i| self.phi[i]).collect(),
        }
    }
}

/// Coefficients of the Bell expression for `n` parties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TuraCoefficients {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub classical_bound: f64,
}

impl TuraCoefficients {
    pub fn for_parties(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::argument(format!("Bell expression needs at least 2 parties, got {n}")));
        }
        let nf = n as f64;
        let pairs = nf * (nf - 1.0);
        let alpha = pairs * (n.div_ceil(2) as f64 - nf / 2.0);
        Ok(Self {
            n,
            alpha,
            beta: alpha / nf,
            gamma: pairs / 2.0,
            delta: nf / 2.0,
            epsilon: -1.0,
            classical_bound: pairs / 2.0 * (n + 2).div_ceil(2) as f64,
        })
    }
}

/// One-body sums `s0, s1` and ordered two-body sums `s00, s01, s11`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationSet {
    pub n: usize,
    pub s0: f64,
    pub s1: f64,
    pub s00: f64,
    pub s01: f64,
    pub s11: f64,
}

/// A source of parity correlators for `n_wells` wells.
pub trait Correlator: Sync {
    fn n_wells(&self) -> usize;

    /// `E(phases)` for a full phase vector.
    fn correlator(&self, phases: &[f64]) -> f64;

    /// Short label used in reports.
    fn name(&self) -> String;

    /// Whether outcomes are restricted to one atom per well.
    fn postselected(&self) -> bool {
        true
    }

    fn chi(&self) -> f64 {
        0.0
    }

    fn correlation_set(&self, settings: &MeasurementSettings) -> Result<CorrelationSet> {
        let n = self.n_wells();
        check_settings(n, settings)?;
        // (site, setting) pairs for every term; a second entry of None marks
        // a one-body term
        type Term = (usize, usize, Option<(usize, usize)>);
        let mut terms: Vec<Term> = Vec::new();
        for k in 0..n {
            terms.push((k, 0, None));
            terms.push((k, 1, None));
        }
        for k in 0..n {
            for l in 0..n {
                if k != l {
                    terms.push((k, 0, Some((l, 0))));
                    terms.push((k, 0, Some((l, 1))));
                    terms.push((k, 1, Some((l, 1))));
                }
            }
        }
        let setting = |site: usize, which: usize| {
            if which == 0 {
                settings.theta[site]
            } else {
                settings.phi[site]
            }
        };
        let values: Vec<f64> = terms
            .par_iter()
            .map(|&(k, a, second)| {
                let mut phases = vec![0.0; n];
                phases[k] = setting(k, a);
                if let Some((l, b)) = second {
                    phases[l] = setting(l, b);
                }
                self.correlator(&phases)
            })
            .collect();
        let mut set = CorrelationSet {
            n,
            s0: 0.0,
            s1: 0.0,
            s00: 0.0,
            s01: 0.0,
            s11: 0.0,
        };
        for (&(_, a, second), value) in terms.iter().zip(values) {
            let slot = match (a, second.map(|(_, b)| b)) {
                (0, None) => &mut set.s0,
                (_, None) => &mut set.s1,
                (0, Some(0)) => &mut set.s00,
                (0, Some(_)) => &mut set.s01,
                _ => &mut set.s11,
            };
            *slot += value;
        }
        Ok(set)
    }
}

fn check_settings(n: usize, settings: &MeasurementSettings) -> Result<()> {
    if settings.theta.len() != n || settings.phi.len() != n {
        return Err(Error::argument(format!(
            "settings for {} wells given to a {n}-well evaluator",
            settings.theta.len()
        )));
    }
    Ok(())
}

/// `cos(sum phases)`, the correlator of the post-selected linear protocol.
pub fn closed_form_correlator(phases: &PhaseVector) -> f64 {
    phases.as_slice().iter().sum::<f64>().cos()
}

/// Correlator from a fresh protocol run.
pub fn parity_correlator(
    n_wells: usize,
    phases: &PhaseVector,
    chi: InteractionStrength,
    postselect: bool,
) -> Result<f64> {
    Ok(run_protocol(n_wells, phases, chi, postselect)?.parity_expectation())
}

/// Analytic post-selected correlators at zero interaction. Works for any
/// number of wells in `O(N)` per correlation set.
#[derive(Clone, Copy, Debug)]
pub struct ClosedForm {
    n_wells: usize,
}

impl ClosedForm {
    pub fn new(n_wells: usize) -> Result<Self> {
        if n_wells == 0 {
            return Err(Error::argument("closed form needs at least one well"));
        }
        Ok(Self { n_wells })
    }
}

impl Correlator for ClosedForm {
    fn n_wells(&self) -> usize {
        self.n_wells
    }

    fn correlator(&self, phases: &[f64]) -> f64 {
        phases.iter().sum::<f64>().cos()
    }

    fn name(&self) -> String {
        "closed_form".into()
    }

    /// Uses `sum_{k != l} cos(a_k + b_l) = Re(A B - sum_k e^{i(a_k + b_k)})`
    /// with `A = sum_k e^{i a_k}`.
    fn correlation_set(&self, settings: &MeasurementSettings) -> Result<CorrelationSet> {
        check_settings(self.n_wells, settings)?;
        let phasor = |x: f64| Complex64::from_polar(1.0, x);
        let a: Complex64 = settings.theta.iter().map(|&x| phasor(x)).sum();
        let b: Complex64 = settings.phi.iter().map(|&x| phasor(x)).sum();
        let diag = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
            settings
                .theta
                .iter()
                .zip(&settings.phi)
                .map(|(&t, &p)| f(t, p).cos())
                .sum()
        };
        Ok(CorrelationSet {
            n: self.n_wells,
            s0: a.re,
            s1: b.re,
            s00: (a * a).re - diag(&|t, _| 2.0 * t),
            s01: (a * b).re - diag(&|t, p| t + p),
            s11: (b * b).re - diag(&|_, p| 2.0 * p),
        })
    }
}

/// Correlators from exact simulation.
#[derive(Clone, Debug)]
pub struct FullSimulation {
    simulator: Simulator,
}

impl FullSimulation {
    pub fn new(simulator: Simulator) -> Self {
        Self { simulator }
    }

    pub fn build(
        n_wells: usize,
        chi: InteractionStrength,
        postselection: PostSelection,
        dimension_cap: usize,
    ) -> Result<Self> {
        Ok(Self::new(Simulator::with_cap(n_wells, chi, postselection, dimension_cap)?))
    }

    pub fn simulator(&self) -> &Simulator {
        &self.simulator
    }
}

impl Correlator for FullSimulation {
    fn n_wells(&self) -> usize {
        self.simulator.n_wells()
    }

    fn correlator(&self, phases: &[f64]) -> f64 {
        self.simulator.parity_correlator(phases)
    }

    fn name(&self) -> String {
        let mode = match self.simulator.postselection() {
            PostSelection::Off => "unselected",
            PostSelection::Conditional => "conditional",
            PostSelection::Nominal => "nominal",
        };
        format!("full_simulation({mode}, chi={})", self.simulator.chi().value())
    }

    fn postselected(&self) -> bool {
        self.simulator.postselection() != PostSelection::Off
    }

    fn chi(&self) -> f64 {
        self.simulator.chi().value()
    }
}

pub fn bell_value(coeffs: &TuraCoefficients, corr: &CorrelationSet) -> Result<f64> {
    if coeffs.n != corr.n {
        return Err(Error::argument(format!(
            "coefficients for {} parties applied to correlations of {}",
            coeffs.n, corr.n
        )));
    }
    Ok(coeffs.alpha * corr.s0
        + coeffs.beta * corr.s1
        + coeffs.gamma / 2.0 * corr.s00
        + coeffs.delta * corr.s01
        + coeffs.epsilon / 2.0 * corr.s11)
}

/// Bell value of `settings` under `evaluator`.
pub fn evaluate(evaluator: &dyn Correlator, settings: &MeasurementSettings) -> Result<f64> {
    let coeffs = TuraCoefficients::for_parties(evaluator.n_wells())?;
    bell_value(&coeffs, &evaluator.correlation_set(settings)?)
}

/// `E(t1,t2) - E(p1,p2) + E(p1,t2) + E(t1,p2)` for two wells.
pub fn chsh_value(theta1: f64, theta2: f64, phi1: f64, phi2: f64, evaluator: &dyn Correlator) -> Result<f64> {
    if evaluator.n_wells() != 2 {
        return Err(Error::argument("CHSH needs a two-well evaluator"));
    }
    let e = |a: f64, b: f64| evaluator.correlator(&[a, b]);
    Ok(e(theta1, theta2) - e(phi1, phi2) + e(phi1, theta2) + e(theta1, phi2))
}

/// Largest party count for the exhaustive local-strategy search.
pub const LHV_MAX_PARTIES: usize = 7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LhvMinimum {
    pub minimum: f64,
    /// `minimum + classical_bound`; zero when the bound is tight.
    pub gap: f64,
    /// Outcomes `(m_0, m_1)` per party of the first minimizing strategy.
    pub strategy: Vec<(i8, i8)>,
}

/// Minimum of the Bell expression over deterministic local strategies.
pub fn lhv_minimum(coeffs: &TuraCoefficients) -> Result<LhvMinimum> {
    let n = coeffs.n;
    if n > LHV_MAX_PARTIES {
        return Err(Error::EnumerationLimit {
            parties: n,
            limit: LHV_MAX_PARTIES,
        });
    }
    let mut best: Option<(f64, usize)> = None;
    for code in 0..1usize << (2 * n) {
        let outcome = |bit: usize| if code >> bit & 1 == 1 { -1.0 } else { 1.0 };
        let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (m0, m1) = (outcome(2 * i), outcome(2 * i + 1));
            a += m0;
            b += m1;
            ab += m0 * m1;
        }
        let nf = n as f64;
        let corr = CorrelationSet {
            n,
            s0: a,
            s1: b,
            s00: a * a - nf,
            s01: a * b - ab,
            s11: b * b - nf,
        };
        let value = bell_value(coeffs, &corr)?;
        if best.is_none_or(|(v, _)| value < v) {
            best = Some((value, code));
        }
    }
    let (minimum, code) = best.expect("at least one strategy");
    let strategy = (0..n)
        .map(|i| {
            let m = |bit: usize| if code >> bit & 1 == 1 { -1 } else { 1 };
            (m(2 * i), m(2 * i + 1))
        })
        .collect();
    Ok(LhvMinimum {
        minimum,
        gap: minimum + coeffs.classical_bound,
        strategy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelativeViolation {
    pub xi: f64,
    pub violation: bool,
}

/// `classical_bound / |bell_value|`, flagged as a violation when
/// `bell_value < -classical_bound`.
pub fn relative_violation(bell_value: f64, classical_bound: f64) -> Result<RelativeViolation> {
    if bell_value == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(RelativeViolation {
        xi: classical_bound / bell_value.abs(),
        violation: bell_value < -classical_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    FreePhases,
    GlobalPhases,
}

impl PhaseMode {
    pub fn label(self) -> &'static str {
        match self {
            Self::FreePhases => "free_phases",
            Self::GlobalPhases => "global_phases",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationSummary {
    pub n: usize,
    pub bell_value: f64,
    pub classical_bound: f64,
    /// `classical_bound / |bell_value|`; `None` when the value is zero.
    pub xi: Option<f64>,
    pub violation: bool,
    pub settings: MeasurementSettings,
    pub mode: PhaseMode,
    pub postselected: bool,
    pub chi: f64,
    pub evaluator: String,
    pub generations_to_converge: Option<usize>,
}

impl ViolationSummary {
    /// Evaluates `settings` afresh and packages the result.
    pub fn evaluate(
        evaluator: &dyn Correlator,
        settings: MeasurementSettings,
        mode: PhaseMode,
    ) -> Result<Self> {
        let coeffs = TuraCoefficients::for_parties(evaluator.n_wells())?;
        let value = bell_value(&coeffs, &evaluator.correlation_set(&settings)?)?;
        let ratio = relative_violation(value, coeffs.classical_bound).ok();
        Ok(Self {
            n: coeffs.n,
            bell_value: value,
            classical_bound: coeffs.classical_bound,
            xi: ratio.map(|r| r.xi),
            violation: value < -coeffs.classical_bound,
            settings,
            mode,
            postselected: evaluator.postselected(),
            chi: evaluator.chi(),
            evaluator: evaluator.name(),
            generations_to_converge: None,
        })
    }
}

/// Period of every correlator in each phase.
pub const PHASE_PERIOD: f64 = 2.0 * PI;
