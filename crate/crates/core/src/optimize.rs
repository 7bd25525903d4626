//! Minimization of the Bell value over measurement phases, scaling scans,
//! violation maps and interaction scans.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{
    chsh_value, evaluate, ClosedForm, Correlator, FullSimulation, MeasurementSettings, PhaseMode,
    TuraCoefficients, ViolationSummary, PHASE_PERIOD,
};
use crate::error::{Error, Result};
use crate::fock::sector_dimension;
use crate::protocol::{wrap_phase, InteractionStrength, PostSelection};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Standard deviation of Gaussian mutations, in radians.
    pub mutation_sigma: f64,
    /// Factor applied to the mutation width after each generation.
    pub mutation_decay: f64,
    pub crossover_rate: f64,
    pub elite_count: usize,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            mutation_sigma: 0.3,
            mutation_decay: 0.99,
            crossover_rate: 0.7,
            elite_count: 2,
            tournament_size: 3,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Argument(msg));
        if self.population < 4 {
            return fail(format!("population must be at least 4, got {}", self.population));
        }
        if self.elite_count >= self.population {
            return fail(format!(
                "elite count {} must be below the population {}",
                self.elite_count, self.population
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return fail(format!("crossover rate {} outside [0, 1]", self.crossover_rate));
        }
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma >= 0.0) {
            return fail(format!("mutation sigma {} must be finite and non-negative", self.mutation_sigma));
        }
        if !(self.mutation_decay > 0.0 && self.mutation_decay <= 1.0) {
            return fail(format!("mutation decay {} outside (0, 1]", self.mutation_decay));
        }
        if self.tournament_size == 0 {
            return fail("tournament size must be positive".into());
        }
        Ok(())
    }
}

/// Closed interval sampled at `steps` equally spaced points, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const FULL_TURN: Self = Self { min: -PI, max: PI };

    pub fn point(&self, i: usize, steps: usize) -> f64 {
        if i + 1 == steps {
            return self.max;
        }
        self.min + (self.max - self.min) * i as f64 / (steps - 1) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub theta_range: Interval,
    pub phi_range: Interval,
    pub steps: usize,
}

impl SweepGrid {
    pub fn square(steps: usize) -> Self {
        Self {
            theta_range: Interval::FULL_TURN,
            phi_range: Interval::FULL_TURN,
            steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::argument(format!("grid needs at least 2 steps, got {}", self.steps)));
        }
        for r in [self.theta_range, self.phi_range] {
            if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
                return Err(Error::argument(format!("invalid range [{}, {}]", r.min, r.max)));
            }
        }
        Ok(())
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.theta_range.point(i, self.steps)).collect()
    }

    pub fn phis(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.phi_range.point(i, self.steps)).collect()
    }

    /// Grid points, theta outer.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let phis = self.phis();
        self.thetas()
            .into_iter()
            .flat_map(|t| phis.iter().map(move |&p| (t, p)))
            .collect()
    }
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self::square(256)
    }
}

/// Grid used to seed the free-phase search with the best global-phase point.
const SEED_GRID_STEPS: usize = 65;
/// Golden-section stopping width.
const LINE_TOLERANCE: f64 = 1e-10;
/// Samples per coordinate before the golden-section step.
const LINE_SAMPLES: usize = 16;
const MAX_SWEEPS: usize = 500;

fn objective(evaluator: &dyn Correlator, coeffs: &TuraCoefficients, params: &[f64]) -> f64 {
    let settings = MeasurementSettings::from_parameters(params).expect("even parameter count");
    let corr = evaluator
        .correlation_set(&settings)
        .expect("settings sized for the evaluator");
    crate::bell::bell_value(coeffs, &corr).expect("matching party count")
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > LINE_TOLERANCE {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Coordinate descent: along each coordinate, samples `LINE_SAMPLES` points
/// of the window `x +- half_width`, then golden-section searches around the
/// best sample. Moves are accepted only when they lower the value, so the
/// result never exceeds the starting value.
fn coordinate_descent(f: &dyn Fn(&[f64]) -> f64, start: &[f64], half_width: f64) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut best = f(&x);
    for _ in 0..MAX_SWEEPS {
        let before = best;
        for i in 0..x.len() {
            let centre = x[i];
            let line = |v: f64| {
                let mut probe = x.clone();
                probe[i] = v;
                f(&probe)
            };
            let step = 2.0 * half_width / LINE_SAMPLES as f64;
            let mut sample_best = (centre, best);
            for k in 0..LINE_SAMPLES {
                let v = centre - half_width + step * k as f64;
                let fv = line(v);
                if fv < sample_best.1 {
                    sample_best = (v, fv);
                }
            }
            let (v, fv) = golden_section(&line, sample_best.0 - step, sample_best.0 + step);
            let (v, fv) = if fv < sample_best.1 { (v, fv) } else { sample_best };
            if fv < best {
                x[i] = v;
                best = fv;
            }
        }
        if before - best <= 1e-15 * best.abs().max(1.0) {
            break;
        }
    }
    (x, best)
}

/// Best grid point of the global-phase map, without refinement. Ties go to
/// the lexicographically lowest `(theta, phi)`.
pub fn grid_minimum(n_wells: usize, grid: &SweepGrid, evaluator: &dyn Correlator) -> Result<ViolationSummary> {
    grid.validate()?;
    check_evaluator(n_wells, evaluator)?;
    let coeffs = TuraCoefficients::for_parties(n_wells)?;
    let points = grid.points();
    let values: Vec<f64> = points
        .par_iter()
        .map(|&(t, p)| objective(evaluator, &coeffs, &global_params(n_wells, t, p)))
        .collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    let (t, p) = points[best];
    summarize(evaluator, MeasurementSettings::global(n_wells, t, p), PhaseMode::GlobalPhases)
}

/// Grid search over equal phases at every well followed by coordinate
/// descent in `(theta, phi)` within one cell of the best grid point.
pub fn optimize_global_phases(n_wells: usize, grid: &SweepGrid, evaluator: &dyn Correlator) -> Result<ViolationSummary> {
    let coarse = grid_minimum(n_wells, grid, evaluator)?;
    let coeffs = TuraCoefficients::for_parties(n_wells)?;
    let f = |x: &[f64]| objective(evaluator, &coeffs, &global_params(n_wells, x[0], x[1]));
    let cell = [grid.theta_range, grid.phi_range]
        .iter()
        .map(|r| (r.max - r.min) / (grid.steps - 1) as f64)
        .fold(0.0, f64::max)
        .max(LINE_TOLERANCE);
    let start = [coarse.settings.theta[0], coarse.settings.phi[0]];
    let (x, _) = coordinate_descent(&f, &start, cell);
    let settings = MeasurementSettings::global(n_wells, wrap_phase(x[0]), wrap_phase(x[1]));
    let refined = summarize(evaluator, settings, PhaseMode::GlobalPhases)?;
    Ok(if refined.bell_value <= coarse.bell_value { refined } else { coarse })
}

pub fn optimize_free_phases(n_wells: usize, config: &GaConfig, evaluator: &dyn Correlator) -> Result<ViolationSummary> {
    optimize_free_phases_seeded(n_wells, config, evaluator, &[])
}

/// Genetic search over all `2N` phases, refined by coordinate descent.
///
/// The initial population contains the refined global-phase optimum and any
/// extra `seeds` (flat `[theta..., phi...]` vectors); the rest is uniform on
/// `(-pi, pi]`. The result is therefore never worse than the global-phase
/// optimum.
pub fn optimize_free_phases_seeded(
    n_wells: usize,
    config: &GaConfig,
    evaluator: &dyn Correlator,
    seeds: &[Vec<f64>],
) -> Result<ViolationSummary> {
    config.validate()?;
    check_evaluator(n_wells, evaluator)?;
    let coeffs = TuraCoefficients::for_parties(n_wells)?;
    let len = 2 * n_wells;
    if let Some(bad) = seeds.iter().find(|s| s.len() != len) {
        return Err(Error::argument(format!("seed has {} parameters, expected {len}", bad.len())));
    }
    let f = |x: &[f64]| objective(evaluator, &coeffs, x);

    let global = optimize_global_phases(n_wells, &SweepGrid::square(SEED_GRID_STEPS), evaluator)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<Vec<f64>> = std::iter::once(global.settings.to_parameters())
        .chain(seeds.iter().cloned())
        .take(config.population)
        .collect();
    while population.len() < config.population {
        population.push((0..len).map(|_| PI - rng.gen::<f64>() * PHASE_PERIOD).collect());
    }
    let mut fitness: Vec<f64> = population.par_iter().map(|x| f(x)).collect();

    let mut sigma = config.mutation_sigma;
    let mut best_value = fitness.iter().copied().fold(f64::INFINITY, f64::min);
    let mut converged_at = 0;
    let gene_rate = 1.0 / len as f64;
    for generation in 1..=config.generations {
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
        let mut next: Vec<Vec<f64>> = order[..config.elite_count]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("valid width");
        while next.len() < config.population {
            let a = tournament(&fitness, config.tournament_size, &mut rng);
            let b = tournament(&fitness, config.tournament_size, &mut rng);
            let mut child = population[a].clone();
            if rng.gen::<f64>() < config.crossover_rate {
                for (gene, &other) in child.iter_mut().zip(&population[b]) {
                    if rng.gen::<bool>() {
                        *gene = other;
                    }
                }
            }
            for gene in &mut child {
                if rng.gen::<f64>() < gene_rate {
                    *gene = wrap_phase(*gene + noise.sample(&mut rng));
                }
            }
            next.push(child);
        }
        population = next;
        fitness = population.par_iter().map(|x| f(x)).collect();
        let generation_best = fitness.iter().copied().fold(f64::INFINITY, f64::min);
        if generation_best < best_value - 1e-12 {
            converged_at = generation;
        }
        best_value = best_value.min(generation_best);
        sigma *= config.mutation_decay;
    }

    let mut best = 0;
    for (i, &v) in fitness.iter().enumerate() {
        if v < fitness[best] {
            best = i;
        }
    }
    let (x, _) = coordinate_descent(&f, &population[best], PI);
    let settings = MeasurementSettings::from_parameters(&x)?.reduced();
    let mut summary = summarize(evaluator, settings, PhaseMode::FreePhases)?;
    if summary.bell_value > global.bell_value {
        summary = ViolationSummary {
            mode: PhaseMode::FreePhases,
            ..global
        };
    }
    summary.generations_to_converge = Some(converged_at);
    Ok(summary)
}

fn tournament(fitness: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let challenger = rng.gen_range(0..fitness.len());
        if fitness[challenger] < fitness[best] || (fitness[challenger] == fitness[best] && challenger < best) {
            best = challenger;
        }
    }
    best
}

fn global_params(n_wells: usize, theta: f64, phi: f64) -> Vec<f64> {
    let mut v = vec![theta; n_wells];
    v.extend(std::iter::repeat_n(phi, n_wells));
    v
}

fn check_evaluator(n_wells: usize, evaluator: &dyn Correlator) -> Result<()> {
    if evaluator.n_wells() != n_wells {
        return Err(Error::argument(format!(
            "evaluator is for {} wells, asked for {n_wells}",
            evaluator.n_wells()
        )));
    }
    Ok(())
}

fn summarize(evaluator: &dyn Correlator, settings: MeasurementSettings, mode: PhaseMode) -> Result<ViolationSummary> {
    ViolationSummary::evaluate(evaluator, settings, mode)
}

/// Which correlators to use for a scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    ClosedForm,
    FullSimulation { postselection: PostSelection, chi: f64 },
}

impl EvaluatorKind {
    pub fn build(self, n_wells: usize, dimension_cap: usize) -> Result<Box<dyn Correlator>> {
        Ok(match self {
            Self::ClosedForm => Box::new(ClosedForm::new(n_wells)?),
            Self::FullSimulation { postselection, chi } => Box::new(FullSimulation::build(
                n_wells,
                InteractionStrength::new(chi)?,
                postselection,
                dimension_cap,
            )?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanOptions {
    pub ga: GaConfig,
    pub seed_grid: SweepGrid,
    pub dimension_cap: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            ga: GaConfig::default(),
            seed_grid: SweepGrid::square(SEED_GRID_STEPS),
            dimension_cap: crate::fock::DEFAULT_DIMENSION_CAP,
        }
    }
}

/// One optimized summary per `N` in `n_min..=n_max`.
pub fn scaling_scan(
    n_min: usize,
    n_max: usize,
    mode: PhaseMode,
    kind: EvaluatorKind,
    options: &ScanOptions,
) -> Result<Vec<ViolationSummary>> {
    if n_min < 2 || n_min > n_max {
        return Err(Error::argument(format!("need 2 <= n_min <= n_max, got {n_min}..{n_max}")));
    }
    if let EvaluatorKind::FullSimulation { .. } = kind {
        let dimension = sector_dimension(n_max);
        if dimension > options.dimension_cap as u128 {
            return Err(Error::Capacity {
                dimension,
                cap: options.dimension_cap,
            });
        }
    }
    (n_min..=n_max)
        .map(|n| {
            let evaluator = kind.build(n, options.dimension_cap)?;
            match mode {
                PhaseMode::FreePhases => optimize_free_phases(n, &options.ga, evaluator.as_ref()),
                PhaseMode::GlobalPhases => optimize_global_phases(n, &options.seed_grid, evaluator.as_ref()),
            }
        })
        .collect()
}

/// Least-squares fit of `xi = c / N^p` in log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub c: f64,
    pub p: f64,
    /// Root-mean-square residual of `ln xi`.
    pub residual: f64,
}

pub fn power_law_fit(points: &[(usize, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::argument("power-law fit needs at least two points"));
    }
    if points.iter().any(|&(n, xi)| n == 0 || xi.is_nan() || xi <= 0.0) {
        return Err(Error::argument("power-law fit needs positive N and xi"));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, xi)| xi.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::argument("power-law fit needs at least two distinct N"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(PowerLawFit {
        c: intercept.exp(),
        p: -slope,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MapCell {
    pub theta: f64,
    pub phi: f64,
    pub bell_value: f64,
    pub xi: Option<f64>,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationMap {
    pub n: usize,
    pub grid: SweepGrid,
    pub classical_bound: f64,
    /// Row-major, theta outer.
    pub cells: Vec<MapCell>,
}

impl ViolationMap {
    pub fn area_fraction(&self) -> f64 {
        self.cells.iter().filter(|c| c.violation).count() as f64 / self.cells.len() as f64
    }

    pub fn cell(&self, theta_index: usize, phi_index: usize) -> &MapCell {
        &self.cells[theta_index * self.grid.steps + phi_index]
    }
}

/// Bell value with the same `(theta, phi)` at every well, over the grid.
pub fn violation_map(n_wells: usize, grid: &SweepGrid, evaluator: &dyn Correlator) -> Result<ViolationMap> {
    grid.validate()?;
    check_evaluator(n_wells, evaluator)?;
    let coeffs = TuraCoefficients::for_parties(n_wells)?;
    let cells = grid
        .points()
        .par_iter()
        .map(|&(theta, phi)| {
            let value = objective(evaluator, &coeffs, &global_params(n_wells, theta, phi));
            MapCell {
                theta,
                phi,
                bell_value: value,
                xi: (value != 0.0).then(|| coeffs.classical_bound / value.abs()),
                violation: value < -coeffs.classical_bound,
            }
        })
        .collect();
    Ok(ViolationMap {
        n: n_wells,
        grid: *grid,
        classical_bound: coeffs.classical_bound,
        cells,
    })
}

/// `(4 - chi^2) / sqrt 2`, the two-well reference curve.
pub fn two_well_interaction_reference(chi: f64) -> f64 {
    (4.0 - chi * chi) / 2f64.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionPoint {
    pub chi: f64,
    pub bell_value: f64,
    pub bell_magnitude: f64,
    pub settings: MeasurementSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionOptions {
    /// Re-optimize the phases at every `chi` instead of keeping the
    /// zero-interaction optimum.
    pub optimize: bool,
    pub normalization: PostSelection,
    pub ga: GaConfig,
}

impl Default for InteractionOptions {
    fn default() -> Self {
        Self {
            optimize: false,
            normalization: PostSelection::Nominal,
            ga: GaConfig::default(),
        }
    }
}

/// Phases that optimize the linear protocol: the `omega = pi/4` CHSH
/// settings for two wells, the free-phase optimum otherwise.
pub fn linear_optimal_settings(n_wells: usize, ga: &GaConfig) -> Result<MeasurementSettings> {
    if n_wells == 2 {
        return Ok(MeasurementSettings::omega_family(FRAC_PI_4));
    }
    Ok(optimize_free_phases(n_wells, ga, &ClosedForm::new(n_wells)?)?.settings)
}

/// Post-selected Bell value across interaction strengths. Two wells use the
/// CHSH combination, more wells the full Bell expression.
pub fn interaction_scan(n_wells: usize, chi_values: &[f64], options: &InteractionOptions) -> Result<Vec<InteractionPoint>> {
    if !(2..=3).contains(&n_wells) {
        return Err(Error::argument(format!("interaction scan supports 2 or 3 wells, got {n_wells}")));
    }
    if options.normalization == PostSelection::Off {
        return Err(Error::argument("interaction scan is defined for post-selected correlators"));
    }
    let reference = linear_optimal_settings(n_wells, &options.ga)?;
    chi_values
        .iter()
        .map(|&chi| interaction_point(n_wells, chi, &reference, options))
        .collect()
}

fn interaction_point(
    n_wells: usize,
    chi: f64,
    reference: &MeasurementSettings,
    options: &InteractionOptions,
) -> Result<InteractionPoint> {
    let evaluator = FullSimulation::new(crate::protocol::Simulator::new(
        n_wells,
        InteractionStrength::new(chi)?,
        options.normalization,
    )?);
    let value_of = |s: &MeasurementSettings| -> Result<f64> {
        if n_wells == 2 {
            chsh_value(s.theta[0], s.theta[1], s.phi[0], s.phi[1], &evaluator)
        } else {
            evaluate(&evaluator, s)
        }
    };
    let (settings, value) = if options.optimize {
        // the optimizer minimizes; the two-well CHSH value equals the Bell
        // expression, so its minimum has the largest magnitude
        let mirrored: Vec<f64> = reference.to_parameters().iter().map(|x| -x).collect();
        let summary = optimize_free_phases_seeded(
            n_wells,
            &options.ga,
            &evaluator,
            &[reference.to_parameters(), mirrored],
        )?;
        let value = value_of(&summary.settings)?;
        (summary.settings, value)
    } else {
        (reference.clone(), value_of(reference)?)
    };
    Ok(InteractionPoint {
        chi,
        bell_value: value,
        bell_magnitude: value.abs(),
        settings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaSweep {
    /// `(omega, chsh value)` on the uniform grid over `[0, pi]`.
    pub rows: Vec<(f64, f64)>,
    /// Maximizer after golden-section refinement around the best grid point.
    pub best_omega: f64,
    pub best_value: f64,
}

/// CHSH value along the two-well `omega` family, maximized over `[0, pi]`.
pub fn omega_sweep(evaluator: &dyn Correlator, steps: usize) -> Result<OmegaSweep> {
    if steps < 2 {
        return Err(Error::argument(format!("omega sweep needs at least 2 steps, got {steps}")));
    }
    let chsh_at = |omega: f64| -> f64 {
        let s = MeasurementSettings::omega_family(omega);
        chsh_value(s.theta[0], s.theta[1], s.phi[0], s.phi[1], evaluator).expect("two-well evaluator")
    };
    if evaluator.n_wells() != 2 {
        return Err(Error::argument("omega sweep needs a two-well evaluator"));
    }
    let range = Interval { min: 0.0, max: PI };
    let rows: Vec<(f64, f64)> = (0..steps)
        .map(|i| {
            let omega = range.point(i, steps);
            (omega, chsh_at(omega))
        })
        .collect();
    let mut best = rows[0];
    for &row in &rows {
        if row.1 > best.1 {
            best = row;
        }
    }
    let cell = PI / (steps - 1) as f64;
    let (omega, negated) = golden_section(&|w| -chsh_at(w), (best.0 - cell).max(0.0), (best.0 + cell).min(PI));
    let (best_omega, best_value) = if -negated > best.1 { (omega, -negated) } else { best };
    Ok(OmegaSweep {
        rows,
        best_omega,
        best_value,
    })
}

/// Finite-difference slopes of `|B|` at zero interaction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InteractionSlope {
    pub step: f64,
    pub magnitude_at_zero: f64,
    /// `(|B(h)| - |B(-h)|) / 2h`.
    pub central: f64,
    /// `(|B(h)| - |B(0)|) / h`.
    pub forward: f64,
    /// `(|B(0)| - |B(-h)|) / h`.
    pub backward: f64,
}

pub fn interaction_slope(n_wells: usize, step: f64, options: &InteractionOptions) -> Result<InteractionSlope> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::argument(format!("finite-difference step {step} must be positive")));
    }
    let points = interaction_scan(n_wells, &[-step, 0.0, step], options)?;
    let (m, z, p) = (points[0].bell_magnitude, points[1].bell_magnitude, points[2].bell_magnitude);
    Ok(InteractionSlope {
        step,
        magnitude_at_zero: z,
        central: (p - m) / (2.0 * step),
        forward: (p - z) / step,
        backward: (z - m) / step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn small_ga(seed: u64) -> GaConfig {
        GaConfig {
            population: 24,
            generations: 40,
            seed,
            ..GaConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        let bad = GaConfig { population: 3, ..GaConfig::default() };
        assert!(bad.validate().is_err());
        let bad = GaConfig { elite_count: 64, ..GaConfig::default() };
        assert!(bad.validate().is_err());
        let bad = GaConfig { crossover_rate: 1.5, ..GaConfig::default() };
        assert!(bad.validate().is_err());
        assert!(SweepGrid::square(1).validate().is_err());
    }

    #[test]
    fn grid_includes_endpoints() {
        let g = SweepGrid::square(5);
        let t = g.thetas();
        assert_eq!(t.len(), 5);
        assert_eq!((t[0], t[4]), (-PI, PI));
        assert_eq!(t[2], 0.0);
        assert_eq!(g.points().len(), 25);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(&|x| (x - 0.3).powi(2), -1.0, 2.0);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(fx < 1e-18);
    }

    #[test]
    fn two_well_free_optimum() {
        let cf = ClosedForm::new(2).unwrap();
        let s = optimize_free_phases(2, &small_ga(1), &cf).unwrap();
        assert!((s.bell_value + 2.0 * SQRT_2).abs() < 1e-6);
        let theta_sum = s.settings.theta.iter().sum::<f64>();
        // B_2 = 3 cos w - cos 3w is extremal at cos(w) = -1/sqrt2 for the minimum
        assert!((theta_sum.cos() + 1.0 / SQRT_2).abs() < 1e-4);
        assert!(s.violation);
        assert!((s.xi.unwrap() - 1.0 / SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn global_optimum_and_smoke_grid() {
        let cf = ClosedForm::new(2).unwrap();
        let g = optimize_global_phases(2, &SweepGrid::square(33), &cf).unwrap();
        assert!((g.bell_value + 2.0 * SQRT_2).abs() < 1e-8);
        let corner = grid_minimum(2, &SweepGrid::square(2), &cf).unwrap();
        assert_eq!(corner.settings.theta, [-PI, -PI]);
        assert_eq!(corner.settings.phi, [-PI, -PI]);
    }

    #[test]
    fn free_never_worse_than_global_for_three_wells() {
        let cf = ClosedForm::new(3).unwrap();
        let g = optimize_global_phases(3, &SweepGrid::square(65), &cf).unwrap();
        let f = optimize_free_phases(3, &small_ga(9), &cf).unwrap();
        assert!(f.bell_value <= g.bell_value);
        assert!(f.bell_value < -9.0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cf = ClosedForm::new(4).unwrap();
        let a = optimize_free_phases(4, &small_ga(5), &cf).unwrap();
        let b = optimize_free_phases(4, &small_ga(5), &cf).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.bell_value.to_bits(), b.bell_value.to_bits());
    }

    #[test]
    fn power_law_fit_recovers_exact_law() {
        let pts: Vec<(usize, f64)> = (4..=30).map(|n| (n, 1.5 / (n as f64).powf(1.1))).collect();
        let fit = power_law_fit(&pts).unwrap();
        assert!((fit.c - 1.5).abs() < 1e-12);
        assert!((fit.p - 1.1).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(power_law_fit(&pts[..1]).is_err());
    }

    #[test]
    fn map_refinement_shares_grid_points() {
        let cf = ClosedForm::new(2).unwrap();
        let coarse = violation_map(2, &SweepGrid::square(9), &cf).unwrap();
        let fine = violation_map(2, &SweepGrid::square(17), &cf).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(coarse.cell(i, j), fine.cell(2 * i, 2 * j));
            }
        }
        assert!(fine.area_fraction() > 0.0);
        assert_eq!(violation_map(2, &SweepGrid::square(2), &cf).unwrap().cells.len(), 4);
    }

    #[test]
    fn interaction_scan_linear_limit() {
        let pts = interaction_scan(2, &[0.0], &InteractionOptions::default()).unwrap();
        assert!((pts[0].bell_magnitude - 2.0 * SQRT_2).abs() < 1e-12);
        assert!(interaction_scan(4, &[0.0], &InteractionOptions::default()).is_err());
    }

    #[test]
    fn omega_sweep_row_count_and_maximum() {
        let cf = ClosedForm::new(2).unwrap();
        let sweep = omega_sweep(&cf, 5).unwrap();
        assert_eq!(sweep.rows.len(), 5);
        assert!((sweep.best_value - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((sweep.best_omega - FRAC_PI_4).abs() < 1e-5);
    }

    #[test]
    fn scaling_scan_rejects_oversized_simulation() {
        let kind = EvaluatorKind::FullSimulation {
            postselection: PostSelection::Conditional,
            chi: 0.0,
        };
        let err = scaling_scan(2, 7, PhaseMode::GlobalPhases, kind, &ScanOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
    }
}
