use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::config::{RunConfig, ScalingEvaluator};
use super::output::{format_float, render_csv, write_file, Cell, ResultRecord};
use crate::bell::{
    bell_value, ClosedForm, Correlator, FullSimulation, MeasurementSettings, TuraCoefficients,
};
use crate::error::{Error, Result};
use crate::optimize::{
    interaction_scan, interaction_slope, omega_sweep, power_law_fit, scaling_scan, two_well_interaction_reference,
    violation_map, EvaluatorKind, InteractionOptions, ScanOptions, SweepGrid,
};
use crate::protocol::{
    event_probabilities, parity_distribution, run_protocol, InteractionStrength, PhaseVector, PostSelection,
    Simulator,
};

/// Two-well relative violation quoted to four digits.
#[allow(clippy::approx_constant)]
const XI2_REFERENCE: f64 = 0.7071;

pub(super) struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub started: Option<Instant>,
    pub lines: Vec<String>,
    pub failed_checks: Vec<String>,
}

impl Context {
    fn csv(&self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        write_file(&self.out_dir.join(name), &render_csv(header, rows))
    }

    fn record(&self, name: &str, experiment: &str, outputs: impl Serialize) -> Result<()> {
        let mut record = ResultRecord::new(experiment, self.config.seed, &self.config, outputs)?;
        record.wall_time_seconds = self.started.map(|t| t.elapsed().as_secs_f64());
        record.write(&self.out_dir.join(name))
    }

    fn check(&mut self, ok: bool, description: String) {
        if !ok {
            self.failed_checks.push(description);
        }
    }

    fn say(&mut self, line: String) {
        self.lines.push(line);
    }
}

fn join_phases(values: &[f64]) -> String {
    values.iter().map(|&x| format_float(x)).collect::<Vec<_>>().join(";")
}

pub(super) fn chsh(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.config.chsh.clone();
    let mode = if cfg.postselect { PostSelection::Conditional } else { PostSelection::Off };
    let evaluator = FullSimulation::new(Simulator::new(2, InteractionStrength::ZERO, mode)?);
    let sweep = omega_sweep(&evaluator, cfg.omega_steps)?;
    let rows: Vec<Vec<Cell>> = sweep
        .rows
        .iter()
        .map(|&(omega, value)| vec![omega.into(), value.into(), (value.abs() > 2.0).into()])
        .collect();
    ctx.csv("chsh.csv", &["omega", "bell_value", "violation"], &rows)?;
    ctx.record(
        "chsh.json",
        "chsh",
        json!({
            "postselected": cfg.postselect,
            "max_bell_value": sweep.best_value,
            "omega_at_max": sweep.best_omega,
        }),
    )?;
    ctx.say(format!(
        "maximum CHSH value {} at omega {}",
        format_float(sweep.best_value),
        format_float(sweep.best_omega)
    ));
    let tol = ctx.config.tolerances.clone();
    if cfg.postselect {
        ctx.check(
            (sweep.best_value - 2.0 * SQRT_2).abs() <= tol.chsh_value,
            format!("maximum {} differs from 2 sqrt 2 by more than {}", sweep.best_value, tol.chsh_value),
        );
        ctx.check(
            (sweep.best_omega - FRAC_PI_4).abs() <= tol.chsh_omega,
            format!("maximizing omega {} differs from pi/4 by more than {}", sweep.best_omega, tol.chsh_omega),
        );
    } else {
        ctx.check(
            (sweep.best_value - tol.chsh_unselected_target).abs() <= tol.chsh_unselected,
            format!(
                "unselected maximum {} outside {} +- {}",
                sweep.best_value, tol.chsh_unselected_target, tol.chsh_unselected
            ),
        );
    }
    Ok(())
}

pub(super) fn scaling(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.config.scaling.clone();
    let kind = match cfg.evaluator {
        ScalingEvaluator::ClosedForm => EvaluatorKind::ClosedForm,
        ScalingEvaluator::FullSimulation => EvaluatorKind::FullSimulation {
            postselection: PostSelection::Conditional,
            chi: 0.0,
        },
    };
    let options = ScanOptions {
        ga: ctx.config.seeded_ga(),
        seed_grid: SweepGrid::square(cfg.global_grid_steps),
        dimension_cap: ctx.config.dimension_cap,
    };
    let summaries = scaling_scan(cfg.n_min, cfg.n_max, cfg.mode, kind, &options)?;
    let seed = ctx.config.seed;
    let rows: Vec<Vec<Cell>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.n.into(),
                s.bell_value.into(),
                s.classical_bound.into(),
                s.xi.into(),
                s.mode.label().into(),
                Cell::Text(join_phases(&s.settings.theta)),
                Cell::Text(join_phases(&s.settings.phi)),
                seed.into(),
            ]
        })
        .collect();
    ctx.csv(
        "scaling.csv",
        &["N", "min_bell", "classical_bound", "xi", "mode", "theta_opt", "phi_opt", "seed"],
        &rows,
    )?;

    let fit_points: Vec<(usize, f64)> = summaries
        .iter()
        .filter(|s| s.n >= cfg.fit_from)
        .filter_map(|s| s.xi.map(|xi| (s.n, xi)))
        .collect();
    let fit = power_law_fit(&fit_points).ok();
    let tol = ctx.config.tolerances.clone();
    ctx.record(
        "scaling_fit.json",
        "scaling",
        json!({
            "c": fit.map(|f| f.c),
            "p": fit.map(|f| f.p),
            "residual": fit.map(|f| f.residual),
            "fit_range": fit_points.first().zip(fit_points.last()).map(|(a, b)| [a.0, b.0]),
            "tolerance_band": {"p": [tol.scaling_p_min, tol.scaling_p_max], "c": [tol.scaling_c_min, tol.scaling_c_max]},
            "summaries": summaries,
        }),
    )?;

    for s in &summaries {
        ctx.check(s.violation, format!("N={} optimum {} does not violate", s.n, s.bell_value));
    }
    if let Some(s2) = summaries.iter().find(|s| s.n == 2) {
        let xi2 = s2.xi.unwrap_or(f64::NAN);
        ctx.check(
            (xi2 - XI2_REFERENCE).abs() <= tol.scaling_xi2,
            format!("xi_2 = {xi2} differs from {XI2_REFERENCE} by more than {}", tol.scaling_xi2),
        );
    }
    match fit {
        Some(f) => {
            ctx.say(format!(
                "power-law fit xi = c / N^p: c = {}, p = {}, residual = {}",
                format_float(f.c),
                format_float(f.p),
                format_float(f.residual)
            ));
            ctx.check(
                (tol.scaling_p_min..=tol.scaling_p_max).contains(&f.p),
                format!("fitted exponent {} outside [{}, {}]", f.p, tol.scaling_p_min, tol.scaling_p_max),
            );
            ctx.check(
                (tol.scaling_c_min..=tol.scaling_c_max).contains(&f.c),
                format!("fitted prefactor {} outside [{}, {}]", f.c, tol.scaling_c_min, tol.scaling_c_max),
            );
        }
        None => ctx.say(format!("fewer than two points with N >= {}; no fit", cfg.fit_from)),
    }
    for s in &summaries {
        ctx.say(format!(
            "N={}: min B = {}, xi = {}",
            s.n,
            format_float(s.bell_value),
            s.xi.map_or("undefined".into(), format_float)
        ));
    }
    Ok(())
}

pub(super) fn map(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.config.map.clone();
    let grid = SweepGrid::square(cfg.grid_steps);
    let evaluator = ClosedForm::new(cfg.n)?;
    let map = violation_map(cfg.n, &grid, &evaluator)?;
    let rows: Vec<Vec<Cell>> = map
        .cells
        .iter()
        .map(|c| vec![c.theta.into(), c.phi.into(), c.bell_value.into(), c.xi.into(), c.violation.into()])
        .collect();
    ctx.csv("map.csv", &["theta", "phi", "bell_value", "xi", "violation"], &rows)?;
    let best = map
        .cells
        .iter()
        .fold(&map.cells[0], |b, c| if c.bell_value < b.bell_value { c } else { b });
    let violating = map.cells.iter().filter(|c| c.violation).count();
    let fraction = map.area_fraction();
    ctx.record(
        "map_summary.json",
        "map",
        json!({
            "n": cfg.n,
            "grid_steps": cfg.grid_steps,
            "classical_bound": map.classical_bound,
            "violating_cells": violating,
            "total_cells": map.cells.len(),
            "area_fraction": fraction,
            "min_bell_value": best.bell_value,
            "min_theta": best.theta,
            "min_phi": best.phi,
        }),
    )?;
    ctx.say(format!(
        "N={}: violating area fraction {} ({violating} of {} cells)",
        cfg.n,
        format_float(fraction),
        map.cells.len()
    ));
    ctx.check(violating > 0, format!("no violating cell for N={}", cfg.n));
    Ok(())
}

pub(super) fn interaction(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.config.interaction.clone();
    if cfg.steps < 2 {
        return Err(Error::Argument(format!("interaction scan needs at least 2 steps, got {}", cfg.steps)));
    }
    if !(cfg.chi_max.is_finite() && cfg.chi_max >= 0.0) {
        return Err(Error::Argument(format!("chi_max {} must be finite and non-negative", cfg.chi_max)));
    }
    let options = InteractionOptions {
        optimize: cfg.optimize,
        normalization: cfg.normalization,
        ga: ctx.config.seeded_ga(),
    };
    let chis: Vec<f64> = (0..cfg.steps)
        .map(|i| cfg.chi_max * i as f64 / (cfg.steps - 1) as f64)
        .collect();
    let points = interaction_scan(cfg.n, &chis, &options)?;
    let slope = interaction_slope(cfg.n, cfg.fd_step, &options)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for p in &points {
        let (reference, error) = if cfg.n == 2 {
            let r = two_well_interaction_reference(p.chi);
            (Some(r), Some((p.bell_magnitude - r).abs()))
        } else {
            (None, None)
        };
        worst = worst.max(error.unwrap_or(0.0));
        rows.push(vec![p.chi.into(), p.bell_magnitude.into(), reference.into(), error.into()]);
    }
    ctx.csv("chi.csv", &["chi", "bell_magnitude", "analytic_reference", "abs_error"], &rows)?;
    ctx.record("chi.json", "interaction", json!({ "slope": slope, "points": points }))?;
    ctx.say(format!(
        "finite-difference slope d|B|/dchi at chi=0 (step {}): central {}, forward {}, backward {}",
        format_float(slope.step),
        format_float(slope.central),
        format_float(slope.forward),
        format_float(slope.backward)
    ));
    let tol = ctx.config.tolerances.clone();
    if cfg.n == 2 {
        ctx.say(format!("largest deviation from (4 - chi^2)/sqrt2: {}", format_float(worst)));
        for p in &points {
            let err = (p.bell_magnitude - two_well_interaction_reference(p.chi)).abs();
            ctx.check(
                err < tol.interaction_abs_error,
                format!("chi={}: deviation {err:e} from (4 - chi^2)/sqrt2", p.chi),
            );
        }
    } else {
        ctx.check(
            slope.central.abs() < tol.interaction_slope,
            format!("central slope {} not below {}", slope.central, tol.interaction_slope),
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct AmplitudeRow {
    index: usize,
    occupation: String,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct EventRow {
    event: String,
    class: crate::protocol::EventClass,
    probability: f64,
}

pub(super) fn simulate(ctx: &mut Context) -> Result<()> {
    let cfg = ctx.config.simulate.clone();
    let n = cfg.n;
    let theta = if cfg.theta.is_empty() { vec![0.0; n] } else { cfg.theta.clone() };
    let phi = if cfg.phi.is_empty() { vec![0.0; n] } else { cfg.phi.clone() };
    let settings = MeasurementSettings::new(theta.clone(), phi)?;
    if settings.n_wells() != n {
        return Err(Error::Argument(format!("{} phases given for {n} wells", settings.n_wells())));
    }
    let chi = InteractionStrength::new(cfg.chi)?;
    let basis_dim = crate::fock::sector_dimension(n);
    if basis_dim > ctx.config.dimension_cap as u128 {
        return Err(Error::Capacity {
            dimension: basis_dim,
            cap: ctx.config.dimension_cap,
        });
    }
    let run = run_protocol(n, &PhaseVector::new(theta), chi, cfg.postselect)?;
    let state = &run.final_state;
    let amplitudes: Vec<AmplitudeRow> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(index, a)| AmplitudeRow {
            index,
            occupation: state.basis().unrank(index).to_string(),
            re: a.re,
            im: a.im,
        })
        .collect();
    let (p_plus, p_minus) = parity_distribution(state);
    let events: Option<Vec<EventRow>> = (n == 2).then(|| {
        event_probabilities(state)
            .into_iter()
            .map(|(event, probability)| EventRow {
                event: event.to_string(),
                class: event.class(),
                probability,
            })
            .collect()
    });
    let mode = if cfg.postselect { PostSelection::Conditional } else { PostSelection::Off };
    let evaluator = FullSimulation::build(n, chi, mode, ctx.config.dimension_cap)?;
    let correlations = evaluator.correlation_set(&settings)?;
    let (value, bound) = match TuraCoefficients::for_parties(n) {
        Ok(coeffs) => (Some(bell_value(&coeffs, &correlations)?), Some(coeffs.classical_bound)),
        Err(_) => (None, None),
    };
    let norm = state.norm_sqr().sqrt();
    ctx.record(
        "simulate.json",
        "simulate",
        json!({
            "n": n,
            "phases": settings.theta,
            "postselected": cfg.postselect,
            "postselect_probability": run.postselect_probability,
            "norm": norm,
            "parity": {"plus": p_plus, "minus": p_minus, "expectation": p_plus - p_minus},
            "events": events,
            "settings": settings,
            "correlations": correlations,
            "bell_value": value,
            "classical_bound": bound,
            "amplitudes": amplitudes,
        }),
    )?;
    ctx.say(format!(
        "N={n}: parity expectation {}, post-selection probability {}, Bell value {}",
        format_float(p_plus - p_minus),
        format_float(run.postselect_probability),
        value.map_or("undefined".into(), format_float)
    ));
    let tol = ctx.config.tolerances.clone();
    ctx.check(
        (norm - 1.0).abs() <= tol.simulate_norm,
        format!("final state norm {norm} differs from 1"),
    );
    if cfg.postselect && cfg.chi == 0.0 {
        let expected = 0.5f64.powi(n as i32 - 1);
        ctx.check(
            (run.postselect_probability - expected).abs() <= tol.simulate_postselect_probability,
            format!("post-selection probability {} differs from {expected}", run.postselect_probability),
        );
    }
    Ok(())
}
