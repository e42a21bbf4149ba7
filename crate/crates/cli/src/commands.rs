//! The five subcommands.

use duelgame::inversion::{pgf_to_pmf, TauDistribution};
use duelgame::sim::{simulate_batch, SimConfig, SimMode};
use duelgame::transforms::{gamma_joint, marginal_a_pgf, marginal_b_pgf, phi_closed, phi_operator};
use duelgame::validation::{self, ValidationConfig};
use duelgame::{Complex64, TransformQuery};
use serde_json::{json, Value};

use crate::output::{csv, emit, json_pretty, load_config, metadata_path, CliError, CliResult};
use crate::{Common, ModeArg, PathChoice, Side};

/// Largest tolerated disagreement between the two analytic routes.
const ROUTE_AGREEMENT: f64 = 1e-6;

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn write_metadata(common: &Common, meta: Value) -> CliResult<()> {
    if let Some(out) = &common.out {
        std::fs::write(metadata_path(out), json_pretty(&meta))?;
    }
    Ok(())
}

pub fn eval(
    common: &Common,
    u: Complex64,
    v: Complex64,
    theta: Complex64,
    path: PathChoice,
) -> CliResult<()> {
    let (raw, params) = load_config(&common.config)?;
    let q = TransformQuery::new(u, v, theta)?;
    let closed = match path {
        PathChoice::Operator => None,
        PathChoice::Closed => Some(phi_closed(&params, &q)?),
        PathChoice::Both => params
            .closed_form_capable()
            .then(|| phi_closed(&params, &q))
            .transpose()?,
    };
    let operator = match path {
        PathChoice::Closed => None,
        _ => Some(phi_operator(&params, &q)?),
    };
    let diff = closed.zip(operator).map(|(a, b)| (a - b).norm());
    let record = json!({
        "config": raw,
        "query": { "u": complex_json(u), "v": complex_json(v), "theta": complex_json(theta) },
        "gamma": complex_json(gamma_joint(&params, &q)),
        "phi_closed": closed.map(complex_json),
        "phi_operator": operator.map(complex_json),
        "abs_diff": diff,
    });
    emit(common.out.as_deref(), &json_pretty(&record))?;
    match diff {
        Some(d) if d > ROUTE_AGREEMENT => Err(CliError::check_failed(format!(
            "analytic routes disagree by {d:.3e} (limit {ROUTE_AGREEMENT:.0e})"
        ))),
        _ => Ok(()),
    }
}

pub fn pmf(common: &Common, side: Side, max_k: usize, args: &[String]) -> CliResult<()> {
    let (raw, params) = load_config(&common.config)?;
    let table = match side {
        Side::A => pgf_to_pmf(|u| marginal_a_pgf(&params, u), max_k)?,
        Side::B => pgf_to_pmf(|v| marginal_b_pgf(&params, v), max_k)?,
    };
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    let body = csv(
        "k,mass",
        table
            .support
            .iter()
            .zip(&table.values)
            .map(|(k, m)| (format!("{k}"), *m)),
    );
    emit(common.out.as_deref(), &body)?;
    let side_name = match side {
        Side::A => "A",
        Side::B => "B",
    };
    write_metadata(
        common,
        json!({
            "command": "pmf",
            "args": args,
            "config": raw,
            "side": side_name,
            "max_k": max_k,
            "method": "closed-form generating function, discrete Fourier sum on the unit circle",
            "tolerances": { "clip_silent_below": -1e-12, "normalization": 1e-9 },
            "total_mass": table.total(),
            "warnings": table.warnings,
        }),
    )
}

pub fn pdf(common: &Common, t_max: f64, t_step: f64, args: &[String]) -> CliResult<()> {
    if !(t_step > 0.0 && t_step.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(CliError::config(format!(
            "need t-step > 0 and t-max >= 0, got {t_step} and {t_max}"
        )));
    }
    let (raw, params) = load_config(&common.config)?;
    let dist = TauDistribution::new(&params)?;
    let steps = (t_max / t_step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * t_step).collect();
    let density: Vec<f64> = grid.iter().map(|&t| dist.pdf(t)).collect();
    let body = csv(
        "t,density",
        grid.iter().zip(&density).map(|(t, d)| (format!("{t}"), *d)),
    );
    emit(common.out.as_deref(), &body)?;

    let end = grid.last().copied().unwrap_or(0.0);
    let trapezoid: f64 = density
        .windows(2)
        .zip(grid.windows(2))
        .map(|(d, t)| 0.5 * (d[0] + d[1]) * (t[1] - t[0]))
        .sum();
    let tail = 1.0 - dist.cdf(end);
    write_metadata(
        common,
        json!({
            "command": "pdf",
            "args": args,
            "config": raw,
            "t_max": t_max,
            "t_step": t_step,
            "method": "exact partial-fraction inversion of the Laplace-Stieltjes transform",
            "tolerances": { "pole_separation": duelgame::inversion::POLE_TOL },
            "trapezoid_integral": trapezoid,
            "tail_mass": tail,
            "corrected_total": trapezoid + tail,
        }),
    )
}

pub fn simulate(common: &Common, paths: u64, seed: u64, mode: ModeArg) -> CliResult<()> {
    let (_, params) = load_config(&common.config)?;
    let mode = match mode {
        ModeArg::Interval => SimMode::Interval,
        ModeArg::Event => SimMode::Event,
    };
    let config = SimConfig::new(paths, seed)
        .with_mode(mode)
        .with_queries(validation::reference_grid());
    let summary = simulate_batch(&params, &config)?;
    emit(common.out.as_deref(), &json_pretty(&summary))
}

pub fn validate(common: &Common, paths: u64, mode_paths: u64, seed: u64) -> CliResult<()> {
    let (_, params) = load_config(&common.config)?;
    let reference = validation::reference_params(params.m, params.n);
    if params.lambda != reference.lambda
        || params.mu != reference.mu
        || params.delta_law != reference.delta_law
    {
        eprintln!("note: the checks use the reference rates lambda = 1, mu = 2, gamma = 5");
    }
    let config = ValidationConfig {
        mc_paths: paths,
        mode_paths,
        seed,
    };
    let results = validation::run_all(&config)?;
    let mut table = String::new();
    for r in &results {
        table.push_str(&format!("{r}\n"));
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{} {}", r.id, r.name))
        .collect();
    table.push_str(&format!(
        "{}/{} checks passed\n",
        results.len() - failed.len(),
        results.len()
    ));
    emit(common.out.as_deref(), &table)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::check_failed(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}
