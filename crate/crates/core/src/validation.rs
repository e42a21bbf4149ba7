//! End-to-end cross-checks of every analytic result against its independent
//! oracle. Each check returns a [`CheckOutcome`]; [`run_all`] runs the full
//! suite on the reference configuration `lambda = 1, mu = 2, gamma = 5`.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::inversion::{
    invert_gamma_erlang, invert_rational_term, laplace_invert_numeric, pgf_to_pmf, RationalLstTerm,
    TauDistribution,
};
use crate::model::{GameParams, TransformQuery};
use crate::series::{d_op_from_series, d_op_geometric, d_op_power, d_op_product, BivariateSeries};
use crate::sim::{simulate_batch, stream_rng, SimConfig, SimMode, SimSummary};
use crate::stats::{
    chi_square_homogeneity, ks_critical_one_sample, ks_critical_two_sample, ks_one_sample,
    ks_two_sample, total_variation,
};
use crate::transforms::{
    a_pgf_via_g_sum, b_pgf_via_h_sum, marginal_a_pgf, marginal_b_pgf, marginal_tau_lst, phi_closed,
    phi_operator, tau_lst_via_f_sum,
};

pub const NORMALIZATION_TOL: f64 = 1e-12;
pub const DUAL_PATH_TOL: f64 = 1e-9;
pub const CLOSED_FORM_TOL: f64 = 1e-10;
pub const MC_SIGMAS: f64 = 3.5;
pub const MC_MIN_AGREEING: usize = 25;
pub const TAU_NORMALIZATION_TOL: f64 = 1e-6;
pub const TAU_POINTWISE_TOL: f64 = 1e-6;
pub const PMF_SUM_TOL: f64 = 1e-9;
pub const PMF_TV_TOL: f64 = 0.005;
pub const MARGINAL_FORM_TOL: f64 = 1e-10;
pub const INVERSION_TOL: f64 = 1e-7;
pub const SIGNIFICANCE: f64 = 0.01;

/// Stream index reserved for the randomized parameter sweeps, far away from
/// the batch indices used by the simulator.
const SWEEP_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{tag}] {:>2} {:<32} {}",
            self.id, self.name, self.detail
        )
    }
}

fn outcome(id: u32, name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        id,
        name,
        passed,
        detail,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationConfig {
    /// Paths for the Monte Carlo concordance, distribution and pmf checks.
    pub mc_paths: u64,
    /// Paths per mode for the simulator mode-equivalence check.
    pub mode_paths: u64,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            mc_paths: 1_000_000,
            mode_paths: 100_000,
            seed: 7,
        }
    }
}

pub fn reference_params(m: u32, n: u32) -> GameParams {
    GameParams::exponential(1.0, 2.0, 5.0, m, n).expect("reference parameters are valid")
}

/// The 27-point grid `u, v in {0.5, 0.8, 1}`, `theta in {0, 0.5, 1}`.
pub fn reference_grid() -> Vec<TransformQuery> {
    let axis = [0.5, 0.8, 1.0];
    let mut grid = Vec::with_capacity(27);
    for u in axis {
        for v in axis {
            for theta in [0.0, 0.5, 1.0] {
                grid.push(TransformQuery::real(u, v, theta).expect("grid lies in the domain"));
            }
        }
    }
    grid
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn random_params<R: Rng>(rng: &mut R, max_threshold: u32) -> GameParams {
    GameParams::exponential(
        rng.random_range(0.1..5.0),
        rng.random_range(0.1..5.0),
        rng.random_range(0.1..10.0),
        rng.random_range(1..=max_threshold),
        rng.random_range(1..=max_threshold),
    )
    .expect("sampled parameters are valid")
}

fn random_disc<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    // uniform on the disc
    Complex64::from_polar(
        radius * rng.random::<f64>().sqrt(),
        rng.random_range(0.0..std::f64::consts::TAU),
    )
}

/// 1. `Phi(1, 1, 0) = 1` on both routes over 100 random parameter sets.
pub fn check_normalization(seed: u64) -> Result<CheckOutcome> {
    let mut rng = stream_rng(seed, SWEEP_STREAM + 1);
    let q = TransformQuery::real(1.0, 1.0, 0.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_params(&mut rng, 10);
        worst = worst.max((phi_closed(&p, &q)? - 1.0).norm());
        worst = worst.max((phi_operator(&p, &q)? - 1.0).norm());
    }
    Ok(outcome(
        1,
        "normalization",
        worst <= NORMALIZATION_TOL,
        format!("max |Phi(1,1,0) - 1| = {worst:.3e} over 100 sets (tol {NORMALIZATION_TOL:.0e})"),
    ))
}

/// 2. Operator pipeline against closed form over 100 random points.
pub fn check_dual_path(seed: u64) -> Result<CheckOutcome> {
    let mut rng = stream_rng(seed, SWEEP_STREAM + 2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_params(&mut rng, 8);
        let q = TransformQuery::new(
            random_disc(&mut rng, 1.0),
            random_disc(&mut rng, 1.0),
            Complex64::new(rng.random_range(0.0..3.0), rng.random_range(-3.0..3.0)),
        )?;
        worst = worst.max(rel_err(phi_operator(&p, &q)?, phi_closed(&p, &q)?));
    }
    Ok(outcome(
        2,
        "Phi dual-path consistency",
        worst <= DUAL_PATH_TOL,
        format!("max relative diff = {worst:.3e} over 100 points (tol {DUAL_PATH_TOL:.0e})"),
    ))
}

fn univariate_inverse_power(r: Complex64, n: u32, k: usize) -> Result<BivariateSeries> {
    Ok(
        BivariateSeries::linear(Complex64::new(1.0, 0.0), -r, Complex64::new(0.0, 0.0), k, 0)
            .reciprocal()?
            .powu(n),
    )
}

/// 3. Closed-form partial sums against truncated-series partial sums.
pub fn check_closed_forms(seed: u64) -> Result<CheckOutcome> {
    let mut rng = stream_rng(seed, SWEEP_STREAM + 3);
    let mut cases: Vec<(Complex64, Complex64)> = (0..40)
        .map(|_| (random_disc(&mut rng, 0.95), random_disc(&mut rng, 0.95)))
        .collect();
    // the switch window around b = 1 and its edges
    for delta in [1e-12, 5e-10, 1e-9, 2e-9, 1e-7, 1e-4] {
        for dir in [
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ] {
            cases.push((
                random_disc(&mut rng, 0.95),
                Complex64::new(1.0, 0.0) + dir * delta,
            ));
        }
    }
    let mut worst: f64 = 0.0;
    let mut count = 0usize;
    for (a, b) in cases {
        for n in [1u32, 2, 5, 10] {
            let geo = univariate_inverse_power(b, 1, 20)?;
            let pow = univariate_inverse_power(a, n, 20)?;
            let prod = &geo * &pow;
            for k in [0usize, 1, 3, 7, 12, 20] {
                let ki = k as i64;
                worst = worst.max(rel_err(
                    d_op_geometric(k, b),
                    d_op_from_series(&geo, ki, 0)?,
                ));
                worst = worst.max(rel_err(d_op_power(k, a, n), d_op_from_series(&pow, ki, 0)?));
                worst = worst.max(rel_err(
                    d_op_product(k, a, b, n),
                    d_op_from_series(&prod, ki, 0)?,
                ));
                for j in [0usize, 1, k / 2, k, k + 3] {
                    let shifted = if j <= 20 {
                        prod.shift_x(j)
                    } else {
                        BivariateSeries::zeros(20, 0)
                    };
                    let lhs = d_op_from_series(&shifted, ki, 0)?;
                    let rhs = d_op_from_series(&prod, ki - j as i64, 0)?;
                    worst = worst.max(if rhs == Complex64::new(0.0, 0.0) {
                        lhs.norm()
                    } else {
                        rel_err(lhs, rhs)
                    });
                }
                count += 8;
            }
        }
    }
    Ok(outcome(
        3,
        "D-operator closed forms",
        worst <= CLOSED_FORM_TOL,
        format!(
            "max relative diff = {worst:.3e} over {count} comparisons (tol {CLOSED_FORM_TOL:.0e})"
        ),
    ))
}

/// Simulated summary for `(M, N)` on the reference rates, with the 27-point grid.
pub fn reference_simulation(m: u32, n: u32, paths: u64, seed: u64) -> Result<SimSummary> {
    let config = SimConfig::new(paths, seed).with_queries(reference_grid());
    simulate_batch(&reference_params(m, n), &config)
}

/// 4. Simulated functional against the closed form on the 27-point grid.
pub fn check_monte_carlo(summary: &SimSummary, rerun: &SimSummary) -> Result<CheckOutcome> {
    let p = reference_params(3, 4);
    let mut agreeing = 0;
    let mut worst: f64 = 0.0;
    for est in &summary.functional_estimates {
        let exact = phi_closed(&p, &est.query)?;
        let dev = (est.mean - exact).norm();
        if dev <= MC_SIGMAS * est.stderr {
            agreeing += 1;
        }
        if est.stderr > 0.0 {
            worst = worst.max(dev / est.stderr);
        }
    }
    let identical = summary == rerun;
    Ok(outcome(
        4,
        "Monte Carlo concordance",
        agreeing >= MC_MIN_AGREEING && identical,
        format!(
            "{agreeing}/{} points within {MC_SIGMAS} se (need {MC_MIN_AGREEING}), worst {worst:.2} se, {} paths, rerun identical: {identical}",
            summary.functional_estimates.len(),
            summary.n_paths
        ),
    ))
}

/// 5. Density of `tau_rho`: normalization, numeric inversion, simulation.
pub fn check_tau_distribution(summary: &SimSummary) -> Result<CheckOutcome> {
    let p = reference_params(2, 2);
    let dist = TauDistribution::new(&p)?;

    // (a) composite Simpson on [0, 40] plus the exact tail mass
    let (steps, upper) = (40_000usize, 40.0);
    let h = upper / steps as f64;
    let simpson = (0..=steps)
        .map(|i| {
            let w = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * dist.pdf(i as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    let integral = simpson + (1.0 - dist.cdf(upper));
    let norm_err = (integral - 1.0).abs();

    // (b) pointwise against numeric inversion of the transform
    let mut pointwise: f64 = 0.0;
    for i in 0..=200 {
        let t = 0.01 + (10.0 - 0.01) * i as f64 / 200.0;
        let numeric = laplace_invert_numeric(
            |th| marginal_tau_lst(&p, th).unwrap_or(Complex64::new(f64::NAN, 0.0)),
            t,
        )?;
        pointwise = pointwise.max((numeric - dist.pdf(t)).abs());
    }

    // (c) Kolmogorov-Smirnov against the simulated ruin times
    let mut sorted = summary.tau_samples.clone();
    sorted.sort_by(f64::total_cmp);
    let ks = ks_one_sample(&sorted, |t| dist.cdf(t));
    let critical = ks_critical_one_sample(sorted.len());

    let passed =
        norm_err <= TAU_NORMALIZATION_TOL && pointwise <= TAU_POINTWISE_TOL && ks < critical;
    Ok(outcome(
        5,
        "tau_rho distribution",
        passed,
        format!(
            "|int pdf - 1| = {norm_err:.2e} (tol {TAU_NORMALIZATION_TOL:.0e}); max |pdf - numeric| = {pointwise:.2e} (tol {TAU_POINTWISE_TOL:.0e}); KS = {ks:.2e} < {critical:.2e}: {}",
            ks < critical
        ),
    ))
}

/// 6. Casualty pmfs from the generating functions against simulation.
pub fn check_casualty_pmfs(runs: &[(u32, u32, &SimSummary)]) -> Result<CheckOutcome> {
    let mut passed = true;
    let mut parts = Vec::new();
    for &(m, n, summary) in runs {
        let p = reference_params(m, n);
        let max_k = (m + n + 50) as usize;
        let pmf_a = pgf_to_pmf(|u| marginal_a_pgf(&p, u), max_k)?;
        let pmf_b = pgf_to_pmf(|v| marginal_b_pgf(&p, v), max_k)?;
        for (side, table, empirical) in
            [("A", &pmf_a, &summary.pmf_a), ("B", &pmf_b, &summary.pmf_b)]
        {
            let nonneg = table.warnings.is_empty() && table.values.iter().all(|&x| x >= 0.0);
            let sum_err = (table.total() - 1.0).abs();
            let tv = total_variation(&table.values, &empirical.values);
            passed &= nonneg && sum_err <= PMF_SUM_TOL && tv <= PMF_TV_TOL;
            parts.push(format!(
                "({m},{n}) {side}: sum err {sum_err:.1e}, TV {tv:.2e}{}",
                if nonneg { "" } else { ", NEGATIVE" }
            ));
        }
    }
    Ok(outcome(
        6,
        "casualty pmfs",
        passed,
        format!(
            "{} (tol sum {PMF_SUM_TOL:.0e}, TV {PMF_TV_TOL})",
            parts.join("; ")
        ),
    ))
}

/// 7. Separately simplified marginal forms against the specializations.
pub fn check_marginal_forms(seed: u64) -> Result<CheckOutcome> {
    let mut rng = stream_rng(seed, SWEEP_STREAM + 7);
    let mut worst: f64 = 0.0;
    let mut sets = vec![
        reference_params(2, 2),
        reference_params(2, 3),
        reference_params(3, 2),
        reference_params(3, 4),
    ];
    sets.extend((0..36).map(|_| random_params(&mut rng, 10)));
    for p in &sets {
        for _ in 0..5 {
            let theta = Complex64::new(rng.random_range(0.0..5.0), rng.random_range(-5.0..5.0));
            let u = random_disc(&mut rng, 1.0);
            let v = random_disc(&mut rng, 1.0);
            worst = worst.max(rel_err(
                tau_lst_via_f_sum(p, theta)?,
                marginal_tau_lst(p, theta)?,
            ));
            worst = worst.max(rel_err(a_pgf_via_g_sum(p, u)?, marginal_a_pgf(p, u)?));
            worst = worst.max(rel_err(b_pgf_via_h_sum(p, v)?, marginal_b_pgf(p, v)?));
        }
    }
    Ok(outcome(
        7,
        "marginal specializations",
        worst <= MARGINAL_FORM_TOL,
        format!(
            "max relative diff = {worst:.3e} over {} evaluations (tol {MARGINAL_FORM_TOL:.0e})",
            sets.len() * 15
        ),
    ))
}

/// 8. Exact rational inversions against numeric inversion on random poles.
pub fn check_exact_inversion(seed: u64) -> Result<CheckOutcome> {
    let mut rng = stream_rng(seed, SWEEP_STREAM + 8);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    while cases < 20 {
        let poles: [f64; 3] = [
            rng.random_range(0.5..10.0),
            rng.random_range(0.5..10.0),
            rng.random_range(0.5..10.0),
        ];
        // well separated poles keep the signed residues representable
        let separated = (0..3).all(|i| (i + 1..3).all(|j| (poles[i] - poles[j]).abs() >= 0.5));
        if !separated {
            continue;
        }
        let term = RationalLstTerm {
            coeff: 1.0,
            gamma_pole: poles[0],
            pole1: poles[1],
            mult1: rng.random_range(0..=8),
            pole2: poles[2],
            mult2: rng.random_range(0..=8),
        };
        let transform = |th: Complex64| {
            term.coeff
                / ((th + term.gamma_pole)
                    * (th + term.pole1).powu(term.mult1)
                    * (th + term.pole2).powu(term.mult2))
        };
        let only_first =
            |th: Complex64| 1.0 / ((th + term.gamma_pole) * (th + term.pole1).powu(term.mult1));
        for _ in 0..5 {
            let t = rng.random_range(0.01..10.0);
            worst = worst.max(
                (invert_rational_term(&term, t)? - laplace_invert_numeric(transform, t)?).abs(),
            );
            let lemma = invert_gamma_erlang(term.gamma_pole, term.pole1, term.mult1, t)?;
            worst = worst.max((lemma - laplace_invert_numeric(only_first, t)?).abs());
        }
        cases += 1;
    }
    Ok(outcome(
        8,
        "exact Laplace inversion",
        worst <= INVERSION_TOL,
        format!("max |exact - numeric| = {worst:.3e} over {cases} pole configurations (tol {INVERSION_TOL:.0e})"),
    ))
}

/// 9. Interval and event simulation modes produce the same law.
pub fn check_mode_equivalence(paths: u64, seed: u64) -> Result<CheckOutcome> {
    let p = reference_params(3, 4);
    let interval = simulate_batch(
        &p,
        &SimConfig::new(paths, seed).with_mode(SimMode::Interval),
    )?;
    // a different seed keeps the two samples independent
    let event = simulate_batch(
        &p,
        &SimConfig::new(paths, seed ^ 0x9e37_79b9_7f4a_7c15).with_mode(SimMode::Event),
    )?;
    let mut a = interval.tau_samples.clone();
    let mut b = event.tau_samples.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let ks = ks_two_sample(&a, &b);
    let critical = ks_critical_two_sample(a.len(), b.len());
    let chi_a = chi_square_homogeneity(&interval.counts_a, &event.counts_a);
    let chi_b = chi_square_homogeneity(&interval.counts_b, &event.counts_b);
    let passed = ks < critical && chi_a.p_value > SIGNIFICANCE && chi_b.p_value > SIGNIFICANCE;
    Ok(outcome(
        9,
        "simulator mode equivalence",
        passed,
        format!(
            "KS = {ks:.2e} (crit {critical:.2e}); chi2 A p = {:.3}, chi2 B p = {:.3} (level {SIGNIFICANCE}), {paths} paths per mode",
            chi_a.p_value, chi_b.p_value
        ),
    ))
}

/// Runs all checks in order. Simulations shared between checks run once.
pub fn run_all(config: &ValidationConfig) -> Result<Vec<CheckOutcome>> {
    let seed = config.seed;
    let mut results = vec![
        check_normalization(seed)?,
        check_dual_path(seed)?,
        check_closed_forms(seed)?,
    ];
    let sim_34 = reference_simulation(3, 4, config.mc_paths, seed)?;
    let rerun_34 = reference_simulation(3, 4, config.mc_paths, seed)?;
    results.push(check_monte_carlo(&sim_34, &rerun_34)?);
    drop(rerun_34);
    let sim_22 = reference_simulation(2, 2, config.mc_paths, seed.wrapping_add(1))?;
    results.push(check_tau_distribution(&sim_22)?);
    let sim_52 = reference_simulation(5, 2, config.mc_paths, seed.wrapping_add(2))?;
    results.push(check_casualty_pmfs(&[
        (2, 2, &sim_22),
        (3, 4, &sim_34),
        (5, 2, &sim_52),
    ])?);
    results.push(check_marginal_forms(seed)?);
    results.push(check_exact_inversion(seed)?);
    results.push(check_mode_equivalence(config.mode_paths, seed)?);
    Ok(results)
}
