//! The joint functional `Phi(u, v, theta) = E[u^{A_rho} v^{B_rho} exp(-theta tau_rho)]`.
//!
//! Two independent routes are provided. [`phi_operator`] expands
//! `1 / (1 - g(ux, vy, theta))` as a truncated series (or through Cauchy
//! integrals) and applies `D^{M-1, N-1}`:
//!
//! ```text
//! Phi = 1 - (1 - g(u, v, theta)) * D^{M-1,N-1} { 1 / (1 - g(ux, vy, theta)) }
//! ```
//!
//! [`phi_closed`] is the closed form available for exponential observation
//! intervals of rate `gamma`:
//!
//! ```text
//! Phi = gamma / (gamma + s) * (1 - s / (lambda + mu (1 - v) + theta) * psi)
//! s   = lambda (1 - u) + mu (1 - v) + theta
//! psi = D^{M-1} { 1/(1 - b x) } - C^N D^{M-1} { 1/((1 - b x)(1 - a x)^N) }
//! ```
//!
//! with `p = lambda + mu + theta`, `a = lambda u / p`, `b = lambda u / (p - mu v)`
//! and `C = mu v / p`.
//!
//! Both routes are evaluated in rearranged forms that avoid subtracting from 1:
//!
//! * closed form: `s / (lambda + mu (1 - v) + theta) = 1 - b` and
//!   `(1 - b) D^{M-1} { 1/(1 - b x) } = 1 - b^M`, hence
//!   `Phi = gamma / (gamma + s) * (b^M + (1 - b) C^N D^{M-1} { 1/((1 - b x)(1 - a x)^N) })`.
//! * operator route with a rational LST: with `f(x, y) = 1/(1 - g(ux, vy, theta))`,
//!   `1 - (1 - g) D^{k,m} f` equals `(1 - g)` times the sum of the coefficients
//!   of `f` outside the box `[0, k] x [0, m]`. That sum is
//!   `[x^k] (f(1,1) - f(x,1)) / (1 - x) + sum_{i <= k} [x^i y^m] (f(x,1) - f(x,y)) / (1 - y)`,
//!   and both divided differences are formed exactly from the linear
//!   denominator of the LST.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::model::{DeltaLaw, GameParams, TransformQuery};
use crate::series::{
    d_op_from_series, d_op_geometric, d_op_product, d_op_via_cauchy, negative_binomial_coeffs,
    BivariateSeries,
};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `g(u, v, theta) = E[u^{X_1} v^{Y_1} exp(-theta tau_1)]`, the LST of the
/// observation interval at `theta + lambda (1 - u) + mu (1 - v)`.
pub fn gamma_joint(params: &GameParams, q: &TransformQuery) -> Complex64 {
    gamma_at(params, q.u(), q.v(), q.theta())
}

fn gamma_at(params: &GameParams, u: Complex64, v: Complex64, theta: Complex64) -> Complex64 {
    params
        .delta_law
        .lst(theta + params.lambda * (ONE - u) + params.mu * (ONE - v))
}

/// Intermediate quantities of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormIntermediates {
    pub p: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    pub c_big: Complex64,
    /// `D^{M-1} { 1/((1 - b x)(1 - a x)^N) }`.
    pub d_product: Complex64,
    pub psi: Complex64,
}

impl ClosedFormIntermediates {
    pub fn evaluate(params: &GameParams, q: &TransformQuery) -> Result<Self> {
        params.observation_rate()?;
        let (lambda, mu) = (params.lambda, params.mu);
        let (u, v, theta) = (q.u(), q.v(), q.theta());
        let p = theta + lambda + mu;
        let p_minus = p - mu * v;
        let a = lambda * u / p;
        let b = lambda * u / p_minus;
        let c_big = mu * v / p;
        let k = params.m as usize - 1;
        let d_product = d_op_product(k, a, b, params.n);
        let psi = d_op_geometric(k, b) - c_big.powu(params.n) * d_product;
        Ok(ClosedFormIntermediates {
            p,
            a,
            b,
            c_big,
            d_product,
            psi,
        })
    }
}

/// Closed-form `Phi` for exponential observation intervals.
pub fn phi_closed(params: &GameParams, q: &TransformQuery) -> Result<Complex64> {
    let gamma = params.observation_rate()?;
    let ints = ClosedFormIntermediates::evaluate(params, q)?;
    let s = params.lambda * (ONE - q.u()) + params.mu * (ONE - q.v()) + q.theta();
    let g = gamma / (gamma + s);
    // 1 - (1 - b) psi
    let rest = ints.b.powu(params.m) + (ONE - ints.b) * ints.c_big.powu(params.n) * ints.d_product;
    if cfg!(feature = "mutant-psi-sign") {
        // 1 + (1 - b) psi
        Ok(g * (2.0 - rest))
    } else {
        Ok(g * rest)
    }
}

/// `Phi` through the operator pipeline; works for every observation law.
pub fn phi_operator(params: &GameParams, q: &TransformQuery) -> Result<Complex64> {
    match params.delta_law {
        DeltaLaw::Exponential { rate } => phi_operator_rational(params, q, 1, rate),
        DeltaLaw::Erlang { shape, rate } => phi_operator_rational(params, q, shape, rate),
        DeltaLaw::Deterministic { .. } => {
            let d = d_op_kernel_cauchy(params, q)?;
            Ok(ONE - (ONE - gamma_joint(params, q)) * d)
        }
    }
}

/// `sum_{t < n} x^{n-1-t} y^t` for series `x` and scalar `y`.
fn power_difference_quotient(x: &BivariateSeries, y: Complex64, n: u32) -> BivariateSeries {
    let mut acc = BivariateSeries::zeros(x.max_deg_x(), x.max_deg_y());
    let mut y_pow = ONE;
    for t in 0..n {
        acc = &acc + &x.powu(n - 1 - t).scale(y_pow);
        y_pow *= y;
    }
    acc
}

/// Operator route for `g = (rate / L)^shape` with `L(x, y) = rate + theta + lambda + mu - lambda u x - mu v y`.
fn phi_operator_rational(
    params: &GameParams,
    q: &TransformQuery,
    shape: u32,
    rate: f64,
) -> Result<Complex64> {
    let (k, m) = (params.m as usize - 1, params.n as usize - 1);
    let base = q.theta() + params.lambda + params.mu + rate;
    let (bx, by) = (q.u() * params.lambda, q.v() * params.mu);
    let l_11 = base - bx - by;
    let r_pow = Complex64::new(rate.powi(shape as i32), 0.0);
    let l_11_pow = l_11.powu(shape);

    // L(x, 1) and L(x, y) on the (k, m) grid; f(x, 1) = L^shape / (L^shape - rate^shape)
    let l_x1 = BivariateSeries::linear(base - by, -bx, Complex64::new(0.0, 0.0), k, m);
    let l_xy = BivariateSeries::linear(base, -bx, -by, k, m);
    let l_x1_pow = l_x1.powu(shape);
    let l_xy_pow = l_xy.powu(shape);
    let f_x1 = &l_x1_pow * &(&l_x1_pow - &BivariateSeries::constant(r_pow, k, m)).reciprocal()?;
    let f_xy = &l_xy_pow * &(&l_xy_pow - &BivariateSeries::constant(r_pow, k, m)).reciprocal()?;

    // (g(1,1) - g(x,1)) / (1 - x) = rate^shape bx sum_t L(x,1)^{shape-1-t} L11^t / (L11 L(x,1))^shape
    let inv_x1_pow = l_x1_pow.reciprocal()?;
    let delta_x =
        (&power_difference_quotient(&l_x1, l_11, shape) * &inv_x1_pow).scale(r_pow * bx / l_11_pow);
    // f(1,1) - f(x,1) = (g(1,1) - g(x,1)) f(1,1) f(x,1); the f(1,1) cancels against 1 - g
    let outside_x = (&delta_x * &f_x1).coeff(k, 0);

    // (g(x,1) - g(x,y)) / (1 - y) = rate^shape by sum_t L(x,y)^{shape-1-t} L(x,1)^t / (L(x,1) L(x,y))^shape
    let mut cross = BivariateSeries::zeros(k, m);
    for t in 0..shape {
        cross = &cross + &(&l_xy.powu(shape - 1 - t) * &l_x1.powu(t));
    }
    let delta_y = (&(&cross * &inv_x1_pow) * &l_xy_pow.reciprocal()?).scale(r_pow * by);
    let outside_y = &(&delta_y * &f_x1) * &f_xy;
    let column: Complex64 = (0..=k).map(|i| outside_y.coeff(i, m)).sum();

    // 1 - g(u, v, theta) = (L11 - rate) sum_t L11^{shape-1-t} rate^t / L11^shape
    let s = l_11 - rate;
    let mut geo = Complex64::new(0.0, 0.0);
    for t in 0..shape {
        geo += l_11.powu(shape - 1 - t) * rate.powi(t as i32);
    }
    let one_minus_g = s * geo / l_11_pow;
    Ok(outside_x + one_minus_g * column)
}

/// Series for `g(ux, vy, theta)` when the observation LST is rational.
fn kernel_gamma_series(params: &GameParams, q: &TransformQuery) -> Result<BivariateSeries> {
    let (kx, ky) = (params.m as usize - 1, params.n as usize - 1);
    // composite LST argument: theta + lambda + mu - lambda u x - mu v y
    let arg = |rate: f64| {
        BivariateSeries::linear(
            q.theta() + params.lambda + params.mu + rate,
            -q.u() * params.lambda,
            -q.v() * params.mu,
            kx,
            ky,
        )
    };
    match params.delta_law {
        DeltaLaw::Exponential { rate } => Ok(arg(rate).reciprocal()?.scale(rate.into())),
        DeltaLaw::Erlang { shape, rate } => {
            Ok(arg(rate).reciprocal()?.scale(rate.into()).powu(shape))
        }
        DeltaLaw::Deterministic { value } => {
            // exp(-value * arg) factors into exponentials of x and y.
            let base = (-(q.theta() + params.lambda + params.mu) * value).exp();
            let sx = q.u() * params.lambda * value;
            let sy = q.v() * params.mu * value;
            let ex = exp_coeffs(sx, kx);
            let ey = exp_coeffs(sy, ky);
            Ok(BivariateSeries::from_fn(kx, ky, |i, j| {
                base * ex[i] * ey[j]
            }))
        }
    }
}

fn exp_coeffs(z: Complex64, k: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut term = ONE;
    out.push(term);
    for i in 1..=k {
        term = term * z / i as f64;
        out.push(term);
    }
    out
}

/// `D^{M-1,N-1} { 1 / (1 - g(ux, vy, theta)) }` from the truncated series.
pub fn d_op_kernel_series(params: &GameParams, q: &TransformQuery) -> Result<Complex64> {
    let g = kernel_gamma_series(params, q)?;
    let one = BivariateSeries::one(g.max_deg_x(), g.max_deg_y());
    let kernel = (&one - &g).reciprocal()?;
    d_op_from_series(&kernel, params.m as i64 - 1, params.n as i64 - 1)
}

/// The same operator value from Cauchy integrals of the pointwise kernel.
pub fn d_op_kernel_cauchy(params: &GameParams, q: &TransformQuery) -> Result<Complex64> {
    let (k, m) = (params.m as usize - 1, params.n as usize - 1);
    let order = k + m;
    // keep radius^{-(k+m)} below 1e4 without going under 0.5
    let radius = if order == 0 {
        0.5
    } else {
        (1e-4f64).powf(1.0 / order as f64).clamp(0.5, 0.95)
    };
    // aliasing decays like radius^grid; 1e-16 needs grid >= 37 / -ln(radius)
    let needed = (37.0 / -radius.ln()).ceil() as usize;
    let grid = needed.max(4 * k.max(m)).max(64).next_power_of_two();
    let f = |x: Complex64, y: Complex64| {
        ONE / (ONE - gamma_at(params, q.u() * x, q.v() * y, q.theta()))
    };
    d_op_via_cauchy(f, k as i64, m as i64, radius, grid)
}

/// `E[exp(-theta tau_rho)]`, the specialization `Phi(1, 1, theta)`.
pub fn marginal_tau_lst(params: &GameParams, theta: Complex64) -> Result<Complex64> {
    phi_closed(params, &TransformQuery::new(ONE, ONE, theta)?)
}

/// `E[u^{A_rho}]`, the specialization `Phi(u, 1, 0)`.
pub fn marginal_a_pgf(params: &GameParams, u: Complex64) -> Result<Complex64> {
    phi_closed(
        params,
        &TransformQuery::new(u, ONE, Complex64::new(0.0, 0.0))?,
    )
}

/// `E[v^{B_rho}]`, the specialization `Phi(1, v, 0)`.
pub fn marginal_b_pgf(params: &GameParams, v: Complex64) -> Result<Complex64> {
    phi_closed(
        params,
        &TransformQuery::new(ONE, v, Complex64::new(0.0, 0.0))?,
    )
}

/// Finite sums that appear in the separately simplified marginal transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalIntermediates {
    /// `F(theta) = sum_j C(N+j-1, j) (lambda/(lambda+mu+theta))^j (1 - (lambda/(lambda+theta))^{M-j})`
    pub f_sum: Complex64,
    /// `G(u) = sum_j C(N+j-1, j) (lambda u/(lambda+mu))^j (1 - u^{M-j})`
    pub g_sum: Complex64,
    /// `H(v) = sum_j C(N+j-1, j) (lambda/(lambda+mu))^j (1 - b^{M-j})`
    pub h_sum: Complex64,
    /// `b = lambda / (lambda + mu (1 - v))`
    pub b_marg: Complex64,
}

fn binomial_weighted_sum(params: &GameParams, ratio: Complex64, base: Complex64) -> Complex64 {
    let m = params.m as usize;
    negative_binomial_coeffs(params.n, m - 1)
        .into_iter()
        .enumerate()
        .map(|(j, c)| ratio.powu(j as u32) * c * (ONE - base.powu((m - j) as u32)))
        .sum()
}

impl MarginalIntermediates {
    /// `f_sum` at `theta`, `g_sum` at `u`, `h_sum` and `b_marg` at `v`.
    pub fn evaluate(params: &GameParams, u: Complex64, v: Complex64, theta: Complex64) -> Self {
        let (lambda, mu) = (params.lambda, params.mu);
        let b_marg = lambda / (lambda + mu * (ONE - v));
        MarginalIntermediates {
            f_sum: binomial_weighted_sum(
                params,
                lambda / (lambda + mu + theta),
                lambda / (lambda + theta),
            ),
            g_sum: binomial_weighted_sum(params, u * lambda / (lambda + mu), u),
            h_sum: binomial_weighted_sum(params, Complex64::from(lambda / (lambda + mu)), b_marg),
            b_marg,
        }
    }
}

/// `gamma/(gamma+theta) * [(lambda/(lambda+theta))^M + (mu/(lambda+mu+theta))^N F]`.
pub fn tau_lst_via_f_sum(params: &GameParams, theta: Complex64) -> Result<Complex64> {
    let gamma = params.observation_rate()?;
    let (lambda, mu) = (params.lambda, params.mu);
    let f = MarginalIntermediates::evaluate(params, ONE, ONE, theta).f_sum;
    Ok(gamma / (gamma + theta)
        * ((lambda / (lambda + theta)).powu(params.m)
            + (mu / (lambda + mu + theta)).powu(params.n) * f))
}

/// `gamma/(gamma+lambda(1-u)) * [u^M + (mu/(mu+lambda))^N G]`.
pub fn a_pgf_via_g_sum(params: &GameParams, u: Complex64) -> Result<Complex64> {
    let gamma = params.observation_rate()?;
    let (lambda, mu) = (params.lambda, params.mu);
    let g = MarginalIntermediates::evaluate(params, u, ONE, Complex64::new(0.0, 0.0)).g_sum;
    Ok(gamma / (gamma + lambda * (ONE - u))
        * (u.powu(params.m) + g * (mu / (mu + lambda)).powi(params.n as i32)))
}

/// `gamma/(gamma+mu(1-v)) * [b^M + (mu v/(lambda+mu))^N H]`.
pub fn b_pgf_via_h_sum(params: &GameParams, v: Complex64) -> Result<Complex64> {
    let gamma = params.observation_rate()?;
    let (lambda, mu) = (params.lambda, params.mu);
    let ints = MarginalIntermediates::evaluate(params, ONE, v, Complex64::new(0.0, 0.0));
    Ok(gamma / (gamma + mu * (ONE - v))
        * (ints.b_marg.powu(params.m) + (v * mu / (lambda + mu)).powu(params.n) * ints.h_sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::GameError;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn reference(m: u32, n: u32) -> GameParams {
        GameParams::exponential(1.0, 2.0, 5.0, m, n).unwrap()
    }

    fn rel_close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-3)
    }

    #[test]
    fn gamma_joint_examples() {
        let p = reference(3, 4);
        assert_eq!(
            gamma_joint(&p, &TransformQuery::real(1.0, 1.0, 0.0).unwrap()),
            ONE
        );
        let g = gamma_joint(&p, &TransformQuery::real(0.0, 0.0, 1.0).unwrap());
        assert!((g - c(5.0 / 9.0)).norm() < 1e-15);
        let det = GameParams::new(1.0, 2.0, DeltaLaw::Deterministic { value: 0.5 }, 3, 4).unwrap();
        let g = gamma_joint(&det, &TransformQuery::real(1.0, 1.0, 2.0).unwrap());
        assert!((g - c((-1.0f64).exp())).norm() < 1e-15);
    }

    #[test]
    fn normalization_at_unit_point() {
        let q = TransformQuery::real(1.0, 1.0, 0.0).unwrap();
        for (m, n) in [(1, 1), (3, 4), (10, 2)] {
            assert_eq!(phi_closed(&reference(m, n), &q).unwrap(), ONE);
            assert!((phi_operator(&reference(m, n), &q).unwrap() - ONE).norm() <= 1e-12);
        }
    }

    #[test]
    fn single_step_thresholds() {
        // M = N = 1: Phi = 1 - (1 - g(u, v, theta)) / (1 - g(0, 0, theta))
        let p = reference(1, 1);
        let q = TransformQuery::real(0.8, 0.8, 0.3).unwrap();
        let g = gamma_joint(&p, &q);
        let g0 = gamma_joint(&p, &TransformQuery::real(0.0, 0.0, 0.3).unwrap());
        let expect = ONE - (ONE - g) / (ONE - g0);
        assert!(rel_close(phi_closed(&p, &q).unwrap(), expect, 1e-14));
        assert!(rel_close(phi_operator(&p, &q).unwrap(), expect, 1e-14));
    }

    #[test]
    fn closed_form_matches_operator_at_reference_point() {
        let p = reference(3, 4);
        let q = TransformQuery::real(0.9, 0.7, 0.5).unwrap();
        assert!(rel_close(
            phi_closed(&p, &q).unwrap(),
            phi_operator(&p, &q).unwrap(),
            1e-9
        ));
        let ints = ClosedFormIntermediates::evaluate(&p, &q).unwrap();
        assert!((ints.b * (ints.p - 2.0 * 0.7) - ints.a * ints.p).norm() < 1e-12);
        assert!(ints.b.norm() < 1.0);
    }

    #[test]
    fn closed_form_matches_operator_on_grid() {
        let p = reference(3, 4);
        for u in [0.5, 0.8, 1.0] {
            for v in [0.5, 0.8, 1.0] {
                for theta in [0.0, 0.5, 1.0] {
                    let q = TransformQuery::real(u, v, theta).unwrap();
                    let (a, b) = (phi_closed(&p, &q).unwrap(), phi_operator(&p, &q).unwrap());
                    assert!(rel_close(a, b, 1e-9), "{u} {v} {theta}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn small_phi_keeps_relative_accuracy() {
        // reference value from a 50-digit evaluation of the coefficient sums
        let p =
            GameParams::exponential(0.12353760291596774, 4.23052844324195, 8.605609687235, 4, 7)
                .unwrap();
        let q = TransformQuery::new(
            Complex64::new(-0.3604408874770242, 0.11590255386029527),
            Complex64::new(0.09677975094360733, -0.1362104628148334),
            Complex64::new(2.8403925589634236, -1.29302983161391),
        )
        .unwrap();
        let expect = Complex64::new(2.6744913863019222e-8, 3.2405505012643133e-8);
        let (a, b) = (phi_closed(&p, &q).unwrap(), phi_operator(&p, &q).unwrap());
        assert!((a - expect).norm() <= 1e-12 * expect.norm(), "{a}");
        assert!((b - expect).norm() <= 1e-12 * expect.norm(), "{b}");
    }

    #[test]
    fn closed_form_rejects_other_laws() {
        let det = GameParams::new(1.0, 2.0, DeltaLaw::Deterministic { value: 0.2 }, 3, 4).unwrap();
        let q = TransformQuery::real(0.5, 0.5, 0.5).unwrap();
        assert_eq!(phi_closed(&det, &q), Err(GameError::NotClosedFormCapable));
        assert_eq!(
            marginal_tau_lst(&det, c(1.0)),
            Err(GameError::NotClosedFormCapable)
        );
    }

    #[test]
    fn deterministic_cauchy_route_matches_exact_series() {
        let det = GameParams::new(1.0, 2.0, DeltaLaw::Deterministic { value: 0.4 }, 4, 3).unwrap();
        let q = TransformQuery::new(c(0.9), Complex64::new(0.3, 0.5), Complex64::new(0.2, 1.0))
            .unwrap();
        let a = d_op_kernel_cauchy(&det, &q).unwrap();
        let b = d_op_kernel_series(&det, &q).unwrap();
        assert!(rel_close(a, b, 1e-10), "{a} vs {b}");
        let phi = phi_operator(&det, &TransformQuery::real(1.0, 1.0, 1e-9).unwrap()).unwrap();
        assert!((phi - ONE).norm() < 1e-6);
    }

    #[test]
    fn erlang_single_step() {
        let p = GameParams::new(
            1.0,
            2.0,
            DeltaLaw::Erlang {
                shape: 3,
                rate: 4.0,
            },
            1,
            1,
        )
        .unwrap();
        let q = TransformQuery::real(0.6, 0.2, 0.7).unwrap();
        let g = gamma_joint(&p, &q);
        let g0 = gamma_joint(&p, &TransformQuery::real(0.0, 0.0, 0.7).unwrap());
        assert!(rel_close(
            phi_operator(&p, &q).unwrap(),
            ONE - (ONE - g) / (ONE - g0),
            1e-13
        ));
    }

    #[test]
    fn marginal_specializations() {
        let p = reference(2, 2);
        assert_eq!(marginal_tau_lst(&p, c(0.0)).unwrap(), ONE);
        let direct = phi_closed(&p, &TransformQuery::real(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(marginal_tau_lst(&p, c(1.0)).unwrap(), direct);

        let p = reference(2, 3);
        assert!((marginal_a_pgf(&p, ONE).unwrap() - ONE).norm() < 1e-15);
        let direct = phi_closed(&p, &TransformQuery::real(0.5, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(marginal_a_pgf(&p, c(0.5)).unwrap(), direct);
        assert!(rel_close(
            a_pgf_via_g_sum(&p, c(0.5)).unwrap(),
            direct,
            1e-10
        ));

        let p = reference(3, 2);
        assert!((marginal_b_pgf(&p, ONE).unwrap() - ONE).norm() < 1e-15);
        let direct = phi_closed(&p, &TransformQuery::real(1.0, 0.5, 0.0).unwrap()).unwrap();
        assert_eq!(marginal_b_pgf(&p, c(0.5)).unwrap(), direct);
        assert!(rel_close(
            b_pgf_via_h_sum(&p, c(0.5)).unwrap(),
            direct,
            1e-10
        ));
    }

    #[test]
    fn tau_lst_f_sum_form() {
        let p = reference(2, 2);
        for theta in [0.1, 0.5, 1.0, 7.0] {
            let a = tau_lst_via_f_sum(&p, c(theta)).unwrap();
            let b = marginal_tau_lst(&p, c(theta)).unwrap();
            assert!(rel_close(a, b, 1e-10));
        }
    }

    fn params_strategy() -> impl Strategy<Value = GameParams> {
        (0.1f64..5.0, 0.1f64..5.0, 0.1f64..10.0, 1u32..=8, 1u32..=8)
            .prop_map(|(l, m, g, mm, nn)| GameParams::exponential(l, m, g, mm, nn).unwrap())
    }

    fn query_strategy() -> impl Strategy<Value = TransformQuery> {
        (
            0.0f64..=1.0,
            0.0f64..std::f64::consts::TAU,
            0.0f64..=1.0,
            0.0f64..std::f64::consts::TAU,
            0.0f64..5.0,
            -5.0f64..5.0,
        )
            .prop_map(|(ru, au, rv, av, tr, ti)| {
                TransformQuery::new(
                    Complex64::from_polar(ru, au),
                    Complex64::from_polar(rv, av),
                    Complex64::new(tr, ti),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn dual_routes_agree(p in params_strategy(), q in query_strategy()) {
            let a = phi_closed(&p, &q).unwrap();
            let b = phi_operator(&p, &q).unwrap();
            prop_assert!(rel_close(a, b, 1e-9), "{:?} {:?}: {} vs {}", p, q, a, b);
        }

        #[test]
        fn phi_is_bounded(p in params_strategy(), q in query_strategy()) {
            prop_assert!(phi_closed(&p, &q).unwrap().norm() <= 1.0 + 1e-10);
        }

        #[test]
        fn tau_lst_strictly_decreasing(p in params_strategy(), t1 in 0.0f64..5.0, dt in 0.01f64..5.0) {
            let a = marginal_tau_lst(&p, c(t1)).unwrap().re;
            let b = marginal_tau_lst(&p, c(t1 + dt)).unwrap().re;
            prop_assert!(a > b);
        }

        #[test]
        fn marginal_cross_check_forms(p in params_strategy(), x in 0.0f64..=1.0, theta in 0.0f64..5.0) {
            prop_assert!(rel_close(tau_lst_via_f_sum(&p, c(theta)).unwrap(), marginal_tau_lst(&p, c(theta)).unwrap(), 1e-10));
            prop_assert!(rel_close(a_pgf_via_g_sum(&p, c(x)).unwrap(), marginal_a_pgf(&p, c(x)).unwrap(), 1e-10));
            prop_assert!(rel_close(b_pgf_via_h_sum(&p, c(x)).unwrap(), marginal_b_pgf(&p, c(x)).unwrap(), 1e-10));
        }
    }
}
