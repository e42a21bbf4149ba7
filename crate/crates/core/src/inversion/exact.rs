//! Exact inversion of rational Laplace transforms with real negative poles.

use serde::Serialize;

use crate::error::{GameError, Result};
use crate::model::GameParams;
use crate::series::negative_binomial_coeffs;

/// Minimum separation between distinct poles.
pub const POLE_TOL: f64 = 1e-9;

/// `1 - exp(-x) * sum_{i < n} x^i / i!`, the Erlang(n) distribution function
/// at `x` for `x >= 0`. Negative `x` is allowed and evaluated from the same sum.
pub fn erlang_tail(n: u32, x: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if x >= 0.0 && x < n as f64 + 1.0 {
        // exp(-x) sum_{i >= n} x^i / i! avoids cancellation for small x
        let mut term = (-x).exp();
        for i in 1..=n {
            term *= x / i as f64;
        }
        let mut total = 0.0;
        let mut i = n as f64;
        while term > total * 1e-17 && term > 0.0 {
            total += term;
            i += 1.0;
            term *= x / i;
        }
        total
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..n {
            term *= x / i as f64;
            sum += term;
        }
        1.0 - (-x).exp() * sum
    }
}

/// Inverse Laplace transform of `1 / ((gamma + theta)(lambda + theta)^m)` at `t`:
/// `exp(-gamma t) / (lambda - gamma)^m * erlang_tail(m, (lambda - gamma) t)`.
pub fn invert_gamma_erlang(gamma_pole: f64, pole1: f64, m: u32, t: f64) -> Result<f64> {
    if m == 0 {
        return Ok((-gamma_pole * t).exp());
    }
    let gap = pole1 - gamma_pole;
    if gap.abs() <= POLE_TOL {
        return Err(GameError::PolesTooClose(gamma_pole, pole1));
    }
    Ok((-gamma_pole * t).exp() / gap.powi(m as i32) * erlang_tail(m, gap * t))
}

/// `coeff / ((gamma_pole + theta)(pole1 + theta)^mult1 (pole2 + theta)^mult2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RationalLstTerm {
    pub coeff: f64,
    pub gamma_pole: f64,
    pub pole1: f64,
    pub mult1: u32,
    pub pole2: f64,
    pub mult2: u32,
}

impl RationalLstTerm {
    fn poles(&self) -> Vec<(f64, u32)> {
        let mut poles = vec![(self.gamma_pole, 1)];
        if self.mult1 > 0 {
            poles.push((self.pole1, self.mult1));
        }
        if self.mult2 > 0 {
            poles.push((self.pole2, self.mult2));
        }
        poles
    }

    pub fn to_exp_polynomial(&self) -> Result<ExpPolynomial> {
        ExpPolynomial::from_rational(self.coeff, &self.poles())
    }
}

pub fn invert_rational_term(term: &RationalLstTerm, t: f64) -> Result<f64> {
    if term.mult1 + term.mult2 > 400 {
        return Err(GameError::InvalidArgument(
            "total multiplicity above 400".into(),
        ));
    }
    Ok(term.to_exp_polynomial()?.eval(t))
}

/// `sum_i exp(-pole_i t) * sum_q coeffs_i[q] t^q`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ExpPolynomial {
    terms: Vec<(f64, Vec<f64>)>,
}

impl ExpPolynomial {
    /// Partial-fraction inverse of `coeff * prod_i (theta + pole_i)^{-mult_i}`.
    ///
    /// Around `theta = -p_i` write `h = theta + p_i`; the other factors expand as
    /// `(d + h)^{-m} = d^{-m} sum_r C(m + r - 1, r) (-h / d)^r` with `d = p_k - p_i`,
    /// and the coefficient of `h^{r - mult_i}` maps to `t^{mult_i - 1 - r} / (mult_i - 1 - r)!`.
    pub fn from_rational(coeff: f64, poles: &[(f64, u32)]) -> Result<Self> {
        for (i, &(p, _)) in poles.iter().enumerate() {
            for &(q, _) in &poles[i + 1..] {
                if (p - q).abs() <= POLE_TOL {
                    return Err(GameError::PolesTooClose(p, q));
                }
            }
        }
        let mut terms = Vec::new();
        for (i, &(pole, mult)) in poles.iter().enumerate() {
            if mult == 0 {
                continue;
            }
            let len = mult as usize;
            let mut local = vec![0.0; len];
            local[0] = 1.0;
            for (k, &(other, other_mult)) in poles.iter().enumerate() {
                if k == i || other_mult == 0 {
                    continue;
                }
                let d = other - pole;
                let binom = negative_binomial_coeffs(other_mult, len - 1);
                let scale = d.powi(-(other_mult as i32));
                let factor: Vec<f64> = binom
                    .iter()
                    .enumerate()
                    .map(|(r, c)| scale * c * (-1.0 / d).powi(r as i32))
                    .collect();
                let prev = local.clone();
                for n in 0..len {
                    local[n] = (0..=n).map(|r| prev[r] * factor[n - r]).sum();
                }
            }
            // coefficient of t^q with q = mult - 1 - r
            let mut poly = vec![0.0; len];
            let mut fact = 1.0;
            for q in 0..len {
                if q > 0 {
                    fact *= q as f64;
                }
                poly[q] = coeff * local[len - 1 - q] / fact;
            }
            terms.push((pole, poly));
        }
        Ok(ExpPolynomial { terms })
    }

    pub fn add(&mut self, other: &ExpPolynomial) {
        for (pole, poly) in &other.terms {
            match self.terms.iter_mut().find(|(p, _)| p == pole) {
                Some((_, existing)) => {
                    if existing.len() < poly.len() {
                        existing.resize(poly.len(), 0.0);
                    }
                    for (e, c) in existing.iter_mut().zip(poly) {
                        *e += c;
                    }
                }
                None => self.terms.push((*pole, poly.clone())),
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(pole, poly)| {
                let horner = poly.iter().rev().fold(0.0, |acc, c| acc * t + c);
                horner * (-pole * t).exp()
            })
            .sum()
    }

    /// `int_0^inf t^k f(t) dt`, valid when all poles are positive.
    pub fn moment(&self, k: u32) -> f64 {
        self.terms
            .iter()
            .map(|(pole, poly)| {
                // int t^{q+k} e^{-p t} = (q+k)! / p^{q+k+1}
                poly.iter()
                    .enumerate()
                    .map(|(q, c)| {
                        let n = q as u32 + k;
                        let fact: f64 = (1..=n).map(|i| i as f64).product();
                        c * fact / pole.powi(n as i32 + 1)
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Partial-fraction terms of `E[exp(-theta tau_rho)]` for exponential observations:
///
/// ```text
///   gamma lambda^M / ((gamma+theta)(lambda+theta)^M)
/// + sum_j C(N+j-1, j) gamma lambda^j mu^N / ((gamma+theta)(lambda+mu+theta)^{N+j})
/// - sum_j C(N+j-1, j) gamma lambda^M mu^N / ((gamma+theta)(lambda+theta)^{M-j}(lambda+mu+theta)^{N+j})
/// ```
pub fn tau_lst_terms(params: &GameParams) -> Result<Vec<RationalLstTerm>> {
    let gamma = params.observation_rate()?;
    let (lambda, mu, m, n) = (params.lambda, params.mu, params.m, params.n);
    let total = lambda + mu;
    for pole in [lambda, total] {
        if (pole - gamma).abs() <= POLE_TOL {
            return Err(GameError::PolesTooClose(gamma, pole));
        }
    }
    let mut terms = vec![RationalLstTerm {
        coeff: gamma * lambda.powi(m as i32),
        gamma_pole: gamma,
        pole1: lambda,
        mult1: m,
        pole2: total,
        mult2: 0,
    }];
    for (j, c) in negative_binomial_coeffs(n, m as usize - 1)
        .into_iter()
        .enumerate()
    {
        let j = j as u32;
        terms.push(RationalLstTerm {
            coeff: c * gamma * lambda.powi(j as i32) * mu.powi(n as i32),
            gamma_pole: gamma,
            pole1: lambda,
            mult1: 0,
            pole2: total,
            mult2: n + j,
        });
        terms.push(RationalLstTerm {
            coeff: -c * gamma * lambda.powi(m as i32) * mu.powi(n as i32),
            gamma_pole: gamma,
            pole1: lambda,
            mult1: m - j,
            pole2: total,
            mult2: n + j,
        });
    }
    Ok(terms)
}

/// Exact density and distribution function of `tau_rho`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauDistribution {
    pdf: ExpPolynomial,
    cdf: ExpPolynomial,
}

impl TauDistribution {
    pub fn new(params: &GameParams) -> Result<Self> {
        let mut pdf = ExpPolynomial::default();
        let mut cdf = ExpPolynomial::default();
        for term in tau_lst_terms(params)? {
            pdf.add(&term.to_exp_polynomial()?);
            // dividing the transform by theta integrates the density
            let mut poles = term.poles();
            poles.push((0.0, 1));
            cdf.add(&ExpPolynomial::from_rational(term.coeff, &poles)?);
        }
        Ok(TauDistribution { pdf, cdf })
    }

    pub fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            self.pdf.eval(t)
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.cdf.eval(t)
        }
    }

    /// `int_0^inf t^k pdf(t) dt`.
    pub fn moment(&self, k: u32) -> f64 {
        self.pdf.moment(k)
    }
}

/// Density of `tau_rho` at `t`. Builds the partial fractions on every call;
/// use [`TauDistribution`] for many points.
pub fn tau_pdf(params: &GameParams, t: f64) -> Result<f64> {
    Ok(TauDistribution::new(params)?.pdf(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::laplace_invert_numeric;
    use crate::transforms::marginal_tau_lst;
    use num_complex::Complex64;

    #[test]
    fn erlang_tail_examples() {
        assert_eq!(erlang_tail(1, 0.0), 0.0);
        assert!((erlang_tail(1, 2f64.ln()) - 0.5).abs() < 1e-15);
        assert!((erlang_tail(2, 1.0) - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((erlang_tail(2, 1.0) - 0.2642411).abs() < 1e-7);
        // negative argument: 1 - e^{2}(1 - 2) = 1 + e^2
        assert!((erlang_tail(2, -2.0) - (1.0 + 2f64.exp())).abs() < 1e-12);
        // tiny argument: ~ x^3/6
        assert!((erlang_tail(3, 1e-6) / (1e-18 / 6.0) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn gamma_erlang_examples() {
        for t in [0.0f64, 0.3, 1.0, 4.0] {
            let expect = (-t).exp() - (-2.0 * t).exp();
            assert!((invert_gamma_erlang(1.0, 2.0, 1, t).unwrap() - expect).abs() < 1e-15);
        }
        for m in 1..5 {
            assert_eq!(invert_gamma_erlang(1.0, 2.0, m, 0.0).unwrap(), 0.0);
        }
        let f = |th: Complex64| 1.0 / ((th + 1.0) * (th + 2.0).powu(3));
        let numeric = laplace_invert_numeric(f, 1.0).unwrap();
        assert!((invert_gamma_erlang(1.0, 2.0, 3, 1.0).unwrap() - numeric).abs() < 1e-8);
        assert!(matches!(
            invert_gamma_erlang(1.0, 1.0, 2, 1.0),
            Err(GameError::PolesTooClose(..))
        ));
    }

    #[test]
    fn gamma_erlang_matches_residues() {
        for (g, l, m) in [(5.0, 1.0, 4), (0.7, 3.0, 2), (2.0, 2.5, 6)] {
            let term = RationalLstTerm {
                coeff: 1.0,
                gamma_pole: g,
                pole1: l,
                mult1: m,
                pole2: 9.0,
                mult2: 0,
            };
            for t in [0.01, 0.5, 2.0, 9.0] {
                let a = invert_gamma_erlang(g, l, m, t).unwrap();
                let b = invert_rational_term(&term, t).unwrap();
                assert!(
                    (a - b).abs() < 1e-12 * (1.0 + a.abs()),
                    "{g} {l} {m} {t}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn rational_term_examples() {
        let single = RationalLstTerm {
            coeff: 1.0,
            gamma_pole: 1.5,
            pole1: 2.0,
            mult1: 0,
            pole2: 3.0,
            mult2: 0,
        };
        assert!((invert_rational_term(&single, 0.7).unwrap() - (-1.05f64).exp()).abs() < 1e-15);

        let term = RationalLstTerm {
            coeff: 1.0,
            gamma_pole: 1.0,
            pole1: 2.0,
            mult1: 1,
            pole2: 3.0,
            mult2: 1,
        };
        let f = |th: Complex64| 1.0 / ((th + 1.0) * (th + 2.0) * (th + 3.0));
        let numeric = laplace_invert_numeric(f, 1.0).unwrap();
        assert!((invert_rational_term(&term, 1.0).unwrap() - numeric).abs() < 1e-8);

        let heavy = RationalLstTerm {
            coeff: 2.5,
            gamma_pole: 0.5,
            pole1: 4.0,
            mult1: 5,
            pole2: 7.0,
            mult2: 3,
        };
        assert!(invert_rational_term(&heavy, 0.0).unwrap().abs() < 1e-12);

        let close = RationalLstTerm {
            coeff: 1.0,
            gamma_pole: 1.0,
            pole1: 1.0 + 1e-12,
            mult1: 1,
            pole2: 3.0,
            mult2: 1,
        };
        assert!(matches!(
            invert_rational_term(&close, 1.0),
            Err(GameError::PolesTooClose(..))
        ));
    }

    #[test]
    fn tau_density_normalization_and_moments() {
        let p = GameParams::exponential(1.0, 2.0, 5.0, 2, 2).unwrap();
        let dist = TauDistribution::new(&p).unwrap();
        assert!((dist.moment(0) - 1.0).abs() < 1e-12);
        assert!((dist.cdf(200.0) - 1.0).abs() < 1e-12);
        assert_eq!(dist.cdf(0.0), 0.0);
        // composite Simpson on [0, 60]; the tail beyond is below e^{-50}
        let (n, upper) = (60_000, 60.0);
        let h = upper / n as f64;
        let simpson: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n {
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
        assert!((simpson - 1.0).abs() < 1e-6);
        // mean from the transform: central difference of step h around theta = h
        let h = 1e-5;
        let lst = |th: f64| marginal_tau_lst(&p, Complex64::new(th, 0.0)).unwrap().re;
        let mean_fd = -(lst(2.0 * h) - lst(0.0)) / (2.0 * h);
        assert!((mean_fd / dist.moment(1) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn tau_density_rejects_confluent_poles() {
        let p = GameParams::exponential(1.0, 2.0, 3.0, 2, 2).unwrap();
        assert!(matches!(
            TauDistribution::new(&p),
            Err(GameError::PolesTooClose(..))
        ));
    }
}
