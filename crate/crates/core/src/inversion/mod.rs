//! Recovering distributions from transforms.
//!
//! The pmfs of `A_rho` and `B_rho` come from their generating functions by
//! discrete Fourier sums on the unit circle; the density of `tau_rho` comes
//! from an exact partial-fraction expansion of its Laplace transform, checked
//! against a numeric Laplace inversion.

mod exact;

pub use exact::{
    erlang_tail, invert_gamma_erlang, invert_rational_term, tau_lst_terms, tau_pdf, ExpPolynomial,
    RationalLstTerm, TauDistribution, POLE_TOL,
};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{GameError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Pmf,
    Pdf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Empirical { stderr: Vec<f64> },
}

/// A pmf (integer support) or a sampled density (real grid).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionTable {
    pub kind: TableKind,
    pub support: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Entries down to this negative value are rounding noise and clipped silently.
const PMF_CLIP_SILENT: f64 = 1e-12;
const PDF_CLIP_SILENT: f64 = 1e-9;

impl DistributionTable {
    /// Builds an analytic table, clipping negative rounding noise to zero.
    pub fn analytic(kind: TableKind, support: Vec<f64>, mut values: Vec<f64>) -> Self {
        let silent = match kind {
            TableKind::Pmf => PMF_CLIP_SILENT,
            TableKind::Pdf => PDF_CLIP_SILENT,
        };
        let mut warnings = Vec::new();
        for (x, v) in support.iter().zip(values.iter_mut()) {
            if *v < 0.0 {
                if *v < -silent {
                    warnings.push(format!("clipped value {v:.3e} at {x} to zero"));
                }
                *v = 0.0;
            }
        }
        DistributionTable {
            kind,
            support,
            values,
            provenance: Provenance::Analytic,
            warnings,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Mass at integer `k` of a pmf table (zero off the support).
    pub fn mass(&self, k: u64) -> f64 {
        self.support
            .iter()
            .position(|&s| s == k as f64)
            .map_or(0.0, |i| self.values[i])
    }

    pub fn stderr(&self) -> Option<&[f64]> {
        match &self.provenance {
            Provenance::Empirical { stderr } => Some(stderr),
            Provenance::Analytic => None,
        }
    }
}

/// Minimum number of circle points for [`pgf_to_pmf`].
const PMF_MIN_POINTS: usize = 256;

/// Coefficients `0..=max_k` of a generating function analytic on the closed
/// unit disc, from `n >= 4 (max_k + 1)` samples on the unit circle.
pub fn pgf_to_pmf<G>(g: G, max_k: usize) -> Result<DistributionTable>
where
    G: Fn(Complex64) -> Result<Complex64>,
{
    let points = (4 * (max_k + 1)).max(PMF_MIN_POINTS).next_power_of_two();
    pgf_to_pmf_with(g, max_k, points)
}

/// [`pgf_to_pmf`] with an explicit number of circle points.
pub fn pgf_to_pmf_with<G>(g: G, max_k: usize, points: usize) -> Result<DistributionTable>
where
    G: Fn(Complex64) -> Result<Complex64>,
{
    if points < 4 * max_k.max(1) {
        return Err(GameError::GridTooCoarse {
            grid: points,
            order: max_k,
        });
    }
    let mut samples = (0..points)
        .map(|j| {
            g(Complex64::from_polar(
                1.0,
                std::f64::consts::TAU * j as f64 / points as f64,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    FftPlanner::<f64>::new()
        .plan_fft_forward(points)
        .process(&mut samples);
    let mut warnings = Vec::new();
    let values: Vec<f64> = samples[..=max_k]
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let c = c / points as f64;
            if c.im.abs() > 1e-10 {
                warnings.push(format!("imaginary residue {:.3e} at k = {k}", c.im));
            }
            c.re
        })
        .collect();
    let support = (0..=max_k).map(|k| k as f64).collect();
    let mut table = DistributionTable::analytic(TableKind::Pmf, support, values);
    table.warnings.splice(0..0, warnings);
    Ok(table)
}

/// Contour abscissa parameter: discretization error is about `exp(-A)`.
const EULER_A: f64 = 22.0;
/// Terms summed before Euler averaging.
const EULER_N: usize = 40;
/// Order of the binomial (Euler) average.
const EULER_M: usize = 20;

/// Numeric inverse Laplace transform by the Fourier-series method with Euler
/// summation.
///
/// The Bromwich integral is discretized by the trapezoidal rule on the line
/// `Re theta = A / (2t)`; the alternating series is accelerated by binomially
/// averaging the partial sums `s_N, ..., s_{N+M}`. Convergence is checked by
/// comparing the averages ending at `N + M` and `N + M - 1`.
pub fn laplace_invert_numeric<F>(f: F, t: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(t > 0.0) {
        return Err(GameError::InvalidArgument(format!(
            "numeric inversion needs t > 0, got {t}"
        )));
    }
    let shift = EULER_A / (2.0 * t);
    let scale = (EULER_A / 2.0).exp() / t;
    let total_terms = EULER_N + EULER_M;
    let mut partial = Vec::with_capacity(total_terms + 1);
    let mut sum = 0.5 * f(Complex64::new(shift, 0.0)).re;
    partial.push(sum);
    for k in 1..=total_terms {
        let term = f(Complex64::new(shift, std::f64::consts::PI * k as f64 / t)).re;
        sum += if k % 2 == 0 { term } else { -term };
        partial.push(sum);
    }
    let euler = |end: usize| -> f64 {
        let start = end - EULER_M;
        let mut binom = 1.0;
        let mut acc = 0.0;
        for (j, s) in partial[start..=end].iter().enumerate() {
            if j > 0 {
                binom *= (EULER_M - j + 1) as f64 / j as f64;
            }
            acc += binom * s;
        }
        acc / 2f64.powi(EULER_M as i32)
    };
    let value = scale * euler(total_terms);
    let previous = scale * euler(total_terms - 1);
    let spread = (value - previous).abs();
    if !value.is_finite() || spread > 1e-6 * (1.0 + value.abs()) {
        return Err(GameError::NonConvergent { t, spread });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_inversion_known_pairs() {
        let v = laplace_invert_numeric(|th| 1.0 / (th + 1.0), 1.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-8);
        let v = laplace_invert_numeric(|th| 1.0 / (th * th), 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
        let v = laplace_invert_numeric(|th| 1.0 / ((th + 1.0) * (th + 2.0)), 0.5).unwrap();
        assert!((v - ((-0.5f64).exp() - (-1.0f64).exp())).abs() < 1e-8);
        assert!(laplace_invert_numeric(|th| 1.0 / th, 0.0).is_err());
    }

    #[test]
    fn numeric_inversion_flags_nonsmooth_input() {
        // exp(-theta)/theta is a unit step at t = 1; the series does not settle there.
        let r = laplace_invert_numeric(|th| (-th).exp() / th, 1.0);
        assert!(matches!(r, Err(GameError::NonConvergent { .. })));
    }

    #[test]
    fn pmf_examples() {
        let t = pgf_to_pmf(|u| Ok(u.powu(3)), 10).unwrap();
        for k in 0..=10 {
            let expect = if k == 3 { 1.0 } else { 0.0 };
            assert!((t.mass(k) - expect).abs() < 1e-15);
        }
        let t = pgf_to_pmf(|u| Ok(0.5 + 0.5 * u), 4).unwrap();
        assert!((t.mass(0) - 0.5).abs() < 1e-15 && (t.mass(1) - 0.5).abs() < 1e-15);
        assert!(t.warnings.is_empty());
        assert!(matches!(
            pgf_to_pmf_with(Ok, 40, 64),
            Err(GameError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn pmf_reproduces_generating_function() {
        // geometric: g(u) = (1 - q) / (1 - q u)
        let q = 0.3;
        let g = |u: Complex64| Ok((1.0 - q) / (1.0 - q * u));
        let table = pgf_to_pmf(g, 60).unwrap();
        assert!((table.total() - 1.0).abs() < 1e-9);
        for &u in &[0.2, -0.7, 0.95] {
            let rebuilt: f64 = table
                .values
                .iter()
                .enumerate()
                .map(|(k, p)| p * f64::powi(u, k as i32))
                .sum();
            assert!((rebuilt - g(u.into()).unwrap().re).abs() < 1e-8);
        }
    }

    #[test]
    fn clipping_policy() {
        let t = DistributionTable::analytic(
            TableKind::Pmf,
            vec![0.0, 1.0, 2.0],
            vec![0.5, -1e-13, -1e-6],
        );
        assert_eq!(t.values, vec![0.5, 0.0, 0.0]);
        assert_eq!(t.warnings.len(), 1);
    }
}
