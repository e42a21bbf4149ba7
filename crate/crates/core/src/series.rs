//! Truncated bivariate power series and the partial-sum operator `D`.
//!
//! `D^{k,m}_{x,y} phi` is the `(k, m)` Taylor coefficient of
//! `phi(x, y) / ((1 - x)(1 - y))` at the origin, i.e. the sum of the
//! coefficients `c_{ij}` of `phi` with `i <= k`, `j <= m`; it vanishes when
//! `k < 0` or `m < 0`. Three realizations live here: exact partial sums of a
//! truncated series, closed forms for the rational families that appear in
//! the game, and numeric extraction through Cauchy integrals on a torus.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{GameError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense series `sum c_{ij} x^i y^j` truncated at `i <= max_deg_x`, `j <= max_deg_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSeries {
    max_deg_x: usize,
    max_deg_y: usize,
    coeffs: Vec<Complex64>,
}

impl BivariateSeries {
    pub fn zeros(max_deg_x: usize, max_deg_y: usize) -> Self {
        BivariateSeries {
            max_deg_x,
            max_deg_y,
            coeffs: vec![ZERO; (max_deg_x + 1) * (max_deg_y + 1)],
        }
    }

    pub fn constant(value: Complex64, max_deg_x: usize, max_deg_y: usize) -> Self {
        let mut s = Self::zeros(max_deg_x, max_deg_y);
        s.coeffs[0] = value;
        s
    }

    pub fn one(max_deg_x: usize, max_deg_y: usize) -> Self {
        Self::constant(ONE, max_deg_x, max_deg_y)
    }

    /// `c0 + cx * x + cy * y`, truncated.
    pub fn linear(
        c0: Complex64,
        cx: Complex64,
        cy: Complex64,
        max_deg_x: usize,
        max_deg_y: usize,
    ) -> Self {
        let mut s = Self::constant(c0, max_deg_x, max_deg_y);
        if max_deg_x >= 1 {
            s.set(1, 0, cx);
        }
        if max_deg_y >= 1 {
            s.set(0, 1, cy);
        }
        s
    }

    pub fn from_fn(
        max_deg_x: usize,
        max_deg_y: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut s = Self::zeros(max_deg_x, max_deg_y);
        for i in 0..=max_deg_x {
            for j in 0..=max_deg_y {
                s.set(i, j, f(i, j));
            }
        }
        s
    }

    pub fn max_deg_x(&self) -> usize {
        self.max_deg_x
    }

    pub fn max_deg_y(&self) -> usize {
        self.max_deg_y
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.max_deg_y + 1) + j
    }

    /// Coefficient of `x^i y^j`; zero beyond the truncation orders.
    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        if i <= self.max_deg_x && j <= self.max_deg_y {
            self.coeffs[self.idx(i, j)]
        } else {
            ZERO
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        let k = self.idx(i, j);
        self.coeffs[k] = value;
    }

    fn assert_same_shape(&self, other: &Self) {
        assert_eq!(
            (self.max_deg_x, self.max_deg_y),
            (other.max_deg_x, other.max_deg_y),
            "series truncation orders differ"
        );
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        BivariateSeries {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            ..*self
        }
    }

    /// Multiplies by the monomial `x^j`, dropping terms beyond the truncation.
    pub fn shift_x(&self, j: usize) -> Self {
        Self::from_fn(self.max_deg_x, self.max_deg_y, |i, l| {
            if i >= j {
                self.coeff(i - j, l)
            } else {
                ZERO
            }
        })
    }

    pub fn mul_truncated(&self, other: &Self) -> Self {
        self.assert_same_shape(other);
        let mut out = Self::zeros(self.max_deg_x, self.max_deg_y);
        for p in 0..=self.max_deg_x {
            for q in 0..=self.max_deg_y {
                let a = self.coeff(p, q);
                if a == ZERO {
                    continue;
                }
                for i in 0..=(self.max_deg_x - p) {
                    for j in 0..=(self.max_deg_y - q) {
                        let k = out.idx(p + i, q + j);
                        out.coeffs[k] += a * other.coeff(i, j);
                    }
                }
            }
        }
        out
    }

    pub fn powu(&self, exp: u32) -> Self {
        let mut acc = Self::one(self.max_deg_x, self.max_deg_y);
        for _ in 0..exp {
            acc = acc.mul_truncated(self);
        }
        acc
    }

    /// Multiplicative inverse on the retained grid.
    pub fn reciprocal(&self) -> Result<Self> {
        let c00 = self.coeff(0, 0);
        if c00.norm() <= 1e-14 {
            return Err(GameError::SingularConstantTerm(c00.norm()));
        }
        let inv00 = c00.inv();
        let mut r = Self::zeros(self.max_deg_x, self.max_deg_y);
        for i in 0..=self.max_deg_x {
            for j in 0..=self.max_deg_y {
                if i == 0 && j == 0 {
                    r.set(0, 0, inv00);
                    continue;
                }
                let mut acc = ZERO;
                for p in 0..=i {
                    for q in 0..=j {
                        if p == 0 && q == 0 {
                            continue;
                        }
                        acc += self.coeff(p, q) * r.coeff(i - p, j - q);
                    }
                }
                r.set(i, j, -acc * inv00);
            }
        }
        Ok(r)
    }

    /// Applies `D^k_x` only: the result is a series in `y` (x-order 0).
    pub fn d_op_x(&self, k: i64) -> Self {
        let mut out = Self::zeros(0, self.max_deg_y);
        if k < 0 {
            return out;
        }
        let k = (k as usize).min(self.max_deg_x);
        for j in 0..=self.max_deg_y {
            out.set(0, j, (0..=k).map(|i| self.coeff(i, j)).sum());
        }
        out
    }

    /// Applies `D^m_y` only: the result is a series in `x` (y-order 0).
    pub fn d_op_y(&self, m: i64) -> Self {
        let mut out = Self::zeros(self.max_deg_x, 0);
        if m < 0 {
            return out;
        }
        let m = (m as usize).min(self.max_deg_y);
        for i in 0..=self.max_deg_x {
            out.set(i, 0, (0..=m).map(|j| self.coeff(i, j)).sum());
        }
        out
    }
}

impl Add for &BivariateSeries {
    type Output = BivariateSeries;

    fn add(self, rhs: &BivariateSeries) -> BivariateSeries {
        self.assert_same_shape(rhs);
        BivariateSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            ..*self
        }
    }
}

impl Sub for &BivariateSeries {
    type Output = BivariateSeries;

    fn sub(self, rhs: &BivariateSeries) -> BivariateSeries {
        self.assert_same_shape(rhs);
        BivariateSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
            ..*self
        }
    }
}

impl Neg for &BivariateSeries {
    type Output = BivariateSeries;

    fn neg(self) -> BivariateSeries {
        self.scale(-ONE)
    }
}

impl Mul for &BivariateSeries {
    type Output = BivariateSeries;

    fn mul(self, rhs: &BivariateSeries) -> BivariateSeries {
        self.mul_truncated(rhs)
    }
}

pub fn series_reciprocal(s: &BivariateSeries) -> Result<BivariateSeries> {
    s.reciprocal()
}

/// `D^{k,m}` of a truncated series: the partial sum of `c_{ij}` over `i <= k`, `j <= m`.
pub fn d_op_from_series(s: &BivariateSeries, k: i64, m: i64) -> Result<Complex64> {
    if k < 0 || m < 0 {
        return Ok(ZERO);
    }
    let (k, m) = (k as usize, m as usize);
    if k > s.max_deg_x || m > s.max_deg_y {
        return Err(GameError::TruncationTooSmall {
            k,
            m,
            max_x: s.max_deg_x,
            max_y: s.max_deg_y,
        });
    }
    let mut total = ZERO;
    for i in 0..=k {
        for j in 0..=m {
            total += s.coeff(i, j);
        }
    }
    Ok(total)
}

/// Below this distance from `b = 1` the `b = 1` branch (with a first-order
/// correction) replaces the quotient `(1 - b^{k+1}) / (1 - b)`.
pub const UNIT_BRANCH_TOL: f64 = 1e-9;

/// Between `UNIT_BRANCH_TOL` and this distance from `b = 1` the quotient loses
/// too many digits to cancellation; the partial sums are accumulated directly.
const DIRECT_SUM_TOL: f64 = 0.25;

const ZERO_B_TOL: f64 = 1e-14;

/// `D^k_x { 1 / (1 - b x) } = 1 + b + ... + b^k`.
pub fn d_op_geometric(k: usize, b: Complex64) -> Complex64 {
    let gap = ONE - b;
    let kf = k as f64;
    if gap.norm() <= UNIT_BRANCH_TOL {
        // k + 1 - (1 - b) k (k + 1) / 2 + O((1 - b)^2)
        Complex64::from(kf + 1.0) - gap * (kf * (kf + 1.0) / 2.0)
    } else if gap.norm() < DIRECT_SUM_TOL {
        geometric_partial_sums(k, b)[k]
    } else {
        (ONE - b.powu(k as u32 + 1)) / gap
    }
}

/// `[1, 1 + b, ..., 1 + b + ... + b^k]`.
fn geometric_partial_sums(k: usize, b: Complex64) -> Vec<Complex64> {
    let mut sums = Vec::with_capacity(k + 1);
    let mut power = ONE;
    let mut acc = ZERO;
    for _ in 0..=k {
        acc += power;
        sums.push(acc);
        power *= b;
    }
    sums
}

/// `C(n + j - 1, j)` for `j = 0..=k`, by the multiplicative recurrence.
pub fn negative_binomial_coeffs(n: u32, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut c = 1.0;
    out.push(c);
    for j in 1..=k {
        c *= (n as f64 + j as f64 - 1.0) / j as f64;
        out.push(c);
    }
    out
}

/// `D^k_x { (1 - a x)^{-n} } = sum_{j <= k} C(n + j - 1, j) a^j`.
pub fn d_op_power(k: usize, a: Complex64, n: u32) -> Complex64 {
    if a == ONE && n == 1 {
        return Complex64::from(k as f64 + 1.0);
    }
    let binom = negative_binomial_coeffs(n, k);
    let mut power = ONE;
    let mut total = ZERO;
    for c in binom {
        total += power * c;
        power *= a;
    }
    total
}

/// `D^k_x { (1 - b x)^{-1} (1 - a x)^{-n} }`.
pub fn d_op_product(k: usize, a: Complex64, b: Complex64, n: u32) -> Complex64 {
    if b.norm() <= ZERO_B_TOL {
        return d_op_power(k, a, n);
    }
    let binom = negative_binomial_coeffs(n, k);
    let gap = ONE - b;
    let mut total = ZERO;
    let mut a_pow = ONE;
    if gap.norm() <= UNIT_BRANCH_TOL {
        // sum_j C a^j (k - j + 1), corrected to first order in (1 - b)
        for (j, c) in binom.iter().enumerate() {
            let r = (k - j) as f64;
            total += a_pow * *c * (Complex64::from(r + 1.0) - gap * (r * (r + 1.0) / 2.0));
            a_pow *= a;
        }
    } else if gap.norm() < DIRECT_SUM_TOL {
        let geo = geometric_partial_sums(k, b);
        for (j, c) in binom.iter().enumerate() {
            total += a_pow * *c * geo[k - j];
            a_pow *= a;
        }
    } else {
        // (1 / (1 - b)) sum_j C (a^j - b^{k+1} (a / b)^j), with b^{k+1-j} a^j
        // formed without dividing by b.
        for (j, c) in binom.iter().enumerate() {
            total += a_pow * *c * (ONE - b.powu((k + 1 - j) as u32));
            a_pow *= a;
        }
        total /= gap;
    }
    total
}

/// `D^{k,m}` of an analytic function through Cauchy integrals on the torus
/// `|x| = |y| = radius`, sampled on a `grid x grid` lattice.
///
/// Aliasing contaminates `c_{ij}` by terms of order `(radius / R)^grid` where
/// `R` is the radius of convergence in each variable, and roundoff is scaled by
/// `radius^{-(k + m)}`.
pub fn d_op_via_cauchy<F>(f: F, k: i64, m: i64, radius: f64, grid: usize) -> Result<Complex64>
where
    F: Fn(Complex64, Complex64) -> Complex64,
{
    if k < 0 || m < 0 {
        return Ok(ZERO);
    }
    let (k, m) = (k as usize, m as usize);
    let order = k.max(m);
    if grid < 4 * order.max(1) {
        return Err(GameError::GridTooCoarse { grid, order });
    }
    if !(radius > 0.0 && radius < 1.0) {
        return Err(GameError::InvalidArgument(format!(
            "Cauchy radius {radius} must lie in (0, 1)"
        )));
    }
    let coeffs = cauchy_coefficients(&f, radius, grid);
    let mut total = ZERO;
    for i in 0..=k {
        for j in 0..=m {
            total += coeffs[i * grid + j] / radius.powi((i + j) as i32);
        }
    }
    Ok(total)
}

/// Taylor coefficients scaled by `radius^{i+j}`, via a 2-D FFT of the samples.
fn cauchy_coefficients<F>(f: &F, radius: f64, grid: usize) -> Vec<Complex64>
where
    F: Fn(Complex64, Complex64) -> Complex64,
{
    let nodes: Vec<Complex64> = (0..grid)
        .map(|p| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * p as f64 / grid as f64))
        .collect();
    let mut values: Vec<Complex64> = Vec::with_capacity(grid * grid);
    for x in &nodes {
        for y in &nodes {
            values.push(f(*x, *y));
        }
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(grid);
    // rows (y direction), then columns (x direction)
    for row in values.chunks_mut(grid) {
        fft.process(row);
    }
    let mut column = vec![ZERO; grid];
    for j in 0..grid {
        for i in 0..grid {
            column[i] = values[i * grid + j];
        }
        fft.process(&mut column);
        for i in 0..grid {
            values[i * grid + j] = column[i];
        }
    }
    let norm = (grid * grid) as f64;
    values.iter_mut().for_each(|c| *c /= norm);
    values
}
