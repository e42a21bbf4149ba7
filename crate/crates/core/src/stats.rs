//! Goodness-of-fit statistics used to compare simulated and analytic laws.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Asymptotic Kolmogorov-Smirnov coefficient at the 1% level.
pub const KS_COEFF_1PCT: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Merges adjacent cells until every merged cell has expected count >= 5.
fn merge_cells(expected: &[f64], observed: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut e_out = Vec::new();
    let mut o_out: Vec<Vec<f64>> = vec![Vec::new(); observed.len()];
    let mut e_acc = 0.0;
    let mut o_acc = vec![0.0; observed.len()];
    for i in 0..expected.len() {
        e_acc += expected[i];
        for (acc, obs) in o_acc.iter_mut().zip(observed) {
            *acc += obs[i];
        }
        if e_acc >= 5.0 {
            e_out.push(e_acc);
            for (out, acc) in o_out.iter_mut().zip(o_acc.iter_mut()) {
                out.push(*acc);
                *acc = 0.0;
            }
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc.iter().any(|&x| x > 0.0) {
        if let Some(last) = e_out.last_mut() {
            *last += e_acc;
            for (out, acc) in o_out.iter_mut().zip(&o_acc) {
                *out.last_mut().unwrap() += acc;
            }
        } else {
            e_out.push(e_acc);
            for (out, acc) in o_out.iter_mut().zip(&o_acc) {
                out.push(*acc);
            }
        }
    }
    (e_out, o_out)
}

fn chi_square_p_value(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).map_or(f64::NAN, |d| d.sf(statistic))
}

/// Pearson test of observed counts against cell probabilities.
pub fn chi_square_goodness_of_fit(counts: &[u64], probs: &[f64]) -> ChiSquareTest {
    assert_eq!(counts.len(), probs.len());
    let n: f64 = counts.iter().map(|&c| c as f64).sum();
    let expected: Vec<f64> = probs.iter().map(|p| p * n).collect();
    let observed = vec![counts.iter().map(|&c| c as f64).collect::<Vec<_>>()];
    let (e, o) = merge_cells(&expected, &observed);
    let statistic = e.iter().zip(&o[0]).map(|(e, o)| (o - e).powi(2) / e).sum();
    let dof = e.len().saturating_sub(1);
    ChiSquareTest {
        statistic,
        dof,
        p_value: chi_square_p_value(statistic, dof),
    }
}

/// Two-sample chi-square test of homogeneity on a common integer support.
pub fn chi_square_homogeneity(first: &[u64], second: &[u64]) -> ChiSquareTest {
    let len = first.len().max(second.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0) as f64;
    let (n1, n2) = (
        first.iter().sum::<u64>() as f64,
        second.iter().sum::<u64>() as f64,
    );
    let total = n1 + n2;
    // merge on the smaller expected count of the two rows
    let pooled: Vec<f64> = (0..len)
        .map(|i| (get(first, i) + get(second, i)) * n1.min(n2) / total)
        .collect();
    let rows = vec![
        (0..len).map(|i| get(first, i)).collect::<Vec<_>>(),
        (0..len).map(|i| get(second, i)).collect::<Vec<_>>(),
    ];
    let (cells, merged) = merge_cells(&pooled, &rows);
    let mut statistic = 0.0;
    for i in 0..cells.len() {
        let col = merged[0][i] + merged[1][i];
        for (row, n) in merged.iter().zip([n1, n2]) {
            let e = col * n / total;
            if e > 0.0 {
                statistic += (row[i] - e).powi(2) / e;
            }
        }
    }
    let dof = cells.len().saturating_sub(1);
    ChiSquareTest {
        statistic,
        dof,
        p_value: chi_square_p_value(statistic, dof),
    }
}

/// `sup |F_n - F|` for sorted samples.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// `sup |F_n - G_m|` for two sorted samples.
pub fn ks_two_sample(first: &[f64], second: &[f64]) -> f64 {
    let (n, m) = (first.len() as f64, second.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < first.len() && j < second.len() {
        let x = first[i].min(second[j]);
        while i < first.len() && first[i] <= x {
            i += 1;
        }
        while j < second.len() && second[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

pub fn ks_critical_one_sample(n: usize) -> f64 {
    KS_COEFF_1PCT / (n as f64).sqrt()
}

pub fn ks_critical_two_sample(n: usize, m: usize) -> f64 {
    KS_COEFF_1PCT * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// `(1/2) sum |p_k - q_k|` over the union of the two supports (index = k).
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    0.5 * (0..len)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
