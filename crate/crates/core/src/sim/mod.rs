//! Monte Carlo simulation of the delayed game.
//!
//! Two path generators are provided. `Interval` mode draws each observation
//! interval and then the Poisson casualty counts of that interval. `Event`
//! mode generates the individual attack epochs of both streams from
//! exponential inter-arrival times and counts the attacks falling in each
//! observation window. Both produce the same law; keeping them algorithmically
//! separate makes each one a check on the other.

mod poisson;

pub use poisson::sample_poisson;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::inversion::{DistributionTable, Provenance, TableKind};
use crate::model::{DeltaLaw, GameParams, PathOutcome, TransformQuery};

/// Paths simulated per child stream.
pub const BATCH_SIZE: u64 = 4096;

pub const DEFAULT_MAX_OBSERVATIONS: u64 = 10_000_000;

/// Independent generator for `(seed, index)`: the ChaCha key comes from the
/// seed and the index selects the stream, so no state is shared between batches.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    #[default]
    Interval,
    Event,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_paths: u64,
    pub seed: u64,
    pub mode: SimMode,
    pub max_observations: u64,
    pub query_points: Vec<TransformQuery>,
}

impl SimConfig {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        SimConfig {
            n_paths,
            seed,
            mode: SimMode::Interval,
            max_observations: DEFAULT_MAX_OBSERVATIONS,
            query_points: Vec::new(),
        }
    }

    pub fn with_mode(mut self, mode: SimMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_queries(mut self, queries: Vec<TransformQuery>) -> Self {
        self.query_points = queries;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(GameError::InvalidArgument(
                "n_paths must be at least 1".into(),
            ));
        }
        if self.max_observations == 0 {
            return Err(GameError::InvalidArgument(
                "max_observations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn sample_delta<R: Rng + ?Sized>(law: &DeltaLaw, rng: &mut R) -> f64 {
    match *law {
        DeltaLaw::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
        DeltaLaw::Deterministic { value } => value,
        DeltaLaw::Erlang { shape, rate } => {
            let exp = Exp::new(rate).expect("validated rate");
            (0..shape).map(|_| exp.sample(rng)).sum()
        }
    }
}

/// Running state of one path, advanced one observation at a time.
struct PathState {
    m: u64,
    n: u64,
    index: u64,
    a: u64,
    b: u64,
    tau: f64,
    nu1: Option<u64>,
    nu2: Option<u64>,
    exit: Option<(u64, u64, u64, f64, u64, u64, f64)>,
    xs: Option<Vec<u64>>,
    ys: Option<Vec<u64>>,
}

impl PathState {
    fn new(params: &GameParams, record: bool) -> Self {
        PathState {
            m: params.m as u64,
            n: params.n as u64,
            index: 0,
            a: 0,
            b: 0,
            tau: 0.0,
            nu1: None,
            nu2: None,
            exit: None,
            // index 0 carries the zero initial increments
            xs: record.then(|| vec![0]),
            ys: record.then(|| vec![0]),
        }
    }

    fn advance(&mut self, dt: f64, x: u64, y: u64) {
        let (a_prev, b_prev, tau_prev) = (self.a, self.b, self.tau);
        self.index += 1;
        self.a += x;
        self.b += y;
        self.tau += dt;
        if let (Some(xs), Some(ys)) = (self.xs.as_mut(), self.ys.as_mut()) {
            xs.push(x);
            ys.push(y);
        }
        if self.exit.is_none() && (self.a >= self.m || self.b >= self.n) {
            self.exit = Some((
                self.index, self.a, self.b, self.tau, a_prev, b_prev, tau_prev,
            ));
        }
        if self.nu1.is_none() && self.a >= self.m {
            self.nu1 = Some(self.index);
        }
        if self.nu2.is_none() && self.b >= self.n {
            self.nu2 = Some(self.index);
        }
    }

    fn done(&self) -> bool {
        self.nu1.is_some() && self.nu2.is_some()
    }

    fn finish(self) -> PathOutcome {
        let (rho, a_rho, b_rho, tau_rho, a_pre, b_pre, tau_pre) =
            self.exit.expect("finished path has an exit");
        PathOutcome {
            nu1: self.nu1.unwrap(),
            nu2: self.nu2.unwrap(),
            rho,
            tau_rho,
            a_rho,
            b_rho,
            a_pre,
            b_pre,
            tau_pre,
            x_increments: self.xs,
            y_increments: self.ys,
        }
    }
}

/// Simulates one game until both thresholds have been crossed, so that both
/// exit indices are known. `record` keeps the per-interval casualty counts.
pub fn simulate_path<R: Rng + ?Sized>(
    params: &GameParams,
    mode: SimMode,
    rng: &mut R,
    max_observations: u64,
    record: bool,
) -> Result<PathOutcome> {
    let mut state = PathState::new(params, record);
    match mode {
        SimMode::Interval => {
            while !state.done() {
                if state.index >= max_observations {
                    return Err(GameError::MaxObservationsExceeded(max_observations));
                }
                let dt = sample_delta(&params.delta_law, rng);
                let x = sample_poisson(rng, params.lambda * dt);
                let y = sample_poisson(rng, params.mu * dt);
                state.advance(dt, x, y);
            }
        }
        SimMode::Event => {
            let attack_a = Exp::new(params.lambda).expect("validated rate");
            let attack_b = Exp::new(params.mu).expect("validated rate");
            let mut next_a = attack_a.sample(rng);
            let mut next_b = attack_b.sample(rng);
            while !state.done() {
                if state.index >= max_observations {
                    return Err(GameError::MaxObservationsExceeded(max_observations));
                }
                let dt = sample_delta(&params.delta_law, rng);
                let epoch = state.tau + dt;
                let mut x = 0;
                while next_a <= epoch {
                    x += 1;
                    next_a += attack_a.sample(rng);
                }
                let mut y = 0;
                while next_b <= epoch {
                    y += 1;
                    next_b += attack_b.sample(rng);
                }
                state.advance(dt, x, y);
            }
        }
    }
    Ok(state.finish())
}

/// Mean and standard error of `u^{A_rho} v^{B_rho} exp(-theta tau_rho)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalEstimate {
    pub query: TransformQuery,
    pub mean: Complex64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct WinCounts {
    pub a_defeated: u64,
    pub b_defeated: u64,
    pub simultaneous: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauHistogram {
    pub rule: &'static str,
    pub bin_width: f64,
    pub origin: f64,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub n_paths: u64,
    pub seed: u64,
    pub mode: SimMode,
    pub functional_estimates: Vec<FunctionalEstimate>,
    pub pmf_a: DistributionTable,
    pub pmf_b: DistributionTable,
    pub tau_histogram: TauHistogram,
    pub win_counts: WinCounts,
    /// Observed ruin times in path order.
    #[serde(skip)]
    pub tau_samples: Vec<f64>,
    #[serde(skip)]
    pub counts_a: Vec<u64>,
    #[serde(skip)]
    pub counts_b: Vec<u64>,
}

fn bump(counts: &mut Vec<u64>, k: u64) {
    let k = k as usize;
    if counts.len() <= k {
        counts.resize(k + 1, 0);
    }
    counts[k] += 1;
}

fn add_counts(into: &mut Vec<u64>, from: &[u64]) {
    if into.len() < from.len() {
        into.resize(from.len(), 0);
    }
    for (i, c) in into.iter_mut().zip(from) {
        *i += c;
    }
}

/// Accumulates outcomes; merging in a fixed order keeps sums reproducible.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    n: u64,
    sums: Vec<Complex64>,
    sums_sq: Vec<f64>,
    counts_a: Vec<u64>,
    counts_b: Vec<u64>,
    taus: Vec<f64>,
    wins: WinCounts,
}

impl Accumulator {
    fn new(queries: usize) -> Self {
        Accumulator {
            sums: vec![Complex64::new(0.0, 0.0); queries],
            sums_sq: vec![0.0; queries],
            ..Default::default()
        }
    }

    fn push(&mut self, outcome: &PathOutcome, queries: &[TransformQuery]) {
        self.n += 1;
        for (i, q) in queries.iter().enumerate() {
            let z = integrand(q, outcome);
            self.sums[i] += z;
            self.sums_sq[i] += z.norm_sqr();
        }
        bump(&mut self.counts_a, outcome.a_rho);
        bump(&mut self.counts_b, outcome.b_rho);
        self.taus.push(outcome.tau_rho);
        match (outcome.a_defeated(), outcome.b_defeated()) {
            (true, true) => self.wins.simultaneous += 1,
            (true, false) => self.wins.a_defeated += 1,
            _ => self.wins.b_defeated += 1,
        }
    }

    fn merge(&mut self, other: Accumulator) {
        self.n += other.n;
        for (s, o) in self.sums.iter_mut().zip(other.sums) {
            *s += o;
        }
        for (s, o) in self.sums_sq.iter_mut().zip(other.sums_sq) {
            *s += o;
        }
        add_counts(&mut self.counts_a, &other.counts_a);
        add_counts(&mut self.counts_b, &other.counts_b);
        self.taus.extend(other.taus);
        self.wins.a_defeated += other.wins.a_defeated;
        self.wins.b_defeated += other.wins.b_defeated;
        self.wins.simultaneous += other.wins.simultaneous;
    }

    fn finish(self, config: &SimConfig) -> SimSummary {
        let n = self.n as f64;
        let functional_estimates = config
            .query_points
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let mean = self.sums[i] / n;
                let var = (self.sums_sq[i] / n - mean.norm_sqr()).max(0.0);
                // sample variance with the n - 1 correction
                let var = if self.n > 1 { var * n / (n - 1.0) } else { 0.0 };
                FunctionalEstimate {
                    query: *q,
                    mean,
                    stderr: (var / n).sqrt(),
                }
            })
            .collect();
        SimSummary {
            n_paths: self.n,
            seed: config.seed,
            mode: config.mode,
            functional_estimates,
            pmf_a: empirical_pmf(&self.counts_a, self.n),
            pmf_b: empirical_pmf(&self.counts_b, self.n),
            tau_histogram: tau_histogram(&self.taus),
            win_counts: self.wins,
            tau_samples: self.taus,
            counts_a: self.counts_a,
            counts_b: self.counts_b,
        }
    }
}

fn integrand(q: &TransformQuery, o: &PathOutcome) -> Complex64 {
    let pow = |z: Complex64, k: u64| {
        if k == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            z.powu(k as u32)
        }
    };
    pow(q.u(), o.a_rho) * pow(q.v(), o.b_rho) * (-q.theta() * o.tau_rho).exp()
}

fn empirical_pmf(counts: &[u64], n: u64) -> DistributionTable {
    let n = n as f64;
    let values: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let stderr = values.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    DistributionTable {
        kind: TableKind::Pmf,
        support: (0..counts.len()).map(|k| k as f64).collect(),
        values,
        provenance: Provenance::Empirical { stderr },
        warnings: Vec::new(),
    }
}

/// Histogram of positive samples with the Freedman-Diaconis bin width.
fn tau_histogram(samples: &[f64]) -> TauHistogram {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let quantile = |p: f64| sorted[((p * (n - 1) as f64).round() as usize).min(n - 1)];
    let iqr = quantile(0.75) - quantile(0.25);
    let max = sorted[n - 1];
    let mut width = 2.0 * iqr / (n as f64).cbrt();
    if !(width > 0.0) {
        width = if max > 0.0 { max } else { 1.0 };
    }
    let bins = ((max / width).floor() as usize + 1).min(1_000_000);
    let mut counts = vec![0u64; bins];
    for &t in &sorted {
        counts[((t / width) as usize).min(bins - 1)] += 1;
    }
    let nf = n as f64;
    let density = counts.iter().map(|&c| c as f64 / (nf * width)).collect();
    let stderr = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / nf;
            (p * (1.0 - p) / nf).sqrt() / width
        })
        .collect();
    TauHistogram {
        rule: "freedman-diaconis",
        bin_width: width,
        origin: 0.0,
        counts,
        density,
        stderr,
    }
}

/// Empirical pmfs of `A_rho`, `B_rho` and the histogram of `tau_rho`.
pub fn empirical_distributions(
    outcomes: &[PathOutcome],
) -> Result<(DistributionTable, DistributionTable, TauHistogram)> {
    if outcomes.is_empty() {
        return Err(GameError::InvalidArgument("no outcomes".into()));
    }
    let mut acc = Accumulator::new(0);
    for o in outcomes {
        acc.push(o, &[]);
    }
    let config = SimConfig::new(acc.n, 0);
    let summary = acc.finish(&config);
    Ok((summary.pmf_a, summary.pmf_b, summary.tau_histogram))
}

fn run_batch(params: &GameParams, config: &SimConfig, batch: u64) -> Result<Accumulator> {
    let start = batch * BATCH_SIZE;
    let len = BATCH_SIZE.min(config.n_paths - start);
    let mut rng = stream_rng(config.seed, batch);
    let mut acc = Accumulator::new(config.query_points.len());
    acc.taus.reserve(len as usize);
    for _ in 0..len {
        let outcome = simulate_path(
            params,
            config.mode,
            &mut rng,
            config.max_observations,
            false,
        )?;
        acc.push(&outcome, &config.query_points);
    }
    Ok(acc)
}

/// Simulates `n_paths` games in parallel batches. Batch `b` uses
/// `stream_rng(seed, b)` and batches are merged in index order, so the summary
/// does not depend on the number of worker threads.
pub fn simulate_batch(params: &GameParams, config: &SimConfig) -> Result<SimSummary> {
    config.validate()?;
    let batches = config.n_paths.div_ceil(BATCH_SIZE);
    let parts: Vec<Accumulator> = (0..batches)
        .into_par_iter()
        .map(|b| run_batch(params, config, b))
        .collect::<Result<_>>()?;
    let mut total = Accumulator::new(config.query_points.len());
    for part in parts {
        total.merge(part);
    }
    Ok(total.finish(config))
}

/// Full path records for `n_paths` games, deterministic in `seed`.
pub fn simulate_outcomes(
    params: &GameParams,
    n_paths: u64,
    seed: u64,
    mode: SimMode,
    record: bool,
) -> Result<Vec<PathOutcome>> {
    let batches = n_paths.div_ceil(BATCH_SIZE);
    let parts: Vec<Vec<PathOutcome>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let len = BATCH_SIZE.min(n_paths - b * BATCH_SIZE);
            let mut rng = stream_rng(seed, b);
            (0..len)
                .map(|_| simulate_path(params, mode, &mut rng, DEFAULT_MAX_OBSERVATIONS, record))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::exit_indices;

    fn reference(m: u32, n: u32) -> GameParams {
        GameParams::exponential(1.0, 2.0, 5.0, m, n).unwrap()
    }

    fn check_path_invariants(p: &GameParams, o: &PathOutcome) {
        assert!(o.rho >= 1);
        assert_eq!(o.rho, o.nu1.min(o.nu2));
        assert!(o.a_rho >= p.m as u64 || o.b_rho >= p.n as u64);
        assert!(o.a_pre < p.m as u64 && o.b_pre < p.n as u64);
        assert!(0.0 <= o.tau_pre && o.tau_pre <= o.tau_rho);
    }

    #[test]
    fn paths_satisfy_exit_invariants() {
        for mode in [SimMode::Interval, SimMode::Event] {
            for (m, n) in [(1, 1), (3, 4), (5, 2)] {
                let p = reference(m, n);
                for o in simulate_outcomes(&p, 2000, 11, mode, true).unwrap() {
                    check_path_invariants(&p, &o);
                    let xs = o.x_increments.as_ref().unwrap();
                    let ys = o.y_increments.as_ref().unwrap();
                    let e = exit_indices(xs, ys, m, n).unwrap();
                    assert_eq!((e.nu1, e.nu2, e.rho), (o.nu1, o.nu2, o.rho));
                    let rho = o.rho as usize;
                    assert_eq!(xs[..=rho].iter().sum::<u64>(), o.a_rho);
                    assert_eq!(ys[..rho].iter().sum::<u64>(), o.b_pre);
                }
            }
        }
    }

    #[test]
    fn other_observation_laws_simulate() {
        for law in [
            DeltaLaw::Deterministic { value: 0.3 },
            DeltaLaw::Erlang {
                shape: 3,
                rate: 6.0,
            },
        ] {
            let p = GameParams::new(1.0, 2.0, law, 3, 4).unwrap();
            for o in simulate_outcomes(&p, 500, 3, SimMode::Event, false).unwrap() {
                check_path_invariants(&p, &o);
            }
        }
    }

    #[test]
    fn overwhelming_attack_on_b_defeats_b() {
        let p = GameParams::exponential(1.0, 1000.0, 5.0, 3, 1).unwrap();
        let n = 20_000;
        let outcomes = simulate_outcomes(&p, n, 5, SimMode::Interval, false).unwrap();
        let frac = outcomes.iter().filter(|o| o.b_rho >= 1).count() as f64 / n as f64;
        assert!(frac > 1.0 - 3.0 * (frac * (1.0 - frac) / n as f64).sqrt() - 1e-12);
    }

    #[test]
    fn observation_cap_is_an_error() {
        let p = GameParams::exponential(1e-6, 1e-6, 5.0, 50, 50).unwrap();
        let mut rng = stream_rng(1, 0);
        assert_eq!(
            simulate_path(&p, SimMode::Interval, &mut rng, 100, false),
            Err(GameError::MaxObservationsExceeded(100))
        );
    }

    #[test]
    fn batch_is_deterministic_and_thread_independent() {
        let p = reference(3, 4);
        let queries = vec![
            TransformQuery::real(0.5, 0.8, 0.5).unwrap(),
            TransformQuery::real(1.0, 1.0, 0.0).unwrap(),
        ];
        let config = SimConfig::new(20_000, 42).with_queries(queries);
        let a = simulate_batch(&p, &config).unwrap();
        let b = simulate_batch(&p, &config).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| simulate_batch(&p, &config)).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.functional_estimates[1].mean, Complex64::new(1.0, 0.0));
        assert_eq!(a.functional_estimates[1].stderr, 0.0);
        assert_eq!(a.counts_a.iter().sum::<u64>(), 20_000);
        assert!((a.pmf_a.total() - 1.0).abs() < 1e-12);
        assert_eq!(
            a.win_counts.a_defeated + a.win_counts.b_defeated + a.win_counts.simultaneous,
            20_000
        );
    }

    #[test]
    fn empirical_tables() {
        let outcome = PathOutcome {
            nu1: 1,
            nu2: 4,
            rho: 1,
            tau_rho: 0.7,
            a_rho: 3,
            b_rho: 1,
            a_pre: 0,
            b_pre: 0,
            tau_pre: 0.0,
            x_increments: None,
            y_increments: None,
        };
        let (pmf_a, _, hist) = empirical_distributions(std::slice::from_ref(&outcome)).unwrap();
        assert_eq!(pmf_a.mass(3), 1.0);
        assert_eq!(pmf_a.total(), 1.0);
        let same = vec![outcome; 50];
        let (pmf_a, pmf_b, hist2) = empirical_distributions(&same).unwrap();
        assert!(pmf_a.stderr().unwrap().iter().all(|&s| s == 0.0));
        assert!(pmf_b.stderr().unwrap().iter().all(|&s| s == 0.0));
        assert!(hist2.stderr.iter().all(|&s| s == 0.0));
        assert_eq!(hist.counts.iter().sum::<u64>(), 1);
        assert!(empirical_distributions(&[]).is_err());
    }
}
