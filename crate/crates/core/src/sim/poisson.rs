use rand::Rng;

/// Below this mean the sampler inverts the distribution function by sequential
/// search; above it uses transformed rejection (Hormann's PTRS).
const INVERSION_MAX_MEAN: f64 = 10.0;

pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else if mean <= INVERSION_MAX_MEAN {
        sequential_search(rng, mean)
    } else {
        transformed_rejection(rng, mean)
    }
}

fn sequential_search<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        // guards against cdf stalling below u through rounding
        if p < f64::MIN_POSITIVE && k as f64 > mean {
            break;
        }
    }
    k
}

fn transformed_rejection<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
        let rhs = -mean + k * loglam - ln_factorial(k);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

fn ln_factorial(k: f64) -> f64 {
    if k < 10.0 {
        (1..=k as u64).map(|i| (i as f64).ln()).sum()
    } else {
        // Stirling series
        let n = k + 1.0;
        (n - 0.5) * n.ln() - n + 0.5 * std::f64::consts::TAU.ln() + 1.0 / (12.0 * n)
            - 1.0 / (360.0 * n.powi(3))
            + 1.0 / (1260.0 * n.powi(5))
    }
}
