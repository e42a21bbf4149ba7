//! Game parameters, transform query points and exit-index bookkeeping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};

/// Law of the time between consecutive observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DeltaLaw {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Erlang { shape: u32, rate: f64 },
}

impl DeltaLaw {
    /// Laplace-Stieltjes transform `E[exp(-s * Delta)]`.
    pub fn lst(&self, s: Complex64) -> Complex64 {
        match *self {
            DeltaLaw::Exponential { rate } => rate / (rate + s),
            DeltaLaw::Deterministic { value } => (-s * value).exp(),
            DeltaLaw::Erlang { shape, rate } => (rate / (rate + s)).powu(shape),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DeltaLaw::Exponential { rate } => 1.0 / rate,
            DeltaLaw::Deterministic { value } => value,
            DeltaLaw::Erlang { shape, rate } => shape as f64 / rate,
        }
    }
}

/// Unvalidated parameter bundle, as read from a configuration file.
///
/// Thresholds and the Erlang shape are kept as floats so that a non-integer
/// value can be reported instead of failing deserialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub lambda: f64,
    pub mu: f64,
    pub delta_law: RawDeltaLaw,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "N")]
    pub n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RawDeltaLaw {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Erlang { shape: f64, rate: f64 },
}

/// Validated game parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParams {
    /// Attack rate on player A.
    pub lambda: f64,
    /// Attack rate on player B.
    pub mu: f64,
    pub delta_law: DeltaLaw,
    /// Casualty threshold of player A.
    pub m: u32,
    /// Casualty threshold of player B.
    pub n: u32,
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(GameError::NonPositiveRate { name, value })
    }
}

fn threshold(name: &'static str, value: f64) -> Result<u32> {
    if !value.is_finite() || value.fract() != 0.0 {
        return Err(GameError::NonIntegerThreshold { name, value });
    }
    if value < 1.0 {
        return Err(GameError::ThresholdTooSmall { name, value });
    }
    if value > u32::MAX as f64 {
        return Err(GameError::InvalidArgument(format!(
            "{name} = {value} is too large"
        )));
    }
    Ok(value as u32)
}

/// Validates a raw parameter bundle.
pub fn validate_params(raw: &RawParams) -> Result<GameParams> {
    let lambda = positive("lambda", raw.lambda)?;
    let mu = positive("mu", raw.mu)?;
    let delta_law = match raw.delta_law {
        RawDeltaLaw::Exponential { rate } => DeltaLaw::Exponential {
            rate: positive("delta_law.rate", rate)?,
        },
        RawDeltaLaw::Deterministic { value } => DeltaLaw::Deterministic {
            value: positive("delta_law.value", value)?,
        },
        RawDeltaLaw::Erlang { shape, rate } => DeltaLaw::Erlang {
            shape: threshold("delta_law.shape", shape)?,
            rate: positive("delta_law.rate", rate)?,
        },
    };
    Ok(GameParams {
        lambda,
        mu,
        delta_law,
        m: threshold("M", raw.m)?,
        n: threshold("N", raw.n)?,
    })
}

impl GameParams {
    /// Validated constructor for the exponential-observation case.
    pub fn exponential(lambda: f64, mu: f64, gamma: f64, m: u32, n: u32) -> Result<Self> {
        Self::new(lambda, mu, DeltaLaw::Exponential { rate: gamma }, m, n)
    }

    pub fn new(lambda: f64, mu: f64, delta_law: DeltaLaw, m: u32, n: u32) -> Result<Self> {
        validate_params(&RawParams::from(&GameParams {
            lambda,
            mu,
            delta_law,
            m,
            n,
        }))
    }

    /// True iff the closed-form results apply (exponential observation law).
    pub fn closed_form_capable(&self) -> bool {
        matches!(self.delta_law, DeltaLaw::Exponential { .. })
    }

    /// Rate of the exponential observation law, if that is the law in use.
    pub fn observation_rate(&self) -> Result<f64> {
        match self.delta_law {
            DeltaLaw::Exponential { rate } => Ok(rate),
            _ => Err(GameError::NotClosedFormCapable),
        }
    }
}

impl From<&GameParams> for RawParams {
    fn from(p: &GameParams) -> Self {
        RawParams {
            lambda: p.lambda,
            mu: p.mu,
            delta_law: match p.delta_law {
                DeltaLaw::Exponential { rate } => RawDeltaLaw::Exponential { rate },
                DeltaLaw::Deterministic { value } => RawDeltaLaw::Deterministic { value },
                DeltaLaw::Erlang { shape, rate } => RawDeltaLaw::Erlang {
                    shape: shape as f64,
                    rate,
                },
            },
            m: p.m as f64,
            n: p.n as f64,
        }
    }
}

impl TryFrom<&RawParams> for GameParams {
    type Error = GameError;

    fn try_from(raw: &RawParams) -> Result<Self> {
        validate_params(raw)
    }
}

/// Evaluation point `(u, v, theta)` with `|u| <= 1`, `|v| <= 1`, `Re theta >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformQuery {
    u: Complex64,
    v: Complex64,
    theta: Complex64,
}

// Rounding slack on the closed unit disc, so that e.g. exp(i*phi) is accepted.
const DISC_SLACK: f64 = 1e-12;

impl TransformQuery {
    pub fn new(u: Complex64, v: Complex64, theta: Complex64) -> Result<Self> {
        if !(u.norm() <= 1.0 + DISC_SLACK) {
            return Err(GameError::InvalidQuery(format!("|u| = {} > 1", u.norm())));
        }
        if !(v.norm() <= 1.0 + DISC_SLACK) {
            return Err(GameError::InvalidQuery(format!("|v| = {} > 1", v.norm())));
        }
        if !(theta.re >= 0.0) || !theta.im.is_finite() {
            return Err(GameError::InvalidQuery(format!(
                "Re theta = {} < 0",
                theta.re
            )));
        }
        Ok(TransformQuery { u, v, theta })
    }

    pub fn real(u: f64, v: f64, theta: f64) -> Result<Self> {
        Self::new(u.into(), v.into(), theta.into())
    }

    pub fn u(&self) -> Complex64 {
        self.u
    }

    pub fn v(&self) -> Complex64 {
        self.v
    }

    pub fn theta(&self) -> Complex64 {
        self.theta
    }
}

/// Outcome of one simulated game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub nu1: u64,
    pub nu2: u64,
    pub rho: u64,
    pub tau_rho: f64,
    pub a_rho: u64,
    pub b_rho: u64,
    pub a_pre: u64,
    pub b_pre: u64,
    pub tau_pre: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x_increments: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y_increments: Option<Vec<u64>>,
}

impl PathOutcome {
    /// True when player A is defeated at the observed ruin time.
    pub fn a_defeated(&self) -> bool {
        self.nu1 == self.rho
    }

    pub fn b_defeated(&self) -> bool {
        self.nu2 == self.rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExitIndices {
    pub nu1: u64,
    pub nu2: u64,
    pub rho: u64,
}

fn first_crossing(path: &[u64], level: u64) -> Option<u64> {
    let mut total = 0u64;
    path.iter()
        .position(|&x| {
            total += x;
            total >= level
        })
        .map(|i| i as u64)
}

/// Exit indices of two casualty paths, both starting at index 0.
pub fn exit_indices(x_path: &[u64], y_path: &[u64], m: u32, n: u32) -> Result<ExitIndices> {
    let nu1 = first_crossing(x_path, m as u64).ok_or(GameError::NoCrossing { which: "A" })?;
    let nu2 = first_crossing(y_path, n as u64).ok_or(GameError::NoCrossing { which: "B" })?;
    Ok(ExitIndices {
        nu1,
        nu2,
        rho: nu1.min(nu2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(lambda: f64, mu: f64, law: RawDeltaLaw, m: f64, n: f64) -> RawParams {
        RawParams {
            lambda,
            mu,
            delta_law: law,
            m,
            n,
        }
    }

    #[test]
    fn reference_params_are_closed_form_capable() {
        let p = validate_params(&raw(
            1.0,
            2.0,
            RawDeltaLaw::Exponential { rate: 5.0 },
            3.0,
            4.0,
        ))
        .unwrap();
        assert!(p.closed_form_capable());
        assert_eq!((p.m, p.n), (3, 4));
    }

    #[test]
    fn rejects_bad_parameters() {
        let exp = RawDeltaLaw::Exponential { rate: 5.0 };
        assert!(matches!(
            validate_params(&raw(-1.0, 2.0, exp, 3.0, 4.0)),
            Err(GameError::NonPositiveRate { name: "lambda", .. })
        ));
        assert!(matches!(
            validate_params(&raw(1.0, 2.0, exp, 2.5, 4.0)),
            Err(GameError::NonIntegerThreshold { name: "M", .. })
        ));
        assert!(matches!(
            validate_params(&raw(1.0, 2.0, exp, 3.0, 0.0)),
            Err(GameError::ThresholdTooSmall { name: "N", .. })
        ));
        assert!(matches!(
            validate_params(&raw(
                1.0,
                2.0,
                RawDeltaLaw::Exponential { rate: 0.0 },
                3.0,
                4.0
            )),
            Err(GameError::NonPositiveRate { .. })
        ));
        assert!(validate_params(&raw(1.0, f64::NAN, exp, 3.0, 4.0)).is_err());
    }

    #[test]
    fn deterministic_law_is_not_closed_form_capable() {
        let p = validate_params(&raw(
            1.0,
            2.0,
            RawDeltaLaw::Deterministic { value: 0.2 },
            3.0,
            4.0,
        ))
        .unwrap();
        assert!(!p.closed_form_capable());
        assert_eq!(p.observation_rate(), Err(GameError::NotClosedFormCapable));
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let ok = r#"{"lambda":1,"mu":2,"delta_law":{"type":"exponential","rate":5},"M":3,"N":4}"#;
        assert!(serde_json::from_str::<RawParams>(ok).is_ok());
        let extra =
            r#"{"lambda":1,"mu":2,"delta_law":{"type":"exponential","rate":5},"M":3,"N":4,"K":1}"#;
        assert!(serde_json::from_str::<RawParams>(extra).is_err());
        let extra_law =
            r#"{"lambda":1,"mu":2,"delta_law":{"type":"exponential","rate":5,"d":1},"M":3,"N":4}"#;
        assert!(serde_json::from_str::<RawParams>(extra_law).is_err());
    }

    #[test]
    fn query_domain() {
        assert!(TransformQuery::real(1.0, -1.0, 0.0).is_ok());
        assert!(TransformQuery::real(1.01, 0.0, 0.0).is_err());
        assert!(TransformQuery::real(0.0, 0.0, -0.1).is_err());
        assert!(TransformQuery::new(
            Complex64::from_polar(1.0, 0.7),
            0.0.into(),
            Complex64::new(0.0, 3.0)
        )
        .is_ok());
    }

    #[test]
    fn exit_index_examples() {
        assert_eq!(
            exit_indices(&[0, 1, 2], &[0, 0, 5], 2, 4).unwrap(),
            ExitIndices {
                nu1: 2,
                nu2: 2,
                rho: 2
            }
        );
        assert_eq!(
            exit_indices(&[5], &[0], 3, 1),
            Err(GameError::NoCrossing { which: "B" })
        );
        assert_eq!(
            exit_indices(&[0, 0, 3, 0], &[0, 2, 0, 0], 3, 2).unwrap(),
            ExitIndices {
                nu1: 2,
                nu2: 1,
                rho: 1
            }
        );
    }

    proptest! {
        #[test]
        fn exit_indices_are_first_crossings(
            xs in prop::collection::vec(0u64..4, 1..30),
            ys in prop::collection::vec(0u64..4, 1..30),
            extra in prop::collection::vec(0u64..4, 0..10),
            m in 1u32..8,
            n in 1u32..8,
        ) {
            let Ok(e) = exit_indices(&xs, &ys, m, n) else { return Ok(()); };
            prop_assert_eq!(e.rho, e.nu1.min(e.nu2));
            let cum = |p: &[u64], i: u64| p[..=i as usize].iter().sum::<u64>();
            prop_assert!(cum(&xs, e.nu1) >= m as u64);
            if e.nu1 >= 1 { prop_assert!(cum(&xs, e.nu1 - 1) < m as u64); }
            prop_assert!(cum(&ys, e.nu2) >= n as u64);
            if e.nu2 >= 1 { prop_assert!(cum(&ys, e.nu2 - 1) < n as u64); }

            let mut xs2 = xs.clone();
            xs2.extend(&extra);
            let mut ys2 = ys.clone();
            ys2.extend(&extra);
            prop_assert_eq!(exit_indices(&xs2, &ys2, m, n).unwrap(), e);
        }
    }
}
