//! Thresholds, error probabilities and SNR for K-mode Gaussian-approximated
//! decisions, plus the closed-form receiver SNRs.

use serde::{Deserialize, Serialize};

use crate::error::{domain, QiError, Result};
use crate::gaussian::QiScenario;
use crate::operators::MomentPair;
use crate::receiver::Receiver;
use crate::special::{erfc_unchecked, log_erfc};

/// Per-mode means and variances of the two hypotheses, with `r0 >= r1`.
///
/// Receivers whose mean grows with the target present are stored with the
/// labels exchanged and `swapped` set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub r0: f64,
    pub dr0: f64,
    pub r1: f64,
    pub dr1: f64,
    pub k_modes: f64,
    pub swapped: bool,
}

impl DetectionStats {
    /// Builds canonical statistics from hypothesis-labelled values.
    pub fn new(r0: f64, dr0: f64, r1: f64, dr1: f64, k_modes: f64) -> Result<Self> {
        for (name, v) in [("r0", r0), ("r1", r1), ("dr0", dr0), ("dr1", dr1)] {
            if !v.is_finite() {
                return Err(domain(format!("{name} must be finite, got {v}")));
            }
        }
        if dr0 < 0.0 || dr1 < 0.0 {
            return Err(domain(format!("variances must be >= 0, got {dr0}, {dr1}")));
        }
        if !(k_modes >= 1.0 && k_modes.is_finite()) {
            return Err(domain(format!("k_modes must be finite and >= 1, got {k_modes}")));
        }
        Ok(if r0 >= r1 {
            Self { r0, dr0, r1, dr1, k_modes, swapped: false }
        } else {
            Self { r0: r1, dr0: dr1, r1: r0, dr1: dr0, k_modes, swapped: true }
        })
    }

    pub fn from_moments(h0: MomentPair, h1: MomentPair, k_modes: f64) -> Result<Self> {
        Self::new(h0.mean, h0.variance, h1.mean, h1.variance, k_modes)
    }

    /// Mean and variance under `H0` in the caller's labelling.
    pub fn hypothesis_h0(&self) -> MomentPair {
        if self.swapped {
            MomentPair { mean: self.r1, variance: self.dr1 }
        } else {
            MomentPair { mean: self.r0, variance: self.dr0 }
        }
    }

    /// Mean and variance under `H1` in the caller's labelling.
    pub fn hypothesis_h1(&self) -> MomentPair {
        if self.swapped {
            MomentPair { mean: self.r0, variance: self.dr0 }
        } else {
            MomentPair { mean: self.r1, variance: self.dr1 }
        }
    }

    fn check_variances(&self) -> Result<()> {
        if self.dr0 + self.dr1 > 0.0 {
            Ok(())
        } else {
            Err(QiError::Degenerate("both variances are zero".into()))
        }
    }
}

/// Threshold on the K-mode sum minimizing the equal-prior error.
pub fn optimal_threshold(stats: &DetectionStats) -> Result<f64> {
    stats.check_variances()?;
    let (s0, s1) = (stats.dr0.sqrt(), stats.dr1.sqrt());
    Ok(stats.k_modes * (stats.r0 * s1 + stats.r1 * s0) / (s0 + s1))
}

/// Error probabilities with their natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorProbabilities {
    /// Deciding "present" when the target is absent.
    pub false_alarm: f64,
    /// Deciding "absent" when the target is present.
    pub miss: f64,
    pub total: f64,
    pub log_false_alarm: f64,
    pub log_miss: f64,
    pub log_total: f64,
}

/// `½ erfc((mean - threshold) / √(2 var))` and its log, for a decision that
/// errs when the K-mode sum falls on the far side of the threshold.
fn tail_probability(distance: f64, variance: f64) -> (f64, f64) {
    if variance == 0.0 {
        return if distance > 0.0 {
            (0.0, f64::NEG_INFINITY)
        } else if distance == 0.0 {
            (0.5, 0.5f64.ln())
        } else {
            (1.0, 0.0)
        };
    }
    let arg = distance / (2.0 * variance).sqrt();
    let p = 0.5 * erfc_unchecked(arg);
    let lp = 0.5f64.ln() + log_erfc(arg).unwrap_or(f64::NAN);
    (p, lp)
}

fn log_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Error probabilities for deciding `H1` when the K-mode sum lies on the
/// `r1` side of `threshold`.
pub fn error_probabilities(stats: &DetectionStats, threshold: f64) -> Result<ErrorProbabilities> {
    if threshold.is_nan() {
        return Err(domain("threshold is NaN"));
    }
    let k = stats.k_modes;
    let (p10, l10) = tail_probability(k * stats.r0 - threshold, k * stats.dr0);
    let (p01, l01) = tail_probability(threshold - k * stats.r1, k * stats.dr1);
    let (false_alarm, log_false_alarm, miss, log_miss) = if stats.swapped {
        (p01, l01, p10, l10)
    } else {
        (p10, l10, p01, l01)
    };
    Ok(ErrorProbabilities {
        false_alarm,
        miss,
        total: 0.5 * (false_alarm + miss),
        log_false_alarm,
        log_miss,
        log_total: 0.5f64.ln() + log_add(log_false_alarm, log_miss),
    })
}

/// `K (R0 - R1)² / [2 (√ΔR0 + √ΔR1)²]`.
pub fn snr(stats: &DetectionStats) -> Result<f64> {
    stats.check_variances()?;
    let d = stats.r0 - stats.r1;
    let s = stats.dr0.sqrt() + stats.dr1.sqrt();
    Ok(stats.k_modes * d * d / (2.0 * s * s))
}

/// SNR in decibels.
pub fn snr_db(snr_value: f64) -> f64 {
    10.0 * snr_value.log10()
}

/// Large-SNR estimate `exp(-SNR) / (2√(π SNR))` of the total error.
/// Only accurate for `SNR >> 1`.
pub fn approx_error_from_snr(snr_value: f64) -> Result<f64> {
    if !(snr_value > 0.0) {
        return Err(domain(format!("snr must be positive, got {snr_value}")));
    }
    Ok((-snr_value).exp() / (2.0 * (std::f64::consts::PI * snr_value).sqrt()))
}

/// Closed-form SNR of a QI receiver.
pub fn closed_form_snr(receiver: Receiver, scenario: &QiScenario) -> Result<f64> {
    scenario.validate()?;
    let QiScenario { kappa: k, n_s, n_b, k_modes, opa_gain: g, .. } = *scenario;
    let a = 2.0 * n_s + 1.0;
    let b = 2.0 * n_b + 1.0;
    let c = 2.0 * (n_s * (n_s + 1.0)).sqrt();
    match receiver {
        Receiver::Dhd => {
            let num = k * (b - a) + 2.0 * c * k.sqrt();
            let den = (a * (1.0 + k) + b * (1.0 - k) - 2.0 * c * k.sqrt()).abs() + (a + b).abs();
            Ok(k_modes * num * num / (2.0 * den * den))
        }
        Receiver::Pc => {
            let d1 = (k * (a * a - a * b + c * c) + a * (b + 2.0) + 1.0).sqrt();
            let d0 = (a * (b + 2.0) + 1.0).sqrt();
            Ok(k_modes * k * c * c / ((d1 + d0) * (d1 + d0)))
        }
        Receiver::Opa => {
            let gm = g - 1.0;
            let root = (k * g * gm).sqrt();
            let kg = k * gm + g;
            let d0 = (a * g + b * gm).powi(2) - 1.0;
            let d1 = a * a * kg * kg - 2.0 * b * (k - 1.0) * gm * (a * kg + 2.0 * c * root)
                + 4.0 * a * c * root * kg
                + b * b * (k - 1.0).powi(2) * gm * gm
                + 4.0 * c * c * k * gm * g
                - 1.0;
            let num = k * gm * (a - b) + 2.0 * c * root;
            Ok(k_modes * num * num / (2.0 * (d0.sqrt() + d1.sqrt()).powi(2)))
        }
        Receiver::Ci => Err(QiError::Unsupported(
            "CI has no closed form; use the Chernoff exponent".into(),
        )),
    }
}
