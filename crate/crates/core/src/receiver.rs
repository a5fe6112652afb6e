//! Receiver catalogue and per-receiver evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chernoff::ci_chernoff;
use crate::detection::{
    closed_form_snr, error_probabilities, optimal_threshold, snr, snr_db, DetectionStats,
};
use crate::error::{domain, QiError, Result};
use crate::gaussian::{qi_channel, GaussianState, Hypothesis, QiScenario};
use crate::operators::{
    build_dhd_operator, build_opa_operator, build_pc_operator, moments, MomentPair,
    QuadraticOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Receiver {
    #[serde(rename = "dHD")]
    Dhd,
    #[serde(rename = "OPA")]
    Opa,
    #[serde(rename = "PC")]
    Pc,
    #[serde(rename = "CI")]
    Ci,
}

impl Receiver {
    /// Every receiver, in CSV column order.
    pub const ALL: [Receiver; 4] = [Receiver::Dhd, Receiver::Opa, Receiver::Pc, Receiver::Ci];
    /// The entanglement-based receivers.
    pub const QUANTUM: [Receiver; 3] = [Receiver::Dhd, Receiver::Opa, Receiver::Pc];

    pub fn label(self) -> &'static str {
        match self {
            Receiver::Dhd => "dHD",
            Receiver::Opa => "OPA",
            Receiver::Pc => "PC",
            Receiver::Ci => "CI",
        }
    }

    /// Lower-case key used in CSV column names.
    pub fn key(self) -> &'static str {
        match self {
            Receiver::Dhd => "dhd",
            Receiver::Opa => "opa",
            Receiver::Pc => "pc",
            Receiver::Ci => "ci",
        }
    }

    pub fn is_quantum(self) -> bool {
        self != Receiver::Ci
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Receiver {
    type Err = QiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dhd" => Ok(Receiver::Dhd),
            "opa" => Ok(Receiver::Opa),
            "pc" => Ok(Receiver::Pc),
            "ci" => Ok(Receiver::Ci),
            other => Err(domain(format!("unknown receiver '{other}' (expected dhd, opa, pc, ci)"))),
        }
    }
}

/// Parses a comma-separated receiver list, keeping first occurrences in order.
pub fn parse_receivers(list: &str) -> Result<Vec<Receiver>> {
    let mut out = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        let r: Receiver = item.parse()?;
        if !out.contains(&r) {
            out.push(r);
        }
    }
    if out.is_empty() {
        return Err(domain("receiver list is empty"));
    }
    Ok(out)
}

/// Where a QI receiver's SNR comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrSource {
    /// Closed-form expressions.
    #[default]
    Formula,
    /// Moments of the receiver operator on the hypothesis states.
    Engine,
}

impl FromStr for SnrSource {
    type Err = QiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "formula" => Ok(SnrSource::Formula),
            "engine" => Ok(SnrSource::Engine),
            other => Err(domain(format!("unknown snr source '{other}'"))),
        }
    }
}

/// Measurement operator of a QI receiver.
pub fn receiver_operator(receiver: Receiver, scenario: &QiScenario) -> Result<QuadraticOperator> {
    match receiver {
        Receiver::Dhd => Ok(build_dhd_operator()),
        Receiver::Opa => build_opa_operator(scenario.opa_gain),
        Receiver::Pc => build_pc_operator(scenario.pc_mu, scenario.pc_nu),
        Receiver::Ci => Err(QiError::Unsupported("CI has no quadratic receiver operator".into())),
    }
}

/// Return-idler state, with a vacuum mode appended for the PC receiver.
pub fn hypothesis_state(
    receiver: Receiver,
    scenario: &QiScenario,
    hypothesis: Hypothesis,
) -> Result<GaussianState> {
    let state = qi_channel(scenario.n_s, scenario.n_b, scenario.kappa, hypothesis)?;
    Ok(match receiver {
        Receiver::Pc => state.tensor(&GaussianState::vacuum(1)),
        _ => state,
    })
}

/// Per-mode moments under `H0` and `H1`.
pub fn engine_moments(receiver: Receiver, scenario: &QiScenario) -> Result<(MomentPair, MomentPair)> {
    scenario.validate()?;
    let op = receiver_operator(receiver, scenario)?;
    let h0 = moments(&op, &hypothesis_state(receiver, scenario, Hypothesis::H0)?)?;
    let h1 = moments(&op, &hypothesis_state(receiver, scenario, Hypothesis::H1)?)?;
    Ok((h0, h1))
}

pub fn engine_stats(receiver: Receiver, scenario: &QiScenario) -> Result<DetectionStats> {
    let (h0, h1) = engine_moments(receiver, scenario)?;
    DetectionStats::from_moments(h0, h1, scenario.k_modes)
}

pub fn engine_snr(receiver: Receiver, scenario: &QiScenario) -> Result<f64> {
    snr(&engine_stats(receiver, scenario)?)
}

/// SNR of any receiver; CI always uses the Chernoff exponent.
pub fn receiver_snr(receiver: Receiver, scenario: &QiScenario, source: SnrSource) -> Result<f64> {
    match (receiver, source) {
        (Receiver::Ci, _) => {
            scenario.validate()?;
            Ok(ci_chernoff(scenario.n_s, scenario.n_b, scenario.kappa, scenario.k_modes)?.snr_ci)
        }
        (_, SnrSource::Formula) => closed_form_snr(receiver, scenario),
        (_, SnrSource::Engine) => engine_snr(receiver, scenario),
    }
}

/// Single-point summary of one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverReport {
    pub receiver: Receiver,
    pub r0: Option<f64>,
    pub r1: Option<f64>,
    pub dr0: Option<f64>,
    pub dr1: Option<f64>,
    pub threshold: Option<f64>,
    pub p_false_alarm: Option<f64>,
    pub p_miss: Option<f64>,
    /// Total error; for CI the Chernoff upper bound `½ Q^K`.
    pub p_error: f64,
    pub log_p_error: f64,
    /// SNR from the moment engine (CI: Chernoff exponent).
    pub snr: f64,
    pub snr_db: f64,
    /// Closed-form SNR where one exists.
    pub snr_formula: Option<f64>,
}

pub fn evaluate(receiver: Receiver, scenario: &QiScenario) -> Result<ReceiverReport> {
    scenario.validate()?;
    if receiver == Receiver::Ci {
        let c = ci_chernoff(scenario.n_s, scenario.n_b, scenario.kappa, scenario.k_modes)?;
        let log_p = 0.5f64.ln() - c.snr_ci;
        return Ok(ReceiverReport {
            receiver,
            r0: None,
            r1: None,
            dr0: None,
            dr1: None,
            threshold: None,
            p_false_alarm: None,
            p_miss: None,
            p_error: log_p.exp(),
            log_p_error: log_p,
            snr: c.snr_ci,
            snr_db: snr_db(c.snr_ci),
            snr_formula: None,
        });
    }
    let stats = engine_stats(receiver, scenario)?;
    let (h0, h1) = (stats.hypothesis_h0(), stats.hypothesis_h1());
    let threshold = optimal_threshold(&stats)?;
    let errors = error_probabilities(&stats, threshold)?;
    let value = snr(&stats)?;
    Ok(ReceiverReport {
        receiver,
        r0: Some(h0.mean),
        r1: Some(h1.mean),
        dr0: Some(h0.variance),
        dr1: Some(h1.variance),
        threshold: Some(threshold),
        p_false_alarm: Some(errors.false_alarm),
        p_miss: Some(errors.miss),
        p_error: errors.total,
        log_p_error: errors.log_total,
        snr: value,
        snr_db: snr_db(value),
        snr_formula: Some(closed_form_snr(receiver, scenario)?),
    })
}
