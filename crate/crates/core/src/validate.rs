//! Self-check suites run by `qi-lab validate`.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detection::{closed_form_snr, snr, DetectionStats};
use crate::error::{domain, QiError, Result};
use crate::gaussian::{apply_beam_splitter, make_tmsv, qi_channel, qi_channel_composed, Hypothesis, QiScenario};
use crate::operators::{build_dhd_operator, moments, MomentPair};
use crate::oracle::fock_oracle_moments;
use crate::receiver::{engine_moments, receiver_operator, Receiver};
use crate::reference::erfc_reference;
use crate::special::{erfc, log_erfc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Formula,
    Oracle,
    Erfc,
    Channel,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Formula, Suite::Oracle, Suite::Erfc, Suite::Channel];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Formula => "formula",
            Suite::Oracle => "oracle",
            Suite::Erfc => "erfc",
            Suite::Channel => "channel",
        }
    }
}

impl FromStr for Suite {
    type Err = QiError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| domain(format!("unknown suite '{s}' (expected formula, oracle, erfc, channel)")))
    }
}

/// Knobs for a validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    pub suites: Vec<Suite>,
    /// Relative error injected into every closed-form SNR; lets tests confirm
    /// the formula suite notices a transcription slip.
    pub formula_perturbation: f64,
    pub seed: u64,
    pub grid_points: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            formula_perturbation: 0.0,
            seed: 20_240_601,
            grid_points: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub case: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub passed: bool,
    /// Largest observed error relative to its tolerance.
    pub worst_ratio: f64,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

struct Checker {
    suite: Suite,
    cases: usize,
    worst: f64,
    failures: Vec<Failure>,
}

impl Checker {
    fn new(suite: Suite) -> Self {
        Self { suite, cases: 0, worst: 0.0, failures: Vec::new() }
    }

    fn rel(&mut self, case: impl FnOnce() -> String, got: f64, want: f64, tol: f64) {
        let scale = got.abs().max(want.abs());
        let err = if scale == 0.0 { 0.0 } else { (got - want).abs() / scale };
        self.record(case, err, tol, got, want);
    }

    fn abs(&mut self, case: impl FnOnce() -> String, got: f64, want: f64, tol: f64) {
        self.record(case, (got - want).abs(), tol, got, want);
    }

    fn record(&mut self, case: impl FnOnce() -> String, err: f64, tol: f64, got: f64, want: f64) {
        self.cases += 1;
        let ratio = if err.is_nan() { f64::INFINITY } else { err / tol };
        self.worst = self.worst.max(ratio);
        if !(err <= tol) {
            self.failures.push(Failure {
                case: case(),
                detail: format!("got {got:.17e}, want {want:.17e}, error {err:.3e} > {tol:.1e}"),
            });
        }
    }

    fn error(&mut self, case: String, e: QiError) {
        self.cases += 1;
        self.worst = f64::INFINITY;
        self.failures.push(Failure { case, detail: e.to_string() });
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            suite: self.suite,
            cases: self.cases,
            passed: self.failures.is_empty(),
            worst_ratio: self.worst,
            failures: self.failures,
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Scenario grid used by the formula suite: log-uniform κ, N_S in
/// `[1e-4, 1]` and N_B in `[0.1, 100]`, with `K = 1e7`.
pub fn random_scenarios(seed: u64, count: usize) -> Vec<QiScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let kappa = log_uniform(&mut rng, 1e-4, 1.0);
            let n_s = log_uniform(&mut rng, 1e-4, 1.0);
            let n_b = log_uniform(&mut rng, 0.1, 100.0);
            QiScenario::new(kappa, n_s, n_b, 1e7)
        })
        .collect()
}

/// Engine statistics for the PC receiver under the closed form's variance
/// convention, which sits one unit above the literal operator's variance on
/// both hypotheses.
pub fn pc_stats_closed_form_convention(scenario: &QiScenario) -> Result<DetectionStats> {
    let (h0, h1) = engine_moments(Receiver::Pc, scenario)?;
    DetectionStats::new(h0.mean, h0.variance + 1.0, h1.mean, h1.variance + 1.0, scenario.k_modes)
}

fn formula_suite(opts: &ValidateOptions) -> SuiteReport {
    let mut c = Checker::new(Suite::Formula);
    let tol = 1e-9;
    for (idx, s) in random_scenarios(opts.seed, opts.grid_points).iter().enumerate() {
        for r in Receiver::QUANTUM {
            let engine = match r {
                Receiver::Pc => pc_stats_closed_form_convention(s).and_then(|st| snr(&st)),
                _ => engine_moments(r, s)
                    .and_then(|(h0, h1)| DetectionStats::from_moments(h0, h1, s.k_modes))
                    .and_then(|st| snr(&st)),
            };
            let formula = closed_form_snr(r, s).map(|v| v * (1.0 + opts.formula_perturbation));
            let case = || {
                format!(
                    "#{idx} {r} kappa={:e} n_s={:e} n_b={:e}",
                    s.kappa, s.n_s, s.n_b
                )
            };
            match (engine, formula) {
                (Ok(e), Ok(f)) => c.rel(case, e, f, tol),
                (Err(e), _) | (_, Err(e)) => c.error(case(), e),
            }
        }
    }
    c.finish()
}

fn oracle_suite() -> SuiteReport {
    let mut c = Checker::new(Suite::Oracle);
    let s = QiScenario::new(0.3, 0.1, 0.5, 1.0);
    let tol = 1e-6;
    for r in Receiver::QUANTUM {
        let op = match receiver_operator(r, &s) {
            Ok(op) => op,
            Err(e) => {
                c.error(format!("{r} operator"), e);
                continue;
            }
        };
        for h in Hypothesis::BOTH {
            let engine = crate::receiver::hypothesis_state(r, &s, h).and_then(|st| moments(&op, &st));
            let oracle = fock_oracle_moments(&op, &s, h, 25);
            match (engine, oracle) {
                (Ok(e), Ok(o)) => {
                    c.rel(|| format!("{r} {h:?} mean"), e.mean, o.mean, tol);
                    c.rel(|| format!("{r} {h:?} variance"), e.variance, o.variance, tol);
                }
                (Err(e), _) | (_, Err(e)) => c.error(format!("{r} {h:?}"), e),
            }
        }
    }
    match fock_oracle_moments(&build_dhd_operator(), &s, Hypothesis::H0, 25) {
        Ok(MomentPair { mean, .. }) => c.abs(|| "dHD H0 mean = N_B + N_S + 1".into(), mean, 1.6, 1e-6),
        Err(e) => c.error("dHD H0 mean".into(), e),
    }
    c.finish()
}

fn erfc_suite() -> SuiteReport {
    let mut c = Checker::new(Suite::Erfc);
    for k in 0..=640 {
        let x = -6.0 + k as f64 * 0.05;
        match erfc(x) {
            Ok(v) => c.rel(|| format!("erfc({x:.2})"), v, erfc_reference(x), 1e-12),
            Err(e) => c.error(format!("erfc({x:.2})"), e),
        }
    }
    c.rel(|| "erfc(1)".into(), erfc(1.0).unwrap_or(f64::NAN), 0.157_299_207_050_285_13, 1e-12);
    for x in [26.0, 30.0, 100.0, 1e3, 1e4] {
        // erfc(x) ~ exp(-x²)/(x√π) (1 - 1/(2x²) + 3/(4x⁴) - 15/(8x⁶))
        let x2 = x * x;
        let asym = -x2 - (x * std::f64::consts::PI.sqrt()).ln()
            + (1.0 - 0.5 / x2 + 0.75 / (x2 * x2) - 1.875 / (x2 * x2 * x2)).ln();
        match log_erfc(x) {
            Ok(v) => c.rel(|| format!("log_erfc({x:e})"), v, asym, 1e-9),
            Err(e) => c.error(format!("log_erfc({x:e})"), e),
        }
    }
    c.finish()
}

fn channel_suite(seed: u64) -> SuiteReport {
    let mut c = Checker::new(Suite::Channel);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for k in 0..100 {
        let n_s = rng.gen_range(0.0..10.0);
        let n_b = rng.gen_range(0.0..100.0);
        let kappa = rng.gen_range(0.0..=1.0);
        for h in Hypothesis::BOTH {
            match (qi_channel(n_s, n_b, kappa, h), qi_channel_composed(n_s, n_b, kappa, h)) {
                (Ok(a), Ok(b)) => {
                    let diff = (a.cov() - b.cov()).abs().max();
                    c.abs(|| format!("#{k} {h:?} closed vs composed"), diff, 0.0, 1e-12);
                    if h == Hypothesis::H0 {
                        let off = a.cov().view((0, 2), (2, 2)).abs().max();
                        c.abs(|| format!("#{k} H0 correlation block"), off, 0.0, 0.0);
                    }
                }
                (Err(e), _) | (_, Err(e)) => c.error(format!("#{k} {h:?}"), e),
            }
        }
        match qi_channel(n_s, n_b, kappa, Hypothesis::H1).and_then(|st| {
            let before = st.symplectic_eigenvalues()?;
            let after = apply_beam_splitter(&st, 0, 1, rng.gen_range(0.0..=1.0))?.symplectic_eigenvalues()?;
            Ok((before, after))
        }) {
            Ok((b, a)) => {
                for (x, y) in b.iter().zip(&a) {
                    c.abs(|| format!("#{k} symplectic invariance"), *y, *x, 1e-10 * x.max(1.0));
                }
            }
            Err(e) => c.error(format!("#{k} symplectic invariance"), e),
        }
    }
    for k in 0..=20 {
        let n_s = k as f64 * 0.5;
        match make_tmsv(n_s) {
            Ok(st) => c.abs(|| format!("TMSV purity n_s={n_s}"), st.determinant(), 1.0, 1e-9),
            Err(e) => c.error(format!("TMSV n_s={n_s}"), e),
        }
    }
    c.finish()
}

pub fn run_validation(opts: &ValidateOptions) -> ValidationReport {
    let suites: Vec<SuiteReport> = opts
        .suites
        .iter()
        .map(|s| match s {
            Suite::Formula => formula_suite(opts),
            Suite::Oracle => oracle_suite(),
            Suite::Erfc => erfc_suite(),
            Suite::Channel => channel_suite(opts.seed),
        })
        .collect();
    ValidationReport {
        passed: suites.iter().all(|s| s.passed),
        suites,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suites_pass() {
        let report = run_validation(&ValidateOptions::default());
        for s in &report.suites {
            assert!(s.passed, "{:?}: {:?}", s.suite, s.failures.iter().take(3).collect::<Vec<_>>());
        }
        assert!(report.passed);
    }

    #[test]
    fn perturbation_is_caught() {
        let report = run_validation(&ValidateOptions {
            suites: vec![Suite::Formula],
            formula_perturbation: 1e-3,
            grid_points: 20,
            ..ValidateOptions::default()
        });
        assert!(!report.passed);
        assert_eq!(report.suites.len(), 1);
        assert_eq!(report.suites[0].failures.len(), 60);
    }

    #[test]
    fn suite_names() {
        assert_eq!("ERFC".parse::<Suite>().unwrap(), Suite::Erfc);
        assert!("wick".parse::<Suite>().is_err());
    }
}
