//! Quantum Chernoff exponent for coherent-state illumination.
//!
//! With the target absent the return is thermal with `N_B` photons; with it
//! present it is a thermal state of `(1-κ)N_B` photons displaced by
//! `β = √(κ N_S)`. Both are diagonal up to the displacement, so
//! `Tr(ρ0^s ρ1^{1-s}) = Σ p0_m^s |D_mn|² p1_n^{1-s}`.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{domain, QiError, Result};
use crate::fock::{thermal_dim, thermal_log_weights, thermal_tail, DisplacementBand, THERMAL_TAIL_LIMIT};
use crate::optimize::golden_section;

/// Largest probability either truncated hypothesis may lose.
pub const DEFICIT_LIMIT: f64 = 1e-8;
/// Safety factor applied to the tail-bound dimension.
pub const DIM_MARGIN: f64 = 1.2;
/// Search interval and tolerance in `s`.
pub const S_MIN: f64 = 1e-6;
pub const S_MAX: f64 = 1.0 - 1e-6;
pub const S_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffResult {
    /// `min_s Tr(ρ0^s ρ1^{1-s})`.
    pub q_value: f64,
    pub s_star: f64,
    /// `-K ln q_value`.
    pub snr_ci: f64,
    pub k_modes: f64,
    pub dim: usize,
    pub deficit_h0: f64,
    pub deficit_h1: f64,
}

impl ChernoffResult {
    /// Same minimum for a different number of modes.
    pub fn with_k_modes(mut self, k_modes: f64) -> Self {
        self.snr_ci = k_modes * (0.0 - self.q_value.ln());
        self.k_modes = k_modes;
        self
    }
}

/// Precomputed weights for evaluating `Q(s)` at one parameter point.
#[derive(Debug, Clone)]
pub struct CiChernoff {
    log_p0: Vec<f64>,
    log_p1: Vec<f64>,
    band: DisplacementBand,
    deficit_h0: f64,
    deficit_h1: f64,
    identical: bool,
}

fn check_inputs(n_s: f64, n_b: f64, kappa: f64) -> Result<()> {
    if !(n_s >= 0.0 && n_s.is_finite()) {
        return Err(domain(format!("n_s must be finite and >= 0, got {n_s}")));
    }
    if !(n_b >= 0.0 && n_b.is_finite()) {
        return Err(domain(format!("n_b must be finite and >= 0, got {n_b}")));
    }
    if !(0.0..=1.0).contains(&kappa) {
        return Err(domain(format!("kappa must lie in [0,1], got {kappa}")));
    }
    Ok(())
}

/// Truncation chosen from the thermal tail bound, widened by the
/// displacement spread, times [`DIM_MARGIN`].
pub fn auto_dim(n_s: f64, n_b: f64, kappa: f64) -> usize {
    let x = kappa * n_s;
    let base = thermal_dim(n_b, THERMAL_TAIL_LIMIT) as f64;
    let spread = 2.0 * x.sqrt() * base.sqrt() + x + 10.0;
    (DIM_MARGIN * (base + spread)).ceil() as usize
}

impl CiChernoff {
    /// Truncated hypotheses at `dim` levels; fails if either loses more
    /// than [`DEFICIT_LIMIT`].
    pub fn new(n_s: f64, n_b: f64, kappa: f64, dim: usize) -> Result<Self> {
        check_inputs(n_s, n_b, kappa)?;
        if dim == 0 {
            return Err(domain("dimension must be positive"));
        }
        let n1 = (1.0 - kappa) * n_b;
        let log_p0 = thermal_log_weights(n_b, dim);
        let log_p1 = thermal_log_weights(n1, dim);
        let band = DisplacementBand::new((kappa * n_s).sqrt(), dim);

        let deficit_h0 = thermal_tail(n_b, dim);
        let mut column_norms = vec![0.0; dim];
        for (k, diag) in band.diagonals().iter().enumerate() {
            for (n, &v) in diag.iter().enumerate() {
                column_norms[n] += v * v;
                if k > 0 {
                    column_norms[n + k] += v * v;
                }
            }
        }
        let lost: f64 = log_p1
            .iter()
            .zip(&column_norms)
            .map(|(lp, c)| lp.exp() * (1.0 - c).max(0.0))
            .sum();
        let deficit_h1 = thermal_tail(n1, dim) + lost;

        let worst = deficit_h0.max(deficit_h1);
        if worst > DEFICIT_LIMIT {
            return Err(QiError::Truncation {
                deficit: worst,
                limit: DEFICIT_LIMIT,
                required_dim: auto_dim(n_s, n_b, kappa).max(2 * dim),
            });
        }
        Ok(Self {
            log_p0,
            log_p1,
            band,
            deficit_h0,
            deficit_h1,
            identical: kappa == 0.0,
        })
    }

    /// Tries [`auto_dim`], doubling on truncation failure.
    pub fn auto(n_s: f64, n_b: f64, kappa: f64) -> Result<Self> {
        check_inputs(n_s, n_b, kappa)?;
        let mut dim = auto_dim(n_s, n_b, kappa);
        let mut last = None;
        for _ in 0..4 {
            match Self::new(n_s, n_b, kappa, dim) {
                Ok(c) => return Ok(c),
                Err(e @ QiError::Truncation { .. }) => {
                    last = Some(e);
                    dim *= 2;
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("loop ran at least once"))
    }

    pub fn dim(&self) -> usize {
        self.band.dim()
    }

    /// `Tr(ρ0^s ρ1^{1-s})` over the truncated space.
    pub fn q(&self, s: f64) -> f64 {
        let a: Vec<f64> = self.log_p0.iter().map(|l| (s * l).exp()).collect();
        let b: Vec<f64> = self.log_p1.iter().map(|l| ((1.0 - s) * l).exp()).collect();
        let mut total = 0.0;
        for (k, diag) in self.band.diagonals().iter().enumerate() {
            let mut part = 0.0;
            for (n, &v) in diag.iter().enumerate() {
                let w = v * v;
                let mut pair = a[n + k] * b[n];
                if k > 0 {
                    pair += a[n] * b[n + k];
                }
                part += w * pair;
            }
            total += part;
        }
        total
    }

    /// Golden-section minimum of `Q(s)`.
    /// At `κ = 0` the hypotheses coincide and `Q = 1` exactly.
    pub fn minimize(&self, k_modes: f64) -> ChernoffResult {
        let m = if self.identical {
            crate::optimize::Minimum { x: 0.5, value: 1.0, iterations: 0 }
        } else {
            golden_section(|s| self.q(s), S_MIN, S_MAX, S_TOL)
        };
        let q_value = m.value.min(1.0);
        ChernoffResult {
            q_value,
            s_star: m.x,
            snr_ci: k_modes * (0.0 - q_value.ln()),
            k_modes,
            dim: self.dim(),
            deficit_h0: self.deficit_h0,
            deficit_h1: self.deficit_h1,
        }
    }
}

/// CI Chernoff exponent with an automatically chosen truncation.
pub fn ci_chernoff(n_s: f64, n_b: f64, kappa: f64, k_modes: f64) -> Result<ChernoffResult> {
    if !(k_modes >= 1.0 && k_modes.is_finite()) {
        return Err(domain(format!("k_modes must be finite and >= 1, got {k_modes}")));
    }
    Ok(CiChernoff::auto(n_s, n_b, kappa)?.minimize(k_modes))
}

/// CI Chernoff exponent at a fixed truncation.
pub fn ci_chernoff_with_dim(
    n_s: f64,
    n_b: f64,
    kappa: f64,
    k_modes: f64,
    dim: usize,
) -> Result<ChernoffResult> {
    Ok(CiChernoff::new(n_s, n_b, kappa, dim)?.minimize(k_modes))
}

/// Memoizes Chernoff minima per `(N_S, N_B, κ)`; the mode count only scales
/// the exponent.
#[derive(Debug, Default)]
pub struct ChernoffCache {
    map: Mutex<HashMap<[u64; 3], ChernoffResult>>,
}

impl ChernoffCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, n_s: f64, n_b: f64, kappa: f64, k_modes: f64) -> Result<ChernoffResult> {
        let key = [n_s.to_bits(), n_b.to_bits(), kappa.to_bits()];
        if let Some(hit) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(hit.with_k_modes(k_modes));
        }
        let fresh = ci_chernoff(n_s, n_b, kappa, 1.0)?;
        self.map.lock().expect("cache lock").insert(key, fresh);
        Ok(fresh.with_k_modes(k_modes))
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
