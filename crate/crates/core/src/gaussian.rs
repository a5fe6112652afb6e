//! Zero-mean Gaussian states described by covariance matrices, and the
//! target-detection channel that produces the two hypothesis states.
//!
//! Quadratures are ordered `x1, p1, x2, p2, ...` with `x = a + a†` and
//! `p = -i(a - a†)`, so the vacuum covariance is the identity and
//! `cov_ij = <{Δr_i, Δr_j}>/2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, QiError, Result};

/// Entrywise tolerance for covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack allowed below 1 for symplectic eigenvalues of physical states.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Gaussian state of `num_modes` bosonic modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Validates symmetry and the uncertainty principle before accepting `cov`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = cov.nrows();
        if n == 0 || !n.is_multiple_of(2) || cov.ncols() != n {
            return Err(domain(format!(
                "covariance must be a non-empty even square matrix, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.len() != n {
            return Err(QiError::DimensionMismatch {
                expected: n,
                actual: mean.len(),
            });
        }
        if cov.iter().chain(mean.iter()).any(|v| !v.is_finite()) {
            return Err(domain("state contains non-finite entries"));
        }
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(QiError::Unphysical(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let state = Self { mean, cov };
        let nu = state.symplectic_eigenvalues()?;
        if let Some(min) = nu.iter().copied().reduce(f64::min) {
            if min < 1.0 - PHYSICALITY_TOL {
                return Err(QiError::Unphysical(format!(
                    "symplectic eigenvalue {min} below 1"
                )));
            }
        }
        Ok(state)
    }

    /// Builds a state from a transformed covariance, symmetrizing round-off.
    fn from_transformed(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        let cov = (&cov + cov.transpose()) * 0.5;
        Self { mean, cov }
    }

    /// `num_modes` modes in the vacuum.
    pub fn vacuum(num_modes: usize) -> Self {
        let n = 2 * num_modes;
        Self {
            mean: DVector::zeros(n),
            cov: DMatrix::identity(n, n),
        }
    }

    pub fn num_modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn is_zero_mean(&self, tol: f64) -> bool {
        self.mean.iter().all(|m| m.abs() <= tol)
    }

    /// Tensor product: the modes of `other` are appended after ours.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let n1 = self.cov.nrows();
        let n = n1 + other.cov.nrows();
        let mut cov = DMatrix::zeros(n, n);
        cov.view_mut((0, 0), (n1, n1)).copy_from(&self.cov);
        cov.view_mut((n1, n1), (n - n1, n - n1))
            .copy_from(&other.cov);
        let mut mean = DVector::zeros(n);
        mean.rows_mut(0, n1).copy_from(&self.mean);
        mean.rows_mut(n1, n - n1).copy_from(&other.mean);
        GaussianState { mean, cov }
    }

    /// Partial trace keeping `modes`, in the order given.
    pub fn reduce(&self, modes: &[usize]) -> Result<GaussianState> {
        let m = self.num_modes();
        if modes.is_empty() {
            return Err(domain("cannot reduce to zero modes"));
        }
        let mut idx = Vec::with_capacity(2 * modes.len());
        for &k in modes {
            if k >= m {
                return Err(domain(format!("mode {k} out of range for {m} modes")));
            }
            idx.push(2 * k);
            idx.push(2 * k + 1);
        }
        let n = idx.len();
        let cov = DMatrix::from_fn(n, n, |i, j| self.cov[(idx[i], idx[j])]);
        let mean = DVector::from_fn(n, |i, _| self.mean[idx[i]]);
        Ok(GaussianState { mean, cov })
    }

    /// Symplectic eigenvalues in ascending order, one per mode.
    ///
    /// The squares are the eigenvalues of `(iΩV)^2 = -ΩVΩV`, obtained from the
    /// symmetric similar matrix `V^{1/2} Ωᵀ V Ω V^{1/2}`.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.cov.nrows();
        let eig = SymmetricEigen::new(self.cov.clone());
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig <= 0.0 {
            return Err(QiError::Unphysical(format!(
                "covariance not positive definite (eigenvalue {min_eig})"
            )));
        }
        let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
        let sqrt_cov = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
        let omega = symplectic_form(n / 2);
        let inner = omega.transpose() * &self.cov * &omega;
        let sim = &sqrt_cov * inner * &sqrt_cov;
        let sim = (&sim + sim.transpose()) * 0.5;
        let mut sq: Vec<f64> = SymmetricEigen::new(sim).eigenvalues.iter().copied().collect();
        sq.sort_by(f64::total_cmp);
        Ok(sq
            .chunks(2)
            .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
            .collect())
    }

    pub fn is_physical(&self) -> bool {
        self.symplectic_eigenvalues()
            .map(|nu| nu.iter().all(|&v| v >= 1.0 - PHYSICALITY_TOL))
            .unwrap_or(false)
    }

    pub fn determinant(&self) -> f64 {
        self.cov.determinant()
    }
}

/// Block-diagonal symplectic form with `[[0, 1], [-1, 0]]` per mode.
pub fn symplectic_form(num_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * num_modes, 2 * num_modes);
    for k in 0..num_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn check_photons(name: &str, n: f64) -> Result<()> {
    if !n.is_finite() || n < 0.0 {
        return Err(domain(format!("{name} must be finite and >= 0, got {n}")));
    }
    Ok(())
}

/// Two-mode squeezed vacuum with `n_s` photons per mode, modes (signal, idler).
pub fn make_tmsv(n_s: f64) -> Result<GaussianState> {
    check_photons("n_s", n_s)?;
    let a = 2.0 * n_s + 1.0;
    let c = 2.0 * (n_s * (n_s + 1.0)).sqrt();
    #[rustfmt::skip]
    let cov = DMatrix::from_row_slice(4, 4, &[
        a, 0.0, c, 0.0,
        0.0, a, 0.0, -c,
        c, 0.0, a, 0.0,
        0.0, -c, 0.0, a,
    ]);
    Ok(GaussianState {
        mean: DVector::zeros(4),
        cov,
    })
}

/// Single-mode thermal state with `n_b` mean photons.
pub fn make_thermal(n_b: f64) -> Result<GaussianState> {
    check_photons("n_b", n_b)?;
    let b = 2.0 * n_b + 1.0;
    Ok(GaussianState {
        mean: DVector::zeros(2),
        cov: DMatrix::from_diagonal_element(2, 2, b),
    })
}

/// Coherent state `|α>`; the mean is `(2 Re α, 2 Im α)`.
pub fn make_coherent(alpha_re: f64, alpha_im: f64) -> GaussianState {
    GaussianState {
        mean: DVector::from_vec(vec![2.0 * alpha_re, 2.0 * alpha_im]),
        cov: DMatrix::identity(2, 2),
    }
}

/// Symplectic matrix of a beam splitter between modes `i` and `j`:
/// `r_i -> √t r_i + √(1-t) r_j`, `r_j -> -√(1-t) r_i + √t r_j` on both quadratures.
pub fn beam_splitter_matrix(num_modes: usize, i: usize, j: usize, t: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(domain(format!("transmissivity must lie in [0,1], got {t}")));
    }
    if i == j || i >= num_modes || j >= num_modes {
        return Err(domain(format!(
            "invalid mode pair ({i},{j}) for {num_modes} modes"
        )));
    }
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    let mut s = DMatrix::identity(2 * num_modes, 2 * num_modes);
    for q in 0..2 {
        let (ii, jj) = (2 * i + q, 2 * j + q);
        s[(ii, ii)] = st;
        s[(ii, jj)] = sr;
        s[(jj, ii)] = -sr;
        s[(jj, jj)] = st;
    }
    Ok(s)
}

/// Mixes modes `i` and `j` on a beam splitter of transmissivity `t`.
pub fn apply_beam_splitter(
    state: &GaussianState,
    mode_i: usize,
    mode_j: usize,
    t: f64,
) -> Result<GaussianState> {
    let s = beam_splitter_matrix(state.num_modes(), mode_i, mode_j, t)?;
    let cov = &s * &state.cov * s.transpose();
    let mean = &s * &state.mean;
    Ok(GaussianState::from_transformed(mean, cov))
}

/// Target absent (`H0`) or present (`H1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub const BOTH: [Hypothesis; 2] = [Hypothesis::H0, Hypothesis::H1];
}

/// OPA gain used for the comparison receivers, `G - 1 = 7.4e-5`.
pub const DEFAULT_OPA_GAIN: f64 = 1.0 + 7.4e-5;
/// Phase-conjugate receiver amplitude on the vacuum port.
pub const DEFAULT_PC_MU: f64 = std::f64::consts::SQRT_2;
/// Phase-conjugate receiver amplitude on the conjugated return.
pub const DEFAULT_PC_NU: f64 = 1.0;

/// One point of the parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QiScenario {
    /// Target reflectivity.
    pub kappa: f64,
    /// Mean signal photons per mode.
    pub n_s: f64,
    /// Mean background photons per mode.
    pub n_b: f64,
    /// Number of independent signal-idler mode pairs.
    pub k_modes: f64,
    pub opa_gain: f64,
    pub pc_mu: f64,
    pub pc_nu: f64,
}

impl QiScenario {
    /// Scenario with the default receiver parameters.
    pub fn new(kappa: f64, n_s: f64, n_b: f64, k_modes: f64) -> Self {
        Self {
            kappa,
            n_s,
            n_b,
            k_modes,
            opa_gain: DEFAULT_OPA_GAIN,
            pc_mu: DEFAULT_PC_MU,
            pc_nu: DEFAULT_PC_NU,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_n_s(mut self, n_s: f64) -> Self {
        self.n_s = n_s;
        self
    }

    pub fn with_k_modes(mut self, k_modes: f64) -> Self {
        self.k_modes = k_modes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(0.0..=1.0).contains(&self.kappa) {
            problems.push(format!("kappa must lie in [0,1], got {}", self.kappa));
        }
        if !(self.n_s >= 0.0 && self.n_s.is_finite()) {
            problems.push(format!("n_s must be finite and >= 0, got {}", self.n_s));
        }
        if !(self.n_b >= 0.0 && self.n_b.is_finite()) {
            problems.push(format!("n_b must be finite and >= 0, got {}", self.n_b));
        }
        if !(self.k_modes >= 1.0 && self.k_modes.is_finite()) {
            problems.push(format!("k_modes must be finite and >= 1, got {}", self.k_modes));
        }
        if !(self.opa_gain > 1.0 && self.opa_gain.is_finite()) {
            problems.push(format!("opa_gain must exceed 1, got {}", self.opa_gain));
        }
        let pc = self.pc_mu * self.pc_mu - self.pc_nu * self.pc_nu - 1.0;
        if !(pc.abs() <= 1e-12) {
            problems.push(format!(
                "pc_mu^2 - pc_nu^2 must equal 1, off by {pc:e}"
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(QiError::Domain(problems.join("; ")))
        }
    }
}

fn check_channel(n_s: f64, n_b: f64, kappa: f64) -> Result<()> {
    check_photons("n_s", n_s)?;
    check_photons("n_b", n_b)?;
    if !(0.0..=1.0).contains(&kappa) {
        return Err(domain(format!("kappa must lie in [0,1], got {kappa}")));
    }
    Ok(())
}

/// Two-mode (return, idler) state under the given hypothesis, in closed form.
pub fn qi_channel(n_s: f64, n_b: f64, kappa: f64, hypothesis: Hypothesis) -> Result<GaussianState> {
    check_channel(n_s, n_b, kappa)?;
    let a = 2.0 * n_s + 1.0;
    let b = 2.0 * n_b + 1.0;
    let c = 2.0 * (n_s * (n_s + 1.0)).sqrt();
    let (ret, corr) = match hypothesis {
        Hypothesis::H0 => (b, 0.0),
        Hypothesis::H1 => (kappa * a + (1.0 - kappa) * b, c * kappa.sqrt()),
    };
    #[rustfmt::skip]
    let cov = DMatrix::from_row_slice(4, 4, &[
        ret, 0.0, corr, 0.0,
        0.0, ret, 0.0, -corr,
        corr, 0.0, a, 0.0,
        0.0, -corr, 0.0, a,
    ]);
    Ok(GaussianState {
        mean: DVector::zeros(4),
        cov,
    })
}

/// Same state as [`qi_channel`], built by mixing the signal arm of a TMSV with
/// a thermal mode and discarding the loss port.
pub fn qi_channel_composed(
    n_s: f64,
    n_b: f64,
    kappa: f64,
    hypothesis: Hypothesis,
) -> Result<GaussianState> {
    check_channel(n_s, n_b, kappa)?;
    let t = match hypothesis {
        Hypothesis::H0 => 0.0,
        Hypothesis::H1 => kappa,
    };
    // modes: signal, idler, background
    let three = make_tmsv(n_s)?.tensor(&make_thermal(n_b)?);
    let mixed = apply_beam_splitter(&three, 0, 2, t)?;
    mixed.reduce(&[0, 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max()
    }

    #[test]
    fn tmsv_vacuum_limit() {
        let s = make_tmsv(0.0).unwrap();
        assert_eq!(s.cov(), &DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn tmsv_entries_at_one_photon() {
        let s = make_tmsv(1.0).unwrap();
        assert_eq!(s.cov()[(0, 0)], 3.0);
        assert!((s.cov()[(0, 2)] - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((s.cov()[(1, 3)] + 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((s.cov()[(0, 2)] - 2.828427).abs() < 1e-6);
    }

    #[test]
    fn tmsv_a2_minus_c2_is_one() {
        for &n in &[0.0, 1e-4, 0.01, 0.3, 1.0, 7.5, 1e3] {
            let s = make_tmsv(n).unwrap();
            let (a, c) = (s.cov()[(0, 0)], s.cov()[(0, 2)]);
            assert!((a * a - c * c - 1.0).abs() < 1e-12 * a * a, "n = {n}");
        }
    }

    #[test]
    fn negative_photons_rejected() {
        assert!(matches!(make_tmsv(-0.1), Err(QiError::Domain(_))));
        assert!(matches!(make_thermal(-1.0), Err(QiError::Domain(_))));
    }

    #[test]
    fn thermal_values() {
        assert_eq!(make_thermal(0.0).unwrap().cov(), &DMatrix::<f64>::identity(2, 2));
        assert_eq!(make_thermal(30.0).unwrap().cov()[(0, 0)], 61.0);
        assert_eq!(make_thermal(100.0).unwrap().cov()[(1, 1)], 201.0);
    }

    #[test]
    fn coherent_mean_convention() {
        assert_eq!(make_coherent(0.0, 0.0), GaussianState::vacuum(1));
        let s = make_coherent(0.01f64.sqrt(), 0.0);
        assert!((s.mean()[0] - 0.2).abs() < 1e-15);
        let photons = (s.mean()[0] / 2.0).powi(2) + (s.mean()[1] / 2.0).powi(2);
        assert!((photons - 0.01).abs() < 1e-15);
        assert_eq!(make_coherent(1.0, 1.0).mean().as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn beam_splitter_identity_and_vacuum() {
        let s = make_tmsv(0.4).unwrap();
        let out = apply_beam_splitter(&s, 0, 1, 1.0).unwrap();
        assert!(max_abs_diff(out.cov(), s.cov()) < 1e-15);
        let vac = GaussianState::vacuum(2);
        let out = apply_beam_splitter(&vac, 0, 1, 0.5).unwrap();
        assert!(max_abs_diff(out.cov(), vac.cov()) < 1e-15);
    }

    #[test]
    fn beam_splitter_splits_thermal_noise() {
        let n = 0.5;
        let s = make_thermal(n).unwrap().tensor(&GaussianState::vacuum(1));
        let out = apply_beam_splitter(&s, 0, 1, 0.5).unwrap();
        for q in 0..4 {
            assert!((out.cov()[(q, q)] - (n + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn beam_splitter_rejects_bad_arguments() {
        let s = GaussianState::vacuum(2);
        assert!(apply_beam_splitter(&s, 0, 1, 1.5).is_err());
        assert!(apply_beam_splitter(&s, 0, 1, -0.1).is_err());
        assert!(apply_beam_splitter(&s, 1, 1, 0.5).is_err());
        assert!(apply_beam_splitter(&s, 0, 2, 0.5).is_err());
    }

    #[test]
    fn channel_h1_fig4_point() {
        let s = qi_channel(0.01, 30.0, 0.01, Hypothesis::H1).unwrap();
        assert!((s.cov()[(0, 0)] - 60.4002).abs() < 1e-12);
        // 0.0201 to the four digits usually quoted
        assert!((s.cov()[(0, 2)] - 0.0201).abs() < 5e-7);
        assert!((s.cov()[(0, 2)] - 0.2 * (0.01f64 * 1.01).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn channel_limits() {
        let h0 = qi_channel(0.2, 3.0, 0.0, Hypothesis::H0).unwrap();
        let h1 = qi_channel(0.2, 3.0, 0.0, Hypothesis::H1).unwrap();
        assert_eq!(h0, h1);
        let mirror = qi_channel(0.2, 17.0, 1.0, Hypothesis::H1).unwrap();
        assert!(max_abs_diff(mirror.cov(), make_tmsv(0.2).unwrap().cov()) < 1e-15);
        let v0 = qi_channel(0.2, 3.0, 0.7, Hypothesis::H0).unwrap();
        assert_eq!(v0.cov().view((0, 2), (2, 2)).abs().max(), 0.0);
        assert_eq!(v0.cov().view((2, 0), (2, 2)).abs().max(), 0.0);
    }

    #[test]
    fn composed_channel_matches_closed_form() {
        for &(n_s, n_b, kappa) in &[(0.01, 30.0, 0.01), (0.5, 0.0, 0.3), (1.0, 2.0, 1.0), (0.0, 5.0, 0.5)] {
            for h in Hypothesis::BOTH {
                let a = qi_channel(n_s, n_b, kappa, h).unwrap();
                let b = qi_channel_composed(n_s, n_b, kappa, h).unwrap();
                assert!(max_abs_diff(a.cov(), b.cov()) < 1e-12);
            }
        }
    }

    #[test]
    fn tmsv_is_pure() {
        for k in 0..=20 {
            let n = k as f64 * 0.5;
            let s = make_tmsv(n).unwrap();
            assert!((s.determinant() - 1.0).abs() < 1e-9, "n = {n}");
            for nu in s.symplectic_eigenvalues().unwrap() {
                assert!((nu - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn thermal_symplectic_eigenvalue() {
        let s = make_thermal(2.5).unwrap().tensor(&make_thermal(0.5).unwrap());
        let nu = s.symplectic_eigenvalues().unwrap();
        assert!((nu[0] - 2.0).abs() < 1e-12 && (nu[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unphysical_state_rejected() {
        let cov = DMatrix::from_diagonal_element(2, 2, 0.5);
        assert!(matches!(
            GaussianState::new(DVector::zeros(2), cov),
            Err(QiError::Unphysical(_))
        ));
        let mut cov = DMatrix::identity(2, 2);
        cov[(0, 1)] = 0.1;
        assert!(GaussianState::new(DVector::zeros(2), cov).is_err());
    }

    #[test]
    fn scenario_validation() {
        assert!(QiScenario::new(0.01, 0.01, 30.0, 1e7).validate().is_ok());
        assert!(QiScenario::new(1.2, 0.01, 30.0, 1e7).validate().is_err());
        let mut s = QiScenario::new(0.5, 0.01, 30.0, 1e7);
        s.pc_mu = 1.5;
        assert!(s.validate().is_err());
        s = QiScenario::new(0.5, 0.01, 30.0, 1e7);
        s.opa_gain = 1.0;
        assert!(s.validate().is_err());
    }
}
