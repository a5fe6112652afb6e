//! Receiver measurement operators as quadratic forms in ladder operators, and
//! their mean and variance on zero-mean Gaussian states.
//!
//! An operator on `M` modes is stored as `c + Σ F_uv ξ_u ξ_v` over the ordered
//! basis `ξ = (a_1, ..., a_M, a_1†, ..., a_M†)`. Products keep the order in
//! which they were written; nothing is symmetrized on construction.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, QiError, Result};
use crate::gaussian::{symplectic_form, GaussianState};

/// Mode index of the return beam.
pub const RETURN: usize = 0;
/// Mode index of the retained idler.
pub const IDLER: usize = 1;
/// Mode index of the phase-conjugate receiver's vacuum port.
pub const VACUUM: usize = 2;

/// A single ladder operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ladder {
    /// Annihilation operator `a_k`.
    Lower(usize),
    /// Creation operator `a_k†`.
    Raise(usize),
}

impl Ladder {
    pub fn mode(self) -> usize {
        match self {
            Ladder::Lower(k) | Ladder::Raise(k) => k,
        }
    }

    pub fn adjoint(self) -> Ladder {
        match self {
            Ladder::Lower(k) => Ladder::Raise(k),
            Ladder::Raise(k) => Ladder::Lower(k),
        }
    }

    /// Position in the basis `(a_1..a_M, a_1†..a_M†)`.
    pub fn index(self, num_modes: usize) -> usize {
        match self {
            Ladder::Lower(k) => k,
            Ladder::Raise(k) => num_modes + k,
        }
    }

    pub fn from_index(index: usize, num_modes: usize) -> Ladder {
        if index < num_modes {
            Ladder::Lower(index)
        } else {
            Ladder::Raise(index - num_modes)
        }
    }
}

/// Hermitian operator of degree at most two in the ladder operators.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticOperator {
    num_modes: usize,
    constant: f64,
    coeff: DMatrix<Complex64>,
}

/// Normal-ordered representation used for comparisons.
///
/// Only `a†a`, `a†a†` and `aa` entries survive; commuting pairs are stored
/// with the lower mode first, and commutators are folded into the constant.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub constant: Complex64,
    pub coeff: DMatrix<Complex64>,
}

impl NormalForm {
    pub fn max_abs_diff(&self, other: &NormalForm) -> f64 {
        let d = (&self.coeff - &other.coeff).map(|z| z.norm()).max();
        d.max((self.constant - other.constant).norm())
    }
}

impl QuadraticOperator {
    /// The zero operator on `num_modes` modes.
    pub fn zero(num_modes: usize) -> Self {
        Self::scalar(num_modes, 0.0)
    }

    /// The constant operator `c·1`.
    pub fn scalar(num_modes: usize, c: f64) -> Self {
        let n = 2 * num_modes;
        Self {
            num_modes,
            constant: c,
            coeff: DMatrix::zeros(n, n),
        }
    }

    /// Builds an operator from raw parts. The coefficient matrix must be `2M×2M`.
    pub fn from_parts(num_modes: usize, constant: f64, coeff: DMatrix<Complex64>) -> Result<Self> {
        let n = 2 * num_modes;
        if coeff.nrows() != n || coeff.ncols() != n {
            return Err(QiError::DimensionMismatch {
                expected: n,
                actual: coeff.nrows().max(coeff.ncols()),
            });
        }
        Ok(Self {
            num_modes,
            constant,
            coeff,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn coeff(&self) -> &DMatrix<Complex64> {
        &self.coeff
    }

    /// Coefficient of the ordered product `u v`.
    pub fn coefficient(&self, u: Ladder, v: Ladder) -> Complex64 {
        self.coeff[(u.index(self.num_modes), v.index(self.num_modes))]
    }

    /// Adds `w · u v`. Panics if either mode is out of range.
    pub fn add_term(&mut self, u: Ladder, v: Ladder, w: impl Into<Complex64>) -> &mut Self {
        assert!(
            u.mode() < self.num_modes && v.mode() < self.num_modes,
            "ladder operator outside the {}-mode space",
            self.num_modes
        );
        let (i, j) = (u.index(self.num_modes), v.index(self.num_modes));
        self.coeff[(i, j)] += w.into();
        self
    }

    /// Builder form of [`add_term`](Self::add_term).
    pub fn with_term(mut self, u: Ladder, v: Ladder, w: impl Into<Complex64>) -> Self {
        self.add_term(u, v, w);
        self
    }

    pub fn add(&self, other: &QuadraticOperator) -> Result<QuadraticOperator> {
        if other.num_modes != self.num_modes {
            return Err(QiError::DimensionMismatch {
                expected: self.num_modes,
                actual: other.num_modes,
            });
        }
        Ok(Self {
            num_modes: self.num_modes,
            constant: self.constant + other.constant,
            coeff: &self.coeff + &other.coeff,
        })
    }

    pub fn scaled(&self, factor: f64) -> QuadraticOperator {
        Self {
            num_modes: self.num_modes,
            constant: self.constant * factor,
            coeff: &self.coeff * Complex64::from(factor),
        }
    }

    /// The same operator acting on a larger space; new modes are appended.
    pub fn embed(&self, num_modes: usize) -> Result<QuadraticOperator> {
        if num_modes < self.num_modes {
            return Err(domain(format!(
                "cannot embed a {}-mode operator into {num_modes} modes",
                self.num_modes
            )));
        }
        let mut out = Self::scalar(num_modes, self.constant);
        let m = self.num_modes;
        for i in 0..2 * m {
            for j in 0..2 * m {
                let w = self.coeff[(i, j)];
                if w != Complex64::new(0.0, 0.0) {
                    let u = Ladder::from_index(i, m);
                    let v = Ladder::from_index(j, m);
                    out.coeff[(u.index(num_modes), v.index(num_modes))] += w;
                }
            }
        }
        Ok(out)
    }

    /// Hermitian adjoint: `(w u v)† = w* v† u†`.
    pub fn adjoint(&self) -> QuadraticOperator {
        let m = self.num_modes;
        let mut out = Self::scalar(m, self.constant);
        for i in 0..2 * m {
            for j in 0..2 * m {
                let w = self.coeff[(i, j)];
                let u = Ladder::from_index(i, m).adjoint();
                let v = Ladder::from_index(j, m).adjoint();
                out.coeff[(v.index(m), u.index(m))] += w.conj();
            }
        }
        out
    }

    pub fn normal_ordered(&self) -> NormalForm {
        let m = self.num_modes;
        let mut constant = Complex64::from(self.constant);
        let mut coeff = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..2 * m {
            for j in 0..2 * m {
                let w = self.coeff[(i, j)];
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (mut u, mut v) = (Ladder::from_index(i, m), Ladder::from_index(j, m));
                match (u, v) {
                    (Ladder::Lower(p), Ladder::Raise(q)) => {
                        // a_p a_q† = a_q† a_p + δ_pq
                        if p == q {
                            constant += w;
                        }
                        u = Ladder::Raise(q);
                        v = Ladder::Lower(p);
                    }
                    (Ladder::Lower(p), Ladder::Lower(q)) | (Ladder::Raise(p), Ladder::Raise(q))
                        if p > q =>
                    {
                        std::mem::swap(&mut u, &mut v);
                    }
                    _ => {}
                }
                coeff[(u.index(m), v.index(m))] += w;
            }
        }
        NormalForm { constant, coeff }
    }

    /// True if the operator equals its adjoint to within `tol` entrywise.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.normal_ordered().max_abs_diff(&self.adjoint().normal_ordered()) <= tol
    }

    /// True if both operators have the same normal-ordered form to within `tol`.
    pub fn approx_eq(&self, other: &QuadraticOperator, tol: f64) -> bool {
        self.num_modes == other.num_modes
            && self.normal_ordered().max_abs_diff(&other.normal_ordered()) <= tol
    }

    /// Replaces the basis by `ξ = L ξ'`, returning the operator in terms of `ξ'`.
    pub fn substitute(&self, l: &DMatrix<Complex64>) -> Result<QuadraticOperator> {
        let n = 2 * self.num_modes;
        if l.nrows() != n || l.ncols() != n {
            return Err(QiError::DimensionMismatch {
                expected: n,
                actual: l.nrows(),
            });
        }
        Ok(Self {
            num_modes: self.num_modes,
            constant: self.constant,
            coeff: l.transpose() * &self.coeff * l,
        })
    }

    fn scale_hint(&self) -> f64 {
        self.coeff
            .iter()
            .map(|z| z.norm())
            .fold(self.constant.abs(), f64::max)
            .max(1.0)
    }
}

/// `X(θ)² = [(a† e^{iθ} + a e^{-iθ})/√2]²` on `mode`.
pub fn quadrature_operator(mode: usize, theta: f64, num_modes: usize) -> Result<QuadraticOperator> {
    if mode >= num_modes {
        return Err(domain(format!("mode {mode} out of range for {num_modes} modes")));
    }
    let (a, ad) = (Ladder::Lower(mode), Ladder::Raise(mode));
    let phase = Complex64::from_polar(1.0, 2.0 * theta);
    Ok(QuadraticOperator::zero(num_modes)
        .with_term(ad, ad, phase * 0.5)
        .with_term(ad, a, 0.5)
        .with_term(a, ad, 0.5)
        .with_term(a, a, phase.conj() * 0.5))
}

/// Sum of the squared position quadrature on port 1 and squared momentum
/// quadrature on port 2 after the receiver's beam splitter.
pub fn build_dhd_prime() -> QuadraticOperator {
    let x1 = quadrature_operator(0, 0.0, 2).expect("mode 0 exists");
    let p2 = quadrature_operator(1, std::f64::consts::FRAC_PI_2, 2).expect("mode 1 exists");
    x1.add(&p2).expect("same mode count")
}

/// Heisenberg pull-back of `op` through the beam splitter applied by
/// [`apply_beam_splitter`](crate::gaussian::apply_beam_splitter) with the same
/// arguments: `a_i -> √t a_i + √(1-t) a_j`, `a_j -> -√(1-t) a_i + √t a_j`.
///
/// `moments(&conjugate_modes(op, i, j, t)?, ρ)` equals
/// `moments(op, &apply_beam_splitter(ρ, i, j, t)?)`.
pub fn conjugate_modes(op: &QuadraticOperator, i: usize, j: usize, t: f64) -> Result<QuadraticOperator> {
    let m = op.num_modes();
    if !(0.0..=1.0).contains(&t) {
        return Err(domain(format!("transmissivity must lie in [0,1], got {t}")));
    }
    if i == j || i >= m || j >= m {
        return Err(domain(format!("invalid mode pair ({i},{j}) for {m} modes")));
    }
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    let mut l = DMatrix::<Complex64>::identity(2 * m, 2 * m);
    for offset in [0, m] {
        let (ii, jj) = (i + offset, j + offset);
        l[(ii, ii)] = st.into();
        l[(ii, jj)] = sr.into();
        l[(jj, ii)] = (-sr).into();
        l[(jj, jj)] = st.into();
    }
    op.substitute(&l)
}

/// Expresses a two-mode operator defined on the output ports of the receiver's
/// beam splitter in terms of the (return, idler) inputs.
///
/// This is the reverse splitter: port 1 carries `(a_R - a_I)/√2` and port 2
/// carries `(a_R + a_I)/√2` at `t = 1/2`, i.e. the pull-back through
/// `apply_beam_splitter(ρ, IDLER, RETURN, t)`.
pub fn conjugate_by_bs(op: &QuadraticOperator, t: f64) -> Result<QuadraticOperator> {
    if op.num_modes() != 2 {
        return Err(QiError::DimensionMismatch {
            expected: 2,
            actual: op.num_modes(),
        });
    }
    conjugate_modes(op, IDLER, RETURN, t)
}

/// Double-homodyne operator `a_R a_R† - a_R† a_I† - a_R a_I + a_I† a_I`.
pub fn build_dhd_operator() -> QuadraticOperator {
    let (r, rd) = (Ladder::Lower(RETURN), Ladder::Raise(RETURN));
    let (i, id) = (Ladder::Lower(IDLER), Ladder::Raise(IDLER));
    QuadraticOperator::zero(2)
        .with_term(r, rd, 1.0)
        .with_term(rd, id, -1.0)
        .with_term(r, i, -1.0)
        .with_term(id, i, 1.0)
}

/// OPA receiver operator
/// `(G-1) a_R a_R† + √(G(G-1)) (a_R† a_I† + a_R a_I) + G a_I† a_I`.
pub fn build_opa_operator(gain: f64) -> Result<QuadraticOperator> {
    if !(gain > 1.0 && gain.is_finite()) {
        return Err(domain(format!("OPA gain must exceed 1, got {gain}")));
    }
    let cross = (gain * (gain - 1.0)).sqrt();
    let (r, rd) = (Ladder::Lower(RETURN), Ladder::Raise(RETURN));
    let (i, id) = (Ladder::Lower(IDLER), Ladder::Raise(IDLER));
    Ok(QuadraticOperator::zero(2)
        .with_term(r, rd, gain - 1.0)
        .with_term(rd, id, cross)
        .with_term(r, i, cross)
        .with_term(id, i, gain))
}

/// Phase-conjugate receiver operator on (return, idler, vacuum):
/// `ν (a_R a_I + a_R† a_I†) + μ (a_I a_V† + a_I† a_V)`.
pub fn build_pc_operator(mu: f64, nu: f64) -> Result<QuadraticOperator> {
    let excess = mu * mu - nu * nu - 1.0;
    if !(excess.abs() <= 1e-12) {
        return Err(domain(format!(
            "PC parameters need mu^2 - nu^2 = 1, off by {excess:e}"
        )));
    }
    let (r, rd) = (Ladder::Lower(RETURN), Ladder::Raise(RETURN));
    let (i, id) = (Ladder::Lower(IDLER), Ladder::Raise(IDLER));
    let (v, vd) = (Ladder::Lower(VACUUM), Ladder::Raise(VACUUM));
    Ok(QuadraticOperator::zero(3)
        .with_term(r, i, nu)
        .with_term(rd, id, nu)
        .with_term(i, vd, mu)
        .with_term(id, v, mu))
}

/// Mean and variance of a measurement operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

/// Variances this far below zero are treated as round-off and clipped.
pub const VARIANCE_CLIP_TOL: f64 = 1e-10;

impl MomentPair {
    /// Clips round-off negative variances; rejects anything more negative.
    pub fn new(mean: f64, variance: f64, scale: f64) -> Result<Self> {
        let variance = if variance < 0.0 {
            if variance >= -VARIANCE_CLIP_TOL * scale.max(1.0) {
                0.0
            } else {
                return Err(QiError::Unphysical(format!("negative variance {variance}")));
            }
        } else {
            variance
        };
        Ok(Self { mean, variance })
    }
}

/// Ordered two-point functions `G_uv = <ξ_u ξ_v>` of a zero-mean state.
pub fn second_moments(state: &GaussianState) -> DMatrix<Complex64> {
    let m = state.num_modes();
    let n = 2 * m;
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, 0.5);
    // a = (x + ip)/2, a† = (x - ip)/2
    let mut t = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..m {
        t[(k, 2 * k)] = half;
        t[(k, 2 * k + 1)] = half_i;
        t[(m + k, 2 * k)] = half;
        t[(m + k, 2 * k + 1)] = -half_i;
    }
    // <r_i r_j> = V_ij + i Ω_ij since [x, p] = 2i
    let omega = symplectic_form(m);
    let rr = DMatrix::from_fn(n, n, |i, j| Complex64::new(state.cov()[(i, j)], omega[(i, j)]));
    &t * rr * t.transpose()
}

/// Mean and variance of `op` on a zero-mean Gaussian state.
///
/// Fourth moments factor into the three ordered pairings
/// `<ξuξvξwξz> = G_uv G_wz + G_uw G_vz + G_uz G_vw`, which reduces the
/// variance to `tr(Gᵀ F G Fᵀ) + tr(F G F Gᵀ)`.
pub fn moments(op: &QuadraticOperator, state: &GaussianState) -> Result<MomentPair> {
    if op.num_modes() != state.num_modes() {
        return Err(QiError::DimensionMismatch {
            expected: op.num_modes(),
            actual: state.num_modes(),
        });
    }
    if !state.is_zero_mean(1e-12) {
        return Err(QiError::Unsupported(
            "moment engine requires a zero-mean state".into(),
        ));
    }
    let scale = op.scale_hint();
    if !op.is_hermitian(1e-12 * scale) {
        return Err(domain("measurement operator is not Hermitian"));
    }
    let g = second_moments(state);
    let f = op.coeff();
    let mean = Complex64::from(op.constant()) + f.component_mul(&g).sum();
    let gt = g.transpose();
    let ft = f.transpose();
    let var = (&gt * f * &g * &ft).trace() + (f * &g * f * &gt).trace();
    let var_scale = scale * scale * g.iter().map(|z| z.norm()).fold(1.0, f64::max).powi(2);
    MomentPair::new(mean.re, var.re, var_scale)
}
