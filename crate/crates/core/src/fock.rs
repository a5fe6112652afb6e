//! Truncated number-basis matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, QiError, Result};

/// Largest tail mass a thermal truncation may discard.
pub const THERMAL_TAIL_LIMIT: f64 = 1e-10;

/// Square complex matrix in the number basis `|0>, ..., |dim-1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockMatrix {
    entries: DMatrix<Complex64>,
}

impl FockMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(domain(format!(
                "Fock matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[(m, n)]
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    /// Truncated annihilation operator, `a|n> = √n |n-1>`.
    pub fn annihilation(dim: usize) -> Self {
        let mut entries = DMatrix::zeros(dim, dim);
        for n in 1..dim {
            entries[(n - 1, n)] = Complex64::from((n as f64).sqrt());
        }
        Self { entries }
    }

    /// Truncated creation operator, the adjoint of [`annihilation`](Self::annihilation).
    pub fn creation(dim: usize) -> Self {
        Self::annihilation(dim).adjoint()
    }

    pub fn number(dim: usize) -> Self {
        Self {
            entries: DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |n, _| {
                Complex64::from(n as f64)
            })),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
        }
    }

    pub fn mul(&self, other: &FockMatrix) -> Result<FockMatrix> {
        if self.dim() != other.dim() {
            return Err(QiError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            entries: &self.entries * &other.entries,
        })
    }

    pub fn add(&self, other: &FockMatrix) -> Result<FockMatrix> {
        if self.dim() != other.dim() {
            return Err(QiError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            entries: &self.entries + &other.entries,
        })
    }

    pub fn scaled(&self, factor: Complex64) -> FockMatrix {
        Self {
            entries: &self.entries * factor,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// `Tr(op · self)`, i.e. the expectation of `op` when `self` is a density matrix.
    pub fn expectation(&self, op: &FockMatrix) -> Result<Complex64> {
        if self.dim() != op.dim() {
            return Err(QiError::DimensionMismatch {
                expected: self.dim(),
                actual: op.dim(),
            });
        }
        Ok(op.entries.component_mul(&self.entries.transpose()).sum())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.entries - self.entries.adjoint())
            .iter()
            .all(|z| z.norm() <= tol)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::from(0.5);
        nalgebra::SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean norm of column `n`.
    pub fn column_norm(&self, n: usize) -> f64 {
        self.entries.column(n).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Probability mass of a thermal state above level `dim - 1`.
pub fn thermal_tail(n: f64, dim: usize) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    (n / (n + 1.0)).powf(dim as f64)
}

/// Smallest dimension whose thermal tail is below `limit`.
pub fn thermal_dim(n: f64, limit: f64) -> usize {
    if n <= 0.0 {
        return 1;
    }
    let ratio = (n / (n + 1.0)).ln();
    let d = (limit.ln() / ratio).floor() as usize + 1;
    d.max(1)
}

/// `ln` of the Bose-Einstein weight `n^k / (n+1)^{k+1}` for `k = 0..dim`.
pub fn thermal_log_weights(n: f64, dim: usize) -> Vec<f64> {
    if n == 0.0 {
        return (0..dim)
            .map(|k| if k == 0 { 0.0 } else { f64::NEG_INFINITY })
            .collect();
    }
    let step = (n / (n + 1.0)).ln();
    let base = -(n + 1.0).ln();
    (0..dim).map(|k| base + k as f64 * step).collect()
}

/// Thermal density matrix truncated to `dim` levels, not renormalized.
pub fn thermal_fock(n_b: f64, dim: usize) -> Result<FockMatrix> {
    if !(n_b >= 0.0 && n_b.is_finite()) {
        return Err(domain(format!("n_b must be finite and >= 0, got {n_b}")));
    }
    if dim == 0 {
        return Err(domain("dimension must be positive"));
    }
    let tail = thermal_tail(n_b, dim);
    if tail >= THERMAL_TAIL_LIMIT {
        return Err(QiError::Truncation {
            deficit: tail,
            limit: THERMAL_TAIL_LIMIT,
            required_dim: thermal_dim(n_b, THERMAL_TAIL_LIMIT),
        });
    }
    let weights = thermal_log_weights(n_b, dim);
    let diag = nalgebra::DVector::from_fn(dim, |k, _| Complex64::from(weights[k].exp()));
    Ok(FockMatrix {
        entries: DMatrix::from_diagonal(&diag),
    })
}

/// `ln n!` for `n = 0..len`.
pub(crate) fn log_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..len {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}

/// Magnitudes `|<n+k|D(β)|n>|` stored by diagonal offset `k`, computed from
/// `√(n!/(n+k)!) |β|^k e^{-|β|²/2} L_n^{(k)}(|β|²)` in log-scaled arithmetic.
///
/// Offsets whose entries have all dropped below `1e-20` beyond the expected
/// spread are not stored.
#[derive(Debug, Clone)]
pub(crate) struct DisplacementBand {
    dim: usize,
    /// `diagonals[k][n]` is the signed real factor of `<n+k|D|n>`.
    diagonals: Vec<Vec<f64>>,
}

const BAND_FLOOR: f64 = 1e-20;
const RESCALE: f64 = 1e150;

impl DisplacementBand {
    pub(crate) fn new(abs_beta: f64, dim: usize) -> Self {
        if abs_beta == 0.0 {
            return Self {
                dim,
                diagonals: vec![vec![1.0; dim]],
            };
        }
        let x = abs_beta * abs_beta;
        let lf = log_factorials(2 * dim + 1);
        let ln_beta = abs_beta.ln();
        let spread = 2.0 * abs_beta * (dim as f64).sqrt();
        let min_offset = (spread + 10.0 * spread.cbrt() + 10.0).ceil() as usize;
        let ln_rescale = RESCALE.ln();
        let mut diagonals = Vec::new();
        for k in 0..dim {
            let kf = k as f64;
            let len = dim - k;
            let mut diag = Vec::with_capacity(len);
            let (mut prev, mut cur) = (0.0, 1.0);
            let mut log_scale = 0.0;
            let mut peak: f64 = 0.0;
            for n in 0..len {
                if n == 1 {
                    prev = cur;
                    cur = 1.0 + kf - x;
                } else if n > 1 {
                    let m = (n - 1) as f64;
                    let next = ((2.0 * m + 1.0 + kf - x) * cur - (m + kf) * prev) / (m + 1.0);
                    prev = cur;
                    cur = next;
                }
                if cur.abs() > RESCALE {
                    cur /= RESCALE;
                    prev /= RESCALE;
                    log_scale += ln_rescale;
                }
                let ln_pref = 0.5 * (lf[n] - lf[n + k]) + kf * ln_beta - 0.5 * x;
                let value = if cur == 0.0 {
                    0.0
                } else {
                    cur.signum() * (ln_pref + log_scale + cur.abs().ln()).exp()
                };
                peak = peak.max(value.abs());
                diag.push(value);
            }
            diagonals.push(diag);
            if k >= min_offset && peak < BAND_FLOOR {
                break;
            }
        }
        Self { dim, diagonals }
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn diagonals(&self) -> &[Vec<f64>] {
        &self.diagonals
    }

    /// `|<m|D|n>|²`, zero outside the stored band.
    #[cfg(test)]
    pub(crate) fn weight(&self, m: usize, n: usize) -> f64 {
        let (k, low) = if m >= n { (m - n, n) } else { (n - m, m) };
        self.diagonals
            .get(k)
            .map(|d| d[low] * d[low])
            .unwrap_or(0.0)
    }
}

/// Displacement operator `D(β)` truncated to `dim` levels.
pub fn displacement_matrix(beta: Complex64, dim: usize) -> Result<FockMatrix> {
    if dim == 0 {
        return Err(domain("dimension must be positive"));
    }
    if !(beta.re.is_finite() && beta.im.is_finite()) {
        return Err(domain("displacement must be finite"));
    }
    let band = DisplacementBand::new(beta.norm(), dim);
    let phase = if beta.norm() > 0.0 {
        beta / beta.norm()
    } else {
        Complex64::from(1.0)
    };
    let mut entries = DMatrix::zeros(dim, dim);
    for (k, diag) in band.diagonals().iter().enumerate() {
        // lower: β^k phase; upper: (-β*)^k phase
        let lower = phase.powu(k as u32);
        let upper = (-phase.conj()).powu(k as u32);
        for (n, &v) in diag.iter().enumerate() {
            entries[(n + k, n)] = lower * v;
            if k > 0 {
                entries[(n, n + k)] = upper * v;
            }
        }
    }
    Ok(FockMatrix { entries })
}
