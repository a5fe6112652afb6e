//! Brute-force number-basis moments, used to check the Gaussian engine.
//!
//! States are stored as ensembles of sparse pure vectors. The QI state is
//! assembled from TMSV amplitudes and a thermal background mixed on a beam
//! splitter, with the loss port traced out member by member.

use num_complex::Complex64;

use crate::error::{domain, QiError, Result};
use crate::fock::{thermal_log_weights, thermal_tail, FockMatrix};
use crate::gaussian::{Hypothesis, QiScenario};
use crate::operators::{Ladder, MomentPair, QuadraticOperator};

/// Truncation used for the PC receiver's vacuum port.
pub const VACUUM_DIM: usize = 3;
/// Largest discarded probability tolerated.
pub const ORACLE_DEFICIT_LIMIT: f64 = 1e-8;
const MAX_DIM: usize = 30;
const MAX_N_S: f64 = 0.5;
const MAX_N_B: f64 = 1.0;

type SparseVec = Vec<(usize, Complex64)>;

/// Mixed state `Σ w_i |ψ_i><ψ_i|` on a tensor product of truncated modes.
#[derive(Debug, Clone)]
pub struct FockEnsemble {
    dims: Vec<usize>,
    members: Vec<(f64, SparseVec)>,
    deficit: f64,
}

/// Output amplitudes over `r = 0..=n+m` (the other port holds `n+m-r`) of
/// `|n>|m>` on a beam splitter sending `√t` of the first input and `√(1-t)` of
/// the second into the first output.
pub fn beam_splitter_number_state(n: usize, m: usize, t: f64) -> Vec<f64> {
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    // a1† -> √t b1† - √(1-t) b2†,  a2† -> √(1-t) b1† + √t b2†
    let mut c = vec![1.0];
    let push = |c: &mut Vec<f64>, alpha: f64, beta: f64, count: usize| {
        for step in 1..=count {
            let total = c.len() - 1;
            let norm = (step as f64).sqrt();
            let mut next = vec![0.0; total + 2];
            for (r, &v) in c.iter().enumerate() {
                next[r + 1] += alpha * ((r + 1) as f64).sqrt() * v / norm;
                next[r] += beta * ((total - r + 1) as f64).sqrt() * v / norm;
            }
            *c = next;
        }
    };
    push(&mut c, sr, st, m);
    push(&mut c, st, -sr, n);
    c
}

impl FockEnsemble {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Probability discarded by the truncation.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Product of thermal modes.
    pub fn product_thermal(photons: &[f64], dim: usize) -> Result<Self> {
        if photons.is_empty() || dim == 0 {
            return Err(domain("need at least one mode and a positive dimension"));
        }
        let mut members: Vec<(f64, Vec<usize>)> = vec![(1.0, Vec::new())];
        let mut kept = 1.0;
        for &n in photons {
            if !(n >= 0.0 && n.is_finite()) {
                return Err(domain(format!("photon number must be >= 0, got {n}")));
            }
            let w = thermal_log_weights(n, dim);
            kept *= 1.0 - thermal_tail(n, dim);
            members = members
                .into_iter()
                .flat_map(|(p, occ)| {
                    w.iter().enumerate().filter(|(_, l)| l.is_finite()).map(move |(k, l)| {
                        let mut o = occ.clone();
                        o.push(k);
                        (p * l.exp(), o)
                    })
                })
                .collect();
        }
        let dims = vec![dim; photons.len()];
        let members = members
            .into_iter()
            .map(|(p, occ)| (p, vec![(flat_index(&occ, &dims), Complex64::from(1.0))]))
            .collect();
        Ok(Self {
            dims,
            members,
            deficit: 1.0 - kept,
        })
    }

    /// (return, idler) state of the QI channel, optionally followed by
    /// `vacuum_modes` extra vacuum modes of dimension [`VACUUM_DIM`].
    pub fn qi_state(
        n_s: f64,
        n_b: f64,
        kappa: f64,
        hypothesis: Hypothesis,
        dim: usize,
        vacuum_modes: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(domain("dimension must be positive"));
        }
        let t = match hypothesis {
            Hypothesis::H0 => 0.0,
            Hypothesis::H1 => kappa,
        };
        let mut dims = vec![dim, dim];
        dims.extend(std::iter::repeat_n(VACUUM_DIM, vacuum_modes));
        let stride_idler = dims[2..].iter().product::<usize>();
        let stride_return = stride_idler * dim;

        let tmsv = thermal_log_weights(n_s, dim);
        let background = thermal_log_weights(n_b, dim);
        let mut members = Vec::new();
        let mut kept = 0.0;
        for (j, lb) in background.iter().enumerate() {
            if !lb.is_finite() {
                continue;
            }
            let pj = lb.exp();
            // member l collects all components whose loss port holds l photons
            let mut by_loss: Vec<SparseVec> = vec![Vec::new(); 2 * dim];
            for (n, ls) in tmsv.iter().enumerate() {
                if !ls.is_finite() {
                    continue;
                }
                let cn = (0.5 * ls).exp();
                for (r, amp) in beam_splitter_number_state(n, j, t).into_iter().enumerate() {
                    if r >= dim || amp == 0.0 {
                        continue;
                    }
                    let l = n + j - r;
                    by_loss[l].push((r * stride_return + n * stride_idler, Complex64::from(cn * amp)));
                }
            }
            for v in by_loss.into_iter().filter(|v| !v.is_empty()) {
                kept += pj * v.iter().map(|(_, z)| z.norm_sqr()).sum::<f64>();
                members.push((pj, v));
            }
        }
        Ok(Self {
            dims,
            members,
            deficit: (1.0 - kept).max(0.0),
        })
    }

    /// `(Tr(Mρ), Tr(M²ρ))` for a Hermitian sparse operator.
    pub fn expect(&self, op: &SparseOperator) -> Result<(f64, f64)> {
        if op.dims != self.dims {
            return Err(QiError::DimensionMismatch {
                expected: self.total_dim(),
                actual: op.columns.len(),
            });
        }
        let mut scratch = vec![Complex64::from(0.0); op.columns.len()];
        let mut touched = Vec::new();
        let (mut first, mut second) = (0.0, 0.0);
        for (w, v) in &self.members {
            for &(c, val) in v {
                for &(r, m) in &op.columns[c] {
                    if scratch[r] == Complex64::from(0.0) {
                        touched.push(r);
                    }
                    scratch[r] += m * val;
                }
            }
            let mean: Complex64 = v.iter().map(|&(c, val)| val.conj() * scratch[c]).sum();
            let sq: f64 = touched.iter().map(|&r| scratch[r].norm_sqr()).sum();
            first += w * mean.re;
            second += w * sq;
            for &r in &touched {
                scratch[r] = Complex64::from(0.0);
            }
            touched.clear();
        }
        Ok((first, second))
    }

    /// Mean and variance of a quadratic operator.
    pub fn moments(&self, op: &QuadraticOperator) -> Result<MomentPair> {
        let sparse = SparseOperator::from_quadratic(op, &self.dims)?;
        let (m1, m2) = self.expect(&sparse)?;
        MomentPair::new(m1, m2 - m1 * m1, m2.abs().max(1.0) * 1e6)
    }
}

fn flat_index(occ: &[usize], dims: &[usize]) -> usize {
    occ.iter().zip(dims).fold(0, |acc, (&o, &d)| acc * d + o)
}

/// Operator on a tensor product of truncated modes, stored by column.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dims: Vec<usize>,
    columns: Vec<Vec<(usize, Complex64)>>,
}

impl SparseOperator {
    /// Matrix of `c + Σ F_uv ξ_u ξ_v` built from truncated ladder matrices.
    pub fn from_quadratic(op: &QuadraticOperator, dims: &[usize]) -> Result<Self> {
        let m = op.num_modes();
        if dims.len() != m {
            return Err(QiError::DimensionMismatch {
                expected: m,
                actual: dims.len(),
            });
        }
        let lowers: Vec<FockMatrix> = dims.iter().map(|&d| FockMatrix::annihilation(d)).collect();
        let raises: Vec<FockMatrix> = dims.iter().map(|&d| FockMatrix::creation(d)).collect();
        let strides: Vec<usize> = (0..m).map(|k| dims[k + 1..].iter().product()).collect();
        let total: usize = dims.iter().product();

        // single ladder action on a basis index: at most one output
        let act = |ladder: Ladder, idx: usize| -> Option<(usize, f64)> {
            let mode = ladder.mode();
            let occ = (idx / strides[mode]) % dims[mode];
            let mat = match ladder {
                Ladder::Lower(_) => &lowers[mode],
                Ladder::Raise(_) => &raises[mode],
            };
            let target = match ladder {
                Ladder::Lower(_) => occ.checked_sub(1)?,
                Ladder::Raise(_) => occ + 1,
            };
            if target >= dims[mode] {
                return None;
            }
            let amp = mat.get(target, occ).re;
            Some((idx - occ * strides[mode] + target * strides[mode], amp))
        };

        let terms: Vec<(Ladder, Ladder, Complex64)> = (0..2 * m)
            .flat_map(|u| (0..2 * m).map(move |v| (u, v)))
            .filter_map(|(u, v)| {
                let w = op.coeff()[(u, v)];
                (w != Complex64::from(0.0))
                    .then(|| (Ladder::from_index(u, m), Ladder::from_index(v, m), w))
            })
            .collect();

        let mut columns = Vec::with_capacity(total);
        for c in 0..total {
            let mut col: Vec<(usize, Complex64)> = Vec::new();
            if op.constant() != 0.0 {
                col.push((c, Complex64::from(op.constant())));
            }
            for &(u, v, w) in &terms {
                if let Some((mid, av)) = act(v, c) {
                    if let Some((row, au)) = act(u, mid) {
                        match col.iter_mut().find(|(r, _)| *r == row) {
                            Some(entry) => entry.1 += w * au * av,
                            None => col.push((row, w * au * av)),
                        }
                    }
                }
            }
            columns.push(col);
        }
        Ok(Self {
            dims: dims.to_vec(),
            columns,
        })
    }
}

/// Moments of `op` on the QI state via the number basis.
///
/// Restricted to `N_S <= 0.5`, `N_B <= 1`, `dim <= 30`. A third operator mode
/// is treated as a vacuum port.
pub fn fock_oracle_moments(
    op: &QuadraticOperator,
    scenario: &QiScenario,
    hypothesis: Hypothesis,
    dim_per_mode: usize,
) -> Result<MomentPair> {
    if scenario.n_s > MAX_N_S || scenario.n_b > MAX_N_B || dim_per_mode > MAX_DIM {
        return Err(domain(format!(
            "oracle limited to n_s <= {MAX_N_S}, n_b <= {MAX_N_B}, dim <= {MAX_DIM}"
        )));
    }
    scenario.validate()?;
    let extra = match op.num_modes() {
        2 => 0,
        3 => 1,
        m => return Err(domain(format!("oracle supports 2 or 3 modes, got {m}"))),
    };
    let state = FockEnsemble::qi_state(
        scenario.n_s,
        scenario.n_b,
        scenario.kappa,
        hypothesis,
        dim_per_mode,
        extra,
    )?;
    if state.deficit() > ORACLE_DEFICIT_LIMIT {
        return Err(QiError::Truncation {
            deficit: state.deficit(),
            limit: ORACLE_DEFICIT_LIMIT,
            required_dim: dim_per_mode * 2,
        });
    }
    state.moments(op)
}
