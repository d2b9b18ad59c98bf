//! Explicit feasible points for the projection-constant objective.
//!
//! A witness is a pair (t, U) with ‖t‖₂ = 1 and U·Uᵀ = I_m, evaluated as
//! Σ_{i,j} t_i t_j |UᵀU|_{ij}. From a mutually unbiased pair of
//! equiangular tight frames the blockwise construction with the optimal
//! mixing angle θ reaches exactly the lower bound γ_{m,k,l}, and it
//! satisfies two spectral fixed-point identities:
//!
//!   SP1:  |UᵀU|·t = γ·t
//!   SP2:  T·sgn(UᵀU)·T·Uᵀ = (γ/m)·Uᵀ,   T = diag(t)
//!
//! plus the diagonal relation (Uᵀ·D·U)_{ii} = γ·t_i² with D the leading
//! eigenvalue block of T·sgn(UᵀU)·T. Residuals of all three are the
//! stationarity certificate used by the optimizer.
//!
//! Whether this point is the unique maximizer is not asserted anywhere;
//! only residuals are reported.

use crate::bounds::{self, BoundsError};
use crate::frame::{self, Frame};
use crate::linalg::{self, norm2, LinalgError, Mat};
use crate::textfmt::ParseError;
use serde::Serialize;
use thiserror::Error;

/// Feasibility tolerance on ‖t‖₂ − 1 and ‖UUᵀ − I‖_F.
pub const FEAS_TOL: f64 = 1e-10;

/// Gram entries closer to zero than this make sgn ambiguous.
pub const SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("frames do not form a mutually unbiased pair: {0}")]
    NotUnbiasedPair(String),
    #[error("infeasible point: |‖t‖−1| = {t_norm_dev:.3e}, ‖UUᵀ−I‖_F = {u_orth_dev:.3e}")]
    NotFeasible { t_norm_dev: f64, u_orth_dev: f64 },
    #[error("Gram entry of magnitude {min_abs:.3e} makes sgn ambiguous")]
    AmbiguousSign { min_abs: f64 },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A feasible point (t, U) together with its objective value and, when
/// built from a frame pair, the mixing angle.
#[derive(Debug, Clone)]
pub struct Witness {
    pub t: Vec<f64>,
    pub u: Mat,
    pub objective: f64,
    pub theta: Option<f64>,
}

impl Witness {
    pub fn m(&self) -> usize {
        self.u.rows()
    }

    pub fn n(&self) -> usize {
        self.u.cols()
    }

    /// Re-evaluate Σ t_i t_j |UᵀU|_{ij} from scratch.
    pub fn recompute_objective(&self) -> f64 {
        objective_unchecked(&self.t, &self.u)
    }

    /// Text serialization: "m n", theta (or nan), t, then the rows of U.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.m(), self.n());
        out.push_str(&format!("{:.16e}\n", self.theta.unwrap_or(f64::NAN)));
        let t_line: Vec<String> = self.t.iter().map(|v| format!("{:.16e}", v)).collect();
        out.push_str(&t_line.join(" "));
        out.push('\n');
        for i in 0..self.m() {
            let row: Vec<String> = self.u.row(i).iter().map(|v| format!("{:.16e}", v)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, WitnessParseError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(ParseError::MissingHeader)?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| ParseError::bad_token(1, t)))
            .collect::<Result<Vec<usize>, ParseError>>()?;
        if dims.len() != 2 || dims[0] == 0 || dims[1] == 0 {
            return Err(ParseError::BadHeader { header: header.to_string() }.into());
        }
        let (m, n) = (dims[0], dims[1]);

        let theta_line = lines.next().ok_or(ParseError::TooFewRows { expected: m + 2, found: 1 })?;
        let theta_raw: f64 = theta_line
            .trim()
            .parse()
            .map_err(|_| ParseError::bad_token(2, theta_line.trim()))?;
        let theta = if theta_raw.is_nan() { None } else { Some(theta_raw) };

        let t_line = lines.next().ok_or(ParseError::TooFewRows { expected: m + 2, found: 2 })?;
        let t: Vec<f64> = t_line
            .split_whitespace()
            .map(|tok| tok.parse().map_err(|_| ParseError::bad_token(3, tok)))
            .collect::<Result<Vec<f64>, ParseError>>()?;
        if t.len() != n {
            return Err(ParseError::WrongRowLength { row: 2, expected: n, found: t.len() }.into());
        }

        let mut u = Mat::zeros(m, n);
        for i in 0..m {
            let line =
                lines.next().ok_or(ParseError::TooFewRows { expected: m + 2, found: i + 2 })?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != n {
                return Err(ParseError::WrongRowLength {
                    row: i + 3,
                    expected: n,
                    found: toks.len(),
                }
                .into());
            }
            for (j, tok) in toks.iter().enumerate() {
                u[(i, j)] = tok.parse().map_err(|_| ParseError::bad_token(i + 4, tok))?;
            }
        }

        let objective = objective(&t, &u, FEAS_TOL).map_err(WitnessParseError::Witness)?;
        Ok(Witness { t, u, objective, theta })
    }
}

#[derive(Debug, Error)]
pub enum WitnessParseError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Witness(WitnessError),
}

/// Residuals of the stationarity identities at a candidate maximizer.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralReport {
    pub sp1_residual: f64,
    pub sp2_residual: f64,
    pub remark9_residual: f64,
    pub gamma_claimed: f64,
    pub leading_eigenvalue: f64,
    /// Set when some Gram entry was within SIGN_TOL of zero and the
    /// sgn(x ≥ 0) = +1 fallback was used.
    pub ambiguous_sign: bool,
}

/// ‖UUᵀ − I‖_F.
pub fn orthonormality_deviation(u: &Mat) -> f64 {
    let mut uut = u.gram_rows();
    for i in 0..u.rows() {
        uut[(i, i)] -= 1.0;
    }
    uut.frobenius_norm()
}

fn feasibility(t: &[f64], u: &Mat) -> (f64, f64) {
    ((norm2(t) - 1.0).abs(), orthonormality_deviation(u))
}

fn objective_unchecked(t: &[f64], u: &Mat) -> f64 {
    let gram = u.gram_cols();
    let n = t.len();
    let mut acc = 0.0;
    for i in 0..n {
        let gi = gram.row(i);
        let mut row_sum = 0.0;
        for j in 0..n {
            row_sum += gi[j].abs() * t[j];
        }
        acc += t[i] * row_sum;
    }
    acc
}

/// The objective Σ_{i,j} t_i t_j |UᵀU|_{ij}; errors unless (t, U) is
/// feasible within `tol`.
pub fn objective(t: &[f64], u: &Mat, tol: f64) -> Result<f64, WitnessError> {
    if t.len() != u.cols() {
        return Err(WitnessError::NotFeasible { t_norm_dev: f64::INFINITY, u_orth_dev: 0.0 });
    }
    let (t_dev, u_dev) = feasibility(t, u);
    if t_dev > tol || u_dev > tol {
        return Err(WitnessError::NotFeasible { t_norm_dev: t_dev, u_orth_dev: u_dev });
    }
    Ok(objective_unchecked(t, u))
}

/// Assemble the blockwise witness from a mutually unbiased pair at the
/// optimal mixing angle. The objective of the result equals γ_{m,k,l}.
pub fn build_witness(v: &Frame, w: &Frame, tol: f64) -> Result<Witness, WitnessError> {
    let m = v.dim();
    let (k, l) = (v.count(), w.count());
    if w.dim() != m {
        return Err(WitnessError::NotUnbiasedPair(format!(
            "dimension mismatch: {m} vs {}",
            w.dim()
        )));
    }
    for (name, f) in [("first", v), ("second", w)] {
        let t = frame::check_tight(f, tol);
        if !t.is_tight {
            return Err(WitnessError::NotUnbiasedPair(format!(
                "{name} frame is not tight (residual {:.3e})",
                t.residual
            )));
        }
        let e = frame::check_equiangular(f, tol);
        if !e.is_equiangular {
            return Err(WitnessError::NotUnbiasedPair(format!(
                "{name} frame is not equiangular (deviation {:.3e})",
                e.max_deviation
            )));
        }
    }
    let unb = frame::check_mutually_unbiased(v, w, tol)
        .map_err(|e| WitnessError::NotUnbiasedPair(e.to_string()))?;
    if !unb.is_unbiased {
        return Err(WitnessError::NotUnbiasedPair(format!(
            "cross coherence {:.6} deviates by {:.3e}",
            unb.c, unb.max_deviation
        )));
    }

    let cos2t = bounds::cos_two_theta(m as u32, k as u32, l as u32)?;
    let theta = ((1.0 + cos2t) / 2.0).sqrt().acos();
    let (ct, st) = (theta.cos(), theta.sin());

    let mut t = Vec::with_capacity(k + l);
    t.extend(std::iter::repeat(ct / (k as f64).sqrt()).take(k));
    t.extend(std::iter::repeat(st / (l as f64).sqrt()).take(l));

    let cv = ct * (m as f64 / k as f64).sqrt();
    let cw = st * (m as f64 / l as f64).sqrt();
    let u = Mat::from_fn(m, k + l, |i, j| {
        if j < k {
            cv * v.vectors()[(i, j)]
        } else {
            cw * w.vectors()[(i, j - k)]
        }
    });

    let objective = objective(&t, &u, FEAS_TOL)?;
    Ok(Witness { t, u, objective, theta: Some(theta) })
}

/// ‖ |UᵀU|·t − γ·t ‖₂.
pub fn check_sp1(w: &Witness, gamma: f64) -> f64 {
    let abs_gram = w.u.gram_cols().abs();
    let gt = abs_gram.matvec(&w.t);
    let diff: Vec<f64> = gt.iter().zip(&w.t).map(|(a, b)| a - gamma * b).collect();
    norm2(&diff)
}

/// sgn with the convention sgn(x ≥ 0) = +1. Entries of magnitude below
/// `sign_tol` are ambiguous and rejected; pass 0.0 to force the
/// convention on exact zeros instead.
fn sign_matrix(g: &Mat, sign_tol: f64) -> Result<Mat, WitnessError> {
    let mut min_abs = f64::INFINITY;
    for &v in g.data() {
        min_abs = min_abs.min(v.abs());
    }
    if min_abs < sign_tol {
        return Err(WitnessError::AmbiguousSign { min_abs });
    }
    Ok(g.map(|x| if x >= 0.0 { 1.0 } else { -1.0 }))
}

/// ‖ T·sgn(UᵀU)·T·Uᵀ − (γ/m)·Uᵀ ‖_F.
pub fn check_sp2(w: &Witness, gamma: f64, sign_tol: f64) -> Result<f64, WitnessError> {
    let gram = w.u.gram_cols();
    let s = sign_matrix(&gram, sign_tol)?;
    let n = w.n();
    let m = w.m() as f64;
    // M = T·S·T
    let mm = Mat::from_fn(n, n, |i, j| w.t[i] * s[(i, j)] * w.t[j]);
    let ut = w.u.transpose();
    let lhs = mm.matmul(&ut);
    Ok(lhs.sub(&ut.scale(gamma / m)).frobenius_norm())
}

/// max_i |(Uᵀ·D·U)_{ii} − λ·t_i²| with D the m leading eigenvalues of
/// T·sgn(UᵀU)·T.
pub fn check_remark9(
    t: &[f64],
    u: &Mat,
    lambda_est: f64,
    sign_tol: f64,
) -> Result<f64, WitnessError> {
    let gram = u.gram_cols();
    let s = sign_matrix(&gram, sign_tol)?;
    let n = u.cols();
    let m = u.rows();
    let mm = Mat::from_fn(n, n, |i, j| t[i] * s[(i, j)] * t[j]);
    let eig = linalg::sym_eig(&mm, linalg::DEFAULT_TOL)?;
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let mut diag = 0.0;
        for a in 0..m {
            diag += eig.values[a] * u[(a, i)] * u[(a, i)];
        }
        residual = residual.max((diag - lambda_est * t[i] * t[i]).abs());
    }
    Ok(residual)
}

/// Equality conditions for the upper bound δ_{m,n}: constant diagonal
/// m/n and constant off-diagonal magnitude √((n−m)m/(n−1))/n in UᵀU.
/// When they hold, the uniform-t objective equals δ_{m,n}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AttainmentCheck {
    pub passes: bool,
    pub diag_residual: f64,
    pub offdiag_residual: f64,
    pub uniform_objective: f64,
    pub delta: f64,
}

pub fn check_delta_attainment(u: &Mat, tol: f64) -> Result<AttainmentCheck, WitnessError> {
    let (m, n) = (u.rows(), u.cols());
    let u_dev = orthonormality_deviation(u);
    if u_dev > tol.max(FEAS_TOL) {
        return Err(WitnessError::NotFeasible { t_norm_dev: 0.0, u_orth_dev: u_dev });
    }
    let gram = u.gram_cols();
    let diag_target = m as f64 / n as f64;
    let off_target = ((n - m) as f64 * m as f64 / (n as f64 - 1.0)).sqrt() / n as f64;
    let mut diag_residual: f64 = 0.0;
    let mut offdiag_residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                diag_residual = diag_residual.max((gram[(i, i)] - diag_target).abs());
            } else {
                offdiag_residual = offdiag_residual.max((gram[(i, j)].abs() - off_target).abs());
            }
        }
    }
    let t = vec![1.0 / (n as f64).sqrt(); n];
    let uniform_objective = objective_unchecked(&t, u);
    let delta = bounds::delta(m as u32, n as u32)?;
    Ok(AttainmentCheck {
        passes: diag_residual <= tol && offdiag_residual <= tol,
        diag_residual,
        offdiag_residual,
        uniform_objective,
        delta,
    })
}

/// Run all three stationarity checks on a witness against a claimed
/// value. Ambiguous Gram signs fall back to the sgn(x ≥ 0) = +1
/// convention and are flagged rather than fatal.
pub fn spectral_report(w: &Witness, gamma_claimed: f64) -> SpectralReport {
    let sp1_residual = check_sp1(w, gamma_claimed);
    let mut ambiguous = false;

    let sp2_residual = match check_sp2(w, gamma_claimed, SIGN_TOL) {
        Ok(r) => r,
        Err(WitnessError::AmbiguousSign { .. }) => {
            ambiguous = true;
            check_sp2(w, gamma_claimed, 0.0).unwrap_or(f64::NAN)
        }
        Err(_) => f64::NAN,
    };
    let remark9_residual = match check_remark9(&w.t, &w.u, gamma_claimed, SIGN_TOL) {
        Ok(r) => r,
        Err(WitnessError::AmbiguousSign { .. }) => {
            ambiguous = true;
            check_remark9(&w.t, &w.u, gamma_claimed, 0.0).unwrap_or(f64::NAN)
        }
        Err(_) => f64::NAN,
    };
    let leading_eigenvalue = linalg::perron_vector(&w.u.gram_cols().abs(), linalg::DEFAULT_TOL)
        .map(|(v, _)| v)
        .unwrap_or(f64::NAN);

    SpectralReport {
        sp1_residual,
        sp2_residual,
        remark9_residual,
        gamma_claimed,
        leading_eigenvalue,
        ambiguous_sign: ambiguous,
    }
}
