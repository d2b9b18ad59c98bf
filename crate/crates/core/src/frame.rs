//! Unit-norm frames and their certificates: tightness, equiangularity,
//! mutual unbiasedness, the five sign-matrix properties, and recovery of
//! the mutually unbiased frame pair encoded by a valid sign matrix.
//!
//! A note on scope: no real mutually unbiased pair with k = l > m is
//! known (unlike the complex setting), and none is produced here; the
//! verifiers simply report on whatever they are handed.

use crate::bounds;
use crate::gf2::SignMatrix;
use crate::linalg::{self, norm2, LinalgError, Mat};
use crate::textfmt::ParseError;
use serde::Serialize;
use thiserror::Error;

/// Default absolute tolerance on ±1-scaled data for every check in this
/// module.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("column {col} has norm {norm} (not a unit vector)")]
    NotUnitNorm { col: usize, norm: f64 },
    #[error("frame needs n >= m >= 1, got m = {m}, n = {n}")]
    BadShape { m: usize, n: usize },
    #[error("sign matrix fails properties: {0}")]
    PropertyFailure(String),
    #[error("singular values deviate from sqrt(a) by {max_dev:.3e} (relative)")]
    NotUniformSpectrum { max_dev: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A system of n unit vectors in ℝ^m, stored as the m×n matrix whose
/// columns are the vectors.
#[derive(Debug, Clone)]
pub struct Frame {
    vectors: Mat,
}

impl Frame {
    /// Validates the shape (n ≥ m) and the unit norm of every column
    /// (within `tol`).
    pub fn from_columns(vectors: Mat, tol: f64) -> Result<Self, FrameError> {
        let (m, n) = (vectors.rows(), vectors.cols());
        if m < 1 || n < m {
            return Err(FrameError::BadShape { m, n });
        }
        for j in 0..n {
            let norm = norm2(&vectors.col(j));
            if (norm - 1.0).abs() > tol {
                return Err(FrameError::NotUnitNorm { col: j, norm });
            }
        }
        Ok(Frame { vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }

    pub fn count(&self) -> usize {
        self.vectors.cols()
    }

    pub fn vectors(&self) -> &Mat {
        &self.vectors
    }

    /// Text serialization: header "m n", then m rows of n entries with
    /// 17 significant digits (round-trips f64 exactly).
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dim(), self.count());
        for i in 0..self.dim() {
            let row: Vec<String> =
                self.vectors.row(i).iter().map(|v| format!("{:.16e}", v)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, tol: f64) -> Result<Self, FrameParseError> {
        let mat = parse_matrix_text(text)?;
        Frame::from_columns(mat, tol).map_err(FrameParseError::Frame)
    }
}

#[derive(Debug, Error)]
pub enum FrameParseError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Frame(FrameError),
}

/// Parse the "rows cols" + data-lines format shared by frame and witness
/// files.
pub(crate) fn parse_matrix_text(text: &str) -> Result<Mat, ParseError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(ParseError::MissingHeader)?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| ParseError::bad_token(1, t)))
        .collect::<Result<_, _>>()?;
    if dims.len() != 2 || dims[0] == 0 || dims[1] == 0 {
        return Err(ParseError::BadHeader { header: header.to_string() });
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut mat = Mat::zeros(rows, cols);
    for i in 0..rows {
        let line = lines.next().ok_or(ParseError::TooFewRows { expected: rows, found: i })?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != cols {
            return Err(ParseError::WrongRowLength { row: i + 1, expected: cols, found: toks.len() });
        }
        for (j, t) in toks.iter().enumerate() {
            mat[(i, j)] = t.parse().map_err(|_| ParseError::bad_token(i + 2, t))?;
        }
    }
    Ok(mat)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TightnessCheck {
    pub is_tight: bool,
    /// ‖VVᵀ − (n/m)·I‖_F
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquiangularityCheck {
    pub is_equiangular: bool,
    /// Mean off-diagonal |Gram| entry.
    pub c: f64,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct UnbiasednessCheck {
    pub is_unbiased: bool,
    /// Mean cross |Gram| entry; forced to 1/√m for genuine pairs.
    pub c: f64,
    pub max_deviation: f64,
}

/// Tightness + equiangularity of one frame, with the coherence value an
/// equiangular tight frame of these dimensions is forced to have.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrameReport {
    pub m: usize,
    pub n: usize,
    pub tight: TightnessCheck,
    pub equiangular: EquiangularityCheck,
    pub coherence_expected: f64,
    pub tol: f64,
}

pub fn check_tight(frame: &Frame, tol: f64) -> TightnessCheck {
    let m = frame.dim();
    let n = frame.count();
    let mut gram = frame.vectors.gram_rows();
    let target = n as f64 / m as f64;
    for i in 0..m {
        gram[(i, i)] -= target;
    }
    let residual = gram.frobenius_norm();
    TightnessCheck { is_tight: residual <= tol, residual }
}

pub fn check_equiangular(frame: &Frame, tol: f64) -> EquiangularityCheck {
    let n = frame.count();
    let gram = frame.vectors.gram_cols();
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += gram[(i, j)].abs();
                count += 1;
            }
        }
    }
    if count == 0 {
        return EquiangularityCheck { is_equiangular: true, c: 0.0, max_deviation: 0.0 };
    }
    let c = sum / count as f64;
    let mut max_deviation: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_deviation = max_deviation.max((gram[(i, j)].abs() - c).abs());
            }
        }
    }
    EquiangularityCheck { is_equiangular: max_deviation <= tol, c, max_deviation }
}

pub fn frame_report(frame: &Frame, tol: f64) -> FrameReport {
    let (m, n) = (frame.dim(), frame.count());
    let coherence_expected =
        bounds::phi(m as u32, n as u32).unwrap_or(f64::NAN);
    FrameReport {
        m,
        n,
        tight: check_tight(frame, tol),
        equiangular: check_equiangular(frame, tol),
        coherence_expected,
        tol,
    }
}

/// Mutual unbiasedness of two frames for the same space: all cross
/// inner products share one absolute value, which must equal 1/√m.
pub fn check_mutually_unbiased(
    f1: &Frame,
    f2: &Frame,
    tol: f64,
) -> Result<UnbiasednessCheck, FrameError> {
    if f1.dim() != f2.dim() {
        return Err(FrameError::DimMismatch(f1.dim(), f2.dim()));
    }
    let m = f1.dim();
    let cross = f1.vectors.transpose().matmul(&f2.vectors);
    let total = (f1.count() * f2.count()) as f64;
    let c = cross.data().iter().map(|v| v.abs()).sum::<f64>() / total;
    let max_deviation = cross
        .data()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max((v.abs() - c).abs()));
    // The common value is forced: verify it against 1/√m as well.
    let forced = 1.0 / (m as f64).sqrt();
    let is_unbiased = max_deviation <= tol && (c - forced).abs() <= tol;
    Ok(UnbiasednessCheck { is_unbiased, c, max_deviation })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PropertyCheck {
    pub pass: bool,
    pub residual: f64,
}

/// Outcome of the five-property verification of a candidate sign matrix,
/// plus the quantities downstream consumers need: the fitted scale `a`,
/// the numerical rank, the off-diagonal Gram levels, and the
/// integrality triple evaluated at m = rank.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub k: usize,
    pub l: usize,
    /// All entries exactly ±1.
    pub p1: PropertyCheck,
    /// X·Xᵀ·X = a·X for the least-squares fitted a.
    pub p2: PropertyCheck,
    /// Off-diagonal |X·Xᵀ| is constant.
    pub p3: PropertyCheck,
    /// Off-diagonal |Xᵀ·X| is constant.
    pub p4: PropertyCheck,
    /// Numerical rank equals k·l/a.
    pub p5: PropertyCheck,
    pub a_value: f64,
    pub rank: usize,
    /// Mean off-diagonal |X·Xᵀ| entry.
    pub p3_mean: f64,
    /// Mean off-diagonal |Xᵀ·X| entry.
    pub p4_mean: f64,
    /// k·l/a, the dimension the matrix encodes if the properties hold.
    pub inferred_m: f64,
    pub integrality: Option<[bounds::IntegralityItem; 3]>,
    pub tol: f64,
    pub rank_tol: f64,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.p1.pass && self.p2.pass && self.p3.pass && self.p4.pass && self.p5.pass
    }

    pub fn failed_properties(&self) -> Vec<&'static str> {
        let checks = [
            ("P1", self.p1.pass),
            ("P2", self.p2.pass),
            ("P3", self.p3.pass),
            ("P4", self.p4.pass),
            ("P5", self.p5.pass),
        ];
        checks.iter().filter(|(_, ok)| !ok).map(|(name, _)| *name).collect()
    }
}

fn offdiag_levels(g: &Mat) -> (f64, f64) {
    let n = g.rows();
    if n < 2 {
        return (0.0, 0.0);
    }
    let count = (n * (n - 1)) as f64;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += g[(i, j)].abs();
            }
        }
    }
    let mean = sum / count;
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                dev = dev.max((g[(i, j)].abs() - mean).abs());
            }
        }
    }
    (mean, dev)
}

/// Check the five properties a k×l sign matrix must satisfy to encode a
/// mutually unbiased pair of equiangular tight frames. Report-style: it
/// never fails, it measures.
pub fn verify_properties(x: &SignMatrix, tol: f64) -> PropertyReport {
    let mat = x.entries();
    let (k, l) = (mat.rows(), mat.cols());

    // P1: exact sign entries.
    let p1_pass = mat.data().iter().all(|&v| v == 1.0 || v == -1.0);
    let p1_residual =
        mat.data().iter().fold(0.0_f64, |acc, v| acc.max((v.abs() - 1.0).abs()));

    // P2: least-squares fit of a in X·Xᵀ·X = a·X.
    let xxt = mat.gram_rows();
    let xxtx = xxt.matmul(mat);
    let norm_sq: f64 = mat.data().iter().map(|v| v * v).sum();
    let a_value = if norm_sq > 0.0 {
        mat.data().iter().zip(xxtx.data()).map(|(x, y)| x * y).sum::<f64>() / norm_sq
    } else {
        0.0
    };
    let p2_residual = xxtx.sub(&mat.scale(a_value)).frobenius_norm();
    let p2_pass = p2_residual <= tol * norm_sq.sqrt() * a_value.abs().max(1.0);

    // P3/P4: constant off-diagonal |Gram| levels (absolute deviation).
    let (p3_mean, p3_dev) = offdiag_levels(&xxt);
    let xtx = mat.gram_cols();
    let (p4_mean, p4_dev) = offdiag_levels(&xtx);

    // P5: the numerical rank must equal the inferred dimension k·l/a.
    let rank_tol = linalg::DEFAULT_RANK_TOL;
    let (rank, inferred_m, p5_residual) = match linalg::thin_svd(mat, rank_tol) {
        Ok(svd) => {
            let inferred = if a_value > 0.0 { (k * l) as f64 / a_value } else { f64::NAN };
            let residual = (inferred - svd.rank() as f64).abs();
            (svd.rank(), inferred, residual)
        }
        Err(_) => (0, f64::NAN, f64::INFINITY),
    };
    let p5_pass = p5_residual.is_finite() && p5_residual <= 1e-6;

    let integrality = if p5_pass && rank >= 1 && k >= 2 && l >= 2 && rank <= k.min(l) {
        bounds::integrality(rank as u32, k as u32, l as u32).ok()
    } else {
        None
    };

    PropertyReport {
        k,
        l,
        p1: PropertyCheck { pass: p1_pass, residual: p1_residual },
        p2: PropertyCheck { pass: p2_pass, residual: p2_residual },
        p3: PropertyCheck { pass: p3_dev <= tol, residual: p3_dev },
        p4: PropertyCheck { pass: p4_dev <= tol, residual: p4_dev },
        p5: PropertyCheck { pass: p5_pass, residual: p5_residual },
        a_value,
        rank,
        p3_mean,
        p4_mean,
        inferred_m,
        integrality,
        tol,
        rank_tol,
    }
}

/// Recover the mutually unbiased frame pair encoded by a valid sign
/// matrix: X = P·Σ·Qᵀ must have uniform spectrum Σ = √a·I_m, and then
/// V = √(k/m)·Pᵀ and W = √(l/m)·Qᵀ. The dimension m is never an input;
/// it is k·l/a, cross-checked against the numerical rank.
pub fn frames_from_sign_matrix(
    x: &SignMatrix,
    tol: f64,
) -> Result<(Frame, Frame), FrameError> {
    let report = verify_properties(x, tol);
    if !report.all_pass() {
        return Err(FrameError::PropertyFailure(report.failed_properties().join(", ")));
    }
    let m = report.rank;
    let (k, l) = (report.k, report.l);

    let svd = linalg::thin_svd(x.entries(), report.rank_tol)?;
    let sqrt_a = report.a_value.sqrt();
    let max_dev = svd
        .singulars
        .iter()
        .fold(0.0_f64, |acc, s| acc.max((s / sqrt_a - 1.0).abs()));
    if max_dev > tol.max(1e-12) {
        return Err(FrameError::NotUniformSpectrum { max_dev });
    }

    let cv = (k as f64 / m as f64).sqrt();
    let v = Mat::from_fn(m, k, |i, j| cv * svd.left[(j, i)]);
    let cw = (l as f64 / m as f64).sqrt();
    let w = Mat::from_fn(m, l, |i, j| cw * svd.right[(j, i)]);

    Ok((Frame::from_columns(v, tol)?, Frame::from_columns(w, tol)?))
}
