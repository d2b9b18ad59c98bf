//! Sign-matrix construction from quadric difference sets over F₂^{2s}.
//!
//! The hyperbolic quadratic form Q and the symplectic form B on F₂^{2s}
//! split the space into the two quadrics {Q=1} (k points) and {Q=0}
//! (l points). Restricting the real character table Γ(x,y) = (−1)^{B(x,y)}
//! to rows indexed by {Q=1} and columns indexed by {Q=0} yields a k×l
//! ±1 matrix of rank m = (2^{2s}−1)/3 whose rows and columns both form
//! equiangular tight frames for their span.

use crate::linalg::Mat;
use crate::textfmt::ParseError;
use thiserror::Error;

/// Largest `s` accepted by the constructors unless a caller raises the
/// limit explicitly (2^{2s} index vectors are enumerated).
pub const DEFAULT_MAX_S: u32 = 7;

#[derive(Debug, Error)]
pub enum Gf2Error {
    #[error("binary vector length {len} is odd; forms are defined on F_2^(2s)")]
    OddLength { len: usize },
    #[error("binary vector lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("s = {s} is below the smallest admissible value 2")]
    STooSmall { s: u32 },
    #[error("s = {s} exceeds the configured limit {max}")]
    STooLarge { s: u32, max: u32 },
}

/// Element of F₂^{2s}, stored as a packed machine word with coordinate
/// x₁ in the most significant position. Lengths up to 64 are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinVec {
    bits: u64,
    len: usize,
}

impl BinVec {
    /// Vector whose coordinates spell out the binary digits of `index`,
    /// x₁ most significant. Enumerating `index` over 0..2^len gives the
    /// canonical order used throughout.
    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len >= 1 && len <= 64, "length must be in 1..=64");
        assert!(len == 64 || index < (1u64 << len), "index out of range");
        BinVec { bits: index, len }
    }

    pub fn from_coords(coords: &[u8]) -> Self {
        assert!(!coords.is_empty() && coords.len() <= 64);
        let mut bits = 0u64;
        for &c in coords {
            bits = (bits << 1) | u64::from(c & 1);
        }
        BinVec { bits, len: coords.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self) -> u64 {
        self.bits
    }

    /// Coordinate x_{j+1} for zero-based `j`.
    pub fn coord(&self, j: usize) -> u8 {
        debug_assert!(j < self.len);
        ((self.bits >> (self.len - 1 - j)) & 1) as u8
    }
}

/// Hyperbolic quadratic form Q(x) = Σ_r x_{2r−1}·x_{2r} over F₂.
pub fn quadratic_form(x: &BinVec) -> Result<u8, Gf2Error> {
    if x.len() % 2 != 0 {
        return Err(Gf2Error::OddLength { len: x.len() });
    }
    let mut acc = 0u8;
    for r in 0..x.len() / 2 {
        acc ^= x.coord(2 * r) & x.coord(2 * r + 1);
    }
    Ok(acc)
}

/// Symplectic form B(x,y) = Σ_r (x_{2r−1}y_{2r} + x_{2r}y_{2r−1}) over F₂.
pub fn symplectic_form(x: &BinVec, y: &BinVec) -> Result<u8, Gf2Error> {
    if x.len() != y.len() {
        return Err(Gf2Error::LengthMismatch { a: x.len(), b: y.len() });
    }
    if x.len() % 2 != 0 {
        return Err(Gf2Error::OddLength { len: x.len() });
    }
    let mut acc = 0u8;
    for r in 0..x.len() / 2 {
        acc ^= (x.coord(2 * r) & y.coord(2 * r + 1)) ^ (x.coord(2 * r + 1) & y.coord(2 * r));
    }
    Ok(acc)
}

/// Frame parameters (m, k, l) of the construction at a given `s`:
/// k = 2^{s−1}(2^s−1), l = 2^{s−1}(2^s+1), m = (2^{2s}−1)/3.
pub fn construction_params(s: u32) -> Result<(u32, u32, u32), Gf2Error> {
    if s < 2 {
        return Err(Gf2Error::STooSmall { s });
    }
    if s > 15 {
        // 2^{2s} no longer fits the u32 parameter space.
        return Err(Gf2Error::STooLarge { s, max: 15 });
    }
    let p = 1u32 << s;
    let k = (p / 2) * (p - 1);
    let l = (p / 2) * (p + 1);
    let m = (p * p - 1) / 3;
    Ok((m, k, l))
}

/// The two quadrics of F₂^{2s} in canonical order: `rows` = {x : Q(x)=1},
/// `cols` = {x : Q(x)=0}.
pub fn quadric_index_sets(s: u32) -> Result<(Vec<BinVec>, Vec<BinVec>), Gf2Error> {
    quadric_index_sets_with_limit(s, DEFAULT_MAX_S)
}

pub fn quadric_index_sets_with_limit(
    s: u32,
    max_s: u32,
) -> Result<(Vec<BinVec>, Vec<BinVec>), Gf2Error> {
    if s < 2 {
        return Err(Gf2Error::STooSmall { s });
    }
    if s > max_s || s > 15 {
        return Err(Gf2Error::STooLarge { s, max: max_s.min(15) });
    }
    let len = 2 * s as usize;
    let total = 1u64 << len;
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for idx in 0..total {
        let v = BinVec::from_index(idx, len);
        if quadratic_form(&v).expect("even length by construction") == 1 {
            rows.push(v);
        } else {
            cols.push(v);
        }
    }
    Ok((rows, cols))
}

/// k×l matrix over {−1,+1} with rows/columns indexed by the two quadrics.
#[derive(Debug, Clone)]
pub struct SignMatrix {
    entries: Mat,
    row_index: Option<Vec<BinVec>>,
    col_index: Option<Vec<BinVec>>,
}

impl SignMatrix {
    /// Wrap an arbitrary matrix (e.g. parsed from a file). Entries are
    /// not validated here; `verify_properties` reports on them.
    pub fn from_mat(entries: Mat) -> Self {
        SignMatrix { entries, row_index: None, col_index: None }
    }

    pub fn entries(&self) -> &Mat {
        &self.entries
    }

    pub fn k(&self) -> usize {
        self.entries.rows()
    }

    pub fn l(&self) -> usize {
        self.entries.cols()
    }

    pub fn row_index(&self) -> Option<&[BinVec]> {
        self.row_index.as_deref()
    }

    pub fn col_index(&self) -> Option<&[BinVec]> {
        self.col_index.as_deref()
    }

    /// Text serialization: header "k l", then k rows of l entries.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.k(), self.l()));
        for i in 0..self.k() {
            let row: Vec<String> = self
                .entries
                .row(i)
                .iter()
                .map(|&v| {
                    if v == v.round() {
                        format!("{}", v as i64)
                    } else {
                        format!("{:.16e}", v)
                    }
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(ParseError::MissingHeader)?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| ParseError::bad_token(1, t)))
            .collect::<Result<_, _>>()?;
        if dims.len() != 2 || dims[0] == 0 || dims[1] == 0 {
            return Err(ParseError::BadHeader { header: header.to_string() });
        }
        let (k, l) = (dims[0], dims[1]);
        let mut entries = Mat::zeros(k, l);
        for i in 0..k {
            let line = lines.next().ok_or(ParseError::TooFewRows { expected: k, found: i })?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != l {
                return Err(ParseError::WrongRowLength { row: i + 1, expected: l, found: toks.len() });
            }
            for (j, t) in toks.iter().enumerate() {
                entries[(i, j)] = t.parse().map_err(|_| ParseError::bad_token(i + 2, t))?;
            }
        }
        Ok(SignMatrix::from_mat(entries))
    }
}

/// Character submatrix: entries[i][j] = (−1)^{B(rows[i], cols[j])}.
pub fn build_sign_matrix(s: u32) -> Result<SignMatrix, Gf2Error> {
    build_sign_matrix_with_limit(s, DEFAULT_MAX_S)
}

pub fn build_sign_matrix_with_limit(s: u32, max_s: u32) -> Result<SignMatrix, Gf2Error> {
    let (rows, cols) = quadric_index_sets_with_limit(s, max_s)?;
    let entries = Mat::from_fn(rows.len(), cols.len(), |i, j| {
        if symplectic_form(&rows[i], &cols[j]).expect("matched even lengths") == 0 {
            1.0
        } else {
            -1.0
        }
    });
    Ok(SignMatrix { entries, row_index: Some(rows), col_index: Some(cols) })
}

/// The classical 6×10 sign matrix with m = 5; the smallest matrix of
/// this kind and a handy golden fixture.
pub fn known_6x10() -> SignMatrix {
    const ROWS: [[i8; 10]; 6] = [
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
        [1, 1, -1, 1, -1, -1, 1, -1, -1, -1],
        [1, -1, 1, -1, 1, -1, -1, 1, -1, -1],
        [-1, 1, 1, -1, -1, 1, -1, -1, 1, -1],
        [-1, -1, -1, 1, 1, 1, -1, -1, -1, 1],
        [-1, -1, -1, -1, -1, -1, 1, 1, 1, 1],
    ];
    let entries = Mat::from_fn(6, 10, |i, j| f64::from(ROWS[i][j]));
    SignMatrix::from_mat(entries)
}

/// Exhaustive check whether two ±1 matrices agree up to row/column
/// permutations and row/column sign flips. Intended as a diagnostic for
/// the smallest construction only; refuses anything larger than 6×12
/// (the search enumerates all k!·2^k row operations).
pub fn signed_permutation_equivalent(a: &SignMatrix, b: &SignMatrix) -> Result<bool, Gf2Error> {
    let (k, l) = (a.k(), a.l());
    if (k, l) != (b.k(), b.l()) {
        return Ok(false);
    }
    assert!(k <= 6 && l <= 12, "equivalence search is limited to 6x12 matrices");
    let pm1 = |m: &Mat| m.data().iter().all(|&v| v == 1.0 || v == -1.0);
    if !pm1(a.entries()) || !pm1(b.entries()) {
        return Ok(false);
    }

    // A column becomes a bitmask of its negative entries, normalized so
    // the first entry is +1; column order and sign are then absorbed by
    // comparing sorted multisets.
    let canon_cols = |m: &Mat, perm: &[usize], signs: u32| -> Vec<u64> {
        let mut cols: Vec<u64> = (0..m.cols())
            .map(|j| {
                let mut bits = 0u64;
                for (pos, &src) in perm.iter().enumerate() {
                    let mut v = m[(src, j)];
                    if signs >> pos & 1 == 1 {
                        v = -v;
                    }
                    if v < 0.0 {
                        bits |= 1 << pos;
                    }
                }
                if bits & 1 == 1 {
                    bits ^= (1u64 << m.rows()) - 1;
                }
                bits
            })
            .collect();
        cols.sort_unstable();
        cols
    };

    let ident: Vec<usize> = (0..k).collect();
    let target = canon_cols(b.entries(), &ident, 0);

    let mut perm = ident;
    loop {
        for signs in 0..(1u32 << k) {
            if canon_cols(a.entries(), &perm, signs) == target {
                return Ok(true);
            }
        }
        if !next_permutation(&mut perm) {
            return Ok(false);
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
