//! Closed-form bound values: the equiangular coherence φ_{m,n}, the
//! upper bound δ_{m,n}, the two-frame lower bound γ_{m,k,l} with its
//! optimal mixing angle, the closed form of γ along the construction
//! family, and the integrality obstructions.
//!
//! Quantities that reduce to ratios of integers (perfect-square
//! radicands) are evaluated through exact integer arithmetic so that
//! golden values like δ(2,3) = 4/3 come out as the correctly rounded
//! rational, not as an accumulation of square roots.

use crate::gf2;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("invalid arguments: {0}")]
    BadArgs(&'static str),
    #[error("gamma is undefined at m = 1 (zero denominator)")]
    DegenerateDenominator,
}

/// Integer square root, exact or `None`.
fn perfect_sqrt(x: u128) -> Option<u128> {
    if x == 0 {
        return Some(0);
    }
    let mut r = (x as f64).sqrt() as u128;
    while r > 0 && r * r > x {
        r = (r + x / r) / 2;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    if r * r == x {
        Some(r)
    } else {
        None
    }
}

/// √(num/den) with an exact path when the value is rational
/// (num·den a perfect square).
fn sqrt_ratio(num: u128, den: u128) -> f64 {
    debug_assert!(den > 0);
    if let Some(r) = num.checked_mul(den).and_then(perfect_sqrt) {
        return r as f64 / den as f64;
    }
    (num as f64 / den as f64).sqrt()
}

/// Coherence of an n-vector equiangular tight frame in ℝ^m:
/// φ_{m,n} = √((n−m)/(m(n−1))).
pub fn phi(m: u32, n: u32) -> Result<f64, BoundsError> {
    if m < 1 || n < m || n < 2 {
        return Err(BoundsError::BadArgs("phi requires n >= m >= 1 and n >= 2"));
    }
    Ok(sqrt_ratio(u128::from(n - m), u128::from(m) * u128::from(n - 1)))
}

/// Upper bound δ_{m,n} = (m/n)(1 + √((n−1)(n−m)/m)), attained exactly
/// when an n-vector equiangular tight frame for ℝ^m exists.
pub fn delta(m: u32, n: u32) -> Result<f64, BoundsError> {
    if m < 1 || n < m {
        return Err(BoundsError::BadArgs("delta requires n >= m >= 1"));
    }
    let q = u128::from(n - 1) * u128::from(n - m);
    let m128 = u128::from(m);
    if q % m128 == 0 {
        if let Some(r) = perfect_sqrt(q / m128) {
            return Ok((m128 * (1 + r)) as f64 / f64::from(n));
        }
    }
    Ok(f64::from(m) / f64::from(n) * (1.0 + (q as f64 / m128 as f64).sqrt()))
}

/// Kadec–Snobar ceiling √m; every objective value computed in this
/// crate must stay below it.
pub fn kadec_snobar(m: u32) -> f64 {
    f64::from(m).sqrt()
}

fn check_gamma_args(m: u32, k: u32, l: u32) -> Result<(), BoundsError> {
    if m < 1 || k < m || l < m {
        return Err(BoundsError::BadArgs("gamma requires k >= m, l >= m, m >= 1"));
    }
    if m == 1 {
        return Err(BoundsError::DegenerateDenominator);
    }
    Ok(())
}

/// Lower bound γ_{m,k,l} = (m − δ_{m,k}δ_{m,l}) / (2√m − δ_{m,k} − δ_{m,l})
/// valid whenever mutually unbiased k- and l-vector equiangular tight
/// frames exist for ℝ^m. The denominator is positive because δ < √m.
pub fn gamma(m: u32, k: u32, l: u32) -> Result<f64, BoundsError> {
    check_gamma_args(m, k, l)?;
    let dk = delta(m, k)?;
    let dl = delta(m, l)?;
    // Grouped so the result is bitwise symmetric in k and l.
    Ok((f64::from(m) - dk * dl) / (2.0 * kadec_snobar(m) - (dk + dl)))
}

/// Optimal mixing angle for the two-frame witness:
/// cos(2θ) = (δ_{m,k} − δ_{m,l}) / (2√m − δ_{m,k} − δ_{m,l}), always in [−1,1].
pub fn cos_two_theta(m: u32, k: u32, l: u32) -> Result<f64, BoundsError> {
    check_gamma_args(m, k, l)?;
    let dk = delta(m, k)?;
    let dl = delta(m, l)?;
    Ok((dk - dl) / (2.0 * kadec_snobar(m) - (dk + dl)))
}

/// γ along the construction family, in closed form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FamilyBound {
    pub s: u32,
    pub m: u32,
    pub k: u32,
    pub l: u32,
    pub value: f64,
}

/// Closed form of the family lower bound at parameter `s`:
/// λ(m, 4^s) ≥ ((2^{2s}−1)/(2^{3s}−3·2^{s−1}+1)) · ((2^{2s−1}+2^s−1)/3 + 2^{s−1}√m)
/// with m = (2^{2s}−1)/3. Agrees with `gamma(m, k, l)` at the matching
/// frame counts to within floating-point roundoff.
pub fn family_bound(s: u32) -> Result<FamilyBound, BoundsError> {
    if s < 2 {
        return Err(BoundsError::BadArgs("family bound requires s >= 2"));
    }
    if s > 15 {
        return Err(BoundsError::BadArgs("family bound parameters overflow above s = 15"));
    }
    let (m, k, l) = gf2::construction_params(s).map_err(|_| BoundsError::BadArgs("bad s"))?;
    let p = 1u64 << s; // 2^s
    let num = p * p - 1; // 2^{2s} - 1
    let den = p * p * p - 3 * (p / 2) + 1; // 2^{3s} - 3·2^{s-1} + 1
    let linear = (p * p / 2 + p - 1) as f64 / 3.0; // (2^{2s-1} + 2^s - 1)/3
    let value = num as f64 / den as f64 * (linear + (p / 2) as f64 * kadec_snobar(m));
    Ok(FamilyBound { s, m, k, l, value })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegralityItem {
    pub value: f64,
    pub is_integer: bool,
}

/// Absolute threshold for declaring a computed quantity an integer.
pub const INTEGER_TOL: f64 = 1e-9;

fn integrality_item(value: f64) -> IntegralityItem {
    IntegralityItem { value, is_integer: (value - value.round()).abs() <= INTEGER_TOL }
}

/// The three quantities forced to be integers whenever the (m,k,l)
/// sign matrix exists: kl/m, k·φ_{m,l}, l·φ_{m,k}.
pub fn integrality(m: u32, k: u32, l: u32) -> Result<[IntegralityItem; 3], BoundsError> {
    if m < 1 || k < m || l < m || k < 2 || l < 2 {
        return Err(BoundsError::BadArgs("integrality requires k, l >= max(m, 2)"));
    }
    let kl = u128::from(k) * u128::from(l);
    let first = if kl % u128::from(m) == 0 {
        (kl / u128::from(m)) as f64
    } else {
        kl as f64 / f64::from(m)
    };
    // k·√((l−m)/(m(l−1))) = √(k²(l−m) / (m(l−1))), and symmetrically.
    let second = sqrt_ratio(
        u128::from(k) * u128::from(k) * u128::from(l - m),
        u128::from(m) * u128::from(l - 1),
    );
    let third = sqrt_ratio(
        u128::from(l) * u128::from(l) * u128::from(k - m),
        u128::from(m) * u128::from(k - 1),
    );
    Ok([integrality_item(first), integrality_item(second), integrality_item(third)])
}

/// Every closed-form quantity for a parameter triple, bundled for
/// reporting.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub m: u32,
    pub k: u32,
    pub l: u32,
    pub phi_k: f64,
    pub phi_l: f64,
    pub delta_k: f64,
    pub delta_l: f64,
    pub gamma: f64,
    pub cos_two_theta: f64,
    pub kadec_snobar: f64,
    pub integrality: [IntegralityItem; 3],
    pub family: Option<FamilyBound>,
    /// |family closed form − γ| when the triple lies on the family.
    pub family_gamma_gap: Option<f64>,
    pub integer_tol: f64,
}

/// Report for a frame-count pair (m, n): the single-frame quantities.
#[derive(Debug, Clone, Serialize)]
pub struct PairBoundReport {
    pub m: u32,
    pub n: u32,
    pub phi: f64,
    pub delta: f64,
    pub kadec_snobar: f64,
}

pub fn report_triple(m: u32, k: u32, l: u32) -> Result<BoundReport, BoundsError> {
    let family = family_for(m, k, l);
    let g = gamma(m, k, l)?;
    Ok(BoundReport {
        m,
        k,
        l,
        phi_k: phi(m, k)?,
        phi_l: phi(m, l)?,
        delta_k: delta(m, k)?,
        delta_l: delta(m, l)?,
        gamma: g,
        cos_two_theta: cos_two_theta(m, k, l)?,
        kadec_snobar: kadec_snobar(m),
        integrality: integrality(m, k, l)?,
        family_gamma_gap: family.map(|f| (f.value - g).abs()),
        family,
        integer_tol: INTEGER_TOL,
    })
}

pub fn report_pair(m: u32, n: u32) -> Result<PairBoundReport, BoundsError> {
    Ok(PairBoundReport {
        m,
        n,
        phi: phi(m, n)?,
        delta: delta(m, n)?,
        kadec_snobar: kadec_snobar(m),
    })
}

/// The family parameter s whose triple equals (m,k,l), if any.
fn family_for(m: u32, k: u32, l: u32) -> Option<FamilyBound> {
    for s in 2..=15 {
        match gf2::construction_params(s) {
            Ok(params) if params == (m, k, l) => return family_bound(s).ok(),
            Ok(_) => continue,
            Err(_) => break,
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phi_golden_values() {
        assert_eq!(phi(4, 4).unwrap(), 0.0);
        assert_eq!(phi(5, 6).unwrap(), 0.2);
        assert_eq!(phi(5, 10).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn delta_golden_values() {
        assert_eq!(delta(2, 3).unwrap(), 4.0 / 3.0);
        assert!((delta(3, 6).unwrap() - (1.0 + 5.0_f64.sqrt()) / 2.0).abs() < 1e-15);
        assert_eq!(delta(21, 126).unwrap(), 13.0 / 3.0);
        assert_eq!(delta(7, 7).unwrap(), 1.0);
    }

    #[test]
    fn delta_on_equality_cases_equals_one_plus_phi_times_scale() {
        // δ = (m/n)(1 + (n−1)·φ)
        for &(m, n) in &[(2u32, 3u32), (3, 6), (5, 16), (6, 16), (21, 126)] {
            let lhs = delta(m, n).unwrap();
            let rhs = f64::from(m) / f64::from(n) * (1.0 + f64::from(n - 1) * phi(m, n).unwrap());
            assert!((lhs - rhs).abs() < 1e-13, "(m,n)=({m},{n})");
        }
    }

    #[test]
    fn gamma_golden_values() {
        // 5(11+6√5)/59 = 2.0691871072032829…, i.e. ≈ 2.06919 at six
        // significant digits.
        let g = gamma(5, 6, 10).unwrap();
        assert!((g - 5.0 * (11.0 + 6.0 * 5.0_f64.sqrt()) / 59.0).abs() < 1e-14);
        assert!((g - 2.0691871072032829).abs() < 1e-14);
        assert!((g - 2.06919).abs() < 5e-6);

        assert!((gamma(4, 4, 4).unwrap() - 1.5).abs() < 1e-14);
        assert!((gamma(6, 6, 16).unwrap() - 2.2741).abs() < 5e-5);
        assert!((gamma(21, 28, 36).unwrap() - 3.9397).abs() < 5e-5);
    }

    #[test]
    fn gamma_rejects_degenerate_m() {
        assert!(matches!(gamma(1, 2, 3), Err(BoundsError::DegenerateDenominator)));
        assert!(matches!(gamma(3, 2, 5), Err(BoundsError::BadArgs(_))));
    }

    #[test]
    fn cos_two_theta_golden_values() {
        assert_eq!(cos_two_theta(5, 7, 7).unwrap(), 0.0);
        // (5,6,10): δ_{5,6} = 5/3, δ_{5,10} = 2 give −1/(6√5 − 11),
        // which is −γ/5 = −0.4138374214…
        let expected = -1.0 / (6.0 * 5.0_f64.sqrt() - 11.0);
        assert!((cos_two_theta(5, 6, 10).unwrap() - expected).abs() < 1e-14);
        assert!((expected - -0.4138374214).abs() < 5e-10);
        // (6,6,16): δ_{6,6} = 1, δ_{6,16} = 9/4.
        let expected = (1.0 - 2.25) / (2.0 * 6.0_f64.sqrt() - 3.25);
        assert!((cos_two_theta(6, 6, 16).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn cos_two_theta_stays_in_range() {
        for m in 2..=12u32 {
            for k in m..=40 {
                for l in m..=40 {
                    let x = cos_two_theta(m, k, l).unwrap();
                    assert!((-1.0..=1.0).contains(&x), "(m,k,l)=({m},{k},{l}) gave {x}");
                }
            }
        }
    }

    #[test]
    fn family_bound_golden_values() {
        let fb = family_bound(2).unwrap();
        assert_eq!((fb.m, fb.k, fb.l), (5, 6, 10));
        assert!((fb.value - 2.06919).abs() < 5e-6);
        let fb = family_bound(3).unwrap();
        assert_eq!((fb.m, fb.k, fb.l), (21, 28, 36));
        assert!((fb.value - 3.9397).abs() < 5e-5);
    }

    #[test]
    fn family_bound_matches_gamma() {
        for s in 2..=6u32 {
            let fb = family_bound(s).unwrap();
            let g = gamma(fb.m, fb.k, fb.l).unwrap();
            assert!(
                (fb.value - g).abs() < 1e-12,
                "s = {s}: family {} vs gamma {}",
                fb.value,
                g
            );
        }
        assert!(family_bound(1).is_err());
    }

    #[test]
    fn integrality_golden_values() {
        let t = integrality(5, 6, 10).unwrap();
        assert_eq!(t[0].value, 12.0);
        assert_eq!(t[1].value, 2.0);
        assert_eq!(t[2].value, 2.0);
        assert!(t.iter().all(|i| i.is_integer));

        // Direct evaluation at (21,28,36): 28·36/21 = 48,
        // 28·√(15/735) = 28/7 = 4, 36·√(7/567) = 36/9 = 4.
        let t = integrality(21, 28, 36).unwrap();
        assert_eq!(t[0].value, 48.0);
        assert_eq!(t[1].value, 4.0);
        assert_eq!(t[2].value, 4.0);
        assert!(t.iter().all(|i| i.is_integer));

        let t = integrality(3, 4, 5).unwrap();
        assert!((t[0].value - 20.0 / 3.0).abs() < 1e-12);
        assert!(!t[0].is_integer);
    }

    #[test]
    fn delta_stays_below_kadec_snobar_on_a_grid() {
        for m in 2..=200u32 {
            for n in m..=200 {
                let d = delta(m, n).unwrap();
                assert!(d < kadec_snobar(m), "delta({m},{n}) = {d} >= sqrt({m})");
                assert!(d >= 1.0);
                if n == m {
                    assert_eq!(d, 1.0);
                } else {
                    assert!(d > 1.0);
                }
            }
        }
    }

    #[test]
    fn trig_identity_links_the_two_block_values() {
        // cos²θ·δ_{m,k} + sin²θ·√m = cos²θ·√m + sin²θ·δ_{m,l} = γ.
        for &(m, k, l) in &[(5u32, 6u32, 10u32), (21, 28, 36), (4, 4, 4), (6, 6, 16), (7, 10, 21)] {
            let c2t = cos_two_theta(m, k, l).unwrap();
            let cos2 = (1.0 + c2t) / 2.0;
            let sin2 = (1.0 - c2t) / 2.0;
            let g = gamma(m, k, l).unwrap();
            let dk = delta(m, k).unwrap();
            let dl = delta(m, l).unwrap();
            let sm = kadec_snobar(m);
            assert!((cos2 * dk + sin2 * sm - g).abs() < 1e-12, "(m,k,l)=({m},{k},{l})");
            assert!((cos2 * sm + sin2 * dl - g).abs() < 1e-12, "(m,k,l)=({m},{k},{l})");
        }
    }

    #[test]
    fn report_triple_attaches_family_data_only_on_family_triples() {
        let r = report_triple(5, 6, 10).unwrap();
        assert!(r.family.is_some());
        assert!(r.family_gamma_gap.unwrap() < 1e-12);
        let r = report_triple(6, 6, 16).unwrap();
        assert!(r.family.is_none());
    }

    proptest! {
        #[test]
        fn gamma_is_symmetric_in_k_and_l(m in 2u32..30, dk in 0u32..40, dl in 0u32..40) {
            let (k, l) = (m + dk, m + dl);
            prop_assert_eq!(gamma(m, k, l).unwrap(), gamma(m, l, k).unwrap());
        }

        #[test]
        fn gamma_never_exceeds_kadec_snobar(m in 2u32..30, dk in 0u32..60, dl in 0u32..60) {
            let g = gamma(m, m + dk, m + dl).unwrap();
            prop_assert!(g <= kadec_snobar(m) + 1e-12);
            prop_assert!(g >= 1.0 - 1e-12);
        }
    }
}
