//! Cross-module invariants: the construction → verification → recovery
//! → witness pipeline across the family, and sampled feasible-point
//! bounds.

use projconst_core::bounds;
use projconst_core::frame::{
    check_equiangular, check_mutually_unbiased, check_tight, frames_from_sign_matrix,
    verify_properties, DEFAULT_TOL,
};
use projconst_core::gf2::{build_sign_matrix, construction_params, known_6x10};
use projconst_core::optimizer::{random_orthonormal_rows, refine_t};
use projconst_core::witness::{build_witness, check_sp1, check_sp2, objective, SIGN_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[test]
fn family_pipeline_s2_through_s4() {
    let expected_a = [12.0, 48.0, 192.0];
    let expected_m = [5usize, 21, 85];
    for (i, s) in (2u32..=4).enumerate() {
        let x = build_sign_matrix(s).unwrap();
        let report = verify_properties(&x, DEFAULT_TOL);
        assert!(report.all_pass(), "s = {s} failed {:?}", report.failed_properties());
        assert_eq!(report.a_value, expected_a[i], "s = {s}");
        assert_eq!(report.rank, expected_m[i], "s = {s}");
        let ints = report.integrality.expect("integrality triple");
        assert!(ints.iter().all(|t| t.is_integer), "s = {s}: {ints:?}");

        let (v, w) = frames_from_sign_matrix(&x, DEFAULT_TOL).unwrap();
        let (m, k, l) = construction_params(s).unwrap();
        assert_eq!((v.dim(), v.count()), (m as usize, k as usize));
        assert_eq!((w.dim(), w.count()), (m as usize, l as usize));

        // Round trip: √m·VᵀW reproduces X entrywise.
        let recovered = v
            .vectors()
            .transpose()
            .matmul(w.vectors())
            .scale((m as f64).sqrt());
        assert!(
            recovered.sub(x.entries()).max_abs() < 1e-9,
            "s = {s}: recovery error {}",
            recovered.sub(x.entries()).max_abs()
        );

        // The cross constant is forced to 1/√m, never anything else.
        let unb = check_mutually_unbiased(&v, &w, DEFAULT_TOL).unwrap();
        assert!(unb.is_unbiased, "s = {s}");
        assert!((unb.c - 1.0 / (m as f64).sqrt()).abs() < 1e-10, "s = {s}: c = {}", unb.c);

        // Measured equiangularity constants match the closed form.
        let ev = check_equiangular(&v, DEFAULT_TOL);
        assert!((ev.c - bounds::phi(m, k).unwrap()).abs() < 1e-10, "s = {s}");
        let ew = check_equiangular(&w, DEFAULT_TOL);
        assert!((ew.c - bounds::phi(m, l).unwrap()).abs() < 1e-10, "s = {s}");
        assert!(check_tight(&v, DEFAULT_TOL).is_tight);
        assert!(check_tight(&w, DEFAULT_TOL).is_tight);
    }
}

#[test]
fn witness_residuals_do_not_grow_with_s() {
    for s in 2u32..=4 {
        let x = build_sign_matrix(s).unwrap();
        let (v, w) = frames_from_sign_matrix(&x, DEFAULT_TOL).unwrap();
        let wit = build_witness(&v, &w, DEFAULT_TOL).unwrap();
        let (m, k, l) = construction_params(s).unwrap();
        let gamma = bounds::gamma(m, k, l).unwrap();
        assert!(
            (wit.objective - gamma).abs() < 1e-10,
            "s = {s}: objective {} vs gamma {}",
            wit.objective,
            gamma
        );
        let sp1 = check_sp1(&wit, gamma);
        let sp2 = check_sp2(&wit, gamma, SIGN_TOL).unwrap();
        assert!(sp1 <= 1e-9, "s = {s}: sp1 = {sp1:.3e}");
        assert!(sp2 <= 1e-9, "s = {s}: sp2 = {sp2:.3e}");
    }
}

#[test]
fn perron_value_of_the_witness_gram_equals_gamma() {
    let (v, w) = frames_from_sign_matrix(&known_6x10(), DEFAULT_TOL).unwrap();
    let wit = build_witness(&v, &w, DEFAULT_TOL).unwrap();
    let (_, value) = refine_t(&wit.u).unwrap();
    let expected = 5.0 * (11.0 + 6.0 * 5.0_f64.sqrt()) / 59.0;
    assert!((value - expected).abs() < 1e-12, "leading eigenvalue {value}");
}

#[test]
fn random_feasible_points_respect_both_ceilings() {
    // A sampled version of the upper-bound property; the acceptance
    // suite runs the full 1000-sample version.
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    for &(m, n) in &[(2usize, 4usize), (3, 7)] {
        let delta = bounds::delta(m as u32, n as u32).unwrap();
        let sqrt_m = (m as f64).sqrt();
        for _ in 0..100 {
            let u = random_orthonormal_rows(m, n, &mut rng).unwrap();
            let (t, value) = refine_t(&u).unwrap();
            // refine_t maximizes over t, so this dominates any unit t.
            assert!(value <= delta + 1e-9, "(m,n)=({m},{n}): {value} > delta {delta}");
            assert!(value <= sqrt_m + 1e-9);
            let direct = objective(&t, &u, 1e-8).unwrap();
            assert!((direct - value).abs() < 1e-10);
        }
    }
}
