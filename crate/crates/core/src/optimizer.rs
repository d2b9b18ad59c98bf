//! Numerical maximization of Σ t_i t_j |UᵀU|_{ij} over unit vectors t
//! and row-orthonormal U, by alternating the two stationarity
//! conditions a maximizer must satisfy:
//!
//! (a) t is the leading (Perron) eigenvector of |UᵀU|;
//! (b) the rows of U are eigenvectors of the m largest eigenvalues of
//!     T·sgn(UᵀU)·T, whose sum is the current value estimate.
//!
//! Each half-step solves its subproblem exactly; the coupled iteration
//! is run from many random starts. The value sequence is not guaranteed
//! monotone (the sign pattern can flip between steps), so decreases are
//! counted and reported instead of assumed away.
//!
//! The raw alternation stalls in a dense field of suboptimal fixed
//! points (at (5,16), two hundred cold starts all land between 1.97 and
//! 2.06). Cold restarts therefore run a graduated phase first: |x| and
//! sgn(x) are replaced by √(x²+ε²) and x/√(x²+ε²), and ε is annealed
//! geometrically to zero. Each smoothed half-step is still an exact
//! maximization of a minorant (√(y²+ε²) lies above its tangents), and
//! the final phase with ε = 0 is the plain (a)/(b) alternation, so
//! every reported point remains a fixed point of the exact conditions.
//! Warm starts skip the graduated phase and iterate the exact
//! conditions only.

use crate::linalg::{self, Mat};
use crate::witness::{self, Witness};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid optimizer configuration: {0}")]
    BadConfig(&'static str),
    #[error("all restarts failed")]
    AllRestartsFailed,
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Search configuration. `seed` fixes the whole run: restart r draws
/// from an independent ChaCha12 stream of the seeded generator, so the
/// histogram is bitwise reproducible regardless of thread scheduling.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub m: u32,
    pub n: u32,
    pub restarts: u32,
    pub max_iters: u32,
    /// Stop a restart once the objective changes by less than this.
    pub conv_tol: f64,
    pub seed: u64,
    /// Replaces the random draw of restart 0.
    pub warm_start: Option<Witness>,
    /// Run the graduated (ε-annealed) phase on cold restarts.
    pub anneal: bool,
}

impl OptimizerConfig {
    pub fn new(m: u32, n: u32) -> Self {
        OptimizerConfig {
            m,
            n,
            restarts: 20,
            max_iters: 5000,
            conv_tol: 1e-12,
            seed: 0,
            warm_start: None,
            anneal: true,
        }
    }
}

/// Geometric ε schedule of the graduated phase.
const ANNEAL_EPS_START: f64 = 0.5;
const ANNEAL_EPS_FACTOR: f64 = 0.5;
const ANNEAL_EPS_FLOOR: f64 = 1e-4;
const ANNEAL_ITERS_PER_LEVEL: u32 = 30;

/// Best point found plus per-restart diagnostics.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub best: Witness,
    pub value: f64,
    /// Index and iteration count of the restart that produced `best`.
    pub best_restart: u32,
    pub iterations_used: u32,
    pub restarts_converged: u32,
    /// Final value per restart; `None` marks a failed restart.
    pub value_histogram: Vec<Option<f64>>,
    /// Iterations whose value decreased (beyond roundoff) across the run.
    pub nonmonotone_steps: u64,
    /// Gram entries that hit the ambiguous-sign fallback across the run.
    pub ambiguous_sign_events: u64,
}

/// Condition (a): optimal t for a fixed U, with the achieved value
/// (the leading eigenvalue of |UᵀU|).
pub fn refine_t(u: &Mat) -> Result<(Vec<f64>, f64), OptimizerError> {
    let abs_gram = u.gram_cols().abs();
    let (value, t) = linalg::perron_vector(&abs_gram, linalg::DEFAULT_TOL)?;
    Ok((t, value))
}

/// Output of one application of condition (b).
#[derive(Debug, Clone)]
pub struct RefinedU {
    pub u: Mat,
    /// Sum of the m leading eigenvalues of T·sgn(UᵀU)·T — the value
    /// estimate this half-step certifies.
    pub mu_sum: f64,
    /// Gram entries below the sign tolerance, resolved as +1 this step.
    pub ambiguous_entries: usize,
    /// The m-th and (m+1)-th eigenvalues were numerically tied.
    pub tied_cut: bool,
}

/// Condition (b): optimal U for a fixed t, given the sign pattern of the
/// previous Gram matrix. Ambiguous signs (entries within `sign_tol` of
/// zero) are resolved as +1 and counted, never silently dropped.
pub fn refine_u(t: &[f64], u_prev: &Mat, sign_tol: f64) -> Result<RefinedU, OptimizerError> {
    let m = u_prev.rows();
    let n = u_prev.cols();
    debug_assert_eq!(t.len(), n);
    let gram = u_prev.gram_cols();

    let mut ambiguous_entries = 0usize;
    let mut signed = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let g = gram[(i, j)];
            if g.abs() < sign_tol {
                ambiguous_entries += 1;
                signed[(i, j)] = 1.0;
            } else {
                signed[(i, j)] = if g >= 0.0 { 1.0 } else { -1.0 };
            }
        }
    }

    let coupling = Mat::from_fn(n, n, |i, j| t[i] * signed[(i, j)] * t[j]);
    let eig = linalg::sym_eig(&coupling, linalg::DEFAULT_TOL)?;

    let mu_sum = eig.values[..m].iter().sum();
    let tied_cut = m < n && (eig.values[m - 1] - eig.values[m]).abs() <= 1e-12;
    let u = Mat::from_fn(m, n, |a, i| eig.vectors[(i, a)]);

    Ok(RefinedU { u, mu_sum, ambiguous_entries, tied_cut })
}

/// Standard normal sampler (Box–Muller on the uniform output of `rng`).
struct Gauss<'a, R: Rng> {
    rng: &'a mut R,
    spare: Option<f64>,
}

impl<'a, R: Rng> Gauss<'a, R> {
    fn new(rng: &'a mut R) -> Self {
        Gauss { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1: f64 = 1.0 - self.rng.gen::<f64>(); // (0, 1]
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * phi.sin());
        r * phi.cos()
    }
}

/// Row-orthonormal m×n matrix whose row space is that of an m×n
/// standard Gaussian draw (orthonormalized through its thin SVD).
pub fn random_orthonormal_rows<R: Rng>(
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<Mat, OptimizerError> {
    assert!(n >= m && m >= 1);
    for _ in 0..8 {
        let mut gauss = Gauss::new(rng);
        let g = Mat::from_fn(m, n, |_, _| gauss.next());
        let svd = match linalg::thin_svd(&g, linalg::DEFAULT_RANK_TOL) {
            Ok(svd) => svd,
            Err(_) => continue,
        };
        if svd.rank() == m {
            return Ok(svd.right.transpose());
        }
        // Rank-deficient draw (measure zero): sample again.
    }
    Err(OptimizerError::AllRestartsFailed)
}

/// One smoothed half-step pair at level ε: t from the Perron vector of
/// the entrywise √(G²+ε²) matrix, then U from the top-m eigenvectors of
/// T·(G/√(G²+ε²))·T.
fn smoothed_step(u: &Mat, eps: f64) -> Result<Mat, OptimizerError> {
    let m = u.rows();
    let n = u.cols();
    let gram = u.gram_cols();
    let softened = gram.map(|x| (x * x + eps * eps).sqrt());
    let (_, t) = linalg::perron_vector(&softened, linalg::DEFAULT_TOL)?;
    let slope = gram.map(|x| x / (x * x + eps * eps).sqrt());
    let coupling = Mat::from_fn(n, n, |i, j| t[i] * slope[(i, j)] * t[j]);
    let eig = linalg::sym_eig(&coupling, linalg::DEFAULT_TOL)?;
    Ok(Mat::from_fn(m, n, |a, i| eig.vectors[(i, a)]))
}

struct RestartOutcome {
    witness: Witness,
    value: f64,
    iterations: u32,
    converged: bool,
    nonmonotone: u64,
    ambiguous: u64,
}

fn run_restart(cfg: &OptimizerConfig, index: u32) -> Result<RestartOutcome, OptimizerError> {
    let (m, n) = (cfg.m as usize, cfg.n as usize);
    let warm = matches!((&cfg.warm_start, index), (Some(_), 0));
    let mut u = match (&cfg.warm_start, index) {
        (Some(w), 0) => w.u.clone(),
        _ => {
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u64::from(index) + 1);
            random_orthonormal_rows(m, n, &mut rng)?
        }
    };

    let mut iterations_annealed = 0u32;
    if cfg.anneal && !warm {
        let mut eps = ANNEAL_EPS_START;
        while eps > ANNEAL_EPS_FLOOR {
            for _ in 0..ANNEAL_ITERS_PER_LEVEL {
                u = smoothed_step(&u, eps)?;
                iterations_annealed += 1;
            }
            eps *= ANNEAL_EPS_FACTOR;
        }
    }

    let mut prev_value = f64::NEG_INFINITY;
    let mut iterations = 0u32;
    let mut converged = false;
    let mut nonmonotone = 0u64;
    let mut ambiguous = 0u64;

    loop {
        let (t, value) = refine_t(&u)?;
        if (value - prev_value).abs() < cfg.conv_tol {
            converged = true;
            return Ok(RestartOutcome {
                witness: Witness { t, u, objective: value, theta: None },
                value,
                iterations: iterations + iterations_annealed,
                converged,
                nonmonotone,
                ambiguous,
            });
        }
        if iterations >= cfg.max_iters {
            return Ok(RestartOutcome {
                witness: Witness { t, u, objective: value, theta: None },
                value,
                iterations: iterations + iterations_annealed,
                converged,
                nonmonotone,
                ambiguous,
            });
        }
        if value < prev_value - 1e-13 {
            nonmonotone += 1;
        }
        prev_value = value;

        let refined = refine_u(&t, &u, witness::SIGN_TOL)?;
        ambiguous += refined.ambiguous_entries as u64;
        u = refined.u;
        iterations += 1;
    }
}

/// Run the alternating iteration from `cfg.restarts` independent starts
/// and keep the best final point. Restarts are independent and may run
/// concurrently; the argmax is taken in restart-index order, so results
/// are deterministic for a fixed seed.
pub fn maximize(cfg: &OptimizerConfig) -> Result<OptResult, OptimizerError> {
    if cfg.m < 1 || cfg.n < cfg.m {
        return Err(OptimizerError::BadConfig("need n >= m >= 1"));
    }
    if cfg.restarts < 1 {
        return Err(OptimizerError::BadConfig("need at least one restart"));
    }
    if !(cfg.conv_tol > 0.0) {
        return Err(OptimizerError::BadConfig("conv_tol must be positive"));
    }
    if let Some(w) = &cfg.warm_start {
        if w.m() != cfg.m as usize || w.n() != cfg.n as usize {
            return Err(OptimizerError::BadConfig("warm start dimensions do not match"));
        }
    }

    let indices: Vec<u32> = (0..cfg.restarts).collect();

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<RestartOutcome, OptimizerError>> =
        indices.par_iter().map(|&r| run_restart(cfg, r)).collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<RestartOutcome, OptimizerError>> =
        indices.iter().map(|&r| run_restart(cfg, r)).collect();

    let mut histogram = Vec::with_capacity(outcomes.len());
    let mut best: Option<(u32, RestartOutcome)> = None;
    let mut restarts_converged = 0u32;
    let mut nonmonotone_steps = 0u64;
    let mut ambiguous_sign_events = 0u64;

    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => {
                histogram.push(Some(o.value));
                if o.converged {
                    restarts_converged += 1;
                }
                nonmonotone_steps += o.nonmonotone;
                ambiguous_sign_events += o.ambiguous;
                let better = match &best {
                    None => true,
                    Some((_, b)) => o.value > b.value,
                };
                if better {
                    best = Some((r as u32, o));
                }
            }
            Err(_) => histogram.push(None),
        }
    }

    let (best_restart, outcome) = best.ok_or(OptimizerError::AllRestartsFailed)?;
    Ok(OptResult {
        value: outcome.value,
        best: outcome.witness,
        best_restart,
        iterations_used: outcome.iterations,
        restarts_converged,
        value_histogram: histogram,
        nonmonotone_steps,
        ambiguous_sign_events,
    })
}

/// Stationarity certificate of the best witness: SP1/SP2/diagonal
/// residuals at the claimed value. Residuals at or below 1e-6 mark the
/// point "certified stationary".
pub fn certify(result: &OptResult) -> witness::SpectralReport {
    witness::spectral_report(&result.best, result.value)
}

/// Residual threshold for calling an optimizer output stationary.
pub const STATIONARY_TOL: f64 = 1e-6;

/// Summary of an optimization run for JSON reporting (the witness
/// itself is serialized separately in the witness text format).
#[derive(Debug, Clone, Serialize)]
pub struct OptSummary {
    pub m: u32,
    pub n: u32,
    pub value: f64,
    pub restarts: u32,
    pub best_restart: u32,
    pub iterations_used: u32,
    pub restarts_converged: u32,
    pub histogram: Vec<Option<f64>>,
    pub nonmonotone_steps: u64,
    pub ambiguous_sign_events: u64,
    pub seed: u64,
    pub conv_tol: f64,
    pub max_iters: u32,
    pub anneal: bool,
}

impl OptSummary {
    pub fn new(cfg: &OptimizerConfig, result: &OptResult) -> Self {
        OptSummary {
            m: cfg.m,
            n: cfg.n,
            value: result.value,
            restarts: cfg.restarts,
            best_restart: result.best_restart,
            iterations_used: result.iterations_used,
            restarts_converged: result.restarts_converged,
            histogram: result.value_histogram.clone(),
            nonmonotone_steps: result.nonmonotone_steps,
            ambiguous_sign_events: result.ambiguous_sign_events,
            seed: cfg.seed,
            conv_tol: cfg.conv_tol,
            max_iters: cfg.max_iters,
            anneal: cfg.anneal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds;
    use crate::frame::{frames_from_sign_matrix, DEFAULT_TOL};
    use crate::gf2::known_6x10;
    use crate::witness::build_witness;

    fn mercedes_benz_u() -> Mat {
        let h = 3.0_f64.sqrt() / 2.0;
        let cols = Mat::from_rows(&[vec![0.0, -h, h], vec![1.0, -0.5, -0.5]]);
        cols.scale((2.0 / 3.0_f64).sqrt())
    }

    #[test]
    fn refine_t_on_the_mercedes_benz_frame() {
        let (t, value) = refine_t(&mercedes_benz_u()).unwrap();
        assert!((value - 4.0 / 3.0).abs() < 1e-12);
        let uniform = 1.0 / 3.0_f64.sqrt();
        for ti in &t {
            assert!((ti - uniform).abs() < 1e-10, "t = {t:?}");
        }
    }

    #[test]
    fn refine_t_on_an_orthonormal_basis() {
        let (_, value) = refine_t(&Mat::identity(4)).unwrap();
        assert!((value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn refine_t_recovers_the_witness_vector() {
        let (v, w) = frames_from_sign_matrix(&known_6x10(), DEFAULT_TOL).unwrap();
        let wit = build_witness(&v, &w, DEFAULT_TOL).unwrap();
        let (t, value) = refine_t(&wit.u).unwrap();
        let gamma = bounds::gamma(5, 6, 10).unwrap();
        assert!((value - gamma).abs() < 1e-10);
        for (a, b) in t.iter().zip(&wit.t) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn refine_u_rank_one_case() {
        let u_prev = Mat::from_rows(&[vec![1.0, 0.0]]);
        let refined = refine_u(&[1.0, 0.0], &u_prev, witness::SIGN_TOL).unwrap();
        assert!((refined.mu_sum - 1.0).abs() < 1e-14);
        assert!((refined.u[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(refined.u[(0, 1)].abs() < 1e-14);
        // The off-diagonal Gram entries are exactly zero here.
        assert!(refined.ambiguous_entries > 0);
    }

    #[test]
    fn refine_u_mercedes_benz_sign_pattern() {
        // sgn(Gram) = 2I - J on three vectors at 120°; its eigenvalues
        // are {2, 2, -1}, so T·sgn(G)·T with uniform t has top-2 sum 4/3.
        let t = vec![1.0 / 3.0_f64.sqrt(); 3];
        let refined = refine_u(&t, &mercedes_benz_u(), witness::SIGN_TOL).unwrap();
        assert!((refined.mu_sum - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(refined.ambiguous_entries, 0);
    }

    #[test]
    fn refine_u_keeps_the_witness_row_space() {
        let (v, w) = frames_from_sign_matrix(&known_6x10(), DEFAULT_TOL).unwrap();
        let wit = build_witness(&v, &w, DEFAULT_TOL).unwrap();
        let refined = refine_u(&wit.t, &wit.u, witness::SIGN_TOL).unwrap();
        let gamma = bounds::gamma(5, 6, 10).unwrap();
        assert!((refined.mu_sum - gamma).abs() < 1e-9, "mu_sum = {}", refined.mu_sum);
        // Same row space: projecting the new rows onto the old row space
        // changes nothing.
        let old = &wit.u;
        let proj = refined.u.matmul(&old.transpose()).matmul(old);
        assert!(proj.sub(&refined.u).max_abs() < 1e-8);
    }

    #[test]
    fn steps_preserve_feasibility() {
        use rand::SeedableRng;
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut u = random_orthonormal_rows(3, 8, &mut rng).unwrap();
        for _ in 0..25 {
            let (t, _) = refine_t(&u).unwrap();
            assert!((crate::linalg::norm2(&t) - 1.0).abs() < 1e-10);
            let refined = refine_u(&t, &u, witness::SIGN_TOL).unwrap();
            u = refined.u;
            assert!(witness::orthonormality_deviation(&u) < 1e-10);
        }
    }

    #[test]
    fn maximize_reaches_the_known_value_at_2_3() {
        let mut cfg = OptimizerConfig::new(2, 3);
        cfg.restarts = 10;
        cfg.seed = 1;
        let result = maximize(&cfg).unwrap();
        assert!((result.value - 4.0 / 3.0).abs() < 1e-6, "value = {}", result.value);
        assert!(result.restarts_converged > 0);
        // Every reported value respects both ceilings.
        let delta = bounds::delta(2, 3).unwrap();
        for v in result.value_histogram.iter().flatten() {
            assert!(*v <= delta + 1e-8);
            assert!(*v <= 2.0_f64.sqrt() + 1e-8);
        }
    }

    #[test]
    fn maximize_is_deterministic_for_a_fixed_seed() {
        let mut cfg = OptimizerConfig::new(2, 4);
        cfg.restarts = 6;
        cfg.seed = 42;
        let a = maximize(&cfg).unwrap();
        let b = maximize(&cfg).unwrap();
        assert_eq!(a.value_histogram, b.value_histogram);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn warm_start_never_falls_below_gamma() {
        let (v, w) = frames_from_sign_matrix(&known_6x10(), DEFAULT_TOL).unwrap();
        let wit = build_witness(&v, &w, DEFAULT_TOL).unwrap();
        let mut cfg = OptimizerConfig::new(5, 16);
        cfg.restarts = 1;
        cfg.max_iters = 100;
        cfg.conv_tol = 1e-300; // force all 100 iterations
        cfg.warm_start = Some(wit);
        let result = maximize(&cfg).unwrap();
        let gamma = bounds::gamma(5, 6, 10).unwrap();
        assert!(
            result.value >= gamma - 1e-9,
            "warm-started value {} fell below gamma {}",
            result.value,
            gamma
        );
    }

    #[test]
    fn mu_sum_matches_the_objective_at_a_fixed_point() {
        let mut cfg = OptimizerConfig::new(2, 3);
        cfg.restarts = 4;
        cfg.seed = 7;
        let result = maximize(&cfg).unwrap();
        let refined = refine_u(&result.best.t, &result.best.u, witness::SIGN_TOL).unwrap();
        assert!(
            (refined.mu_sum - result.value).abs() < 1e-8,
            "mu_sum {} vs objective {}",
            refined.mu_sum,
            result.value
        );
    }

    #[test]
    fn certify_flags_a_converged_point_as_stationary() {
        let mut cfg = OptimizerConfig::new(2, 3);
        cfg.restarts = 10;
        cfg.seed = 1;
        let result = maximize(&cfg).unwrap();
        let report = certify(&result);
        assert!(report.sp1_residual <= STATIONARY_TOL, "sp1 = {}", report.sp1_residual);
        assert!(report.sp2_residual <= STATIONARY_TOL, "sp2 = {}", report.sp2_residual);
        assert!(report.remark9_residual <= STATIONARY_TOL, "r9 = {}", report.remark9_residual);
    }

    #[test]
    fn certify_reports_large_residuals_at_a_generic_point() {
        use rand::SeedableRng;
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let u = random_orthonormal_rows(3, 7, &mut rng).unwrap();
        let (t, value) = refine_t(&u).unwrap();
        let best = Witness { t, u, objective: value, theta: None };
        let result = OptResult {
            value,
            best,
            best_restart: 0,
            iterations_used: 0,
            restarts_converged: 0,
            value_histogram: vec![Some(value)],
            nonmonotone_steps: 0,
            ambiguous_sign_events: 0,
        };
        let report = certify(&result);
        // t is optimal for U (SP1 holds) but U is not stationary.
        assert!(report.sp1_residual <= 1e-9);
        assert!(report.sp2_residual > 1e-2, "sp2 = {}", report.sp2_residual);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let cfg = OptimizerConfig::new(5, 3);
        assert!(matches!(maximize(&cfg), Err(OptimizerError::BadConfig(_))));
        let mut cfg = OptimizerConfig::new(2, 3);
        cfg.restarts = 0;
        assert!(matches!(maximize(&cfg), Err(OptimizerError::BadConfig(_))));
        let mut cfg = OptimizerConfig::new(2, 3);
        cfg.conv_tol = 0.0;
        assert!(matches!(maximize(&cfg), Err(OptimizerError::BadConfig(_))));
    }
}
