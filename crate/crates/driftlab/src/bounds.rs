//! Asymptotic bound machinery for the filter covariances.
//!
//! The expert-opinion filter covariance is a semimartingale whose drift map
//! `alpha_z` and jump map `gamma_jump` admit a linear trace estimate
//! tr(α(q)) ≤ a_α − √λ·b_α·tr(q). Integrating that estimate yields explicit
//! constants C(δ) with E[tr Q_t] ≤ C(δ)/√λ on [δ, T] — for the discrete
//! expert once λ clears a threshold λ₀, for the continuous expert at every
//! λ > 0. This module computes the constants, evaluates the trace margins,
//! and runs the randomized sweeps that the checks and tests rely on.

use std::f64::consts::E;

use rand::Rng;

use crate::filters::riccati_rhs_j;
use crate::linalg::{random_psd, SpdMatrix, SymMatrix};
use crate::params::ModelParams;
use crate::{Error, Result};

/// Default fraction of the supremum b̄_α used for b_α. The trace estimate
/// needs b_α strictly below b̄_α; the fraction parameterization keeps the
/// feasible set explicit.
pub const DEFAULT_B_FRACTION: f64 = 0.9;

// ---------------------------------------------------------------------------
// Drift and jump maps of the covariance semimartingale
// ---------------------------------------------------------------------------

/// Drift map of the expert-opinion filter covariance:
/// Σ_μ − κq − qκᵀ − qΣ_R⁻¹q − λ·q(q+Γ)⁻¹q, symmetrized.
pub fn alpha_z(q: &SymMatrix, lambda: f64, params: &ModelParams) -> Result<SymMatrix> {
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
    }
    let qm = q.matrix();
    let kq = &params.kappa * qm;
    let sr_inv = params.sigma_r_sq_inv()?;
    let jump_part = gamma_jump(q, &params.gamma)?;
    let out = params.sigma_mu_sq().into_matrix() - &kq - kq.transpose() - qm * sr_inv.matrix() * qm
        + jump_part.matrix() * lambda;
    Ok(SymMatrix::from_symmetrized(out))
}

/// Jump map of the covariance at an expert opinion: −q(q+Γ)⁻¹q. The
/// Bayesian update satisfies Q⁺ = Q⁻ + gamma_jump(Q⁻, Γ).
pub fn gamma_jump(q: &SymMatrix, gamma: &SpdMatrix) -> Result<SymMatrix> {
    if q.dim() != gamma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "gamma_jump: {} vs {}",
            q.dim(),
            gamma.dim()
        )));
    }
    let total = SpdMatrix::new(q.matrix() + gamma.matrix())?;
    let inv = total.inverse()?;
    Ok(SymMatrix::from_symmetrized(-(q.matrix() * inv.matrix() * q.matrix())))
}

/// Drift map of the continuous-expert filter covariance; identical to its
/// Riccati right-hand side, exposed here for bound testing.
pub fn alpha_j(q: &SymMatrix, lambda: f64, params: &ModelParams) -> Result<SymMatrix> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    riccati_rhs_j(q, params, lambda)
}

// ---------------------------------------------------------------------------
// Constants
// ---------------------------------------------------------------------------

/// Constants of the linear trace estimate and the resulting bounds.
#[derive(Debug, Clone)]
pub struct BoundConstants {
    pub a_alpha: f64,
    pub b_alpha: f64,
    /// Supremum of feasible b_α (discrete-expert regime only).
    pub b_alpha_bar: Option<f64>,
    /// Intensity threshold above which the estimate holds (discrete regime).
    pub lambda0: Option<f64>,
    /// C(δ) for the discrete-expert regime, when a δ was supplied.
    pub c_z: Option<f64>,
    /// C(δ) for the continuous-expert regime, when a δ was supplied.
    pub c_j: Option<f64>,
    pub delta: Option<f64>,
    /// Free tangent parameter of the continuous-expert estimate.
    pub r: Option<f64>,
}

impl BoundConstants {
    /// Unit-free scale for margin reporting.
    pub fn margin_scale(&self) -> f64 {
        self.a_alpha.max(1.0)
    }
}

/// The a_α minimizing the resulting bound: 2·tr(Σ_μ) + tr(q₀)/(e·δ).
pub fn default_a_alpha(params: &ModelParams, delta: f64) -> Result<f64> {
    check_delta(params, delta)?;
    Ok(2.0 * params.sigma_mu_sq().trace() + params.q0.trace() / (E * delta))
}

/// Trace-estimate constants for the discrete-expert regime:
/// b̄_α = 2√((a_α − trΣ_μ)/trΓ), b_α = fraction·b̄_α, and the threshold
/// λ₀ = (d(a_α − trΣ_μ)/(2√(trΓ(a_α − trΣ_μ)) − b_α·trΓ))².
pub fn z_trace_constants(params: &ModelParams, a_alpha: f64, b_fraction: f64) -> Result<BoundConstants> {
    let tr_sig_mu = params.sigma_mu_sq().trace();
    let tr_gamma = params.gamma.trace();
    if a_alpha <= tr_sig_mu {
        return Err(Error::InvalidArgument(format!(
            "a_alpha must exceed tr(sigma_mu^2) = {tr_sig_mu}, got {a_alpha}"
        )));
    }
    if !(0.0 < b_fraction && b_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "b_fraction must lie in (0, 1), got {b_fraction}"
        )));
    }
    let excess = a_alpha - tr_sig_mu;
    let b_bar = 2.0 * (excess / tr_gamma).sqrt();
    let b_alpha = b_fraction * b_bar;
    let denom = 2.0 * (tr_gamma * excess).sqrt() - b_alpha * tr_gamma;
    let lambda0 = (params.dim as f64 * excess / denom).powi(2);
    Ok(BoundConstants {
        a_alpha,
        b_alpha,
        b_alpha_bar: Some(b_bar),
        lambda0: Some(lambda0),
        c_z: None,
        c_j: None,
        delta: None,
        r: None,
    })
}

/// Trace-estimate constants for the continuous-expert regime, valid for all
/// λ > 0: a_α = trΣ_μ + 1/(d·trΣ̄_J·r), b_α = 2/(d·trΣ̄_J·√r).
pub fn j_trace_constants(params: &ModelParams, r: f64) -> Result<BoundConstants> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("r must be positive, got {r}")));
    }
    let d = params.dim as f64;
    let tr_sj = params.sigma_j_bar.trace();
    Ok(BoundConstants {
        a_alpha: params.sigma_mu_sq().trace() + 1.0 / (d * tr_sj * r),
        b_alpha: 2.0 / (d * tr_sj * r.sqrt()),
        b_alpha_bar: None,
        lambda0: None,
        c_z: None,
        c_j: None,
        delta: None,
        r: Some(r),
    })
}

/// The tangent parameter minimizing the continuous-expert bound:
/// r* = (d·trΣ̄_J·[tr q₀/(eδ) + trΣ_μ])⁻¹.
pub fn r_star(params: &ModelParams, delta: f64) -> Result<f64> {
    check_delta(params, delta)?;
    let d = params.dim as f64;
    Ok(1.0
        / (d * params.sigma_j_bar.trace()
            * (params.q0.trace() / (E * delta) + params.sigma_mu_sq().trace())))
}

/// C(δ) = √(trΓ·[trΣ_μ + tr q₀·(eδ)⁻¹]) for the discrete-expert regime.
pub fn bound_constant_z(params: &ModelParams, delta: f64) -> Result<f64> {
    check_delta(params, delta)?;
    Ok((params.gamma.trace() * (params.sigma_mu_sq().trace() + params.q0.trace() / (E * delta))).sqrt())
}

/// C(δ) = √(d·trΣ̄_J·[trΣ_μ + tr q₀·(eδ)⁻¹]) for the continuous-expert regime.
pub fn bound_constant_j(params: &ModelParams, delta: f64) -> Result<f64> {
    check_delta(params, delta)?;
    let d = params.dim as f64;
    Ok((d * params.sigma_j_bar.trace()
        * (params.sigma_mu_sq().trace() + params.q0.trace() / (E * delta)))
    .sqrt())
}

fn check_delta(params: &ModelParams, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= params.horizon) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, {}], got {delta}",
            params.horizon
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Intensity gating
// ---------------------------------------------------------------------------

/// Intensity thresholds for the discrete-expert bound. The trace estimate
/// needs λ ≥ λ₀ and the bound derivation introduces a second scale
/// λ* = (b_α·δ)⁻²; the gate conservatively requires the larger of the two
/// and reports both so the choice is visible in output.
#[derive(Debug, Clone, Copy)]
pub struct LambdaGate {
    pub lambda0: f64,
    pub lambda_star: f64,
    pub lambda_q: f64,
}

/// λ* = (b_α·δ)⁻².
pub fn lambda_star(b_alpha: f64, delta: f64) -> f64 {
    (b_alpha * delta).powi(-2)
}

/// Gate for the discrete-expert bound at anchor δ, from the default a_α and
/// the given b-fraction.
pub fn lambda_gate(params: &ModelParams, delta: f64, b_fraction: f64) -> Result<LambdaGate> {
    let a = default_a_alpha(params, delta)?;
    let constants = z_trace_constants(params, a, b_fraction)?;
    let lambda0 = constants.lambda0.expect("discrete constants carry lambda0");
    let star = lambda_star(constants.b_alpha, delta);
    Ok(LambdaGate { lambda0, lambda_star: star, lambda_q: lambda0.max(star) })
}

// ---------------------------------------------------------------------------
// Trace-inequality margins
// ---------------------------------------------------------------------------

/// Margin (a_α − √λ·b_α·tr q) − tr(alpha_z(q, λ)); the trace estimate
/// asserts this is nonnegative for λ ≥ λ₀.
pub fn check_trace_inequality_z(
    q: &SymMatrix,
    lambda: f64,
    constants: &BoundConstants,
    params: &ModelParams,
) -> Result<f64> {
    let lambda0 = constants
        .lambda0
        .ok_or_else(|| Error::InvalidArgument("constants carry no lambda0; use the discrete-expert constants".into()))?;
    if lambda < lambda0 {
        return Err(Error::InvalidArgument(format!(
            "lambda {lambda} below the threshold lambda0 = {lambda0}"
        )));
    }
    let linear = constants.a_alpha - lambda.sqrt() * constants.b_alpha * q.trace();
    Ok(linear - alpha_z(q, lambda, params)?.trace())
}

/// Margin (a_α − √λ·b_α·tr q) − tr(alpha_j(q, λ)) ≥ 0 for every λ > 0.
pub fn check_trace_inequality_j(
    q: &SymMatrix,
    lambda: f64,
    constants: &BoundConstants,
    params: &ModelParams,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let linear = constants.a_alpha - lambda.sqrt() * constants.b_alpha * q.trace();
    Ok(linear - alpha_j(q, lambda, params)?.trace())
}

// ---------------------------------------------------------------------------
// Randomized sweeps
// ---------------------------------------------------------------------------

/// Worst case found by a margin sweep.
#[derive(Debug, Clone)]
pub struct SweepSample {
    pub dim: usize,
    pub lambda: f64,
    pub r: Option<f64>,
    pub q_row_major: Vec<f64>,
    pub margin: f64,
}

/// Outcome of a randomized margin sweep.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub n_samples: usize,
    pub min_margin: f64,
    pub tolerance: f64,
    pub worst: Option<SweepSample>,
}

impl SweepOutcome {
    pub fn all_pass(&self) -> bool {
        self.min_margin >= -self.tolerance
    }
}

fn record_worst(outcome: &mut SweepOutcome, sample: SweepSample) {
    if sample.margin < outcome.min_margin || outcome.worst.is_none() {
        outcome.min_margin = outcome.min_margin.min(sample.margin);
        outcome.worst = Some(sample);
    }
}

fn q_row_major(q: &SymMatrix) -> Vec<f64> {
    let d = q.dim();
    (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| q.entry(i, j)).collect()
}

/// Sweeps random PSD matrices through the discrete-expert trace inequality
/// at each λ (all must satisfy λ ≥ λ₀).
pub fn sweep_z_margins<R: Rng + ?Sized>(
    params: &ModelParams,
    constants: &BoundConstants,
    lambdas: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<SweepOutcome> {
    let mut outcome = SweepOutcome {
        n_samples: 0,
        min_margin: f64::INFINITY,
        tolerance: 1e-9 * constants.margin_scale(),
        worst: None,
    };
    for _ in 0..n_samples {
        let q = random_psd(params.dim, rng);
        for &lambda in lambdas {
            let margin = check_trace_inequality_z(q.as_sym(), lambda, constants, params)?;
            outcome.n_samples += 1;
            record_worst(
                &mut outcome,
                SweepSample { dim: params.dim, lambda, r: None, q_row_major: q_row_major(q.as_sym()), margin },
            );
        }
    }
    Ok(outcome)
}

/// Sweeps random PSD matrices through the continuous-expert trace inequality
/// for each (r, λ) pair.
pub fn sweep_j_margins<R: Rng + ?Sized>(
    params: &ModelParams,
    rs: &[f64],
    lambdas: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<SweepOutcome> {
    let mut outcome = SweepOutcome {
        n_samples: 0,
        min_margin: f64::INFINITY,
        tolerance: f64::INFINITY,
        worst: None,
    };
    for &r in rs {
        let constants = j_trace_constants(params, r)?;
        let tol = 1e-9 * constants.margin_scale();
        outcome.tolerance = outcome.tolerance.min(tol);
        for _ in 0..n_samples {
            let q = random_psd(params.dim, rng);
            for &lambda in lambdas {
                let margin = check_trace_inequality_j(q.as_sym(), lambda, &constants, params)?;
                outcome.n_samples += 1;
                record_worst(
                    &mut outcome,
                    SweepSample {
                        dim: params.dim,
                        lambda,
                        r: Some(r),
                        q_row_major: q_row_major(q.as_sym()),
                        margin,
                    },
                );
            }
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{bayes_update, riccati_rhs_r, FilterState};
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn sym1(x: f64) -> SymMatrix {
        SymMatrix::from_diagonal(&[x])
    }

    #[test]
    fn alpha_z_values() {
        let p = ModelParams::reference();
        assert_relative_eq!(alpha_z(&SymMatrix::zeros(1), 50.0, &p).unwrap().entry(0, 0), 1.0, epsilon = 1e-10);
        assert_relative_eq!(
            alpha_z(&sym1(0.1), 100.0, &p).unwrap().entry(0, 0),
            -6.42666666666667,
            epsilon = 1e-9
        );
        // without arrivals the drift map is the plain Riccati rhs
        let q = sym1(0.07);
        assert_relative_eq!(
            alpha_z(&q, 0.0, &p).unwrap().entry(0, 0),
            riccati_rhs_r(&q, &p).unwrap().entry(0, 0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn gamma_jump_values() {
        let p = ModelParams::reference();
        assert_relative_eq!(gamma_jump(&SymMatrix::zeros(1), &p.gamma).unwrap().entry(0, 0), 0.0);
        assert_relative_eq!(
            gamma_jump(&sym1(0.1), &p.gamma).unwrap().entry(0, 0),
            -0.0666666666666667,
            epsilon = 1e-12
        );
        // consistency with the filter update: rho Q - Q = gamma_jump(Q)
        assert_relative_eq!(
            gamma_jump(&sym1(0.05), &p.gamma).unwrap().entry(0, 0),
            -0.025,
            epsilon = 1e-12
        );
    }

    #[test]
    fn alpha_j_is_the_continuous_riccati_rhs() {
        let p = ModelParams::reference_with_dim(2);
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        for _ in 0..50 {
            let q = random_psd(2, &mut rng);
            let a = alpha_j(q.as_sym(), 37.0, &p).unwrap();
            let b = riccati_rhs_j(q.as_sym(), &p, 37.0).unwrap();
            assert_eq!(a.matrix(), b.matrix());
        }
        assert!(alpha_j(&SymMatrix::zeros(2), 0.0, &p).is_err());
    }

    #[test]
    fn gamma_jump_matches_bayes_update_random() {
        let p3 = ModelParams::reference_with_dim(3);
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let gamma_min = p3.gamma.as_sym().min_eigenvalue().unwrap();
        for _ in 0..1000 {
            let q = random_psd(3, &mut rng);
            let state = FilterState { t: 0.0, m: DVector::zeros(3), q: q.as_sym().clone() };
            let updated = bayes_update(&state, &DVector::zeros(3), &p3.gamma).unwrap();
            let via_jump = q.as_sym() + &gamma_jump(q.as_sym(), &p3.gamma).unwrap();
            let err = (updated.q.matrix() - via_jump.matrix()).norm();
            // forward-error scale of the two inversion routes
            let scale = (q.frobenius().powi(2) / gamma_min).max(1.0);
            assert!(err < 1e-12 * scale, "err = {err:.3e}, scale = {scale:.3e}");
        }
    }

    #[test]
    fn z_constants_reference_values() {
        let p = ModelParams::reference();
        let a = default_a_alpha(&p, 0.5).unwrap();
        assert_relative_eq!(a, 2.12262648039048, epsilon = 1e-12);
        let c = z_trace_constants(&p, a, 0.9).unwrap();
        assert_relative_eq!(c.b_alpha_bar.unwrap(), 9.47682005903027, epsilon = 1e-10);
        assert_relative_eq!(c.b_alpha, 8.52913805312724, epsilon = 1e-10);
        assert_relative_eq!(c.lambda0.unwrap(), 561.313240195243, epsilon = 1e-8);

        // b_bar decreases as the expert gets noisier
        let mut noisy = ModelParams::reference();
        noisy.gamma = SpdMatrix::from_diagonal(&[5.0]).unwrap();
        let c_noisy = z_trace_constants(&noisy, a, 0.9).unwrap();
        assert!(c_noisy.b_alpha_bar.unwrap() < c.b_alpha_bar.unwrap());

        assert!(z_trace_constants(&p, 0.5, 0.9).is_err());
        assert!(z_trace_constants(&p, a, 1.0).is_err());
    }

    #[test]
    fn j_constants_reference_values() {
        let p = ModelParams::reference();
        let c = j_trace_constants(&p, 1.0).unwrap();
        assert_relative_eq!(c.a_alpha, 21.0, epsilon = 1e-12);
        assert_relative_eq!(c.b_alpha, 40.0, epsilon = 1e-12);

        // r -> infinity: a -> tr sigma_mu^2, b -> 0
        let c_inf = j_trace_constants(&p, 1e12).unwrap();
        assert_relative_eq!(c_inf.a_alpha, 1.0, epsilon = 1e-9);
        assert!(c_inf.b_alpha < 1e-4);
        assert!(j_trace_constants(&p, 0.0).is_err());

        // the optimal tangent parameter reproduces the bound constant
        let delta = 0.5;
        let r = r_star(&p, delta).unwrap();
        assert_relative_eq!(r, 17.8153645485393, epsilon = 1e-10);
        let c = j_trace_constants(&p, r).unwrap();
        let via_opt = (p.q0.trace() / (E * delta) + c.a_alpha) / c.b_alpha;
        assert_relative_eq!(via_opt, bound_constant_j(&p, delta).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn bound_constants_reference_values() {
        let p = ModelParams::reference();
        assert_relative_eq!(bound_constant_z(&p, 0.5).unwrap(), 0.236920501475757, epsilon = 1e-12);
        assert_relative_eq!(bound_constant_z(&p, 0.1).unwrap(), 0.284001091719064, epsilon = 1e-12);
        // single asset with matching expert variances: both constants agree
        assert_relative_eq!(
            bound_constant_j(&p, 0.5).unwrap(),
            bound_constant_z(&p, 0.5).unwrap(),
            epsilon = 1e-14
        );
        assert!(bound_constant_z(&p, 0.0).is_err());
        assert!(bound_constant_z(&p, 1.5).is_err());

        // delta-independent once q0 = 0
        let mut sharp = ModelParams::reference();
        sharp.q0 = SpdMatrix::zeros(1);
        let c1 = bound_constant_z(&sharp, 0.1).unwrap();
        let c2 = bound_constant_z(&sharp, 1.0).unwrap();
        assert_relative_eq!(c1, c2, epsilon = 1e-14);
        assert_relative_eq!(c1, (0.05_f64).sqrt(), epsilon = 1e-14);

        // the continuous constant scales like sqrt(d·tr(sigma_j_bar)):
        // quadrupling the expert covariance at fixed d doubles the constant
        let p2 = ModelParams::reference_with_dim(2);
        let mut p2_quiet = p2.clone();
        p2_quiet.sigma_j_bar = SpdMatrix::from_diagonal(&[0.0125, 0.0125]).unwrap();
        let ratio = bound_constant_j(&p2, 0.5).unwrap() / bound_constant_j(&p2_quiet, 0.5).unwrap();
        assert_relative_eq!(ratio, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn bound_constants_decrease_in_delta() {
        let p = ModelParams::reference();
        let mut prev_z = f64::INFINITY;
        let mut prev_j = f64::INFINITY;
        for &delta in &[0.05, 0.1, 0.3, 0.5, 1.0] {
            let z = bound_constant_z(&p, delta).unwrap();
            let j = bound_constant_j(&p, delta).unwrap();
            assert!(z < prev_z && j < prev_j, "delta {delta}");
            prev_z = z;
            prev_j = j;
        }
    }

    #[test]
    fn lambda_gate_reports_both_scales() {
        let p = ModelParams::reference();
        let gate = lambda_gate(&p, 0.5, DEFAULT_B_FRACTION).unwrap();
        assert_relative_eq!(gate.lambda0, 561.313240195243, epsilon = 1e-8);
        assert_relative_eq!(gate.lambda_star, 0.0549856930510472, epsilon = 1e-12);
        assert_relative_eq!(gate.lambda_q, gate.lambda0.max(gate.lambda_star));
    }

    #[test]
    fn z_margin_cases() {
        let p = ModelParams::reference();
        let a = default_a_alpha(&p, 0.5).unwrap();
        let c = z_trace_constants(&p, a, 0.9).unwrap();
        // q = 0: margin is the excess a - tr(sigma_mu^2)
        let m0 = check_trace_inequality_z(&SymMatrix::zeros(1), 600.0, &c, &p).unwrap();
        assert_relative_eq!(m0, a - 1.0, epsilon = 1e-12);
        // a worked point
        let m = check_trace_inequality_z(&sym1(0.1), 600.0, &c, &p).unwrap();
        assert!(m >= 0.0, "margin {m}");
        // gating is enforced
        assert!(check_trace_inequality_z(&sym1(0.1), 100.0, &c, &p).is_err());
    }

    #[test]
    fn j_margin_cases() {
        let p = ModelParams::reference();
        let c = j_trace_constants(&p, 1.0).unwrap();
        let m0 = check_trace_inequality_j(&SymMatrix::zeros(1), 0.01, &c, &p).unwrap();
        assert_relative_eq!(m0, 20.0, epsilon = 1e-10); // 1/(d tr(sigma_j_bar) r)
        assert!(check_trace_inequality_j(&sym1(0.1), 0.0, &c, &p).is_err());

        // tangency: the margin is locally smallest near q = 1/sqrt(lambda r)
        let lambda = 100.0;
        let q_touch = 1.0 / (lambda * 1.0_f64).sqrt();
        let at = check_trace_inequality_j(&sym1(q_touch), lambda, &c, &p).unwrap();
        let below = check_trace_inequality_j(&sym1(q_touch * 0.5), lambda, &c, &p).unwrap();
        let above = check_trace_inequality_j(&sym1(q_touch * 2.0), lambda, &c, &p).unwrap();
        assert!(at >= 0.0);
        assert!(at < below && at < above);
    }

    #[test]
    fn randomized_sweeps_stay_nonnegative() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for d in 1..=3usize {
            let p = ModelParams::reference_with_dim(d);
            let a = default_a_alpha(&p, 0.5).unwrap();
            let c = z_trace_constants(&p, a, DEFAULT_B_FRACTION).unwrap();
            let lambda0 = c.lambda0.unwrap();
            let z = sweep_z_margins(&p, &c, &[lambda0, 10.0 * lambda0], 200, &mut rng).unwrap();
            assert!(z.all_pass(), "d={d}: min margin {}", z.min_margin);

            let r = r_star(&p, 0.5).unwrap();
            let j = sweep_j_margins(&p, &[0.1, 1.0, r], &[1e-3, 1.0, 1e3, 1e6], 200, &mut rng).unwrap();
            assert!(j.all_pass(), "d={d}: min margin {}", j.min_margin);
        }
    }
}
