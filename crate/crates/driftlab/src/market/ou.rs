//! Exact transition machinery for the mean-reverting Gaussian drift.
//!
//! The drift SDE dμ = κ(μ̄ − μ)dt + σ_μ dW has the closed-form solution
//! μ_{t+Δ} = μ̄ + e^{−κΔ}(μ_t − μ̄) + η with η ~ N(0, V(Δ)),
//! V(Δ) = ∫₀^Δ e^{−κs} Σ_μ e^{−κᵀs} ds. Sampling the transition exactly
//! removes one discretization-error source from the bound verification.

use std::collections::HashMap;
use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{SpdMatrix, SymMatrix};
use crate::params::ModelParams;
use crate::{Error, Result};

/// Matrix exponential e^{A·t} (Padé approximant with scaling and squaring).
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (a * t).exp()
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    (m - m.transpose()).norm() <= 1e-12 * m.norm().max(1.0)
}

/// ∫₀^span e^{sign·κu} Σ e^{sign·κᵀu} du.
///
/// Closed form in the eigenbasis when κ is symmetric, otherwise adaptive
/// Simpson quadrature on the matrix integrand.
pub fn ou_noise_integral(
    kappa: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    span: f64,
    sign: f64,
) -> Result<DMatrix<f64>> {
    let d = kappa.nrows();
    if span == 0.0 {
        return Ok(DMatrix::zeros(d, d));
    }
    if is_symmetric(kappa) {
        let sym = SymMatrix::from_symmetrized(kappa.clone());
        let (values, v) = crate::linalg::sym_eigen(sym.matrix())?;
        let s_tilde = v.transpose() * sigma * &v;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let a = sign * (values[i] + values[j]);
                // ∫₀^span e^{a u} du, stable near a = 0
                let factor = if a.abs() < 1e-300 { span } else { (a * span).exp_m1() / a };
                m[(i, j)] = s_tilde[(i, j)] * factor;
            }
        }
        Ok(&v * m * v.transpose())
    } else {
        let f = |u: f64| {
            let e = expm(kappa, sign * u);
            &e * sigma * e.transpose()
        };
        let fa = f(0.0);
        let fb = f(span);
        let fm = f(span * 0.5);
        let tol = 1e-13 * sigma.norm().max(1.0) * span.abs();
        Ok(adaptive_simpson(&f, 0.0, span, &fa, &fm, &fb, tol, 25))
    }
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &dyn Fn(f64) -> DMatrix<f64>,
    a: f64,
    b: f64,
    fa: &DMatrix<f64>,
    fm: &DMatrix<f64>,
    fb: &DMatrix<f64>,
    tol: f64,
    depth: u32,
) -> DMatrix<f64> {
    let h = b - a;
    let m = (a + b) * 0.5;
    let lm = (a + m) * 0.5;
    let rm = (m + b) * 0.5;
    let flm = f(lm);
    let frm = f(rm);
    let whole = (fa + fm * 4.0 + fb) * (h / 6.0);
    let left = (fa + &flm * 4.0 + fm) * (h / 12.0);
    let right = (fm + &frm * 4.0 + fb) * (h / 12.0);
    let refined = &left + &right;
    let err = (&refined - &whole).norm();
    if depth == 0 || err <= 15.0 * tol {
        let correction = (&refined - whole) / 15.0;
        refined + correction
    } else {
        adaptive_simpson(f, a, m, fa, &flm, fm, tol * 0.5, depth - 1)
            + adaptive_simpson(f, m, b, fm, &frm, fb, tol * 0.5, depth - 1)
    }
}

/// One cached exact transition over a step of fixed width.
#[derive(Debug)]
pub struct OuTransition {
    /// e^{−κΔ}
    pub phi: DMatrix<f64>,
    /// V(Δ)
    pub noise_cov: SymMatrix,
    /// V(Δ)^{1/2}
    pub noise_sqrt: DMatrix<f64>,
}

/// Exact-transition stepper with per-width caching. Mesh intervals share a
/// width, so the cache collapses most of the exponential work.
pub struct OuStepper {
    kappa: DMatrix<f64>,
    mu_bar: DVector<f64>,
    sigma_mu_sq: DMatrix<f64>,
    cache: HashMap<i64, Rc<OuTransition>>,
}

/// Step widths are resolved to 1e-15 time units for cache lookup; transition
/// matrices of widths closer than that agree to roundoff anyway.
fn width_key(dt: f64) -> i64 {
    (dt * 1e15).round() as i64
}

impl OuStepper {
    pub fn new(params: &ModelParams) -> Self {
        OuStepper {
            kappa: params.kappa.clone(),
            mu_bar: params.mu_bar.clone(),
            sigma_mu_sq: params.sigma_mu_sq().into_matrix(),
            cache: HashMap::new(),
        }
    }

    pub fn transition(&mut self, dt: f64) -> Result<Rc<OuTransition>> {
        if let Some(t) = self.cache.get(&width_key(dt)) {
            return Ok(Rc::clone(t));
        }
        let phi = expm(&self.kappa, -dt);
        let cov = ou_noise_integral(&self.kappa, &self.sigma_mu_sq, dt, -1.0)?;
        let cov = SymMatrix::from_symmetrized(cov);
        let sqrt = SpdMatrix::from_sym(cov.clone())?.sqrt()?.into_sym().into_matrix();
        let t = Rc::new(OuTransition { phi, noise_cov: cov, noise_sqrt: sqrt });
        self.cache.insert(width_key(dt), Rc::clone(&t));
        Ok(t)
    }

    /// Samples μ_{t+Δ} given μ_t.
    pub fn step<R: Rng + ?Sized>(&mut self, mu: &DVector<f64>, dt: f64, rng: &mut R) -> Result<DVector<f64>> {
        let tr = self.transition(dt)?;
        let xi = DVector::from_fn(mu.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        Ok(&self.mu_bar + &tr.phi * (mu - &self.mu_bar) + &tr.noise_sqrt * xi)
    }
}

/// E\[μ_t\] = μ̄ + e^{−κt}(m̄₀ − μ̄), from the prior moments of μ₀.
pub fn ou_mean(params: &ModelParams, t: f64) -> Result<DVector<f64>> {
    check_time(params, t)?;
    Ok(&params.mu_bar + expm(&params.kappa, -t) * (&params.m0_prior - &params.mu_bar))
}

/// Cov(μ_s, μ_t) = e^{−κs}(q̄₀ + ∫₀^{min(s,t)} e^{κu} Σ_μ e^{κᵀu} du)e^{−κᵀt}.
///
/// Returned as a plain matrix: for s ≠ t this is a cross-covariance and need
/// not be symmetric when κ does not commute with the inner factor.
pub fn ou_cov(params: &ModelParams, s: f64, t: f64) -> Result<DMatrix<f64>> {
    check_time(params, s)?;
    check_time(params, t)?;
    let inner = params.q0_prior.matrix()
        + ou_noise_integral(&params.kappa, params.sigma_mu_sq().matrix(), s.min(t), 1.0)?;
    Ok(expm(&params.kappa, -s) * inner * expm(&params.kappa, -t).transpose())
}

fn check_time(params: &ModelParams, t: f64) -> Result<()> {
    if !(0.0..=params.horizon).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "time {t} outside [0, {}]",
            params.horizon
        )));
    }
    Ok(())
}
