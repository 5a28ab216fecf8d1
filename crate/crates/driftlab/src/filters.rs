//! Filter engines for the three partial-information regimes: returns only
//! (R), returns plus discrete expert opinions (Z), and returns plus a
//! continuous-time expert (J).
//!
//! Between observation events the conditional covariance follows a matrix
//! Riccati ODE and is integrated with classic RK4 plus substepping; the
//! conditional mean is driven by the observed increments and stepped with
//! Euler-Maruyama at grid resolution. At expert-opinion arrivals the Z
//! filter applies the Bayesian update with factor ρ = Γ(Q⁻ + Γ)⁻¹.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{loewner_leq, psd_tol, SpdMatrix, SymMatrix};
use crate::market::{MarketPath, TimeGrid};
use crate::params::ModelParams;
use crate::{Error, Result};

/// Base internal step for the covariance integrator.
pub const DT_ODE_BASE: f64 = 1e-3;

/// Default integrator step: `1e-3 · min(1, 1/λ_scale)` with
/// `λ_scale = max(1, λ·‖Σ̄_J⁻¹‖_F·‖q₀‖_F)`. The scale factor resolves the
/// fast initial transient of the continuous-expert Riccati flow at large λ.
pub fn default_dt_ode(params: &ModelParams, lambda: Option<f64>) -> Result<f64> {
    let scale = match lambda {
        Some(l) if l > 0.0 => {
            (l * params.sigma_j_bar_inv()?.frobenius() * params.q0.frobenius()).max(1.0)
        }
        _ => 1.0,
    };
    Ok(DT_ODE_BASE * (1.0 / scale).min(1.0))
}

// ---------------------------------------------------------------------------
// Riccati right-hand sides
// ---------------------------------------------------------------------------

/// dQ/dt for the return-only filter: Σ_μ − κq − qκᵀ − qΣ_R⁻¹q, symmetrized.
pub fn riccati_rhs_r(q: &SymMatrix, params: &ModelParams) -> Result<SymMatrix> {
    let precision = params.sigma_r_sq_inv()?;
    Ok(rhs_with_precision(q, params, precision.matrix()))
}

/// dQ/dt for the continuous-expert filter:
/// Σ_μ − κq − qκᵀ − q(Σ_R⁻¹ + λΣ̄_J⁻¹)q, symmetrized.
pub fn riccati_rhs_j(q: &SymMatrix, params: &ModelParams, lambda: f64) -> Result<SymMatrix> {
    let precision = params.sigma_r_sq_inv()?.into_sym().into_matrix()
        + params.sigma_j_bar_inv()?.matrix() * lambda;
    Ok(rhs_with_precision(q, params, &precision))
}

fn rhs_with_precision(q: &SymMatrix, params: &ModelParams, precision: &DMatrix<f64>) -> SymMatrix {
    let qm = q.matrix();
    let kq = &params.kappa * qm;
    let out = params.sigma_mu_sq().into_matrix() - &kq - kq.transpose() - qm * precision * qm;
    SymMatrix::from_symmetrized(out)
}

// ---------------------------------------------------------------------------
// Small-matrix kernels for the integrator hot loop
// ---------------------------------------------------------------------------

mod smallmat {
    /// out = a·b for column-major d×d slices.
    pub fn mul(d: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
        for j in 0..d {
            for i in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += a[i + k * d] * b[k + j * d];
                }
                out[i + j * d] = s;
            }
        }
    }

    pub fn symmetrize(d: usize, m: &mut [f64]) {
        for j in 0..d {
            for i in 0..j {
                let avg = 0.5 * (m[i + j * d] + m[j + i * d]);
                m[i + j * d] = avg;
                m[j + i * d] = avg;
            }
        }
    }

    pub fn frobenius(m: &[f64]) -> f64 {
        m.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// In-place lower Cholesky attempt on `scratch` (a copy of the matrix).
    /// Returns false when the matrix is not numerically positive definite.
    pub fn cholesky_ok(d: usize, m: &[f64], scratch: &mut [f64]) -> bool {
        scratch.copy_from_slice(m);
        for j in 0..d {
            let mut s = scratch[j + j * d];
            for k in 0..j {
                s -= scratch[j + k * d] * scratch[j + k * d];
            }
            if s <= 0.0 {
                return false;
            }
            let l = s.sqrt();
            scratch[j + j * d] = l;
            for i in (j + 1)..d {
                let mut v = scratch[i + j * d];
                for k in 0..j {
                    v -= scratch[i + k * d] * scratch[j + k * d];
                }
                scratch[i + j * d] = v / l;
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Riccati integrator
// ---------------------------------------------------------------------------

/// Right-hand side evaluated on raw column-major buffers.
pub trait RiccatiRhs {
    fn dim(&self) -> usize;
    fn eval(&self, q: &[f64], out: &mut [f64], scratch: &mut [f64]);
}

/// The quadratic filter-covariance rhs Σ_μ − κq − qκᵀ − q·P·q with a fixed
/// observation precision P.
pub struct StandardRiccati {
    dim: usize,
    kappa: Vec<f64>,
    sigma_mu_sq: Vec<f64>,
    precision: Vec<f64>,
}

impl StandardRiccati {
    /// P = Σ_R⁻¹ plus, when a continuous expert at intensity λ is observed,
    /// λΣ̄_J⁻¹.
    pub fn new(params: &ModelParams, j_lambda: Option<f64>) -> Result<Self> {
        let mut precision = params.sigma_r_sq_inv()?.into_sym().into_matrix();
        if let Some(lambda) = j_lambda {
            if !(lambda > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "continuous-expert intensity must be positive, got {lambda}"
                )));
            }
            precision += params.sigma_j_bar_inv()?.matrix() * lambda;
        }
        Ok(StandardRiccati {
            dim: params.dim,
            kappa: params.kappa.as_slice().to_vec(),
            sigma_mu_sq: params.sigma_mu_sq().into_matrix().as_slice().to_vec(),
            precision: precision.as_slice().to_vec(),
        })
    }

    pub fn precision(&self) -> &[f64] {
        &self.precision
    }
}

impl RiccatiRhs for StandardRiccati {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, q: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let d = self.dim;
        let (w1, w2) = scratch.split_at_mut(d * d);
        // w1 = κq, w2 = qP, out = qPq
        smallmat::mul(d, &self.kappa, q, w1);
        smallmat::mul(d, q, &self.precision, w2);
        smallmat::mul(d, w2, q, out);
        for j in 0..d {
            for i in 0..d {
                let idx = i + j * d;
                out[idx] = self.sigma_mu_sq[idx] - w1[idx] - w1[j + i * d] - out[idx];
            }
        }
        smallmat::symmetrize(d, out);
    }
}

/// Closure adapter so tests and one-off integrations can supply any rhs.
pub struct FnRhs<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&SymMatrix) -> SymMatrix> FnRhs<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnRhs { dim, f }
    }
}

impl<F: Fn(&SymMatrix) -> SymMatrix> RiccatiRhs for FnRhs<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, q: &[f64], out: &mut [f64], _scratch: &mut [f64]) {
        let d = self.dim;
        let qm = SymMatrix::from_symmetrized(DMatrix::from_column_slice(d, d, q));
        let r = (self.f)(&qm);
        out.copy_from_slice(r.matrix().as_slice());
    }
}

/// RK4 with internal substepping; the state is symmetrized and PSD-projected
/// (eigenvalue clamp at zero) after every internal step. A violation beyond
/// the PSD slack even after projection aborts with a step-size error.
pub struct RiccatiSolver<R: RiccatiRhs> {
    rhs: R,
    dt_ode: f64,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
    chol: Vec<f64>,
    scratch: Vec<f64>,
}

impl<R: RiccatiRhs> RiccatiSolver<R> {
    pub fn new(rhs: R, dt_ode: f64) -> Result<Self> {
        if !(dt_ode > 0.0) {
            return Err(Error::InvalidArgument(format!("dt_ode must be positive, got {dt_ode}")));
        }
        let n = rhs.dim() * rhs.dim();
        Ok(RiccatiSolver {
            rhs,
            dt_ode,
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            stage: vec![0.0; n],
            chol: vec![0.0; n],
            scratch: vec![0.0; 2 * n],
        })
    }

    pub fn rhs(&self) -> &R {
        &self.rhs
    }

    /// Integrates `q` forward over `span`.
    pub fn advance(&mut self, q: &mut [f64], span: f64) -> Result<()> {
        if span <= 0.0 {
            return Ok(());
        }
        let n_sub = (span / self.dt_ode).ceil().max(1.0) as usize;
        let h = span / n_sub as f64;
        let n = q.len();
        for _ in 0..n_sub {
            self.rhs.eval(q, &mut self.k1, &mut self.scratch);
            for i in 0..n {
                self.stage[i] = q[i] + 0.5 * h * self.k1[i];
            }
            self.rhs.eval(&self.stage, &mut self.k2, &mut self.scratch);
            for i in 0..n {
                self.stage[i] = q[i] + 0.5 * h * self.k2[i];
            }
            self.rhs.eval(&self.stage, &mut self.k3, &mut self.scratch);
            for i in 0..n {
                self.stage[i] = q[i] + h * self.k3[i];
            }
            self.rhs.eval(&self.stage, &mut self.k4, &mut self.scratch);
            for i in 0..n {
                q[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
            }
            let d = self.rhs.dim();
            smallmat::symmetrize(d, q);
            if !smallmat::cholesky_ok(d, q, &mut self.chol) {
                self.project_psd(q)?;
            }
        }
        Ok(())
    }

    /// Eigenvalue clamp at zero; errors when the most negative eigenvalue
    /// exceeds the PSD slack, which indicates the step size is too large.
    fn project_psd(&mut self, q: &mut [f64]) -> Result<()> {
        let d = self.rhs.dim();
        let m = DMatrix::from_column_slice(d, d, q);
        let (values, vectors) = crate::linalg::sym_eigen(&m)?;
        let max_abs = values.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
        let min = values[0];
        if min < -psd_tol(max_abs) {
            return Err(Error::Numerical(format!(
                "covariance eigenvalue {min:.3e} fell below the PSD slack; \
                 reduce dt_ode (currently {:.3e})",
                self.dt_ode
            )));
        }
        let clamped = DVector::from_iterator(d, values.iter().map(|&v| v.max(0.0)));
        let rebuilt = &vectors * DMatrix::from_diagonal(&clamped) * vectors.transpose();
        q.copy_from_slice(rebuilt.as_slice());
        smallmat::symmetrize(d, q);
        Ok(())
    }
}

/// Solves the covariance ODE on the grid, returning one matrix per grid
/// point. `dt_ode` bounds the internal substep.
pub fn solve_riccati<R: RiccatiRhs>(
    rhs: R,
    q0: &SymMatrix,
    grid: &TimeGrid,
    dt_ode: f64,
) -> Result<Vec<SymMatrix>> {
    if q0.dim() != rhs.dim() {
        return Err(Error::DimensionMismatch(format!(
            "q0 has dimension {}, rhs expects {}",
            q0.dim(),
            rhs.dim()
        )));
    }
    let d = rhs.dim();
    let mut solver = RiccatiSolver::new(rhs, dt_ode)?;
    let mut q = q0.matrix().as_slice().to_vec();
    let mut out = Vec::with_capacity(grid.len());
    out.push(q0.clone());
    for i in 0..grid.n_intervals() {
        solver.advance(&mut q, grid.dt(i))?;
        out.push(SymMatrix::from_symmetrized(DMatrix::from_column_slice(d, d, &q)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Filter states and paths
// ---------------------------------------------------------------------------

/// Information regime of an investor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    R,
    Z,
    J,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::R => write!(f, "R"),
            Regime::Z => write!(f, "Z"),
            Regime::J => write!(f, "J"),
        }
    }
}

/// Conditional mean and covariance at one time.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub t: f64,
    pub m: DVector<f64>,
    pub q: SymMatrix,
}

/// Pre-update state at an expert-opinion arrival.
#[derive(Debug, Clone)]
pub struct JumpRecord {
    pub grid_index: usize,
    pub m_minus: DVector<f64>,
    pub q_minus: SymMatrix,
}

/// Filter trajectory on a grid. At arrival points `states` holds the
/// post-update value; the pre-update value is recorded in `jumps`.
#[derive(Debug, Clone)]
pub struct FilterPath {
    pub grid: TimeGrid,
    pub states: Vec<FilterState>,
    pub jumps: Vec<JumpRecord>,
    pub regime: Regime,
    pub lambda: Option<f64>,
}

impl FilterPath {
    pub fn state(&self, i: usize) -> &FilterState {
        &self.states[i]
    }

    pub fn jump_at(&self, grid_index: usize) -> Option<&JumpRecord> {
        self.jumps.iter().find(|j| j.grid_index == grid_index)
    }
}

// ---------------------------------------------------------------------------
// Mean propagation and Bayesian update
// ---------------------------------------------------------------------------

/// One Euler-Maruyama step of the innovation-form mean dynamics:
/// m⁺ = m + κ(μ̄ − m)dt + qΣ_R⁻¹(ΔR − m·dt) [+ qλΣ̄_J⁻¹(ΔJ − m·dt)].
pub fn propagate_mean(
    state: &FilterState,
    d_return: &DVector<f64>,
    dt: f64,
    params: &ModelParams,
    extra_channel: Option<(&DVector<f64>, f64)>,
) -> Result<DVector<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let qm = state.q.matrix();
    let mut m = &state.m
        + &params.kappa * (&params.mu_bar - &state.m) * dt
        + qm * params.sigma_r_sq_inv()?.matrix() * (d_return - &state.m * dt);
    if let Some((d_j, lambda)) = extra_channel {
        m += qm * (params.sigma_j_bar_inv()?.matrix() * lambda) * (d_j - &state.m * dt);
    }
    Ok(m)
}

/// Bayesian update at an expert opinion: ρ = Γ(Q⁻ + Γ)⁻¹, M⁺ = ρM⁻ + (I−ρ)z,
/// Q⁺ = ρQ⁻ symmetrized. The update never inflates the covariance.
pub fn bayes_update(state_minus: &FilterState, z: &DVector<f64>, gamma: &SpdMatrix) -> Result<FilterState> {
    let d = gamma.dim();
    if z.len() != d || state_minus.q.dim() != d {
        return Err(Error::DimensionMismatch("bayes_update: incompatible dimensions".into()));
    }
    let total = state_minus.q.matrix() + gamma.matrix();
    let chol = Cholesky::new(total)
        .ok_or_else(|| Error::Singular("Q⁻ + Γ is not positive definite".into()))?;
    // ρᵀ = (Q⁻+Γ)⁻¹Γ, so ρ = (solve result)ᵀ
    let rho = chol.solve(gamma.matrix()).transpose();
    let m = z + &rho * (&state_minus.m - z);
    let q = SymMatrix::from_symmetrized(&rho * state_minus.q.matrix());
    debug_assert!(
        loewner_leq(&q, &state_minus.q, 1e-10 * state_minus.q.unit_scale()).unwrap_or(false),
        "update must shrink the covariance"
    );
    Ok(FilterState { t: state_minus.t, m, q })
}

// ---------------------------------------------------------------------------
// Filter runs
// ---------------------------------------------------------------------------

pub(crate) struct MeanStepper {
    dim: usize,
    kappa: Vec<f64>,
    mu_bar: Vec<f64>,
    sr_inv: Vec<f64>,
    j_precision: Option<Vec<f64>>, // λΣ̄_J⁻¹
    gain: Vec<f64>,
    m_next: Vec<f64>,
}

impl MeanStepper {
    pub(crate) fn new(params: &ModelParams, j_lambda: Option<f64>) -> Result<Self> {
        let j_precision = match j_lambda {
            Some(lambda) => {
                Some((params.sigma_j_bar_inv()?.matrix() * lambda).as_slice().to_vec())
            }
            None => None,
        };
        Ok(MeanStepper {
            dim: params.dim,
            kappa: params.kappa.as_slice().to_vec(),
            mu_bar: params.mu_bar.as_slice().to_vec(),
            sr_inv: params.sigma_r_sq_inv()?.matrix().as_slice().to_vec(),
            j_precision,
            gain: vec![0.0; params.dim * params.dim],
            m_next: vec![0.0; params.dim],
        })
    }

    /// m += κ(μ̄−m)dt + qΣ_R⁻¹(ΔR − m dt) [+ qλΣ̄_J⁻¹(ΔJ − m dt)]
    pub(crate) fn step(&mut self, m: &mut [f64], q: &[f64], dt: f64, d_return: &DVector<f64>, d_j: Option<&DVector<f64>>) {
        let d = self.dim;
        for i in 0..d {
            let mut acc = m[i];
            for k in 0..d {
                acc += self.kappa[i + k * d] * (self.mu_bar[k] - m[k]) * dt;
            }
            self.m_next[i] = acc;
        }
        smallmat::mul(d, q, &self.sr_inv, &mut self.gain);
        for i in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += self.gain[i + k * d] * (d_return[k] - m[k] * dt);
            }
            self.m_next[i] += acc;
        }
        if let (Some(jp), Some(dj)) = (&self.j_precision, d_j) {
            smallmat::mul(d, q, jp, &mut self.gain);
            for i in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += self.gain[i + k * d] * (dj[k] - m[k] * dt);
                }
                self.m_next[i] += acc;
            }
        }
        m.copy_from_slice(&self.m_next);
    }
}

fn run_linear_filter(
    path: &MarketPath,
    params: &ModelParams,
    j_lambda: Option<f64>,
    regime: Regime,
) -> Result<FilterPath> {
    let d = params.dim;
    let grid = &path.grid;
    let j_increments = match j_lambda {
        Some(_) => Some(
            path.j_increments
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("path carries no continuous-expert channel".into()))?,
        ),
        None => None,
    };

    let rhs = StandardRiccati::new(params, j_lambda)?;
    let mut solver = RiccatiSolver::new(rhs, default_dt_ode(params, j_lambda)?)?;
    let mut mean = MeanStepper::new(params, j_lambda)?;

    let mut q = params.q0.matrix().as_slice().to_vec();
    let mut m = params.m0.as_slice().to_vec();
    let mut states = Vec::with_capacity(grid.len());
    states.push(FilterState {
        t: grid.point(0),
        m: params.m0.clone(),
        q: params.q0.as_sym().clone(),
    });
    for i in 0..grid.n_intervals() {
        let dt = grid.dt(i);
        mean.step(&mut m, &q, dt, &path.returns[i], j_increments.map(|j| &j[i]));
        solver.advance(&mut q, dt)?;
        states.push(FilterState {
            t: grid.point(i + 1),
            m: DVector::from_column_slice(&m),
            q: SymMatrix::from_symmetrized(DMatrix::from_column_slice(d, d, &q)),
        });
    }
    Ok(FilterPath { grid: grid.clone(), states, jumps: Vec::new(), regime, lambda: j_lambda })
}

/// Return-only filter: deterministic covariance from the Riccati flow, mean
/// driven by the return innovations.
pub fn run_r_filter(path: &MarketPath, params: &ModelParams) -> Result<FilterPath> {
    run_linear_filter(path, params, None, Regime::R)
}

/// Continuous-expert filter at intensity λ (effective expert covariance
/// Σ̄_J/λ). The path must carry the continuous-expert channel at the same λ.
pub fn run_j_filter(path: &MarketPath, params: &ModelParams, lambda: f64) -> Result<FilterPath> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if path.j_increments.is_some() && (path.lambda - lambda).abs() > 1e-9 * lambda.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "path was realized at lambda = {}, filter asked for {lambda}",
            path.lambda
        )));
    }
    run_linear_filter(path, params, Some(lambda), Regime::J)
}

/// Expert-opinion filter: return-only dynamics between arrivals, Bayesian
/// update at each arrival. Pre-update states are recorded in `jumps`.
pub fn run_z_filter(path: &MarketPath, params: &ModelParams) -> Result<FilterPath> {
    let d = params.dim;
    let grid = &path.grid;
    let rhs = StandardRiccati::new(params, None)?;
    let mut solver = RiccatiSolver::new(rhs, default_dt_ode(params, None)?)?;
    let mut mean = MeanStepper::new(params, None)?;

    let mut q = params.q0.matrix().as_slice().to_vec();
    let mut m = params.m0.as_slice().to_vec();
    let mut states = Vec::with_capacity(grid.len());
    let mut jumps = Vec::new();
    states.push(FilterState {
        t: grid.point(0),
        m: params.m0.clone(),
        q: params.q0.as_sym().clone(),
    });
    let mut next_event = 0;
    for i in 0..grid.n_intervals() {
        let dt = grid.dt(i);
        let point = i + 1;
        mean.step(&mut m, &q, dt, &path.returns[i], None);
        solver.advance(&mut q, dt)?;

        if grid.is_arrival(point) {
            let mut state = FilterState {
                t: grid.point(point),
                m: DVector::from_column_slice(&m),
                q: SymMatrix::from_symmetrized(DMatrix::from_column_slice(d, d, &q)),
            };
            let mut recorded = false;
            while next_event < path.expert_events.len()
                && path.expert_events[next_event].grid_index == point
            {
                if !recorded {
                    jumps.push(JumpRecord {
                        grid_index: point,
                        m_minus: state.m.clone(),
                        q_minus: state.q.clone(),
                    });
                    recorded = true;
                }
                state = bayes_update(&state, &path.expert_events[next_event].value, &params.gamma)?;
                next_event += 1;
            }
            m.copy_from_slice(state.m.as_slice());
            q.copy_from_slice(state.q.matrix().as_slice());
            states.push(state);
        } else {
            states.push(FilterState {
                t: grid.point(point),
                m: DVector::from_column_slice(&m),
                q: SymMatrix::from_symmetrized(DMatrix::from_column_slice(d, d, &q)),
            });
        }
    }
    if next_event != path.expert_events.len() {
        return Err(Error::InvalidArgument(format!(
            "{} expert events were not aligned with flagged grid points",
            path.expert_events.len() - next_event
        )));
    }
    Ok(FilterPath { grid: grid.clone(), states, jumps, regime: Regime::Z, lambda: Some(path.lambda) })
}

/// Attracting stationary point of the return-only Riccati flow: closed form
/// for d = 1, long-time integration until ‖rhs‖_F < 1e-12 otherwise.
pub fn stationary_riccati_r(params: &ModelParams) -> Result<SymMatrix> {
    if params.dim == 1 {
        let kappa = params.kappa[(0, 0)];
        let s_mu = params.sigma_mu_sq().entry(0, 0);
        let s_r_inv = 1.0 / params.sigma_r_sq().entry(0, 0);
        let q = (-kappa + (kappa * kappa + s_r_inv * s_mu).sqrt()) / s_r_inv;
        return Ok(SymMatrix::from_diagonal(&[q]));
    }
    let rhs = StandardRiccati::new(params, None)?;
    let d = params.dim;
    let mut solver = RiccatiSolver::new(rhs, DT_ODE_BASE)?;
    let mut q = params.q0.matrix().as_slice().to_vec();
    let mut deriv = vec![0.0; d * d];
    let mut scratch = vec![0.0; 2 * d * d];
    let t_max = 100.0;
    let window = 1.0;
    let mut elapsed = 0.0;
    while elapsed < t_max {
        solver.advance(&mut q, window)?;
        elapsed += window;
        solver.rhs().eval(&q, &mut deriv, &mut scratch);
        if smallmat::frobenius(&deriv) < 1e-12 {
            return Ok(SymMatrix::from_symmetrized(DMatrix::from_column_slice(d, d, &q)));
        }
    }
    Err(Error::NonConvergence(format!(
        "Riccati flow did not reach stationarity within t = {t_max}"
    )))
}
