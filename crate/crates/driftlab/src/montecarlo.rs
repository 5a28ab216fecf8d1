//! Parallel Monte Carlo harness estimating the filter error statistics
//! E[tr Q_t] and E‖M_t − μ_t‖² across arrival intensities, with the bound
//! comparisons and log-log rate fits used by the convergence studies.
//!
//! Reproducibility: every path owns its noise streams, keyed by
//! (seed, path index, stream), and all reductions are fixed-order pairwise
//! sums, so results are identical for any worker count. Paths are shared
//! across intensities — drift and return noise per path index, arrivals
//! thinned from a pool at the largest intensity — which removes most of the
//! comparison variance between intensities.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::bounds::{bound_constant_j, bound_constant_z, lambda_gate, DEFAULT_B_FRACTION};
use crate::filters::{
    default_dt_ode, run_z_filter, solve_riccati, MeanStepper, Regime, StandardRiccati,
};
use crate::linalg::SymMatrix;
use crate::market::{MarketBundle, SimOptions, TimeGrid};
use crate::params::ModelParams;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Configuration and results
// ---------------------------------------------------------------------------

/// Monte Carlo study configuration.
#[derive(Debug, Clone)]
pub struct MCConfig {
    pub n_paths: usize,
    /// Intensities, strictly increasing.
    pub lambdas: Vec<f64>,
    pub dt_max: f64,
    /// Evaluation times, all in (0, T].
    pub eval_times: Vec<f64>,
    /// Bound anchor δ ≤ min(eval_times).
    pub delta: f64,
    pub seed: u64,
    pub regimes: Vec<Regime>,
}

impl MCConfig {
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_paths must be at least 2, got {}",
                self.n_paths
            )));
        }
        if self.eval_times.is_empty() {
            return Err(Error::InvalidArgument("eval_times must not be empty".into()));
        }
        for &t in &self.eval_times {
            if !(t > 0.0 && t <= params.horizon) {
                return Err(Error::InvalidArgument(format!(
                    "eval time {t} outside (0, {}]",
                    params.horizon
                )));
            }
        }
        let t_min = self.eval_times.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(self.delta > 0.0 && self.delta <= t_min) {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in (0, min eval time = {t_min}], got {}",
                self.delta
            )));
        }
        if self.lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("lambdas must be strictly increasing".into()));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dt_max must be positive, got {}",
                self.dt_max
            )));
        }
        Ok(())
    }

    fn lambda_pool(&self, lambda: f64) -> f64 {
        self.lambdas.iter().cloned().fold(lambda, f64::max)
    }
}

/// Statistics for one (regime, λ, t) cell.
#[derive(Debug, Clone)]
pub struct CellStats {
    pub regime: Regime,
    pub lambda: f64,
    pub t: f64,
    /// Mean of tr Q_t over paths; exact (stderr 0) for the deterministic
    /// covariances of the R and J regimes.
    pub trq_mean: f64,
    pub trq_stderr: f64,
    /// Mean of ‖M_t − μ_t‖² over paths.
    pub mse_mean: f64,
    pub mse_stderr: f64,
    /// C(δ)/√λ where a bound applies (Z and J regimes).
    pub bound: Option<f64>,
    /// Whether the bound's intensity gate is satisfied (Z regime: λ ≥ λ_Q;
    /// J regime: every λ > 0).
    pub gated: Option<bool>,
    pub n_paths: usize,
}

/// Least-squares slope of log trq against log λ at one evaluation time.
#[derive(Debug, Clone)]
pub struct SlopeFit {
    pub regime: Regime,
    pub t: f64,
    pub slope: f64,
}

/// Full convergence-study output.
#[derive(Debug, Clone)]
pub struct MCResult {
    pub cells: Vec<CellStats>,
    pub slopes: Vec<SlopeFit>,
    pub delta: f64,
}

/// Discrepancy report for the mean-square error identity
/// E‖M_t − μ_t‖² = E[tr Q_t] at one evaluation time.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub t: f64,
    pub mse_mean: f64,
    pub trq_mean: f64,
    pub gap: f64,
    pub combined_stderr: f64,
}

// ---------------------------------------------------------------------------
// Deterministic reduction
// ---------------------------------------------------------------------------

/// Fixed-order pairwise summation; the association structure depends only on
/// the length, never on the worker count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Per-regime estimation
// ---------------------------------------------------------------------------

fn eval_indices(grid: &TimeGrid, eval_times: &[f64]) -> Result<Vec<usize>> {
    eval_times
        .iter()
        .map(|&t| {
            grid.index_of(t)
                .ok_or_else(|| Error::Numerical(format!("evaluation time {t} missing from grid")))
        })
        .collect()
}

fn squared_error(m: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    (m - mu).norm_squared()
}

/// Mean propagation along a deterministic covariance path (R and J regimes):
/// the covariance is solved once per study and shared, paths only push the
/// mean vector through precomputed gains.
struct DeterministicRegime {
    grid: TimeGrid,
    eval_idx: Vec<usize>,
    q_at_points: Vec<SymMatrix>,
    j_lambda: Option<f64>,
}

impl DeterministicRegime {
    fn build(params: &ModelParams, config: &MCConfig, j_lambda: Option<f64>) -> Result<Self> {
        let grid = TimeGrid::build(params.horizon, config.dt_max, &[], &config.eval_times)?;
        let eval_idx = eval_indices(&grid, &config.eval_times)?;
        let rhs = StandardRiccati::new(params, j_lambda)?;
        let q_at_points =
            solve_riccati(rhs, params.q0.as_sym(), &grid, default_dt_ode(params, j_lambda)?)?;
        Ok(DeterministicRegime { grid, eval_idx, q_at_points, j_lambda })
    }

    /// ‖M_t − μ_t‖² at the evaluation times for one path.
    fn path_mse(&self, params: &ModelParams, config: &MCConfig, path_index: u64) -> Result<Vec<f64>> {
        let opts = SimOptions {
            dt_max: config.dt_max,
            lambda_max: 0.0,
            extra_times: config.eval_times.clone(),
            continuous_expert: self.j_lambda.is_some(),
        };
        let bundle = MarketBundle::simulate(params, &opts, config.seed, path_index)?;
        let path =
            bundle.realize_channels(self.j_lambda.unwrap_or(0.0), false, self.j_lambda.is_some())?;
        debug_assert_eq!(path.grid.points(), self.grid.points());

        let mut mean = MeanStepper::new(params, self.j_lambda)?;
        let mut m = params.m0.as_slice().to_vec();
        let mut out = vec![0.0; self.eval_idx.len()];
        for (k, &idx) in self.eval_idx.iter().enumerate() {
            if idx == 0 {
                out[k] = squared_error(&params.m0, &path.mu[0]);
            }
        }
        for i in 0..self.grid.n_intervals() {
            let q = self.q_at_points[i].matrix().as_slice();
            let d_j = path.j_increments.as_ref().map(|j| &j[i]);
            mean.step(&mut m, q, self.grid.dt(i), &path.returns[i], d_j);
            let point = i + 1;
            for (k, &idx) in self.eval_idx.iter().enumerate() {
                if idx == point {
                    out[k] = squared_error(&DVector::from_column_slice(&m), &path.mu[point]);
                }
            }
        }
        Ok(out)
    }
}

/// Estimates E[tr Q_t] and E‖M_t − μ_t‖² for one regime at one intensity.
pub fn estimate_regime(
    config: &MCConfig,
    params: &ModelParams,
    lambda: f64,
    regime: Regime,
) -> Result<Vec<CellStats>> {
    config.validate(params)?;
    params.validate()?;
    match regime {
        Regime::R | Regime::J => estimate_deterministic_cov(config, params, lambda, regime),
        Regime::Z => estimate_z(config, params, lambda),
    }
}

fn bound_for(
    params: &ModelParams,
    config: &MCConfig,
    regime: Regime,
    lambda: f64,
) -> Result<(Option<f64>, Option<bool>)> {
    match regime {
        Regime::R => Ok((None, None)),
        Regime::Z => {
            let c = bound_constant_z(params, config.delta)?;
            let gate = lambda_gate(params, config.delta, DEFAULT_B_FRACTION)?;
            Ok((Some(c / lambda.sqrt()), Some(lambda >= gate.lambda_q)))
        }
        Regime::J => {
            let c = bound_constant_j(params, config.delta)?;
            Ok((Some(c / lambda.sqrt()), Some(lambda > 0.0)))
        }
    }
}

fn estimate_deterministic_cov(
    config: &MCConfig,
    params: &ModelParams,
    lambda: f64,
    regime: Regime,
) -> Result<Vec<CellStats>> {
    let j_lambda = match regime {
        Regime::J => {
            if !(lambda > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "continuous-expert regime needs lambda > 0, got {lambda}"
                )));
            }
            Some(lambda)
        }
        _ => None,
    };
    let det = DeterministicRegime::build(params, config, j_lambda)?;

    let per_path: Vec<Result<Vec<f64>>> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|p| {
            det.path_mse(params, config, p)
                .map_err(|e| Error::Numerical(format!("path {p}: {e}")))
        })
        .collect();
    let per_path: Vec<Vec<f64>> = per_path.into_iter().collect::<Result<_>>()?;

    let (bound, gated) = bound_for(params, config, regime, lambda)?;
    let mut cells = Vec::with_capacity(config.eval_times.len());
    for (k, (&t, &idx)) in config.eval_times.iter().zip(&det.eval_idx).enumerate() {
        let msq: Vec<f64> = per_path.iter().map(|v| v[k]).collect();
        let (mse_mean, mse_stderr) = mean_stderr(&msq);
        cells.push(CellStats {
            regime,
            lambda,
            t,
            trq_mean: det.q_at_points[idx].trace(),
            trq_stderr: 0.0,
            mse_mean,
            mse_stderr,
            bound,
            gated,
            n_paths: config.n_paths,
        });
    }
    Ok(cells)
}

fn estimate_z(config: &MCConfig, params: &ModelParams, lambda: f64) -> Result<Vec<CellStats>> {
    let lambda_pool = config.lambda_pool(lambda);
    let opts = SimOptions {
        dt_max: config.dt_max,
        lambda_max: lambda_pool,
        extra_times: config.eval_times.clone(),
        continuous_expert: false,
    };

    let per_path: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<(Vec<f64>, Vec<f64>)> {
            let inner = || -> Result<(Vec<f64>, Vec<f64>)> {
                let bundle = MarketBundle::simulate(params, &opts, config.seed, p)?;
                let path = bundle.realize_channels(lambda, true, false)?;
                let fp = run_z_filter(&path, params)?;
                let idx = eval_indices(&path.grid, &config.eval_times)?;
                let trq = idx.iter().map(|&i| fp.states[i].q.trace()).collect();
                let msq = idx
                    .iter()
                    .map(|&i| squared_error(&fp.states[i].m, &path.mu[i]))
                    .collect();
                Ok((trq, msq))
            };
            inner().map_err(|e| Error::Numerical(format!("path {p}: {e}")))
        })
        .collect();
    let per_path: Vec<(Vec<f64>, Vec<f64>)> = per_path.into_iter().collect::<Result<_>>()?;

    let (bound, gated) = bound_for(params, config, Regime::Z, lambda)?;
    let mut cells = Vec::with_capacity(config.eval_times.len());
    for (k, &t) in config.eval_times.iter().enumerate() {
        let trq: Vec<f64> = per_path.iter().map(|(v, _)| v[k]).collect();
        let msq: Vec<f64> = per_path.iter().map(|(_, v)| v[k]).collect();
        let (trq_mean, trq_stderr) = mean_stderr(&trq);
        let (mse_mean, mse_stderr) = mean_stderr(&msq);
        cells.push(CellStats {
            regime: Regime::Z,
            lambda,
            t,
            trq_mean,
            trq_stderr,
            mse_mean,
            mse_stderr,
            bound,
            gated,
            n_paths: config.n_paths,
        });
    }
    Ok(cells)
}

/// Verifies the tower-law identity E‖M_t − μ_t‖² = E[tr Q_t] for the
/// expert-opinion regime: reports the gap and the combined standard error.
pub fn verify_mse_trace_identity(
    config: &MCConfig,
    params: &ModelParams,
    lambda: f64,
) -> Result<Vec<IdentityCheck>> {
    let cells = estimate_regime(config, params, lambda, Regime::Z)?;
    Ok(cells
        .into_iter()
        .map(|c| IdentityCheck {
            t: c.t,
            mse_mean: c.mse_mean,
            trq_mean: c.trq_mean,
            gap: (c.mse_mean - c.trq_mean).abs(),
            combined_stderr: (c.mse_stderr.powi(2) + c.trq_stderr.powi(2)).sqrt(),
        })
        .collect())
}

/// Runs every (regime, λ) cell and fits the λ-decay rate of tr Q at each
/// evaluation time. Needs at least three intensities spanning two decades.
pub fn convergence_study(config: &MCConfig, params: &ModelParams) -> Result<MCResult> {
    config.validate(params)?;
    if config.lambdas.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need >= 3 intensities for a rate fit, got {}",
            config.lambdas.len()
        )));
    }
    let span = config.lambdas.last().unwrap() / config.lambdas.first().unwrap();
    if span < 100.0 {
        return Err(Error::InvalidArgument(format!(
            "intensities must span at least two decades, got a factor of {span:.3}"
        )));
    }
    if config.regimes.is_empty() {
        return Err(Error::InvalidArgument("no regimes selected".into()));
    }

    let mut cells = Vec::new();
    let mut slopes = Vec::new();
    for &regime in &config.regimes {
        let mut per_lambda = Vec::with_capacity(config.lambdas.len());
        match regime {
            Regime::R => {
                // the return-only filter never sees the expert: one estimate
                // replicated across the requested intensities
                let base = estimate_regime(config, params, config.lambdas[0], Regime::R)?;
                for &lambda in &config.lambdas {
                    let mut copy = base.clone();
                    for c in &mut copy {
                        c.lambda = lambda;
                    }
                    per_lambda.push(copy);
                }
            }
            _ => {
                for &lambda in &config.lambdas {
                    per_lambda.push(estimate_regime(config, params, lambda, regime)?);
                }
            }
        }
        if regime != Regime::R {
            for (k, &t) in config.eval_times.iter().enumerate() {
                let xs: Vec<f64> = config.lambdas.iter().map(|l| l.ln()).collect();
                let ys: Vec<f64> = per_lambda.iter().map(|cells| cells[k].trq_mean.ln()).collect();
                slopes.push(SlopeFit { regime, t, slope: lsq_slope(&xs, &ys) });
            }
        }
        cells.extend(per_lambda.into_iter().flatten());
    }
    Ok(MCResult { cells, slopes, delta: config.delta })
}

impl MCResult {
    pub fn cell(&self, regime: Regime, lambda: f64, t: f64) -> Option<&CellStats> {
        self.cells.iter().find(|c| {
            c.regime == regime
                && (c.lambda - lambda).abs() <= 1e-12 * lambda.max(1.0)
                && (c.t - t).abs() <= 1e-12
        })
    }

    pub fn slope(&self, regime: Regime, t: f64) -> Option<f64> {
        self.slopes
            .iter()
            .find(|s| s.regime == regime && (s.t - t).abs() <= 1e-12)
            .map(|s| s.slope)
    }
}
