//! Market simulation: hidden mean-reverting drift, returns, Poisson-arrival
//! expert opinions and the continuous-time expert, all on a shared
//! event-augmented time grid.

mod ou;

pub use ou::{expm, ou_cov, ou_mean, ou_noise_integral, OuStepper, OuTransition};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Exp, StandardNormal};

use crate::params::ModelParams;
use crate::{Error, Result};

/// Time tolerance for merging grid points.
pub const TIME_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Reproducible noise streams
// ---------------------------------------------------------------------------

/// Independent noise streams owned by one simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseStream {
    Drift = 0,
    Returns = 1,
    Arrivals = 2,
    Expert = 3,
    JExpert = 4,
}

/// Derives the RNG for `(seed, path_index, stream)`. Streams are pairwise
/// independent, so results do not depend on worker scheduling.
pub fn stream_rng(seed: u64, path_index: u64, stream: NoiseStream) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(path_index.wrapping_mul(8).wrapping_add(stream as u64));
    rng
}

fn standard_normal_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

// ---------------------------------------------------------------------------
// Time grid
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFlag {
    None,
    ExpertArrival,
}

/// Strictly increasing grid from 0 to the horizon with per-point event flags.
/// Expert arrival times appear exactly once as grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    flags: Vec<EventFlag>,
}

impl TimeGrid {
    /// Uniform mesh of spacing ≤ `dt_max` merged with `arrivals` (flagged)
    /// and `extra` points (unflagged), deduplicated at the time tolerance.
    pub fn build(horizon: f64, dt_max: f64, arrivals: &[f64], extra: &[f64]) -> Result<Self> {
        if !(dt_max > 0.0) {
            return Err(Error::InvalidArgument(format!("dt_max must be positive, got {dt_max}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        for &t in arrivals.iter().chain(extra) {
            if t < -TIME_TOL || t > horizon + TIME_TOL {
                return Err(Error::InvalidArgument(format!(
                    "grid point {t} outside [0, {horizon}]"
                )));
            }
        }
        let n = (horizon / dt_max).ceil().max(1.0) as usize;
        // (time, is_arrival, is_endpoint)
        let mut entries: Vec<(f64, bool, bool)> = Vec::with_capacity(n + 1 + arrivals.len() + extra.len());
        for i in 0..=n {
            let t = if i == n { horizon } else { horizon * i as f64 / n as f64 };
            entries.push((t, false, i == 0 || i == n));
        }
        entries.extend(extra.iter().map(|&t| (t, false, false)));
        entries.extend(arrivals.iter().map(|&t| (t, true, false)));
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut points = Vec::with_capacity(entries.len());
        let mut flags = Vec::with_capacity(entries.len());
        for (t, arrival, endpoint) in entries {
            match points.last().copied() {
                Some(last) if t - last <= TIME_TOL => {
                    // merge into the previous point; endpoints keep their exact value
                    if endpoint {
                        *points.last_mut().unwrap() = t;
                    }
                    if arrival {
                        *flags.last_mut().unwrap() = EventFlag::ExpertArrival;
                    }
                }
                _ => {
                    points.push(t);
                    flags.push(if arrival { EventFlag::ExpertArrival } else { EventFlag::None });
                }
            }
        }
        // no opinion arrives at time zero: an arrival merged into the origin
        // would sit before the first filter step
        flags[0] = EventFlag::None;
        debug_assert!(points.windows(2).all(|w| w[1] > w[0]));
        Ok(TimeGrid { points, flags })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().expect("grid is never empty")
    }

    pub fn dt(&self, interval: usize) -> f64 {
        self.points[interval + 1] - self.points[interval]
    }

    pub fn flag(&self, i: usize) -> EventFlag {
        self.flags[i]
    }

    pub fn is_arrival(&self, i: usize) -> bool {
        self.flags[i] == EventFlag::ExpertArrival
    }

    pub fn arrival_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_arrival(i)).collect()
    }

    /// Index of the grid point at time `t`, within the merge tolerance.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.points.partition_point(|&p| p < t - TIME_TOL);
        (i < self.points.len() && (self.points[i] - t).abs() <= TIME_TOL).then_some(i)
    }

    /// Same points with a different arrival set (used when realizing one
    /// thinned intensity out of a shared candidate pool).
    pub(crate) fn with_arrivals(&self, arrival_indices: &[usize]) -> TimeGrid {
        let mut flags = vec![EventFlag::None; self.points.len()];
        for &i in arrival_indices {
            flags[i] = EventFlag::ExpertArrival;
        }
        TimeGrid { points: self.points.clone(), flags }
    }
}

/// Grid construction from model horizon, mesh width and arrival times.
pub fn build_grid(params: &ModelParams, dt_max: f64, arrivals: &[f64]) -> Result<TimeGrid> {
    TimeGrid::build(params.horizon, dt_max, arrivals, &[])
}

// ---------------------------------------------------------------------------
// Market path
// ---------------------------------------------------------------------------

/// RNG provenance of one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathSeed {
    pub seed: u64,
    pub path_index: u64,
}

/// One expert opinion: a noisy unbiased observation of the drift received at
/// a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertEvent {
    pub grid_index: usize,
    pub time: f64,
    pub value: DVector<f64>,
}

/// One simulated trajectory: drift, return increments, expert events and the
/// continuous-expert increments, on a shared grid.
#[derive(Debug, Clone)]
pub struct MarketPath {
    pub grid: TimeGrid,
    /// Hidden drift per grid point.
    pub mu: Vec<DVector<f64>>,
    /// Return increments per interval.
    pub returns: Vec<DVector<f64>>,
    /// Expert opinions, ordered by time; their times match flagged grid points.
    pub expert_events: Vec<ExpertEvent>,
    /// Continuous-expert increments per interval, when that channel is on.
    pub j_increments: Option<Vec<DVector<f64>>>,
    /// Arrival intensity the path was realized at.
    pub lambda: f64,
    pub origin: PathSeed,
}

impl MarketPath {
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if self.mu.len() != n {
            return Err(Error::DimensionMismatch("drift length differs from grid".into()));
        }
        if self.returns.len() != n - 1 {
            return Err(Error::DimensionMismatch("returns length differs from intervals".into()));
        }
        if let Some(j) = &self.j_increments {
            if j.len() != n - 1 {
                return Err(Error::DimensionMismatch("j increments length differs from intervals".into()));
            }
        }
        for ev in &self.expert_events {
            if !self.grid.is_arrival(ev.grid_index) {
                return Err(Error::InvalidArgument(format!(
                    "expert event at t={} not flagged on the grid",
                    ev.time
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Simulation operations
// ---------------------------------------------------------------------------

/// Poisson arrival times on (0, horizon]: i.i.d. exponential gaps accumulated
/// until the horizon is passed. Empty for lambda = 0.
pub fn simulate_arrivals<R: Rng + ?Sized>(lambda: f64, horizon: f64, rng: &mut R) -> Result<Vec<f64>> {
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
    }
    let mut arrivals = Vec::new();
    if lambda == 0.0 {
        return Ok(arrivals);
    }
    let exp = Exp::new(lambda).map_err(|e| Error::InvalidArgument(format!("exp({lambda}): {e}")))?;
    let mut t = 0.0;
    loop {
        t += rng.sample(exp);
        if t > horizon {
            break;
        }
        arrivals.push(t);
    }
    Ok(arrivals)
}

/// Hidden drift on the grid via the exact Gaussian transition; no Euler bias.
pub fn simulate_drift<R: Rng + ?Sized>(
    params: &ModelParams,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    let mut stepper = OuStepper::new(params);
    let q0_sqrt = params.q0_prior.sqrt()?;
    let mut mu = Vec::with_capacity(grid.len());
    let xi = standard_normal_vector(params.dim, rng);
    mu.push(&params.m0_prior + q0_sqrt.matrix() * xi);
    for i in 0..grid.n_intervals() {
        let next = stepper.step(&mu[i], grid.dt(i), rng)?;
        mu.push(next);
    }
    Ok(mu)
}

/// Return increments ΔR_i = μ_{t_i} Δ_i + σ_R √Δ_i ξ_i.
pub fn simulate_returns<R: Rng + ?Sized>(
    params: &ModelParams,
    grid: &TimeGrid,
    mu: &[DVector<f64>],
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    if mu.len() != grid.len() {
        return Err(Error::DimensionMismatch("drift path length differs from grid".into()));
    }
    let mut out = Vec::with_capacity(grid.n_intervals());
    for i in 0..grid.n_intervals() {
        let dt = grid.dt(i);
        let xi = standard_normal_vector(params.dim, rng);
        out.push(&mu[i] * dt + &params.sigma_r * xi * dt.sqrt());
    }
    Ok(out)
}

/// Expert opinions Z_k = μ_{T_k} + Γ^{1/2} ε_k at the given arrival times,
/// which must already be grid points.
pub fn generate_expert_opinions<R: Rng + ?Sized>(
    params: &ModelParams,
    grid: &TimeGrid,
    mu: &[DVector<f64>],
    arrivals: &[f64],
    rng: &mut R,
) -> Result<Vec<ExpertEvent>> {
    let gamma_sqrt = params.gamma.sqrt()?;
    let mut events = Vec::with_capacity(arrivals.len());
    for &t in arrivals {
        let idx = grid
            .index_of(t)
            .ok_or_else(|| Error::InvalidArgument(format!("arrival {t} is not a grid point")))?;
        let eps = standard_normal_vector(params.dim, rng);
        events.push(ExpertEvent {
            grid_index: idx,
            time: grid.point(idx),
            value: &mu[idx] + gamma_sqrt.matrix() * eps,
        });
    }
    Ok(events)
}

/// Continuous-expert increments ΔJ_i = μ_{t_i} Δ_i + λ^{-1/2} σ̄_J √Δ_i ζ_i.
pub fn simulate_continuous_expert<R: Rng + ?Sized>(
    params: &ModelParams,
    grid: &TimeGrid,
    mu: &[DVector<f64>],
    lambda: f64,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let sigma_j = params.sigma_j_bar.sqrt()?;
    let scale = lambda.sqrt().recip();
    let mut out = Vec::with_capacity(grid.n_intervals());
    for i in 0..grid.n_intervals() {
        let dt = grid.dt(i);
        let zeta = standard_normal_vector(params.dim, rng);
        out.push(&mu[i] * dt + sigma_j.matrix() * zeta * (scale * dt.sqrt()));
    }
    Ok(out)
}

/// log S_t = log s0 + R_t − ½ Σ_j (σ_R^{ij})² t per component, with R_t the
/// cumulative sum of increments.
pub fn returns_to_log_prices(
    grid: &TimeGrid,
    returns: &[DVector<f64>],
    sigma_r: &DMatrix<f64>,
    s0: &DVector<f64>,
) -> Result<Vec<DVector<f64>>> {
    if returns.len() != grid.n_intervals() {
        return Err(Error::DimensionMismatch("returns length differs from intervals".into()));
    }
    if s0.iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidArgument("initial prices must be positive".into()));
    }
    let d = s0.len();
    let row_sq = DVector::from_fn(d, |i, _| (0..sigma_r.ncols()).map(|j| sigma_r[(i, j)].powi(2)).sum::<f64>());
    let log_s0 = s0.map(f64::ln);
    let mut cum = DVector::zeros(d);
    let mut out = Vec::with_capacity(grid.len());
    out.push(log_s0.clone());
    for i in 0..grid.n_intervals() {
        cum += &returns[i];
        let t = grid.point(i + 1);
        out.push(&log_s0 + &cum - &row_sq * (0.5 * t));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Coupled simulation across intensities
// ---------------------------------------------------------------------------

/// Options for one coupled market simulation.
#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Base mesh spacing.
    pub dt_max: f64,
    /// Intensity of the candidate arrival pool; realizations at λ ≤ λ_max
    /// thin this pool so paths stay comparable across intensities.
    pub lambda_max: f64,
    /// Additional grid points (evaluation times).
    pub extra_times: Vec<f64>,
    /// Whether to draw continuous-expert noise.
    pub continuous_expert: bool,
}

impl SimOptions {
    pub fn new(dt_max: f64, lambda_max: f64) -> Self {
        SimOptions { dt_max, lambda_max, extra_times: Vec::new(), continuous_expert: false }
    }
}

/// One candidate expert opinion drawn at the pool intensity, kept by a
/// realization at intensity λ iff mark ≤ λ/λ_max.
#[derive(Debug, Clone)]
struct ArrivalCandidate {
    grid_index: usize,
    time: f64,
    value: DVector<f64>,
    mark: f64,
}

/// A simulated market with all noise channels drawn once, from which
/// `MarketPath`s at any intensity λ ≤ λ_max can be realized with shared
/// randomness (common drift and return noise, thinned arrivals).
#[derive(Debug, Clone)]
pub struct MarketBundle {
    grid: TimeGrid,
    mu: Vec<DVector<f64>>,
    returns: Vec<DVector<f64>>,
    candidates: Vec<ArrivalCandidate>,
    /// μ_{t_i} Δ_i per interval (drift part of ΔJ).
    j_drift: Option<Vec<DVector<f64>>>,
    /// σ̄_J √Δ_i ζ_i per interval (unit-intensity noise part of ΔJ).
    j_noise: Option<Vec<DVector<f64>>>,
    lambda_max: f64,
    origin: PathSeed,
}

impl MarketBundle {
    pub fn simulate(params: &ModelParams, opts: &SimOptions, seed: u64, path_index: u64) -> Result<Self> {
        let origin = PathSeed { seed, path_index };
        let mut arrivals_rng = stream_rng(seed, path_index, NoiseStream::Arrivals);
        let mut candidate_times =
            simulate_arrivals(opts.lambda_max, params.horizon, &mut arrivals_rng)?;
        // an arrival inside the merge tolerance of t = 0 would land on the
        // origin, which carries no filter step
        candidate_times.retain(|&t| t > TIME_TOL);
        let marks: Vec<f64> = (0..candidate_times.len()).map(|_| arrivals_rng.gen::<f64>()).collect();

        let grid = TimeGrid::build(params.horizon, opts.dt_max, &candidate_times, &opts.extra_times)?;

        let mut drift_rng = stream_rng(seed, path_index, NoiseStream::Drift);
        let mu = simulate_drift(params, &grid, &mut drift_rng)?;

        let mut returns_rng = stream_rng(seed, path_index, NoiseStream::Returns);
        let returns = simulate_returns(params, &grid, &mu, &mut returns_rng)?;

        let mut expert_rng = stream_rng(seed, path_index, NoiseStream::Expert);
        let events = generate_expert_opinions(params, &grid, &mu, &candidate_times, &mut expert_rng)?;
        let candidates = events
            .into_iter()
            .zip(marks)
            .map(|(ev, mark)| ArrivalCandidate {
                grid_index: ev.grid_index,
                time: ev.time,
                value: ev.value,
                mark,
            })
            .collect();

        let (j_drift, j_noise) = if opts.continuous_expert {
            let sigma_j = params.sigma_j_bar.sqrt()?;
            let mut j_rng = stream_rng(seed, path_index, NoiseStream::JExpert);
            let mut drift_part = Vec::with_capacity(grid.n_intervals());
            let mut noise_part = Vec::with_capacity(grid.n_intervals());
            for i in 0..grid.n_intervals() {
                let dt = grid.dt(i);
                let zeta = standard_normal_vector(params.dim, &mut j_rng);
                drift_part.push(&mu[i] * dt);
                noise_part.push(sigma_j.matrix() * zeta * dt.sqrt());
            }
            (Some(drift_part), Some(noise_part))
        } else {
            (None, None)
        };

        Ok(MarketBundle {
            grid,
            mu,
            returns,
            candidates,
            j_drift,
            j_noise,
            lambda_max: opts.lambda_max,
            origin,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn mu(&self) -> &[DVector<f64>] {
        &self.mu
    }

    /// Market path at intensity λ ≤ λ_max with both channels on (when drawn).
    /// Candidates with mark ≤ λ/λ_max are kept, so realizations at increasing
    /// λ observe nested arrival sets.
    pub fn realize(&self, lambda: f64) -> Result<MarketPath> {
        self.realize_channels(lambda, true, self.j_noise.is_some() && lambda > 0.0)
    }

    /// Market path at intensity λ with explicit channel selection. The expert
    /// channel thins the candidate pool and requires λ ≤ λ_max; the
    /// continuous channel requires λ > 0 and drawn continuous-expert noise.
    pub fn realize_channels(&self, lambda: f64, expert: bool, continuous: bool) -> Result<MarketPath> {
        if lambda < 0.0 {
            return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
        }
        let (grid, expert_events) = if expert {
            if lambda > self.lambda_max {
                return Err(Error::InvalidArgument(format!(
                    "lambda {lambda} exceeds the candidate pool intensity {}",
                    self.lambda_max
                )));
            }
            let keep = if self.lambda_max == 0.0 { 0.0 } else { lambda / self.lambda_max };
            let kept: Vec<&ArrivalCandidate> =
                self.candidates.iter().filter(|c| c.mark <= keep).collect();
            let grid = self
                .grid
                .with_arrivals(&kept.iter().map(|c| c.grid_index).collect::<Vec<_>>());
            let events = kept
                .iter()
                .map(|c| ExpertEvent { grid_index: c.grid_index, time: c.time, value: c.value.clone() })
                .collect();
            (grid, events)
        } else {
            (self.grid.clone(), Vec::new())
        };
        let j_increments = if continuous {
            match (&self.j_drift, &self.j_noise) {
                (Some(drift), Some(noise)) if lambda > 0.0 => {
                    let scale = lambda.sqrt().recip();
                    Some(
                        drift
                            .iter()
                            .zip(noise)
                            .map(|(d, n)| d + n * scale)
                            .collect::<Vec<_>>(),
                    )
                }
                (None, _) | (_, None) => {
                    return Err(Error::InvalidArgument(
                        "continuous-expert channel requested but not drawn".into(),
                    ))
                }
                _ => {
                    return Err(Error::InvalidArgument(
                        "continuous-expert channel needs lambda > 0".into(),
                    ))
                }
            }
        } else {
            None
        };
        Ok(MarketPath {
            grid,
            mu: self.mu.clone(),
            returns: self.returns.clone(),
            expert_events,
            j_increments,
            lambda,
            origin: self.origin,
        })
    }
}
