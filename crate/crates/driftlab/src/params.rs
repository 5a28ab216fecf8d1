//! Model parameters for the hidden-drift market.
//!
//! The drift follows a mean-reverting Gaussian (Ornstein-Uhlenbeck) process
//! observed only through returns and expert signals. `Default` carries the
//! reference parameter set used throughout the examples and tests: a single
//! risky asset with the drift started in its stationary law.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{SpdMatrix, SymMatrix};
use crate::{Error, Result};

/// All market, drift, expert and initial-filter parameters.
///
/// Volatility factors are stored as matrices (`sigma_mu`, `sigma_r`); the
/// filters consume only the covariances `Σ_μ = σ_μ σ_μᵀ` and
/// `Σ_R = σ_R σ_Rᵀ`. Noise dimensions are fixed square: rectangular factors
/// add no observable behavior through the filters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Number of risky assets d.
    pub dim: usize,
    /// Mean-reversion speed (1/years), positive definite (not necessarily symmetric).
    pub kappa: DMatrix<f64>,
    /// Mean-reversion level (per year).
    pub mu_bar: DVector<f64>,
    /// Drift volatility factor.
    pub sigma_mu: DMatrix<f64>,
    /// Return volatility factor (per sqrt-year).
    pub sigma_r: DMatrix<f64>,
    /// Expert covariance Γ.
    pub gamma: SpdMatrix,
    /// Continuous-expert base covariance.
    pub sigma_j_bar: SpdMatrix,
    /// Filter initial mean.
    pub m0: DVector<f64>,
    /// Filter initial covariance.
    pub q0: SpdMatrix,
    /// Mean of the drift's initial value.
    pub m0_prior: DVector<f64>,
    /// Covariance of the drift's initial value.
    pub q0_prior: SpdMatrix,
    /// Investment horizon T in years.
    pub horizon: f64,
}

impl ModelParams {
    /// Reference single-asset scenario, drift started stationary.
    pub fn reference() -> Self {
        Self::reference_with_dim(1)
    }

    /// Diagonal extension of the reference scenario to dimension `d`.
    pub fn reference_with_dim(d: usize) -> Self {
        assert!(d >= 1);
        let q_stat = 1.0 / 6.0; // sigma_mu^2 / (2 kappa)
        ModelParams {
            dim: d,
            kappa: DMatrix::identity(d, d) * 3.0,
            mu_bar: DVector::from_element(d, 0.1),
            sigma_mu: DMatrix::identity(d, d),
            sigma_r: DMatrix::identity(d, d) * 0.25,
            gamma: SpdMatrix::from_diagonal(&vec![0.05; d]).expect("diagonal spd"),
            sigma_j_bar: SpdMatrix::from_diagonal(&vec![0.05; d]).expect("diagonal spd"),
            m0: DVector::from_element(d, 0.1),
            q0: SpdMatrix::from_diagonal(&vec![q_stat; d]).expect("diagonal spd"),
            m0_prior: DVector::from_element(d, 0.1),
            q0_prior: SpdMatrix::from_diagonal(&vec![q_stat; d]).expect("diagonal spd"),
            horizon: 1.0,
        }
    }

    /// Drift covariance Σ_μ = σ_μ σ_μᵀ.
    pub fn sigma_mu_sq(&self) -> SymMatrix {
        SymMatrix::from_symmetrized(&self.sigma_mu * self.sigma_mu.transpose())
    }

    /// Return covariance Σ_R = σ_R σ_Rᵀ.
    pub fn sigma_r_sq(&self) -> SymMatrix {
        SymMatrix::from_symmetrized(&self.sigma_r * self.sigma_r.transpose())
    }

    /// Inverse return covariance Σ_R⁻¹.
    pub fn sigma_r_sq_inv(&self) -> Result<SpdMatrix> {
        SpdMatrix::from_sym(self.sigma_r_sq())?.inverse()
    }

    /// Inverse of the continuous-expert base covariance.
    pub fn sigma_j_bar_inv(&self) -> Result<SpdMatrix> {
        self.sigma_j_bar.inverse()
    }

    /// Validates dimensions, positive definiteness and the horizon.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::InvalidArgument("asset count must be positive".into()));
        }
        let square = |name: &str, m: &DMatrix<f64>| -> Result<()> {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "{name}: expected {d}x{d}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(())
        };
        let vector = |name: &str, v: &DVector<f64>| -> Result<()> {
            if v.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "{name}: expected length {d}, got {}",
                    v.len()
                )));
            }
            Ok(())
        };
        square("kappa", &self.kappa)?;
        square("sigma_mu", &self.sigma_mu)?;
        square("sigma_r", &self.sigma_r)?;
        vector("mu_bar", &self.mu_bar)?;
        vector("m0", &self.m0)?;
        vector("m0_prior", &self.m0_prior)?;
        for (name, m) in [
            ("gamma", &self.gamma),
            ("sigma_j_bar", &self.sigma_j_bar),
            ("q0", &self.q0),
            ("q0_prior", &self.q0_prior),
        ] {
            if m.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "{name}: expected {d}x{d}, got {0}x{0}",
                    m.dim()
                )));
            }
        }

        // kappa positive definite in the quadratic-form sense: kappa + kappaᵀ ≻ 0.
        let kappa_sym = SymMatrix::from_symmetrized(self.kappa.clone() + self.kappa.transpose());
        if kappa_sym.min_eigenvalue()? <= 0.0 {
            return Err(Error::InvalidArgument(
                "kappa must be positive definite (kappa + kappa' has a nonpositive eigenvalue)".into(),
            ));
        }
        SpdMatrix::new_definite(self.sigma_mu_sq().matrix().clone())
            .map_err(|_| Error::InvalidArgument("sigma_mu must give positive definite drift covariance".into()))?;
        SpdMatrix::new_definite(self.sigma_r_sq().matrix().clone())
            .map_err(|_| Error::InvalidArgument("sigma_r must give positive definite return covariance".into()))?;
        SpdMatrix::new_definite(self.gamma.matrix().clone())
            .map_err(|_| Error::InvalidArgument("gamma must be positive definite".into()))?;
        SpdMatrix::new_definite(self.sigma_j_bar.matrix().clone())
            .map_err(|_| Error::InvalidArgument("sigma_j_bar must be positive definite".into()))?;
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}
