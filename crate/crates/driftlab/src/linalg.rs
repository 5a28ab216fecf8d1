//! Dense symmetric-matrix kernel: PSD checks, square roots, SPD inversion,
//! Loewner ordering and the trace inequalities used by the bound machinery.
//!
//! Eigendecomposition (symmetric solver) is the single primitive behind
//! square roots, PSD checks and Loewner comparisons. Dimensions stay small
//! here (d ≲ 10), so robustness wins over speed. All tolerances are relative
//! to matrix scale to stay unit-free.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Relative asymmetry accepted before construction fails.
const SYM_TOL: f64 = 1e-9;
/// Sweep cap for the Jacobi eigensolver.
const JACOBI_MAX_SWEEPS: usize = 64;

/// Symmetric eigendecomposition by cyclic Jacobi rotations, eigenvalues
/// ascending. Jacobi converges to working precision for the small dense
/// matrices used here and keeps the eigenvector basis orthogonal, which the
/// square roots and PSD projections downstream depend on.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let d = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(d, d);
    let scale = m.norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if (2.0 * off).sqrt() <= f64::EPSILON * scale {
            let mut idx: Vec<usize> = (0..d).collect();
            idx.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
            let values = DVector::from_iterator(d, idx.iter().map(|&i| a[(i, i)]));
            let vectors =
                DMatrix::from_columns(&idx.iter().map(|&i| v.column(i)).collect::<Vec<_>>());
            return Ok((values, vectors));
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq.abs() <= f64::EPSILON * scale * 1e-2 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Numerical("Jacobi eigensolver did not converge".into()))
}

// ---------------------------------------------------------------------------
// SymMatrix
// ---------------------------------------------------------------------------

/// A symmetric d×d matrix. Symmetry is enforced on construction by averaging
/// with the transpose, then asserted exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
        }
        let scale = entries.iter().fold(1.0_f64, |acc, &x| acc.max(x.abs()));
        let asym = (&entries - entries.transpose()).abs().max();
        if asym > SYM_TOL * scale {
            return Err(Error::NotSymmetric(format!(
                "max |a_ij - a_ji| = {asym:.3e} exceeds {:.3e}",
                SYM_TOL * scale
            )));
        }
        let sym = (&entries + entries.transpose()) * 0.5;
        debug_assert_eq!(sym, sym.transpose());
        Ok(Self { inner: sym })
    }

    /// Row-major construction.
    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self { inner: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { inner: DMatrix::identity(dim, dim) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self { inner: DMatrix::from_diagonal(&DVector::from_row_slice(diag)) }
    }

    /// Symmetrize an already nearly-symmetric matrix without the asymmetry
    /// check; used by integrators where roundoff is the only skew source.
    pub(crate) fn from_symmetrized(m: DMatrix<f64>) -> Self {
        let sym = (&m + m.transpose()) * 0.5;
        Self { inner: sym }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    /// Entrywise Euclidean norm, sqrt(Σ a_ij²).
    pub fn frobenius(&self) -> f64 {
        self.inner.norm()
    }

    pub fn eigenvalues(&self) -> Result<DVector<f64>> {
        Ok(sym_eigen(&self.inner)?.0)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Unit-free magnitude used for relative tolerances.
    pub fn unit_scale(&self) -> f64 {
        (self.trace().abs() / self.dim() as f64).max(1.0)
    }
}

impl std::ops::Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in SymMatrix add");
        SymMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl std::ops::Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in SymMatrix sub");
        SymMatrix { inner: &self.inner - &rhs.inner }
    }
}

impl std::ops::Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        SymMatrix { inner: &self.inner * rhs }
    }
}

// ---------------------------------------------------------------------------
// SpdMatrix
// ---------------------------------------------------------------------------

/// A symmetric positive-semidefinite matrix. Eigenvalues are allowed to dip
/// to -psd_tol, with psd_tol = 1e-10 · max(1, largest |eigenvalue|);
/// covariances drift slightly negative under discretization and the
/// constructor absorbs that.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    sym: SymMatrix,
}

/// PSD slack relative to the spectral radius.
pub fn psd_tol(max_abs_eigenvalue: f64) -> f64 {
    1e-10 * max_abs_eigenvalue.abs().max(1.0)
}

/// Positive-definiteness threshold relative to matrix scale (trace/d).
pub fn definite_tol(trace: f64, dim: usize) -> f64 {
    1e-12 * (trace / dim as f64).abs()
}

impl SpdMatrix {
    /// Positive-semidefinite constructor.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::from_sym(SymMatrix::new(entries)?)
    }

    pub fn from_sym(sym: SymMatrix) -> Result<Self> {
        let eig = sym.eigenvalues()?;
        let max_abs = eig.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()));
        if eig[0] < -psd_tol(max_abs) {
            return Err(Error::NotPositiveSemidefinite(format!(
                "smallest eigenvalue {:.6e} below -{:.3e}",
                eig[0],
                psd_tol(max_abs)
            )));
        }
        Ok(Self { sym })
    }

    /// Strictly positive-definite constructor.
    pub fn new_definite(entries: DMatrix<f64>) -> Result<Self> {
        let sym = SymMatrix::new(entries)?;
        let min = sym.min_eigenvalue()?;
        if min <= definite_tol(sym.trace(), sym.dim()) {
            return Err(Error::Singular(format!(
                "smallest eigenvalue {min:.6e} not strictly positive"
            )));
        }
        Ok(Self { sym })
    }

    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::from_sym(SymMatrix::from_row_slice(dim, entries)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self { sym: SymMatrix::identity(dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { sym: SymMatrix::zeros(dim) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_sym(SymMatrix::from_diagonal(diag))
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.sym
    }

    pub fn into_sym(self) -> SymMatrix {
        self.sym
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.sym.matrix()
    }

    pub fn trace(&self) -> f64 {
        self.sym.trace()
    }

    pub fn frobenius(&self) -> f64 {
        self.sym.frobenius()
    }

    /// The unique symmetric PSD square root, via eigendecomposition with
    /// negative eigenvalues clamped to zero.
    pub fn sqrt(&self) -> Result<SpdMatrix> {
        let (values, vectors) = sym_eigen(self.sym.matrix())?;
        let roots = DVector::from_iterator(values.len(), values.iter().map(|&v| v.max(0.0).sqrt()));
        let root = &vectors * DMatrix::from_diagonal(&roots) * vectors.transpose();
        Ok(SpdMatrix { sym: SymMatrix::from_symmetrized(root) })
    }

    /// Inverse via the symmetric eigendecomposition; requires strict positive
    /// definiteness.
    pub fn inverse(&self) -> Result<SpdMatrix> {
        let (values, vectors) = sym_eigen(self.sym.matrix())?;
        let tol = definite_tol(self.trace(), self.dim());
        if values[0] <= tol {
            return Err(Error::Singular(format!(
                "smallest eigenvalue {:.6e} below definite tolerance {tol:.3e}",
                values[0]
            )));
        }
        let recip = DVector::from_iterator(values.len(), values.iter().map(|&v| 1.0 / v));
        let inv = &vectors * DMatrix::from_diagonal(&recip) * vectors.transpose();
        Ok(SpdMatrix { sym: SymMatrix::from_symmetrized(inv) })
    }
}

// ---------------------------------------------------------------------------
// Loewner ordering and trace properties
// ---------------------------------------------------------------------------

/// True iff a ⪯ b up to `tol`, i.e. the smallest eigenvalue of b − a is
/// at least −tol.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "loewner_leq: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let diff = b - a;
    Ok(diff.min_eigenvalue()? >= -tol)
}

/// One verified property of a symmetric PSD pair.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Smallest slack across the property's inequalities, in units of the
    /// compared quantities (negative = violated beyond tolerance).
    pub margin: f64,
}

/// Pass/fail report for the symmetric-PSD matrix properties.
#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn min_margin(&self) -> f64 {
        self.checks.iter().fold(f64::INFINITY, |acc, c| acc.min(c.margin))
    }
}

impl std::fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {} (margin {:.3e})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.margin
            )?;
        }
        Ok(())
    }
}

const PROP_TOL: f64 = 1e-9;

fn rel_check(lhs_minus_rhs: f64, scale: f64) -> (bool, f64) {
    let tol = PROP_TOL * scale.max(1.0);
    (lhs_minus_rhs >= -tol, lhs_minus_rhs)
}

/// Evaluates the closure properties and trace inequalities of symmetric PSD
/// pairs: closure under addition, spectral decomposition, SPD inverse,
/// eigenvalue trace bounds, trace-product bounds, trace-square bounds and
/// the Frobenius-trace bound. Reports pass/fail and margins per property.
pub fn check_trace_properties(a: &SpdMatrix, b: &SpdMatrix) -> Result<PropertyReport> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "check_trace_properties: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let d = a.dim() as f64;
    let mut checks = Vec::with_capacity(7);

    // 1. a + b stays PSD.
    let sum = a.as_sym() + b.as_sym();
    let sum_min = sum.min_eigenvalue()?;
    let scale1 = sum.unit_scale();
    checks.push(PropertyCheck {
        name: "sum_psd",
        pass: sum_min >= -PROP_TOL * scale1,
        margin: sum_min,
    });

    // 2. nonnegative spectrum and orthogonal diagonalization reconstructs a.
    let (values, vectors) = sym_eigen(a.matrix())?;
    let recon = &vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
    let recon_err = (recon - a.matrix()).norm();
    let max_abs = values.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()));
    let spectrum_ok = values[0] >= -psd_tol(max_abs);
    let scale2 = a.frobenius().max(1.0);
    checks.push(PropertyCheck {
        name: "diagonalizable_nonneg_spectrum",
        pass: spectrum_ok && recon_err <= PROP_TOL * scale2,
        margin: PROP_TOL * scale2 - recon_err,
    });

    // 3. the inverse of a PD matrix is symmetric PD (a·a⁻¹ = I).
    let inv = a.inverse()?;
    let inv_min = inv.as_sym().min_eigenvalue()?;
    let id_err = (a.matrix() * inv.matrix() - DMatrix::identity(a.dim(), a.dim())).norm();
    checks.push(PropertyCheck {
        name: "inverse_spd",
        pass: inv_min > 0.0 && id_err <= PROP_TOL * (d.sqrt() * a.matrix().norm() * inv.matrix().norm()).max(1.0),
        margin: inv_min,
    });

    let tr_a = a.trace();
    let tr_b = b.trace();
    let tr_ab = (a.matrix() * b.matrix()).trace();
    let rho_min = values[0];
    let rho_max = values[values.len() - 1];

    // 4. ρ_min(a)·tr(b) ≤ tr(ab) ≤ ρ_max(a)·tr(b)
    let scale4 = tr_ab.abs().max(rho_max * tr_b);
    let (lo_ok, lo_m) = rel_check(tr_ab - rho_min * tr_b, scale4);
    let (hi_ok, hi_m) = rel_check(rho_max * tr_b - tr_ab, scale4);
    checks.push(PropertyCheck {
        name: "eigenvalue_trace_bounds",
        pass: lo_ok && hi_ok,
        margin: lo_m.min(hi_m),
    });

    // 5. tr(b)/tr(a⁻¹) ≤ tr(ab) ≤ tr(a)·tr(b)
    let tr_ainv = inv.trace();
    let scale5 = tr_ab.abs().max(tr_a * tr_b);
    let (lo_ok, lo_m) = rel_check(tr_ab - tr_b / tr_ainv, scale5);
    let (hi_ok, hi_m) = rel_check(tr_a * tr_b - tr_ab, scale5);
    checks.push(PropertyCheck {
        name: "trace_product_bounds",
        pass: lo_ok && hi_ok,
        margin: lo_m.min(hi_m),
    });

    // 6. tr²(a) ≥ tr(a²) ≥ tr²(a)/d
    let tr_a2 = (a.matrix() * a.matrix()).trace();
    let scale6 = tr_a * tr_a;
    let (lo_ok, lo_m) = rel_check(tr_a * tr_a - tr_a2, scale6);
    let (hi_ok, hi_m) = rel_check(tr_a2 - tr_a * tr_a / d, scale6);
    checks.push(PropertyCheck {
        name: "trace_square_bounds",
        pass: lo_ok && hi_ok,
        margin: lo_m.min(hi_m),
    });

    // 7. ‖a‖_F = sqrt(tr(a²)) ≤ tr(a)
    let scale7 = tr_a.abs();
    let (f_ok, f_m) = rel_check(tr_a - a.frobenius(), scale7);
    let consistent = (a.frobenius() - tr_a2.max(0.0).sqrt()).abs() <= PROP_TOL * scale7.max(1.0);
    checks.push(PropertyCheck {
        name: "frobenius_trace_bound",
        pass: f_ok && consistent,
        margin: f_m,
    });

    Ok(PropertyReport { checks })
}

/// Random PSD matrix GᵀG with standard normal G entries.
pub fn random_psd<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> SpdMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let gtg = g.transpose() * &g;
    SpdMatrix { sym: SymMatrix::from_symmetrized(gtg) }
}
