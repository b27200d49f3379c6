//! Dense complex operators on finite-dimensional composite Hilbert spaces.
//!
//! Composite basis states |n_1, ..., n_N> map to the flat index
//! `sum_k n_k * prod_{m > k} d_m`, i.e. the leftmost factor is the most
//! significant digit. [`kron`] and [`embed_site`] follow that convention.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entrywise Hermiticity tolerance `|A - A^dagger|_max`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation of a density-matrix trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted in a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Eigenvalue floor used by [`matrix_log_pinv`].
pub const LOG_FLOOR: f64 = 1e-14;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Numerical tolerances shared by validation and the steady-state solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace: f64,
    pub positivity: f64,
    pub log_floor: f64,
    /// Max-norm bound on the generator applied to a steady state.
    pub residual: f64,
    /// Relative null-space indicator below which a steady state is declared non-unique.
    pub null_space: f64,
    /// Positivity tolerance for snapshots along an integrated trajectory.
    pub trajectory_positivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: HERMITIAN_TOL,
            trace: TRACE_TOL,
            positivity: POSITIVITY_TOL,
            log_floor: LOG_FLOOR,
            residual: 1e-10,
            null_space: 1e-12,
            trajectory_positivity: 1e-6,
        }
    }
}

/// A dense complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<Complex64>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square and non-empty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { mat })
    }

    /// Builds an operator and checks Hermiticity within [`HERMITIAN_TOL`].
    pub fn hermitian(mat: DMatrix<Complex64>) -> Result<Self> {
        let op = Self::from_matrix(mat)?;
        let deviation = op.hermiticity_error();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(op)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self {
            mat: DMatrix::from_fn(dim, dim, f),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| ZERO)
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// The projector |i><i| (or the ket-bra |row><col| in general).
    pub fn ket_bra(dim: usize, row: usize, col: usize) -> Self {
        let mut op = Self::zeros(dim);
        op.mat[(row, col)] = ONE;
        op
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.mat[(row, col)]
    }

    pub(crate) fn get_mut(&mut self, row: usize, col: usize) -> &mut Complex64 {
        &mut self.mat[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.mat[(i, i)]).collect()
    }

    pub fn real_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.mat[(i, j)] == ZERO))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            mat: &self.mat * factor,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Returns `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            mat: (&self.mat + self.mat.adjoint()) * Complex64::new(0.5, 0.0),
        }
    }

    pub fn checked_mul(&self, other: &Operator) -> Result<Operator> {
        same_dim(self, other, "product")?;
        Ok(Self {
            mat: &self.mat * &other.mat,
        })
    }

    /// Eigen-decomposition of a Hermitian operator: ascending real eigenvalues
    /// and the unitary whose columns are the eigenvectors.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
        let deviation = self.hermiticity_error();
        if deviation > HERMITIAN_TOL * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        let eig = SymmetricEigen::new(self.hermitian_part().mat);
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
        Ok((values, vectors))
    }

    /// Applies a real function to the spectrum of a Hermitian operator.
    pub fn hermitian_map(&self, f: impl Fn(f64) -> f64) -> Result<Operator> {
        let (values, vectors) = self.hermitian_eigen()?;
        let mapped: Vec<Complex64> = values.iter().map(|&v| Complex64::new(f(v), 0.0)).collect();
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(mapped));
        Ok(Self {
            mat: &vectors * diag * vectors.adjoint(),
        })
    }
}

fn same_dim(a: &Operator, b: &Operator, what: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { mat: -&self.mat }
    }
}

/// A validated density matrix: Hermitian, unit trace, numerically positive.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
    min_eigenvalue: f64,
}

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerances(op, &Tolerances::default())
    }

    pub fn with_tolerances(op: Operator, tol: &Tolerances) -> Result<Self> {
        let herm = op.hermiticity_error();
        if herm > tol.hermitian {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian: deviation {herm:e}"
            )));
        }
        let trace = op.trace();
        if (trace.re - 1.0).abs() > tol.trace || trace.im.abs() > tol.trace {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {trace} differs from 1"
            )));
        }
        let (values, _) = op.hermitian_eigen()?;
        let min_eigenvalue = values[0];
        if min_eigenvalue < -tol.positivity {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eigenvalue:e}"
            )));
        }
        Ok(Self { op, min_eigenvalue })
    }

    /// The pure state |index><index|.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        Self {
            op: Operator::ket_bra(dim, index, index),
            min_eigenvalue: 0.0,
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim).scale_real(1.0 / dim as f64),
            min_eigenvalue: 1.0 / dim as f64,
        }
    }

    /// Normalized probabilities on the diagonal, no coherences.
    pub fn from_populations(populations: &[f64]) -> Result<Self> {
        Self::new(Operator::from_real_diagonal(populations))
    }

    /// Thermal state `exp(-beta h) / Z` of a Hermitian operator.
    pub fn gibbs(beta: f64, h: &Operator) -> Result<Self> {
        let (values, _) = h.hermitian_eigen()?;
        let shift = values[0];
        let unnormalized = h.hermitian_map(|e| (-beta * (e - shift)).exp())?;
        let z = unnormalized.trace().re;
        Self::new(unnormalized.scale_real(1.0 / z).hermitian_part())
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn populations(&self) -> Vec<f64> {
        self.op.real_diagonal()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.op.get(row, col)
    }
}

/// Tensor product; the composite index is `i_a * dim(b) + i_b`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    Operator {
        mat: a.mat.kronecker(&b.mat),
    }
}

/// `I (x) ... (x) op (x) ... (x) I` with `op` acting on `site`.
pub fn embed_site(op: &Operator, site: usize, site_dims: &[usize]) -> Result<Operator> {
    if site >= site_dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "site {site} out of range for {} sites",
            site_dims.len()
        )));
    }
    if op.dim() != site_dims[site] {
        return Err(Error::DimensionMismatch(format!(
            "site {site}: operator dimension {} but site dimension {}",
            op.dim(),
            site_dims[site]
        )));
    }
    let left: usize = site_dims[..site].iter().product();
    let right: usize = site_dims[site + 1..].iter().product();
    let mut out = op.clone();
    if left > 1 {
        out = kron(&Operator::identity(left), &out);
    }
    if right > 1 {
        out = kron(&out, &Operator::identity(right));
    }
    Ok(out)
}

/// `tr(rho a)`.
pub fn expectation(rho: &DensityMatrix, a: &Operator) -> Result<Complex64> {
    trace_product(rho.operator(), a)
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &Operator, b: &Operator) -> Result<Complex64> {
    same_dim(a, b, "trace product")?;
    let n = a.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.mat[(i, j)] * b.mat[(j, i)];
        }
    }
    Ok(acc)
}

pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    same_dim(a, b, "commutator")?;
    Ok(&(a * b) - &(b * a))
}

pub fn anticommutator(a: &Operator, b: &Operator) -> Result<Operator> {
    same_dim(a, b, "anticommutator")?;
    Ok(&(a * b) + &(b * a))
}

/// `S = -tr(rho ln rho)` in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let (values, _) = rho
        .operator()
        .hermitian_eigen()
        .expect("density matrices are Hermitian by construction");
    values
        .into_iter()
        .map(|p| p.max(0.0))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Spectral logarithm with eigenvalues clamped below at `floor`.
pub fn matrix_log_pinv(op: &Operator, floor: f64) -> Result<Operator> {
    op.hermitian_map(|v| v.max(floor).ln())
}

/// Spectral exponential of a Hermitian operator.
pub fn matrix_exp_hermitian(op: &Operator) -> Result<Operator> {
    op.hermitian_map(f64::exp)
}
