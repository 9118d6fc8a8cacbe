//! Dense small-matrix kernels: matrix exponential, continuous Lyapunov
//! solve, observability Gramian, output-response bound and the minimal
//! scaling factor between two quadratic forms.
//!
//! Everything here targets desk-scale problems (state dimension up to a
//! handful), so the algorithms favour exactness and simplicity over
//! asymptotic cost.

use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Eigenvalues with real part above `-HURWITZ_MARGIN` disqualify a matrix.
pub const HURWITZ_MARGIN: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;
const GRAMIAN_CONDITION_FLOOR: f64 = 1e-12;
const RESPONSE_GRID_PANELS: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("matrix is not Hurwitz (spectral abscissa {0:e})")]
    NotHurwitz(f64),
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("linear system is singular")]
    Singular,
    #[error("observability Gramian is numerically singular (eigenvalue ratio {0:e})")]
    DegenerateGramian(f64),
    #[error("integration window must be positive and finite, got {0}")]
    InvalidWindow(f64),
}

/// A symmetric positive-definite matrix with cached spectral extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPositiveDefinite {
    matrix: Matrix,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
}

impl SymmetricPositiveDefinite {
    /// Validates symmetry (relative 1e-12) and positivity, then stores the
    /// exactly symmetrized matrix.
    pub fn new(matrix: Matrix) -> Result<Self, NumericsError> {
        ensure_square(&matrix)?;
        ensure_finite(&matrix)?;
        let scale = max_abs(&matrix);
        let asym = max_abs(&(&matrix - matrix.transpose()));
        if scale > 0.0 && asym > SYMMETRY_TOL * scale {
            return Err(NumericsError::NotSymmetric(asym / scale));
        }
        let matrix = symmetrize(&matrix);
        let (min_eigenvalue, max_eigenvalue) = symmetric_extremes(&matrix);
        if !(min_eigenvalue > 0.0) {
            return Err(NumericsError::NotPositiveDefinite(min_eigenvalue));
        }
        Ok(Self {
            matrix,
            min_eigenvalue,
            max_eigenvalue,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: Matrix::identity(dim, dim),
            min_eigenvalue: 1.0,
            max_eigenvalue: 1.0,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self, NumericsError> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_inner(self) -> Matrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.max_eigenvalue
    }

    /// `z^T P z`.
    pub fn quadratic_form(&self, z: &Vector) -> f64 {
        z.dot(&(&self.matrix * z))
    }

    /// Returns `s * P`; `s` must be positive.
    pub fn scaled(&self, s: f64) -> Result<Self, NumericsError> {
        Self::new(&self.matrix * s)
    }
}

fn ensure_square(m: &Matrix) -> Result<(), NumericsError> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn ensure_finite(m: &Matrix) -> Result<(), NumericsError> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite)
    }
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, x| f64::max(acc, libm::fabs(*x)))
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

fn symmetric_extremes(m: &Matrix) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_symmetric_eigenvalue(m: &Matrix) -> f64 {
    symmetric_extremes(&symmetrize(m)).1
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &Matrix) -> f64 {
    symmetric_extremes(&symmetrize(m)).0
}

/// Induced Euclidean norm (largest singular value).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &Matrix) -> f64 {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(a: &Matrix) -> bool {
    spectral_abscissa(a) < -HURWITZ_MARGIN
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn numerical_rank(m: &Matrix, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * smax).count()
}

// Padé coefficients and scaling thresholds from Higham (2005).
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| libm::fabs(*x)).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{A t}` by scaling and squaring with a diagonal Padé approximant.
pub fn matrix_exponential(a: &Matrix, t: f64) -> Result<Matrix, NumericsError> {
    ensure_square(a)?;
    ensure_finite(a)?;
    if !t.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let k = a.nrows();
    let at = a * t;
    let norm = one_norm(&at);
    if norm == 0.0 {
        return Ok(Matrix::identity(k, k));
    }
    for (degree, theta) in THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return pade_low(&at, coeffs);
        }
    }
    let squarings = libm::ceil(libm::log2(norm / THETA13)).max(0.0) as i32;
    let scaled = at * libm::pow(2.0, -(squarings as f64));
    let mut r = pade13(&scaled)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_solve(u: Matrix, v: Matrix) -> Result<Matrix, NumericsError> {
    let lhs = &v - &u;
    let rhs = &v + &u;
    lhs.lu().solve(&rhs).ok_or(NumericsError::Singular)
}

fn pade_low(a: &Matrix, b: &[f64]) -> Result<Matrix, NumericsError> {
    let k = a.nrows();
    let id = Matrix::identity(k, k);
    let a2 = a * a;
    // powers[i] = A^{2i}
    let mut even = id.clone();
    let mut u_acc = id.clone() * b[1];
    let mut v_acc = id * b[0];
    let mut j = 2;
    while j < b.len() {
        even = &even * &a2;
        v_acc += &even * b[j];
        if j + 1 < b.len() {
            u_acc += &even * b[j + 1];
        }
        j += 2;
    }
    let u = a * u_acc;
    pade_solve(u, v_acc)
}

fn pade13(a: &Matrix) -> Result<Matrix, NumericsError> {
    let b = &PADE13;
    let k = a.nrows();
    let id = Matrix::identity(k, k);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    pade_solve(u, v)
}

/// Solves `F^T P + P F = -Q` for symmetric `P` by a Kronecker-form linear
/// solve. `F` must be Hurwitz, which makes the solution unique and positive
/// definite.
pub fn solve_lyapunov(
    f: &Matrix,
    q: &SymmetricPositiveDefinite,
) -> Result<SymmetricPositiveDefinite, NumericsError> {
    ensure_square(f)?;
    ensure_finite(f)?;
    let k = f.nrows();
    if q.dim() != k {
        return Err(NumericsError::DimensionMismatch("Q must match F"));
    }
    let abscissa = spectral_abscissa(f);
    if !(abscissa < -HURWITZ_MARGIN) {
        return Err(NumericsError::NotHurwitz(abscissa));
    }
    // Column-major vec: P[i, j] lives at i + j k.
    let dim = k * k;
    let mut system = Matrix::zeros(dim, dim);
    for j in 0..k {
        for i in 0..k {
            let row = i + j * k;
            for l in 0..k {
                // (F^T P)[i, j] = sum_l F[l, i] P[l, j]
                system[(row, l + j * k)] += f[(l, i)];
                // (P F)[i, j] = sum_l P[i, l] F[l, j]
                system[(row, i + l * k)] += f[(l, j)];
            }
        }
    }
    let rhs = Vector::from_iterator(dim, q.matrix().iter().map(|x| -x));
    let sol = system.lu().solve(&rhs).ok_or(NumericsError::Singular)?;
    let p = Matrix::from_column_slice(k, k, sol.as_slice());
    SymmetricPositiveDefinite::new(symmetrize(&p))
}

/// `‖F^T P + P F + Q‖` in the induced 2-norm.
pub fn lyapunov_residual(f: &Matrix, p: &Matrix, q: &Matrix) -> f64 {
    spectral_norm(&(f.transpose() * p + p * f + q))
}

/// `W(τ) = ∫_0^τ e^{A^T t} C^T C e^{A t} dt` from one exponential of the
/// block matrix `[[-A^T, C^T C], [0, A]] τ`: its upper-right block equals
/// `e^{-A^T τ} W(τ)` and its lower-right block is `e^{A τ}`.
pub fn observability_gramian(
    a: &Matrix,
    c: &Matrix,
    tau: f64,
) -> Result<SymmetricPositiveDefinite, NumericsError> {
    ensure_square(a)?;
    let n = a.nrows();
    if c.ncols() != n {
        return Err(NumericsError::DimensionMismatch("C must have as many columns as A"));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(NumericsError::InvalidWindow(tau));
    }
    let mut block = Matrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-a.transpose()));
    block
        .view_mut((0, n), (n, n))
        .copy_from(&(c.transpose() * c));
    block.view_mut((n, n), (n, n)).copy_from(a);
    let e = matrix_exponential(&block, tau)?;
    let e12 = e.view((0, n), (n, n)).into_owned();
    let e22 = e.view((n, n), (n, n)).into_owned();
    let w = symmetrize(&(e22.transpose() * e12));
    let (lo, hi) = symmetric_extremes(&w);
    if !(hi > 0.0) || lo < GRAMIAN_CONDITION_FLOOR * hi {
        return Err(NumericsError::DegenerateGramian(if hi > 0.0 { lo / hi } else { 0.0 }));
    }
    SymmetricPositiveDefinite::new(w)
}

/// Guarded overestimate of `max_{0 ≤ t ≤ τ} ‖C e^{A t}‖`: the maximum over
/// a 1001-point uniform grid inflated by `1 + τ‖A‖/1000`.
pub fn output_response_bound(a: &Matrix, c: &Matrix, tau: f64) -> Result<f64, NumericsError> {
    ensure_square(a)?;
    if c.ncols() != a.nrows() {
        return Err(NumericsError::DimensionMismatch("C must have as many columns as A"));
    }
    let c_norm = spectral_norm(c);
    if !(tau > 0.0) || !tau.is_finite() {
        return Ok(c_norm);
    }
    let step = matrix_exponential(a, tau / RESPONSE_GRID_PANELS as f64)?;
    let mut propagator = Matrix::identity(a.nrows(), a.nrows());
    let mut best = c_norm;
    for _ in 0..RESPONSE_GRID_PANELS {
        propagator = &propagator * &step;
        best = best.max(spectral_norm(&(c * &propagator)));
    }
    let safety = 1.0 + tau * spectral_norm(a) / RESPONSE_GRID_PANELS as f64;
    Ok((best * safety).max(c_norm))
}

/// Smallest `c` with `z^T J^T P2 J z ≤ c z^T P1 z` for all `z`: the top
/// eigenvalue of the pencil `(J^T P2 J, P1)`, reduced to a symmetric
/// problem through the Cholesky factor of `P1`.
pub fn min_scaling_factor(
    p1: &SymmetricPositiveDefinite,
    p2: &SymmetricPositiveDefinite,
    j: &Matrix,
) -> Result<f64, NumericsError> {
    let k = p1.dim();
    if p2.dim() != k || j.nrows() != k || j.ncols() != k {
        return Err(NumericsError::DimensionMismatch("P1, P2 and J must share one dimension"));
    }
    let pulled = j.transpose() * p2.matrix() * j;
    let chol = p1
        .matrix()
        .clone()
        .cholesky()
        .ok_or(NumericsError::NotPositiveDefinite(p1.min_eigenvalue()))?;
    let g = chol.l();
    let left = g
        .solve_lower_triangular(&pulled)
        .ok_or(NumericsError::Singular)?;
    let congruent = g
        .solve_lower_triangular(&left.transpose())
        .ok_or(NumericsError::Singular)?;
    Ok(max_symmetric_eigenvalue(&congruent).max(0.0))
}
