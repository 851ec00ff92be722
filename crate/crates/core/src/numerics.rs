//! Dense complex linear algebra for small matrices (d ≤ 16).
//!
//! Everything here works on [`ComplexMatrix`], a row-major `Vec<Complex64>`.
//! The Hermitian eigensolver is a cyclic Jacobi iteration: each rotation
//! first removes the phase of the pivot element and then applies a real
//! Givens rotation, so eigenvectors stay exactly unitary up to rounding.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{CoherenceError, Result};

/// Tolerance for the Hermiticity precondition (relative Frobenius).
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `[-PSD_CLAMP, 0)` are clamped to zero by PSD operations.
pub const PSD_CLAMP: f64 = 1e-9;

const SQRT_RANK_CUTOFF: f64 = 1e-14;
const JACOBI_OFFDIAG_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CoherenceError::Format(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoherenceError::Format("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Outer product |a⟩⟨b|.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal().into_iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `self · rhs`, panicking on shape mismatch.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    /// `self · rho · self†`.
    pub fn conjugate(&self, rho: &Self) -> Self {
        self.matmul(rho).matmul(&self.adjoint())
    }

    /// ‖A − A†‖_F.
    pub fn hermiticity_defect(&self) -> f64 {
        (self - &self.adjoint()).frobenius_norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_defect() <= tol * self.frobenius_norm().max(1.0)
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(CoherenceError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Spectral decomposition `A = V Λ V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * f(self.eigenvalues[k]))
                .sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let n = a.require_square()?;
    let scale = a.frobenius_norm().max(1.0);
    let defect = a.hermiticity_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(CoherenceError::NonHermitian { deviation: defect });
    }

    // Work on the exactly-Hermitian part.
    let mut m = ComplexMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_OFFDIAG_TOL * scale;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)].norm())
            .fold(0.0, f64::max);
        if off < threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].re.total_cmp(&m[(y, y)].re));
    let eigenvalues = order.iter().map(|&k| m[(k, k)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Annihilates `m[(p, q)]` with `m ← J† m J`, `v ← v J`.
fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let n = m.rows();
    let phase = apq / g;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta.is_finite() {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    } else {
        0.0
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J restricted to (p, q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]].
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    for i in 0..n {
        let mip = m[(i, p)];
        let miq = m[(i, q)];
        m[(i, p)] = mip * jpp + miq * jqp;
        m[(i, q)] = mip * jpq + miq * jqq;
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * jpp + viq * jqp;
        v[(i, q)] = vip * jpq + viq * jqq;
    }
    for j in 0..n {
        let mpj = m[(p, j)];
        let mqj = m[(q, j)];
        m[(p, j)] = jpp.conj() * mpj + jqp.conj() * mqj;
        m[(q, j)] = jpq.conj() * mpj + jqq.conj() * mqj;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(app - t * g, 0.0);
    m[(q, q)] = Complex64::new(aqq + t * g, 0.0);
}

/// Eigenvalues of a PSD matrix with the small-negative window clamped to 0.
pub fn psd_eigen(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let mut eig = hermitian_eigen(a)?;
    for lambda in &mut eig.eigenvalues {
        if *lambda < -PSD_CLAMP {
            return Err(CoherenceError::NotPsd {
                eigenvalue: *lambda,
            });
        }
        if *lambda < 0.0 {
            *lambda = 0.0;
        }
    }
    Ok(eig)
}

/// Principal square root of a Hermitian PSD matrix.
///
/// Eigenvalues below `SQRT_RANK_CUTOFF · λ_max` are rounding noise of a
/// rank-deficient input and are treated as zero before taking the root.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = psd_eigen(a)?;
    let top = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let cutoff = SQRT_RANK_CUTOFF * top;
    Ok(eig.reconstruct_with(|x| if x <= cutoff { 0.0 } else { x.sqrt() }))
}

/// `‖u†u − I‖_F ≤ tol`.
pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> Result<bool> {
    let n = u.require_square()?;
    let defect = (&u.adjoint().matmul(u) - &ComplexMatrix::identity(n)).frobenius_norm();
    Ok(defect <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_input_is_already_diagonal() {
        let eig = hermitian_eigen(&ComplexMatrix::from_real_diag(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert_eq!(eig.eigenvectors, ComplexMatrix::identity(3));
    }

    #[test]
    fn pauli_x_spectrum() {
        let x =
            ComplexMatrix::from_row_major(2, 2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
                .unwrap();
        let eig = hermitian_eigen(&x).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-15);
        assert!((&eig.reconstruct() - &x).frobenius_norm() < 1e-14);
    }

    #[test]
    fn complex_off_diagonal_is_handled() {
        // Pauli-Y
        let y =
            ComplexMatrix::from_row_major(2, 2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
                .unwrap();
        let eig = hermitian_eigen(&y).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((&eig.reconstruct() - &y).frobenius_norm() < 1e-14);
        assert!(is_unitary(&eig.eigenvectors, 1e-14).unwrap());
    }

    #[test]
    fn rejects_non_hermitian_and_non_square() {
        let a =
            ComplexMatrix::from_row_major(2, 2, vec![c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)])
                .unwrap();
        assert!(matches!(
            hermitian_eigen(&a),
            Err(CoherenceError::NonHermitian { .. })
        ));
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            hermitian_eigen(&b),
            Err(CoherenceError::NonSquare { .. })
        ));
        assert!(matches!(
            is_unitary(&b, 1e-10),
            Err(CoherenceError::NonSquare { .. })
        ));
    }

    #[test]
    fn psd_sqrt_examples() {
        let id = ComplexMatrix::identity(3);
        assert!((&psd_sqrt(&id).unwrap() - &id).frobenius_norm() < 1e-14);

        let r = psd_sqrt(&ComplexMatrix::from_real_diag(&[4.0, 9.0])).unwrap();
        assert!((&r - &ComplexMatrix::from_real_diag(&[2.0, 3.0])).frobenius_norm() < 1e-14);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [c(s, 0.0), c(0.0, s)];
        let proj = ComplexMatrix::outer(&psi, &psi);
        assert!((&psd_sqrt(&proj).unwrap() - &proj).frobenius_norm() < 1e-8);
    }

    #[test]
    fn psd_sqrt_clamps_tiny_negatives_and_rejects_large_ones() {
        let tiny = ComplexMatrix::from_real_diag(&[1.0, -5e-10]);
        let r = psd_sqrt(&tiny).unwrap();
        assert_eq!(r[(1, 1)], c(0.0, 0.0));
        let bad = ComplexMatrix::from_real_diag(&[1.0, -1e-6]);
        assert!(matches!(psd_sqrt(&bad), Err(CoherenceError::NotPsd { .. })));
    }

    #[test]
    fn unitarity_examples() {
        assert!(is_unitary(&ComplexMatrix::identity(4), 1e-10).unwrap());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had =
            ComplexMatrix::from_row_major(2, 2, vec![c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)])
                .unwrap();
        assert!(is_unitary(&had, 1e-10).unwrap());
        assert!(!is_unitary(&ComplexMatrix::from_real_diag(&[1.0, 0.5]), 1e-10).unwrap());
    }

    #[test]
    fn from_row_major_validates_length() {
        assert!(ComplexMatrix::from_row_major(2, 2, vec![c(0., 0.); 3]).is_err());
        assert!(ComplexMatrix::from_row_major(1, 1, vec![c(f64::NAN, 0.)]).is_err());
    }
}
