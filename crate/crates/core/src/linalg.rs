//! Dense complex matrices for the small (at most 16-dimensional) operators
//! that appear in two-qubit steering problems.
//!
//! [`ComplexMatrix`] is a thin square-matrix wrapper around
//! `nalgebra::DMatrix<Complex64>`. Everything here is pure; values are never
//! mutated after construction.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used when a constructor requires its output to be Hermitian.
pub const HERMITIAN_BUILD_TOL: f64 = 1e-12;
/// Tolerance used when checking caller-supplied matrices for Hermiticity.
pub const HERMITIAN_CHECK_TOL: f64 = 1e-10;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Which factor of a bipartite space to keep in [`ComplexMatrix::partial_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Square dense complex matrix, row-major indexing.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    data: DMatrix<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim),
        }
    }

    /// Builds a matrix from `dim * dim` entries in row-major order.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim || dim == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} entries cannot form a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            data: DMatrix::from_row_slice(dim, dim, entries),
        })
    }

    /// Real row-major entries, convenient for literal matrices in tests.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_row_major(dim, &c)
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Self { data: m }
    }

    /// The projector `|v><v|` (not normalized).
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        Self { data: m }
    }

    /// Wraps a square nalgebra matrix.
    pub fn from_nalgebra(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { data })
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[(row, col)] = value;
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// Real part of the trace; the imaginary part vanishes for Hermitian input.
    pub fn trace_re(&self) -> f64 {
        self.trace().re
    }

    pub fn dagger(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            data: self.data.map(|z| z * s),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            data: self.data.map(|z| z * s),
        }
    }

    /// `Re tr(self * other)`, the real Hilbert-Schmidt pairing for Hermitian operands.
    pub fn trace_product(&self, other: &ComplexMatrix) -> f64 {
        let n = self.dim();
        let mut acc = C_ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[(i, k)] * other.data[(k, i)];
            }
        }
        acc.re
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from another matrix of the same size.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max_ij |M_ij - conj(M_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Replaces the matrix by `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            data: (&self.data + self.data.adjoint()).map(|z| z * 0.5),
        }
    }

    /// Tensor product with `self` as the left (major) factor.
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        Self {
            data: self.data.kronecker(&other.data),
        }
    }

    /// Reduced operator on the kept factor of a `dims.0 x dims.1` bipartite space.
    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<Self> {
        let (da, db) = dims;
        if da == 0 || db == 0 || da * db != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot split a {}-dimensional operator as {da}x{db}",
                self.dim()
            )));
        }
        let out = match keep {
            Subsystem::A => DMatrix::from_fn(da, da, |i, j| {
                (0..db).map(|k| self.data[(i * db + k, j * db + k)]).sum()
            }),
            Subsystem::B => DMatrix::from_fn(db, db, |i, j| {
                (0..da).map(|k| self.data[(k * db + i, k * db + j)]).sum()
            }),
        };
        Ok(Self { data: out })
    }

    /// Eigenvalues (ascending) and matching orthonormal eigenvectors as columns.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        self.require_hermitian()?;
        let eig = self.hermitian_part().data.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        Ok((values, Self { data: vectors }))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.hermitian_eigen()?.0)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }

    /// Square root of a PSD matrix. Eigenvalues within `clip_tol` of zero are
    /// treated as zero; anything more negative is rejected.
    pub fn sqrt_psd(&self, clip_tol: f64) -> Result<Self> {
        let (values, vectors) = self.hermitian_eigen()?;
        if values[0] < -clip_tol {
            return Err(Error::NotPsd {
                min_eigenvalue: values[0],
            });
        }
        let roots: Vec<f64> = values
            .iter()
            .map(|&v| if v <= clip_tol { 0.0 } else { v.sqrt() })
            .collect();
        let d = ComplexMatrix::diag(&roots);
        Ok(&(&vectors * &d) * &vectors.dagger())
    }

    fn require_hermitian(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_CHECK_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        writeln!(f, "ComplexMatrix({n}x{n}) [")?;
        for i in 0..n {
            write!(f, "  ")?;
            for j in 0..n {
                let z = self.data[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            data: &self.data * &rhs.data,
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { data: -&self.data }
    }
}

impl<'a> std::iter::Sum<&'a ComplexMatrix> for Option<ComplexMatrix> {
    fn sum<I: Iterator<Item = &'a ComplexMatrix>>(iter: I) -> Self {
        iter.fold(None, |acc, m| match acc {
            None => Some(m.clone()),
            Some(a) => Some(&a + m),
        })
    }
}

/// Pauli matrices and the single-qubit basis states used throughout.
pub mod pauli {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_major(
            2,
            &[
                C_ZERO,
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                C_ZERO,
            ],
        )
        .unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::diag(&[1.0, -1.0])
    }

    pub fn ket0() -> [Complex64; 2] {
        [C_ONE, C_ZERO]
    }

    pub fn ket1() -> [Complex64; 2] {
        [C_ZERO, C_ONE]
    }

    pub fn ket_plus() -> [Complex64; 2] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        [h, h]
    }

    pub fn ket_minus() -> [Complex64; 2] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        [h, -h]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_of_identities() {
        let i4 = ComplexMatrix::identity(2).kron(&ComplexMatrix::identity(2));
        assert!(i4.max_abs_diff(&ComplexMatrix::identity(4)) == 0.0);
    }

    #[test]
    fn kron_of_projectors() {
        let p = ComplexMatrix::diag(&[1.0, 0.0]);
        let k = p.kron(&p);
        assert_eq!(
            k.max_abs_diff(&ComplexMatrix::diag(&[1.0, 0.0, 0.0, 0.0])),
            0.0
        );
    }

    #[test]
    fn kron_x_z_layout() {
        let k = pauli::x().kron(&pauli::z());
        assert_eq!(k.get(0, 2), C_ONE);
        assert_eq!(k.get(1, 3), -C_ONE);
        assert_eq!(k.get(0, 0), C_ZERO);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = [c(h, 0.0), C_ZERO, C_ZERO, c(h, 0.0)];
        let rho = ComplexMatrix::outer(&phi);
        let ra = rho.partial_trace((2, 2), Subsystem::A).unwrap();
        assert!(ra.max_abs_diff(&ComplexMatrix::diag(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn partial_trace_of_partially_entangled_state() {
        let z = std::f64::consts::PI / 8.0;
        let psi = [c(z.cos(), 0.0), C_ZERO, C_ZERO, c(z.sin(), 0.0)];
        let ra = ComplexMatrix::outer(&psi)
            .partial_trace((2, 2), Subsystem::A)
            .unwrap();
        let expect = ComplexMatrix::diag(&[z.cos().powi(2), z.sin().powi(2)]);
        assert!(ra.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(
            m.partial_trace((3, 2), Subsystem::A),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert!((ComplexMatrix::identity(2).min_eigenvalue().unwrap() - 1.0).abs() < 1e-14);
        let d = ComplexMatrix::diag(&[1.0, -0.5]);
        assert!((d.min_eigenvalue().unwrap() + 0.5).abs() < 1e-14);
        // (1/2)|+><+| is a rank-one unnormalized projector.
        let p = ComplexMatrix::outer(&pauli::ket_plus()).scale(0.5);
        let ev = p.eigenvalues().unwrap();
        assert!(ev[0].abs() < 1e-12 && (ev[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn min_eigenvalue_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            m.min_eigenvalue(),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn sqrt_of_projector_is_itself() {
        let p = ComplexMatrix::outer(&pauli::ket_minus());
        let r = p.sqrt_psd(1e-10).unwrap();
        assert!(r.max_abs_diff(&p) < 1e-12);
        assert!(matches!(
            ComplexMatrix::diag(&[1.0, -0.1]).sqrt_psd(1e-10),
            Err(Error::NotPsd { .. })
        ));
    }

    fn hermitian(dim: usize, v: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim);
        let mut it = v.iter();
        for i in 0..dim {
            m.set(i, i, c(*it.next().unwrap(), 0.0));
            for j in i + 1..dim {
                let z = c(*it.next().unwrap(), *it.next().unwrap());
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        m
    }

    /// Unitary from the QR factorization of a matrix with the given entries.
    fn unitary(dim: usize, v: &[f64]) -> ComplexMatrix {
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            c(v[2 * (i * dim + j)], v[2 * (i * dim + j) + 1])
        });
        ComplexMatrix::from_nalgebra(m.qr().q()).unwrap()
    }

    proptest! {
        #[test]
        fn kron_trace_is_multiplicative(a in prop::collection::vec(-1.0..1.0f64, 4),
                                        b in prop::collection::vec(-1.0..1.0f64, 9)) {
            let ma = hermitian(2, &a);
            let mb = hermitian(3, &b);
            let lhs = ma.kron(&mb).trace();
            let rhs = ma.trace() * mb.trace();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn partial_trace_recovers_factors(a in prop::collection::vec(-1.0..1.0f64, 4),
                                          b in prop::collection::vec(-1.0..1.0f64, 4)) {
            let ma = hermitian(2, &a);
            let mb = hermitian(2, &b);
            let k = ma.kron(&mb);
            let ra = k.partial_trace((2, 2), Subsystem::A).unwrap();
            let rb = k.partial_trace((2, 2), Subsystem::B).unwrap();
            prop_assert!(ra.max_abs_diff(&ma.scale_complex(mb.trace())) < 1e-12);
            prop_assert!(rb.max_abs_diff(&mb.scale_complex(ma.trace())) < 1e-12);
            prop_assert!((ra.trace() - k.trace()).norm() < 1e-12);
        }

        #[test]
        fn min_eigenvalue_is_unitarily_invariant(d in prop::collection::vec(-2.0..2.0f64, 4),
                                                 u in prop::collection::vec(-1.0..1.0f64, 32)) {
            let uu = unitary(4, &u);
            let m = &(&uu * &ComplexMatrix::diag(&d)) * &uu.dagger();
            let expect = d.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!((m.hermitian_part().min_eigenvalue().unwrap() - expect).abs() < 1e-10);
        }
    }
}
