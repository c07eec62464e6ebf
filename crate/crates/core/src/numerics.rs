//! Dense complex/real matrix primitives used by the code constructions and the
//! decoders: circulant forms, the DFT and Hadamard-type diagonalizers, and
//! Hermitian matrix square roots.
//!
//! DFT convention: `dft_matrix(m)` is the unitary forward transform
//! `F[j][k] = exp(-2πi·jk/m)/√m`. With this `F`, every circulant `C` built by
//! [`circulant`] satisfies `F·C·F† = diag(λ)` where `λ` is returned by
//! [`circulant_eigenvalues`] (an unnormalized transform of the first row, so
//! the all-ones row maps to `(m, 0, …, 0)`).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type RealMatrix = DMatrix<f64>;
pub type ComplexVector = DVector<Complex64>;
pub type RealVector = DVector<f64>;

/// Maximum |A - A†| entry accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues down to `-PSD_TOL` are clamped to zero.
pub const PSD_TOL: f64 = 1e-10;
/// Smallest eigenvalue allowed before an inverse square root is refused.
pub const SINGULAR_TOL: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const J: Complex64 = Complex64::new(0.0, 1.0);

/// Circulant matrix whose row `i` is `x` cyclically shifted right `i` times.
pub fn circulant(x: &[Complex64]) -> Result<ComplexMatrix> {
    let m = x.len();
    if m == 0 {
        return Err(Error::EmptyInput("circulant"));
    }
    Ok(ComplexMatrix::from_fn(m, m, |i, j| x[(j + m - i) % m]))
}

/// Left circulant: row `i` is `x` cyclically shifted left `i` times.
pub fn left_circulant(x: &[Complex64]) -> Result<ComplexMatrix> {
    let m = x.len();
    if m == 0 {
        return Err(Error::EmptyInput("left_circulant"));
    }
    Ok(ComplexMatrix::from_fn(m, m, |i, j| x[(i + j) % m]))
}

/// Row permutation that swaps rows `i` and `M-i+2` (1-based) for
/// `i = 2..⌈M/2⌉`. Equivalently, output row `r` is input row `(M-r) mod M`.
/// Maps a left circulant onto the right circulant with the same first row.
pub fn pi_permute<T: nalgebra::Scalar>(x: &DMatrix<T>) -> DMatrix<T> {
    let m = x.nrows();
    DMatrix::from_fn(m, x.ncols(), |r, c| x[((m - r) % m, c)].clone())
}

/// [`pi_permute`] applied to a column vector.
pub fn pi_permute_vec<T: Clone>(x: &[T]) -> Vec<T> {
    let m = x.len();
    (0..m).map(|r| x[(m - r) % m].clone()).collect()
}

/// Unitary DFT matrix `F[j][k] = exp(-2πi·jk/m)/√m`.
pub fn dft_matrix(m: usize) -> ComplexMatrix {
    let norm = 1.0 / (m as f64).sqrt();
    ComplexMatrix::from_fn(m, m, |j, k| {
        let phase = -2.0 * PI * ((j * k) % m) as f64 / m as f64;
        Complex64::from_polar(norm, phase)
    })
}

/// `F₂ = [[1, 1], [1, -1]]`.
pub fn hadamard2() -> RealMatrix {
    RealMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0])
}

/// `Θ = ½·F₂⊗F₂`, the real symmetric orthogonal matrix that diagonalizes
/// every 4×4 block-circulant matrix with 2×2 circulant blocks.
pub fn theta4() -> RealMatrix {
    let f2 = hadamard2();
    f2.kronecker(&f2) * 0.5
}

/// Eigenvalues of `circulant(x)` ordered so that `diag(λ) = F·C·F†` for
/// `F = dft_matrix(m)`: `λ_k = Σ_n x_n·exp(+2πi·nk/m)`.
pub fn circulant_eigenvalues(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = x.len();
    if m == 0 {
        return Err(Error::EmptyInput("circulant_eigenvalues"));
    }
    Ok((0..m)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(n, &xn)| xn * Complex64::from_polar(1.0, 2.0 * PI * ((n * k) % m) as f64 / m as f64))
                .sum()
        })
        .collect())
}

/// Largest |A - A†| entry.
pub fn hermitian_defect(a: &ComplexMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

fn hermitian_eigen(a: &ComplexMatrix) -> Result<(RealVector, ComplexMatrix)> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    if a.nrows() == 0 {
        return Err(Error::EmptyInput("hermitian matrix"));
    }
    let defect = hermitian_defect(a);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let eig = a.clone().symmetric_eigen();
    Ok((eig.eigenvalues, eig.eigenvectors))
}

fn spectral_map(vectors: &ComplexMatrix, values: &[f64]) -> ComplexMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        for i in 0..n {
            scaled[(i, k)] *= v;
        }
    }
    let out = &scaled * vectors.adjoint();
    // re-symmetrize away rounding
    (&out + out.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Principal square root of a Hermitian positive semidefinite matrix, via
/// eigendecomposition. Eigenvalues in `[-PSD_TOL, 0)` are clamped to zero.
pub fn hermitian_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(a)?;
    let min = values.min();
    if min < -PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    Ok(spectral_map(&vectors, &roots))
}

/// Inverse principal square root `A^(-1/2)`; fails with [`Error::Singular`]
/// when the smallest eigenvalue is below [`SINGULAR_TOL`].
pub fn hermitian_inv_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(a)?;
    let min = values.min();
    if min < SINGULAR_TOL {
        return Err(Error::Singular(min));
    }
    let roots: Vec<f64> = values.iter().map(|&v| 1.0 / v.sqrt()).collect();
    Ok(spectral_map(&vectors, &roots))
}

/// Complex copy of a real matrix.
pub fn to_complex(a: &RealMatrix) -> ComplexMatrix {
    a.map(|v| Complex64::new(v, 0.0))
}

/// Largest |QᵀQ - I| entry.
pub fn orthogonality_defect(q: &RealMatrix) -> f64 {
    let g = q.transpose() * q;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Largest |U†U - I| entry.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Largest off-diagonal magnitude.
pub fn off_diagonal_max(a: &ComplexMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if i != j {
                worst = worst.max(a[(i, j)].norm());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn circulant_shifts_right() {
        let x = [c(1.0), c(2.0), c(3.0)];
        let m = circulant(&x).unwrap();
        let want = ComplexMatrix::from_row_slice(
            3,
            3,
            &[c(1.0), c(2.0), c(3.0), c(3.0), c(1.0), c(2.0), c(2.0), c(3.0), c(1.0)],
        );
        assert_eq!(m, want);
        assert_eq!(circulant(&[ONE, ZERO]).unwrap(), ComplexMatrix::identity(2, 2));
        let s = [Complex64::new(0.3, 1.0), Complex64::new(-2.0, 0.5)];
        let m2 = circulant(&s).unwrap();
        assert_eq!(m2[(1, 0)], s[1]);
        assert_eq!(m2[(1, 1)], s[0]);
        assert!(circulant(&[]).is_err());
    }

    #[test]
    fn left_circulant_shifts_left() {
        let x: Vec<_> = (1..=4).map(|v| c(v as f64)).collect();
        let m = left_circulant(&x).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[(i, j)], x[(i + j) % 4]);
            }
        }
        assert_eq!(m.row(1).iter().map(|z| z.re).collect::<Vec<_>>(), vec![2.0, 3.0, 4.0, 1.0]);
        assert_eq!(left_circulant(&[ONE, ZERO]).unwrap(), ComplexMatrix::identity(2, 2));
        assert!(left_circulant(&[]).is_err());
    }

    #[test]
    fn pi_row_orders() {
        let order = |m: usize| pi_permute_vec(&(1..=m).collect::<Vec<_>>());
        assert_eq!(order(3), vec![1, 3, 2]);
        assert_eq!(order(4), vec![1, 4, 3, 2]);
        assert_eq!(order(1), vec![1]);
        assert_eq!(order(5), vec![1, 5, 4, 3, 2]);
    }

    #[test]
    fn pi_maps_left_to_right_circulant_exhaustively() {
        for m in 1..=16 {
            let x: Vec<_> = (0..m).map(|k| Complex64::new(k as f64 + 1.0, -(k as f64) * 0.5)).collect();
            let lc = left_circulant(&x).unwrap();
            assert_eq!(pi_permute(&lc), circulant(&x).unwrap(), "m = {m}");
        }
    }

    #[test]
    fn dft_small_sizes() {
        assert_eq!(dft_matrix(1)[(0, 0)], ONE);
        let f2 = dft_matrix(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(f2[(0, 0)].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(f2[(1, 1)].re, -h, epsilon = 1e-15);
        assert_abs_diff_eq!(f2[(1, 1)].im, 0.0, epsilon = 1e-15);
        for m in 1..=9 {
            assert!(unitarity_defect(&dft_matrix(m)) < 1e-12);
        }
    }

    #[test]
    fn all_ones_circulant_diagonalizes_to_m_zero() {
        let ones = vec![ONE; 4];
        let f = dft_matrix(4);
        let d = &f * circulant(&ones).unwrap() * f.adjoint();
        assert!(off_diagonal_max(&d) < 1e-12);
        assert_abs_diff_eq!(d[(0, 0)].re, 4.0, epsilon = 1e-12);
        for k in 1..4 {
            assert!(d[(k, k)].norm() < 1e-12);
        }
        let lam = circulant_eigenvalues(&ones).unwrap();
        assert_abs_diff_eq!(lam[0].re, 4.0, epsilon = 1e-12);
        assert!(lam[1..].iter().all(|z| z.norm() < 1e-12));
        let delta = circulant_eigenvalues(&[ONE, ZERO, ZERO, ZERO]).unwrap();
        assert!(delta.iter().all(|z| (z - ONE).norm() < 1e-12));
        assert!(circulant_eigenvalues(&[]).is_err());
    }

    #[test]
    fn theta4_entries() {
        let t = theta4();
        let want = RealMatrix::from_row_slice(
            4,
            4,
            &[1., 1., 1., 1., 1., -1., 1., -1., 1., 1., -1., -1., 1., -1., -1., 1.],
        ) * 0.5;
        assert_eq!(t, want);
        assert_eq!(t.transpose(), t);
        let tt = &t * &t;
        assert!((tt - RealMatrix::identity(4, 4)).abs().max() < 1e-15);
        let e1 = RealVector::from_vec(vec![1., 0., 0., 0.]);
        assert_eq!(&t * e1, RealVector::from_element(4, 0.5));
    }

    #[test]
    fn sqrt_of_simple_matrices() {
        let i = ComplexMatrix::identity(3, 3);
        assert!(max_diff(&hermitian_sqrt(&i).unwrap(), &i) < 1e-14);
        let d = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(4.0), c(9.0)]));
        let r = hermitian_sqrt(&d).unwrap();
        assert!(max_diff(&r, &ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(2.0), c(3.0)]))) < 1e-14);
        let ri = hermitian_inv_sqrt(&d).unwrap();
        assert_abs_diff_eq!(ri[(0, 0)].re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn sqrt_errors() {
        let non_h = ComplexMatrix::from_row_slice(2, 2, &[ONE, c(2.0), ZERO, ONE]);
        assert!(matches!(hermitian_sqrt(&non_h), Err(Error::NotHermitian(_))));
        let neg = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(1.0), c(-1.0)]));
        assert!(matches!(hermitian_sqrt(&neg), Err(Error::NotPsd(_))));
        let sing = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(1.0), c(0.0)]));
        assert!(hermitian_sqrt(&sing).is_ok());
        assert!(matches!(hermitian_inv_sqrt(&sing), Err(Error::Singular(_))));
        // tiny negative eigenvalue is clamped
        let tiny = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(1.0), c(-1e-12)]));
        assert!(hermitian_sqrt(&tiny).unwrap()[(1, 1)].norm() < 1e-14);
    }
}
