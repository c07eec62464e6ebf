use num_complex::Complex64;
use proptest::prelude::*;
use stbc_lab::numerics::*;

fn complex_vec(max: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| Complex64::new(a, b)), 1..=max)
}

fn scale(v: &ComplexMatrix) -> f64 {
    v.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

proptest! {
    #[test]
    fn dft_diagonalizes_circulants(x in complex_vec(9)) {
        let m = x.len();
        let f = dft_matrix(m);
        let d = &f * circulant(&x).unwrap() * f.adjoint();
        let lam = circulant_eigenvalues(&x).unwrap();
        prop_assert!(off_diagonal_max(&d) < 1e-12 * scale(&d) * m as f64);
        for k in 0..m {
            prop_assert!((d[(k, k)] - lam[k]).norm() < 1e-12 * scale(&d) * m as f64);
        }
    }

    #[test]
    fn pi_maps_left_to_right_circulant(x in complex_vec(9)) {
        let left = left_circulant(&x).unwrap();
        prop_assert_eq!(pi_permute(&left), circulant(&x).unwrap());
        let col: Vec<Complex64> = left.column(0).iter().copied().collect();
        let permuted = pi_permute_vec(&col);
        let right = circulant(&x).unwrap();
        for (r, v) in permuted.iter().enumerate() {
            prop_assert_eq!(*v, right[(r, 0)]);
        }
    }

    #[test]
    fn pi_is_an_involution(x in complex_vec(9)) {
        prop_assert_eq!(pi_permute_vec(&pi_permute_vec(&x)), x);
    }

    #[test]
    fn theta_diagonalizes_block_circulants(v in complex_vec(4).prop_filter("four", |v| v.len() == 4)) {
        let k = ComplexMatrix::from_fn(4, 4, |r, c| v[r ^ c]);
        let t = to_complex(&theta4());
        prop_assert!(off_diagonal_max(&(&t * &k * &t)) < 1e-12 * scale(&k));
    }

    #[test]
    fn hermitian_sqrt_squares_back(x in prop::collection::vec(-2.0f64..2.0, 18)) {
        let b = ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new(x[3 * i + j], x[9 + 3 * i + j]));
        let a = &b * b.adjoint() + ComplexMatrix::identity(3, 3) * Complex64::new(0.1, 0.0);
        let s = hermitian_sqrt(&a).unwrap();
        prop_assert!(hermitian_defect(&s) < 1e-10);
        prop_assert!((&s * &s - &a).norm() < 1e-9 * a.norm());
        let w = hermitian_inv_sqrt(&a).unwrap();
        prop_assert!((&w * &a * &w - ComplexMatrix::identity(3, 3)).norm() < 1e-8);
    }

    #[test]
    fn dft_is_unitary(m in 1usize..17) {
        prop_assert!(unitarity_defect(&dft_matrix(m)) < 1e-13);
    }
}

#[test]
fn theta_is_symmetric_orthogonal() {
    let t = theta4();
    assert!(orthogonality_defect(&t) < 1e-15);
    assert_eq!(t, t.transpose());
}

#[test]
fn sqrt_rejects_non_hermitian_and_indefinite() {
    let a = ComplexMatrix::from_row_slice(2, 2, &[ONE, J, ZERO, ONE]);
    assert!(hermitian_sqrt(&a).is_err());
    let b = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    assert!(hermitian_sqrt(&b).is_err());
    assert!(hermitian_inv_sqrt(&ComplexMatrix::zeros(2, 2)).is_err());
}
