//! Dense complex matrix kernel: Hilbert-Schmidt geometry, Hermitian
//! eigendecomposition and matrix exponentials of Hermitian operators.
//!
//! Everything here works on [`CMatrix`] values of modest dimension (the
//! intended range is `dim <= 64`); there is no sparse or accelerated path.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense square complex matrix, the working representation for operators,
/// propagators and Hamiltonians.
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance used to accept a matrix as Hermitian. Inputs typically
/// pass through unitary conjugations that accumulate O(dim * eps) error.
pub const HERMITICITY_RTOL: f64 = 1e-10;

/// `dim x dim` identity matrix.
pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Hilbert-Schmidt inner product `Tr(A^dag B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<Complex64> {
    check_same_dim(a, b)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Hilbert-Schmidt distance `||A - B||`.
pub fn hs_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    hs_norm(&(a - b))
}

/// `||U^dag U - 1||`, zero for exactly unitary `U`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let d = u.nrows();
    hs_distance(&(u.adjoint() * u), &identity(d))
}

/// `||[A, B]||`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    hs_norm(&(a * b - b * a))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Returns `(eigenvalues, eigenvectors)` with `H = V diag(w) V^dag` and `V`
/// unitary. Fails with [`Error::Hermiticity`] when `||H - H^dag||` exceeds
/// [`HERMITICITY_RTOL`] relative to `||H||`.
pub fn herm_eig(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_square(h)?;
    let norm = hs_norm(h);
    let skew = hs_distance(h, &h.adjoint());
    if !(skew <= HERMITICITY_RTOL * norm.max(1e-300)) {
        return Err(Error::Hermiticity {
            residual: skew / norm.max(1e-300),
        });
    }
    // Symmetrize so the decomposition sees an exactly Hermitian operator.
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let d = h.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// `exp(-i t H)` for Hermitian `H`, via eigendecomposition.
pub fn expm_i_herm(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let (values, vectors) = herm_eig(h)?;
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values
            .iter()
            .map(|&w| Complex64::from_polar(1.0, -t * w)),
    ));
    Ok(&vectors * phases * vectors.adjoint())
}

pub(crate) fn check_square(a: &CMatrix) -> Result<()> {
    if a.nrows() == 0 || a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "expected nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn check_same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    check_square(a)?;
    check_square(b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "dimension mismatch: {} vs {}",
            a.nrows(),
            b.nrows()
        )));
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::testmat::*;
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hs_inner_pauli_values() {
        let eye = identity(2);
        assert_relative_eq!(hs_inner(&eye, &eye).unwrap().re, 2.0, epsilon = 1e-14);
        let xy = hs_inner(&pauli_x(), &pauli_y()).unwrap();
        assert!(xy.norm() < 1e-14);
        assert_relative_eq!(
            hs_inner(&pauli_x(), &pauli_x()).unwrap().re,
            2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn hs_inner_conjugate_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_hermitian(3, &mut rng) * c(0.0, 1.0);
            let b = random_hermitian(3, &mut rng);
            let ab = hs_inner(&a, &b).unwrap();
            let ba = hs_inner(&b, &a).unwrap();
            assert!((ab - ba.conj()).norm() < 1e-12);
            let aa = hs_inner(&a, &a).unwrap();
            assert!(aa.im.abs() < 1e-12 && aa.re >= 0.0);
        }
    }

    #[test]
    fn hs_inner_dimension_mismatch() {
        let e = hs_inner(&identity(2), &identity(3));
        assert!(matches!(e, Err(Error::Dimension(_))));
    }

    #[test]
    fn herm_eig_pauli_z() {
        let (w, v) = herm_eig(&pauli_z()).unwrap();
        assert_relative_eq!(w[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(w[1], 1.0, epsilon = 1e-14);
        // Ascending order puts |1> (the -1 eigenvector) first.
        assert!(v[(1, 0)].norm() > 0.999 && v[(0, 1)].norm() > 0.999);
    }

    #[test]
    fn herm_eig_degenerate_identity() {
        let (w, v) = herm_eig(&identity(2)).unwrap();
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(w[1], 1.0, epsilon = 1e-14);
        assert!(unitarity_residual(&v) < 1e-12);
    }

    #[test]
    fn herm_eig_pauli_x_hadamard_columns() {
        let (w, v) = herm_eig(&pauli_x()).unwrap();
        assert_relative_eq!(w[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(w[1], 1.0, epsilon = 1e-14);
        // Columns match Hadamard columns up to phase.
        for k in 0..2 {
            assert_relative_eq!(v[(0, k)].norm(), 0.5f64.sqrt(), epsilon = 1e-12);
            assert_relative_eq!(v[(1, k)].norm(), 0.5f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(matches!(herm_eig(&m), Err(Error::Hermiticity { .. })));
    }

    #[test]
    fn herm_eig_reconstruction_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2usize, 3, 5, 8] {
            let h = random_hermitian(dim, &mut rng);
            let (w, v) = herm_eig(&h).unwrap();
            let recon = &v * real_diag(&w) * v.adjoint();
            assert!(hs_distance(&recon, &h) <= 1e-11 * hs_norm(&h));
            assert!(unitarity_residual(&v) < 1e-12);
        }
    }

    #[test]
    fn expm_examples() {
        let u = expm_i_herm(&pauli_z(), std::f64::consts::PI).unwrap();
        assert!(hs_distance(&u, &(identity(2) * c(-1., 0.))) < 1e-12);

        let h = real_diag(&[0.4, -1.3]);
        assert!(hs_distance(&expm_i_herm(&h, 0.0).unwrap(), &identity(2)) < 1e-14);

        let u = expm_i_herm(&real_diag(&[0.0, std::f64::consts::PI]), 1.0).unwrap();
        assert!(hs_distance(&u, &real_diag(&[1.0, -1.0])) < 1e-12);
    }

    #[test]
    fn expm_semigroup_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2usize, 4, 8] {
            let h = random_hermitian(dim, &mut rng);
            let (s, t) = (0.7, -1.9);
            let lhs = expm_i_herm(&h, s).unwrap() * expm_i_herm(&h, t).unwrap();
            let rhs = expm_i_herm(&h, s + t).unwrap();
            assert!(hs_distance(&lhs, &rhs) < 1e-10);
            assert!(unitarity_residual(&rhs) < 1e-12);
        }
    }
}
