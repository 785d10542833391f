//! Dense complex linear algebra helpers shared by the quantum primitives.
//!
//! Everything operates on `DMatrix<Complex64>`. Hermitian eigenproblems and
//! singular value decompositions are delegated to nalgebra; the routines here
//! add the PSD bookkeeping (eigenvalue clamping, pseudo-inverses on the
//! support) that density-matrix work needs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Construction-time tolerance (norms, Hermiticity, traces).
pub const TOL_CONSTRUCT: f64 = 1e-10;
/// Tolerance for equalities that compare the results of different operations.
pub const TOL_CROSS: f64 = 1e-8;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Kronecker product with the left factor as the most significant index.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// Largest entrywise absolute value.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise absolute difference between two matrices.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Distance from Hermiticity, max |M - M†|.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// (M + M†)/2, the Hermitian part. Used to scrub round-off from quantities
/// that are Hermitian by construction.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Unitary whose columns are the eigenvectors, ordered like `values`.
    pub vectors: CMatrix,
}

pub fn eigh(m: &CMatrix) -> HermitianEigen {
    let dim = m.nrows();
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    HermitianEigen { values, vectors }
}

/// Apply `f` to the eigenvalues of a Hermitian matrix: V f(Λ) V†.
fn eig_map(eig: &HermitianEigen, f: impl Fn(f64) -> f64) -> CMatrix {
    let dim = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for (col, &v) in eig.values.iter().enumerate() {
        let fv = Complex64::new(f(v), 0.0);
        for row in 0..dim {
            scaled[(row, col)] *= fv;
        }
    }
    hermitize(&(&scaled * eig.vectors.adjoint()))
}

/// Hermitian PSD square root. Eigenvalues in [-1e-10, 0) are clamped to zero;
/// anything lower is rejected.
pub fn matrix_sqrt(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix_sqrt expects a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let eig = eigh(m);
    if let Some(&min) = eig.values.first() {
        if min < -TOL_CONSTRUCT {
            return Err(Error::NotPositiveSemidefinite(format!(
                "eigenvalue {min:.3e} below -1e-10"
            )));
        }
    }
    Ok(eig_map(&eig, |v| v.max(0.0).sqrt()))
}

/// Hermitian PSD square root together with the pseudo-inverse of the root,
/// both restricted to the support (eigenvalues above `cutoff`).
pub fn sqrt_with_pinv(m: &CMatrix, cutoff: f64) -> Result<(CMatrix, CMatrix)> {
    let eig = eigh(m);
    if let Some(&min) = eig.values.first() {
        if min < -TOL_CONSTRUCT {
            return Err(Error::NotPositiveSemidefinite(format!(
                "eigenvalue {min:.3e} below -1e-10"
            )));
        }
    }
    let sqrt = eig_map(&eig, |v| v.max(0.0).sqrt());
    let pinv = eig_map(&eig, |v| if v > cutoff { 1.0 / v.sqrt() } else { 0.0 });
    Ok((sqrt, pinv))
}

/// Moore-Penrose pseudo-inverse via SVD, singular values below `cutoff`
/// treated as zero.
pub fn pseudo_inverse(m: &CMatrix, cutoff: f64) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let k = svd.singular_values.len();
    let mut sigma_pinv = CMatrix::zeros(k, k);
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > cutoff {
            sigma_pinv[(i, i)] = Complex64::new(1.0 / s, 0.0);
        }
    }
    v_t.adjoint() * sigma_pinv * u.adjoint()
}

/// Sum of singular values. For Hermitian input this is the sum of the
/// absolute eigenvalues, i.e. the trace norm.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Outer product |a⟩⟨b|.
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tensor_product_identity() {
        let i2 = identity(2);
        let i4 = tensor_product(&i2, &i2);
        assert_eq!(i4, identity(4));
    }

    #[test]
    fn tensor_product_left_factor_most_significant() {
        // |0> kron |1> must be e_1 of dimension 4.
        let e0 = CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let e1 = CMatrix::from_column_slice(2, 1, &[c(0.0, 0.0), c(1.0, 0.0)]);
        let k = tensor_product(&e0, &e1);
        assert_eq!(k.nrows(), 4);
        assert_abs_diff_eq!(k[(1, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.iter().map(|z| z.norm_sqr()).sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn matrix_sqrt_identity_and_diagonal() {
        let s = matrix_sqrt(&identity(3)).unwrap();
        assert!(max_abs_diff(&s, &identity(3)) < 1e-12);

        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(4.0, 0.0), c(9.0, 0.0)]));
        let s = matrix_sqrt(&d).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0, 0.0), c(3.0, 0.0)]));
        assert!(max_abs_diff(&s, &expected) < 1e-12);
    }

    #[test]
    fn matrix_sqrt_rejects_negative_eigenvalue() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(-0.5, 0.0)]));
        assert!(matches!(
            matrix_sqrt(&d),
            Err(Error::NotPositiveSemidefinite(_))
        ));
    }

    #[test]
    fn eigh_reconstructs_hermitian() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(3.0, 0.0)],
        );
        let eig = eigh(&m);
        let mut rec = CMatrix::zeros(2, 2);
        for i in 0..2 {
            let v = eig.vectors.column(i).into_owned();
            rec += outer(&v, &v).scale(1.0) * c(eig.values[i], 0.0);
        }
        assert!(max_abs_diff(&rec, &m) < 1e-12);
        assert!(eig.values[0] <= eig.values[1]);
    }

    #[test]
    fn pseudo_inverse_of_projector_is_projector() {
        let mut p = CMatrix::zeros(2, 2);
        p[(0, 0)] = c(1.0, 0.0);
        let pinv = pseudo_inverse(&p, 1e-10);
        assert!(max_abs_diff(&pinv, &p) < 1e-12);
    }
}
