//! Small dense linear-algebra helpers for Hermitian complex matrices.

use nalgebra::DVector;

use crate::{CMatrix, CVector, C64};

/// `(A + A†)/2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_error(a: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Re Tr(A B) without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)] * b[(k, i)];
            acc += x.re;
        }
    }
    acc
}

fn to_faer(a: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()))
}

/// Eigen-decomposition of the Hermitian part of `a`, eigenvalues ascending.
///
/// Uses faer: nalgebra's symmetric QR iteration returns NaN on some
/// rank-one inputs with many exact zeros (e.g. two-mode squeezed vacuum).
pub fn eigh(a: &CMatrix) -> (DVector<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (DVector::zeros(0), CMatrix::zeros(0, 0));
    }
    let eig = to_faer(a)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("self-adjoint eigensolver did not converge");
    let s = eig.S();
    let u = eig.U();
    let values = DVector::from_fn(n, |i, _| s[i].re);
    let vectors = CMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    (values, vectors)
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn eigvalsh(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    to_faer(a)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("self-adjoint eigensolver did not converge")
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

/// Spectral norm of a Hermitian matrix (largest absolute eigenvalue).
pub fn spectral_norm_hermitian(a: &CMatrix) -> f64 {
    eigvalsh(a).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(a: &CMatrix) -> f64 {
    eigvalsh(a).iter().map(|v| v.abs()).sum()
}

/// Rebuild `V diag(f(λ)) V†` from an eigen-decomposition.
pub fn eig_map(values: &DVector<f64>, vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let s = f(lambda);
        for x in scaled.column_mut(j).iter_mut() {
            *x *= s;
        }
    }
    &scaled * vectors.adjoint()
}

fn view(a: &CMatrix) -> faer::MatRef<'_, C64> {
    faer::MatRef::from_column_major_slice(a.as_slice(), a.nrows(), a.ncols())
}

fn gemm<L, R>(lhs: faer::MatRef<'_, L>, rhs: faer::MatRef<'_, R>) -> CMatrix
where
    L: faer::traits::Conjugate<Canonical = C64>,
    R: faer::traits::Conjugate<Canonical = C64>,
{
    let mut out = CMatrix::zeros(lhs.nrows(), rhs.ncols());
    let (r, c) = (out.nrows(), out.ncols());
    faer::linalg::matmul::matmul(
        faer::MatMut::from_column_major_slice_mut(out.as_mut_slice(), r, c),
        faer::Accum::Replace,
        lhs,
        rhs,
        C64::new(1.0, 0.0),
        faer::Par::Seq,
    );
    out
}

/// `A B` through faer's blocked kernels (nalgebra's complex product is a
/// plain triple loop).
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    gemm(view(a), view(b))
}

/// `A† B`
pub fn matmul_adj(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows(), "matmul_adj shape mismatch");
    gemm(view(a).adjoint(), view(b))
}

/// `A B†`
pub fn matmul_by_adj(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.ncols(), "matmul_by_adj shape mismatch");
    gemm(view(a), view(b).adjoint())
}

/// Principal square root of a PSD matrix (negative eigenvalues clipped).
pub fn psd_sqrt(a: &CMatrix) -> CMatrix {
    let (values, vectors) = eigh(a);
    eig_map(&values, &vectors, |l| l.max(0.0).sqrt())
}

/// Nearest PSD matrix in Frobenius norm.
pub fn project_psd(a: &CMatrix) -> CMatrix {
    let (values, vectors) = eigh(a);
    eig_map(&values, &vectors, |l| l.max(0.0))
}

/// Outer product `v v†`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Quadratic form `v† A v`.
pub fn quad_form(a: &CMatrix, v: &CVector) -> C64 {
    v.dotc(&(a * v))
}

/// Kronecker product of vectors, first factor slowest.
pub fn kron_vectors(parts: &[CVector]) -> CVector {
    let mut out = CVector::from_element(1, C64::new(1.0, 0.0));
    for p in parts {
        out = out.kronecker(p);
    }
    out
}

/// Number of real coordinates of a `dim × dim` Hermitian matrix.
pub fn hvec_len(dim: usize) -> usize {
    dim * dim
}

/// Real coordinates of a Hermitian matrix: the diagonal, then √2·Re and
/// √2·Im of each strictly-upper entry. The map is an isometry between the
/// trace inner product and the Euclidean one.
pub fn hvec(a: &CMatrix) -> DVector<f64> {
    let n = a.nrows();
    let mut out = DVector::zeros(n * n);
    let s = std::f64::consts::SQRT_2;
    for i in 0..n {
        out[i] = a[(i, i)].re;
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = a[(i, j)];
            out[k] = s * z.re;
            out[k + 1] = s * z.im;
            k += 2;
        }
    }
    out
}

/// Inverse of [`hvec`].
pub fn hmat(v: &DVector<f64>, n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        a[(i, i)] = C64::new(v[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = C64::new(s * v[k], s * v[k + 1]);
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
            k += 2;
        }
    }
    a
}
