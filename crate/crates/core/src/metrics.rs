//! State metrics: Uhlmann fidelity, trace distance, negativity and the
//! probe-entropy used to compare biased and entropy-regularized
//! reconstructions.

use crate::error::{Error, Result};
use crate::linalg;
use crate::povm::PovmElement;
use crate::state::DensityMatrix;
use crate::{CMatrix, C64};

/// Eigenvalues above `−PSD_TOL` count as non-negative.
pub const PSD_TOL: f64 = 1e-8;
const PURE_TOL: f64 = 1e-10;

/// Partial transpose on mode 1 of a two-mode operator with per-mode
/// dimension `d`: `⟨i₁ i₂|A^{T₁}|j₁ j₂⟩ = ⟨j₁ i₂|A|i₁ j₂⟩`.
pub fn partial_transpose_first(a: &CMatrix, d: usize) -> Result<CMatrix> {
    if a.nrows() != d * d || a.ncols() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            got: a.nrows(),
        });
    }
    let mut out = CMatrix::zeros(d * d, d * d);
    for i1 in 0..d {
        for i2 in 0..d {
            for j1 in 0..d {
                for j2 in 0..d {
                    out[(i1 * d + i2, j1 * d + j2)] = a[(j1 * d + i2, i1 * d + j2)];
                }
            }
        }
    }
    Ok(out)
}

/// `(‖ρ^{T₁}‖₁ − 1)/2` for a two-mode state.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    if rho.trunc.modes != 2 {
        return Err(Error::Unsupported(format!(
            "negativity needs a bipartition; got {} modes",
            rho.trunc.modes
        )));
    }
    let pt = partial_transpose_first(&rho.entries, rho.trunc.dim())?;
    let norm = linalg::trace_norm_hermitian(&pt);
    Ok(((norm - rho.trace()) / 2.0).max(0.0))
}

/// Top eigenvector when `rho` is numerically pure.
fn pure_vector(rho: &DensityMatrix) -> Option<crate::CVector> {
    if (rho.purity() - 1.0).abs() > PURE_TOL {
        return None;
    }
    let (values, vectors) = linalg::eigh(&rho.entries);
    let top = values.len() - 1;
    Some(vectors.column(top).into_owned())
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, evaluated as `⟨ψ|ρ|ψ⟩` when either
/// argument is pure.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    for m in [rho, sigma] {
        let min = m.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::Domain(format!(
                "fidelity needs PSD inputs (min eigenvalue {min:.3e})"
            )));
        }
    }
    if let Some(psi) = pure_vector(sigma) {
        return Ok(linalg::quad_form(&rho.entries, &psi).re.max(0.0));
    }
    if let Some(psi) = pure_vector(rho) {
        return Ok(linalg::quad_form(&sigma.entries, &psi).re.max(0.0));
    }
    let root = linalg::psd_sqrt(&rho.entries);
    let inner = &root * &sigma.entries * &root;
    let s: f64 = linalg::eigvalsh(&inner).iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok(s * s)
}

/// `½ ‖ρ − σ‖₁`
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    Ok(0.5 * linalg::trace_norm_hermitian(&(&rho.entries - &sigma.entries)))
}

/// Shannon entropy (base 10) of the normalized probe expectations
/// `p_i = Tr(ρE_i)/Σ_j Tr(ρE_j)`.
pub fn shannon_entropy_probe(rho: &DensityMatrix, probes: &[PovmElement]) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::Degenerate("no probe elements".into()));
    }
    let mut values = Vec::with_capacity(probes.len());
    for e in probes {
        if e.dim() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                got: e.dim(),
            });
        }
        values.push(e.expectation_raw(&rho.entries).max(0.0));
    }
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate(
            "all probe expectations vanish; entropy undefined".into(),
        ));
    }
    Ok(values
        .iter()
        .map(|v| v / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log10())
        .sum())
}

/// Applies `U₁ ⊗ U₂` to a two-mode state.
pub fn apply_local_unitaries(rho: &DensityMatrix, u1: &CMatrix, u2: &CMatrix) -> Result<DensityMatrix> {
    let u = crate::fock::tensor_lift(&[u1.clone(), u2.clone()])?;
    rho.conjugate_by(&u)
}

#[doc(hidden)]
pub fn haar_unitary(d: usize, rng: &mut impl rand::Rng) -> CMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let g = CMatrix::from_fn(d, d, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = q;
    for j in 0..d {
        let phase = r[(j, j)] / r[(j, j)].norm();
        for i in 0..d {
            out[(i, j)] *= phase;
        }
    }
    out
}
